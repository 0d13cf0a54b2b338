// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The docprobe Authors

#pragma once

// The correctness estimator and the generative model behind it.
//
// Each generated test passes with probability p1 when the comment is accurate
// and p2 < p1 otherwise. The posterior odds after n_pass passes and n_fail
// failures are
//
//   (p1/p2)^n_pass * ((1-p1)/(1-p2))^n_fail * prior_odds
//
// whose logarithm is log(p1/p2) * (n_pass - w* n_fail) + log(prior_odds) with
// w* = -log((1-p1)/(1-p2)) / log(p1/p2). Ranking comments by the score
// n_pass - w n_fail therefore only needs w, not p1 and p2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "docprobe/error.hpp"
#include "docprobe/evalstats.hpp"
#include "docprobe/tally.hpp"

namespace docprobe {

inline constexpr double kDefaultWeight = 100.0;

struct CorrectnessScore {
  std::string comment_id;
  std::size_t n_pass = 0;
  std::size_t n_fail = 0;
  double w = kDefaultWeight;
  double score = 0.0;
  std::optional<double> normalized;
  bool unverifiable = false;  // no passing or failing test to judge by
};

struct GenerativeModelParams {
  double p1 = 0.9;  // P(pass | accurate)
  double p2 = 0.3;  // P(pass | inaccurate)
  double prior_odds = 1.0;

  [[nodiscard]] bool valid() const {
    return p2 > 0.0 && p1 > p2 && p1 < 1.0 && prior_odds > 0.0;
  }
};

inline CorrectnessScore correctness_score(const TestTally& tally, double w) {
  if (!(w > 0.0)) throw Error(ErrorCode::NonPositiveWeight, std::to_string(w));
  CorrectnessScore s;
  s.comment_id = tally.comment_id;
  s.n_pass = tally.n_pass;
  s.n_fail = tally.n_fail;
  s.w = w;
  s.score = static_cast<double>(tally.n_pass) - w * static_cast<double>(tally.n_fail);
  s.unverifiable = !tally.scoreable();
  return s;
}

/// Log-spaced sweep from 0.01 (i = 0) through 1 (i = 100) to 100 (i = 200).
inline double w_schedule(int i) {
  if (i < 0 || i > 200) throw Error(ErrorCode::OutOfRange, "w_schedule index " + std::to_string(i));
  return std::pow(100.0, static_cast<double>(i) / 100.0 - 1.0);
}

/// The weight that makes n_pass - w n_fail a monotone transform of the
/// posterior odds under `params`.
inline double bayes_optimal_weight(const GenerativeModelParams& params) {
  if (!params.valid()) throw Error(ErrorCode::OutOfRange, "invalid generative model parameters");
  return -std::log((1.0 - params.p1) / (1.0 - params.p2)) / std::log(params.p1 / params.p2);
}

inline double log_posterior_odds(std::size_t n_pass, std::size_t n_fail,
                                 const GenerativeModelParams& params) {
  if (!params.valid()) throw Error(ErrorCode::OutOfRange, "invalid generative model parameters");
  return static_cast<double>(n_pass) * std::log(params.p1 / params.p2) +
         static_cast<double>(n_fail) * std::log((1.0 - params.p1) / (1.0 - params.p2)) +
         std::log(params.prior_odds);
}

inline double exact_posterior_odds(std::size_t n_pass, std::size_t n_fail,
                                   const GenerativeModelParams& params) {
  return std::exp(log_posterior_odds(n_pass, n_fail, params));
}

/// Min-max normalization to [0, 1]; all-equal inputs map to 0.5.
inline std::vector<CorrectnessScore> normalize_scores(std::vector<CorrectnessScore> scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyList, "normalize_scores");
  auto [lo_it, hi_it] = std::minmax_element(
      scores.begin(), scores.end(),
      [](const CorrectnessScore& a, const CorrectnessScore& b) { return a.score < b.score; });
  const double lo = lo_it->score;
  const double hi = hi_it->score;
  for (auto& s : scores) {
    s.normalized = hi == lo ? 0.5 : (s.score - lo) / (hi - lo);
  }
  return scores;
}

struct BinSummary {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n_total = 0;
  std::size_t n_accurate = 0;
  std::optional<double> accuracy;
  std::optional<stats::Interval> ci95;
};

struct NormalizedLabel {
  double normalized;
  bool accurate;
};

/// Accuracy per half-open bin [lo, hi); the last bin also includes 1.0.
inline std::vector<BinSummary> bin_accuracy(const std::vector<NormalizedLabel>& records,
                                            double bin_width = 0.2) {
  const double count_f = 1.0 / bin_width;
  const auto n_bins = static_cast<std::size_t>(std::llround(count_f));
  if (n_bins == 0 || std::fabs(count_f - static_cast<double>(n_bins)) > 1e-9) {
    throw Error(ErrorCode::OutOfRange, "bin_width must divide 1 evenly");
  }
  std::vector<BinSummary> bins(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    bins[i].lo = static_cast<double>(i) / static_cast<double>(n_bins);
    bins[i].hi = static_cast<double>(i + 1) / static_cast<double>(n_bins);
  }
  for (const auto& r : records) {
    if (r.normalized < 0.0 || r.normalized > 1.0) {
      throw Error(ErrorCode::OutOfRange, "normalized score outside [0, 1]");
    }
    // Multiplying by the bin count keeps grid points exact (0.6 * 5 == 3).
    auto idx = static_cast<std::size_t>(std::floor(r.normalized * static_cast<double>(n_bins) + 1e-9));
    idx = std::min(idx, n_bins - 1);
    ++bins[idx].n_total;
    if (r.accurate) ++bins[idx].n_accurate;
  }
  for (auto& b : bins) {
    if (b.n_total == 0) continue;
    b.accuracy = static_cast<double>(b.n_accurate) / static_cast<double>(b.n_total);
    b.ci95 = stats::wilson_interval(b.n_accurate, b.n_total, 0.95);
  }
  return bins;
}

struct SimulatedDocument {
  TestTally tally;
  bool accurate;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform double in [0, 1) from the top 53 bits; portable across standard
// libraries, unlike std::uniform_real_distribution.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Draws documents from the generative model. Document i uses its own
/// generator seeded from (seed, i), so the output does not depend on the
/// order documents are produced in.
inline std::vector<SimulatedDocument> simulate_documents(double p1, double p2, std::size_t n_docs,
                                                         std::size_t tests_per_doc,
                                                         double accurate_fraction,
                                                         std::uint64_t seed) {
  if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0 && accurate_fraction >= 0.0 &&
        accurate_fraction <= 1.0)) {
    throw Error(ErrorCode::OutOfRange, "probabilities must lie in [0, 1]");
  }
  std::vector<SimulatedDocument> docs;
  docs.reserve(n_docs);
  for (std::size_t i = 0; i < n_docs; ++i) {
    std::mt19937_64 rng(detail::splitmix64(seed ^ detail::splitmix64(i)));
    SimulatedDocument doc{};
    doc.tally.comment_id = "sim-" + std::to_string(i);
    doc.accurate = detail::unit_uniform(rng) < accurate_fraction;
    const double p_pass = doc.accurate ? p1 : p2;
    for (std::size_t t = 0; t < tests_per_doc; ++t) {
      if (detail::unit_uniform(rng) < p_pass) {
        ++doc.tally.n_pass;
      } else {
        ++doc.tally.n_fail;
      }
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

inline std::vector<SimulatedDocument> simulate_documents(const GenerativeModelParams& params,
                                                         std::size_t n_docs,
                                                         std::size_t tests_per_doc,
                                                         double accurate_fraction,
                                                         std::uint64_t seed) {
  return simulate_documents(params.p1, params.p2, n_docs, tests_per_doc, accurate_fraction, seed);
}

}  // namespace docprobe
