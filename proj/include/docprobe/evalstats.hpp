// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The docprobe Authors

#pragma once

// Statistics used to judge a score against binary accuracy labels.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "docprobe/error.hpp"
#include "docprobe/special_functions.hpp"

namespace docprobe::stats {

/// Error taxonomy for inaccurate comments; Accurate marks the clean class.
enum class Category {
  Accurate,
  HallucinatingIntent,
  HallucinatingReference,
  LackingCodeContext,
  CodeMischaracterization,
};

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::Accurate: return "accurate";
    case Category::HallucinatingIntent: return "hallucinating_intent";
    case Category::HallucinatingReference: return "hallucinating_reference";
    case Category::LackingCodeContext: return "lacking_code_context";
    case Category::CodeMischaracterization: return "code_mischaracterization";
  }
  return "accurate";
}

inline std::optional<Category> category_from_string(std::string_view s) {
  for (auto c : {Category::Accurate, Category::HallucinatingIntent,
                 Category::HallucinatingReference, Category::LackingCodeContext,
                 Category::CodeMischaracterization}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

/// The last two categories describe observable behaviour and can be tested.
inline bool is_behavioral(Category c) {
  return c == Category::LackingCodeContext || c == Category::CodeMischaracterization;
}

struct LabeledScore {
  std::string comment_id;
  double score = 0.0;
  bool accurate = false;
  Category category = Category::Accurate;
  bool ambiguous = false;
};

struct StatResult {
  double statistic = 0.0;
  std::optional<double> df;
  double p_value = 1.0;
};

inline double mean(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double sample_variance(std::span<const double> xs) {
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

/// Welch's unequal-variance t-test, two-sided.
inline StatResult welch_t_test(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() < 2 || ys.size() < 2) {
    throw Error(ErrorCode::DegenerateSample, "each sample needs at least 2 values");
  }
  const double n1 = static_cast<double>(xs.size());
  const double n2 = static_cast<double>(ys.size());
  const double r1 = sample_variance(xs) / n1;
  const double r2 = sample_variance(ys) / n2;
  if (r1 + r2 == 0.0) throw Error(ErrorCode::DegenerateSample, "both samples are constant");
  const double t = (mean(xs) - mean(ys)) / std::sqrt(r1 + r2);
  // Welch-Satterthwaite
  const double df = (r1 + r2) * (r1 + r2) / (r1 * r1 / (n1 - 1.0) + r2 * r2 / (n2 - 1.0));
  return StatResult{t, df, special::student_t_two_sided_p(t, df)};
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

namespace detail {

inline void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorCode::InvalidCounts, "scores and labels differ in length");
}

inline std::pair<std::size_t, std::size_t> class_counts(const std::vector<bool>& labels) {
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  return {pos, labels.size() - pos};
}

}  // namespace detail

/// Point-biserial correlation: Pearson r of scores against 0/1 labels, with
/// the p-value of t = r sqrt((n-2)/(1-r^2)) on n-2 degrees of freedom.
inline StatResult point_biserial(std::span<const double> scores, const std::vector<bool>& labels) {
  detail::require_same_size(scores.size(), labels.size());
  auto [pos, neg] = detail::class_counts(labels);
  if (pos == 0 || neg == 0) throw Error(ErrorCode::SingleClass, "point_biserial");
  if (std::all_of(scores.begin(), scores.end(), [&](double s) { return s == scores[0]; })) {
    throw Error(ErrorCode::ConstantScores, "point_biserial");
  }
  // Closed form on class means; equals Pearson on the 0/1 encoding.
  const double n = static_cast<double>(scores.size());
  double sum1 = 0.0;
  double sum0 = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] ? sum1 : sum0) += scores[i];
  const double m1 = sum1 / static_cast<double>(pos);
  const double m0 = sum0 / static_cast<double>(neg);
  const double m = (sum1 + sum0) / n;
  double ss = 0.0;
  for (double s : scores) ss += (s - m) * (s - m);
  const double sn = std::sqrt(ss / n);
  const double q = static_cast<double>(pos) / n;
  double r = (m1 - m0) / sn * std::sqrt(q * (1.0 - q));
  r = std::clamp(r, -1.0, 1.0);
  const double df = n - 2.0;
  if (df <= 0.0) return StatResult{r, df, 1.0};
  const double denom = 1.0 - r * r;
  const double t = denom <= 0.0 ? std::copysign(INFINITY, r) : r * std::sqrt(df / denom);
  return StatResult{r, df, special::student_t_two_sided_p(t, df)};
}

/// 1-based average ranks (ties share the mean of their positions).
inline std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

/// Area under the ROC curve as the Mann-Whitney statistic (ties count 0.5).
inline double roc_auc(std::span<const double> scores, const std::vector<bool>& labels) {
  detail::require_same_size(scores.size(), labels.size());
  auto [pos, neg] = detail::class_counts(labels);
  if (pos == 0 || neg == 0) throw Error(ErrorCode::SingleClass, "roc_auc");
  const auto ranks = average_ranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (labels[i]) rank_sum += ranks[i];
  }
  const double np = static_cast<double>(pos);
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(neg));
}

/// Mean precision at the rank of each positive, ranking by descending score
/// with ties kept in input order.
inline double average_precision(std::span<const double> scores, const std::vector<bool>& labels) {
  detail::require_same_size(scores.size(), labels.size());
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t hits = 0;
  double total = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (!labels[order[rank]]) continue;
    ++hits;
    total += static_cast<double>(hits) / static_cast<double>(rank + 1);
  }
  if (hits == 0) throw Error(ErrorCode::NoPositives, "average_precision");
  return total / static_cast<double>(hits);
}

/// Sentence BLEU against a single reference, no smoothing: any zero n-gram
/// precision yields 0.
inline double bleu(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference, int max_n = 4) {
  if (candidate.empty() || reference.empty()) throw Error(ErrorCode::EmptyInput, "bleu");
  if (max_n < 1) throw Error(ErrorCode::OutOfRange, "bleu max_n");
  using Gram = std::vector<std::string>;
  auto count = [](const std::vector<std::string>& toks, std::size_t n) {
    std::map<Gram, std::size_t> counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
      ++counts[Gram(toks.begin() + static_cast<std::ptrdiff_t>(i),
                    toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
  };
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto un = static_cast<std::size_t>(n);
    if (candidate.size() < un) return 0.0;
    const auto cand = count(candidate, un);
    const auto ref = count(reference, un);
    std::size_t clipped = 0;
    for (const auto& [gram, c] : cand) {
      auto it = ref.find(gram);
      if (it != ref.end()) clipped += std::min(c, it->second);
    }
    if (clipped == 0) return 0.0;
    log_sum += std::log(static_cast<double>(clipped) /
                        static_cast<double>(candidate.size() - un + 1));
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / max_n);
}

/// Splits on whitespace; the tokenization used for BLEU over comments.
inline std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

struct Interval {
  double lo;
  double hi;
};

/// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::size_t successes, std::size_t n, double confidence = 0.95) {
  if (n == 0 || successes > n) throw Error(ErrorCode::InvalidCounts, "wilson_interval");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorCode::OutOfRange, "confidence must be in (0, 1)");
  }
  const double z = special::normal_quantile(0.5 + confidence / 2.0);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  Interval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (successes == 0) ci.lo = 0.0;
  if (successes == n) ci.hi = 1.0;
  return ci;
}

}  // namespace docprobe::stats
