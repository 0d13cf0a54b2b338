// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The docprobe Authors

#pragma once

#include <cstddef>
#include <string>

namespace docprobe {

/// Per-comment outcome counts. Only n_pass and n_fail are evidence; tests
/// that did not compile, timed out or broke the harness are carried along
/// for reporting.
struct TestTally {
  std::string comment_id;
  std::size_t n_pass = 0;
  std::size_t n_fail = 0;
  std::size_t n_nocompile = 0;
  std::size_t n_excluded = 0;

  [[nodiscard]] std::size_t total() const { return n_pass + n_fail + n_nocompile + n_excluded; }
  [[nodiscard]] bool scoreable() const { return n_pass + n_fail > 0; }

  bool operator==(const TestTally&) const = default;
};

}  // namespace docprobe
