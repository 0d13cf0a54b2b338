// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The docprobe Authors

#pragma once

#include <algorithm>
#include <filesystem>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace docprobe {

/// Translates a path glob to an ECMAScript regex. `**/` matches zero or more
/// directories, `*` and `?` never cross a '/'.
inline std::regex glob_to_regex(std::string_view glob) {
  std::string re;
  for (std::size_t i = 0; i < glob.size(); ++i) {
    char c = glob[i];
    if (c == '*' && i + 1 < glob.size() && glob[i + 1] == '*') {
      if (i + 2 < glob.size() && glob[i + 2] == '/') {
        re += "(?:.*/)?";
        i += 2;
      } else {
        re += ".*";
        i += 1;
      }
    } else if (c == '*') {
      re += "[^/]*";
    } else if (c == '?') {
      re += "[^/]";
    } else if (std::string_view("\\^$.|+()[]{}").find(c) != std::string_view::npos) {
      re += '\\';
      re += c;
    } else {
      re += c;
    }
  }
  return std::regex(re);
}

inline bool glob_match(std::string_view glob, std::string_view path) {
  return std::regex_match(std::string(path), glob_to_regex(glob));
}

/// Regular files under `root` whose root-relative generic path matches any of
/// `globs`. Returned relative to `root`, sorted.
inline std::vector<std::filesystem::path> glob_files(const std::filesystem::path& root,
                                                     const std::vector<std::string>& globs) {
  namespace fs = std::filesystem;
  std::vector<std::regex> patterns;
  patterns.reserve(globs.size());
  for (const auto& g : globs) patterns.push_back(glob_to_regex(g));
  std::vector<fs::path> out;
  if (!fs::is_directory(root)) return out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), root).generic_string();
    for (const auto& re : patterns) {
      if (std::regex_match(rel, re)) {
        out.emplace_back(rel);
        break;
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace docprobe
