// Copyright 2026 The ctiqa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <unistd.h>

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace testutil {

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ctiqa_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

/// Minimal XML well-formedness check: prolog/comments skipped, every open
/// tag matched by a close tag, attributes quoted. Enough to catch emitter
/// bugs without an XML library.
inline bool xml_well_formed(const std::string& text, std::string* error = nullptr) {
  auto fail = [&](const std::string& message) {
    if (error) *error = message;
    return false;
  };
  std::vector<std::string> stack;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (text[i] != '<') {
      if (text[i] == '>') return fail("stray '>'");
      ++i;
      continue;
    }
    if (text.compare(i, 4, "<!--") == 0) {
      std::size_t end = text.find("-->", i + 4);
      if (end == std::string::npos) return fail("unterminated comment");
      i = end + 3;
      continue;
    }
    if (text.compare(i, 2, "<?") == 0) {
      std::size_t end = text.find("?>", i + 2);
      if (end == std::string::npos) return fail("unterminated prolog");
      i = end + 2;
      continue;
    }
    bool closing = i + 1 < n && text[i + 1] == '/';
    std::size_t name_start = i + (closing ? 2 : 1);
    std::size_t j = name_start;
    while (j < n && (std::isalnum(static_cast<unsigned char>(text[j])) ||
                     text[j] == '-' || text[j] == '_' || text[j] == ':')) {
      ++j;
    }
    if (j == name_start) return fail("empty tag name");
    std::string name = text.substr(name_start, j - name_start);

    // Scan to the tag end, requiring quoted attribute values.
    bool self_closing = false;
    while (j < n && text[j] != '>') {
      if (text[j] == '"') {
        std::size_t close = text.find('"', j + 1);
        if (close == std::string::npos) return fail("unterminated attribute");
        j = close + 1;
        continue;
      }
      if (text[j] == '=') {
        std::size_t k = j + 1;
        while (k < n && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
        if (k >= n || text[k] != '"') return fail("unquoted attribute value");
        j = k;
        continue;
      }
      if (text[j] == '/') self_closing = true;
      ++j;
    }
    if (j >= n) return fail("unterminated tag");
    if (closing) {
      if (stack.empty() || stack.back() != name) {
        return fail("mismatched </" + name + ">");
      }
      stack.pop_back();
    } else if (!self_closing) {
      stack.push_back(name);
    }
    i = j + 1;
  }
  if (!stack.empty()) return fail("unclosed <" + stack.back() + ">");
  return true;
}

inline std::size_t count_occurrences(const std::string& haystack,
                                     const std::string& needle) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

}  // namespace testutil
