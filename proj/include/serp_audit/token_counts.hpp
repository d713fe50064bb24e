/*
 * Copyright 2026 The serp-audit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SERP_AUDIT_TOKEN_COUNTS_HPP_
#define SERP_AUDIT_TOKEN_COUNTS_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "serp_audit/errors.hpp"
#include "serp_audit/text.hpp"

namespace serp_audit {

// Entity -> occurrence count with a running total. Keys are normalized on
// insertion so the total always equals the sum of the counts.
class TokenCounts {
 public:
  using Map = std::map<std::string, std::uint64_t, std::less<>>;

  TokenCounts() = default;
  explicit TokenCounts(std::string source_tag)
      : source_tag_(std::move(source_tag)) {}

  void add(std::string_view entity, std::uint64_t n = 1) {
    if (n == 0) return;
    std::string key = text::normalize_key(entity);
    if (key.empty()) return;
    counts_[std::move(key)] += n;
    total_ += n;
  }

  std::uint64_t count(std::string_view entity) const {
    const auto it = counts_.find(text::normalize_key(entity));
    return it == counts_.end() ? 0 : it->second;
  }

  bool contains(std::string_view entity) const { return count(entity) > 0; }

  const Map& counts() const { return counts_; }
  std::uint64_t total() const { return total_; }
  std::size_t size() const { return counts_.size(); }
  bool empty() const { return counts_.empty(); }

  const std::string& source_tag() const { return source_tag_; }
  void set_source_tag(std::string tag) { source_tag_ = std::move(tag); }

  // Entries by count descending, then entity ascending.
  std::vector<std::pair<std::string, std::uint64_t>> sorted() const {
    std::vector<std::pair<std::string, std::uint64_t>> rows(counts_.begin(),
                                                            counts_.end());
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return a.second > b.second;
    });
    return rows;
  }

  friend bool operator==(const TokenCounts& a, const TokenCounts& b) {
    return a.total_ == b.total_ && a.counts_ == b.counts_;
  }

 private:
  Map counts_;
  std::uint64_t total_ = 0;
  std::string source_tag_;
};

// Pointwise sum. The source tag of `a` wins unless it is empty.
inline TokenCounts merge_counts(const TokenCounts& a, const TokenCounts& b) {
  TokenCounts out(a.source_tag().empty() ? b.source_tag() : a.source_tag());
  for (const auto& [k, v] : a.counts()) out.add(k, v);
  for (const auto& [k, v] : b.counts()) out.add(k, v);
  return out;
}

// Two-column `entity<TAB>count` lines in sorted() order.
inline std::string to_tsv(const TokenCounts& counts) {
  std::string out;
  for (const auto& [entity, n] : counts.sorted()) {
    out += entity;
    out += '\t';
    out += std::to_string(n);
    out += '\n';
  }
  return out;
}

inline TokenCounts parse_tsv(std::string_view data, std::string source_tag = {}) {
  TokenCounts counts(std::move(source_tag));
  std::size_t line_no = 0;
  for (std::string_view line : text::split(data, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::trim(line).empty()) continue;
    const auto tab = line.rfind('\t');
    std::uint64_t n = 0;
    if (tab == std::string_view::npos || !text::parse_u64(line.substr(tab + 1), n)) {
      throw DataError("count table line " + std::to_string(line_no) +
                      ": expected entity<TAB>count");
    }
    counts.add(line.substr(0, tab), n);
  }
  return counts;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("short write to " + path.string());
}

inline TokenCounts read_tsv(const std::filesystem::path& path) {
  return parse_tsv(read_file(path), path.stem().string());
}

inline void write_tsv(const std::filesystem::path& path, const TokenCounts& counts) {
  write_file(path, to_tsv(counts));
}

}  // namespace serp_audit

#endif  // SERP_AUDIT_TOKEN_COUNTS_HPP_
