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

// Vocabulary construction and frequency-stratified keyword sampling.

#ifndef SERP_AUDIT_LEXICON_HPP_
#define SERP_AUDIT_LEXICON_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "serp_audit/errors.hpp"
#include "serp_audit/hash.hpp"
#include "serp_audit/text.hpp"
#include "serp_audit/token_counts.hpp"

namespace serp_audit {

class StopwordList {
 public:
  StopwordList() = default;
  StopwordList(std::string id, std::set<std::string, std::less<>> words)
      : id_(std::move(id)), words_(std::move(words)) {}

  // Lucene's default English stop set.
  static StopwordList english() {
    return StopwordList(
        "lucene-english-33",
        {"a",     "an",   "and",   "are",  "as",    "at",   "be",
         "but",   "by",   "for",   "if",   "in",    "into", "is",
         "it",    "no",   "not",   "of",   "on",    "or",   "such",
         "that",  "the",  "their", "then", "there", "these", "they",
         "this",  "to",   "was",   "will", "with"});
  }

  static StopwordList none() { return StopwordList("none", {}); }

  // One word per line; '#' starts a comment line. The id embeds a content
  // hash so a vocabulary records exactly which list filtered it.
  static StopwordList from_file(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    std::set<std::string, std::less<>> words;
    for (std::string_view line : text::split(data, '\n')) {
      line = text::trim(line);
      if (line.empty() || line.front() == '#') continue;
      words.insert(text::to_lower(line));
    }
    return StopwordList("file:" + sha256_hex(data).substr(0, 16), std::move(words));
  }

  bool contains(std::string_view w) const { return words_.find(w) != words_.end(); }
  const std::string& id() const { return id_; }
  std::size_t size() const { return words_.size(); }

 private:
  std::string id_ = "none";
  std::set<std::string, std::less<>> words_;
};

// Splits on whitespace and ASCII punctuation, lowercases, drops stopwords.
// Non-ASCII bytes stay inside tokens; the alphabetic filter removes them later.
inline std::vector<std::string> tokenize(std::string_view input,
                                         const StopwordList& stopwords) {
  std::vector<std::string> tokens;
  std::string cur;
  const auto flush = [&] {
    if (!cur.empty() && !stopwords.contains(cur)) tokens.push_back(cur);
    cur.clear();
  };
  for (char c : input) {
    if (text::is_ascii_space(c) || text::is_ascii_punct(c)) {
      flush();
    } else {
      cur.push_back(text::to_lower(c));
    }
  }
  flush();
  return tokens;
}

// Occurrence and document-frequency counters filled side by side.
struct TermCounts {
  TokenCounts occurrence{"occurrence"};
  TokenCounts document{"document"};
  std::uint64_t documents = 0;

  void add_document(std::string_view body, const StopwordList& stopwords) {
    add_tokens(tokenize(body, stopwords));
  }

  void add_tokens(const std::vector<std::string>& tokens) {
    ++documents;
    std::unordered_set<std::string_view> seen;
    for (const auto& t : tokens) {
      occurrence.add(t);
      if (seen.insert(t).second) document.add(t);
    }
  }
};

struct VocabularyFilters {
  std::size_t min_len = 3;
  std::uint64_t min_freq = 100;
  bool alphabetic_only = true;
  std::string stopword_list_id = "none";
};

struct Vocabulary {
  TokenCounts::Map terms;
  VocabularyFilters filters;

  std::size_t size() const { return terms.size(); }
  bool empty() const { return terms.empty(); }
};

inline bool is_alphabetic(std::string_view term) {
  return !term.empty() && std::all_of(term.begin(), term.end(), [](char c) {
           return c >= 'a' && c <= 'z';
         });
}

inline std::size_t code_point_length(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < s.size(); ++n) text::next_code_point(s, pos);
  return n;
}

// Keeps exactly the terms passing every filter; frequencies are untouched.
inline Vocabulary build_vocabulary(const TokenCounts& counts,
                                   VocabularyFilters filters = {},
                                   const StopwordList& stopwords = StopwordList::none()) {
  if (filters.stopword_list_id == "none") filters.stopword_list_id = stopwords.id();
  Vocabulary vocab{{}, filters};
  for (const auto& [term, freq] : counts.counts()) {
    if (freq < filters.min_freq) continue;
    if (filters.alphabetic_only && !is_alphabetic(term)) continue;
    if (code_point_length(term) < filters.min_len) continue;
    if (stopwords.contains(term)) continue;
    vocab.terms.emplace(term, freq);
  }
  return vocab;
}

inline Vocabulary build_vocabulary(const Vocabulary& vocab,
                                   const StopwordList& stopwords = StopwordList::none()) {
  TokenCounts counts;
  for (const auto& [t, f] : vocab.terms) counts.add(t, f);
  return build_vocabulary(counts, vocab.filters, stopwords);
}

// Terms by frequency descending, ties lexicographic.
inline std::vector<std::pair<std::string, std::uint64_t>> frequency_sorted(
    const Vocabulary& vocab) {
  std::vector<std::pair<std::string, std::uint64_t>> rows(vocab.terms.begin(),
                                                          vocab.terms.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return rows;
}

inline std::string vocabulary_hash(const Vocabulary& vocab) {
  Sha256 h;
  for (const auto& [term, freq] : frequency_sorted(vocab)) {
    h.update(term).update("\t").update(std::to_string(freq)).update("\n");
  }
  return h.hex();
}

struct KeywordSample {
  std::vector<std::string> keywords;
  std::size_t sample_size = 0;  // requested k
  std::size_t stride = 1;
  std::size_t offset = 0;
  std::uint64_t seed = 0;
  std::size_t vocabulary_size = 0;
  std::string vocabulary_hash;
  // Positions of the keywords in the frequency-sorted vocabulary.
  std::vector<std::size_t> ranks;
};

// Every stride-th term of the frequency-sorted vocabulary, starting at
// seed mod stride, with stride = max(1, floor(|vocab| / k)).
inline KeywordSample stratified_sample(const Vocabulary& vocab, long long k,
                                       std::uint64_t seed) {
  if (k <= 0) throw ArgumentError("keyword sample size must be positive");
  if (vocab.empty()) throw ArgumentError("cannot sample from an empty vocabulary");
  const auto sorted = frequency_sorted(vocab);
  const std::size_t n = sorted.size();
  const auto want = static_cast<std::size_t>(k);

  KeywordSample sample;
  sample.sample_size = want;
  sample.seed = seed;
  sample.vocabulary_size = n;
  sample.vocabulary_hash = vocabulary_hash(vocab);
  sample.stride = std::max<std::size_t>(1, n / want);
  sample.offset = static_cast<std::size_t>(seed % sample.stride);
  const std::size_t take = std::min(want, n);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t idx = sample.offset + i * sample.stride;
    sample.ranks.push_back(idx);
    sample.keywords.push_back(sorted[idx].first);
  }
  return sample;
}

inline nlohmann::ordered_json sample_sidecar(const KeywordSample& s) {
  nlohmann::ordered_json j;
  j["k"] = s.sample_size;
  j["selected"] = s.keywords.size();
  j["stride"] = s.stride;
  j["offset"] = s.offset;
  j["seed"] = s.seed;
  j["vocabulary_size"] = s.vocabulary_size;
  j["vocabulary_hash"] = s.vocabulary_hash;
  return j;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& keywords_file) {
  auto p = keywords_file;
  p.replace_extension(".json");
  return p;
}

inline std::string keywords_text(const KeywordSample& s) {
  std::string out;
  for (const auto& k : s.keywords) out += k + "\n";
  return out;
}

// Writes `name.txt` (one keyword per line) and the `name.json` sidecar.
inline void write_keyword_sample(const std::filesystem::path& path,
                                 const KeywordSample& s) {
  write_file(path, keywords_text(s));
  write_file(sidecar_path(path), sample_sidecar(s).dump(2) + "\n");
}

inline KeywordSample read_keyword_sample(const std::filesystem::path& path) {
  KeywordSample s;
  const std::string data = read_file(path);
  for (std::string_view line : text::split(data, '\n')) {
    line = text::trim(line);
    if (!line.empty()) s.keywords.emplace_back(line);
  }
  s.sample_size = s.keywords.size();
  const auto side = sidecar_path(path);
  if (side != path && std::filesystem::exists(side)) {
    const auto j = nlohmann::json::parse(read_file(side), nullptr, false);
    if (j.is_object()) {
      s.sample_size = j.value("k", s.sample_size);
      s.stride = j.value("stride", std::size_t{1});
      s.offset = j.value("offset", std::size_t{0});
      s.seed = j.value("seed", std::uint64_t{0});
      s.vocabulary_size = j.value("vocabulary_size", std::size_t{0});
      s.vocabulary_hash = j.value("vocabulary_hash", std::string{});
    }
  }
  return s;
}

}  // namespace serp_audit

#endif  // SERP_AUDIT_LEXICON_HPP_
