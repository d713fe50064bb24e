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

// Subreddit and hashtag extraction for both sides of the comparison: corpus
// records and SERP result items.

#ifndef SERP_AUDIT_ENTITY_EXTRACT_HPP_
#define SERP_AUDIT_ENTITY_EXTRACT_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "serp_audit/corpus_ingest.hpp"
#include "serp_audit/errors.hpp"
#include "serp_audit/serp_client.hpp"
#include "serp_audit/text.hpp"
#include "serp_audit/token_counts.hpp"

namespace serp_audit {

enum class EntityKind { kSubreddit, kHashtag };

inline EntityKind parse_entity_kind(std::string_view s) {
  if (s == "subreddit") return EntityKind::kSubreddit;
  if (s == "hashtag") return EntityKind::kHashtag;
  throw ConfigError("unknown entity kind '" + std::string(s) + "'");
}

inline std::string entity_kind_name(EntityKind k) {
  return k == EntityKind::kSubreddit ? "subreddit" : "hashtag";
}

inline bool is_subreddit_char(char c) { return text::is_ascii_alnum(c) || c == '_'; }

// Name after the first "/r/" path segment of a reddit.com URL (any
// subdomain), lowercased.
inline std::optional<std::string> subreddit_from_url(std::string_view url) {
  if (!host_matches_site(url_host(url), "reddit.com")) return std::nullopt;
  std::string_view rest = url;
  if (const auto scheme = rest.find("://"); scheme != std::string_view::npos) {
    rest.remove_prefix(scheme + 3);
  }
  const auto slash = rest.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  std::string_view path = rest.substr(slash);
  path = path.substr(0, path.find_first_of("?#"));
  const auto segs = text::split(path, '/');
  for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
    if (segs[i] != "r" && segs[i] != "R") continue;
    const std::string_view name = segs[i + 1];
    if (name.empty()) return std::nullopt;
    for (char c : name) {
      if (!is_subreddit_char(c)) return std::nullopt;
    }
    return text::to_lower(name);
  }
  return std::nullopt;
}

namespace detail {

// Non-ASCII code points that terminate a hashtag: punctuation, symbols,
// spacing, emoji. Everything else above U+007F is treated as a letter.
inline bool is_unicode_separator(char32_t cp) {
  if (cp >= 0x80 && cp <= 0xBF) return cp != 0xAA && cp != 0xB5 && cp != 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return true;
  if (cp >= 0x2000 && cp <= 0x2BFF) return true;  // punctuation .. symbols
  if (cp >= 0x3000 && cp <= 0x3003) return true;
  if (cp >= 0x3008 && cp <= 0x301F) return true;
  if (cp >= 0xFE00 && cp <= 0xFE0F) return true;  // variation selectors
  if (cp >= 0xFE30 && cp <= 0xFE4F) return true;
  if (cp >= 0xFF01 && cp <= 0xFF0F) return true;
  if (cp >= 0xFF1A && cp <= 0xFF20) return true;
  if (cp >= 0xFF3B && cp <= 0xFF40) return true;
  if (cp >= 0xFF5B && cp <= 0xFF65) return true;
  if (cp >= 0x1F000 && cp <= 0x1FAFF) return true;  // emoji
  return cp == 0xFFFD;
}

inline bool is_hashtag_char(char32_t cp) {
  if (cp < 0x80) {
    const char c = static_cast<char>(cp);
    return text::is_ascii_alnum(c) || c == '_';
  }
  return !is_unicode_separator(cp);
}

}  // namespace detail

// Every "#tag" whose '#' is not glued to a preceding word character or '&'
// (HTML entities such as "&#39;"). Tags are lowercased, '#' stripped, kept
// in order with duplicates.
inline std::vector<std::string> hashtags_from_text(std::string_view body) {
  std::vector<std::string> tags;
  std::size_t pos = 0;
  char32_t prev = U' ';
  while (pos < body.size()) {
    const char32_t cp = text::next_code_point(body, pos);
    if (cp == U'#' && !detail::is_hashtag_char(prev) && prev != U'&') {
      std::size_t end = pos;
      std::size_t probe = pos;
      while (probe < body.size()) {
        const std::size_t before = probe;
        if (!detail::is_hashtag_char(text::next_code_point(body, probe))) {
          probe = before;
          break;
        }
        end = probe;
      }
      if (end > pos) {
        tags.push_back(text::to_lower(body.substr(pos, end - pos)));
        pos = end;
        prev = U'a';
        continue;
      }
    }
    prev = cp;
  }
  return tags;
}

// ASCII letters, digits and underscore only.
inline bool is_english_like(std::string_view hashtag) {
  if (hashtag.empty()) return false;
  for (char c : hashtag) {
    if (!(text::is_ascii_alnum(c) || c == '_')) return false;
  }
  return true;
}

struct HashtagFilter {
  bool english_only = true;
  bool accepts(std::string_view tag) const { return !english_only || is_english_like(tag); }
};

// Corpus-side extractor: hashtags from each listed text field.
inline EntityExtractor hashtag_extractor(std::vector<std::string> text_fields,
                                         HashtagFilter filter = {}) {
  return [text_fields = std::move(text_fields), filter](const Json& rec,
                                                        std::vector<std::string>& out) {
    for (const auto& field : text_fields) {
      const auto body = extract_string(rec, field);
      if (!body) continue;
      for (auto& tag : hashtags_from_text(*body)) {
        if (filter.accepts(tag)) out.push_back(std::move(tag));
      }
    }
  };
}

// SERP-side counts over the unique URLs of one result set. Hashtags come from
// titles and snippets because result pages do not carry the full post text.
inline TokenCounts extract_from_serp(const SerpResultSet& results, EntityKind kind,
                                     HashtagFilter filter = {}) {
  TokenCounts counts("serp");
  for (const auto& item : results.unique_items()) {
    if (kind == EntityKind::kSubreddit) {
      if (auto name = subreddit_from_url(item.url)) counts.add(*name);
      continue;
    }
    for (const std::string* field : {&item.title, &item.snippet}) {
      for (const auto& tag : hashtags_from_text(*field)) {
        if (filter.accepts(tag)) counts.add(tag);
      }
    }
  }
  return counts;
}

// Sum over result sets (one per keyword).
inline TokenCounts extract_from_serp(const std::vector<SerpResultSet>& sets,
                                     EntityKind kind, HashtagFilter filter = {}) {
  TokenCounts total("serp");
  for (const auto& s : sets) total = merge_counts(total, extract_from_serp(s, kind, filter));
  return total;
}

}  // namespace serp_audit

#endif  // SERP_AUDIT_ENTITY_EXTRACT_HPP_
