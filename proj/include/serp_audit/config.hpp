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

// Run configuration. One TOML file fixes every scientific parameter of a
// run; relative paths resolve against the file's directory and only
// `engine.api_key` may reference the environment (`${VAR}`).

#ifndef SERP_AUDIT_CONFIG_HPP_
#define SERP_AUDIT_CONFIG_HPP_

#include <toml.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "serp_audit/corpus_ingest.hpp"
#include "serp_audit/entity_extract.hpp"
#include "serp_audit/errors.hpp"
#include "serp_audit/lexicon.hpp"
#include "serp_audit/rank_divergence.hpp"
#include "serp_audit/serp_client.hpp"

namespace serp_audit {

struct PlatformConfig {
  std::string name;
  std::string site;
  std::filesystem::path dump;
  DumpFormat format = DumpFormat::kNdjson;
  RecordSchema schema = RecordSchema::kGeneric;
  EntityKind entity = EntityKind::kSubreddit;
  std::string entity_field;
  std::vector<std::string> text_fields;
  Date date_from;
  Date date_to;
  bool english_only = true;
  // Comments feed the vocabulary but not activity unless asked.
  bool count_activity = true;
  std::optional<std::filesystem::path> labels;
  std::optional<std::filesystem::path> scores;
};

struct CrossvalConfig {
  int folds = 5;
  double fraction = 0.8;
};

struct PipelineConfig {
  std::filesystem::path source;
  std::string source_bytes;

  std::uint64_t seed = 0;
  double alpha = kDefaultAlpha;
  std::size_t top_k = 20;

  std::string vocabulary_source;
  VocabularyFilters filters;
  bool document_frequency = true;
  std::string stopwords = "english";  // "english", "none" or a file path

  long long k = 1000;

  Engine engine = Engine::kGoogle;
  std::string endpoint;
  std::string api_key;  // unresolved; may be ${VAR}
  std::optional<std::filesystem::path> fixture;
  std::filesystem::path cache_dir = "cache";
  unsigned workers = 1;
  int repetitions = 3;
  int pages = 1;
  std::vector<std::string> proxies;
  double rps = 1.0;
  RetryPolicy retry;

  double hexbin_width = 0.25;
  std::size_t permutations = 10000;
  double ci_level = 0.95;
  bool control = true;

  std::optional<CrossvalConfig> crossval;
  std::vector<PlatformConfig> platforms;
};

namespace detail {

class ConfigReader {
 public:
  ConfigReader(const toml::table& root, std::filesystem::path base)
      : root_(root), base_(std::move(base)) {}

  template <typename T>
  std::optional<T> get(const toml::node_view<const toml::node>& node, const std::string& key) const {
    if (!node) return std::nullopt;
    if constexpr (std::is_same_v<T, double>) {
      if (auto v = node.value<double>()) return *v;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (node.is_boolean()) return node.value<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (node.is_integer()) {
        const auto v = *node.value<std::int64_t>();
        if (v < 0 && std::is_unsigned_v<T>) throw ConfigError("'" + key + "' must be nonnegative");
        return static_cast<T>(v);
      }
    } else {
      if (node.is_string()) return *node.value<std::string>();
    }
    throw ConfigError("'" + key + "' has the wrong type");
  }

  template <typename T>
  T get_or(const toml::node_view<const toml::node>& node, const std::string& key, T fallback) const {
    return get<T>(node, key).value_or(fallback);
  }

  template <typename T>
  T require(const toml::node_view<const toml::node>& node, const std::string& key) const {
    auto v = get<T>(node, key);
    if (!v) throw ConfigError("missing required key '" + key + "'");
    return *v;
  }

  std::filesystem::path path(const std::string& p) const {
    std::filesystem::path out(p);
    return out.is_absolute() ? out : base_ / out;
  }

  std::vector<std::string> strings(const toml::node_view<const toml::node>& node,
                                   const std::string& key) const {
    std::vector<std::string> out;
    if (!node) return out;
    const auto* arr = node.as_array();
    if (arr == nullptr) throw ConfigError("'" + key + "' must be an array of strings");
    for (const auto& el : *arr) {
      const auto s = el.value<std::string>();
      if (!s) throw ConfigError("'" + key + "' must be an array of strings");
      out.push_back(*s);
    }
    return out;
  }

  const toml::table& root() const { return root_; }

 private:
  const toml::table& root_;
  std::filesystem::path base_;
};

}  // namespace detail

inline PipelineConfig parse_config(std::string_view bytes, const std::filesystem::path& source) {
  toml::table root;
  try {
    root = toml::parse(bytes, source.string());
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config " << source.string() << ": " << e.description() << " (line "
        << e.source().begin.line << ")";
    throw ConfigError(msg.str());
  }
  const detail::ConfigReader rd(root, source.has_parent_path() ? source.parent_path()
                                                               : std::filesystem::path("."));
  const toml::node_view<const toml::node> r(root);
  PipelineConfig cfg;
  cfg.source = source;
  cfg.source_bytes = std::string(bytes);

  cfg.seed = rd.get_or<std::uint64_t>(r["run"]["seed"], "run.seed", 0);
  cfg.alpha = rd.get_or<double>(r["run"]["alpha"], "run.alpha", kDefaultAlpha);
  if (!(cfg.alpha > 0)) throw ConfigError("'run.alpha' must be positive");
  cfg.top_k = rd.get_or<std::size_t>(r["run"]["top_k"], "run.top_k", 20);

  cfg.vocabulary_source = rd.get_or<std::string>(r["vocabulary"]["source"], "vocabulary.source", "");
  cfg.filters.min_len = rd.get_or<std::size_t>(r["vocabulary"]["min_len"], "vocabulary.min_len", 3);
  cfg.filters.min_freq = rd.get_or<std::uint64_t>(r["vocabulary"]["min_freq"], "vocabulary.min_freq", 100);
  cfg.filters.alphabetic_only =
      rd.get_or<bool>(r["vocabulary"]["alphabetic_only"], "vocabulary.alphabetic_only", true);
  const auto freq = rd.get_or<std::string>(r["vocabulary"]["frequency"], "vocabulary.frequency", "document");
  if (freq != "document" && freq != "occurrence") {
    throw ConfigError("'vocabulary.frequency' must be \"document\" or \"occurrence\"");
  }
  cfg.document_frequency = freq == "document";
  cfg.stopwords = rd.get_or<std::string>(r["vocabulary"]["stopwords"], "vocabulary.stopwords", "english");
  if (cfg.stopwords != "english" && cfg.stopwords != "none") {
    cfg.stopwords = rd.path(cfg.stopwords).string();
  }

  cfg.k = rd.get_or<long long>(r["sample"]["k"], "sample.k", 1000);
  if (cfg.k <= 0) throw ConfigError("'sample.k' must be positive");

  cfg.repetitions = rd.get_or<int>(r["repetitions"], "repetitions", 3);
  if (cfg.repetitions < 1) throw ConfigError("'repetitions' must be >= 1");
  cfg.pages = rd.get_or<int>(r["pages"], "pages", 1);
  if (cfg.pages < 1) throw ConfigError("'pages' must be >= 1");
  cfg.proxies = rd.strings(r["proxies"], "proxies");

  cfg.engine = parse_engine(rd.get_or<std::string>(r["engine"]["name"], "engine.name", "google"));
  cfg.endpoint = rd.get_or<std::string>(r["engine"]["endpoint"], "engine.endpoint", "");
  cfg.api_key = rd.get_or<std::string>(r["engine"]["api_key"], "engine.api_key", "");
  if (auto f = rd.get<std::string>(r["engine"]["fixture"], "engine.fixture")) cfg.fixture = rd.path(*f);
  cfg.cache_dir = rd.path(rd.get_or<std::string>(r["engine"]["cache_dir"], "engine.cache_dir", "cache"));
  cfg.workers = rd.get_or<unsigned>(r["engine"]["workers"], "engine.workers", 1);

  cfg.rps = rd.get_or<double>(r["rate_limit"]["rps"], "rate_limit.rps", 1.0);
  cfg.retry.max_retries = rd.get_or<int>(r["rate_limit"]["max_retries"], "rate_limit.max_retries", 4);
  cfg.retry.initial_backoff = std::chrono::milliseconds(
      rd.get_or<long long>(r["rate_limit"]["initial_backoff_ms"], "rate_limit.initial_backoff_ms", 500));
  cfg.retry.max_backoff = std::chrono::milliseconds(
      rd.get_or<long long>(r["rate_limit"]["max_backoff_ms"], "rate_limit.max_backoff_ms", 30000));

  cfg.hexbin_width = rd.get_or<double>(r["analytics"]["hexbin_width"], "analytics.hexbin_width", 0.25);
  if (!(cfg.hexbin_width > 0)) throw ConfigError("'analytics.hexbin_width' must be positive");
  cfg.permutations =
      rd.get_or<std::size_t>(r["analytics"]["permutations"], "analytics.permutations", 10000);
  if (cfg.permutations == 0) throw ConfigError("'analytics.permutations' must be >= 1");
  cfg.ci_level = rd.get_or<double>(r["analytics"]["ci_level"], "analytics.ci_level", 0.95);
  cfg.control = rd.get_or<bool>(r["analytics"]["control"], "analytics.control", true);

  if (r["crossval"]) {
    CrossvalConfig cv;
    cv.folds = rd.get_or<int>(r["crossval"]["folds"], "crossval.folds", 5);
    cv.fraction = rd.get_or<double>(r["crossval"]["fraction"], "crossval.fraction", 0.8);
    cfg.crossval = cv;
  }

  const auto* platforms = root["platform"].as_array();
  if (platforms == nullptr || platforms->empty()) {
    throw ConfigError("missing required key 'platform' (at least one [[platform]] table)");
  }
  for (std::size_t i = 0; i < platforms->size(); ++i) {
    const auto* tbl = (*platforms)[i].as_table();
    if (tbl == nullptr) throw ConfigError("'platform' must be an array of tables");
    const toml::node_view<const toml::node> p(*tbl);
    const std::string at = "platform[" + std::to_string(i) + "].";
    PlatformConfig pc;
    pc.name = rd.require<std::string>(p["name"], at + "name");
    pc.site = rd.require<std::string>(p["site"], at + "site");
    pc.dump = rd.path(rd.require<std::string>(p["dump"], at + "dump"));
    pc.format = parse_format(rd.get_or<std::string>(p["format"], at + "format", "auto"), pc.dump);
    pc.schema = parse_schema(rd.require<std::string>(p["schema"], at + "schema"));
    const SchemaFields defaults = default_fields(pc.schema);
    pc.entity = parse_entity_kind(rd.get_or<std::string>(
        p["entity"], at + "entity", pc.schema == RecordSchema::kTweet ? "hashtag" : "subreddit"));
    pc.entity_field = rd.get_or<std::string>(p["entity_field"], at + "entity_field", defaults.entity_field);
    pc.text_fields = rd.strings(p["text_fields"], at + "text_fields");
    if (pc.text_fields.empty()) pc.text_fields = defaults.text_fields;
    if (pc.entity == EntityKind::kSubreddit && pc.entity_field.empty()) {
      throw ConfigError("missing required key '" + at + "entity_field'");
    }
    try {
      pc.date_from = parse_date(rd.require<std::string>(p["date_from"], at + "date_from"));
      pc.date_to = parse_date(rd.require<std::string>(p["date_to"], at + "date_to"));
    } catch (const ArgumentError& e) {
      throw ConfigError(at + "date: " + e.what());
    }
    if (pc.date_from > pc.date_to) throw ConfigError("'" + at + "date_from' is after '" + at + "date_to'");
    pc.english_only = rd.get_or<bool>(p["english_only"], at + "english_only", true);
    pc.count_activity = rd.get_or<bool>(p["count_activity"], at + "count_activity",
                                        pc.schema != RecordSchema::kRedditComment);
    if (auto l = rd.get<std::string>(p["labels"], at + "labels")) pc.labels = rd.path(*l);
    if (auto s = rd.get<std::string>(p["scores"], at + "scores")) pc.scores = rd.path(*s);
    for (const auto& other : cfg.platforms) {
      if (other.name == pc.name) throw ConfigError("duplicate platform name '" + pc.name + "'");
    }
    cfg.platforms.push_back(std::move(pc));
  }
  if (cfg.vocabulary_source.empty()) cfg.vocabulary_source = cfg.platforms.front().name;
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  return parse_config(read_file(path), path);
}

// Checks that every referenced input exists; errors name the offending key.
inline void validate_inputs(const PipelineConfig& cfg) {
  bool source_found = false;
  for (std::size_t i = 0; i < cfg.platforms.size(); ++i) {
    const auto& p = cfg.platforms[i];
    const std::string at = "platform[" + std::to_string(i) + "].";
    if (!std::filesystem::exists(p.dump)) {
      throw ConfigError("'" + at + "dump' does not exist: " + p.dump.string());
    }
    if (p.labels && !std::filesystem::exists(*p.labels)) {
      throw ConfigError("'" + at + "labels' does not exist: " + p.labels->string());
    }
    if (p.scores && !std::filesystem::exists(*p.scores)) {
      throw ConfigError("'" + at + "scores' does not exist: " + p.scores->string());
    }
    source_found = source_found || p.name == cfg.vocabulary_source;
  }
  if (!source_found) {
    throw ConfigError("'vocabulary.source' names unknown platform '" + cfg.vocabulary_source + "'");
  }
  if (cfg.engine == Engine::kFixture && (!cfg.fixture || !std::filesystem::exists(*cfg.fixture))) {
    throw ConfigError("'engine.fixture' is required and must exist for the fixture engine");
  }
  if (cfg.engine == Engine::kGoogle && cfg.endpoint.empty()) {
    throw ConfigError("missing required key 'engine.endpoint'");
  }
}

}  // namespace serp_audit

#endif  // SERP_AUDIT_CONFIG_HPP_
