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

// End-to-end audit run: ingest -> vocabulary -> sample -> fetch -> extract ->
// rank -> rtd -> analytics, writing a report bundle plus a manifest that
// hashes every output.

#ifndef SERP_AUDIT_PIPELINE_HPP_
#define SERP_AUDIT_PIPELINE_HPP_

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "serp_audit/analytics.hpp"
#include "serp_audit/config.hpp"
#include "serp_audit/corpus_ingest.hpp"
#include "serp_audit/csv.hpp"
#include "serp_audit/entity_extract.hpp"
#include "serp_audit/hash.hpp"
#include "serp_audit/lexicon.hpp"
#include "serp_audit/rank_divergence.hpp"
#include "serp_audit/serp_client.hpp"
#include "serp_audit/serp_http.hpp"
#include "serp_audit/version.hpp"

namespace serp_audit {

using OrderedJson = nlohmann::ordered_json;

struct RunOptions {
  std::filesystem::path out_dir = "out";
  bool offline = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  bool verbose = false;
  // Test hooks: replace the configured transport or the clock.
  Transport* transport = nullptr;
  Clock* clock = nullptr;
  std::ostream* log = &std::clog;
};

struct RunResult {
  std::filesystem::path bundle;
  OrderedJson manifest;
};


inline StopwordList load_stopwords(const std::string& spec) {
  if (spec == "english") return StopwordList::english();
  if (spec == "none") return StopwordList::none();
  return StopwordList::from_file(spec);
}

// Files written so far, in write order, with their content hashes.
class BundleWriter {
 public:
  explicit BundleWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, std::string_view bytes) {
    write_file(dir_ / name, bytes);
    hashes_[name] = sha256_hex(bytes);
  }

  const std::filesystem::path& dir() const { return dir_; }
  const std::map<std::string, std::string>& hashes() const { return hashes_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> hashes_;
};

namespace detail {

struct PlatformRun {
  const PlatformConfig* cfg = nullptr;
  TokenCounts corpus{"corpus"};
  TokenCounts control_a{"control-a"};
  TokenCounts control_b{"control-b"};
  StreamStats stream;
  std::vector<SerpResultSet> serp;
  std::vector<TokenCounts> serp_per_keyword;
  TokenCounts serp_counts{"serp"};
  std::size_t failed_queries = 0;
  std::optional<DivergenceReport> report;
  std::optional<double> control_rtd;
};

inline std::string join_text(const Json& rec, const std::vector<std::string>& fields) {
  std::string out;
  for (const auto& f : fields) {
    if (auto s = extract_string(rec, f)) {
      if (!out.empty()) out.push_back(' ');
      out += *s;
    }
  }
  return out;
}

inline std::string divergence_rows(const std::string& platform,
                                   const std::vector<EntityDivergence>& rows) {
  std::string out;
  for (const auto& e : rows) {
    out += csv::escape(platform) + "," + csv::escape(e.entity) + "," +
           text::format_double(e.rank_1) + "," + text::format_double(e.rank_2) + "," +
           text::format_double(e.contribution) + "," +
           (e.exclusive_to == 0 ? std::string() : std::to_string(e.exclusive_to)) + "\n";
  }
  return out;
}

inline std::int64_t source_date_epoch() {
  const char* v = std::getenv("SOURCE_DATE_EPOCH");
  std::uint64_t n = 0;
  if (v != nullptr && text::parse_u64(v, n)) return static_cast<std::int64_t>(n);
  return 0;
}

}  // namespace detail

inline RunResult run_pipeline(const PipelineConfig& config, const RunOptions& opts = {}) {
  PipelineConfig cfg = config;
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.alpha) cfg.alpha = *opts.alpha;
  if (!(cfg.alpha > 0)) throw ArgumentError("alpha must be positive");
  const bool offline = opts.offline || cfg.engine == Engine::kFixture;
  if (offline && !opts.transport) {
    if (!cfg.fixture) throw ConfigError("offline runs need 'engine.fixture'");
    cfg.engine = Engine::kFixture;
  }
  validate_inputs(cfg);

  const auto log = [&](const std::string& msg) {
    if (opts.verbose && opts.log) *opts.log << "[serp-audit] " << msg << "\n";
  };

  const auto partial_dir = opts.out_dir / "partial";
  const auto report_dir = opts.out_dir / "report";
  std::filesystem::remove_all(partial_dir);
  BundleWriter bundle(partial_dir);

  OrderedJson manifest;
  manifest["tool_version"] = kVersion;
  manifest["status"] = "running";
  manifest["config_hash"] = sha256_hex(cfg.source_bytes);
  manifest["keyword_sample_hash"] = nullptr;
  manifest["parameters"] = {{"seed", cfg.seed},
                            {"alpha", cfg.alpha},
                            {"k", cfg.k},
                            {"repetitions", cfg.repetitions},
                            {"pages", cfg.pages},
                            {"engine", engine_name(cfg.engine)},
                            {"offline", offline}};
  manifest["cache_state"] = {{"hits", 0}, {"misses", 0}, {"requests", 0}, {"queries", 0}};
  manifest["timestamps"] = {{"source_date_epoch", detail::source_date_epoch()}};
  manifest["stages"] = OrderedJson::array();

  std::vector<detail::PlatformRun> runs(cfg.platforms.size());
  for (std::size_t i = 0; i < runs.size(); ++i) runs[i].cfg = &cfg.platforms[i];
  std::string current_stage;
  const auto stage_done = [&](const std::string& name, OrderedJson details) {
    details["name"] = name;
    manifest["stages"].push_back(std::move(details));
    log("stage " + name + " complete");
  };
  const auto finish_manifest = [&](const std::string& status) {
    manifest["status"] = status;
    OrderedJson outputs = OrderedJson::object();
    for (const auto& [name, hash] : bundle.hashes()) outputs[name] = hash;
    manifest["outputs"] = outputs;
    write_file(bundle.dir() / "manifest.json", manifest.dump(2) + "\n");
  };

  try {
    // ingest -------------------------------------------------------------
    current_stage = "ingest";
    const StopwordList stopwords = load_stopwords(cfg.stopwords);
    TermCounts terms;
    OrderedJson ingest = OrderedJson::object();
    for (auto& run : runs) {
      const PlatformConfig& p = *run.cfg;
      const bool vocab_source = p.name == cfg.vocabulary_source;
      const EntityExtractor extract =
          p.entity == EntityKind::kSubreddit
              ? field_extractor(p.entity_field)
              : hashtag_extractor(p.text_fields, HashtagFilter{p.english_only});
      RecordStream stream(p.dump, p.format, p.schema);
      std::vector<std::string> entities;
      while (auto rec = stream.next()) {
        if (p.count_activity) {
          entities.clear();
          extract(rec->value, entities);
          const bool half_a = (derive_seed(cfg.seed, rec->line_number) & 1) == 0;
          for (const auto& e : entities) {
            run.corpus.add(e);
            (half_a ? run.control_a : run.control_b).add(e);
          }
        }
        if (vocab_source) terms.add_tokens(tokenize(detail::join_text(rec->value, p.text_fields), stopwords));
      }
      run.stream = stream.stats();
      if (run.stream.corrupt_lines > 0) {
        log(p.name + ": skipped " + std::to_string(run.stream.corrupt_lines) + " malformed lines");
      }
      ingest[p.name] = {{"physical_lines", run.stream.physical_lines},
                        {"records", run.stream.records},
                        {"corrupt_lines", run.stream.corrupt_lines},
                        {"entities", run.corpus.size()},
                        {"activity_total", run.corpus.total()}};
      bundle.write("counts/corpus_" + p.name + ".tsv", to_tsv(run.corpus));
    }
    stage_done("ingest", {{"platforms", ingest}});

    // vocabulary ---------------------------------------------------------
    current_stage = "vocabulary";
    VocabularyFilters filters = cfg.filters;
    filters.stopword_list_id = stopwords.id();
    const Vocabulary vocab = build_vocabulary(
        cfg.document_frequency ? terms.document : terms.occurrence, filters, stopwords);
    if (vocab.empty()) throw DataError("vocabulary is empty after filtering");
    stage_done("vocabulary", {{"documents", terms.documents},
                              {"distinct_tokens", terms.occurrence.size()},
                              {"terms", vocab.size()},
                              {"frequency", cfg.document_frequency ? "document" : "occurrence"},
                              {"stopwords", stopwords.id()}});

    // sample -------------------------------------------------------------
    current_stage = "sample";
    const KeywordSample sample = stratified_sample(vocab, cfg.k, cfg.seed);
    const std::string keyword_bytes = keywords_text(sample);
    bundle.write("keywords.txt", keyword_bytes);
    bundle.write("keywords.json", sample_sidecar(sample).dump(2) + "\n");
    manifest["keyword_sample_hash"] = sha256_hex(keyword_bytes);
    stage_done("sample", {{"keywords", sample.keywords.size()}, {"stride", sample.stride}});

    // fetch --------------------------------------------------------------
    current_stage = "fetch";
    std::unique_ptr<Transport> owned;
    Transport* transport = opts.transport;
    if (transport == nullptr) {
      if (cfg.engine == Engine::kFixture) {
        owned = std::make_unique<FixtureTransport>(FixtureTransport::from_file(*cfg.fixture));
      } else {
        owned = std::make_unique<HttpTransport>(
            HttpTransportConfig{cfg.endpoint, resolve_secret(cfg.api_key), cfg.proxies});
      }
      transport = owned.get();
    }
    SystemClock system_clock;
    Clock& clock = opts.clock ? *opts.clock : system_clock;
    RateLimiter limiter(cfg.rps, clock);
    CacheStore cache(cfg.cache_dir);
    FetchContext ctx{*transport, &cache, CacheMode::kReadWrite,
                     offline ? nullptr : &limiter, &clock, cfg.retry};
    FetchStats fstats;
    std::size_t queries = 0;
    OrderedJson fetch_info = OrderedJson::object();
    for (auto& run : runs) {
      std::vector<SerpQuerySpec> specs;
      for (const auto& kw : sample.keywords) {
        specs.push_back(build_query(kw, run.cfg->site, run.cfg->date_from, run.cfg->date_to,
                                    cfg.engine, cfg.repetitions, cfg.pages));
      }
      queries += specs.size() * static_cast<std::size_t>(cfg.repetitions * cfg.pages);
      run.serp = fetch_all(specs, ctx, &fstats, cfg.workers);
      for (const auto& s : run.serp) {
        if (static_cast<int>(s.failures.size()) == s.spec.repetitions) ++run.failed_queries;
      }
      if (!run.serp.empty() && run.failed_queries == run.serp.size()) {
        throw FetchError("every query failed for platform '" + run.cfg->name + "'");
      }
      fetch_info[run.cfg->name] = {{"queries", run.serp.size()},
                                   {"failed_queries", run.failed_queries}};
    }
    manifest["cache_state"] = {{"hits", fstats.cache_hits},
                               {"misses", fstats.cache_misses},
                               {"requests", fstats.requests},
                               {"queries", queries}};
    stage_done("fetch", {{"platforms", fetch_info},
                         {"retries", fstats.retries},
                         {"failed_repetitions", fstats.failed_repetitions}});

    // extract ------------------------------------------------------------
    current_stage = "extract";
    OrderedJson extract_info = OrderedJson::object();
    for (auto& run : runs) {
      const HashtagFilter filter{run.cfg->english_only};
      for (const auto& s : run.serp) {
        run.serp_per_keyword.push_back(extract_from_serp(s, run.cfg->entity, filter));
        run.serp_counts = merge_counts(run.serp_counts, run.serp_per_keyword.back());
      }
      bundle.write("counts/serp_" + run.cfg->name + ".tsv", to_tsv(run.serp_counts));
      extract_info[run.cfg->name] = {{"entities", run.serp_counts.size()},
                                     {"occurrences", run.serp_counts.total()}};
    }
    stage_done("extract", {{"platforms", extract_info}});

    // rank + rtd ---------------------------------------------------------
    current_stage = "rtd";
    std::string promoted = "platform,entity,rank_serp,rank_corpus,contribution,exclusive\n";
    std::string suppressed = promoted;
    OrderedJson rtd_info = OrderedJson::object();
    for (auto& run : runs) {
      const std::string& name = run.cfg->name;
      if (!run.cfg->count_activity) continue;
      if (run.corpus.empty()) throw DataError("no corpus entities for platform '" + name + "'");
      if (run.serp_counts.empty()) throw DataError("no SERP entities for platform '" + name + "'");
      const RankedDistribution corpus_rank = rank(run.corpus);
      run.report = rtd(rank(run.serp_counts), corpus_rank, cfg.alpha);
      const KeywordRtdSummary per_kw = mean_keyword_rtd(run.serp_per_keyword, corpus_rank, cfg.alpha);
      OrderedJson header = report_header(*run.report);
      header["platform"] = name;
      header["pooled_rtd"] = run.report->total_rtd;
      header["mean_keyword_rtd"] = per_kw.mean;
      header["keywords_evaluated"] = per_kw.evaluated;
      header["keywords_without_entities"] = per_kw.skipped;
      if (cfg.control && !run.control_a.empty() && !run.control_b.empty()) {
        run.control_rtd = rtd(run.control_a, run.control_b, cfg.alpha).total_rtd;
        header["control_rtd"] = *run.control_rtd;
      } else {
        header["control_rtd"] = nullptr;
      }
      bundle.write("rtd_" + name + ".csv", report_csv(*run.report));
      bundle.write("rtd_" + name + ".json", header.dump(2) + "\n");
      promoted += detail::divergence_rows(
          name, signed_contributions(*run.report, cfg.top_k, Direction::kPromotedIn1));
      suppressed += detail::divergence_rows(
          name, signed_contributions(*run.report, cfg.top_k, Direction::kPromotedIn2));
      rtd_info[name] = {{"pooled_rtd", run.report->total_rtd}, {"mean_keyword_rtd", per_kw.mean}};
    }
    bundle.write("promoted.csv", promoted);
    bundle.write("suppressed.csv", suppressed);
    stage_done("rtd", {{"platforms", rtd_info}});

    // analytics ----------------------------------------------------------
    current_stage = "analytics";
    OrderedJson regression = OrderedJson::object();
    std::string hex_csv = "platform,col,row,center_x,center_y,count\n";
    std::string prop_csv = "platform,group,category,count,proportion\n";
    std::string ci_csv = "platform,group,label,mean,half_width,level,n\n";
    OrderedJson warnings = OrderedJson::array();
    const unsigned threads = std::max(1u, std::min(4u, std::thread::hardware_concurrency()));
    for (auto& run : runs) {
      const std::string& name = run.cfg->name;
      if (!run.report) continue;
      std::vector<CountPair> pairs;
      for (const auto& e : run.report->per_entity) {
        pairs.push_back({static_cast<double>(e.count_2), static_cast<double>(e.count_1)});
      }
      if (pairs.size() >= 2) {
        try {
          const auto fit = loglog_regression(pairs, cfg.permutations, cfg.seed, threads);
          regression[name] = {{"x", "log10 corpus activity"},
                              {"y", "log10 SERP occurrences"},
                              {"slope", fit.slope},
                              {"intercept", fit.intercept},
                              {"r_squared", fit.r_squared},
                              {"p_value", fit.p_value},
                              {"n", fit.n},
                              {"permutations", fit.permutations},
                              {"seed", fit.seed},
                              {"clamped_points", fit.clamped_points}};
        } catch (const DegenerateInputError& e) {
          regression[name] = nullptr;
          warnings.push_back(name + ": regression skipped: " + e.what());
        }
      }
      for (const auto& bin : hexbin(pairs, cfg.hexbin_width)) {
        hex_csv += csv::escape(name) + "," + std::to_string(bin.col) + "," + std::to_string(bin.row) +
                   "," + text::format_double(bin.center_x) + "," +
                   text::format_double(bin.center_y) + "," + std::to_string(bin.count) + "\n";
      }
      if (run.cfg->labels) {
        const auto labels = parse_label_file(read_file(*run.cfg->labels));
        std::map<std::string, std::string> membership;
        for (const auto& [entity, cat] : labels) {
          membership[entity] = run.serp_counts.contains(entity) ? kInSerp : kNotInSerp;
        }
        const auto cmp = group_proportions(labels, membership);
        for (const auto& w : cmp.warnings) warnings.push_back(name + ": " + w);
        for (const auto& [group, cats] : cmp.counts) {
          if (!cmp.groups.count(group)) continue;
          for (const auto& [cat, n] : cats) {
            prop_csv += csv::escape(name) + "," + group + "," + csv::escape(cat) + "," +
                        std::to_string(n) + "," + text::format_double(cmp.groups.at(group).at(cat)) +
                        "\n";
          }
        }
      }
      if (run.cfg->scores) {
        const auto table = parse_score_table(read_file(*run.cfg->scores));
        for (const auto& g : score_table_ci(table, cfg.ci_level)) {
          ci_csv += csv::escape(name) + "," + csv::escape(g.group) + "," + g.label + "," +
                    text::format_double(g.ci.mean) + "," + text::format_double(g.ci.half_width) +
                    "," + text::format_double(g.ci.level) + "," + std::to_string(g.ci.n) + "\n";
        }
      }
    }
    bundle.write("regression.json", regression.dump(2) + "\n");
    bundle.write("hexbin.csv", hex_csv);
    bundle.write("proportions.csv", prop_csv);
    bundle.write("toxicity_ci.csv", ci_csv);

    if (cfg.crossval) {
      OrderedJson cv_out = OrderedJson::object();
      for (auto& run : runs) {
        if (!run.report) continue;
        std::map<std::string, const TokenCounts*> by_keyword;
        for (std::size_t i = 0; i < sample.keywords.size(); ++i) {
          by_keyword[sample.keywords[i]] = &run.serp_per_keyword[i];
        }
        const RankedDistribution corpus_rank = rank(run.corpus);
        const auto cv = keyword_crossval(
            sample.keywords, cfg.crossval->folds, cfg.crossval->fraction, cfg.seed,
            [&](const std::vector<std::string>& subset) {
              TokenCounts pooled("serp");
              for (const auto& kw : subset) pooled = merge_counts(pooled, *by_keyword.at(kw));
              if (pooled.empty()) throw DataError("cross-validation fold has no SERP entities");
              return rtd(rank(pooled), corpus_rank, cfg.alpha).total_rtd;
            });
        cv_out[run.cfg->name] = {{"folds", cfg.crossval->folds},
                                 {"fraction", cfg.crossval->fraction},
                                 {"subset_size", cv.subsets.front().size()},
                                 {"values", cv.values},
                                 {"min", cv.min},
                                 {"max", cv.max},
                                 {"mean", cv.mean},
                                 {"stdev", cv.stdev}};
      }
      bundle.write("crossval.json", cv_out.dump(2) + "\n");
    }
    stage_done("analytics", {{"warnings", warnings}});
  } catch (const std::exception& e) {
    manifest["failed_stage"] = current_stage;
    manifest["error"] = e.what();
    finish_manifest("failed");
    throw;
  }

  finish_manifest("complete");
  std::filesystem::remove_all(report_dir);
  std::filesystem::rename(partial_dir, report_dir);
  return {report_dir, manifest};
}

struct VerifyResult {
  bool ok = true;
  std::vector<std::string> problems;
};

// Recomputes every output hash recorded in a bundle's manifest.
inline VerifyResult verify_bundle(const std::filesystem::path& bundle_dir) {
  const auto manifest_path = bundle_dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw IoError("no manifest.json in " + bundle_dir.string());
  }
  const auto manifest = nlohmann::json::parse(read_file(manifest_path), nullptr, false);
  if (!manifest.is_object() || !manifest.contains("outputs")) {
    throw DataError("manifest.json is malformed");
  }
  VerifyResult res;
  for (const auto& [name, hash] : manifest.at("outputs").items()) {
    const auto p = bundle_dir / name;
    if (!std::filesystem::exists(p)) {
      res.ok = false;
      res.problems.push_back("missing: " + name);
      continue;
    }
    if (sha256_file(p) != hash.get<std::string>()) {
      res.ok = false;
      res.problems.push_back("hash mismatch: " + name);
    }
  }
  return res;
}

}  // namespace serp_audit

#endif  // SERP_AUDIT_PIPELINE_HPP_
