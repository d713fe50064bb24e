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

// serp-audit: command-line front end. `run` executes the whole pipeline from
// a config file; every other subcommand runs one stage with explicit paths.
//
// Exit codes: 0 success, 1 stage error, 2 usage error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "serp_audit/analytics.hpp"
#include "serp_audit/config.hpp"
#include "serp_audit/corpus_ingest.hpp"
#include "serp_audit/entity_extract.hpp"
#include "serp_audit/lexicon.hpp"
#include "serp_audit/pipeline.hpp"
#include "serp_audit/rank_divergence.hpp"
#include "serp_audit/serp_client.hpp"
#include "serp_audit/serp_http.hpp"
#include "serp_audit/version.hpp"

namespace sa = serp_audit;

namespace {

constexpr int kExitStageError = 1;
constexpr int kExitUsage = 2;

void emit(const std::string& out_path, const std::string& bytes) {
  if (out_path.empty() || out_path == "-") {
    std::cout << bytes;
  } else {
    sa::write_file(out_path, bytes);
  }
}

std::vector<sa::CountPair> read_pairs(const std::string& path) {
  const auto rows = sa::csv::parse(sa::read_file(path));
  if (rows.empty()) throw sa::DataError(path + ": empty pairs file");
  const std::size_t xc = sa::csv::column(rows.front(), "x");
  const std::size_t yc = sa::csv::column(rows.front(), "y");
  std::vector<sa::CountPair> pairs;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    sa::CountPair p;
    if (rows[r].size() <= std::max(xc, yc) || !sa::text::parse_double(rows[r][xc], p.x) ||
        !sa::text::parse_double(rows[r][yc], p.y)) {
      throw sa::DataError(path + ": row " + std::to_string(r + 1) + " is not numeric");
    }
    pairs.push_back(p);
  }
  return pairs;
}

std::map<std::string, std::string> read_membership(const std::string& path) {
  const auto rows = sa::csv::parse(sa::read_file(path));
  if (rows.empty()) return {};
  const std::size_t e = sa::csv::column(rows.front(), "entity");
  const std::size_t g = sa::csv::column(rows.front(), "group");
  std::map<std::string, std::string> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() <= std::max(e, g)) throw sa::DataError(path + ": short row");
    out[sa::text::normalize_key(rows[r][e])] = std::string(sa::text::trim(rows[r][g]));
  }
  return out;
}

sa::OrderedJson regression_json(const sa::RegressionResult& r) {
  return {{"slope", r.slope},       {"intercept", r.intercept}, {"r_squared", r.r_squared},
          {"p_value", r.p_value},   {"n", r.n},                 {"permutations", r.permutations},
          {"seed", r.seed},         {"clamped_points", r.clamped_points}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit search-engine visibility of communities against a platform corpus",
               "serp-audit"};
  app.set_version_flag("--version", std::string(sa::kVersion));
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("--verbose,-v", verbose, "Progress messages on stderr");

  // run ----------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Run the full pipeline from a config file");
  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  bool offline = false;
  run->add_option("--config", config_path, "TOML configuration")->required();
  run->add_option("--out-dir", out_dir, "Directory receiving report/ (or partial/)");
  run->add_option("--seed", seed, "Override run.seed");
  run->add_option("--alpha", alpha, "Override run.alpha");
  run->add_flag("--offline", offline, "Use the fixture transport only");

  // ingest -------------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "Count entities or terms in a dump");
  std::string in_path, format = "auto", schema = "generic", entity = "subreddit", field,
                       count_mode = "document", stopword_spec = "english", out_path;
  std::vector<std::string> text_fields;
  bool all_hashtags = false;
  ingest->add_option("--input", in_path, "NDJSON dump (.gz/.zst accepted)")->required();
  ingest->add_option("--format", format, "ndjson | ndjson_gzip | ndjson_zstd | auto");
  ingest->add_option("--schema", schema, "reddit_post | reddit_comment | tweet | generic");
  ingest->add_option("--entity", entity, "subreddit | hashtag | terms");
  ingest->add_option("--field", field, "Entity field path (subreddit)");
  ingest->add_option("--text-field", text_fields, "Text field path(s)");
  ingest->add_option("--count", count_mode, "document | occurrence (terms only)");
  ingest->add_option("--stopwords", stopword_spec, "english | none | file");
  ingest->add_flag("--all-hashtags", all_hashtags, "Keep non-ASCII hashtags");
  ingest->add_option("--out", out_path, "Output TSV (stdout if omitted)");

  // sample-keywords ----------------------------------------------------------
  auto* sample = app.add_subcommand("sample-keywords", "Build the vocabulary and sample keywords");
  std::string counts_path, keywords_out = "keywords.txt";
  long long k = 1000;
  std::uint64_t sample_seed = 0;
  std::size_t min_len = 3;
  std::uint64_t min_freq = 100;
  bool keep_nonalpha = false;
  sample->add_option("--counts", counts_path, "Term counts TSV from `ingest --entity terms`")
      ->required();
  sample->add_option("--k", k, "Sample size");
  sample->add_option("--seed", sample_seed, "Offset seed");
  sample->add_option("--min-len", min_len, "Minimum term length");
  sample->add_option("--min-freq", min_freq, "Minimum term frequency");
  sample->add_flag("--keep-nonalpha", keep_nonalpha, "Disable the alphabetic filter");
  sample->add_option("--stopwords", stopword_spec, "english | none | file");
  sample->add_option("--out", keywords_out, "Keyword file; sidecar gets .json");

  // fetch-serp ---------------------------------------------------------------
  auto* fetch = app.add_subcommand("fetch-serp", "Collect SERP results for a keyword file");
  std::string keywords_path, site, date_from, date_to, fixture_path, cache_dir = "cache",
                                                                    serp_out;
  int repetitions = 3, pages = 1;
  double rps = 1.0;
  fetch->add_option("--keywords", keywords_path, "Keyword file")->required();
  fetch->add_option("--site", site, "Site filter, e.g. reddit.com")->required();
  fetch->add_option("--from", date_from, "YYYY-MM-DD")->required();
  fetch->add_option("--to", date_to, "YYYY-MM-DD")->required();
  fetch->add_option("--config", config_path, "Config supplying engine settings");
  fetch->add_flag("--offline", offline, "Use the fixture transport only");
  fetch->add_option("--fixture", fixture_path, "Fixture JSON for offline runs");
  fetch->add_option("--cache-dir", cache_dir, "Response cache root");
  fetch->add_option("--repetitions", repetitions, "Repetitions per query");
  fetch->add_option("--pages", pages, "Result pages per repetition");
  fetch->add_option("--rps", rps, "Requests per second budget");
  fetch->add_option("--out", serp_out, "Result sets, one JSON per line")->required();

  // extract ------------------------------------------------------------------
  auto* extract = app.add_subcommand("extract", "Count entities in collected SERP results");
  std::string serp_path, kind = "subreddit";
  extract->add_option("--serp", serp_path, "Result sets from fetch-serp")->required();
  extract->add_option("--kind", kind, "subreddit | hashtag");
  extract->add_flag("--all-hashtags", all_hashtags, "Keep non-ASCII hashtags");
  extract->add_option("--out", out_path, "Output TSV (stdout if omitted)");

  // diverge ------------------------------------------------------------------
  auto* diverge = app.add_subcommand("diverge", "Rank turbulence divergence of two count tables");
  std::string left, right;
  double div_alpha = sa::kDefaultAlpha;
  std::size_t top_k = 0;
  diverge->add_option("--left", left, "System 1 counts (e.g. SERP)")->required();
  diverge->add_option("--right", right, "System 2 counts (e.g. corpus)")->required();
  diverge->add_option("--alpha", div_alpha, "Rank weighting exponent");
  diverge->add_option("--top-k", top_k, "Also print the top-k entities per direction");
  diverge->add_option("--out", out_path, "Report CSV; header JSON next to it");

  // stats --------------------------------------------------------------------
  auto* stats = app.add_subcommand("stats", "Supporting statistics");
  std::string regression_path, hexbin_path, labels_path, membership_path, scores_path;
  std::size_t permutations = 10000;
  double bin_width = 0.25, level = 0.95;
  auto* reg_opt = stats->add_option("--regression", regression_path, "x,y pairs CSV");
  auto* hex_opt = stats->add_option("--hexbin", hexbin_path, "x,y pairs CSV");
  auto* prop_opt = stats->add_option("--proportions", labels_path, "entity,category CSV");
  auto* ci_opt = stats->add_option("--ci", scores_path, "post_id,group,toxic,obscene,insult CSV");
  stats->add_option("--membership", membership_path, "entity,group CSV (with --proportions)");
  stats->add_option("--permutations", permutations, "Permutation count");
  stats->add_option("--seed", sample_seed, "Permutation seed");
  stats->add_option("--bin-width", bin_width, "Hexagon width in log10 units");
  stats->add_option("--level", level, "Confidence level");
  stats->add_option("--out", out_path, "Output JSON (stdout if omitted)");
  reg_opt->excludes(hex_opt)->excludes(prop_opt)->excludes(ci_opt);
  hex_opt->excludes(prop_opt)->excludes(ci_opt);
  prop_opt->excludes(ci_opt);

  // crossval -----------------------------------------------------------------
  auto* crossval = app.add_subcommand("crossval", "RTD over seeded keyword subsets");
  std::string corpus_path;
  int folds = 5;
  double fraction = 0.8;
  crossval->add_option("--keywords", keywords_path, "Keyword file")->required();
  crossval->add_option("--serp", serp_path, "Result sets from fetch-serp")->required();
  crossval->add_option("--corpus", corpus_path, "Corpus counts TSV")->required();
  crossval->add_option("--kind", kind, "subreddit | hashtag");
  crossval->add_option("--folds", folds, "Number of subsets");
  crossval->add_option("--fraction", fraction, "Subset fraction");
  crossval->add_option("--seed", sample_seed, "Subset seed");
  crossval->add_option("--alpha", div_alpha, "Rank weighting exponent");
  crossval->add_option("--out", out_path, "Output JSON (stdout if omitted)");

  // report -------------------------------------------------------------------
  auto* report = app.add_subcommand("report", "Summarize or verify a report bundle");
  std::string bundle_dir;
  bool verify = false;
  report->add_option("--bundle", bundle_dir, "Bundle directory (contains manifest.json)")
      ->required();
  report->add_flag("--verify", verify, "Recompute and check every output hash");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run) {
      sa::RunOptions opts;
      opts.out_dir = out_dir;
      opts.offline = offline;
      opts.seed = seed;
      opts.alpha = alpha;
      opts.verbose = verbose;
      const auto result = sa::run_pipeline(sa::load_config(config_path), opts);
      std::cout << "report bundle: " << result.bundle.string() << "\n";
      return 0;
    }

    if (*ingest) {
      const auto fmt = sa::parse_format(format, in_path);
      const auto sch = sa::parse_schema(schema);
      const auto defaults = sa::default_fields(sch);
      if (text_fields.empty()) text_fields = defaults.text_fields;
      sa::RecordStream stream(in_path, fmt, sch);
      sa::TokenCounts counts;
      if (entity == "terms") {
        const auto stop = sa::load_stopwords(stopword_spec);
        sa::TermCounts terms;
        while (auto rec = stream.next()) {
          std::string body;
          for (const auto& f : text_fields) {
            if (auto s = sa::extract_string(rec->value, f)) body += *s + " ";
          }
          terms.add_document(body, stop);
        }
        counts = count_mode == "occurrence" ? terms.occurrence : terms.document;
      } else {
        sa::EntityExtractor ex;
        if (sa::parse_entity_kind(entity) == sa::EntityKind::kSubreddit) {
          if (field.empty()) field = defaults.entity_field;
          if (field.empty()) throw sa::ConfigError("--field is required for this schema");
          ex = sa::field_extractor(field);
        } else {
          ex = sa::hashtag_extractor(text_fields, sa::HashtagFilter{!all_hashtags});
        }
        counts = sa::count_entities(stream, ex).counts;
      }
      const auto& st = stream.stats();
      if (st.corrupt_lines > 0) {
        std::cerr << "warning: skipped " << st.corrupt_lines << " malformed line(s) of "
                  << st.physical_lines << "\n";
      }
      emit(out_path, sa::to_tsv(counts));
      return 0;
    }

    if (*sample) {
      const auto stop = sa::load_stopwords(stopword_spec);
      sa::VocabularyFilters filters{min_len, min_freq, !keep_nonalpha, stop.id()};
      const auto vocab = sa::build_vocabulary(sa::read_tsv(counts_path), filters, stop);
      const auto ks = sa::stratified_sample(vocab, k, sample_seed);
      sa::write_keyword_sample(keywords_out, ks);
      std::cout << ks.keywords.size() << " keywords (stride " << ks.stride << ", vocabulary "
                << ks.vocabulary_size << ") -> " << keywords_out << "\n";
      return 0;
    }

    if (*fetch) {
      const auto keywords = sa::read_keyword_sample(keywords_path).keywords;
      std::optional<sa::PipelineConfig> cfg;
      if (!config_path.empty()) cfg = sa::load_config(config_path);
      std::unique_ptr<sa::Transport> transport;
      sa::Engine engine = sa::Engine::kGoogle;
      if (offline || (cfg && cfg->engine == sa::Engine::kFixture)) {
        if (fixture_path.empty() && cfg && cfg->fixture) fixture_path = cfg->fixture->string();
        if (fixture_path.empty()) throw sa::ConfigError("offline fetch needs --fixture");
        transport = std::make_unique<sa::FixtureTransport>(sa::FixtureTransport::from_file(fixture_path));
        engine = sa::Engine::kFixture;
        offline = true;
      } else {
        if (!cfg) throw sa::ConfigError("live fetch needs --config with engine settings");
        transport = std::make_unique<sa::HttpTransport>(sa::HttpTransportConfig{
            cfg->endpoint, sa::resolve_secret(cfg->api_key), cfg->proxies});
      }
      sa::SystemClock clock;
      sa::RateLimiter limiter(rps, clock);
      sa::CacheStore cache(cache_dir);
      sa::FetchContext ctx{*transport, &cache, sa::CacheMode::kReadWrite,
                           offline ? nullptr : &limiter, &clock, {}};
      if (cfg) ctx.retry = cfg->retry;
      std::vector<sa::SerpQuerySpec> specs;
      const auto from = sa::parse_date(date_from);
      const auto to = sa::parse_date(date_to);
      for (const auto& kw : keywords) {
        specs.push_back(sa::build_query(kw, site, from, to, engine, repetitions, pages));
      }
      sa::FetchStats fs;
      const auto sets = sa::fetch_all(specs, ctx, &fs, cfg ? cfg->workers : 1);
      sa::write_result_sets(serp_out, sets);
      std::cerr << "queries " << specs.size() << ", cache hits " << fs.cache_hits << ", misses "
                << fs.cache_misses << ", failed repetitions " << fs.failed_repetitions << "\n";
      return 0;
    }

    if (*extract) {
      const auto sets = sa::read_result_sets(serp_path);
      emit(out_path, sa::to_tsv(sa::extract_from_serp(sets, sa::parse_entity_kind(kind),
                                                      sa::HashtagFilter{!all_hashtags})));
      return 0;
    }

    if (*diverge) {
      const auto rep = sa::rtd(sa::read_tsv(left), sa::read_tsv(right), div_alpha);
      if (out_path.empty()) {
        std::cout << sa::report_csv(rep);
      } else {
        sa::write_file(out_path, sa::report_csv(rep));
        auto side = std::filesystem::path(out_path);
        side.replace_extension(".json");
        sa::write_file(side, sa::report_header(rep).dump(2) + "\n");
      }
      std::cerr << "rtd " << sa::text::format_double(rep.total_rtd) << "\n";
      if (top_k > 0) {
        for (auto dir : {sa::Direction::kPromotedIn1, sa::Direction::kPromotedIn2}) {
          std::cerr << (dir == sa::Direction::kPromotedIn1 ? "more prominent in left:"
                                                           : "more prominent in right:");
          for (const auto& e : sa::signed_contributions(rep, top_k, dir)) std::cerr << " " << e.entity;
          std::cerr << "\n";
        }
      }
      return 0;
    }

    if (*stats) {
      sa::OrderedJson out;
      if (!regression_path.empty()) {
        out = regression_json(sa::loglog_regression(read_pairs(regression_path), permutations,
                                                    sample_seed));
      } else if (!hexbin_path.empty()) {
        out = sa::OrderedJson::array();
        for (const auto& b : sa::hexbin(read_pairs(hexbin_path), bin_width)) {
          out.push_back({{"col", b.col}, {"row", b.row}, {"center_x", b.center_x},
                         {"center_y", b.center_y}, {"count", b.count}});
        }
      } else if (!labels_path.empty()) {
        if (membership_path.empty()) throw sa::ConfigError("--proportions needs --membership");
        const auto cmp = sa::group_proportions(sa::parse_label_file(sa::read_file(labels_path)),
                                               read_membership(membership_path));
        out["proportions"] = cmp.groups;
        out["counts"] = cmp.counts;
        out["warnings"] = cmp.warnings;
        for (const auto& w : cmp.warnings) std::cerr << "warning: " << w << "\n";
      } else if (!scores_path.empty()) {
        out = sa::OrderedJson::array();
        const auto table = sa::parse_score_table(sa::read_file(scores_path));
        for (const auto& g : sa::score_table_ci(table, level)) {
          out.push_back({{"group", g.group}, {"label", g.label}, {"mean", g.ci.mean},
                         {"half_width", g.ci.half_width}, {"level", g.ci.level}, {"n", g.ci.n}});
        }
      } else {
        std::cerr << "stats: choose one of --regression, --hexbin, --proportions, --ci\n";
        return kExitUsage;
      }
      emit(out_path, out.dump(2) + "\n");
      return 0;
    }

    if (*crossval) {
      const auto keywords = sa::read_keyword_sample(keywords_path).keywords;
      const auto sets = sa::read_result_sets(serp_path);
      const auto ek = sa::parse_entity_kind(kind);
      std::map<std::string, sa::TokenCounts> by_keyword;
      for (const auto& s : sets) {
        by_keyword[s.spec.keyword] = sa::merge_counts(by_keyword[s.spec.keyword],
                                                      sa::extract_from_serp(s, ek));
      }
      const auto corpus_rank = sa::rank(sa::read_tsv(corpus_path));
      const auto cv = sa::keyword_crossval(
          keywords, folds, fraction, sample_seed, [&](const std::vector<std::string>& subset) {
            sa::TokenCounts pooled;
            for (const auto& kw : subset) {
              if (auto it = by_keyword.find(kw); it != by_keyword.end()) {
                pooled = sa::merge_counts(pooled, it->second);
              }
            }
            if (pooled.empty()) throw sa::DataError("fold has no SERP entities");
            return sa::rtd(sa::rank(pooled), corpus_rank, div_alpha).total_rtd;
          });
      sa::OrderedJson out{{"folds", folds},       {"fraction", fraction},
                          {"subset_size", cv.subsets.front().size()},
                          {"values", cv.values},  {"min", cv.min},
                          {"max", cv.max},        {"mean", cv.mean},
                          {"stdev", cv.stdev}};
      emit(out_path, out.dump(2) + "\n");
      return 0;
    }

    if (*report) {
      if (verify) {
        const auto res = sa::verify_bundle(bundle_dir);
        for (const auto& p : res.problems) std::cerr << p << "\n";
        std::cout << (res.ok ? "bundle verified" : "bundle verification FAILED") << "\n";
        return res.ok ? 0 : kExitStageError;
      }
      const auto manifest = nlohmann::json::parse(
          sa::read_file(std::filesystem::path(bundle_dir) / "manifest.json"));
      std::cout << "status: " << manifest.value("status", "?") << "\n"
                << "tool_version: " << manifest.value("tool_version", "?") << "\n"
                << "config_hash: " << manifest.value("config_hash", "?") << "\n";
      if (manifest.contains("cache_state")) std::cout << "cache: " << manifest["cache_state"].dump() << "\n";
      for (const auto& stage : manifest.value("stages", nlohmann::json::array())) {
        std::cout << "stage " << stage.value("name", "?") << " done\n";
      }
      if (manifest.contains("outputs")) {
        std::cout << manifest["outputs"].size() << " output files\n";
      }
      return 0;
    }
  } catch (const sa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStageError;
  }
  return kExitUsage;
}
