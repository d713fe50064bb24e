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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "serp_audit/pipeline.hpp"
#include "test_support.hpp"

namespace sa = serp_audit;
namespace fs = std::filesystem;
using sa::testing::TempDir;

namespace {

const fs::path kFixture = SERP_AUDIT_FIXTURE_DIR;
const fs::path kGolden = SERP_AUDIT_GOLDEN_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<fs::path> bundle_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir));
  }
  std::sort(out.begin(), out.end());
  return out;
}

sa::PipelineConfig fixture_config(const TempDir& tmp) {
  auto cfg = sa::load_config(kFixture / "config.toml");
  cfg.cache_dir = tmp / "cache";
  return cfg;
}

sa::RunOptions quiet_options(const fs::path& out) {
  sa::RunOptions o;
  o.out_dir = out;
  o.log = nullptr;
  return o;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SERP_AUDIT_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(Config, ParsesFixture) {
  const auto cfg = sa::load_config(kFixture / "config.toml");
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.k, 30);
  ASSERT_EQ(cfg.platforms.size(), 2u);
  EXPECT_EQ(cfg.platforms[0].site, "reddit.com");
  EXPECT_EQ(cfg.platforms[0].dump, kFixture / "reddit_posts.ndjson");
  ASSERT_TRUE(cfg.crossval.has_value());
  EXPECT_EQ(cfg.crossval->folds, 5);
}

std::string config_error(const std::string& toml, const fs::path& source) {
  try {
    sa::validate_inputs(sa::parse_config(toml, source));
  } catch (const sa::ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, ErrorsNameTheKey) {
  TempDir tmp;
  const fs::path src = tmp / "c.toml";
  const std::string engine = "[engine]\nname = \"fixture\"\nfixture = \"" +
                             (kFixture / "serp_fixture.json").string() + "\"\n";
  const std::string missing_dump = engine +
      "[[platform]]\nname = \"p\"\nsite = \"x.com\"\ndump = \"nope.ndjson\"\nschema = \"reddit_post\"\n"
      "date_from = \"2022-01-01\"\ndate_to = \"2022-02-01\"\n";
  EXPECT_NE(config_error(missing_dump, src).find("platform[0].dump"), std::string::npos);
  EXPECT_NE(config_error("[engine]\nname = \"fixture\"\n", src).find("platform"), std::string::npos);
  EXPECT_NE(config_error("[run]\nseed = \"x\"\n" + missing_dump, src).find("run.seed"), std::string::npos);
  EXPECT_NE(config_error("[run\n", src).find("line"), std::string::npos);
  EXPECT_THROW(sa::load_config(tmp / "absent.toml"), sa::ConfigError);
}

TEST(Pipeline, GoldenBundleIsByteIdentical) {
  TempDir tmp;
  const auto cfg = fixture_config(tmp);
  const auto first = sa::run_pipeline(cfg, quiet_options(tmp / "a"));
  EXPECT_EQ(first.manifest["status"], "complete");
  const auto files = bundle_files(first.bundle);
  ASSERT_EQ(files, bundle_files(kGolden));
  for (const auto& f : files) {
    EXPECT_EQ(slurp(first.bundle / f), slurp(kGolden / f)) << f;
  }
  // Second run from a fresh cache reproduces every byte.
  auto cfg2 = cfg;
  cfg2.cache_dir = tmp / "cache2";
  const auto second = sa::run_pipeline(cfg2, quiet_options(tmp / "b"));
  for (const auto& f : files) EXPECT_EQ(slurp(second.bundle / f), slurp(first.bundle / f)) << f;
  EXPECT_TRUE(sa::verify_bundle(first.bundle).ok);
}

TEST(Pipeline, WarmCacheReplaysWithoutTransport) {
  TempDir tmp;
  const auto cfg = fixture_config(tmp);
  const auto cold = sa::run_pipeline(cfg, quiet_options(tmp / "a"));
  sa::CallbackTransport dead([](const sa::SerpRequest&) -> sa::RawResponse {
    throw sa::TransportError("network disabled");
  });
  auto opts = quiet_options(tmp / "b");
  opts.transport = &dead;
  const auto warm = sa::run_pipeline(cfg, opts);
  const auto& cs = warm.manifest["cache_state"];
  EXPECT_EQ(cs["hits"], cs["queries"]);
  EXPECT_EQ(cs["misses"], 0);
  EXPECT_EQ(dead.calls(), 0u);
  for (const auto& f : bundle_files(cold.bundle)) {
    if (f == "manifest.json") continue;
    EXPECT_EQ(slurp(warm.bundle / f), slurp(cold.bundle / f)) << f;
  }
}

TEST(Pipeline, FixtureDivergenceExceedsControl) {
  TempDir tmp;
  const auto res = sa::run_pipeline(fixture_config(tmp), quiet_options(tmp / "o"));
  for (const std::string p : {"reddit", "twitter"}) {
    const auto h = nlohmann::json::parse(slurp(res.bundle / ("rtd_" + p + ".json")));
    EXPECT_GE(h["pooled_rtd"].get<double>(), 1.5 * h["control_rtd"].get<double>()) << p;
  }
}

TEST(Pipeline, FailureLeavesPartialManifest) {
  TempDir tmp;
  sa::CallbackTransport forbidden([](const sa::SerpRequest&) { return sa::RawResponse{403, ""}; });
  auto opts = quiet_options(tmp / "o");
  opts.transport = &forbidden;
  EXPECT_THROW(sa::run_pipeline(fixture_config(tmp), opts), sa::FetchError);
  const auto m = nlohmann::json::parse(slurp(tmp / "o" / "partial" / "manifest.json"));
  EXPECT_EQ(m["status"], "failed");
  EXPECT_EQ(m["failed_stage"], "fetch");
  EXPECT_TRUE(m["outputs"].contains("keywords.txt"));
  EXPECT_FALSE(fs::exists(tmp / "o" / "report"));
}

TEST(Pipeline, SeedOverrideChangesManifest) {
  TempDir tmp;
  auto opts = quiet_options(tmp / "o");
  opts.seed = 99;
  const auto res = sa::run_pipeline(fixture_config(tmp), opts);
  EXPECT_EQ(res.manifest["parameters"]["seed"], 99);
}

TEST(Verify, DetectsTamperingAndMissingFiles) {
  TempDir tmp;
  fs::copy(kGolden, tmp / "b", fs::copy_options::recursive);
  EXPECT_TRUE(sa::verify_bundle(tmp / "b").ok);
  { std::ofstream(tmp / "b" / "hexbin.csv", std::ios::app) << "x\n"; }
  fs::remove(tmp / "b" / "promoted.csv");
  const auto v = sa::verify_bundle(tmp / "b");
  EXPECT_FALSE(v.ok);
  EXPECT_EQ(v.problems.size(), 2u);
  EXPECT_THROW(sa::verify_bundle(tmp / "nothing"), sa::IoError);
}

TEST(Cli, ExitCodes) {
  TempDir tmp;
  fs::copy(kFixture, tmp / "fx", fs::copy_options::recursive);
  const auto cfg = (tmp / "fx" / "config.toml").string();
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("--version"), 0);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("run"), 2);
  EXPECT_EQ(run_cli("diverge --left a.tsv --right b.tsv --alpha notanumber"), 2);
  EXPECT_EQ(run_cli("run --config " + (tmp / "missing.toml").string()), 1);
  EXPECT_EQ(run_cli("run --config " + cfg + " --out-dir " + (tmp / "out").string()), 0);
  EXPECT_EQ(run_cli("report --bundle " + (tmp / "out" / "report").string() + " --verify"), 0);
  { std::ofstream(tmp / "out" / "report" / "keywords.txt", std::ios::app) << "tamper\n"; }
  EXPECT_EQ(run_cli("report --bundle " + (tmp / "out" / "report").string() + " --verify"), 1);
  // Corrupt fixture: the fetch stage fails and the CLI reports a runtime error.
  { std::ofstream(tmp / "fx" / "serp_fixture.json") << "{not json"; }
  fs::remove_all(tmp / "fx" / "cache");
  EXPECT_EQ(run_cli("run --config " + cfg + " --out-dir " + (tmp / "out2").string()), 1);
}

TEST(Cli, DivergeMatchesLibrary) {
  TempDir tmp;
  { std::ofstream(tmp / "a.tsv") << "x\t5\ny\t3\nz\t1\n"; }
  { std::ofstream(tmp / "b.tsv") << "x\t1\ny\t3\nw\t4\n"; }
  ASSERT_EQ(run_cli("diverge --left " + (tmp / "a.tsv").string() + " --right " +
                    (tmp / "b.tsv").string() + " --out " + (tmp / "d.csv").string()),
            0);
  const auto a = sa::read_tsv(tmp / "a.tsv");
  const auto b = sa::read_tsv(tmp / "b.tsv");
  EXPECT_EQ(slurp(tmp / "d.csv"), sa::report_csv(sa::rtd(a, b, 1.0 / 3)));
}

}  // namespace
