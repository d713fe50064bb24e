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
#include <zlib.h>
#include <zstd.h>

#include <fstream>
#include <random>
#include <string>

#include "serp_audit/corpus_ingest.hpp"
#include "serp_audit/token_counts.hpp"
#include "test_support.hpp"

namespace sa = serp_audit;
namespace fs = std::filesystem;

namespace {

void write_gzip(const fs::path& p, const std::string& data) {
  gzFile f = gzopen(p.c_str(), "wb");
  ASSERT_NE(f, nullptr);
  ASSERT_EQ(gzwrite(f, data.data(), static_cast<unsigned>(data.size())), static_cast<int>(data.size()));
  gzclose(f);
}

std::string zstd_bytes(const std::string& data) {
  std::string out(ZSTD_compressBound(data.size()), '\0');
  const std::size_t n = ZSTD_compress(out.data(), out.size(), data.data(), data.size(), 3);
  EXPECT_FALSE(ZSTD_isError(n));
  out.resize(n);
  return out;
}

std::string sample_dump() {
  return R"({"subreddit":"AskReddit","title":"one"})" "\n"
         R"({"subreddit":"r/pics","title":"two"})" "\n"
         "{broken\n"
         R"({"subreddit":"askreddit","title":"three"})" "\r\n"
         "[1,2,3]\n"
         R"({"title":"no subreddit"})" "\n"
         R"({"subreddit":"/r/Pics","title":"last, no newline"})";
}

sa::CountResult count_file(const fs::path& p, sa::DumpFormat f) {
  sa::RecordStream s(p, f, sa::RecordSchema::kRedditPost);
  return sa::count_entities(s, sa::field_extractor("subreddit"));
}

TEST(TokenCounts, NormalizesAndTotals) {
  sa::TokenCounts c;
  c.add("  Gaming ");
  c.add("gaming", 2);
  c.add("");
  c.add("news", 0);
  EXPECT_EQ(c.count("GAMING"), 3u);
  EXPECT_EQ(c.size(), 1u);
  EXPECT_EQ(c.total(), 3u);
  EXPECT_FALSE(c.contains("news"));
}

TEST(TokenCounts, SortedOrderAndTsvRoundTrip) {
  sa::TokenCounts c;
  c.add("b", 5);
  c.add("a", 5);
  c.add("c", 9);
  EXPECT_EQ(sa::to_tsv(c), "c\t9\na\t5\nb\t5\n");
  EXPECT_EQ(sa::parse_tsv(sa::to_tsv(c)), c);
  EXPECT_THROW(sa::parse_tsv("a 5\n"), sa::DataError);
  EXPECT_THROW(sa::parse_tsv("a\tfive\n"), sa::DataError);
}

TEST(TokenCounts, MergeIsPointwiseSum) {
  sa::TokenCounts a, b;
  a.add("x", 2);
  a.add("y");
  b.add("y", 4);
  b.add("z");
  const auto m = sa::merge_counts(a, b);
  EXPECT_EQ(m.count("x"), 2u);
  EXPECT_EQ(m.count("y"), 5u);
  EXPECT_EQ(m.count("z"), 1u);
  EXPECT_EQ(m.total(), a.total() + b.total());
}

TEST(Format, FromPathAndName) {
  EXPECT_EQ(sa::format_from_path("a/b.ndjson"), sa::DumpFormat::kNdjson);
  EXPECT_EQ(sa::format_from_path("RS_2023-01.zst"), sa::DumpFormat::kNdjsonZstd);
  EXPECT_EQ(sa::format_from_path("x.json.gz"), sa::DumpFormat::kNdjsonGzip);
  EXPECT_EQ(sa::parse_format("auto", "x.gz"), sa::DumpFormat::kNdjsonGzip);
  EXPECT_THROW(sa::parse_format("parquet", "x"), sa::ConfigError);
  EXPECT_THROW(sa::parse_schema("facebook"), sa::ConfigError);
}

TEST(RecordStream, SkipsCorruptLinesAndKeepsLastLine) {
  sa::testing::TempDir dir("ingest");
  sa::write_file(dir / "d.ndjson", sample_dump());
  const auto r = count_file(dir / "d.ndjson", sa::DumpFormat::kNdjson);
  EXPECT_EQ(r.stats.physical_lines, 7u);
  EXPECT_EQ(r.stats.records, 5u);
  EXPECT_EQ(r.stats.corrupt_lines, 2u);
  EXPECT_EQ(r.stats.corrupt_examples, (std::vector<std::size_t>{3, 5}));
  EXPECT_EQ(r.counts.count("askreddit"), 2u);
  EXPECT_EQ(r.counts.count("pics"), 2u);
  EXPECT_EQ(r.counts.size(), 2u);
}

TEST(RecordStream, GzipAndZstdMatchPlain) {
  sa::testing::TempDir dir("ingest");
  sa::write_file(dir / "d.ndjson", sample_dump());
  write_gzip(dir / "d.ndjson.gz", sample_dump());
  sa::write_file(dir / "d.ndjson.zst", zstd_bytes(sample_dump()));
  const auto plain = count_file(dir / "d.ndjson", sa::DumpFormat::kNdjson);
  const auto gz = count_file(dir / "d.ndjson.gz", sa::DumpFormat::kNdjsonGzip);
  const auto zs = count_file(dir / "d.ndjson.zst", sa::DumpFormat::kNdjsonZstd);
  EXPECT_EQ(plain.counts, gz.counts);
  EXPECT_EQ(plain.counts, zs.counts);
  EXPECT_EQ(gz.stats.physical_lines, plain.stats.physical_lines);
  EXPECT_EQ(zs.stats.corrupt_lines, plain.stats.corrupt_lines);
}

TEST(RecordStream, LinesLongerThanTheBuffer) {
  sa::testing::TempDir dir("ingest");
  const std::string title(200000, 'x');
  sa::write_file(dir / "long.ndjson", "{\"subreddit\":\"a\",\"title\":\"" + title + "\"}\n{\"subreddit\":\"b\"}\n");
  sa::RecordStream s(dir / "long.ndjson", sa::DumpFormat::kNdjson, sa::RecordSchema::kRedditPost);
  auto rec = s.next();
  ASSERT_TRUE(rec);
  EXPECT_EQ(rec->value["title"].get<std::string>().size(), title.size());
  EXPECT_EQ(s.next()->line_number, 2u);
  EXPECT_FALSE(s.next());
}

TEST(RecordStream, WrongCompressionIsAnError) {
  sa::testing::TempDir dir("ingest");
  sa::write_file(dir / "plain.ndjson", sample_dump());
  EXPECT_THROW(count_file(dir / "plain.ndjson", sa::DumpFormat::kNdjsonGzip), sa::IoError);
  EXPECT_THROW(count_file(dir / "plain.ndjson", sa::DumpFormat::kNdjsonZstd), sa::IoError);
  auto z = zstd_bytes(sample_dump());
  z.resize(z.size() / 2);
  sa::write_file(dir / "cut.zst", z);
  EXPECT_THROW(count_file(dir / "cut.zst", sa::DumpFormat::kNdjsonZstd), sa::IoError);
  EXPECT_THROW(count_file(dir / "missing.ndjson", sa::DumpFormat::kNdjson), sa::IoError);
}

TEST(RecordStream, EmptyFile) {
  sa::testing::TempDir dir("ingest");
  sa::write_file(dir / "e.ndjson", "");
  const auto r = count_file(dir / "e.ndjson", sa::DumpFormat::kNdjson);
  EXPECT_TRUE(r.counts.empty());
  EXPECT_EQ(r.stats.physical_lines, 0u);
}

TEST(ExtractField, DottedPathsAndScalars) {
  const auto j = sa::Json::parse(R"({"user":{"name":"ann","id":42,"bot":false},"tags":["a"]})");
  EXPECT_EQ(*sa::extract_string(j, "user.name"), "ann");
  EXPECT_EQ(*sa::extract_string(j, "user.id"), "42");
  EXPECT_EQ(*sa::extract_string(j, "user.bot"), "false");
  EXPECT_FALSE(sa::extract_string(j, "user.missing"));
  EXPECT_FALSE(sa::extract_string(j, "user.name.more"));
  EXPECT_FALSE(sa::extract_string(j, "tags"));
}

// Property: splitting a dump into shards and merging equals one pass, and
// every physical line is either a record or corrupt.
TEST(CountShards, MergeEqualsSinglePass) {
  std::mt19937_64 gen(77);
  const char* subs[] = {"a", "b", "c", "d", "e", "f"};
  for (int trial = 0; trial < 10; ++trial) {
    sa::testing::TempDir dir("shard");
    std::vector<std::string> lines;
    const int n = 50 + static_cast<int>(gen() % 200);
    for (int i = 0; i < n; ++i) {
      if (gen() % 13 == 0) {
        lines.push_back("{oops");
      } else {
        lines.push_back(std::string("{\"subreddit\":\"") + subs[gen() % 6] + "\"}");
      }
    }
    std::string all;
    for (const auto& l : lines) all += l + "\n";
    sa::write_file(dir / "all.ndjson", all);
    const int shards = 1 + static_cast<int>(gen() % 5);
    std::vector<fs::path> paths;
    for (int s = 0; s < shards; ++s) {
      std::string part;
      for (int i = s; i < n; i += shards) part += lines[static_cast<std::size_t>(i)] + "\n";
      paths.push_back(dir / ("s" + std::to_string(s) + ".ndjson"));
      sa::write_file(paths.back(), part);
    }
    const auto one = count_file(dir / "all.ndjson", sa::DumpFormat::kNdjson);
    const auto merged = sa::count_shards(paths, sa::DumpFormat::kNdjson,
                                         sa::RecordSchema::kRedditPost, sa::field_extractor("subreddit"));
    EXPECT_EQ(one.counts, merged.counts);
    EXPECT_EQ(one.stats.physical_lines, merged.stats.physical_lines);
    EXPECT_EQ(merged.stats.records + merged.stats.corrupt_lines, merged.stats.physical_lines);
    EXPECT_EQ(one.stats.corrupt_lines, merged.stats.corrupt_lines);
  }
}

long peak_rss_kb() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) return std::stol(line.substr(6));
  }
  return -1;
}

// One million records stream through a fixed buffer; peak memory must not
// grow with the input size.
TEST(RecordStream, MillionLineSoakStaysBounded) {
  sa::testing::TempDir dir("soak");
  const auto path = dir / "big.ndjson";
  {
    std::string chunk;
    for (int i = 0; i < 1000; ++i) {
      chunk += "{\"subreddit\":\"s" + std::to_string(i % 97) + "\",\"title\":\"t" + std::to_string(i) + "\"}\n";
    }
    std::ofstream out(path, std::ios::binary);
    for (int i = 0; i < 1000; ++i) out << chunk;
  }
  const long before = peak_rss_kb();
  const auto r = count_file(path, sa::DumpFormat::kNdjson);
  const long after = peak_rss_kb();
  EXPECT_EQ(r.stats.records, 1000000u);
  EXPECT_EQ(r.counts.size(), 97u);
  EXPECT_EQ(r.counts.total(), 1000000u);
  if (before > 0) {
    EXPECT_LT(after - before, 16 * 1024) << "peak RSS grew by " << (after - before) << " KiB";
  }
}

}  // namespace
