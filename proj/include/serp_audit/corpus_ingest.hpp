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

// Streaming ingestion of line-delimited JSON dumps. Files are read through a
// fixed-size buffer so memory stays proportional to the longest line plus the
// number of distinct entities, never to the file size.

#ifndef SERP_AUDIT_CORPUS_INGEST_HPP_
#define SERP_AUDIT_CORPUS_INGEST_HPP_

#include <zlib.h>
#include <zstd.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <future>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "serp_audit/errors.hpp"
#include "serp_audit/text.hpp"
#include "serp_audit/token_counts.hpp"

namespace serp_audit {

using Json = nlohmann::json;

enum class DumpFormat { kNdjson, kNdjsonGzip, kNdjsonZstd };
enum class RecordSchema { kRedditPost, kRedditComment, kTweet, kGeneric };

inline DumpFormat format_from_path(const std::filesystem::path& path) {
  const std::string ext = text::to_lower(path.extension().string());
  if (ext == ".gz") return DumpFormat::kNdjsonGzip;
  if (ext == ".zst" || ext == ".zstd") return DumpFormat::kNdjsonZstd;
  return DumpFormat::kNdjson;
}

// Accepts the enum spellings plus "auto" (decided by file extension).
inline DumpFormat parse_format(std::string_view name,
                               const std::filesystem::path& path = {}) {
  if (name == "ndjson") return DumpFormat::kNdjson;
  if (name == "ndjson_gzip" || name == "gzip") return DumpFormat::kNdjsonGzip;
  if (name == "ndjson_zstd" || name == "zstd") return DumpFormat::kNdjsonZstd;
  if (name == "auto") return format_from_path(path);
  throw ConfigError("unknown dump format '" + std::string(name) + "'");
}

inline RecordSchema parse_schema(std::string_view name) {
  if (name == "reddit_post") return RecordSchema::kRedditPost;
  if (name == "reddit_comment") return RecordSchema::kRedditComment;
  if (name == "tweet") return RecordSchema::kTweet;
  if (name == "generic") return RecordSchema::kGeneric;
  throw ConfigError("unknown record schema '" + std::string(name) + "'");
}

// Default field paths per schema; config may override either.
struct SchemaFields {
  std::string entity_field;
  std::vector<std::string> text_fields;
};

inline SchemaFields default_fields(RecordSchema schema) {
  switch (schema) {
    case RecordSchema::kRedditPost:
      return {"subreddit", {"title"}};
    case RecordSchema::kRedditComment:
      return {"subreddit", {"body"}};
    case RecordSchema::kTweet:
      return {"", {"text"}};
    case RecordSchema::kGeneric:
      break;
  }
  return {};
}

namespace detail {

class ByteSource {
 public:
  virtual ~ByteSource() = default;
  // Returns bytes read; 0 at end of input.
  virtual std::size_t read(char* buf, std::size_t cap) = 0;
};

class PlainSource final : public ByteSource {
 public:
  explicit PlainSource(const std::filesystem::path& path)
      : file_(std::fopen(path.c_str(), "rb"), &std::fclose) {
    if (!file_) throw IoError("cannot open " + path.string());
  }
  std::size_t read(char* buf, std::size_t cap) override {
    const std::size_t n = std::fread(buf, 1, cap, file_.get());
    if (n == 0 && std::ferror(file_.get())) throw IoError("read error");
    return n;
  }

 private:
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file_;
};

class GzipSource final : public ByteSource {
 public:
  explicit GzipSource(const std::filesystem::path& path)
      : file_(gzopen(path.c_str(), "rb")), path_(path.string()) {
    if (file_ == nullptr) throw IoError("cannot open " + path_);
    gzbuffer(file_, 1 << 16);
    // gzread passes non-gzip input through untouched; reject it instead.
    char probe = 0;
    const int n = gzread(file_, &probe, 1);
    if (n == 1 && gzdirect(file_)) {
      gzclose(file_);
      file_ = nullptr;
      throw IoError(path_ + " is not gzip-compressed");
    }
    if (n == 1) pending_ = probe;
  }
  ~GzipSource() override {
    if (file_ != nullptr) gzclose(file_);
  }
  GzipSource(const GzipSource&) = delete;
  GzipSource& operator=(const GzipSource&) = delete;

  std::size_t read(char* buf, std::size_t cap) override {
    if (cap == 0) return 0;
    std::size_t off = 0;
    if (pending_) {
      buf[0] = *pending_;
      pending_.reset();
      off = 1;
    }
    const int n = gzread(file_, buf + off, static_cast<unsigned>(cap - off));
    if (n < 0) {
      int errnum = 0;
      throw IoError(path_ + ": " + gzerror(file_, &errnum));
    }
    return off + static_cast<std::size_t>(n);
  }

 private:
  gzFile file_;
  std::string path_;
  std::optional<char> pending_;
};

inline bool has_zstd_magic(const char* p) {
  std::uint32_t m = 0;
  for (int i = 3; i >= 0; --i) m = (m << 8) | static_cast<unsigned char>(p[i]);
  return m == ZSTD_MAGICNUMBER;
}

class ZstdSource final : public ByteSource {
 public:
  explicit ZstdSource(const std::filesystem::path& path)
      : file_(path), dctx_(ZSTD_createDStream(), &ZSTD_freeDStream),
        path_(path.string()) {
    if (!dctx_) throw IoError("zstd: cannot allocate stream");
    ZSTD_initDStream(dctx_.get());
    in_buf_.resize(ZSTD_DStreamInSize());
    in_ = {in_buf_.data(), 0, 0};
  }

  std::size_t read(char* buf, std::size_t cap) override {
    ZSTD_outBuffer out{buf, cap, 0};
    while (out.pos == 0) {
      if (in_.pos == in_.size) {
        in_.size = file_.read(in_buf_.data(), in_buf_.size());
        in_.pos = 0;
        if (in_.size == 0) {
          if (!frame_done_) throw IoError(path_ + ": truncated zstd stream");
          return 0;
        }
        if (!magic_checked_) {
          magic_checked_ = true;
          if (in_.size < 4 || !has_zstd_magic(in_buf_.data())) {
            throw IoError(path_ + " is not zstd-compressed");
          }
        }
      }
      const std::size_t ret = ZSTD_decompressStream(dctx_.get(), &out, &in_);
      if (ZSTD_isError(ret)) {
        throw IoError(path_ + ": " + ZSTD_getErrorName(ret));
      }
      frame_done_ = (ret == 0);
    }
    return out.pos;
  }

 private:
  PlainSource file_;
  std::unique_ptr<ZSTD_DStream, std::size_t (*)(ZSTD_DStream*)> dctx_;
  std::vector<char> in_buf_;
  ZSTD_inBuffer in_{};
  bool magic_checked_ = false;
  bool frame_done_ = true;
  std::string path_;
};

}  // namespace detail

// Splits a byte source into lines through a fixed 64 KiB buffer.
class LineReader {
 public:
  LineReader(const std::filesystem::path& path, DumpFormat format) {
    if (!std::filesystem::exists(path)) {
      throw IoError("no such file: " + path.string());
    }
    switch (format) {
      case DumpFormat::kNdjson:
        source_ = std::make_unique<detail::PlainSource>(path);
        break;
      case DumpFormat::kNdjsonGzip:
        source_ = std::make_unique<detail::GzipSource>(path);
        break;
      case DumpFormat::kNdjsonZstd:
        source_ = std::make_unique<detail::ZstdSource>(path);
        break;
    }
    buf_.resize(kBufferSize);
  }

  // Next physical line without its terminator; false at end of input. A
  // final line without a trailing newline still counts.
  bool next(std::string& line) {
    line.clear();
    bool have_data = false;
    while (true) {
      if (pos_ == len_) {
        if (eof_) return have_data;
        len_ = source_->read(buf_.data(), buf_.size());
        pos_ = 0;
        if (len_ == 0) {
          eof_ = true;
          return have_data;
        }
      }
      have_data = true;
      const char* begin = buf_.data() + pos_;
      const char* end = buf_.data() + len_;
      const auto* nl = static_cast<const char*>(
          std::memchr(begin, '\n', static_cast<std::size_t>(end - begin)));
      if (nl == nullptr) {
        line.append(begin, end);
        pos_ = len_;
        continue;
      }
      line.append(begin, nl);
      pos_ = static_cast<std::size_t>(nl - buf_.data()) + 1;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
  }

 private:
  static constexpr std::size_t kBufferSize = 1 << 16;

  std::unique_ptr<detail::ByteSource> source_;
  std::vector<char> buf_;
  std::size_t pos_ = 0;
  std::size_t len_ = 0;
  bool eof_ = false;
};

struct Record {
  Json value;
  std::size_t line_number = 0;
};

struct StreamStats {
  std::size_t physical_lines = 0;
  std::size_t records = 0;
  std::size_t corrupt_lines = 0;
  // First few offending line numbers, for the warning report.
  std::vector<std::size_t> corrupt_examples;
};

// Single-consumer iterator over the JSON objects of a dump. Lines that fail to
// parse, or parse to something other than an object, are counted as corrupt
// and skipped.
class RecordStream {
 public:
  RecordStream(std::filesystem::path path, DumpFormat format, RecordSchema schema)
      : path_(std::move(path)), format_(format), schema_(schema),
        reader_(path_, format_) {}

  std::optional<Record> next() {
    while (reader_.next(line_)) {
      ++stats_.physical_lines;
      Json value = Json::parse(line_, nullptr, /*allow_exceptions=*/false);
      if (value.is_object()) {
        ++stats_.records;
        return Record{std::move(value), stats_.physical_lines};
      }
      ++stats_.corrupt_lines;
      if (stats_.corrupt_examples.size() < kMaxExamples) {
        stats_.corrupt_examples.push_back(stats_.physical_lines);
      }
    }
    return std::nullopt;
  }

  const StreamStats& stats() const { return stats_; }
  const std::filesystem::path& path() const { return path_; }
  DumpFormat format() const { return format_; }
  RecordSchema schema() const { return schema_; }

 private:
  static constexpr std::size_t kMaxExamples = 10;

  std::filesystem::path path_;
  DumpFormat format_;
  RecordSchema schema_;
  LineReader reader_;
  std::string line_;
  StreamStats stats_;
};

inline RecordStream open_stream(const std::filesystem::path& path,
                                DumpFormat format, RecordSchema schema) {
  return RecordStream(path, format, schema);
}

// Value at a dotted path, or nullopt as soon as a segment is missing or the
// current value is not an object.
inline std::optional<Json> extract_field(const Json& record,
                                         std::string_view field_path) {
  const Json* cur = &record;
  for (std::string_view seg : text::split(field_path, '.')) {
    if (!cur->is_object()) return std::nullopt;
    const auto it = cur->find(seg);
    if (it == cur->end()) return std::nullopt;
    cur = &*it;
  }
  return std::optional<Json>(std::in_place, *cur);
}

// String form of a scalar field; numbers are rendered, null/objects are absent.
inline std::optional<std::string> extract_string(const Json& record,
                                                 std::string_view field_path) {
  const auto v = extract_field(record, field_path);
  if (!v) return std::nullopt;
  if (v->is_string()) return v->get<std::string>();
  if (v->is_number_integer()) return std::to_string(v->get<long long>());
  if (v->is_boolean()) return v->get<bool>() ? "true" : "false";
  return std::nullopt;
}

using EntityExtractor = std::function<void(const Json&, std::vector<std::string>&)>;

struct CountResult {
  TokenCounts counts;
  StreamStats stats;
};

// Drains the stream, counting every entity the extractor yields.
template <typename Extractor>
CountResult count_entities(RecordStream& stream, Extractor&& extractor,
                           std::string source_tag = {}) {
  CountResult result{TokenCounts(std::move(source_tag)), {}};
  std::vector<std::string> entities;
  while (auto record = stream.next()) {
    entities.clear();
    extractor(record->value, entities);
    for (const auto& e : entities) result.counts.add(e);
  }
  result.stats = stream.stats();
  return result;
}

inline StreamStats merge_stats(const StreamStats& a, const StreamStats& b) {
  StreamStats out = a;
  out.physical_lines += b.physical_lines;
  out.records += b.records;
  out.corrupt_lines += b.corrupt_lines;
  for (auto n : b.corrupt_examples) {
    if (out.corrupt_examples.size() < 10) out.corrupt_examples.push_back(n);
  }
  return out;
}

// Counts independent shard files concurrently and merges in shard order. The
// extractor must be safe to call from several threads.
inline CountResult count_shards(const std::vector<std::filesystem::path>& shards,
                                DumpFormat format, RecordSchema schema,
                                const EntityExtractor& extractor,
                                std::string source_tag = {}) {
  std::vector<std::future<CountResult>> jobs;
  jobs.reserve(shards.size());
  for (const auto& shard : shards) {
    jobs.push_back(std::async(std::launch::async, [&, shard] {
      RecordStream stream(shard, format, schema);
      return count_entities(stream, extractor);
    }));
  }
  CountResult total{TokenCounts(std::move(source_tag)), {}};
  for (auto& job : jobs) {
    CountResult part = job.get();
    total.counts = merge_counts(total.counts, part.counts);
    total.stats = merge_stats(total.stats, part.stats);
  }
  return total;
}

// Extractor for a single-valued entity field such as a subreddit name. A
// leading "r/" or "/r/" is dropped so corpus keys match URL-derived ones.
inline EntityExtractor field_extractor(std::string field_path) {
  return [field_path = std::move(field_path)](const Json& rec,
                                              std::vector<std::string>& out) {
    auto v = extract_string(rec, field_path);
    if (!v) return;
    std::string_view s = text::trim(*v);
    if (s.starts_with("/")) s.remove_prefix(1);
    if (s.size() > 2 && (s[0] == 'r' || s[0] == 'R') && s[1] == '/') s.remove_prefix(2);
    if (!s.empty()) out.emplace_back(s);
  };
}

}  // namespace serp_audit

#endif  // SERP_AUDIT_CORPUS_INGEST_HPP_
