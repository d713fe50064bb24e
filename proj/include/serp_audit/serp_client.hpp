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

// Site-restricted query construction and collection. A query is issued
// `repetitions` times; every repetition is cached under its own key and the
// results are combined into one SerpResultSet.

#ifndef SERP_AUDIT_SERP_CLIENT_HPP_
#define SERP_AUDIT_SERP_CLIENT_HPP_

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "serp_audit/errors.hpp"
#include "serp_audit/hash.hpp"
#include "serp_audit/text.hpp"
#include "serp_audit/token_counts.hpp"

namespace serp_audit {

using Date = std::chrono::year_month_day;

inline Date parse_date(std::string_view s) {
  s = text::trim(s);
  std::uint64_t y = 0, m = 0, d = 0;
  const auto parts = text::split(s, '-');
  if (parts.size() != 3 || parts[0].size() != 4 || parts[1].size() != 2 ||
      parts[2].size() != 2 || !text::parse_u64(parts[0], y) ||
      !text::parse_u64(parts[1], m) || !text::parse_u64(parts[2], d)) {
    throw ArgumentError("invalid date '" + std::string(s) + "', expected YYYY-MM-DD");
  }
  const Date date{std::chrono::year(static_cast<int>(y)),
                  std::chrono::month(static_cast<unsigned>(m)),
                  std::chrono::day(static_cast<unsigned>(d))};
  if (!date.ok()) throw ArgumentError("invalid calendar date '" + std::string(s) + "'");
  return date;
}

inline std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

enum class Engine { kGoogle, kFixture };

inline std::string engine_name(Engine e) {
  return e == Engine::kGoogle ? "google" : "fixture";
}

inline Engine parse_engine(std::string_view name) {
  if (name == "google") return Engine::kGoogle;
  if (name == "fixture") return Engine::kFixture;
  throw ConfigError("unknown engine '" + std::string(name) + "'");
}

struct SerpQuerySpec {
  std::string keyword;
  std::string site_filter;
  Date date_from;
  Date date_to;
  Engine engine = Engine::kGoogle;
  int repetitions = 3;
  int pages = 1;

  // `site:{site} {keyword}`
  std::string query() const { return "site:" + site_filter + " " + keyword; }
  std::string window() const { return format_date(date_from) + ".." + format_date(date_to); }

  friend bool operator==(const SerpQuerySpec&, const SerpQuerySpec&) = default;
};

inline SerpQuerySpec build_query(std::string_view keyword, std::string_view site,
                                 Date date_from, Date date_to,
                                 Engine engine = Engine::kGoogle,
                                 int repetitions = 3, int pages = 1) {
  const std::string_view kw = text::trim(keyword);
  if (kw.empty()) throw ArgumentError("keyword is empty");
  const std::string_view st = text::trim(site);
  if (st.empty()) throw ArgumentError("site filter is empty");
  if (date_from > date_to) {
    throw ArgumentError("date window is inverted: " + format_date(date_from) +
                        " > " + format_date(date_to));
  }
  if (repetitions < 1) throw ArgumentError("repetitions must be >= 1");
  if (pages < 1) throw ArgumentError("pages must be >= 1");
  return SerpQuerySpec{std::string(kw), text::to_lower(st), date_from, date_to,
                       engine,          repetitions,       pages};
}

struct SerpItem {
  std::string url;
  std::string title;
  std::string snippet;
  int position = 0;
  int repetition = 0;
  int page = 0;

  friend bool operator==(const SerpItem&, const SerpItem&) = default;
};

struct RepetitionFailure {
  int repetition = 0;
  std::string message;

  friend bool operator==(const RepetitionFailure&, const RepetitionFailure&) = default;
};

// Host part of an absolute URL, lowercased, without port or credentials.
inline std::string url_host(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme != std::string_view::npos) url.remove_prefix(scheme + 3);
  const auto end = url.find_first_of("/?#");
  std::string_view authority = url.substr(0, end);
  if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
    authority.remove_prefix(at + 1);
  }
  if (const auto colon = authority.find(':'); colon != std::string_view::npos) {
    authority = authority.substr(0, colon);
  }
  return text::to_lower(authority);
}

inline bool host_matches_site(std::string_view host, std::string_view site) {
  if (host == site) return true;
  return host.size() > site.size() && host.ends_with(site) &&
         host[host.size() - site.size() - 1] == '.';
}

struct SerpResultSet {
  SerpQuerySpec spec;
  // Items of every repetition, in (repetition, page, position) order.
  std::vector<SerpItem> items;
  // Milliseconds since the epoch at which each repetition's response was
  // obtained from the transport; 0 when the repetition failed.
  std::vector<std::int64_t> fetched_at;
  std::vector<RepetitionFailure> failures;
  std::size_t off_site_dropped = 0;

  // First occurrence of every URL.
  std::vector<SerpItem> unique_items() const {
    std::set<std::string_view> seen;
    std::vector<SerpItem> out;
    for (const auto& it : items) {
      if (seen.insert(it.url).second) out.push_back(it);
    }
    return out;
  }

  std::set<std::string> unique_urls() const {
    std::set<std::string> urls;
    for (const auto& it : items) urls.insert(it.url);
    return urls;
  }

  std::size_t repetition_size(int rep) const {
    std::set<std::string_view> urls;
    for (const auto& it : items) {
      if (it.repetition == rep) urls.insert(it.url);
    }
    return urls.size();
  }

  friend bool operator==(const SerpResultSet&, const SerpResultSet&) = default;
};

// ---------------------------------------------------------------------------
// Transport

struct SerpRequest {
  const SerpQuerySpec& spec;
  int repetition = 0;
  int page = 0;
};

struct RawResponse {
  int status = 200;
  std::string body;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

// Implementations must be safe to call from several threads when used with
// fetch_all.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual RawResponse send(const SerpRequest& request) = 0;
};

class CallbackTransport final : public Transport {
 public:
  using Fn = std::function<RawResponse(const SerpRequest&)>;
  explicit CallbackTransport(Fn fn) : fn_(std::move(fn)) {}
  RawResponse send(const SerpRequest& request) override {
    ++calls_;
    return fn_(request);
  }
  std::size_t calls() const { return calls_.load(); }

 private:
  Fn fn_;
  std::atomic<std::size_t> calls_{0};
};

struct OrganicResult {
  std::string link;
  std::string title;
  std::string snippet;
};

// Response body in the `organic_results` layout used by SERP APIs.
inline std::string render_page(const std::vector<OrganicResult>& results) {
  nlohmann::ordered_json page;
  page["organic_results"] = nlohmann::ordered_json::array();
  int pos = 1;
  for (const auto& r : results) {
    page["organic_results"].push_back(
        {{"position", pos++}, {"link", r.link}, {"title", r.title}, {"snippet", r.snippet}});
  }
  return page.dump();
}

inline std::vector<SerpItem> parse_page(std::string_view body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (!j.is_object()) throw DataError("response body is not a JSON object");
  std::vector<SerpItem> items;
  const auto it = j.find("organic_results");
  if (it == j.end()) return items;
  if (!it->is_array()) throw DataError("organic_results is not an array");
  int fallback = 0;
  for (const auto& r : *it) {
    ++fallback;
    if (!r.is_object() || !r.contains("link") || !r["link"].is_string()) continue;
    SerpItem item;
    item.url = r["link"].get<std::string>();
    item.title = r.value("title", std::string{});
    item.snippet = r.value("snippet", std::string{});
    item.position = r.value("position", fallback);
    items.push_back(std::move(item));
  }
  return items;
}

// Deterministic playback transport. The fixture maps a rendered query to a
// list of per-repetition result lists; repetition r uses entry r modulo the
// list length and unknown queries return an empty page.
class FixtureTransport final : public Transport {
 public:
  using Table = std::map<std::string, std::vector<std::vector<OrganicResult>>, std::less<>>;

  FixtureTransport() = default;
  explicit FixtureTransport(Table table) : table_(std::move(table)) {}
  FixtureTransport(FixtureTransport&& other) noexcept
      : table_(std::move(other.table_)), calls_(other.calls_.load()) {}

  static FixtureTransport from_json(const nlohmann::json& j) {
    Table table;
    const auto& queries = j.contains("queries") ? j.at("queries") : j;
    if (!queries.is_object()) throw DataError("fixture: expected an object of queries");
    for (const auto& [query, reps] : queries.items()) {
      auto& dst = table[query];
      for (const auto& rep : reps) {
        std::vector<OrganicResult> rows;
        for (const auto& r : rep) {
          rows.push_back({r.value("link", std::string{}), r.value("title", std::string{}),
                          r.value("snippet", std::string{})});
        }
        dst.push_back(std::move(rows));
      }
    }
    return FixtureTransport(std::move(table));
  }

  static FixtureTransport from_file(const std::filesystem::path& path) {
    auto j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw DataError("fixture " + path.string() + " is not valid JSON");
    return from_json(j);
  }

  void set(std::string query, std::vector<std::vector<OrganicResult>> reps) {
    table_[std::move(query)] = std::move(reps);
  }

  RawResponse send(const SerpRequest& request) override {
    ++calls_;
    const auto it = table_.find(request.spec.query());
    if (it == table_.end() || it->second.empty() || request.page > 0) {
      return {200, render_page({})};
    }
    const auto& reps = it->second;
    return {200, render_page(reps[static_cast<std::size_t>(request.repetition) % reps.size()])};
  }

  std::size_t calls() const { return calls_.load(); }

 private:
  Table table_;
  std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Time, rate limiting, retry

class Clock {
 public:
  using Duration = std::chrono::nanoseconds;
  virtual ~Clock() = default;
  // Monotonic time used for pacing.
  virtual Duration now() = 0;
  virtual void sleep_for(Duration d) = 0;
  // Wall-clock milliseconds since the epoch, recorded as fetch provenance.
  virtual std::int64_t wall_ms() = 0;
};

class SystemClock final : public Clock {
 public:
  Duration now() override {
    return std::chrono::duration_cast<Duration>(
        std::chrono::steady_clock::now().time_since_epoch());
  }
  void sleep_for(Duration d) override {
    if (d > Duration::zero()) std::this_thread::sleep_for(d);
  }
  std::int64_t wall_ms() override {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  }
};

// Sleeping advances virtual time instantly; every sleep is logged.
class FakeClock final : public Clock {
 public:
  explicit FakeClock(Duration start = Duration::zero()) : now_(start) {}
  Duration now() override {
    std::lock_guard lock(mu_);
    return now_;
  }
  void sleep_for(Duration d) override {
    std::lock_guard lock(mu_);
    if (d > Duration::zero()) now_ += d;
    sleeps_.push_back(d);
  }
  std::int64_t wall_ms() override {
    std::lock_guard lock(mu_);
    return std::chrono::duration_cast<std::chrono::milliseconds>(now_).count();
  }
  void advance(Duration d) {
    std::lock_guard lock(mu_);
    now_ += d;
  }
  std::vector<Duration> sleeps() const {
    std::lock_guard lock(mu_);
    return sleeps_;
  }

 private:
  mutable std::mutex mu_;
  Duration now_;
  std::vector<Duration> sleeps_;
};

// Spaces request starts at least 1/rps apart across all callers. A
// nonpositive rate disables limiting.
class RateLimiter {
 public:
  RateLimiter(double rps, Clock& clock) : clock_(clock) {
    if (rps > 0) {
      interval_ = std::chrono::duration_cast<Clock::Duration>(
          std::chrono::duration<double>(1.0 / rps));
    }
  }

  // Blocks until the caller may issue a request; returns the granted slot.
  Clock::Duration acquire() {
    Clock::Duration slot;
    {
      std::lock_guard lock(mu_);
      const auto now = clock_.now();
      slot = (started_ && next_ > now) ? next_ : now;
      next_ = slot + interval_;
      started_ = true;
      grants_.push_back(slot);
    }
    const auto wait = slot - clock_.now();
    if (wait > Clock::Duration::zero()) clock_.sleep_for(wait);
    return slot;
  }

  Clock::Duration interval() const { return interval_; }
  std::vector<Clock::Duration> grants() const {
    std::lock_guard lock(mu_);
    return grants_;
  }

 private:
  Clock& clock_;
  Clock::Duration interval_{0};
  mutable std::mutex mu_;
  Clock::Duration next_{0};
  bool started_ = false;
  std::vector<Clock::Duration> grants_;
};

struct RetryPolicy {
  int max_retries = 4;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{30000};

  std::chrono::milliseconds backoff(int attempt) const {
    auto d = initial_backoff;
    for (int i = 0; i < attempt && d < max_backoff; ++i) d *= 2;
    return std::min(d, max_backoff);
  }
};

inline bool is_retryable_status(int status) {
  return status == 429 || (status >= 500 && status <= 599);
}

// ---------------------------------------------------------------------------
// Cache

struct CacheKey {
  Engine engine = Engine::kGoogle;
  std::string query;
  std::string window;
  int repetition = 0;
  int page = 0;

  // sha256(query|window|rep); the page joins the digest only past page 0 so
  // single-page layouts stay `{engine}/{sha256(query|window|rep)}.json`.
  std::string digest() const {
    std::string material = query + "|" + window + "|" + std::to_string(repetition);
    if (page > 0) material += "|" + std::to_string(page);
    return sha256_hex(material);
  }
};

inline CacheKey cache_key(const SerpQuerySpec& spec, int repetition, int page = 0) {
  return {spec.engine, spec.query(), spec.window(), repetition, page};
}

// Content-addressed store of raw response bytes. Writes go through a
// uniquely named temporary file and a rename, so concurrent writers of
// distinct keys never observe partial entries.
class CacheStore {
 public:
  explicit CacheStore(std::filesystem::path root) : root_(std::move(root)) {}

  std::filesystem::path path_for(const CacheKey& key) const {
    return root_ / engine_name(key.engine) / (key.digest() + ".json");
  }

  std::optional<std::string> get(const CacheKey& key) const {
    const auto p = path_for(key);
    if (!std::filesystem::exists(p)) return std::nullopt;
    return read_file(p);
  }

  void put(const CacheKey& key, std::string_view bytes, std::int64_t fetched_at = 0) {
    const auto p = path_for(key);
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create cache directory " + p.parent_path().string());
    write_atomic(p, bytes);
    write_atomic(meta_path(p), nlohmann::json{{"fetched_at", fetched_at},
                                              {"query", key.query},
                                              {"window", key.window},
                                              {"repetition", key.repetition},
                                              {"page", key.page}}
                                   .dump());
  }

  std::int64_t fetched_at(const CacheKey& key) const {
    const auto m = meta_path(path_for(key));
    if (!std::filesystem::exists(m)) return 0;
    const auto j = nlohmann::json::parse(read_file(m), nullptr, false);
    return j.is_object() ? j.value("fetched_at", std::int64_t{0}) : 0;
  }

  const std::filesystem::path& root() const { return root_; }

 private:
  static std::filesystem::path meta_path(std::filesystem::path p) {
    p.replace_extension(".meta");
    return p;
  }

  void write_atomic(const std::filesystem::path& p, std::string_view bytes) {
    static std::atomic<std::uint64_t> counter{0};
    auto tmp = p;
    tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) +
           "." + std::to_string(counter++);
    write_file(tmp, bytes);
    std::error_code ec;
    std::filesystem::rename(tmp, p, ec);
    if (ec) {
      std::filesystem::remove(tmp, ec);
      throw IoError("cannot publish cache entry " + p.string());
    }
  }

  std::filesystem::path root_;
};

// ---------------------------------------------------------------------------
// Fetch

enum class CacheMode { kReadWrite, kRefresh, kOff };

struct FetchStats {
  std::size_t requests = 0;  // transport calls, retries included
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::size_t retries = 0;
  std::size_t failed_repetitions = 0;

  FetchStats& operator+=(const FetchStats& o) {
    requests += o.requests;
    cache_hits += o.cache_hits;
    cache_misses += o.cache_misses;
    retries += o.retries;
    failed_repetitions += o.failed_repetitions;
    return *this;
  }
};

struct FetchContext {
  Transport& transport;
  CacheStore* cache = nullptr;
  CacheMode cache_mode = CacheMode::kReadWrite;
  RateLimiter* limiter = nullptr;
  Clock* clock = nullptr;
  RetryPolicy retry;
};

namespace detail {

inline Clock& default_clock() {
  static SystemClock clock;
  return clock;
}

// One page of one repetition: cache first, then the transport with backoff.
// Returns the body or throws FetchError describing the last failure.
inline std::string fetch_page(const SerpQuerySpec& spec, int rep, int page,
                              FetchContext& ctx, FetchStats& stats,
                              std::int64_t& fetched_at) {
  Clock& clock = ctx.clock ? *ctx.clock : default_clock();
  const CacheKey key = cache_key(spec, rep, page);
  if (ctx.cache && ctx.cache_mode == CacheMode::kReadWrite) {
    if (auto hit = ctx.cache->get(key)) {
      ++stats.cache_hits;
      fetched_at = ctx.cache->fetched_at(key);
      return *std::move(hit);
    }
  }
  if (ctx.cache && ctx.cache_mode != CacheMode::kOff) ++stats.cache_misses;

  std::string last_error;
  for (int attempt = 0; attempt <= ctx.retry.max_retries; ++attempt) {
    if (attempt > 0) {
      ++stats.retries;
      clock.sleep_for(ctx.retry.backoff(attempt - 1));
    }
    if (ctx.limiter) ctx.limiter->acquire();
    ++stats.requests;
    RawResponse resp;
    try {
      resp = ctx.transport.send(SerpRequest{spec, rep, page});
    } catch (const std::exception& e) {
      last_error = e.what();
      continue;
    }
    if (resp.status == 200) {
      parse_page(resp.body);  // reject malformed bodies before caching
      fetched_at = clock.wall_ms();
      if (ctx.cache && ctx.cache_mode != CacheMode::kOff) {
        ctx.cache->put(key, resp.body, fetched_at);
      }
      return std::move(resp.body);
    }
    last_error = "HTTP " + std::to_string(resp.status);
    if (!is_retryable_status(resp.status)) break;
  }
  throw FetchError(last_error.empty() ? "request failed" : last_error);
}

}  // namespace detail

// Runs every repetition of `spec` and combines the results. A failed
// repetition is recorded and the others proceed; FetchError only when all
// repetitions failed. Items whose host is outside the site filter are dropped.
inline SerpResultSet fetch(const SerpQuerySpec& spec, FetchContext& ctx,
                           FetchStats* stats_out = nullptr) {
  if (spec.repetitions < 1) throw ArgumentError("repetitions must be >= 1");
  FetchStats stats;
  SerpResultSet result;
  result.spec = spec;
  result.fetched_at.assign(static_cast<std::size_t>(spec.repetitions), 0);
  for (int rep = 0; rep < spec.repetitions; ++rep) {
    try {
      std::vector<SerpItem> rep_items;
      std::int64_t stamp = 0;
      for (int page = 0; page < spec.pages; ++page) {
        std::int64_t page_stamp = 0;
        const std::string body = detail::fetch_page(spec, rep, page, ctx, stats, page_stamp);
        if (page == 0) stamp = page_stamp;
        for (auto& item : parse_page(body)) {
          item.repetition = rep;
          item.page = page;
          rep_items.push_back(std::move(item));
        }
      }
      result.fetched_at[static_cast<std::size_t>(rep)] = stamp;
      for (auto& item : rep_items) {
        if (!host_matches_site(url_host(item.url), spec.site_filter)) {
          ++result.off_site_dropped;
          continue;
        }
        result.items.push_back(std::move(item));
      }
    } catch (const Error& e) {
      ++stats.failed_repetitions;
      result.failures.push_back({rep, e.what()});
    }
  }
  if (stats_out) *stats_out += stats;
  if (static_cast<int>(result.failures.size()) == spec.repetitions) {
    throw FetchError("all " + std::to_string(spec.repetitions) +
                     " repetitions failed for '" + spec.query() +
                     "': " + result.failures.back().message);
  }
  return result;
}

// Fetches many specs on `workers` threads; output order matches input order.
// Specs whose every repetition failed come back with only failures recorded.
inline std::vector<SerpResultSet> fetch_all(const std::vector<SerpQuerySpec>& specs,
                                            FetchContext& ctx, FetchStats* stats_out = nullptr,
                                            unsigned workers = 1) {
  std::vector<SerpResultSet> out(specs.size());
  std::vector<FetchStats> per(specs.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      try {
        out[i] = fetch(specs[i], ctx, &per[i]);
      } catch (const FetchError& e) {
        out[i].spec = specs[i];
        out[i].fetched_at.assign(static_cast<std::size_t>(specs[i].repetitions), 0);
        for (int r = 0; r < specs[i].repetitions; ++r) out[i].failures.push_back({r, e.what()});
        per[i].failed_repetitions += static_cast<std::size_t>(specs[i].repetitions);
      }
    }
  };
  workers = std::max(1u, workers);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (stats_out) {
    for (const auto& s : per) *stats_out += s;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization: one result set per JSON line.

inline nlohmann::ordered_json to_json(const SerpResultSet& r) {
  nlohmann::ordered_json j;
  j["keyword"] = r.spec.keyword;
  j["site"] = r.spec.site_filter;
  j["query"] = r.spec.query();
  j["date_from"] = format_date(r.spec.date_from);
  j["date_to"] = format_date(r.spec.date_to);
  j["engine"] = engine_name(r.spec.engine);
  j["repetitions"] = r.spec.repetitions;
  j["pages"] = r.spec.pages;
  j["fetched_at"] = r.fetched_at;
  j["off_site_dropped"] = r.off_site_dropped;
  auto& items = j["items"] = nlohmann::ordered_json::array();
  for (const auto& it : r.items) {
    items.push_back({{"url", it.url},
                     {"title", it.title},
                     {"snippet", it.snippet},
                     {"position", it.position},
                     {"repetition", it.repetition},
                     {"page", it.page}});
  }
  auto& fails = j["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : r.failures) fails.push_back({{"repetition", f.repetition}, {"message", f.message}});
  return j;
}

inline SerpResultSet result_set_from_json(const nlohmann::json& j) {
  SerpResultSet r;
  r.spec.keyword = j.at("keyword").get<std::string>();
  r.spec.site_filter = j.at("site").get<std::string>();
  r.spec.date_from = parse_date(j.at("date_from").get<std::string>());
  r.spec.date_to = parse_date(j.at("date_to").get<std::string>());
  r.spec.engine = parse_engine(j.value("engine", std::string("google")));
  r.spec.repetitions = j.value("repetitions", 1);
  r.spec.pages = j.value("pages", 1);
  r.fetched_at = j.value("fetched_at", std::vector<std::int64_t>{});
  r.off_site_dropped = j.value("off_site_dropped", std::size_t{0});
  for (const auto& it : j.at("items")) {
    r.items.push_back({it.at("url").get<std::string>(), it.value("title", std::string{}),
                       it.value("snippet", std::string{}), it.value("position", 0),
                       it.value("repetition", 0), it.value("page", 0)});
  }
  if (j.contains("failures")) {
    for (const auto& f : j.at("failures")) {
      r.failures.push_back({f.value("repetition", 0), f.value("message", std::string{})});
    }
  }
  return r;
}

inline void write_result_sets(const std::filesystem::path& path,
                              const std::vector<SerpResultSet>& sets) {
  std::string out;
  for (const auto& s : sets) out += to_json(s).dump() + "\n";
  write_file(path, out);
}

inline std::vector<SerpResultSet> read_result_sets(const std::filesystem::path& path) {
  std::vector<SerpResultSet> sets;
  std::size_t line_no = 0;
  const std::string data = read_file(path);
  for (std::string_view line : text::split(data, '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (!j.is_object()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": not a JSON object");
    }
    try {
      sets.push_back(result_set_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return sets;
}

}  // namespace serp_audit

#endif  // SERP_AUDIT_SERP_CLIENT_HPP_
