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

// Helpers shared by the test suites: scratch directories, seeded random count
// tables and a direct-summation divergence oracle that shares no code with
// the library.

#ifndef SERP_AUDIT_TESTS_TEST_SUPPORT_HPP_
#define SERP_AUDIT_TESTS_TEST_SUPPORT_HPP_

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

namespace serp_audit::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("serp_audit_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

using Table = std::map<std::string, std::uint64_t>;

// Random table over entities "e0".."e{universe-1}". Small count ranges force
// ties; the universe size controls how much two tables overlap.
inline Table random_table(std::mt19937_64& gen, int max_entities, int universe,
                          std::uint64_t max_count) {
  std::uniform_int_distribution<int> n_dist(1, max_entities);
  std::uniform_int_distribution<int> e_dist(0, universe - 1);
  std::uniform_int_distribution<std::uint64_t> c_dist(1, max_count);
  Table t;
  const int n = n_dist(gen);
  for (int i = 0; i < n; ++i) t["e" + std::to_string(e_dist(gen))] = c_dist(gen);
  return t;
}

// O(n^2) fractional rank: 1 + (#strictly larger) + (#ties - 1) / 2.
inline std::map<std::string, double> oracle_ranks(const Table& t) {
  std::map<std::string, double> ranks;
  for (const auto& [e, c] : t) {
    double larger = 0, equal = 0;
    for (const auto& [f, d] : t) {
      if (d > c) larger += 1;
      if (d == c) equal += 1;
    }
    ranks[e] = 1 + larger + (equal - 1) / 2;
  }
  return ranks;
}

// Unnormalized sum over the union. Missing entities are appended to each
// system with count zero, which puts them in a tie below every present one.
inline double oracle_raw_sum(const Table& a, const Table& b, double alpha) {
  Table ea = a, eb = b;
  for (const auto& [e, c] : a) eb.emplace(e, 0);
  for (const auto& [e, c] : b) ea.emplace(e, 0);
  const auto ra = oracle_ranks(ea);
  const auto rb = oracle_ranks(eb);
  double sum = 0;
  for (const auto& [e, r] : ra) {
    const double d = std::abs(1.0 / std::pow(r, alpha) - 1.0 / std::pow(rb.at(e), alpha));
    sum += std::pow(d, 1.0 / (alpha + 1));
  }
  return (alpha + 1) / alpha * sum;
}

// Normalized divergence; the disjoint arrangement is built by renaming every
// entity of the second table so the two share nothing.
inline double oracle_rtd(const Table& a, const Table& b, double alpha) {
  Table renamed;
  for (const auto& [e, c] : b) renamed["\x01" + e] = c;
  return oracle_raw_sum(a, b, alpha) / oracle_raw_sum(a, renamed, alpha);
}

}  // namespace serp_audit::testing

#endif  // SERP_AUDIT_TESTS_TEST_SUPPORT_HPP_
