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

// Rank turbulence divergence between two ranked distributions.
//
// Each entity in the union of both systems contributes
//
//     delta = | r1^-alpha - r2^-alpha | ^ (1 / (alpha + 1))
//
// and the total is ((alpha + 1) / alpha) * sum(delta) / N, where N is the same
// prefactored sum evaluated on the fully disjoint arrangement of the two
// systems. Entities missing from a system share that system's tied last rank
// N_s + (A_s + 1) / 2, with A_s the number of union entities it lacks. With
// this normalization disjoint systems score exactly 1 and identical systems 0.

#ifndef SERP_AUDIT_RANK_DIVERGENCE_HPP_
#define SERP_AUDIT_RANK_DIVERGENCE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "serp_audit/csv.hpp"
#include "serp_audit/errors.hpp"
#include "serp_audit/text.hpp"
#include "serp_audit/token_counts.hpp"

namespace serp_audit {

inline constexpr double kDefaultAlpha = 1.0 / 3.0;

struct RankedEntry {
  std::string entity;
  std::uint64_t count = 0;
  double rank = 0;  // fractional tied rank, 1-based
};

class RankedDistribution {
 public:
  RankedDistribution() = default;
  explicit RankedDistribution(std::vector<RankedEntry> entries)
      : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].entity, i);
  }

  // Entries ordered by rank, then entity.
  const std::vector<RankedEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::optional<double> rank_of(std::string_view entity) const {
    const auto it = index_.find(entity);
    if (it == index_.end()) return std::nullopt;
    return entries_[it->second].rank;
  }

  const RankedEntry* find(std::string_view entity) const {
    const auto it = index_.find(entity);
    return it == index_.end() ? nullptr : &entries_[it->second];
  }

  // Entity-ordered view used for deterministic reductions.
  const std::map<std::string, std::size_t, std::less<>>& by_entity() const { return index_; }

 private:
  std::vector<RankedEntry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Higher count ranks first; equal counts share the mean of the positions
// they occupy.
inline RankedDistribution rank(const TokenCounts& counts) {
  if (counts.empty()) throw ArgumentError("cannot rank an empty count table");
  const auto rows = counts.sorted();
  std::vector<RankedEntry> entries;
  entries.reserve(rows.size());
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    while (j + 1 < rows.size() && rows[j + 1].second == rows[i].second) ++j;
    // positions i+1 .. j+1
    const double tied = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) entries.push_back({rows[k].first, rows[k].second, tied});
    i = j + 1;
  }
  return RankedDistribution(std::move(entries));
}

inline double element_divergence(double r1, double r2, double alpha = kDefaultAlpha) {
  if (!(r1 > 0) || !(r2 > 0)) throw ArgumentError("ranks must be positive");
  if (!(alpha > 0) || !std::isfinite(alpha)) throw ArgumentError("alpha must be positive and finite");
  if (r1 == r2) return 0.0;
  return std::pow(std::abs(std::pow(r1, -alpha) - std::pow(r2, -alpha)), 1.0 / (alpha + 1.0));
}

struct EntityDivergence {
  std::string entity;
  double rank_1 = 0;
  double rank_2 = 0;
  std::uint64_t count_1 = 0;
  std::uint64_t count_2 = 0;
  double contribution = 0;  // share of total_rtd, prefactor and normalization applied
  int sign = 0;             // +1: more prominent in system 1
  int exclusive_to = 0;     // 0: in both, 1 or 2: only in that system
};

struct DivergenceReport {
  double alpha = kDefaultAlpha;
  double total_rtd = 0;
  double normalization = 0;  // N_{1,2;alpha}, prefactor included
  std::size_t size_1 = 0;
  std::size_t size_2 = 0;
  // Union domain in entity order.
  std::vector<EntityDivergence> per_entity;
};

inline DivergenceReport rtd(const RankedDistribution& r1, const RankedDistribution& r2,
                            double alpha = kDefaultAlpha) {
  if (!(alpha > 0) || !std::isfinite(alpha)) throw ArgumentError("alpha must be positive and finite");
  if (r1.empty() || r2.empty()) throw ArgumentError("both distributions must be nonempty");

  struct Row {
    const std::string* entity;
    const RankedEntry* in_1;
    const RankedEntry* in_2;
  };
  std::vector<Row> rows;
  rows.reserve(r1.size() + r2.size());
  {
    auto a = r1.by_entity().begin();
    auto b = r2.by_entity().begin();
    const auto ae = r1.by_entity().end();
    const auto be = r2.by_entity().end();
    while (a != ae || b != be) {
      if (b == be || (a != ae && a->first < b->first)) {
        rows.push_back({&a->first, &r1.entries()[a->second], nullptr});
        ++a;
      } else if (a == ae || b->first < a->first) {
        rows.push_back({&b->first, nullptr, &r2.entries()[b->second]});
        ++b;
      } else {
        rows.push_back({&a->first, &r1.entries()[a->second], &r2.entries()[b->second]});
        ++a;
        ++b;
      }
    }
  }

  const double n1 = static_cast<double>(r1.size());
  const double n2 = static_cast<double>(r2.size());
  const double absent_1 = static_cast<double>(rows.size() - r1.size());
  const double absent_2 = static_cast<double>(rows.size() - r2.size());
  const double missing_rank_1 = n1 + (absent_1 + 1.0) / 2.0;
  const double missing_rank_2 = n2 + (absent_2 + 1.0) / 2.0;
  // Ranks under the disjoint arrangement, where each system lacks all of the
  // other's entities.
  const double disjoint_rank_1 = n1 + (n2 + 1.0) / 2.0;
  const double disjoint_rank_2 = n2 + (n1 + 1.0) / 2.0;

  DivergenceReport report;
  report.alpha = alpha;
  report.size_1 = r1.size();
  report.size_2 = r2.size();
  report.per_entity.reserve(rows.size());

  std::vector<double> deltas;
  deltas.reserve(rows.size());
  double disjoint_sum = 0;
  for (const Row& row : rows) {
    EntityDivergence e;
    e.entity = *row.entity;
    e.rank_1 = row.in_1 ? row.in_1->rank : missing_rank_1;
    e.rank_2 = row.in_2 ? row.in_2->rank : missing_rank_2;
    e.count_1 = row.in_1 ? row.in_1->count : 0;
    e.count_2 = row.in_2 ? row.in_2->count : 0;
    e.exclusive_to = row.in_1 && row.in_2 ? 0 : (row.in_1 ? 1 : 2);
    e.sign = e.rank_1 < e.rank_2 ? 1 : (e.rank_1 > e.rank_2 ? -1 : 0);
    deltas.push_back(element_divergence(e.rank_1, e.rank_2, alpha));
    if (row.in_1) disjoint_sum += element_divergence(row.in_1->rank, disjoint_rank_2, alpha);
    if (row.in_2) disjoint_sum += element_divergence(disjoint_rank_1, row.in_2->rank, alpha);
    report.per_entity.push_back(std::move(e));
  }

  const double prefactor = (alpha + 1.0) / alpha;
  report.normalization = prefactor * disjoint_sum;
  double total = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double c = deltas[i] == 0.0 ? 0.0 : prefactor * deltas[i] / report.normalization;
    report.per_entity[i].contribution = c;
    total += c;
  }
  report.total_rtd = total;
  return report;
}

inline DivergenceReport rtd(const TokenCounts& c1, const TokenCounts& c2,
                            double alpha = kDefaultAlpha) {
  return rtd(rank(c1), rank(c2), alpha);
}

enum class Direction { kPromotedIn1, kPromotedIn2 };

// Largest contributions among entities ranked more prominently in the chosen
// system; ties by entity name.
inline std::vector<EntityDivergence> signed_contributions(const DivergenceReport& report,
                                                          std::size_t k, Direction direction) {
  const int want = direction == Direction::kPromotedIn1 ? 1 : -1;
  std::vector<EntityDivergence> out;
  for (const auto& e : report.per_entity) {
    if (e.sign == want) out.push_back(e);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.contribution > b.contribution;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

// Mean of per-keyword divergences against one reference ranking; keywords
// whose SERP side yielded no entities are skipped and counted.
struct KeywordRtdSummary {
  double mean = 0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

inline KeywordRtdSummary mean_keyword_rtd(const std::vector<TokenCounts>& per_keyword,
                                          const RankedDistribution& reference,
                                          double alpha = kDefaultAlpha) {
  KeywordRtdSummary s;
  double sum = 0;
  for (const auto& counts : per_keyword) {
    if (counts.empty()) {
      ++s.skipped;
      continue;
    }
    sum += rtd(rank(counts), reference, alpha).total_rtd;
    ++s.evaluated;
  }
  if (s.evaluated > 0) s.mean = sum / static_cast<double>(s.evaluated);
  return s;
}

// CSV rows sorted by contribution descending, then entity.
inline std::string report_csv(const DivergenceReport& report,
                              std::string_view label_1 = "serp",
                              std::string_view label_2 = "corpus") {
  std::vector<const EntityDivergence*> rows;
  for (const auto& e : report.per_entity) rows.push_back(&e);
  std::stable_sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
    return a->contribution > b->contribution;
  });
  std::string out = "entity,rank_" + std::string(label_1) + ",rank_" + std::string(label_2) +
                    ",contribution,sign,exclusive\n";
  for (const auto* e : rows) {
    out += csv::escape(e->entity) + "," + text::format_double(e->rank_1) + "," +
           text::format_double(e->rank_2) + "," + text::format_double(e->contribution) + "," +
           std::to_string(e->sign) + "," +
           (e->exclusive_to == 0 ? std::string() : std::to_string(e->exclusive_to)) + "\n";
  }
  return out;
}

inline nlohmann::ordered_json report_header(const DivergenceReport& report) {
  nlohmann::ordered_json j;
  j["alpha"] = report.alpha;
  j["normalization"] = report.normalization;
  j["total_rtd"] = report.total_rtd;
  j["size_1"] = report.size_1;
  j["size_2"] = report.size_2;
  j["union_size"] = report.per_entity.size();
  return j;
}

}  // namespace serp_audit

#endif  // SERP_AUDIT_RANK_DIVERGENCE_HPP_
