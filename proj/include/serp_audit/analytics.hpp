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

// Supporting statistics: log-log OLS with a permutation p-value, hexagonal
// binning, group proportions, normal-approximation confidence intervals and
// keyword-subset cross-validation.

#ifndef SERP_AUDIT_ANALYTICS_HPP_
#define SERP_AUDIT_ANALYTICS_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "serp_audit/csv.hpp"
#include "serp_audit/errors.hpp"
#include "serp_audit/rng.hpp"
#include "serp_audit/text.hpp"
#include "serp_audit/token_counts.hpp"

namespace serp_audit {

struct CountPair {
  double x = 0;
  double y = 0;
};

// log10 of a count, with counts below 1 mapped to 1 (log 0).
inline double log_count(double v) { return std::log10(std::max(v, 1.0)); }

// ---------------------------------------------------------------------------
// Regression

struct OlsFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
};

inline OlsFit ols(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  if (n < 2 || ys.size() != n) throw DegenerateInputError("regression needs at least 2 points");
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0) throw DegenerateInputError("regression input has zero variance in x");
  OlsFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0 ? 0.0 : std::clamp((sxy * sxy) / (sxx * syy), 0.0, 1.0);
  return fit;
}

struct RegressionResult {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
  double p_value = 1;
  std::size_t n = 0;
  std::size_t permutations = 0;
  std::uint64_t seed = 0;
  // Points with a raw coordinate below 1, plotted at log 0.
  std::size_t clamped_points = 0;
};

// OLS of log10(y) on log10(x). The p-value is two-sided: the share of seeded
// shuffles of y whose |covariance| reaches the observed one, with the usual
// +1 correction. Iteration i draws from its own stream, so any thread count
// gives the same answer.
inline RegressionResult loglog_regression(const std::vector<CountPair>& pairs,
                                          std::size_t permutations = 10000,
                                          std::uint64_t seed = 0, unsigned threads = 1) {
  if (pairs.size() < 2) throw DegenerateInputError("regression needs at least 2 points");
  if (permutations == 0) throw ArgumentError("permutations must be >= 1");
  std::vector<double> xs, ys;
  xs.reserve(pairs.size());
  ys.reserve(pairs.size());
  RegressionResult res;
  for (const auto& p : pairs) {
    if (!(p.x >= 0) || !(p.y >= 0)) throw ArgumentError("counts must be nonnegative");
    if (p.x < 1 || p.y < 1) ++res.clamped_points;
    xs.push_back(log_count(p.x));
    ys.push_back(log_count(p.y));
  }
  const OlsFit fit = ols(xs, ys);
  res.slope = fit.slope;
  res.intercept = fit.intercept;
  res.r_squared = fit.r_squared;
  res.n = pairs.size();
  res.permutations = permutations;
  res.seed = seed;

  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  std::vector<double> cx(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) cx[i] = xs[i] - mx;
  const auto covariance = [&](const std::vector<double>& y) {
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += cx[i] * y[i];
    return s;
  };
  const double observed = std::abs(covariance(ys));
  const double tol = 1e-12 * std::max(1.0, observed);

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> extreme{0};
  const auto work = [&] {
    std::vector<double> shuffled;
    std::size_t local = 0;
    for (std::size_t i = next++; i < permutations; i = next++) {
      shuffled = ys;
      SplitMix64 rng(derive_seed(seed, i));
      fisher_yates(std::span<double>(shuffled), rng);
      if (std::abs(covariance(shuffled)) >= observed - tol) ++local;
    }
    extreme += local;
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  res.p_value = static_cast<double>(extreme.load() + 1) / static_cast<double>(permutations + 1);
  return res;
}

// ---------------------------------------------------------------------------
// Hexagonal binning

struct HexBin {
  long long col = 0;
  long long row = 0;
  double center_x = 0;
  double center_y = 0;
  std::size_t count = 0;
};

// Pointy-top lattice: row r sits at y = r * w * sqrt(3) / 2 and odd rows are
// shifted right by w / 2. The lattice is the union of two rectangular
// lattices (even and odd rows); the nearest center of each is found by
// rounding, and the closer of the two wins (even rows on an exact tie).
struct HexLattice {
  double width;

  double row_height() const { return width * std::sqrt(3.0) / 2.0; }

  std::pair<long long, long long> cell(double x, double y) const {
    const double h = row_height();
    const auto ev_row = 2 * static_cast<long long>(std::llround(y / (2 * h)));
    const auto ev_col = static_cast<long long>(std::llround(x / width));
    const auto od_row = 2 * static_cast<long long>(std::llround((y - h) / (2 * h))) + 1;
    const auto od_col = static_cast<long long>(std::llround((x - width / 2) / width));
    const auto dist2 = [&](long long col, long long row) {
      const auto [cx, cy] = center(col, row);
      return (x - cx) * (x - cx) + (y - cy) * (y - cy);
    };
    if (dist2(ev_col, ev_row) <= dist2(od_col, od_row)) return {ev_col, ev_row};
    return {od_col, od_row};
  }

  std::pair<double, double> center(long long col, long long row) const {
    const double shift = (row & 1) ? width / 2 : 0.0;
    return {static_cast<double>(col) * width + shift, static_cast<double>(row) * row_height()};
  }
};

// Bins log10-transformed points; output sorted by (row, col).
inline std::vector<HexBin> hexbin(const std::vector<CountPair>& pairs, double bin_width) {
  if (!(bin_width > 0) || !std::isfinite(bin_width)) throw ArgumentError("bin width must be positive");
  const HexLattice lattice{bin_width};
  std::map<std::pair<long long, long long>, std::size_t> cells;  // (row, col)
  for (const auto& p : pairs) {
    const auto [col, row] = lattice.cell(log_count(p.x), log_count(p.y));
    ++cells[{row, col}];
  }
  std::vector<HexBin> bins;
  bins.reserve(cells.size());
  for (const auto& [key, n] : cells) {
    const auto [cx, cy] = lattice.center(key.second, key.first);
    bins.push_back({key.second, key.first, cx, cy, n});
  }
  return bins;
}

// ---------------------------------------------------------------------------
// Group proportions

inline constexpr const char* kInSerp = "in_serp";
inline constexpr const char* kNotInSerp = "not_in_serp";

struct GroupComparison {
  std::map<std::string, std::map<std::string, double>> groups;
  std::map<std::string, std::map<std::string, std::uint64_t>> counts;
  std::vector<std::string> warnings;
};

// Category shares per group. Every labeled entity must have a group; groups
// without labeled members are dropped with a warning.
inline GroupComparison group_proportions(
    const std::map<std::string, std::string>& labels,
    const std::map<std::string, std::string>& membership,
    const std::vector<std::string>& expected_groups = {kInSerp, kNotInSerp}) {
  std::vector<std::string> offenders;
  GroupComparison out;
  for (const auto& [entity, category] : labels) {
    const auto it = membership.find(entity);
    if (it == membership.end()) {
      offenders.push_back(entity);
      continue;
    }
    ++out.counts[it->second][category];
  }
  if (!offenders.empty()) {
    std::string msg = std::to_string(offenders.size()) + " labeled entities have no group:";
    for (std::size_t i = 0; i < offenders.size() && i < 20; ++i) msg += " " + offenders[i];
    if (offenders.size() > 20) msg += " ...";
    throw DataError(msg);
  }
  std::set<std::string> all_groups(expected_groups.begin(), expected_groups.end());
  std::size_t unlabeled = 0;
  for (const auto& [entity, group] : membership) {
    all_groups.insert(group);
    if (labels.find(entity) == labels.end()) ++unlabeled;
  }
  for (const auto& g : all_groups) {
    const auto it = out.counts.find(g);
    if (it == out.counts.end()) {
      out.warnings.push_back("group '" + g + "' has no labeled entities; excluded");
      continue;
    }
    std::uint64_t total = 0;
    for (const auto& [cat, n] : it->second) total += n;
    for (const auto& [cat, n] : it->second) {
      out.groups[g][cat] = static_cast<double>(n) / static_cast<double>(total);
    }
  }
  if (unlabeled > 0) {
    out.warnings.push_back(std::to_string(unlabeled) + " grouped entities have no label");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Confidence intervals

// Standard normal quantile: Acklam's rational approximation polished with
// two Newton steps against erfc.
inline double normal_quantile(double p) {
  if (!(p > 0 && p < 1)) throw ArgumentError("quantile probability must be in (0,1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double lo = 0.02425;
  double x;
  if (p < lo) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - lo) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  constexpr double kSqrt2Pi = 2.5066282746310002;
  for (int i = 0; i < 2; ++i) {
    const double err = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    x -= err * kSqrt2Pi * std::exp(x * x / 2);
  }
  return x;
}

struct CiStat {
  double mean = 0;
  double half_width = 0;
  double level = 0.95;
  std::size_t n = 0;
  double sd = 0;  // sample standard deviation
};

// mean ± z(level) * sd / sqrt(n), sd with n - 1 in the denominator.
inline CiStat mean_ci(const std::vector<double>& scores, double level = 0.95) {
  if (scores.empty()) throw ArgumentError("mean_ci needs at least one score");
  if (!(level > 0 && level < 1)) throw ArgumentError("confidence level must be in (0,1)");
  for (double s : scores) {
    if (!(s >= 0 && s <= 1)) throw ArgumentError("scores must lie in [0,1]");
  }
  CiStat ci;
  ci.level = level;
  ci.n = scores.size();
  const double n = static_cast<double>(ci.n);
  ci.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  if (ci.n > 1) {
    double ss = 0;
    for (double s : scores) ss += (s - ci.mean) * (s - ci.mean);
    ci.sd = std::sqrt(ss / (n - 1));
    ci.half_width = normal_quantile(0.5 + level / 2) * ci.sd / std::sqrt(n);
  }
  return ci;
}

// Per-post score table: post_id,group,<label>... with probabilities in [0,1].
struct ScoreTable {
  std::vector<std::string> labels;
  // group -> label -> scores
  std::map<std::string, std::map<std::string, std::vector<double>>> scores;
};

inline ScoreTable parse_score_table(std::string_view data,
                                    std::vector<std::string> labels = {"toxic", "obscene", "insult"}) {
  const auto rows = csv::parse(data);
  if (rows.empty()) throw DataError("score table is empty");
  const auto& header = rows.front();
  csv::column(header, "post_id");
  const std::size_t group_col = csv::column(header, "group");
  std::vector<std::size_t> cols;
  for (const auto& l : labels) cols.push_back(csv::column(header, l));
  ScoreTable table;
  table.labels = labels;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw DataError("score table row " + std::to_string(r + 1) + " has " +
                      std::to_string(row.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      double v = 0;
      if (!text::parse_double(row[cols[i]], v) || !(v >= 0 && v <= 1)) {
        throw DataError("score table row " + std::to_string(r + 1) + ": '" + row[cols[i]] +
                        "' is not a probability");
      }
      table.scores[row[group_col]][labels[i]].push_back(v);
    }
  }
  return table;
}

struct GroupCi {
  std::string group;
  std::string label;
  CiStat ci;
};

inline std::vector<GroupCi> score_table_ci(const ScoreTable& table, double level = 0.95) {
  std::vector<GroupCi> out;
  for (const auto& [group, by_label] : table.scores) {
    for (const auto& label : table.labels) {
      const auto it = by_label.find(label);
      if (it == by_label.end() || it->second.empty()) continue;
      out.push_back({group, label, mean_ci(it->second, level)});
    }
  }
  return out;
}

// entity,category
inline std::map<std::string, std::string> parse_label_file(std::string_view data) {
  const auto rows = csv::parse(data);
  if (rows.empty()) return {};
  const auto& header = rows.front();
  const std::size_t e = csv::column(header, "entity");
  const std::size_t c = csv::column(header, "category");
  std::map<std::string, std::string> labels;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() <= std::max(e, c)) {
      throw DataError("label file row " + std::to_string(r + 1) + " is short");
    }
    labels[text::normalize_key(rows[r][e])] = std::string(text::trim(rows[r][c]));
  }
  return labels;
}

// ---------------------------------------------------------------------------
// Keyword cross-validation

struct CrossvalResult {
  std::vector<std::vector<std::string>> subsets;
  std::vector<double> values;
  double min = 0;
  double max = 0;
  double mean = 0;
  double stdev = 0;  // sample standard deviation across folds
};

inline std::size_t crossval_subset_size(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

// `folds` seeded subsets of floor(fraction * n) keywords each, kept in their
// original order; the evaluator maps a subset to an RTD value.
inline CrossvalResult keyword_crossval(
    const std::vector<std::string>& keywords, int folds, double fraction, std::uint64_t seed,
    const std::function<double(const std::vector<std::string>&)>& evaluator) {
  if (folds < 2) throw ArgumentError("cross-validation needs at least 2 folds");
  if (!(fraction > 0 && fraction < 1)) throw ArgumentError("fraction must be in (0,1)");
  const std::size_t m = crossval_subset_size(keywords.size(), fraction);
  if (m == 0) throw ArgumentError("cross-validation subset would be empty");
  CrossvalResult res;
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> idx(keywords.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(f)));
    // Partial Fisher-Yates: the first m slots become a uniform m-subset.
    for (std::size_t i = 0; i < m; ++i) {
      const auto j = i + static_cast<std::size_t>(uniform_below(rng, idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    std::vector<std::string> subset;
    subset.reserve(m);
    for (auto i : idx) subset.push_back(keywords[i]);
    res.values.push_back(evaluator(subset));
    res.subsets.push_back(std::move(subset));
  }
  res.min = *std::min_element(res.values.begin(), res.values.end());
  res.max = *std::max_element(res.values.begin(), res.values.end());
  res.mean = std::accumulate(res.values.begin(), res.values.end(), 0.0) /
             static_cast<double>(res.values.size());
  double ss = 0;
  for (double v : res.values) ss += (v - res.mean) * (v - res.mean);
  res.stdev = std::sqrt(ss / static_cast<double>(res.values.size() - 1));
  return res;
}

}  // namespace serp_audit

#endif  // SERP_AUDIT_ANALYTICS_HPP_
