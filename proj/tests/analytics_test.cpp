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

#include <cmath>
#include <random>
#include <set>

#include "serp_audit/analytics.hpp"

namespace sa = serp_audit;

namespace {

constexpr double kZ95 = 1.959963984540054;

// Normal equations [n Sx; Sx Sxx] [b0 b1]' = [Sy; Sxy] solved by Cramer's rule
// in long double.
std::pair<double, double> normal_equation_fit(const std::vector<sa::CountPair>& pairs) {
  long double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : pairs) {
    const long double x = std::log10(static_cast<long double>(p.x));
    const long double y = std::log10(static_cast<long double>(p.y));
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const long double det = n * sxx - sx * sx;
  const long double b1 = (n * sxy - sx * sy) / det;
  const long double b0 = (sy * sxx - sx * sxy) / det;
  return {static_cast<double>(b1), static_cast<double>(b0)};
}

std::vector<sa::CountPair> synthetic_pairs(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ux(0.0, 5.0);
  std::normal_distribution<double> noise(0.0, 0.25);
  std::vector<sa::CountPair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = ux(gen);
    pairs.push_back({std::pow(10.0, lx), std::pow(10.0, 2.0 + 0.7 * lx + noise(gen))});
  }
  return pairs;
}

TEST(Regression, CollinearPowersOfTenIsExactlyOne) {
  std::vector<sa::CountPair> pairs;
  for (int k = 0; k < 10; ++k) pairs.push_back({std::pow(10.0, k), std::pow(10.0, 2 * k)});
  const auto r = sa::loglog_regression(pairs, 200, 1);
  EXPECT_EQ(r.r_squared, 1.0);
  EXPECT_EQ(r.slope, 2.0);
  EXPECT_EQ(r.intercept, 0.0);
}

TEST(Regression, SquareLawIsOneWithinTolerance) {
  std::mt19937_64 gen(3);
  std::vector<sa::CountPair> pairs;
  for (int i = 0; i < 50; ++i) {
    const double x = 1 + static_cast<double>(gen() % 100000);
    pairs.push_back({x, x * x});
  }
  const auto r = sa::loglog_regression(pairs, 100, 1);
  EXPECT_NEAR(r.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(r.slope, 2.0, 1e-12);
}

TEST(Regression, ConstantYHasZeroRSquared) {
  const auto r = sa::loglog_regression({{1, 5}, {10, 5}, {100, 5}}, 100, 1);
  EXPECT_EQ(r.r_squared, 0.0);
  EXPECT_EQ(r.slope, 0.0);
}

TEST(Regression, MatchesNormalEquations) {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const auto pairs = synthetic_pairs(seed, 200);
    const auto [slope, intercept] = normal_equation_fit(pairs);
    const auto r = sa::loglog_regression(pairs, 500, seed);
    EXPECT_NEAR(r.slope, slope, 1e-9);
    EXPECT_NEAR(r.intercept, intercept, 1e-9);
    EXPECT_GE(r.r_squared, 0.0);
    EXPECT_LE(r.r_squared, 1.0);
  }
}

TEST(Regression, PValueDeterministicAndThreadIndependent) {
  const auto pairs = synthetic_pairs(9, 60);
  const auto a = sa::loglog_regression(pairs, 3000, 42, 1);
  const auto b = sa::loglog_regression(pairs, 3000, 42, 1);
  const auto c = sa::loglog_regression(pairs, 3000, 42, 4);
  EXPECT_EQ(a.p_value, b.p_value);
  EXPECT_EQ(a.p_value, c.p_value);
  EXPECT_LT(a.p_value, 0.01);  // strong synthetic association
  EXPECT_GE(a.p_value, 1.0 / 3001);
}

TEST(Regression, UnrelatedDataHasLargePValue) {
  std::mt19937_64 gen(5);
  std::vector<sa::CountPair> pairs;
  for (int i = 0; i < 80; ++i) pairs.push_back({1.0 + static_cast<double>(gen() % 1000), 1.0 + static_cast<double>(gen() % 1000)});
  EXPECT_GT(sa::loglog_regression(pairs, 2000, 1).p_value, 0.01);
}

TEST(Regression, RescalingOnlyMovesIntercept) {
  const auto pairs = synthetic_pairs(4, 100);
  auto scaled = pairs;
  for (auto& p : scaled) {
    p.x *= 1000;
    p.y *= 10;
  }
  const auto a = sa::loglog_regression(pairs, 10, 0);
  const auto b = sa::loglog_regression(scaled, 10, 0);
  EXPECT_NEAR(a.r_squared, b.r_squared, 1e-12);
  EXPECT_NEAR(a.slope, b.slope, 1e-12);
  EXPECT_NEAR(b.intercept, a.intercept + 1 - 3 * a.slope, 1e-9);
}

TEST(Regression, ZeroCountsAreClampedAndFlagged) {
  const auto r = sa::loglog_regression({{0, 5}, {10, 0}, {100, 50}, {1000, 500}}, 10, 0);
  EXPECT_EQ(r.clamped_points, 2u);
}

TEST(Regression, DegenerateInputs) {
  EXPECT_THROW(sa::loglog_regression({{10, 10}}), sa::DegenerateInputError);
  EXPECT_THROW(sa::loglog_regression({{10, 1}, {10, 100}}), sa::DegenerateInputError);
  EXPECT_THROW(sa::loglog_regression({{-1, 1}, {10, 100}}), sa::ArgumentError);
}

// Brute force: scan every lattice center near the point.
std::pair<long long, long long> nearest_center(double x, double y, double w) {
  const double h = w * std::sqrt(3.0) / 2;
  const long long r0 = static_cast<long long>(std::floor(y / h));
  double best = 1e300;
  std::pair<long long, long long> arg{0, 0};
  for (long long r = r0 - 2; r <= r0 + 2; ++r) {
    const double shift = (r % 2 != 0) ? w / 2 : 0;
    const long long c0 = static_cast<long long>(std::floor(x / w));
    for (long long c = c0 - 2; c <= c0 + 2; ++c) {
      const double cx = static_cast<double>(c) * w + shift, cy = static_cast<double>(r) * h;
      const double d = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      if (d < best) {
        best = d;
        arg = {c, r};
      }
    }
  }
  return arg;
}

TEST(Hexbin, SingleAndDuplicatePoints) {
  auto bins = sa::hexbin({{10, 10}}, 0.25);
  ASSERT_EQ(bins.size(), 1u);
  EXPECT_EQ(bins[0].count, 1u);
  bins = sa::hexbin({{10, 10}, {10, 10}}, 0.25);
  ASSERT_EQ(bins.size(), 1u);
  EXPECT_EQ(bins[0].count, 2u);
  EXPECT_TRUE(sa::hexbin({}, 0.25).empty());
  EXPECT_THROW(sa::hexbin({{1, 1}}, 0), sa::ArgumentError);
}

TEST(Hexbin, ConservesCountsAndMatchesNearestCenter) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  for (double w : {0.05, 0.25, 0.8, 3.0}) {
    std::vector<sa::CountPair> pairs;
    for (int i = 0; i < 1000; ++i) pairs.push_back({std::pow(10.0, u(gen)), std::pow(10.0, u(gen))});
    const auto bins = sa::hexbin(pairs, w);
    std::size_t total = 0;
    for (const auto& b : bins) total += b.count;
    EXPECT_EQ(total, 1000u);
    const sa::HexLattice lattice{w};
    for (const auto& p : pairs) {
      const double x = std::log10(p.x), y = std::log10(p.y);
      const auto got = lattice.cell(x, y);
      const auto want = nearest_center(x, y, w);
      if (got != want) {
        // Only an exact-distance tie may disagree.
        const auto [gx, gy] = lattice.center(got.first, got.second);
        const auto [wx, wy] = lattice.center(want.first, want.second);
        EXPECT_NEAR(std::hypot(x - gx, y - gy), std::hypot(x - wx, y - wy), 1e-12);
      }
    }
  }
}

TEST(GroupProportions, SimpleExample) {
  const auto g = sa::group_proportions({{"a", "public"}, {"b", "public"}, {"c", "forbidden"}},
                                       {{"a", sa::kInSerp}, {"b", sa::kInSerp}, {"c", sa::kNotInSerp}});
  EXPECT_EQ(g.groups.at(sa::kInSerp).at("public"), 1.0);
  EXPECT_EQ(g.groups.at(sa::kNotInSerp).at("forbidden"), 1.0);
  EXPECT_TRUE(g.warnings.empty());
}

TEST(GroupProportions, VisibilityTableReproduced) {
  const std::vector<std::pair<std::string, int>> in_serp{
      {"public", 9330}, {"restricted", 360}, {"forbidden", 230}, {"private", 50}, {"unknown", 30}};
  const std::vector<std::pair<std::string, int>> not_in{
      {"public", 465}, {"restricted", 125}, {"forbidden", 394}, {"private", 16}};
  std::map<std::string, std::string> labels, membership;
  int id = 0;
  for (const auto& [group, rows] : {std::pair{std::string(sa::kInSerp), in_serp},
                                    std::pair{std::string(sa::kNotInSerp), not_in}}) {
    for (const auto& [cat, n] : rows) {
      for (int i = 0; i < n; ++i) {
        const std::string e = "s" + std::to_string(id++);
        labels[e] = cat;
        membership[e] = group;
      }
    }
  }
  const auto g = sa::group_proportions(labels, membership);
  const auto& in = g.groups.at(sa::kInSerp);
  const auto& out = g.groups.at(sa::kNotInSerp);
  EXPECT_NEAR(in.at("public"), 0.933, 1e-12);
  EXPECT_NEAR(in.at("restricted"), 0.036, 1e-12);
  EXPECT_NEAR(in.at("forbidden"), 0.023, 1e-12);
  EXPECT_NEAR(in.at("private"), 0.005, 1e-12);
  EXPECT_NEAR(out.at("public"), 0.465, 1e-12);
  EXPECT_NEAR(out.at("restricted"), 0.125, 1e-12);
  EXPECT_NEAR(out.at("forbidden"), 0.394, 1e-12);
  EXPECT_NEAR(out.at("private"), 0.016, 1e-12);
  for (const auto& [group, cats] : g.groups) {
    double s = 0;
    for (const auto& [c, p] : cats) s += p;
    EXPECT_NEAR(s, 1.0, 1e-9) << group;
  }
}

TEST(GroupProportions, EmptyGroupWarnsAndMissingGroupErrors) {
  const auto g = sa::group_proportions({{"a", "public"}}, {{"a", sa::kInSerp}});
  EXPECT_EQ(g.groups.count(sa::kNotInSerp), 0u);
  ASSERT_EQ(g.warnings.size(), 1u);
  EXPECT_NE(g.warnings[0].find("not_in_serp"), std::string::npos);
  try {
    sa::group_proportions({{"a", "public"}, {"zz", "private"}}, {{"a", sa::kInSerp}});
    FAIL() << "expected DataError";
  } catch (const sa::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("zz"), std::string::npos);
  }
}

TEST(NormalQuantile, KnownValues) {
  EXPECT_NEAR(sa::normal_quantile(0.975), kZ95, 1e-12);
  EXPECT_NEAR(sa::normal_quantile(0.5), 0.0, 1e-15);
  EXPECT_NEAR(sa::normal_quantile(0.995), 2.5758293035489004, 1e-12);
  EXPECT_NEAR(sa::normal_quantile(0.001), -3.090232306167813, 1e-10);
  EXPECT_THROW(sa::normal_quantile(1.0), sa::ArgumentError);
}

TEST(MeanCi, Examples) {
  const auto flat = sa::mean_ci({0.5, 0.5, 0.5});
  EXPECT_EQ(flat.mean, 0.5);
  EXPECT_EQ(flat.half_width, 0.0);
  const auto two = sa::mean_ci({0.0, 1.0});
  EXPECT_EQ(two.mean, 0.5);
  EXPECT_NEAR(two.half_width, kZ95 * std::sqrt(0.5) / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(two.half_width, 0.98, 1e-3);
  EXPECT_THROW(sa::mean_ci({}), sa::ArgumentError);
  EXPECT_THROW(sa::mean_ci({1.5}), sa::ArgumentError);
  EXPECT_EQ(sa::mean_ci({0.2}).half_width, 0.0);
}

TEST(MeanCi, FiveThousandScoresMatchRecomputation) {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s;
  for (int i = 0; i < 5000; ++i) s.push_back(u(gen) * u(gen));
  long double sum = 0;
  for (double v : s) sum += v;
  const long double mean = sum / 5000;
  long double ss = 0;
  for (double v : s) ss += (v - mean) * (v - mean);
  const long double hw = kZ95 * std::sqrt(ss / 4999) / std::sqrt(5000.0L);
  const auto ci = sa::mean_ci(s);
  EXPECT_NEAR(ci.mean, static_cast<double>(mean), 1e-9);
  EXPECT_NEAR(ci.half_width, static_cast<double>(hw), 1e-9);
}

TEST(MeanCi, ShrinksAsInverseSqrtN) {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> small, large;
  for (int i = 0; i < 2000; ++i) small.push_back(u(gen));
  for (int i = 0; i < 8000; ++i) large.push_back(u(gen));
  const double ratio = sa::mean_ci(large).half_width / sa::mean_ci(small).half_width;
  EXPECT_GE(ratio, 0.45);
  EXPECT_LE(ratio, 0.55);
}

TEST(ScoreTable, ParsesAndValidates) {
  const auto t = sa::parse_score_table(
      "post_id,group,toxic,obscene,insult\n1,in_serp,0.1,0.2,0.3\n2,in_serp,0.3,0.2,0.1\n3,not_in_serp,1,0,0.5\n");
  const auto cis = sa::score_table_ci(t);
  ASSERT_EQ(cis.size(), 6u);
  EXPECT_EQ(cis[0].group, "in_serp");
  EXPECT_EQ(cis[0].label, "toxic");
  EXPECT_NEAR(cis[0].ci.mean, 0.2, 1e-15);
  EXPECT_THROW(sa::parse_score_table("post_id,group,toxic,obscene,insult\n1,a,2,0,0\n"), sa::DataError);
  EXPECT_THROW(sa::parse_score_table("post_id,group,toxic,obscene,insult\n1,a,0\n"), sa::DataError);
  EXPECT_THROW(sa::parse_score_table("post_id,toxic\n"), sa::DataError);
}

TEST(LabelFile, Parses) {
  const auto l = sa::parse_label_file("entity,category\nAskReddit,public\n\"a,b\",private\n");
  EXPECT_EQ(l.at("askreddit"), "public");
  EXPECT_EQ(l.at("a,b"), "private");
}

std::vector<std::string> keyword_list(std::size_t n) {
  std::vector<std::string> k;
  for (std::size_t i = 0; i < n; ++i) k.push_back("kw" + std::to_string(i));
  return k;
}

TEST(Crossval, ConstantEvaluatorHasZeroSpread) {
  const auto r = sa::keyword_crossval(keyword_list(20), 5, 0.8, 1, [](const auto&) { return 0.5; });
  EXPECT_EQ(r.stdev, 0.0);
  EXPECT_EQ(r.mean, 0.5);
  EXPECT_EQ(r.values.size(), 5u);
}

TEST(Crossval, FiveSubsetsOfEightHundred) {
  const auto kw = keyword_list(1000);
  const auto r = sa::keyword_crossval(kw, 5, 0.8, 7, [](const auto& s) { return static_cast<double>(s.size()); });
  ASSERT_EQ(r.subsets.size(), 5u);
  std::set<std::vector<std::string>> distinct;
  const std::set<std::string> all(kw.begin(), kw.end());
  for (const auto& s : r.subsets) {
    EXPECT_EQ(s.size(), 800u);
    EXPECT_EQ(std::set<std::string>(s.begin(), s.end()).size(), 800u);
    for (const auto& k : s) EXPECT_TRUE(all.count(k));
    distinct.insert(s);
  }
  EXPECT_EQ(distinct.size(), 5u);
  EXPECT_EQ(sa::crossval_subset_size(10, 0.7), 7u);
}

TEST(Crossval, SameSeedSameSubsets) {
  const auto kw = keyword_list(50);
  const auto f = [](const auto&) { return 1.0; };
  EXPECT_EQ(sa::keyword_crossval(kw, 5, 0.8, 3, f).subsets, sa::keyword_crossval(kw, 5, 0.8, 3, f).subsets);
  EXPECT_NE(sa::keyword_crossval(kw, 5, 0.8, 3, f).subsets, sa::keyword_crossval(kw, 5, 0.8, 4, f).subsets);
}

TEST(Crossval, RejectsBadArguments) {
  const auto f = [](const auto&) { return 1.0; };
  EXPECT_THROW(sa::keyword_crossval(keyword_list(10), 1, 0.8, 0, f), sa::ArgumentError);
  EXPECT_THROW(sa::keyword_crossval(keyword_list(10), 5, 1.0, 0, f), sa::ArgumentError);
  EXPECT_THROW(sa::keyword_crossval(keyword_list(1), 5, 0.5, 0, f), sa::ArgumentError);
}

}  // namespace
