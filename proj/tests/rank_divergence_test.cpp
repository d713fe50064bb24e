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

#include "serp_audit/rank_divergence.hpp"
#include "test_support.hpp"

namespace sa = serp_audit;
using sa::testing::Table;

namespace {

sa::TokenCounts counts_of(const Table& t) {
  sa::TokenCounts c;
  for (const auto& [e, n] : t) c.add(e, n);
  return c;
}

TEST(Rank, FractionalTies) {
  const auto r = sa::rank(counts_of({{"a", 10}, {"b", 5}, {"c", 5}}));
  EXPECT_EQ(*r.rank_of("a"), 1.0);
  EXPECT_EQ(*r.rank_of("b"), 2.5);
  EXPECT_EQ(*r.rank_of("c"), 2.5);
  EXPECT_FALSE(r.rank_of("d").has_value());
}

TEST(Rank, AllTied) {
  const auto r = sa::rank(counts_of({{"a", 3}, {"b", 3}, {"c", 3}, {"d", 3}}));
  for (const auto& e : r.entries()) EXPECT_EQ(e.rank, 2.5);
}

TEST(Rank, EmptyTableRejected) {
  EXPECT_THROW(sa::rank(sa::TokenCounts{}), sa::ArgumentError);
}

TEST(Rank, MatchesQuadraticOracle) {
  std::mt19937_64 gen(11);
  for (int i = 0; i < 200; ++i) {
    const Table t = sa::testing::random_table(gen, 40, 60, 6);
    const auto want = sa::testing::oracle_ranks(t);
    const auto got = sa::rank(counts_of(t));
    for (const auto& [e, r] : want) EXPECT_EQ(*got.rank_of(e), r) << e;
  }
}

TEST(ElementDivergence, HandValue) {
  // |1 - 2^(-1/3)|^(3/4)
  const double expect = std::pow(1.0 - 1.0 / std::cbrt(2.0), 0.75);
  EXPECT_NEAR(sa::element_divergence(1, 2, 1.0 / 3.0), expect, 1e-15);
  EXPECT_NEAR(sa::element_divergence(1, 2, 1.0 / 3.0), 0.3061072322, 1e-10);
}

TEST(ElementDivergence, SymmetricAndZeroOnDiagonal) {
  EXPECT_EQ(sa::element_divergence(3.5, 3.5), 0.0);
  EXPECT_DOUBLE_EQ(sa::element_divergence(2, 7), sa::element_divergence(7, 2));
}

TEST(ElementDivergence, RejectsBadArguments) {
  EXPECT_THROW(sa::element_divergence(0, 1), sa::ArgumentError);
  EXPECT_THROW(sa::element_divergence(1, -2), sa::ArgumentError);
  EXPECT_THROW(sa::element_divergence(1, 2, 0), sa::ArgumentError);
  EXPECT_THROW(sa::element_divergence(1, 2, -1), sa::ArgumentError);
}

TEST(Rtd, IdentityIsZero) {
  const auto c = counts_of({{"a", 4}, {"b", 2}, {"c", 2}, {"d", 1}});
  const auto rep = sa::rtd(c, c);
  EXPECT_EQ(rep.total_rtd, 0.0);
  for (const auto& e : rep.per_entity) {
    EXPECT_EQ(e.contribution, 0.0);
    EXPECT_EQ(e.sign, 0);
  }
}

TEST(Rtd, DisjointIsOne) {
  const auto rep = sa::rtd(counts_of({{"a", 3}, {"b", 1}}), counts_of({{"x", 9}, {"y", 2}, {"z", 2}}));
  EXPECT_NEAR(rep.total_rtd, 1.0, 1e-12);
  for (const auto& e : rep.per_entity) EXPECT_NE(e.exclusive_to, 0);
}

TEST(Rtd, MatchesOracleOnRandomInstances) {
  std::mt19937_64 gen(2024);
  for (int i = 0; i < 300; ++i) {
    const Table a = sa::testing::random_table(gen, 30, 45, 5);
    const Table b = sa::testing::random_table(gen, 30, 45, 5);
    for (double alpha : {1.0 / 3.0, 0.5, 1.0, 2.0}) {
      EXPECT_NEAR(sa::rtd(counts_of(a), counts_of(b), alpha).total_rtd,
                  sa::testing::oracle_rtd(a, b, alpha), 1e-12);
    }
  }
}

TEST(Rtd, SymmetricAndBounded) {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 300; ++i) {
    const auto a = counts_of(sa::testing::random_table(gen, 25, 35, 8));
    const auto b = counts_of(sa::testing::random_table(gen, 25, 35, 8));
    const double ab = sa::rtd(a, b).total_rtd;
    EXPECT_NEAR(ab, sa::rtd(b, a).total_rtd, 1e-12);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0 + 1e-12);
  }
}

TEST(Rtd, InvariantUnderCountScaling) {
  std::mt19937_64 gen(9);
  for (int i = 0; i < 50; ++i) {
    const Table a = sa::testing::random_table(gen, 20, 30, 6);
    const Table b = sa::testing::random_table(gen, 20, 30, 6);
    Table scaled;
    for (const auto& [e, n] : a) scaled[e] = n * 17;
    EXPECT_EQ(sa::rtd(counts_of(a), counts_of(b)).total_rtd,
              sa::rtd(counts_of(scaled), counts_of(b)).total_rtd);
  }
}

TEST(Rtd, ContributionsSumToTotalAndSignFollowsRank) {
  const auto rep = sa::rtd(counts_of({{"a", 10}, {"b", 5}, {"c", 1}}),
                           counts_of({{"b", 10}, {"a", 5}, {"d", 2}}));
  double sum = 0;
  for (const auto& e : rep.per_entity) {
    sum += e.contribution;
    EXPECT_EQ(e.sign, e.rank_1 < e.rank_2 ? 1 : (e.rank_1 > e.rank_2 ? -1 : 0));
  }
  EXPECT_NEAR(sum, rep.total_rtd, 1e-15);
  // Union domain in entity order; c only in system 1, d only in system 2.
  ASSERT_EQ(rep.per_entity.size(), 4u);
  EXPECT_EQ(rep.per_entity[2].entity, "c");
  EXPECT_EQ(rep.per_entity[2].exclusive_to, 1);
  EXPECT_EQ(rep.per_entity[2].rank_2, 4.0);  // N2 + (A2 + 1) / 2 = 3 + 1
  EXPECT_EQ(rep.per_entity[3].exclusive_to, 2);
  EXPECT_EQ(rep.per_entity[3].rank_1, 4.0);
}

TEST(Rtd, NestedSubsetStrictlyBetween) {
  const auto full = counts_of({{"a", 50}, {"b", 40}, {"c", 30}, {"d", 20}, {"e", 10}});
  const auto sub = counts_of({{"a", 50}, {"b", 40}, {"c", 30}});
  const double d = sa::rtd(full, sub).total_rtd;
  EXPECT_GT(d, 0.0);
  EXPECT_LT(d, 1.0);
}

// Dropping only the unique last entity is invisible: the missing-rank rule
// puts it back at N + 1, its original rank.
TEST(Rtd, DroppingUniqueTailEntityGivesZero) {
  const auto full = counts_of({{"a", 50}, {"b", 40}, {"c", 30}});
  const auto sub = counts_of({{"a", 50}, {"b", 40}});
  EXPECT_EQ(sa::rtd(full, sub).total_rtd, 0.0);
  const auto tied_tail = counts_of({{"a", 50}, {"b", 30}, {"c", 30}});
  EXPECT_GT(sa::rtd(tied_tail, sub).total_rtd, 0.0);
}

TEST(Rtd, RejectsEmptyAndBadAlpha) {
  const auto c = counts_of({{"a", 1}});
  EXPECT_THROW(sa::rtd(c, sa::TokenCounts{}), sa::ArgumentError);
  EXPECT_THROW(sa::rtd(c, c, 0.0), sa::ArgumentError);
  EXPECT_THROW(sa::rtd(c, c, std::nan("")), sa::ArgumentError);
}

TEST(SignedContributions, SplitsByDirection) {
  const auto rep = sa::rtd(counts_of({{"gaming", 30}, {"news", 20}, {"crypto", 1}}),
                           counts_of({{"crypto", 40}, {"news", 20}, {"gaming", 2}, {"nsfw", 35}}));
  const auto up = sa::signed_contributions(rep, 10, sa::Direction::kPromotedIn1);
  const auto down = sa::signed_contributions(rep, 10, sa::Direction::kPromotedIn2);
  for (const auto& e : up) EXPECT_LT(e.rank_1, e.rank_2);
  for (const auto& e : down) EXPECT_GT(e.rank_1, e.rank_2);
  ASSERT_FALSE(up.empty());
  EXPECT_EQ(up.front().entity, "gaming");
  for (std::size_t i = 1; i < down.size(); ++i) {
    EXPECT_GE(down[i - 1].contribution, down[i].contribution);
  }
  EXPECT_EQ(sa::signed_contributions(rep, 1, sa::Direction::kPromotedIn2).size(), 1u);
}

TEST(MeanKeywordRtd, SkipsEmptyKeywords) {
  const auto ref = sa::rank(counts_of({{"a", 3}, {"b", 2}}));
  std::vector<sa::TokenCounts> per_kw{counts_of({{"a", 1}}), sa::TokenCounts{},
                                      counts_of({{"a", 5}, {"b", 1}})};
  const auto s = sa::mean_keyword_rtd(per_kw, ref);
  EXPECT_EQ(s.evaluated, 2u);
  EXPECT_EQ(s.skipped, 1u);
  const double a = sa::rtd(sa::rank(per_kw[0]), ref).total_rtd;
  EXPECT_NEAR(s.mean, a / 2, 1e-15);  // the second keyword matches exactly
}

TEST(ReportCsv, SortedByContribution) {
  const auto rep = sa::rtd(counts_of({{"a", 3}, {"b", 1}}), counts_of({{"b", 3}, {"c", 1}}));
  const std::string csv = sa::report_csv(rep);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "entity,rank_serp,rank_corpus,contribution,sign,exclusive");
  const auto hdr = sa::report_header(rep);
  EXPECT_EQ(hdr["union_size"], 3);
}

}  // namespace
