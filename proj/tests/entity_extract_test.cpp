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

#include <algorithm>
#include <random>

#include "serp_audit/entity_extract.hpp"

namespace sa = serp_audit;

namespace {

using Tags = std::vector<std::string>;

sa::SerpResultSet result_set(std::vector<sa::SerpItem> items) {
  sa::SerpResultSet r;
  r.spec = sa::build_query("k", "reddit.com", sa::parse_date("2023-01-01"), sa::parse_date("2023-01-02"));
  r.items = std::move(items);
  return r;
}

TEST(SubredditFromUrl, Examples) {
  EXPECT_EQ(sa::subreddit_from_url("https://www.reddit.com/r/AskReddit/comments/x1/some_title/"), "askreddit");
  EXPECT_FALSE(sa::subreddit_from_url("https://reddit.com/user/foo"));
  EXPECT_EQ(sa::subreddit_from_url("https://old.reddit.com/r/ffxiv/"), "ffxiv");
}

TEST(SubredditFromUrl, EdgeCases) {
  EXPECT_EQ(sa::subreddit_from_url("http://reddit.com/r/Cooking?utm=1"), "cooking");
  EXPECT_EQ(sa::subreddit_from_url("https://np.reddit.com/r/a_b#frag"), "a_b");
  EXPECT_FALSE(sa::subreddit_from_url("https://notreddit.com/r/x/"));
  EXPECT_FALSE(sa::subreddit_from_url("https://example.com/?u=reddit.com/r/x"));
  EXPECT_FALSE(sa::subreddit_from_url("https://www.reddit.com/r/"));
  EXPECT_FALSE(sa::subreddit_from_url("https://www.reddit.com/r/bad-name/"));
  EXPECT_FALSE(sa::subreddit_from_url("https://www.reddit.com"));
  EXPECT_FALSE(sa::subreddit_from_url(""));
}

TEST(Hashtags, Examples) {
  EXPECT_EQ(sa::hashtags_from_text("gm #NFT #nft!"), (Tags{"nft", "nft"}));
  EXPECT_EQ(sa::hashtags_from_text("no tags here"), Tags{});
  EXPECT_EQ(sa::hashtags_from_text("#unga77 live"), (Tags{"unga77"}));
}

TEST(Hashtags, Boundaries) {
  EXPECT_EQ(sa::hashtags_from_text("a#b # #_x ##y"), (Tags{"_x", "y"}));
  EXPECT_EQ(sa::hashtags_from_text("it&#39;s #ok"), (Tags{"ok"}));
  EXPECT_EQ(sa::hashtags_from_text("(#paren) #dash-case"), (Tags{"paren", "dash"}));
  EXPECT_EQ(sa::hashtags_from_text("#ドラマ好き。#café"), (Tags{"ドラマ好き", "café"}));
  EXPECT_EQ(sa::hashtags_from_text("#fire\xF0\x9F\x94\xA5 next"), (Tags{"fire"}));
  EXPECT_EQ(sa::hashtags_from_text("#"), Tags{});
  EXPECT_EQ(sa::hashtags_from_text("#\xff"), Tags{});
}

TEST(EnglishLike, Examples) {
  EXPECT_TRUE(sa::is_english_like("peaceday"));
  EXPECT_FALSE(sa::is_english_like("ドラマ"));
  EXPECT_TRUE(sa::is_english_like("unga77"));
  EXPECT_FALSE(sa::is_english_like(""));
}

TEST(ExtractFromSerp, SubredditsOverUniqueUrls) {
  const auto r = result_set({{"https://www.reddit.com/r/cooking/comments/1/", "", "", 1, 0, 0},
                             {"https://www.reddit.com/r/Cooking/comments/2/", "", "", 2, 0, 0},
                             {"https://www.reddit.com/r/cooking/comments/3/", "", "", 1, 1, 0},
                             {"https://www.reddit.com/r/cooking/comments/1/", "", "", 1, 2, 0},
                             {"https://www.reddit.com/user/x/", "", "", 1, 2, 0}});
  const auto c = sa::extract_from_serp(r, sa::EntityKind::kSubreddit);
  EXPECT_EQ(c.count("cooking"), 3u);
  EXPECT_EQ(c.size(), 1u);
  EXPECT_LE(c.total(), r.unique_urls().size());
}

TEST(ExtractFromSerp, HashtagsFromTitlesAndSnippets) {
  const auto r = result_set({{"https://twitter.com/a/status/1", "", "... #linux ...", 1, 0, 0},
                             {"https://twitter.com/a/status/2", "", "... #linux #money ...", 2, 0, 0},
                             {"https://twitter.com/a/status/3", "#日本", "", 3, 0, 0}});
  const auto c = sa::extract_from_serp(r, sa::EntityKind::kHashtag);
  EXPECT_EQ(c.count("linux"), 2u);
  EXPECT_EQ(c.count("money"), 1u);
  EXPECT_EQ(c.size(), 2u);
  const auto all = sa::extract_from_serp(r, sa::EntityKind::kHashtag, sa::HashtagFilter{false});
  EXPECT_EQ(all.count("日本"), 1u);
}

TEST(ExtractFromSerp, EmptyResultSet) {
  EXPECT_TRUE(sa::extract_from_serp(result_set({}), sa::EntityKind::kSubreddit).empty());
  EXPECT_TRUE(sa::extract_from_serp(result_set({}), sa::EntityKind::kHashtag).empty());
}

// Property: permuting items leaves counts unchanged; no emitted entity has
// uppercase, '#', or "/r/".
TEST(ExtractFromSerp, PermutationInvariantAndClean) {
  std::mt19937_64 gen(4);
  const char* subs[] = {"AskReddit", "pics", "Gaming", "ffxiv"};
  const char* words[] = {"#Linux", "#money", "#NFT", "plain", "#a_b", "r/x"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<sa::SerpItem> items;
    const int n = static_cast<int>(gen() % 15);
    // Content is a function of the URL, as it is for a real result page.
    for (int i = 0; i < n; ++i) {
      const std::uint64_t sub = gen() % 4, post = gen() % 6;
      std::string snippet;
      for (std::uint64_t w = 0; w < 4; ++w) snippet += std::string(words[(sub * 7 + post * 3 + w * w) % 6]) + " ";
      items.push_back({"https://www.reddit.com/r/" + std::string(subs[sub]) + "/c/" + std::to_string(post),
                       "", snippet, i + 1, 0, 0});
    }
    auto shuffled = items;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    for (auto kind : {sa::EntityKind::kSubreddit, sa::EntityKind::kHashtag}) {
      const auto a = sa::extract_from_serp(result_set(items), kind);
      EXPECT_EQ(a, sa::extract_from_serp(result_set(shuffled), kind));
      for (const auto& [e, c] : a.counts()) {
        EXPECT_EQ(e, sa::text::to_lower(e));
        EXPECT_EQ(e.find('#'), std::string::npos);
        EXPECT_EQ(e.find("/r/"), std::string::npos);
      }
    }
  }
}

TEST(CorpusExtractors, HashtagAndFieldExtractors) {
  const auto rec = sa::Json::parse(R"({"text":"Go #Team #チーム","subreddit":"/r/AskReddit"})");
  std::vector<std::string> out;
  sa::hashtag_extractor({"text"})(rec, out);
  EXPECT_EQ(out, (Tags{"team"}));
  out.clear();
  sa::hashtag_extractor({"text"}, sa::HashtagFilter{false})(rec, out);
  EXPECT_EQ(out, (Tags{"team", "チーム"}));
  out.clear();
  sa::field_extractor("subreddit")(rec, out);
  EXPECT_EQ(out, (Tags{"AskReddit"}));  // TokenCounts::add lowercases
}

TEST(EntityKind, ParseAndName) {
  EXPECT_EQ(sa::parse_entity_kind("hashtag"), sa::EntityKind::kHashtag);
  EXPECT_EQ(sa::entity_kind_name(sa::EntityKind::kSubreddit), "subreddit");
  EXPECT_THROW(sa::parse_entity_kind("user"), sa::Error);
}

}  // namespace
