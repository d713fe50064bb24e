#!/usr/bin/env python3
# Copyright 2026 The serp-audit Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates the mini fixture corpus, the fixture SERP and the label/score
tables. Output is committed; rerunning must reproduce it byte for byte."""

import json
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))
rng = random.Random(20230401)

TOPICS = {
    "gaming": ["game", "player", "level", "console", "steam", "quest", "boss", "patch"],
    "adult": ["night", "body", "date", "photo", "selfie", "spicy"],
    "crypto": ["coin", "token", "wallet", "market", "price", "moon", "chain"],
    "general": ["today", "people", "world", "news", "story", "question", "help",
                "music", "movie", "science", "city", "friend", "life", "work",
                "dog", "cat", "food", "home", "school", "water"],
}

# name -> (topic, activity weight, moderation category)
SUBREDDITS = {
    "askreddit": ("general", 60, "public"),
    "funny": ("general", 45, "public"),
    "worldnews": ("general", 40, "public"),
    "aww": ("general", 30, "public"),
    "science": ("general", 22, "public"),
    "movies": ("general", 18, "public"),
    "music": ("general", 15, "public"),
    "todayilearned": ("general", 12, "public"),
    "cooking": ("general", 8, "public"),
    "cityporn": ("general", 5, "restricted"),
    "gaming": ("gaming", 14, "public"),
    "pcgaming": ("gaming", 7, "public"),
    "minecraft": ("gaming", 5, "public"),
    "speedrun": ("gaming", 3, "public"),
    "gonewild": ("adult", 50, "restricted"),
    "nsfw": ("adult", 35, "restricted"),
    "realgirls": ("adult", 20, "forbidden"),
    "afterdark": ("adult", 10, "private"),
    "cryptocurrency": ("crypto", 40, "public"),
    "bitcoin": ("crypto", 30, "public"),
    "ethtrader": ("crypto", 15, "forbidden"),
    "dogecoin": ("crypto", 12, "restricted"),
    "satoshistreet": ("crypto", 6, "private"),
}

FILLER = ["the", "a", "is", "this", "my", "of", "and", "to", "in", "for", "with", "it"]

HASHTAGS = {
    "gaming": ["gaming", "minecraft", "esports", "speedrun", "indiegame"],
    "adult": ["nsfw", "onlyfans", "spicy"],
    "crypto": ["bitcoin", "crypto", "nft", "btc", "ethereum", "web3"],
    "general": ["news", "music", "science", "dogsoftwitter", "catsoftwitter", "food",
                "travel", "mondaymotivation", "photography"],
}
HASHTAG_WEIGHT = {"gaming": 2, "adult": 4, "crypto": 6, "general": 5}
NON_ENGLISH_TAGS = ["日本", "café", "موسيقى"]


def weighted_choice(items):
    total = sum(w for _, w in items)
    x = rng.random() * total
    for item, w in items:
        x -= w
        if x < 0:
            return item
    return items[-1][0]


def title_for(topic):
    words = [rng.choice(TOPICS[topic]) for _ in range(rng.randint(2, 3))]
    words += [rng.choice(TOPICS["general"]) for _ in range(rng.randint(1, 3))]
    words += [rng.choice(FILLER) for _ in range(rng.randint(1, 3))]
    rng.shuffle(words)
    words[0] = words[0].capitalize()
    return " ".join(words) + rng.choice(["", "?", "!", "..."])


def write_reddit():
    subs = [(name, meta[1]) for name, meta in sorted(SUBREDDITS.items())]
    lines = []
    for i in range(700):
        sub = weighted_choice(subs)
        rec = {"id": "p%04d" % i, "subreddit": sub if i % 9 else "r/" + sub.capitalize(),
               "title": title_for(SUBREDDITS[sub][0]), "score": rng.randint(0, 500)}
        lines.append(json.dumps(rec, ensure_ascii=False, sort_keys=True))
    lines.insert(123, '{"id": "broken", "subreddit": ')
    lines.insert(456, "not json at all")
    with open(os.path.join(HERE, "reddit_posts.ndjson"), "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def write_tweets():
    topics = sorted(HASHTAG_WEIGHT.items())
    lines = []
    for i in range(300):
        topic = weighted_choice(topics)
        tags = ["#" + rng.choice(HASHTAGS[topic]) for _ in range(rng.randint(1, 2))]
        if rng.random() < 0.3:
            tags.append("#" + rng.choice(HASHTAGS["general"]))
        if rng.random() < 0.05:
            tags.append("#" + rng.choice(NON_ENGLISH_TAGS))
        body = title_for(topic if topic != "adult" else "general") + " " + " ".join(tags)
        rec = {"id": str(10_000 + i), "text": body, "lang": "en"}
        lines.append(json.dumps(rec, ensure_ascii=False, sort_keys=True))
    with open(os.path.join(HERE, "tweets.ndjson"), "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def reddit_results(word, rep):
    # Adult and crypto communities never surface; gaming ones always do.
    visible = [s for s, m in sorted(SUBREDDITS.items()) if m[0] == "general"]
    related = [s for s in visible if s in ("askreddit", "worldnews", "funny")]
    if word in TOPICS["general"]:
        related = visible
    gaming = [s for s, m in sorted(SUBREDDITS.items()) if m[0] == "gaming"]
    start = (rep * 3 + len(word)) % len(related)
    picks = gaming[: 2 + rep % 2] + (related[start:] + related[:start])[:4]
    out = []
    for n, sub in enumerate(picks):
        out.append({"link": "https://www.reddit.com/r/%s/comments/x%d%d/%s_thread/" % (sub, rep, n, word),
                    "title": "%s - r/%s" % (word, sub), "snippet": "Discussion about %s" % word})
    if rep == 1:
        out.append({"link": "https://www.quora.com/What-is-%s" % word, "title": word, "snippet": ""})
    return out


def twitter_results(word, rep):
    visible = HASHTAGS["general"]
    start = (rep * 2 + len(word)) % len(visible)
    tags = HASHTAGS["gaming"][: 3 + rep % 2] + (visible[start:] + visible[:start])[:3]
    out = []
    for n in range(0, len(tags), 2):
        pair = " ".join("#" + t for t in tags[n:n + 2])
        out.append({"link": "https://twitter.com/user%d/status/%d%d" % (n, rep, n),
                    "title": "%s on X" % word, "snippet": "%s %s" % (word, pair)})
    return out


def write_serp():
    words = sorted({w for ws in TOPICS.values() for w in ws})
    queries = {}
    for site, fn in (("reddit.com", reddit_results), ("twitter.com", twitter_results)):
        for w in words:
            queries["site:%s %s" % (site, w)] = [fn(w, rep) for rep in range(3)]
    with open(os.path.join(HERE, "serp_fixture.json"), "w", encoding="utf-8") as f:
        json.dump({"queries": queries}, f, indent=1, sort_keys=True)
        f.write("\n")


def write_labels():
    rows = ["entity,category"] + ["%s,%s" % (s, m[2]) for s, m in sorted(SUBREDDITS.items())]
    with open(os.path.join(HERE, "labels.csv"), "w") as f:
        f.write("\n".join(rows) + "\n")


def write_scores():
    rows = ["post_id,group,toxic,obscene,insult"]
    for i in range(160):
        group = "in_serp" if i % 2 == 0 else "not_in_serp"
        base = 0.05 if group == "in_serp" else 0.15
        vals = [min(1.0, max(0.0, round(base + rng.gauss(0, 0.05), 4))) for _ in range(3)]
        rows.append("s%03d,%s,%s,%s,%s" % (i, group, *vals))
    with open(os.path.join(HERE, "scores.csv"), "w") as f:
        f.write("\n".join(rows) + "\n")


if __name__ == "__main__":
    write_reddit()
    write_tweets()
    write_serp()
    write_labels()
    write_scores()
