/*
 * Copyright 2026 The rgrank Authors.
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
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rgrank/interaction_matrix.hpp"
#include "rgrank/interaction_set.hpp"

namespace rgrank {
namespace {

InteractionSet random_set(std::mt19937_64& rng, Id m, Id n, double density) {
  std::bernoulli_distribution keep(density);
  std::vector<Interaction> entries;
  for (Id x = 0; x < m; ++x) {
    for (Id y = 0; y < n; ++y) {
      if (keep(rng)) entries.push_back({x, y});
    }
  }
  return InteractionSet(std::move(entries), m, n);
}

// Peels nodes below the threshold in the given order until nothing changes.
// Returns the surviving edges in original ids.
std::set<std::pair<Id, Id>> peel(const InteractionSet& set, int k,
                                 const std::vector<int>& order) {
  std::set<std::pair<Id, Id>> alive;
  for (const auto& e : set.entries()) alive.insert({e.context, e.object});
  const Id m = set.num_contexts();
  bool changed = true;
  while (changed) {
    changed = false;
    for (int v : order) {
      int degree = 0;
      for (const auto& [x, y] : alive) {
        if ((v < m && x == v) || (v >= m && y == v - m)) ++degree;
      }
      if (degree == 0 || degree >= k) continue;
      for (auto it = alive.begin(); it != alive.end();) {
        if ((v < m && it->first == v) || (v >= m && it->second == v - m)) {
          it = alive.erase(it);
        } else {
          ++it;
        }
      }
      changed = true;
    }
  }
  return alive;
}

std::set<std::pair<Id, Id>> labelled_edges(const InteractionSet& set) {
  std::set<std::pair<Id, Id>> out;
  for (const auto& e : set.entries()) {
    out.insert({static_cast<Id>(std::stoi(set.context_label(e.context))),
                static_cast<Id>(std::stoi(set.object_label(e.object)))});
  }
  return out;
}

TEST(LoadInteractions, RatingThresholdDropsLowRows) {
  std::istringstream in("u1 i1 5\nu1 i2 2\nu2 i1 4\n");
  DelimitedFormat fmt;
  fmt.rating_column = 2;
  fmt.rating_threshold = 3.0;
  const auto set = load_interactions(in, fmt);
  EXPECT_EQ(set.size(), 2u);
  EXPECT_EQ(set.num_contexts(), 2);
  EXPECT_EQ(set.num_objects(), 1);
  EXPECT_EQ(set.context_label(0), "u1");
  EXPECT_EQ(set.object_label(0), "i1");
}

TEST(LoadInteractions, NoRatingColumnKeepsEveryRow) {
  std::istringstream in("a,x\na,y\nb,x\nc,z\n");
  DelimitedFormat fmt;
  fmt.delimiter = ',';
  const auto set = load_interactions(in, fmt);
  EXPECT_EQ(set.size(), 4u);
  EXPECT_EQ(set.num_contexts(), 3);
  EXPECT_EQ(set.num_objects(), 3);
}

TEST(LoadInteractions, DuplicatePairStoredOnce) {
  std::istringstream in("a\tx\na\tx\nb\tx\n");
  const auto set = load_interactions(in, DelimitedFormat{});
  EXPECT_EQ(set.size(), 2u);
  EXPECT_TRUE(set.contains(0, 0));
  EXPECT_TRUE(set.contains(1, 0));
}

TEST(LoadInteractions, HeaderAndColumnOrder) {
  std::istringstream in("item,user,ts\nx,a,100\ny,a,101\n");
  DelimitedFormat fmt;
  fmt.delimiter = ',';
  fmt.context_column = 1;
  fmt.object_column = 0;
  fmt.timestamp_column = 2;
  fmt.header = true;
  const auto set = load_interactions(in, fmt);
  EXPECT_EQ(set.num_contexts(), 1);
  EXPECT_EQ(set.num_objects(), 2);
  EXPECT_EQ(set.object_label(1), "y");
}

TEST(LoadInteractions, MalformedRowNamesLine) {
  std::istringstream in("a x 5\nb y\n");
  DelimitedFormat fmt;
  fmt.rating_column = 2;
  try {
    load_interactions(in, fmt);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream bad_rating("a x five\n");
  EXPECT_THROW(load_interactions(bad_rating, fmt), ParseError);
}

TEST(LoadInteractions, EverythingFilteredIsEmptyDatasetError) {
  std::istringstream in("a x 1\nb y 2\n");
  DelimitedFormat fmt;
  fmt.rating_column = 2;
  fmt.rating_threshold = 3.0;
  EXPECT_THROW(load_interactions(in, fmt), EmptyDatasetError);
}

TEST(LoadInteractions, GzipInputIsTransparent) {
  const auto path = std::filesystem::temp_directory_path() /
                    ("rgrank_gz_" + std::to_string(::getpid()) + ".txt.gz");
  const std::string text = "u1\ti1\nu1\ti2\nu2\ti1\n";
  gzFile f = gzopen(path.string().c_str(), "wb");
  ASSERT_NE(f, nullptr);
  gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
  gzclose(f);
  const auto set = load_interactions_file(path.string(), DelimitedFormat{});
  std::filesystem::remove(path);
  EXPECT_EQ(set.size(), 3u);
  EXPECT_EQ(set.num_contexts(), 2);
}

TEST(InteractionSet, OutOfRangeIdsRejected) {
  EXPECT_THROW(InteractionSet({{0, 3}}, 1, 3), InvalidArgument);
  EXPECT_THROW(InteractionSet({{-1, 0}}, 1, 3), InvalidArgument);
}

TEST(KcoreFilter, AllBelowThresholdGivesEmpty) {
  // Every node of this 3x3 cycle-like graph has degree 2.
  const InteractionSet set({{0, 0}, {0, 1}, {1, 1}, {1, 2}, {2, 2}, {2, 0}},
                           3, 3);
  const auto out = kcore_filter(set, 5);
  EXPECT_TRUE(out.empty());
  EXPECT_EQ(out.num_contexts(), 0);
  EXPECT_EQ(out.num_objects(), 0);
}

TEST(KcoreFilter, CascadeReachesEmptyFixpoint) {
  // Contexts {a, b}, objects {1, 2, 3}, edges a1 a2 a3 b1 with threshold 2.
  // Peeling b drops object 1 to degree 1; objects 2 and 3 start at degree 1,
  // so once they go context a has nothing left either.
  const InteractionSet set({{0, 0}, {0, 1}, {0, 2}, {1, 0}}, 2, 3,
                           {"a", "b"}, {"1", "2", "3"});
  const auto out = kcore_filter(set, 2);
  EXPECT_TRUE(out.empty());
  std::vector<int> order(5);
  std::iota(order.begin(), order.end(), 0);
  EXPECT_TRUE(peel(set, 2, order).empty());
}

TEST(KcoreFilter, ThresholdOneIsIdentity) {
  std::mt19937_64 rng(3);
  auto set = random_set(rng, 6, 7, 0.4);
  // Drop isolated ids so that identity is exact.
  set = kcore_filter(set, 1);
  EXPECT_EQ(kcore_filter(set, 1), set);
}

TEST(KcoreFilter, SurvivorsKeepLabels) {
  const InteractionSet set(
      {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 2}}, 3, 3, {"u", "v", "w"},
      {"p", "q", "r"});
  const auto out = kcore_filter(set, 2);
  EXPECT_EQ(out.size(), 4u);
  EXPECT_EQ(out.context_labels(), (std::vector<std::string>{"u", "v"}));
  EXPECT_EQ(out.object_labels(), (std::vector<std::string>{"p", "q"}));
}

TEST(KcoreFilter, IdempotentAndMaximalOnRandomGraphs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const Id m = 1 + static_cast<Id>(rng() % 6);
    const Id n = 1 + static_cast<Id>(rng() % 6);
    const int k = 1 + static_cast<int>(rng() % 3);
    const double density = 0.3 + 0.1 * static_cast<double>(rng() % 5);
    std::vector<std::string> cl(m), ol(n);
    for (Id i = 0; i < m; ++i) cl[i] = std::to_string(i);
    for (Id i = 0; i < n; ++i) ol[i] = std::to_string(i);
    auto base = random_set(rng, m, n, density);
    const InteractionSet set(base.entries(), m, n, cl, ol);

    const auto once = kcore_filter(set, k);
    EXPECT_EQ(kcore_filter(once, k), once);
    for (const auto d : once.context_degrees()) EXPECT_GE(d, std::size_t(k));
    for (const auto d : once.object_degrees()) EXPECT_GE(d, std::size_t(k));

    // Any peeling order reaches the same fixpoint.
    std::vector<int> order(static_cast<std::size_t>(m + n));
    std::iota(order.begin(), order.end(), 0);
    for (int shuffle = 0; shuffle < 4; ++shuffle) {
      std::shuffle(order.begin(), order.end(), rng);
      EXPECT_EQ(peel(set, k, order), labelled_edges(once))
          << "trial " << trial;
    }
  }
}

TEST(SplitPerUser, TenInteractionsSplitEightOneOne) {
  std::vector<Interaction> e;
  for (Id y = 0; y < 10; ++y) e.push_back({0, y});
  const auto b = split_per_user(InteractionSet(e, 1, 10), {}, 7);
  EXPECT_EQ(b.train.size(), 8u);
  EXPECT_EQ(b.valid.size(), 1u);
  EXPECT_EQ(b.test.size(), 1u);
}

TEST(SplitPerUser, FiveInteractionsUseMinimumOne) {
  std::vector<Interaction> e;
  for (Id y = 0; y < 5; ++y) e.push_back({0, y});
  const auto b = split_per_user(InteractionSet(e, 1, 5), {}, 7);
  EXPECT_EQ(b.train.size(), 3u);
  EXPECT_EQ(b.valid.size(), 1u);
  EXPECT_EQ(b.test.size(), 1u);
}

TEST(SplitPerUser, ShortContextsGoToTrainOrError) {
  const InteractionSet set({{0, 0}, {0, 1}, {1, 0}, {1, 1}, {1, 2}}, 2, 3);
  const auto b = split_per_user(set, {}, 1);
  EXPECT_EQ(b.short_contexts, 1u);
  EXPECT_TRUE(b.train.contains(0, 0));
  EXPECT_TRUE(b.train.contains(0, 1));
  EXPECT_THROW(split_per_user(set, {}, 1, ShortContextPolicy::kError),
               InvalidArgument);
}

TEST(SplitPerUser, BadRatiosRejected) {
  const InteractionSet set({{0, 0}}, 1, 1);
  EXPECT_THROW(split_per_user(set, {0.5, 0.1, 0.1}, 1), InvalidArgument);
  EXPECT_THROW(split_per_user(set, {1.0, 0.0, 0.0}, 1), InvalidArgument);
}

TEST(SplitPerUser, PartitionAndDeterminismOnRandomSets) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const auto set = random_set(rng, 8, 30, 0.35);
    const std::uint64_t seed = rng();
    const auto b = split_per_user(set, {}, seed);
    EXPECT_EQ(b.train.size() + b.valid.size() + b.test.size(), set.size());
    std::vector<Interaction> all;
    for (const auto* part : {&b.train, &b.valid, &b.test}) {
      all.insert(all.end(), part->entries().begin(), part->entries().end());
    }
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, set.entries());  // union equals input, no overlap
    const auto again = split_per_user(set, {}, seed);
    EXPECT_EQ(again.train, b.train);
    EXPECT_EQ(again.valid, b.valid);
    EXPECT_EQ(again.test, b.test);

    const auto deg = set.context_degrees();
    const auto vdeg = b.valid.context_degrees();
    const auto tdeg = b.test.context_degrees();
    for (Id x = 0; x < set.num_contexts(); ++x) {
      if (deg[x] < 3) continue;
      const auto want = std::max<std::size_t>(
          1, static_cast<std::size_t>(0.1 * static_cast<double>(deg[x]) +
                                      1e-9));
      EXPECT_EQ(vdeg[x], want);
      EXPECT_EQ(tdeg[x], want);
    }
  }
}

TEST(BuildMatrix, SortsRowsAndCountsDegrees) {
  const InteractionSet set({{0, 2}, {0, 0}, {1, 1}}, 2, 3);
  const auto m = build_matrix(set);
  EXPECT_EQ(std::vector<Id>(m.row(0).begin(), m.row(0).end()),
            (std::vector<Id>{0, 2}));
  EXPECT_EQ(std::vector<Id>(m.row(1).begin(), m.row(1).end()),
            (std::vector<Id>{1}));
  EXPECT_EQ(m.degrees(), (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(std::vector<Id>(m.column(0).begin(), m.column(0).end()),
            (std::vector<Id>{0}));
  EXPECT_EQ(m.object_degree(1), 1u);
}

TEST(BuildMatrix, SingleEntry) {
  const auto m = build_matrix(InteractionSet({{0, 0}}, 1, 1));
  EXPECT_EQ(m.degrees(), (std::vector<std::size_t>{1}));
  EXPECT_EQ(m.num_positives(), 1u);
}

TEST(BuildMatrix, DegreeSumMatchesPositivesOnRandomInput) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const auto set = random_set(rng, 1 + rng() % 20, 1 + rng() % 20, 0.2);
    const auto m = build_matrix(set);
    const auto deg = m.degrees();
    EXPECT_EQ(std::accumulate(deg.begin(), deg.end(), std::size_t{0}),
              m.num_positives());
    EXPECT_EQ(m.num_positives(), set.size());
    std::size_t col_total = 0;
    for (Id y = 0; y < m.num_objects(); ++y) col_total += m.object_degree(y);
    EXPECT_EQ(col_total, set.size());
    EXPECT_EQ(to_set(m), set);
  }
}

TEST(Snapshot, TextAndBinaryRoundTrip) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto set = random_set(rng, 1 + rng() % 15, 1 + rng() % 15, 0.3);
    const auto m = build_matrix(set);
    std::stringstream text;
    write_matrix_text(text, m);
    EXPECT_EQ(read_matrix(text), m);
    std::stringstream bin;
    write_matrix_binary(bin, m);
    EXPECT_EQ(read_matrix(bin), m);
    std::stringstream s;
    write_set(s, set);
    EXPECT_EQ(read_set(s), set);
  }
}

TEST(Snapshot, TextHeaderFormat) {
  std::ostringstream out;
  write_matrix_text(out, build_matrix(InteractionSet({{0, 2}, {0, 0}, {1, 1}},
                                                     2, 3)));
  EXPECT_EQ(out.str(), "2 3 3\n0 2\n1\n");
}

TEST(Snapshot, InconsistentHeaderRejected) {
  std::istringstream in("2 3 4\n0 2\n1\n");
  EXPECT_THROW(read_matrix(in), ParseError);
  std::istringstream range("1 2 1\n5\n");
  EXPECT_THROW(read_matrix(range), ParseError);
}

TEST(IdMap, RoundTrip) {
  const InteractionSet set({{0, 0}, {1, 1}}, 2, 2, {"alice", "bob"},
                           {"m1", "m2"});
  std::stringstream s;
  write_id_map(s, set);
  const auto map = read_id_map(s);
  EXPECT_EQ(map.contexts, set.context_labels());
  EXPECT_EQ(map.objects, set.object_labels());
}

TEST(Delimited, RoundTripThroughLoader) {
  std::mt19937_64 rng(21);
  auto raw = random_set(rng, 7, 9, 0.4);
  const auto set = kcore_filter(raw, 1);
  std::stringstream s;
  write_delimited(s, set);
  const auto back = load_interactions(s, DelimitedFormat{});
  EXPECT_EQ(back.size(), set.size());
  EXPECT_EQ(labelled_edges(back), labelled_edges(set));
}

}  // namespace
}  // namespace rgrank
