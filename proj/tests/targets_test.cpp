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

#include <random>
#include <vector>

#include "rgrank/interaction_matrix.hpp"
#include "rgrank/targets.hpp"

namespace rgrank {
namespace {

// One context with two positives among ten objects.
InteractionMatrix two_of_ten() {
  return InteractionMatrix::from_rows(1, 10, {{3, 7}});
}

TEST(BuildTargets, TargetValues) {
  const auto t = build_targets(two_of_ten(), TargetSpec::full());
  EXPECT_DOUBLE_EQ(t.target(0, true), 4.0);
  EXPECT_DOUBLE_EQ(t.target(0, false), -1.0);
}

TEST(BuildTargets, FullVariant) {
  const auto t = build_targets(two_of_ten(), TargetSpec::full());
  EXPECT_DOUBLE_EQ(t.weight(0, true), 2.0);
  EXPECT_DOUBLE_EQ(t.weight(0, false), 2.0);
  EXPECT_DOUBLE_EQ(t.v[0], 0.2);
  EXPECT_TRUE(t.row_constant_weights());
  EXPECT_DOUBLE_EQ(t.row_weight_sum(0), 20.0);
}

TEST(BuildTargets, SampledVariant) {
  const auto t = build_targets(two_of_ten(), TargetSpec::sampled(4));
  EXPECT_DOUBLE_EQ(t.weight(0, true), 2.0);
  EXPECT_DOUBLE_EQ(t.weight(0, false), 1.0);
  EXPECT_DOUBLE_EQ(t.v[0], 0.1);
  EXPECT_FALSE(t.row_constant_weights());
  EXPECT_DOUBLE_EQ(t.row_weight_sum(0), 2 * 2.0 + 8 * 1.0);
}

TEST(BuildTargets, HyperparameterizedVariant) {
  const auto t = build_targets(two_of_ten(), TargetSpec::hyper(0.3, 0.05));
  EXPECT_DOUBLE_EQ(t.weight(0, true), 1.0);
  EXPECT_DOUBLE_EQ(t.weight(0, false), 0.3);
  EXPECT_DOUBLE_EQ(t.v[0], 0.05);
  EXPECT_DOUBLE_EQ(t.target(0, true), 4.0);
  EXPECT_THROW(build_targets(two_of_ten(), TargetSpec::hyper(0.0, 0.1)),
               InvalidArgument);
}

TEST(BuildTargets, WrmfVariant) {
  const auto t = build_targets(two_of_ten(), TargetSpec::wrmf(9.0));
  EXPECT_DOUBLE_EQ(t.target(0, true), 1.0);
  EXPECT_DOUBLE_EQ(t.target(0, false), 0.0);
  EXPECT_DOUBLE_EQ(t.weight(0, true), 10.0);
  EXPECT_DOUBLE_EQ(t.weight(0, false), 1.0);
  EXPECT_DOUBLE_EQ(t.v[0], 0.0);
}

TEST(BuildTargets, ZeroDegreeNamesContext) {
  const auto m = InteractionMatrix::from_rows(3, 4, {{0}, {1}, {}});
  try {
    build_targets(m, TargetSpec::full());
    FAIL() << "expected ZeroDegreeError";
  } catch (const ZeroDegreeError& e) {
    EXPECT_EQ(e.context(), 2u);
  }
}

TEST(BuildTargets, SampledNeedsPositiveN) {
  EXPECT_THROW(build_targets(two_of_ten(), TargetSpec::sampled(0)),
               InvalidArgument);
}

TEST(BuildTargets, RowMeanOfShiftedTargetIsOne) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const Id m = 1 + static_cast<Id>(rng() % 10);
    const Id n = 2 + static_cast<Id>(rng() % 40);
    std::vector<std::vector<Id>> rows(m);
    for (Id x = 0; x < m; ++x) {
      for (Id y = 0; y < n; ++y) {
        if (rng() % 4 == 0) rows[x].push_back(y);
      }
      if (rows[x].empty()) rows[x].push_back(static_cast<Id>(rng() % n));
    }
    const auto mat = InteractionMatrix::from_rows(m, n, rows);
    const int samples = 1 + static_cast<int>(rng() % 8);
    for (const auto& spec : {TargetSpec::full(), TargetSpec::sampled(samples)}) {
      const auto t = build_targets(mat, spec);
      for (Id x = 0; x < m; ++x) {
        double total = 0.0;
        for (Id y = 0; y < n; ++y) {
          const bool pos = mat.contains(x, y);
          total += t.target(x, pos) + 1.0;
          EXPECT_GT(t.weight(x, pos), 0.0);
        }
        EXPECT_NEAR(total / n, 1.0, 1e-12);
        const double d = static_cast<double>(rows[x].size());
        EXPECT_DOUBLE_EQ(t.target(x, true), n / d - 1.0);
      }
    }
  }
}

}  // namespace
}  // namespace rgrank
