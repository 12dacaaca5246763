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

// Synthetic low-rank implicit feedback, in two flavours.
//
// kBernoulliMean: the expected interaction matrix is exactly rank K. P* and
// Q* have Gamma(0.3, 1) entries (the usual Poisson-factorization prior);
// each row of P* Q*^T is rescaled so that it sums to a target degree drawn
// from [min_positives, max_positives], entries are capped at 1, and every
// pair is then an independent Bernoulli draw.
//
// kTopScores: Gaussian P*, Q*; the top-|I_x| objects of each context's score
// row (optionally after adding Gaussian noise) are its positives. Only the
// latent scores are low rank here, not the binary matrix.

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "rgrank/errors.hpp"
#include "rgrank/factor_model.hpp"
#include "rgrank/interaction_set.hpp"

namespace rgrank {

enum class SyntheticMode { kBernoulliMean, kTopScores };

struct SyntheticSpec {
  SyntheticMode mode = SyntheticMode::kBernoulliMean;
  Id num_contexts = 200;
  Id num_objects = 100;
  int true_dim = 8;
  int min_positives = 15;
  int max_positives = 25;
  double noise = 0.0;  // kTopScores: stddev added before thresholding
  std::uint64_t seed = 0;
};

inline InteractionSet generate_low_rank(const SyntheticSpec& spec) {
  if (spec.num_contexts < 1 || spec.num_objects < 1 || spec.true_dim < 1) {
    throw InvalidArgument("synthetic sizes must be positive");
  }
  if (spec.min_positives < 1 || spec.max_positives < spec.min_positives ||
      spec.max_positives > spec.num_objects) {
    throw InvalidArgument("need 1 <= min_positives <= max_positives <= N");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> count(spec.min_positives,
                                           spec.max_positives);
  std::vector<Interaction> entries;
  RowMatrix p(spec.num_contexts, spec.true_dim);
  RowMatrix q(spec.num_objects, spec.true_dim);

  if (spec.mode == SyntheticMode::kBernoulliMean) {
    std::gamma_distribution<double> gamma(0.3, 1.0);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = gamma(rng);
    for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = gamma(rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Id x = 0; x < spec.num_contexts; ++x) {
      Vector mean = q * p.row(x).transpose();
      const double total = mean.sum();
      const int d = count(rng);
      if (total > 0) mean *= d / total;
      else mean.setConstant(static_cast<double>(d) / spec.num_objects);
      for (Id y = 0; y < spec.num_objects; ++y) {
        if (unit(rng) < std::min(1.0, mean[y])) entries.push_back({x, y});
      }
    }
    return InteractionSet(std::move(entries), spec.num_contexts,
                          spec.num_objects);
  }

  std::normal_distribution<double> gauss;
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = gauss(rng);
  for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = gauss(rng);
  std::vector<Id> ids(static_cast<std::size_t>(spec.num_objects));
  for (Id x = 0; x < spec.num_contexts; ++x) {
    Vector s = q * p.row(x).transpose();
    if (spec.noise > 0) {
      for (auto& v : s) v += spec.noise * gauss(rng);
    }
    const int d = count(rng);
    std::iota(ids.begin(), ids.end(), 0);
    std::partial_sort(ids.begin(), ids.begin() + d, ids.end(),
                      [&](Id a, Id b) { return s[a] > s[b] || (s[a] == s[b] && a < b); });
    for (int i = 0; i < d; ++i) entries.push_back({x, ids[i]});
  }
  return InteractionSet(std::move(entries), spec.num_contexts,
                        spec.num_objects);
}

}  // namespace rgrank
