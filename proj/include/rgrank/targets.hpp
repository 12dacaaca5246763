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

#pragma once

#include <string>
#include <vector>

#include "rgrank/errors.hpp"
#include "rgrank/interaction_matrix.hpp"

namespace rgrank {

enum class TargetVariant {
  kFull,               // W = |I_x| everywhere, V_x = |I_x| / N
  kSampledDerived,     // negatives weighted |I_x|(n+1)/N, V_x = |I_x|(n+1)/N^2
  kHyperparameterized, // W = 1 on positives, alpha on negatives, V_x = beta
  kWrmf,               // classic WRMF: targets r, W = alpha+1 / 1, no V
};

struct TargetSpec {
  TargetVariant variant = TargetVariant::kFull;
  int n_samples = 1;   // kSampledDerived
  double alpha = 1.0;  // kHyperparameterized, kWrmf
  double beta = 0.0;   // kHyperparameterized

  static TargetSpec full() { return {}; }
  static TargetSpec sampled(int n) {
    return {TargetVariant::kSampledDerived, n, 1.0, 0.0};
  }
  static TargetSpec hyper(double alpha, double beta) {
    return {TargetVariant::kHyperparameterized, 1, alpha, beta};
  }
  static TargetSpec wrmf(double alpha) {
    return {TargetVariant::kWrmf, 1, alpha, 0.0};
  }
};

// Targets S, weights W and interaction coefficients V, stored per context.
// Every entry of row x is either a positive (y in I_x) or a negative, and
// each kind has one value per row:
//
//   S_{x,y} = s_pos[x] on positives, s_neg on negatives
//   W_{x,y} = w_pos[x] on positives, w_neg[x] on negatives
//
// so memory is O(M); nothing is ever materialized as an M x N matrix.
struct TargetMatrices {
  TargetSpec spec;
  Id num_contexts = 0;
  Id num_objects = 0;
  std::vector<double> s_pos;
  double s_neg = -1.0;
  std::vector<double> w_pos;
  std::vector<double> w_neg;
  std::vector<double> v;
  std::vector<std::size_t> degree;

  double target(Id x, bool positive) const {
    return positive ? s_pos[x] : s_neg;
  }
  double weight(Id x, bool positive) const {
    return positive ? w_pos[x] : w_neg[x];
  }
  // Sum over all N objects of W_{x,y}.
  double row_weight_sum(Id x) const {
    return static_cast<double>(num_objects) * w_neg[x] +
           static_cast<double>(degree[x]) * (w_pos[x] - w_neg[x]);
  }
  bool row_constant_weights() const {
    for (Id x = 0; x < num_contexts; ++x) {
      if (w_pos[x] != w_neg[x]) return false;
    }
    return true;
  }
};

inline TargetMatrices build_targets(const InteractionMatrix& matrix,
                                    const TargetSpec& spec) {
  const Id m = matrix.num_contexts();
  const double n = static_cast<double>(matrix.num_objects());
  switch (spec.variant) {
    case TargetVariant::kSampledDerived:
      if (spec.n_samples < 1) {
        throw InvalidArgument("sampled-derived targets need n >= 1");
      }
      break;
    case TargetVariant::kHyperparameterized:
      if (!(spec.alpha > 0)) {
        throw InvalidArgument("hyperparameterized targets need alpha > 0");
      }
      break;
    case TargetVariant::kWrmf:
      if (!(spec.alpha >= 0)) throw InvalidArgument("WRMF needs alpha >= 0");
      break;
    case TargetVariant::kFull:
      break;
  }
  TargetMatrices t;
  t.spec = spec;
  t.num_contexts = m;
  t.num_objects = matrix.num_objects();
  t.s_pos.resize(m);
  t.w_pos.resize(m);
  t.w_neg.resize(m);
  t.v.resize(m);
  t.degree = matrix.degrees();
  t.s_neg = spec.variant == TargetVariant::kWrmf ? 0.0 : -1.0;
  for (Id x = 0; x < m; ++x) {
    const double d = static_cast<double>(t.degree[x]);
    if (t.degree[x] == 0) throw ZeroDegreeError(static_cast<std::size_t>(x));
    t.s_pos[x] = n / d - 1.0;
    switch (spec.variant) {
      case TargetVariant::kFull:
        t.w_pos[x] = d;
        t.w_neg[x] = d;
        t.v[x] = d / n;
        break;
      case TargetVariant::kSampledDerived: {
        const double np1 = spec.n_samples + 1.0;
        t.w_pos[x] = d;
        t.w_neg[x] = d * np1 / n;
        t.v[x] = d * np1 / (n * n);
        break;
      }
      case TargetVariant::kHyperparameterized:
        t.w_pos[x] = 1.0;
        t.w_neg[x] = spec.alpha;
        t.v[x] = spec.beta;
        break;
      case TargetVariant::kWrmf:
        t.s_pos[x] = 1.0;
        t.w_pos[x] = spec.alpha + 1.0;
        t.w_neg[x] = 1.0;
        t.v[x] = 0.0;
        break;
    }
  }
  return t;
}

inline std::string to_string(TargetVariant v) {
  switch (v) {
    case TargetVariant::kFull: return "full";
    case TargetVariant::kSampledDerived: return "sampled";
    case TargetVariant::kHyperparameterized: return "hyper";
    case TargetVariant::kWrmf: return "wrmf";
  }
  return "?";
}

}  // namespace rgrank
