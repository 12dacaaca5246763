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

// Per-context and pairwise loss functions with analytic gradients.
//
// Scores of one context are a vector o of length N; `positives` lists the
// context's relevant objects I_x (sorted, non-empty). The RG losses are the
// second-order Taylor expansion of softmax cross-entropy at o = 0:
//
//   rg2(o) = -sum_{y in I_x} o_y + |I_x| / (2N) * ||o + 1||^2
//   rgx(o) = rg2(o) - |I_x| / (2N^2) * (1^T o)^2
//
// and sum_{y in I_x} sm(o, y) = rgx(o) + |I_x| (log N - 1/2) + O(||o||^3).

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "rgrank/errors.hpp"
#include "rgrank/factor_model.hpp"
#include "rgrank/interaction_matrix.hpp"

namespace rgrank {

struct LossValue {
  double value = 0.0;
  std::optional<Vector> gradient;
};

namespace detail {

inline void check_finite(const Eigen::Ref<const Vector>& o) {
  if (!o.allFinite()) throw InvalidScoreError("non-finite score");
}

inline void check_positives(std::span<const Id> positives, Eigen::Index n) {
  if (positives.empty()) {
    throw InvalidArgument("context needs at least one positive");
  }
  for (Id y : positives) {
    if (y < 0 || y >= n) throw InvalidArgument("positive id out of range");
  }
}

inline double log_sum_exp(const Eigen::Ref<const Vector>& o) {
  const double mx = o.maxCoeff();
  return mx + std::log((o.array() - mx).exp().sum());
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

// Max-shifted softmax.
inline Vector softmax_probs(const Eigen::Ref<const Vector>& o) {
  detail::check_finite(o);
  if (o.size() == 0) throw InvalidArgument("empty score vector");
  const double mx = o.maxCoeff();
  Vector p = (o.array() - mx).exp().matrix();
  p /= p.sum();
  return p;
}

// -log softmax(o)_y; gradient p - e_y.
inline LossValue sm_loss(const Eigen::Ref<const Vector>& o, Id y,
                         bool with_gradient = false) {
  detail::check_finite(o);
  if (y < 0 || y >= o.size()) throw InvalidArgument("object id out of range");
  LossValue out;
  out.value = detail::log_sum_exp(o) - o[y];
  if (with_gradient) {
    Vector g = softmax_probs(o);
    g[y] -= 1.0;
    out.gradient = std::move(g);
  }
  return out;
}

// Sum of sm_loss over every positive of the context.
inline LossValue sm_context_loss(const Eigen::Ref<const Vector>& o,
                                 std::span<const Id> positives,
                                 bool with_gradient = false) {
  detail::check_finite(o);
  detail::check_positives(positives, o.size());
  const double lse = detail::log_sum_exp(o);
  LossValue out;
  for (Id y : positives) out.value += lse - o[y];
  if (with_gradient) {
    Vector g = softmax_probs(o) * static_cast<double>(positives.size());
    for (Id y : positives) g[y] -= 1.0;
    out.gradient = std::move(g);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampled softmax.

struct SampledBatch {
  Id positive = 0;
  std::vector<Id> negatives;  // n draws, with replacement
  // Proposal probability of every object; empty means uniform (q = 1/N).
  std::vector<double> proposal;
  Id num_objects = 0;
};

// `o_values` holds the score of the positive followed by the scores of the
// negatives, in batch order. Negative logits are corrected by -log(N q_y);
// the gradient is with respect to `o_values`.
inline LossValue ssm_loss(const SampledBatch& batch,
                          const Eigen::Ref<const Vector>& o_values,
                          bool with_gradient = false) {
  const auto n = static_cast<Eigen::Index>(batch.negatives.size());
  if (n < 1) throw InvalidArgument("sampled softmax needs n >= 1 negatives");
  if (o_values.size() != n + 1) {
    throw DimensionMismatch("o_values must hold 1 + n scores");
  }
  if (batch.num_objects < 1) throw InvalidArgument("num_objects must be >= 1");
  detail::check_finite(o_values);
  const double big_n = static_cast<double>(batch.num_objects);
  if (!batch.proposal.empty()) {
    if (batch.proposal.size() != static_cast<std::size_t>(batch.num_objects)) {
      throw InvalidProposalError("proposal must cover every object");
    }
    double total = 0.0;
    for (double q : batch.proposal) {
      if (!(q >= 0) || !std::isfinite(q)) {
        throw InvalidProposalError("proposal probabilities must be >= 0");
      }
      total += q;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw InvalidProposalError("proposal probabilities must sum to 1");
    }
  }
  Vector corrected = o_values;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Id id = batch.negatives[j];
    if (id < 0 || id >= batch.num_objects) {
      throw InvalidArgument("sampled id out of range");
    }
    if (!batch.proposal.empty()) {
      const double q = batch.proposal[id];
      if (!(q > 0)) {
        throw InvalidProposalError("sampled object " + std::to_string(id) +
                                   " has zero proposal probability");
      }
      corrected[j + 1] -= std::log(big_n * q);
    }
  }
  LossValue out;
  out.value = detail::log_sum_exp(corrected) - corrected[0];
  if (with_gradient) {
    Vector g = softmax_probs(corrected);
    g[0] -= 1.0;
    out.gradient = std::move(g);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Weighted squared loss (WRMF weights).

// Sum over all pairs of w (o - r)^2 with w = alpha + 1 on positives and 1 on
// negatives. `scores` is the dense M x N score matrix; the gradient is its
// row-major flattening.
inline LossValue wsl_loss(const InteractionMatrix& matrix,
                          const RowMatrix& scores, double alpha,
                          bool with_gradient = false) {
  if (!(alpha >= 0)) throw InvalidArgument("alpha must be >= 0");
  if (scores.rows() != matrix.num_contexts() ||
      scores.cols() != matrix.num_objects()) {
    throw DimensionMismatch("score matrix shape does not match the data");
  }
  LossValue out;
  Vector g;
  if (with_gradient) g.resize(scores.size());
  for (Id x = 0; x < matrix.num_contexts(); ++x) {
    const auto row = matrix.row(x);
    auto it = row.begin();
    for (Id y = 0; y < matrix.num_objects(); ++y) {
      const bool positive = it != row.end() && *it == y;
      if (positive) ++it;
      const double w = positive ? alpha + 1.0 : 1.0;
      const double r = positive ? 1.0 : 0.0;
      const double diff = scores(x, y) - r;
      out.value += w * diff * diff;
      if (with_gradient) {
        g[x * matrix.num_objects() + y] = 2.0 * w * diff;
      }
    }
  }
  if (with_gradient) out.gradient = std::move(g);
  return out;
}

// ---------------------------------------------------------------------------
// RG losses, canonical (unabsorbed) scale.

inline LossValue rg2_context_loss(const Eigen::Ref<const Vector>& o,
                                  std::span<const Id> positives,
                                  bool with_gradient = false) {
  detail::check_finite(o);
  detail::check_positives(positives, o.size());
  const double n = static_cast<double>(o.size());
  const double coef = static_cast<double>(positives.size()) / (2.0 * n);
  LossValue out;
  for (Id y : positives) out.value -= o[y];
  out.value += coef * (o.array() + 1.0).square().sum();
  if (with_gradient) {
    Vector g = 2.0 * coef * (o.array() + 1.0).matrix();
    for (Id y : positives) g[y] -= 1.0;
    out.gradient = std::move(g);
  }
  return out;
}

inline LossValue rgx_context_loss(const Eigen::Ref<const Vector>& o,
                                  std::span<const Id> positives,
                                  bool with_gradient = false) {
  LossValue out = rg2_context_loss(o, positives, with_gradient);
  const double n = static_cast<double>(o.size());
  const double coef = static_cast<double>(positives.size()) / (2.0 * n * n);
  const double total = o.sum();
  out.value -= coef * total * total;
  if (with_gradient) out.gradient->array() -= 2.0 * coef * total;
  return out;
}

// Per-context optimum of the RG losses: eta_y = r_y N / |I_x| - 1.
inline Vector rg_target(std::span<const Id> positives, Eigen::Index n) {
  detail::check_positives(positives, n);
  Vector eta = Vector::Constant(n, -1.0);
  const double pos = static_cast<double>(n) / positives.size() - 1.0;
  for (Id y : positives) eta[y] = pos;
  return eta;
}

enum class Scaling {
  kCanonical,  // |I_x| / (2N) * sum (o - eta)^2
  kAbsorbed,   // |I_x| * sum (o - eta)^2, the coefficient folded away
};

// Squared-form realization of RG2. Differs from rg2_context_loss by the
// o-independent constant |I_x| - N/2 on the canonical scale; the absorbed
// scale is 2N times the canonical one.
inline LossValue rg2_squared_form(const Eigen::Ref<const Vector>& o,
                                  std::span<const Id> positives,
                                  Scaling scaling = Scaling::kCanonical,
                                  bool with_gradient = false) {
  detail::check_finite(o);
  const Vector eta = rg_target(positives, o.size());
  const double n = static_cast<double>(o.size());
  const double d = static_cast<double>(positives.size());
  const double coef = scaling == Scaling::kCanonical ? d / (2.0 * n) : d;
  LossValue out;
  out.value = coef * (o - eta).squaredNorm();
  if (with_gradient) out.gradient = (2.0 * coef) * (o - eta);
  return out;
}

// ---------------------------------------------------------------------------
// Pairwise and pointwise baselines.

// -log sigmoid(o_pos - o_neg); gradient is [d/d o_pos, d/d o_neg].
inline LossValue bpr_loss(double positive_score, double negative_score,
                          bool with_gradient = false) {
  if (!std::isfinite(positive_score) || !std::isfinite(negative_score)) {
    throw InvalidScoreError("non-finite score");
  }
  const double diff = positive_score - negative_score;
  LossValue out;
  out.value = detail::softplus(-diff);
  if (with_gradient) {
    const double s = detail::sigmoid(-diff);
    Vector g(2);
    g << -s, s;
    out.gradient = std::move(g);
  }
  return out;
}

// -log sigmoid(o) for label 1, -log(1 - sigmoid(o)) for label 0.
inline LossValue bce_loss(double score, bool label,
                          bool with_gradient = false) {
  if (!std::isfinite(score)) throw InvalidScoreError("non-finite score");
  LossValue out;
  out.value = label ? detail::softplus(-score) : detail::softplus(score);
  if (with_gradient) {
    Vector g(1);
    g[0] = label ? -detail::sigmoid(-score) : detail::sigmoid(score);
    out.gradient = std::move(g);
  }
  return out;
}

}  // namespace rgrank
