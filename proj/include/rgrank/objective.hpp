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

// Matrix-factorization objective of the RG losses over a whole dataset:
//
//   L = sum_{x,y} W_{x,y} (S_{x,y} - P_x . Q_y)^2 + regularizer
//       - [rgx] sum_x V_x * interaction_x
//
// with interaction_x = (P_x . qbar)^2, qbar = Q^T 1 (rank-one form) or
// P_x Q^T Q P_x^T (gram form). Two regularizer conventions are reported:
// plain lambda (||P||^2 + ||Q||^2) and the weight-scaled one used by the ALS
// closed forms, lambda (sum_x c_x ||P_x||^2 + sum_y d_y ||Q_y||^2) where c_x
// and d_y are the row and column sums of W.
//
// Every quantity is computed from the sparse positives plus Gram matrices in
// O(|D| K + (M + N) K^2).

#pragma once

#include <Eigen/Dense>

#include <string>

#include "rgrank/errors.hpp"
#include "rgrank/factor_model.hpp"
#include "rgrank/interaction_matrix.hpp"
#include "rgrank/targets.hpp"

namespace rgrank {

enum class LossKind { kRg2, kRgx };
enum class InteractionForm { kRankOne, kGram };
enum class RegScaling { kPlain, kWeighted };

inline std::string to_string(LossKind k) {
  return k == LossKind::kRg2 ? "rg2" : "rgx";
}
inline std::string to_string(InteractionForm f) {
  return f == InteractionForm::kRankOne ? "rank-one" : "gram";
}

struct ObjectiveSpec {
  double lambda = 0.0;
  LossKind kind = LossKind::kRg2;
  InteractionForm form = InteractionForm::kRankOne;
};

struct DatasetLoss {
  double data = 0.0;          // sum W (S - o)^2
  double reg_plain = 0.0;     // ||P||^2 + ||Q||^2 (unscaled by lambda)
  double reg_weighted = 0.0;  // sum c_x ||P_x||^2 + sum d_y ||Q_y||^2
  double interaction = 0.0;   // sum_x V_x interaction_x (0 for rg2)
  double lambda = 0.0;

  double value(RegScaling scaling) const {
    const double reg = scaling == RegScaling::kPlain ? reg_plain
                                                     : reg_weighted;
    return data + lambda * reg - interaction;
  }
  // Plain-lambda convention.
  double value() const { return value(RegScaling::kPlain); }
};

// Column sums d_y = sum_x W_{x,y}.
inline Vector column_weight_sums(const InteractionMatrix& matrix,
                                 const TargetMatrices& targets) {
  const double base = Eigen::Map<const Vector>(targets.w_neg.data(),
                                               targets.num_contexts)
                          .sum();
  Vector d = Vector::Constant(matrix.num_objects(), base);
  for (Id y = 0; y < matrix.num_objects(); ++y) {
    for (Id x : matrix.column(y)) d[y] += targets.w_pos[x] - targets.w_neg[x];
  }
  return d;
}

inline void check_targets(const InteractionMatrix& matrix,
                          const TargetMatrices& targets) {
  if (targets.num_contexts != matrix.num_contexts() ||
      targets.num_objects != matrix.num_objects()) {
    throw DimensionMismatch("targets do not match the interaction matrix");
  }
}

inline DatasetLoss rg_dataset_loss(const InteractionMatrix& matrix,
                                   const FactorModel& model,
                                   const TargetMatrices& targets,
                                   const ObjectiveSpec& spec) {
  check_dimensions(model, matrix);
  check_targets(matrix, targets);
  const auto& P = model.P;
  const auto& Q = model.Q;
  const Matrix gram = Q.transpose() * Q;
  const Vector qbar = Q.colwise().sum().transpose();
  const double n = static_cast<double>(matrix.num_objects());
  const double s_neg = targets.s_neg;

  DatasetLoss out;
  out.lambda = spec.lambda;
  for (Id x = 0; x < matrix.num_contexts(); ++x) {
    const auto p = P.row(x).transpose();
    const double p_qbar = p.dot(qbar);
    const double p_gram_p = p.dot(gram * p);
    // All-negative baseline sum_y (s_neg - o_y)^2, then the positives fixed up.
    double row = targets.w_neg[x] *
                 (n * s_neg * s_neg - 2.0 * s_neg * p_qbar + p_gram_p);
    for (Id y : matrix.row(x)) {
      const double o = P.row(x).dot(Q.row(y));
      const double dp = targets.s_pos[x] - o;
      const double dn = s_neg - o;
      row += targets.w_pos[x] * dp * dp - targets.w_neg[x] * dn * dn;
    }
    out.data += row;
    const double p_sq = p.squaredNorm();
    out.reg_plain += p_sq;
    out.reg_weighted += targets.row_weight_sum(x) * p_sq;
    if (spec.kind == LossKind::kRgx) {
      out.interaction += targets.v[x] * (spec.form == InteractionForm::kRankOne
                                             ? p_qbar * p_qbar
                                             : p_gram_p);
    }
  }
  const Vector d = column_weight_sums(matrix, targets);
  for (Id y = 0; y < matrix.num_objects(); ++y) {
    const double q_sq = Q.row(y).squaredNorm();
    out.reg_plain += q_sq;
    out.reg_weighted += d[y] * q_sq;
  }
  return out;
}

struct FactorGradient {
  RowMatrix P;
  RowMatrix Q;
};

// Gradient of DatasetLoss::value(scaling) with respect to P and Q.
inline FactorGradient rg_dataset_gradient(const InteractionMatrix& matrix,
                                          const FactorModel& model,
                                          const TargetMatrices& targets,
                                          const ObjectiveSpec& spec,
                                          RegScaling scaling) {
  check_dimensions(model, matrix);
  check_targets(matrix, targets);
  const auto& P = model.P;
  const auto& Q = model.Q;
  const Eigen::Index k = model.dim();
  const Matrix gram = Q.transpose() * Q;
  const Vector qbar = Q.colwise().sum().transpose();
  const double s_neg = targets.s_neg;
  const bool rgx = spec.kind == LossKind::kRgx;

  FactorGradient g{RowMatrix::Zero(P.rows(), k), RowMatrix::Zero(Q.rows(), k)};

  // Context side.
  for (Id x = 0; x < matrix.num_contexts(); ++x) {
    const Vector p = P.row(x).transpose();
    const double wn = targets.w_neg[x];
    const double wp = targets.w_pos[x];
    Vector grad = wn * (gram * p) - wn * s_neg * qbar;
    for (Id y : matrix.row(x)) {
      const auto q = Q.row(y).transpose();
      const double o = p.dot(q);
      grad += ((wp - wn) * o - (wp * targets.s_pos[x] - wn * s_neg)) * q;
    }
    const double c = scaling == RegScaling::kPlain
                         ? 1.0
                         : targets.row_weight_sum(x);
    grad += spec.lambda * c * p;
    if (rgx) {
      if (spec.form == InteractionForm::kRankOne) {
        grad -= targets.v[x] * p.dot(qbar) * qbar;
      } else {
        grad -= targets.v[x] * (gram * p);
      }
    }
    g.P.row(x) = 2.0 * grad.transpose();
  }

  // Object side.
  Matrix p_gram_neg = Matrix::Zero(k, k);  // sum_x w_neg[x] P_x^T P_x
  Vector p_sum_neg = Vector::Zero(k);      // sum_x w_neg[x] P_x
  Matrix p_gram_v = Matrix::Zero(k, k);    // sum_x V_x P_x^T P_x
  for (Id x = 0; x < matrix.num_contexts(); ++x) {
    const auto p = P.row(x).transpose();
    p_gram_neg.noalias() += targets.w_neg[x] * p * p.transpose();
    p_sum_neg += targets.w_neg[x] * p;
    if (rgx) p_gram_v.noalias() += targets.v[x] * p * p.transpose();
  }
  const Vector d = column_weight_sums(matrix, targets);
  const Vector rank_one_term = p_gram_v * qbar;
  for (Id y = 0; y < matrix.num_objects(); ++y) {
    const Vector q = Q.row(y).transpose();
    Vector grad = p_gram_neg * q - s_neg * p_sum_neg;
    for (Id x : matrix.column(y)) {
      const auto p = P.row(x).transpose();
      const double wn = targets.w_neg[x];
      const double wp = targets.w_pos[x];
      const double o = p.dot(q);
      grad += ((wp - wn) * o - (wp * targets.s_pos[x] - wn * s_neg)) * p;
    }
    const double c = scaling == RegScaling::kPlain ? 1.0 : d[y];
    grad += spec.lambda * c * q;
    if (rgx) {
      if (spec.form == InteractionForm::kRankOne) {
        grad -= rank_one_term;
      } else {
        grad -= p_gram_v * q;
      }
    }
    g.Q.row(y) = 2.0 * grad.transpose();
  }
  return g;
}

}  // namespace rgrank
