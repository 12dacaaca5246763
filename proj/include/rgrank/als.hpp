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

// Weighted alternating least squares for the RG objectives.
//
// Each half-step minimizes the objective of objective.hpp exactly over one
// factor with the other held fixed. Row systems are
//
//   A_x = Q^T diag(W_x.) Q + lambda c_x I - [rgx] V_x G_int
//   b_x = Q^T diag(W_x.) S_x.^T
//
// where Q^T diag(W_x.) Q = w_neg G + (w_pos - w_neg) sum_{y in I_x} Q_y^T Q_y,
// so with the shared Gram matrix G = Q^T Q a row costs O(|I_x| K^2 + K^3)
// (O(|I_x| K + K^3) when the weights are constant along the row).
//
// The rank-one interaction (1^T o^{(x)})^2 couples every object row through
// qbar = sum_y Q_y. The object half-step then solves the coupled system
// exactly: with A_y the per-row matrices, stationarity reads
// A_y Q_y^T = b_y + G_V qbar for all y (G_V = sum_x V_x P_x^T P_x), so
// qbar = (I - H G_V)^{-1} sum_y A_y^{-1} b_y with H = sum_y A_y^{-1}, after
// which every row is recovered independently.

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rgrank/errors.hpp"
#include "rgrank/factor_model.hpp"
#include "rgrank/interaction_matrix.hpp"
#include "rgrank/objective.hpp"
#include "rgrank/targets.hpp"

namespace rgrank {

struct AlsConfig {
  int dim = 32;  // embedding dimension K
  double lambda = 0.01;
  LossKind kind = LossKind::kRg2;
  InteractionForm interaction_form = InteractionForm::kRankOne;
  RegScaling reg_scaling = RegScaling::kWeighted;
  int max_iters = 20;
  double tolerance = 1e-4;
  InitSpec init{InitKind::kUniform, 0.01};
  std::uint64_t seed = 0;
  double pd_floor = 1e-10;

  ObjectiveSpec objective() const {
    return {lambda, kind, interaction_form};
  }
  void validate() const {
    if (!(lambda >= 0)) throw InvalidArgument("lambda must be >= 0");
    if (!(tolerance > 0)) throw InvalidArgument("tolerance must be > 0");
    if (!(pd_floor > 0)) throw InvalidArgument("pd_floor must be > 0");
    if (max_iters < 0) throw InvalidArgument("max_iters must be >= 0");
    if (dim < 1) throw InvalidArgument("embedding dimension K must be >= 1");
  }
};

namespace detail {
// Copies the lower triangle onto the upper one after rankUpdate calls.
inline void mirror_lower(Matrix& a) {
  a.triangularView<Eigen::StrictlyUpper>() = a.transpose();
}
}  // namespace detail

struct Gram {
  Matrix G;     // Q^T Q
  Vector qbar;  // Q^T 1
};

inline Gram gram_precompute(const RowMatrix& Q) {
  if (!Q.allFinite()) throw InvalidScoreError("non-finite factor entries");
  Gram g;
  g.G = Matrix::Zero(Q.cols(), Q.cols());
  g.G.selfadjointView<Eigen::Lower>().rankUpdate(Q.transpose());
  detail::mirror_lower(g.G);
  g.qbar = Q.colwise().sum().transpose();
  return g;
}

struct HalfStepDiagnostics {
  // Smallest eigenvalue seen among rows that needed an explicit check
  // (+inf when a lower bound made the check unnecessary).
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  std::size_t eigen_checks = 0;
};

namespace detail {

inline double smallest_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Factorizes the symmetric row system, enforcing the positive-definiteness
// floor. `lower_bound` is a proven lower bound on the smallest eigenvalue
// (or -inf), letting the eigensolve be skipped for well-posed rows.
inline Eigen::LLT<Matrix> factorize_row(const Matrix& a, double lower_bound,
                                        double pd_floor, const char* side,
                                        std::size_t row,
                                        HalfStepDiagnostics& diag) {
  if (lower_bound < pd_floor) {
    const double ev = smallest_eigenvalue(a);
    ++diag.eigen_checks;
    diag.min_eigenvalue = std::min(diag.min_eigenvalue, ev);
    if (!(ev >= pd_floor)) throw NotPositiveDefiniteError(side, row, ev);
  }
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError(side, row, smallest_eigenvalue(a));
  }
  return llt;
}

}  // namespace detail

// Solves every context row in place with Q fixed.
inline HalfStepDiagnostics update_context_rows(FactorModel& model,
                                               const InteractionMatrix& matrix,
                                               const TargetMatrices& targets,
                                               const AlsConfig& cfg) {
  check_dimensions(model, matrix);
  check_targets(matrix, targets);
  const auto& Q = model.Q;
  const Eigen::Index k = model.dim();
  const Gram gram = gram_precompute(Q);
  const bool rgx = cfg.kind == LossKind::kRgx;
  const double s_neg = targets.s_neg;
  Matrix interaction;
  if (rgx) {
    interaction = cfg.interaction_form == InteractionForm::kRankOne
                      ? Matrix(gram.qbar * gram.qbar.transpose())
                      : gram.G;
  }
  HalfStepDiagnostics diag;
  Matrix a(k, k);
  Vector b(k);
  for (Id x = 0; x < matrix.num_contexts(); ++x) {
    const double wn = targets.w_neg[x];
    const double wp = targets.w_pos[x];
    const double c = cfg.reg_scaling == RegScaling::kWeighted
                         ? targets.row_weight_sum(x)
                         : 1.0;
    a = wn * gram.G;
    b = (wn * s_neg) * gram.qbar;
    const double b_coef = wp * targets.s_pos[x] - wn * s_neg;
    for (Id y : matrix.row(x)) {
      const auto q = Q.row(y).transpose();
      if (wp != wn) {
        a.selfadjointView<Eigen::Lower>().rankUpdate(q, wp - wn);
      }
      b += b_coef * q;
    }
    detail::mirror_lower(a);
    a.diagonal().array() += cfg.lambda * c;
    double lower_bound = cfg.lambda * c;
    if (rgx && targets.v[x] != 0.0) {
      a -= targets.v[x] * interaction;
      lower_bound = -std::numeric_limits<double>::infinity();
    }
    if (wp < 0 || wn < 0) {
      lower_bound = -std::numeric_limits<double>::infinity();
    }
    const auto llt = detail::factorize_row(a, lower_bound, cfg.pd_floor,
                                           "context", x, diag);
    model.P.row(x) = llt.solve(b).transpose();
  }
  return diag;
}

// Solves every object row in place with P fixed.
inline HalfStepDiagnostics update_object_rows(FactorModel& model,
                                              const InteractionMatrix& matrix,
                                              const TargetMatrices& targets,
                                              const AlsConfig& cfg) {
  check_dimensions(model, matrix);
  check_targets(matrix, targets);
  const auto& P = model.P;
  const Eigen::Index k = model.dim();
  const bool rgx = cfg.kind == LossKind::kRgx;
  const bool coupled =
      rgx && cfg.interaction_form == InteractionForm::kRankOne;
  const double s_neg = targets.s_neg;

  Matrix p_gram_neg = Matrix::Zero(k, k);
  Vector p_sum_neg = Vector::Zero(k);
  Matrix p_gram_v = Matrix::Zero(k, k);
  bool any_v = false;
  for (Id x = 0; x < matrix.num_contexts(); ++x) {
    const auto p = P.row(x).transpose();
    p_gram_neg.selfadjointView<Eigen::Lower>().rankUpdate(p,
                                                          targets.w_neg[x]);
    p_sum_neg += targets.w_neg[x] * p;
    if (rgx && targets.v[x] != 0.0) {
      p_gram_v.selfadjointView<Eigen::Lower>().rankUpdate(p, targets.v[x]);
      any_v = true;
    }
  }
  detail::mirror_lower(p_gram_neg);
  detail::mirror_lower(p_gram_v);
  const Vector d = cfg.reg_scaling == RegScaling::kWeighted
                       ? column_weight_sums(matrix, targets)
                       : Vector::Ones(matrix.num_objects());
  bool negative_weights = false;
  for (Id x = 0; x < matrix.num_contexts(); ++x) {
    negative_weights |= targets.w_pos[x] < 0 || targets.w_neg[x] < 0;
  }

  HalfStepDiagnostics diag;
  const Id n = matrix.num_objects();
  std::vector<Eigen::LLT<Matrix>> factors;
  std::vector<Vector> rhs;
  if (coupled && any_v) {
    factors.reserve(n);
    rhs.reserve(n);
  }
  Matrix a(k, k);
  Vector b(k);
  for (Id y = 0; y < n; ++y) {
    a = p_gram_neg;
    b = s_neg * p_sum_neg;
    for (Id x : matrix.column(y)) {
      const auto p = P.row(x).transpose();
      const double wn = targets.w_neg[x];
      const double wp = targets.w_pos[x];
      if (wp != wn) a.selfadjointView<Eigen::Lower>().rankUpdate(p, wp - wn);
      b += (wp * targets.s_pos[x] - wn * s_neg) * p;
    }
    // rankUpdate only touched the lower triangle.
    detail::mirror_lower(a);
    a.diagonal().array() += cfg.lambda * d[y];
    double lower_bound = negative_weights
                             ? -std::numeric_limits<double>::infinity()
                             : cfg.lambda * d[y];
    if (rgx && any_v && !coupled) {
      a -= p_gram_v;
      lower_bound = -std::numeric_limits<double>::infinity();
    }
    auto llt =
        detail::factorize_row(a, lower_bound, cfg.pd_floor, "object", y, diag);
    if (coupled && any_v) {
      factors.push_back(std::move(llt));
      rhs.push_back(b);
    } else {
      model.Q.row(y) = llt.solve(b).transpose();
    }
  }
  if (!(coupled && any_v)) return diag;

  // Coupled rank-one system: reduce to K x K for qbar.
  Matrix h = Matrix::Zero(k, k);
  Vector u = Vector::Zero(k);
  const Matrix identity = Matrix::Identity(k, k);
  for (Id y = 0; y < n; ++y) {
    h += factors[y].solve(identity);
    u += factors[y].solve(rhs[y]);
  }
  h = 0.5 * (h + h.transpose());
  // Joint Hessian is positive definite iff H^{-1} - G_V is.
  Eigen::LLT<Matrix> h_llt(h);
  const Matrix effective = h_llt.solve(identity) - p_gram_v;
  const double ev =
      detail::smallest_eigenvalue(0.5 * (effective + effective.transpose()));
  ++diag.eigen_checks;
  diag.min_eigenvalue = std::min(diag.min_eigenvalue, ev);
  if (h_llt.info() != Eigen::Success || !(ev >= cfg.pd_floor)) {
    throw NotPositiveDefiniteError("object (coupled)", 0, ev);
  }
  const Vector qbar = (identity - h * p_gram_v).partialPivLu().solve(u);
  const Vector shift = p_gram_v * qbar;
  for (Id y = 0; y < n; ++y) {
    model.Q.row(y) = factors[y].solve(rhs[y] + shift).transpose();
  }
  return diag;
}

// ---------------------------------------------------------------------------

struct AlsIteration {
  int iteration = 0;                 // 1-based
  double objective_after_context = 0;
  double objective_after_object = 0;  // objective of the full iteration
  double seconds = 0;                 // cumulative training time
  HalfStepDiagnostics context_diag;
  HalfStepDiagnostics object_diag;
};

struct AlsResult {
  FactorModel model;
  double initial_objective = 0;
  std::vector<AlsIteration> iterations;
  bool converged = false;
};

// Called after every full iteration; returning false stops training. Time
// spent inside the callback is not counted as training time.
using AlsCallback =
    std::function<bool(const FactorModel&, const AlsIteration&)>;

inline double als_objective(const InteractionMatrix& matrix,
                            const FactorModel& model,
                            const TargetMatrices& targets,
                            const AlsConfig& cfg) {
  return rg_dataset_loss(matrix, model, targets, cfg.objective())
      .value(cfg.reg_scaling);
}

inline AlsResult als_fit(const InteractionMatrix& matrix,
                         const TargetMatrices& targets, const AlsConfig& cfg,
                         FactorModel initial,
                         const AlsCallback& callback = {}) {
  cfg.validate();
  check_dimensions(initial, matrix);
  using Clock = std::chrono::steady_clock;
  AlsResult result;
  result.model = std::move(initial);
  result.initial_objective = als_objective(matrix, result.model, targets, cfg);
  double previous = result.initial_objective;
  double elapsed = 0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const auto start = Clock::now();
    AlsIteration rec;
    rec.iteration = it;
    rec.context_diag = update_context_rows(result.model, matrix, targets, cfg);
    rec.objective_after_context =
        als_objective(matrix, result.model, targets, cfg);
    rec.object_diag = update_object_rows(result.model, matrix, targets, cfg);
    rec.objective_after_object =
        als_objective(matrix, result.model, targets, cfg);
    elapsed += std::chrono::duration<double>(Clock::now() - start).count();
    rec.seconds = elapsed;
    result.iterations.push_back(rec);
    const double current = rec.objective_after_object;
    const double rel =
        (previous - current) / std::max(std::abs(previous), 1e-300);
    previous = current;
    if (callback && !callback(result.model, rec)) break;
    if (rel < cfg.tolerance) {
      result.converged = true;
      break;
    }
  }
  return result;
}

inline AlsResult als_fit(const InteractionMatrix& matrix,
                         const TargetMatrices& targets, const AlsConfig& cfg,
                         const AlsCallback& callback = {}) {
  return als_fit(matrix, targets, cfg,
                 init_model(matrix.num_contexts(), matrix.num_objects(),
                            cfg.dim, cfg.init, cfg.seed),
                 callback);
}

// ---------------------------------------------------------------------------
// Full-matrix variant for row-constant weights W = diag(W_x), with the
// regularizer placed on the scores: sum_x W_x ||S_x - P_x Q^T||^2 +
// lambda ||P Q^T||_F^2. Both half-steps are whole-matrix closed forms:
//
//   P = (W + lambda I)^{-1} W S Q (Q^T Q)^{-1}
//   Q = S^T W P (lambda P^T P + P^T W P)^{-1}

struct FullMatrixConfig {
  int dim = 32;
  double lambda = 0.01;
  int max_iters = 20;
  double tolerance = 1e-4;
  InitSpec init{InitKind::kUniform, 0.01};
  std::uint64_t seed = 0;
};

struct FullMatrixResult {
  FactorModel model;
  // Objective at initialization followed by the value after every half-step
  // (P then Q), so entry 2t is the value after iteration t.
  std::vector<double> half_step_objectives;
  int iterations = 0;
  bool converged = false;
  double seconds = 0;  // training time, callbacks excluded
};

namespace detail {

inline void require_row_constant(const TargetMatrices& targets) {
  if (!targets.row_constant_weights()) {
    throw InvalidArgument(
        "full-matrix ALS needs weights that are constant along each row");
  }
}

// Returns rhs * A^{-1} for symmetric positive semi-definite A, adding the
// jitter eps I (eps = 1e-10 trace / K) when A is numerically singular.
inline RowMatrix solve_right_spd(const Matrix& a, const RowMatrix& rhs,
                                 const char* what) {
  const Eigen::Index k = a.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(k - 1);
  Matrix sys = a;
  if (!(lo > 1e-12 * std::max(std::abs(hi), 1e-300))) {
    const double eps = 1e-10 * a.trace() / static_cast<double>(k);
    if (!(eps > 0)) throw SingularMatrixError(std::string(what) + " is zero");
    sys.diagonal().array() += eps;
  }
  Eigen::LLT<Matrix> llt(sys);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError(std::string(what) + " is singular after jitter");
  }
  return llt.solve(rhs.transpose()).transpose();
}

}  // namespace detail

inline double full_matrix_objective(const InteractionMatrix& matrix,
                                    const FactorModel& model,
                                    const TargetMatrices& targets,
                                    double lambda) {
  check_dimensions(model, matrix);
  check_targets(matrix, targets);
  detail::require_row_constant(targets);
  const Matrix gram = model.Q.transpose() * model.Q;
  const Vector qbar = model.Q.colwise().sum().transpose();
  const double n = static_cast<double>(matrix.num_objects());
  const double s_neg = targets.s_neg;
  double data = 0;
  for (Id x = 0; x < matrix.num_contexts(); ++x) {
    const auto p = model.P.row(x).transpose();
    double row = n * s_neg * s_neg - 2.0 * s_neg * p.dot(qbar) +
                 p.dot(gram * p);
    for (Id y : matrix.row(x)) {
      const double o = model.score(x, y);
      const double dp = targets.s_pos[x] - o;
      const double dn = s_neg - o;
      row += dp * dp - dn * dn;
    }
    data += targets.w_pos[x] * row;
  }
  const Matrix p_gram = model.P.transpose() * model.P;
  return data + lambda * (p_gram.cwiseProduct(gram)).sum();
}

// P = diag(W_x / (W_x + lambda)) S Q (Q^T Q)^{-1}, with S Q formed sparsely.
inline void full_matrix_update_p(FactorModel& model,
                                 const InteractionMatrix& matrix,
                                 const TargetMatrices& targets,
                                 double lambda) {
  const auto& Q = model.Q;
  const Vector qbar = Q.colwise().sum().transpose();
  RowMatrix sq(matrix.num_contexts(), Q.cols());
  for (Id x = 0; x < matrix.num_contexts(); ++x) {
    Vector row = targets.s_neg * qbar;
    for (Id y : matrix.row(x)) {
      row += (targets.s_pos[x] - targets.s_neg) * Q.row(y).transpose();
    }
    const double w = targets.w_pos[x];
    sq.row(x) = (w / (w + lambda)) * row.transpose();
  }
  const Matrix gram = Q.transpose() * Q;
  model.P = detail::solve_right_spd(gram, sq, "Q^T Q");
}

// Q = S^T W P (lambda P^T P + P^T W P)^{-1}.
inline void full_matrix_update_q(FactorModel& model,
                                 const InteractionMatrix& matrix,
                                 const TargetMatrices& targets,
                                 double lambda) {
  const auto& P = model.P;
  const Eigen::Index k = P.cols();
  Vector wp_sum = Vector::Zero(k);
  Matrix ptwp = Matrix::Zero(k, k);
  for (Id x = 0; x < matrix.num_contexts(); ++x) {
    const auto p = P.row(x).transpose();
    wp_sum += targets.w_pos[x] * p;
    ptwp.noalias() += targets.w_pos[x] * p * p.transpose();
  }
  RowMatrix swp(matrix.num_objects(), k);
  for (Id y = 0; y < matrix.num_objects(); ++y) {
    Vector row = targets.s_neg * wp_sum;
    for (Id x : matrix.column(y)) {
      row += (targets.s_pos[x] - targets.s_neg) * targets.w_pos[x] *
             P.row(x).transpose();
    }
    swp.row(y) = row.transpose();
  }
  const Matrix sys = lambda * (P.transpose() * P) + ptwp;
  model.Q = detail::solve_right_spd(sys, swp, "lambda P^T P + P^T W P");
}

// Called after every full iteration with the objective and cumulative
// training time; returning false stops training.
using FullMatrixCallback = std::function<bool(
    const FactorModel&, int iteration, double objective, double seconds)>;

inline FullMatrixResult als_fit_full_matrix(
    const InteractionMatrix& matrix, const TargetMatrices& targets,
    const FullMatrixConfig& cfg, FactorModel initial,
    const FullMatrixCallback& callback = {}) {
  if (!(cfg.lambda >= 0)) throw InvalidArgument("lambda must be >= 0");
  if (!(cfg.tolerance > 0)) throw InvalidArgument("tolerance must be > 0");
  if (cfg.max_iters < 0) throw InvalidArgument("max_iters must be >= 0");
  check_dimensions(initial, matrix);
  check_targets(matrix, targets);
  detail::require_row_constant(targets);
  using Clock = std::chrono::steady_clock;
  FullMatrixResult result;
  result.model = std::move(initial);
  double previous =
      full_matrix_objective(matrix, result.model, targets, cfg.lambda);
  result.half_step_objectives.push_back(previous);
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const auto start = Clock::now();
    full_matrix_update_p(result.model, matrix, targets, cfg.lambda);
    result.half_step_objectives.push_back(
        full_matrix_objective(matrix, result.model, targets, cfg.lambda));
    full_matrix_update_q(result.model, matrix, targets, cfg.lambda);
    const double current =
        full_matrix_objective(matrix, result.model, targets, cfg.lambda);
    result.half_step_objectives.push_back(current);
    result.iterations = it;
    result.seconds +=
        std::chrono::duration<double>(Clock::now() - start).count();
    const double rel =
        (previous - current) / std::max(std::abs(previous), 1e-300);
    previous = current;
    if (callback && !callback(result.model, it, current, result.seconds)) break;
    if (rel < cfg.tolerance) {
      result.converged = true;
      break;
    }
  }
  return result;
}

inline FullMatrixResult als_fit_full_matrix(
    const InteractionMatrix& matrix, const TargetMatrices& targets,
    const FullMatrixConfig& cfg, const FullMatrixCallback& callback = {}) {
  if (cfg.dim < 1) throw InvalidArgument("embedding dimension K must be >= 1");
  return als_fit_full_matrix(
      matrix, targets, cfg,
      init_model(matrix.num_contexts(), matrix.num_objects(), cfg.dim,
                 cfg.init, cfg.seed),
      callback);
}

}  // namespace rgrank
