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

// Numerical checks of the claims behind the RG losses: Taylor structure of
// softmax cross-entropy, the Hessian dominance condition, the quadratic
// (Bregman) forms, DCG regret bounds and the generalization bound.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "rgrank/errors.hpp"
#include "rgrank/factor_model.hpp"
#include "rgrank/losses.hpp"
#include "rgrank/metrics.hpp"

namespace rgrank {

// ---------------------------------------------------------------------------
// Taylor structure of sm_loss.

struct TaylorTerms {
  double zeroth = 0;
  Vector first;     // p - e_y
  Matrix hessian;   // diag(p) - p p^T
  Vector expansion_point;
};

inline TaylorTerms sm_taylor_terms(const Eigen::Ref<const Vector>& o0, Id y) {
  TaylorTerms t;
  t.expansion_point = o0;
  t.zeroth = sm_loss(o0, y).value;
  const Vector p = softmax_probs(o0);
  t.first = p;
  t.first[y] -= 1.0;
  t.hessian = -p * p.transpose();
  t.hessian.diagonal() += p;
  return t;
}

enum class TaylorModel { kRgx, kRg2 };

struct TaylorRow {
  double t = 0;
  double residual = 0;  // |sm - (model + log N - 1/2)|
  double over_t2 = 0;   // residual / t^2 (0 at t = 0)
  double over_t3 = 0;   // residual / t^3 (0 at t = 0)
};

namespace detail {

// sm_loss(o, y) - (rgx(o) + log N - 1/2) for a single positive y, with the
// -o_y terms cancelled symbolically. In extended precision:
//   lse(o) - log N = log1p(mean(expm1(o)))
//   rgx + log N - 1/2 + o_y - log N = mean(o) + ||o||^2 / (2N) - mean(o)^2 / 2
inline long double taylor_gap(const Eigen::Ref<const Vector>& o,
                              TaylorModel model) {
  const long double n = static_cast<long double>(o.size());
  long double m1 = 0, mean = 0, sq = 0;
  for (Eigen::Index i = 0; i < o.size(); ++i) {
    const long double v = o[i];
    m1 += std::expm1(v);
    mean += v;
    sq += v * v;
  }
  m1 /= n;
  mean /= n;
  long double quad = mean + sq / (2 * n);
  if (model == TaylorModel::kRgx) quad -= mean * mean / 2;
  return std::log1p(m1) - quad;
}

}  // namespace detail

// Residual of the second-order model along o = t v for each scale t, with
// one positive (so |I_x| = 1). Scales must be non-negative and decreasing.
inline std::vector<TaylorRow> taylor_residual_sweep(
    const Eigen::Ref<const Vector>& v, Id y, std::span<const double> scales,
    TaylorModel model = TaylorModel::kRgx) {
  if (v.size() < 1) throw InvalidArgument("empty direction");
  if (y < 0 || y >= v.size()) throw InvalidArgument("object id out of range");
  if (std::abs(v.norm() - 1.0) > 1e-9) {
    throw InvalidArgument("direction must have unit norm");
  }
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] >= 0) || (i > 0 && !(scales[i] < scales[i - 1]))) {
      throw InvalidArgument("scales must be non-negative and decreasing");
    }
  }
  std::vector<TaylorRow> rows;
  rows.reserve(scales.size());
  for (double t : scales) {
    TaylorRow r;
    r.t = t;
    if (t > 0) {
      const Vector o = t * v;
      r.residual = static_cast<double>(std::fabs(detail::taylor_gap(o, model)));
      r.over_t2 = r.residual / (t * t);
      r.over_t3 = r.over_t2 / t;
    }
    rows.push_back(r);
  }
  return rows;
}

// Residual evaluated the direct way, sm_loss - model - |I_x|(log N - 1/2),
// useful as an independent cross-check at moderate t.
inline double taylor_residual_direct(const Eigen::Ref<const Vector>& o,
                                     std::span<const Id> positives,
                                     TaylorModel model = TaylorModel::kRgx) {
  const double n = static_cast<double>(o.size());
  const double sm = sm_context_loss(o, positives).value;
  const double approx = model == TaylorModel::kRgx
                            ? rgx_context_loss(o, positives).value
                            : rg2_context_loss(o, positives).value;
  return std::abs(sm - approx -
                  static_cast<double>(positives.size()) * (std::log(n) - 0.5));
}

// ---------------------------------------------------------------------------
// Hessian dominance.

struct PsdCondition {
  double value = 0;
  bool holds = false;
};

// 1/N - sum p^3 / sum p^2 + sum p^2, the Rayleigh quotient of
// A = (1/N) I - diag(p) + p p^T along p. Using sum p = 1 the last two terms
// combine into -sum_{j<k} p_j p_k (p_j - p_k)^2 / sum p^2, which vanishes
// exactly whenever p is uniform on its support.
inline PsdCondition psd_condition(std::span<const double> p) {
  if (p.empty()) throw InvalidArgument("empty probability vector");
  double total = 0, s2 = 0;
  for (double v : p) {
    if (!(v >= 0) || !std::isfinite(v)) {
      throw InvalidArgument("probabilities must be finite and >= 0");
    }
    total += v;
    s2 += v * v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidArgument("probabilities must sum to 1");
  }
  double spread = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    for (std::size_t k = j + 1; k < p.size(); ++k) {
      const double d = p[j] - p[k];
      spread += p[j] * p[k] * d * d;
    }
  }
  PsdCondition out;
  out.value = 1.0 / static_cast<double>(p.size()) - spread / s2;
  out.holds = out.value >= 0;
  return out;
}

struct HessianDominance {
  double min_eigenvalue = 0;
  double rayleigh_along_p = 0;
  bool condition_holds = false;
};

inline Matrix dominance_matrix(const Eigen::Ref<const Vector>& p) {
  const double n = static_cast<double>(p.size());
  Matrix a = p * p.transpose();
  a.diagonal().array() += 1.0 / n - p.array();
  return a;
}

inline HessianDominance hessian_dominance_check(
    const Eigen::Ref<const Vector>& p) {
  const Matrix a = dominance_matrix(p);
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  HessianDominance out;
  out.min_eigenvalue = es.eigenvalues()(0);
  out.rayleigh_along_p = p.dot(a * p) / p.squaredNorm();
  out.condition_holds =
      psd_condition(std::span<const double>(p.data(), p.size())).holds;
  return out;
}

// Concentrated expansion point: score N - 1 on y and -1 elsewhere, which is
// the RG2 optimum eta of a single-positive context.
inline Vector concentrated_point(Eigen::Index n, Id y) {
  Vector o = Vector::Constant(n, -1.0);
  o[y] = static_cast<double>(n) - 1.0;
  return o;
}

struct UpperBoundReport {
  // max over samples of sm(o) - m(o), where m is the quadratic majorant with
  // curvature (1/N) I around o0 (value and gradient of sm at o0).
  double max_gap = -std::numeric_limits<double>::infinity();
  // Smallest eigenvalue of (1/N) I - hessian along the sampled segments.
  double min_dominance = std::numeric_limits<double>::infinity();
  // min over samples of rg2(o) + [sm(o0) - rg2(o0)] - sm(o).
  double min_rg2_margin = std::numeric_limits<double>::infinity();
  bool holds = false;
};

// Samples points o = o0 + r u (|u| = 1, r <= radius) and checks that
// sm(o) <= sm(o0) + grad^T (o - o0) + ||o - o0||^2 / (2N) wherever
// (1/N) I dominates the softmax Hessian along the segment.
inline UpperBoundReport sm_upper_bound_check(const Eigen::Ref<const Vector>& o0,
                                             Id y, double radius, int samples,
                                             std::uint64_t seed) {
  const auto n = o0.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const TaylorTerms base = sm_taylor_terms(o0, y);
  const Id pos[1] = {y};
  const double rg2_shift = base.zeroth - rg2_context_loss(o0, pos).value;
  UpperBoundReport rep;
  for (int s = 0; s < samples; ++s) {
    Vector u(n);
    for (auto& v : u) v = gauss(rng);
    u.normalize();
    const Vector step = radius * unit(rng) * u;
    const Vector o = o0 + step;
    for (int j = 0; j <= 4; ++j) {
      const Vector xi = o0 + (j / 4.0) * step;
      const HessianDominance hd = hessian_dominance_check(softmax_probs(xi));
      rep.min_dominance = std::min(rep.min_dominance, hd.min_eigenvalue);
    }
    const double sm = sm_loss(o, y).value;
    const double majorant = base.zeroth + base.first.dot(step) +
                            step.squaredNorm() / (2.0 * static_cast<double>(n));
    rep.max_gap = std::max(rep.max_gap, sm - majorant);
    rep.min_rg2_margin = std::min(
        rep.min_rg2_margin, rg2_context_loss(o, pos).value + rg2_shift - sm);
  }
  rep.holds = rep.min_dominance >= -1e-12 && rep.max_gap <= 1e-12;
  return rep;
}

// ---------------------------------------------------------------------------
// Quadratic (Bregman) forms.

struct BregmanReport {
  double rg2_spread = 0;  // spread of rg2 - (|I|/2N) ||o - eta||^2
  double rgx_spread = 0;  // spread of rgx - (|I|/2N) (o-eta)^T Pi (o-eta)
  double eta_sum = 0;     // 1^T eta, zero by construction
  double max_deviation() const { return std::max(rg2_spread, rgx_spread); }
};

// Quadratic form (o - eta)^T (I - 11^T/N) (o - eta).
inline double centered_quadratic(const Eigen::Ref<const Vector>& d) {
  const double n = static_cast<double>(d.size());
  const double s = d.sum();
  return d.squaredNorm() - s * s / n;
}

inline BregmanReport bregman_equivalence_check(
    std::span<const Vector> scores, std::span<const Id> positives) {
  if (scores.empty()) throw InvalidArgument("need at least one score vector");
  const auto n = scores.front().size();
  const Vector eta = rg_target(positives, n);
  const double coef =
      static_cast<double>(positives.size()) / (2.0 * static_cast<double>(n));
  double lo2 = std::numeric_limits<double>::infinity(), hi2 = -lo2;
  double lox = lo2, hix = -lo2;
  for (const Vector& o : scores) {
    if (o.size() != n) throw DimensionMismatch("score vectors differ in length");
    const Vector d = o - eta;
    const double g2 = rg2_context_loss(o, positives).value - coef * d.squaredNorm();
    const double gx =
        rgx_context_loss(o, positives).value - coef * centered_quadratic(d);
    lo2 = std::min(lo2, g2);
    hi2 = std::max(hi2, g2);
    lox = std::min(lox, gx);
    hix = std::max(hix, gx);
  }
  BregmanReport rep;
  rep.rg2_spread = hi2 - lo2;
  rep.rgx_spread = hix - lox;
  rep.eta_sum = eta.sum();
  return rep;
}

// ---------------------------------------------------------------------------
// DCG regret.

// c_i = 1 / log_b(1 + i) for ranks i = 1..N.
inline Vector rank_discounts(Eigen::Index n, double base = 2.0) {
  Vector c(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c[i] = std::log(base) / std::log1p(static_cast<double>(i + 1));
  }
  return c;
}

// Expected DCG of the ranking induced by `f` (ties by ascending id) when
// object y is relevant with probability f_b[y].
inline double expected_dcg(const Eigen::Ref<const Vector>& f,
                           const Eigen::Ref<const Vector>& f_b,
                           double base = 2.0) {
  const auto order = rank_items(f);
  const Vector c = rank_discounts(f.size(), base);
  double dcg = 0;
  for (std::size_t i = 0; i < order.size(); ++i) dcg += c[i] * f_b[order[i]];
  return dcg;
}

struct RegretBound {
  double lhs = 0;
  double rhs = 0;
  bool holds = false;
};

inline RegretBound dcg_regret_bound_check(const Eigen::Ref<const Vector>& f,
                                          const Eigen::Ref<const Vector>& f_b,
                                          double base = 2.0) {
  if (f.size() != f_b.size() || f.size() == 0) {
    throw DimensionMismatch("f and f_B must have the same positive length");
  }
  RegretBound out;
  out.lhs = expected_dcg(f_b, f_b, base) - expected_dcg(f, f_b, base);
  const Vector c = rank_discounts(f.size(), base);
  out.rhs = std::sqrt(2.0 * c.squaredNorm()) * (f - f_b).norm();
  out.holds = out.lhs <= out.rhs + 1e-12;
  return out;
}

namespace detail {

// Squared distance from y to the cone {z : z_0 >= z_1 >= ... } (pool
// adjacent violators, unit weights).
inline double antitonic_distance_sq(const std::vector<double>& y) {
  struct Block {
    double sum;
    double count;
  };
  std::vector<Block> blocks;
  for (double v : y) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1) {
      const Block& b = blocks.back();
      const Block& a = blocks[blocks.size() - 2];
      if (a.sum / a.count >= b.sum / b.count) break;
      const Block merged{a.sum + b.sum, a.count + b.count};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  double dist = 0;
  std::size_t i = 0;
  for (const Block& b : blocks) {
    const double mean = b.sum / b.count;
    for (int j = 0; j < static_cast<int>(b.count); ++j, ++i) {
      dist += (y[i] - mean) * (y[i] - mean);
    }
  }
  return dist;
}

inline double binary_dcg_regret(std::span<const Id> ranking,
                                const std::vector<char>& relevant,
                                const Vector& c) {
  double ideal = 0, got = 0;
  std::size_t k = 0;
  for (char r : relevant) k += r ? 1 : 0;
  for (std::size_t i = 0; i < k; ++i) ideal += c[i];
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (relevant[ranking[i]]) got += c[i];
  }
  return ideal - got;
}

}  // namespace detail

struct TransferFit {
  Eigen::Index num_objects = 0;
  std::size_t num_relevant = 0;
  double fitted_c = 0;  // smallest C valid on the whole family
  double theory_c = 0;  // sqrt(4 sum c^2 |I| / N), implied by the regret lemma
};

// Smallest C with regret(o) <= C sqrt(excess(o)) for every score vector o and
// every relevant set of the given size, where excess is the RG2 excess risk
// (|I|/2N) ||o - eta||^2. For each ranking, the least excess among score
// vectors inducing it is the antitonic-regression distance of eta in that
// order, so enumerating all N! rankings gives the exact supremum.
inline TransferFit fit_transfer_constant(Eigen::Index n, std::size_t num_relevant,
                                         double base = 2.0) {
  if (n < 2 || n > 9) throw InvalidArgument("transfer fit supports 2 <= N <= 9");
  if (num_relevant < 1 || num_relevant >= static_cast<std::size_t>(n)) {
    throw InvalidArgument("need 1 <= |I| < N");
  }
  const Vector c = rank_discounts(n, base);
  const double coef = static_cast<double>(num_relevant) / (2.0 * n);
  TransferFit fit;
  fit.num_objects = n;
  fit.num_relevant = num_relevant;
  fit.theory_c = std::sqrt(4.0 * c.squaredNorm() *
                           static_cast<double>(num_relevant) / n);
  // Relevant set {0..|I|-1}; relabeling objects permutes rankings, so the
  // supremum is the same for every set of this size.
  std::vector<char> rel(n, 0);
  for (std::size_t i = 0; i < num_relevant; ++i) rel[i] = 1;
  std::vector<Id> ids(rel.size());
  std::iota(ids.begin(), ids.end(), 0);
  const Vector eta = rg_target(std::span<const Id>(ids.data(), num_relevant), n);
  std::vector<double> ordered(n);
  do {
    const double regret = detail::binary_dcg_regret(ids, rel, c);
    if (regret <= 1e-15) continue;
    for (Eigen::Index i = 0; i < n; ++i) ordered[i] = eta[ids[i]];
    const double excess = coef * detail::antitonic_distance_sq(ordered);
    fit.fitted_c = std::max(fit.fitted_c, regret / std::sqrt(excess));
  } while (std::next_permutation(ids.begin(), ids.end()));
  return fit;
}

struct TransferReport {
  std::vector<TransferFit> fits;  // one per |I| in [1, N)
  std::size_t heldout = 0;
  std::size_t violations = 0;
  double max_ratio = 0;  // max regret / (C sqrt(excess)) over held-out cases
  bool fitted_within_theory = true;
  bool holds() const { return violations == 0 && fitted_within_theory; }
};

// Fits C per relevant-set size, then checks the inequality on random
// held-out instances (random relevant set, random scores around eta at
// log-uniform scales, some exactly at eta).
inline TransferReport rg2_regret_transfer_check(Eigen::Index n,
                                                std::size_t heldout,
                                                std::uint64_t seed,
                                                double base = 2.0) {
  TransferReport rep;
  for (std::size_t s = 1; s < static_cast<std::size_t>(n); ++s) {
    rep.fits.push_back(fit_transfer_constant(n, s, base));
    rep.fitted_within_theory &=
        rep.fits.back().fitted_c <= rep.fits.back().theory_c * (1 + 1e-12);
  }
  const Vector c = rank_discounts(n, base);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size_dist(1, n - 1);
  std::uniform_real_distribution<double> log_scale(std::log(1e-3), std::log(10.0));
  std::normal_distribution<double> gauss;
  std::vector<Id> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t t = 0; t < heldout; ++t) {
    const std::size_t s = size_dist(rng);
    std::shuffle(all.begin(), all.end(), rng);
    std::vector<Id> pos(all.begin(), all.begin() + static_cast<long>(s));
    std::sort(pos.begin(), pos.end());
    std::vector<char> rel(n, 0);
    for (Id y : pos) rel[y] = 1;
    const Vector eta = rg_target(pos, n);
    Vector o = eta;
    if (t % 10 != 0) {
      const double scale = std::exp(log_scale(rng));
      for (auto& v : o) v += scale * gauss(rng);
    }
    const auto ranking = rank_items(o);
    const double regret = detail::binary_dcg_regret(ranking, rel, c);
    const double excess = rg2_squared_form(o, pos).value;
    const double bound = rep.fits[s - 1].fitted_c * std::sqrt(excess);
    if (regret > bound * (1 + 1e-9) + 1e-12) ++rep.violations;
    if (bound > 0) rep.max_ratio = std::max(rep.max_ratio, regret / bound);
    ++rep.heldout;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Generalization bound.

struct BoundInputs {
  std::int64_t k = 1, m = 1, n = 1;
  std::int64_t dataset_size = 1;
  double loss_bound = 1;                // B
  std::optional<double> lipschitz;      // L; derived from the caps when empty
  double delta = 0.05;
  double c_p = 1, c_q = 1;              // factor-norm caps
};

struct BoundResult {
  double d = 0;
  double lipschitz = 0;
  double log_epsilon = 0;
  double epsilon = 0;  // +inf when exp overflows
};

// 2 (2 sqrt(N) C_P C_Q + 1 + N); valid Lipschitz constants exceed it.
inline double lipschitz_threshold(std::int64_t n, double c_p, double c_q) {
  return 2.0 * (2.0 * std::sqrt(static_cast<double>(n)) * c_p * c_q + 1.0 +
                static_cast<double>(n));
}

inline double pseudo_dimension(std::int64_t k, std::int64_t m, std::int64_t n) {
  return static_cast<double>(k) * static_cast<double>(m + n) *
         std::log(16.0 * std::exp(1.0) * static_cast<double>(m) /
                  static_cast<double>(k));
}

// log of 16 ((d+1) B^4 e^{d+1} L^d / (|D| delta))^{1/(d+2)}.
inline double log_generalization_epsilon(double d, double b, double l,
                                         double dataset_size, double delta) {
  if (!(dataset_size > 0)) throw InvalidArgument("|D| must be positive");
  if (!(delta > 0 && delta < 1)) throw InvalidArgument("delta must be in (0,1)");
  if (!(d > 0) || !(b > 0) || !(l > 0)) {
    throw InvalidArgument("d, B and L must be positive");
  }
  const double inner = std::log(d + 1) + 4.0 * std::log(b) + (d + 1) +
                       d * std::log(l) - std::log(dataset_size) -
                       std::log(delta);
  return std::log(16.0) + inner / (d + 2);
}

// Same formula evaluated literally; overflows for realistic d.
inline double direct_generalization_epsilon(double d, double b, double l,
                                            double dataset_size, double delta) {
  const double inner = (d + 1) * std::pow(b, 4) * std::exp(d + 1) *
                       std::pow(l, d) / (dataset_size * delta);
  return 16.0 * std::pow(inner, 1.0 / (d + 2));
}

inline BoundResult generalization_bound(const BoundInputs& in) {
  if (in.k < 1 || in.m < 1 || in.n < 1) {
    throw InvalidArgument("K, M and N must be positive");
  }
  if (in.dataset_size < 1) throw InvalidArgument("|D| must be positive");
  if (!(in.loss_bound > 0) || !(in.c_p > 0) || !(in.c_q > 0)) {
    throw InvalidArgument("B, C_P and C_Q must be positive");
  }
  BoundResult out;
  out.d = pseudo_dimension(in.k, in.m, in.n);
  if (!(out.d > 0)) throw InvalidArgument("pseudo-dimension is not positive");
  const double threshold = lipschitz_threshold(in.n, in.c_p, in.c_q);
  out.lipschitz = in.lipschitz.value_or(
      std::nextafter(threshold, std::numeric_limits<double>::infinity()));
  out.log_epsilon =
      log_generalization_epsilon(out.d, in.loss_bound, out.lipschitz,
                                 static_cast<double>(in.dataset_size), in.delta);
  out.epsilon = std::exp(out.log_epsilon);
  return out;
}

}  // namespace rgrank
