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

// Runtime invariant suites behind `rgrank verify`.
//
// Each suite runs a fixed, seeded set of checks and reports the worst
// deviation it observed against its tolerance. A fault can be injected into
// one operation (for example "gradient:rg2" perturbs the analytic RG2
// gradient) to confirm the suite notices and names the operation.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rgrank/als.hpp"
#include "rgrank/errors.hpp"
#include "rgrank/factor_model.hpp"
#include "rgrank/interaction_matrix.hpp"
#include "rgrank/losses.hpp"
#include "rgrank/metrics.hpp"
#include "rgrank/objective.hpp"
#include "rgrank/targets.hpp"
#include "rgrank/theory.hpp"

namespace rgrank {

struct SuiteResult {
  std::string name;
  bool passed = true;
  double worst_deviation = 0;
  double tolerance = 0;
  std::size_t checks = 0;
  std::string failing_operation;  // first operation that exceeded tolerance
};

struct VerifyOptions {
  std::string fault;  // "<suite-area>:<operation>", empty for none
  std::uint64_t seed = 1;
};

inline const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names = {
      "taylor", "gradients", "als",   "squared-form", "consistency",
      "psd",    "metrics",   "bregman", "bound"};
  return names;
}

namespace detail {

// Accumulates one suite's checks.
class SuiteRecorder {
 public:
  SuiteRecorder(std::string name, double tolerance) {
    r_.name = std::move(name);
    r_.tolerance = tolerance;
  }
  // Records a deviation measured against the suite tolerance.
  void deviation(const std::string& op, double dev) {
    record(op, dev, !(dev <= r_.tolerance));
  }
  // Records a boolean check; `dev` is reported but the verdict is `ok`.
  void check(const std::string& op, bool ok, double dev = 0) {
    record(op, dev, !ok);
  }
  SuiteResult result() const { return r_; }

 private:
  void record(const std::string& op, double dev, bool failed) {
    ++r_.checks;
    if (std::isnan(dev)) dev = std::numeric_limits<double>::infinity();
    r_.worst_deviation = std::max(r_.worst_deviation, dev);
    if (failed && r_.passed) {
      r_.passed = false;
      r_.failing_operation = op;
    }
  }
  SuiteResult r_;
};

inline Vector random_vector(Eigen::Index n, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Vector v(n);
  for (auto& e : v) e = scale * gauss(rng);
  return v;
}

inline std::vector<Id> random_subset(Id n, std::size_t size,
                                     std::mt19937_64& rng) {
  std::vector<Id> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(size);
  std::sort(ids.begin(), ids.end());
  return ids;
}

// Central differences of f at o with step h.
inline Vector central_difference(const std::function<double(const Vector&)>& f,
                                 const Vector& o, double h = 1e-5) {
  Vector g(o.size());
  Vector probe = o;
  for (Eigen::Index i = 0; i < o.size(); ++i) {
    probe[i] = o[i] + h;
    const double up = f(probe);
    probe[i] = o[i] - h;
    const double down = f(probe);
    probe[i] = o[i];
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

inline double relative_error(const Vector& analytic, const Vector& numeric) {
  double worst = 0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double scale = std::max(1.0, std::abs(numeric[i]));
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
  }
  return worst;
}

inline bool fault_on(const VerifyOptions& opt, const std::string& area,
                     const std::string& op) {
  return opt.fault == area + ":" + op;
}

inline InteractionMatrix random_matrix(Id m, Id n, std::mt19937_64& rng) {
  std::uniform_int_distribution<Id> deg(1, std::max<Id>(1, n - 1));
  std::vector<std::vector<Id>> rows(static_cast<std::size_t>(m));
  for (Id x = 0; x < m; ++x) {
    rows[x] = random_subset(n, static_cast<std::size_t>(deg(rng)), rng);
  }
  return InteractionMatrix::from_rows(m, n, rows);
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline SuiteResult verify_taylor(const VerifyOptions& opt) {
  // Bound on residual / t^3 for unit directions: the cubic remainder of
  // log-mean-exp has coefficient at most max|v_i|^3 / 6 <= 1/6, and the
  // quartic contribution at t <= 0.1 stays far below that.
  detail::SuiteRecorder rec("taylor", 0.5);
  std::mt19937_64 rng(opt.seed);
  std::vector<double> scales;
  for (int k = 0; k <= 10; ++k) scales.push_back(0.1 / std::pow(2.0, k));
  for (Eigen::Index n : {3, 8, 32}) {
    for (int d = 0; d < 20; ++d) {
      Vector v = detail::random_vector(n, 1.0, rng);
      v.normalize();
      const auto rows = taylor_residual_sweep(v, 0, scales);
      double worst = 0;
      for (const auto& row : rows) worst = std::max(worst, row.over_t3);
      if (detail::fault_on(opt, "taylor", "taylor_residual_sweep")) worst += 1;
      rec.deviation("taylor_residual_sweep", worst);
      const double zero[1] = {0.0};
      rec.check("taylor_residual_sweep",
                taylor_residual_sweep(v, 0, zero).front().residual == 0.0);

      // RG2 keeps the interaction term: residual / t^2 tends to
      // (1^T v)^2 / (2N^2).
      const double limit =
          v.sum() * v.sum() / (2.0 * static_cast<double>(n * n));
      const double tiny[1] = {1e-5};
      const auto r2 = taylor_residual_sweep(v, 0, tiny, TaylorModel::kRg2);
      rec.check("taylor_residual_sweep(rg2)",
                std::abs(r2.front().over_t2 - limit) <= 1e-4,
                std::abs(r2.front().over_t2 - limit));

      const Vector o0 = detail::random_vector(n, 1.0, rng);
      const TaylorTerms terms = sm_taylor_terms(o0, 0);
      Matrix hess = terms.hessian;
      if (detail::fault_on(opt, "taylor", "hessian")) hess(0, 0) += 1e-3;
      const double sym = (hess - hess.transpose()).cwiseAbs().maxCoeff();
      const double rowsum = hess.rowwise().sum().cwiseAbs().maxCoeff();
      rec.check("sm_taylor_terms", sym <= 1e-12 && rowsum <= 1e-12,
                std::max(sym, rowsum));
    }
  }
  return rec.result();
}

inline SuiteResult verify_gradients(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("gradients", 1e-5);
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<Id> size(2, 16);
  auto perturb = [&](const std::string& op, Vector g) {
    if (detail::fault_on(opt, "gradient", op)) g[0] += 1e-3;
    return g;
  };
  for (int inst = 0; inst < 100; ++inst) {
    const Id n = size(rng);
    const Vector o = detail::random_vector(n, 2.0, rng);
    std::uniform_int_distribution<std::size_t> deg(1, static_cast<std::size_t>(n - 1));
    const auto pos = detail::random_subset(n, deg(rng), rng);

    auto check = [&](const std::string& op, const Vector& analytic,
                     const std::function<double(const Vector&)>& f,
                     const Vector& at) {
      rec.deviation(op, detail::relative_error(
                            perturb(op, analytic),
                            detail::central_difference(f, at)));
    };
    check("sm", *sm_context_loss(o, pos, true).gradient,
          [&](const Vector& z) { return sm_context_loss(z, pos).value; }, o);
    check("rg2", *rg2_context_loss(o, pos, true).gradient,
          [&](const Vector& z) { return rg2_context_loss(z, pos).value; }, o);
    check("rgx", *rgx_context_loss(o, pos, true).gradient,
          [&](const Vector& z) { return rgx_context_loss(z, pos).value; }, o);

    SampledBatch batch;
    batch.positive = pos.front();
    batch.num_objects = n;
    std::uniform_int_distribution<Id> any(0, n - 1);
    for (int j = 0; j < 5; ++j) batch.negatives.push_back(any(rng));
    if (inst % 2 == 1) {
      Vector q = detail::random_vector(n, 1.0, rng).cwiseAbs().array() + 0.1;
      q /= q.sum();
      batch.proposal.assign(q.data(), q.data() + q.size());
    }
    const Vector so = detail::random_vector(6, 2.0, rng);
    check("ssm", *ssm_loss(batch, so, true).gradient,
          [&](const Vector& z) { return ssm_loss(batch, z).value; }, so);

    const Vector pair = detail::random_vector(2, 3.0, rng);
    check("bpr", *bpr_loss(pair[0], pair[1], true).gradient,
          [&](const Vector& z) { return bpr_loss(z[0], z[1]).value; }, pair);
    const bool label = inst % 2 == 0;
    check("bce", *bce_loss(pair[0], label, true).gradient,
          [&](const Vector& z) { return bce_loss(z[0], label).value; },
          pair.head(1));

    // Weighted squared loss over a small dense score matrix.
    const Id m = std::min<Id>(n, 4);
    const InteractionMatrix mat = detail::random_matrix(m, n, rng);
    const double alpha = 0.5 + inst % 3;
    RowMatrix scores(m, n);
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
      scores.data()[i] = detail::random_vector(1, 1.0, rng)[0];
    }
    const Vector flat = Eigen::Map<const Vector>(scores.data(), scores.size());
    check("wsl", *wsl_loss(mat, scores, alpha, true).gradient,
          [&](const Vector& z) {
            RowMatrix s = Eigen::Map<const RowMatrix>(z.data(), m, n);
            return wsl_loss(mat, s, alpha).value;
          },
          flat);
  }
  return rec.result();
}

inline SuiteResult verify_als(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("als", 1e-8);
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<Id> size(3, 12);
  std::uniform_int_distribution<int> dim(1, 3);
  const TargetSpec specs[] = {TargetSpec::full(), TargetSpec::sampled(3),
                              TargetSpec::hyper(0.5, 0.2), TargetSpec::wrmf(2.0)};
  for (int inst = 0; inst < 40; ++inst) {
    const Id m = size(rng), n = size(rng);
    const InteractionMatrix mat = detail::random_matrix(m, n, rng);
    const TargetMatrices targets = build_targets(mat, specs[inst % 4]);
    AlsConfig cfg;
    cfg.dim = dim(rng);
    cfg.lambda = 0.1;
    cfg.kind = inst % 2 == 0 ? LossKind::kRg2 : LossKind::kRgx;
    cfg.interaction_form =
        inst % 4 < 2 ? InteractionForm::kRankOne : InteractionForm::kGram;
    cfg.reg_scaling = inst % 3 == 0 ? RegScaling::kPlain : RegScaling::kWeighted;
    FactorModel model = init_model(m, n, cfg.dim, {InitKind::kGaussian, 0.3},
                                   opt.seed + inst);
    double prev = als_objective(mat, model, targets, cfg);
    for (int it = 0; it < 3; ++it) {
      try {
        update_context_rows(model, mat, targets, cfg);
      } catch (const NotPositiveDefiniteError&) {
        break;  // indefinite interaction term; nothing to verify here
      }
      const auto gp = rg_dataset_gradient(mat, model, targets, cfg.objective(),
                                          cfg.reg_scaling);
      double g = gp.P.cwiseAbs().maxCoeff();
      if (detail::fault_on(opt, "als", "update_context_rows")) g += 1e-3;
      rec.deviation("update_context_rows", g);
      double cur = als_objective(mat, model, targets, cfg);
      rec.check("update_context_rows", cur <= prev + 1e-10 * std::abs(prev),
                std::max(0.0, cur - prev));
      prev = cur;
      try {
        update_object_rows(model, mat, targets, cfg);
      } catch (const NotPositiveDefiniteError&) {
        break;
      }
      const auto gq = rg_dataset_gradient(mat, model, targets, cfg.objective(),
                                          cfg.reg_scaling);
      rec.deviation("update_object_rows", gq.Q.cwiseAbs().maxCoeff());
      cur = als_objective(mat, model, targets, cfg);
      rec.check("update_object_rows", cur <= prev + 1e-10 * std::abs(prev),
                std::max(0.0, cur - prev));
      prev = cur;
    }
  }
  return rec.result();
}

inline SuiteResult verify_squared_form(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("squared-form", 1e-10);
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<Id> size(2, 16);
  for (int inst = 0; inst < 50; ++inst) {
    const Id n = size(rng);
    std::uniform_int_distribution<std::size_t> deg(1, static_cast<std::size_t>(n - 1));
    const auto pos = detail::random_subset(n, deg(rng), rng);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int s = 0; s < 10; ++s) {
      const Vector o = detail::random_vector(n, 2.0, rng);
      double diff = rg2_context_loss(o, pos).value -
                    rg2_squared_form(o, pos, Scaling::kCanonical).value;
      if (detail::fault_on(opt, "squared-form", "rg2_squared_form")) {
        diff += 1e-3 * o[0];
      }
      lo = std::min(lo, diff);
      hi = std::max(hi, diff);
    }
    rec.deviation("rg2_squared_form", hi - lo);
  }
  return rec.result();
}

inline SuiteResult verify_consistency(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("consistency", 0);
  const double grid[] = {0, 0.25, 0.5, 0.75, 1};
  for (Eigen::Index n = 1; n <= 4; ++n) {
    std::size_t cells = 1;
    for (Eigen::Index i = 0; i < n; ++i) cells *= 5;
    std::size_t violations = 0;
    Vector f(n), fb(n);
    for (std::size_t a = 0; a < cells; ++a) {
      for (std::size_t b = 0; b < cells; ++b) {
        std::size_t ia = a, ib = b;
        for (Eigen::Index i = 0; i < n; ++i) {
          f[i] = grid[ia % 5];
          fb[i] = grid[ib % 5];
          ia /= 5;
          ib /= 5;
        }
        RegretBound rb = dcg_regret_bound_check(f, fb);
        if (detail::fault_on(opt, "consistency", "dcg_regret_bound_check")) {
          rb.holds = rb.lhs <= 0.5 * rb.rhs;
        }
        violations += rb.holds ? 0 : 1;
      }
    }
    rec.check("dcg_regret_bound_check", violations == 0,
              static_cast<double>(violations));
  }
  const TransferReport tr = rg2_regret_transfer_check(4, 10000, opt.seed);
  rec.check("rg2_regret_transfer_check", tr.holds(),
            static_cast<double>(tr.violations));
  return rec.result();
}

inline SuiteResult verify_psd(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("psd", 1e-12);
  for (int n = 2; n <= 64; ++n) {
    const std::vector<double> uniform(n, 1.0 / n);
    std::vector<double> one_hot(n, 0.0);
    one_hot[n / 2] = 1.0;
    const double want = 1.0 / n;
    for (const std::vector<double>* p : std::vector<const std::vector<double>*>{&uniform, &one_hot}) {
      PsdCondition c = psd_condition(*p);
      if (detail::fault_on(opt, "psd", "psd_condition")) c.value -= 1e-3;
      rec.check("psd_condition", c.value == want && c.holds,
                std::abs(c.value - want));
    }
  }
  std::vector<double> mixed(10, 0.5 / 9);
  mixed[0] = 0.5;
  rec.check("psd_condition", !psd_condition(mixed).holds);

  std::mt19937_64 rng(opt.seed);
  for (int inst = 0; inst < 200; ++inst) {
    const Eigen::Index n = 2 + inst % 15;
    const Vector p = softmax_probs(detail::random_vector(n, 3.0, rng));
    const HessianDominance hd = hessian_dominance_check(p);
    if (hd.condition_holds) {
      rec.check("hessian_dominance_check", hd.rayleigh_along_p >= -1e-12,
                std::max(0.0, -hd.rayleigh_along_p));
    }
  }
  for (Eigen::Index n : {2, 3, 10, 32}) {
    const UpperBoundReport ub =
        sm_upper_bound_check(concentrated_point(n, 0), 0, 1.0, 200, opt.seed);
    rec.check("sm_upper_bound_check", ub.holds, std::max(0.0, ub.max_gap));
  }
  return rec.result();
}

namespace detail {

// Direct-definition metrics: every rank position is inspected explicitly.
struct DirectMetrics {
  double ndcg, mrr, map;
};

inline DirectMetrics direct_metrics(const std::vector<Id>& ranking,
                                    const std::vector<char>& rel, int k) {
  double dcg = 0, idcg = 0, ap = 0;
  double first = 0;
  int hits = 0;
  int total = 0;
  for (char r : rel) total += r ? 1 : 0;
  for (int i = 0; i < k && i < static_cast<int>(ranking.size()); ++i) {
    const double gain = rel[ranking[i]] ? 1.0 : 0.0;
    dcg += (std::pow(2.0, gain) - 1.0) / std::log2(i + 2.0);
    if (gain > 0) {
      ++hits;
      ap += static_cast<double>(hits) / (i + 1);
      if (first == 0) first = 1.0 / (i + 1);
    }
  }
  for (int i = 0; i < std::min(total, k); ++i) idcg += 1.0 / std::log2(i + 2.0);
  return {dcg / idcg, first, ap / std::min(total, k)};
}

}  // namespace detail

inline SuiteResult verify_metrics(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("metrics", 1e-12);
  std::mt19937_64 rng(opt.seed);
  const int n = 8;
  std::vector<Id> ranking(n);
  std::iota(ranking.begin(), ranking.end(), 0);
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<char> rel(n, 0);
    std::vector<Id> relevant;
    for (int y = 0; y < n; ++y) {
      if (mask & (1 << y)) {
        rel[y] = 1;
        relevant.push_back(y);
      }
    }
    for (int r = 0; r < 100; ++r) {
      std::shuffle(ranking.begin(), ranking.end(), rng);
      for (int k : {1, 3, 5, 8}) {
        const auto want = detail::direct_metrics(ranking, rel, k);
        double ndcg = ndcg_at_k(ranking, relevant, k);
        if (detail::fault_on(opt, "metrics", "ndcg_at_k")) ndcg *= 1.001;
        rec.deviation("ndcg_at_k", std::abs(ndcg - want.ndcg));
        rec.deviation("mrr_at_k",
                      std::abs(mrr_at_k(ranking, relevant, k) - want.mrr));
        rec.deviation("map_at_k",
                      std::abs(map_at_k(ranking, relevant, k) - want.map));
      }
    }
  }
  return rec.result();
}

inline SuiteResult verify_bregman(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("bregman", 1e-10);
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<Id> size(2, 16);
  for (int inst = 0; inst < 50; ++inst) {
    const Id n = size(rng);
    std::uniform_int_distribution<std::size_t> deg(1, static_cast<std::size_t>(n - 1));
    const auto pos = detail::random_subset(n, deg(rng), rng);
    std::vector<Vector> scores;
    for (int s = 0; s < 10; ++s) scores.push_back(detail::random_vector(n, 2.0, rng));
    BregmanReport br = bregman_equivalence_check(scores, pos);
    if (detail::fault_on(opt, "bregman", "bregman_equivalence_check")) {
      br.rgx_spread += 1e-3;
    }
    rec.deviation("bregman_equivalence_check", br.max_deviation());
    rec.deviation("rg_target", std::abs(br.eta_sum));
    const Vector d = scores[0] - rg_target(pos, n);
    rec.deviation("centered_quadratic",
                  std::abs(centered_quadratic(d) -
                           centered_quadratic((d.array() + 3.7).matrix())) /
                      std::max(1.0, centered_quadratic(d)));
  }
  return rec.result();
}

inline SuiteResult verify_bound(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("bound", 1e-9);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int inst = 0; inst < 200; ++inst) {
    const double d = 0.5 + 20 * unit(rng);
    const double b = 0.5 + 2 * unit(rng);
    const double l = 1 + 5 * unit(rng);
    const double size = 10 + 1e6 * unit(rng);
    const double delta = 0.01 + 0.98 * unit(rng);
    const double direct = direct_generalization_epsilon(d, b, l, size, delta);
    if (!std::isfinite(direct)) continue;
    double logged = std::exp(log_generalization_epsilon(d, b, l, size, delta));
    if (detail::fault_on(opt, "bound", "log_generalization_epsilon")) {
      logged *= 1.001;
    }
    rec.deviation("log_generalization_epsilon",
                  std::abs(logged - direct) / direct);
    const double bigger =
        log_generalization_epsilon(d, b, l, 2 * size, delta);
    rec.check("log_generalization_epsilon",
              bigger < log_generalization_epsilon(d, b, l, size, delta));
  }
  BoundInputs ml;
  ml.k = 64;
  ml.m = 69815;
  ml.n = 9888;
  ml.dataset_size = 8240192;
  const BoundResult r = generalization_bound(ml);
  rec.check("generalization_bound", std::isfinite(r.log_epsilon));
  rec.check("lipschitz_threshold",
            r.lipschitz > lipschitz_threshold(ml.n, ml.c_p, ml.c_q));
  return rec.result();
}

// Runs the named suites (all of them when `selection` is empty).
inline std::vector<SuiteResult> run_verify(
    const std::vector<std::string>& selection, const VerifyOptions& opt = {}) {
  const auto& names = verify_suite_names();
  for (const auto& s : selection) {
    if (std::find(names.begin(), names.end(), s) == names.end()) {
      throw InvalidArgument("unknown verify suite '" + s + "'");
    }
  }
  std::vector<SuiteResult> out;
  for (const auto& name : names) {
    if (!selection.empty() &&
        std::find(selection.begin(), selection.end(), name) == selection.end()) {
      continue;
    }
    if (name == "taylor") out.push_back(verify_taylor(opt));
    else if (name == "gradients") out.push_back(verify_gradients(opt));
    else if (name == "als") out.push_back(verify_als(opt));
    else if (name == "squared-form") out.push_back(verify_squared_form(opt));
    else if (name == "consistency") out.push_back(verify_consistency(opt));
    else if (name == "psd") out.push_back(verify_psd(opt));
    else if (name == "metrics") out.push_back(verify_metrics(opt));
    else if (name == "bregman") out.push_back(verify_bregman(opt));
    else if (name == "bound") out.push_back(verify_bound(opt));
  }
  return out;
}

inline bool all_passed(const std::vector<SuiteResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const SuiteResult& r) { return r.passed; });
}

// One line per suite: "suite=<name> status=PASS|FAIL checks=... worst=...
// tolerance=... [operation=...]".
inline std::string format_verify_report(const std::vector<SuiteResult>& results) {
  std::ostringstream os;
  os << std::setprecision(6);
  for (const auto& r : results) {
    os << "suite=" << r.name << " status=" << (r.passed ? "PASS" : "FAIL")
       << " checks=" << r.checks << " worst=" << r.worst_deviation
       << " tolerance=" << r.tolerance;
    if (!r.passed) os << " operation=" << r.failing_operation;
    os << '\n';
  }
  return os.str();
}

}  // namespace rgrank
