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

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "rgrank/losses.hpp"
#include "rgrank/objective.hpp"

namespace rgrank {
namespace {

using Scalar = std::function<double(const Vector&)>;

Vector central_difference(const Scalar& f, const Vector& o, double h = 1e-5) {
  Vector g(o.size());
  for (Eigen::Index i = 0; i < o.size(); ++i) {
    Vector a = o, b = o;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

// Relative error with an absolute floor so that near-zero gradients compare
// sensibly.
double relative_error(const Vector& got, const Vector& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

Vector random_scores(std::mt19937_64& rng, Eigen::Index n, double sd = 1.0) {
  std::normal_distribution<double> dist(0.0, sd);
  Vector o(n);
  for (auto& v : o) v = dist(rng);
  return o;
}

std::vector<Id> random_positives(std::mt19937_64& rng, Id n) {
  std::vector<Id> out;
  for (Id y = 0; y < n; ++y) {
    if (rng() % 3 == 0) out.push_back(y);
  }
  if (out.empty()) out.push_back(static_cast<Id>(rng() % n));
  return out;
}

TEST(Softmax, Examples) {
  EXPECT_TRUE(softmax_probs(Vector::Zero(4)).isApprox(Vector::Constant(4, 0.25)));
  const Vector p = softmax_probs(Vector::Constant(3, 712.5));
  EXPECT_TRUE(p.isApprox(Vector::Constant(3, 1.0 / 3)));
  Vector o = Vector::Zero(4);
  o[0] = 1.0;
  EXPECT_NEAR(softmax_probs(o)[0], std::exp(1.0) / (std::exp(1.0) + 3), 1e-15);
  EXPECT_NEAR(softmax_probs(o)[0], 0.4754, 5e-5);
}

TEST(Softmax, RejectsNonFinite) {
  Vector o = Vector::Zero(3);
  o[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(softmax_probs(o), InvalidScoreError);
  o[1] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(sm_loss(o, 0), InvalidScoreError);
}

TEST(Softmax, SumsToOneOnRandomScores) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Vector p = softmax_probs(random_scores(rng, 1 + rng() % 40, 30.0));
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GE(p.minCoeff(), 0.0);
  }
}

TEST(SmLoss, UniformScores) {
  const auto l = sm_loss(Vector::Zero(4), 0, true);
  EXPECT_NEAR(l.value, std::log(4.0), 1e-15);
  Vector want(4);
  want << -0.75, 0.25, 0.25, 0.25;
  EXPECT_TRUE(l.gradient->isApprox(want, 1e-15));
}

TEST(SmLoss, OneHotScores) {
  Vector o = Vector::Zero(4);
  o[0] = 1.0;
  EXPECT_NEAR(sm_loss(o, 0).value, std::log1p(3 * std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(sm_loss(o, 0).value, 0.7437, 5e-5);
  o[0] = 50.0;
  EXPECT_LT(sm_loss(o, 0).value, 1e-20);
  EXPECT_THROW(sm_loss(o, 4), InvalidArgument);
}

TEST(SmLoss, ShiftInvariant) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const Vector o = random_scores(rng, 2 + rng() % 10);
    const double c = std::normal_distribution<double>(0, 20)(rng);
    const Id y = static_cast<Id>(rng() % o.size());
    EXPECT_NEAR(sm_loss((o.array() + c).matrix(), y).value,
                sm_loss(o, y).value, 1e-10);
  }
}

TEST(SmLoss, ContextLossSumsPositives) {
  std::mt19937_64 rng(3);
  const Vector o = random_scores(rng, 7);
  const std::vector<Id> pos = {1, 4, 6};
  const auto ctx = sm_context_loss(o, pos, true);
  double v = 0;
  Vector g = Vector::Zero(7);
  for (Id y : pos) {
    const auto l = sm_loss(o, y, true);
    v += l.value;
    g += *l.gradient;
  }
  EXPECT_NEAR(ctx.value, v, 1e-12);
  EXPECT_TRUE(ctx.gradient->isApprox(g, 1e-12));
}

TEST(SsmLoss, UniformPairIsLogTwo) {
  SampledBatch b{0, {1}, {}, 4};
  EXPECT_NEAR(ssm_loss(b, Vector::Zero(2)).value, std::log(2.0), 1e-15);
  // The uniform proposal written out explicitly leaves the logits unchanged.
  b.proposal.assign(4, 0.25);
  EXPECT_NEAR(ssm_loss(b, Vector::Zero(2)).value, std::log(2.0), 1e-15);
}

TEST(SsmLoss, Errors) {
  SampledBatch none{0, {}, {}, 4};
  EXPECT_THROW(ssm_loss(none, Vector::Zero(1)), InvalidArgument);
  SampledBatch zero{0, {2}, {0.5, 0.5, 0.0, 0.0}, 4};
  EXPECT_THROW(ssm_loss(zero, Vector::Zero(2)), InvalidProposalError);
  SampledBatch unnormalized{0, {1}, {0.5, 0.5, 0.5, 0.5}, 4};
  EXPECT_THROW(ssm_loss(unnormalized, Vector::Zero(2)), InvalidProposalError);
  SampledBatch ok{0, {1}, {}, 4};
  EXPECT_THROW(ssm_loss(ok, Vector::Zero(3)), DimensionMismatch);
}

TEST(SsmLoss, CorrectionShiftsNegativeLogits) {
  // q = 0.5 on object 1 among N = 4 gives a correction of -log 2.
  SampledBatch b{0, {1}, {0.1, 0.5, 0.2, 0.2}, 4};
  Vector o(2);
  o << 0.3, 0.7;
  const double neg = 0.7 - std::log(2.0);
  const double want = std::log(std::exp(0.3) + std::exp(neg)) - 0.3;
  EXPECT_NEAR(ssm_loss(b, o).value, want, 1e-14);
}

TEST(SsmLoss, MonteCarloMeanIsStable) {
  // N = 4 with fixed scores; two independent runs of 1e5 resampled batches
  // must agree within three combined standard errors.
  Vector scores(4);
  scores << 1.0, 0.2, -0.5, 0.4;
  const int n = 3;
  auto run = [&](std::uint64_t seed, double& mean, double& se) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Id> pick(0, 3);
    const int draws = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < draws; ++i) {
      SampledBatch b{0, {}, {}, 4};
      Vector o(n + 1);
      o[0] = scores[0];
      for (int j = 0; j < n; ++j) {
        b.negatives.push_back(pick(rng));
        o[j + 1] = scores[b.negatives.back()];
      }
      const double v = ssm_loss(b, o).value;
      s += v;
      s2 += v * v;
    }
    mean = s / draws;
    se = std::sqrt((s2 / draws - mean * mean) / draws);
  };
  double m1, se1, m2, se2;
  run(10, m1, se1);
  run(20, m2, se2);
  EXPECT_LT(std::abs(m1 - m2), 3.0 * std::hypot(se1, se2));
}

TEST(WslLoss, SinglePair) {
  const auto m = InteractionMatrix::from_rows(1, 1, {{0}});
  RowMatrix o(1, 1);
  o << 1.0;
  EXPECT_DOUBLE_EQ(wsl_loss(m, o, 1.0).value, 0.0);
  o << 0.0;
  EXPECT_DOUBLE_EQ(wsl_loss(m, o, 1.0).value, 2.0);
  EXPECT_THROW(wsl_loss(m, o, -1.0), InvalidArgument);
}

TEST(WslLoss, MatchesDoubleLoop) {
  std::mt19937_64 rng(4);
  const auto m = InteractionMatrix::from_rows(3, 3, {{0, 2}, {1}, {0, 1, 2}});
  RowMatrix o(3, 3);
  std::normal_distribution<double> dist;
  for (int i = 0; i < 9; ++i) o.data()[i] = dist(rng);
  const double alpha = 2.5;
  double want = 0;
  for (int x = 0; x < 3; ++x) {
    for (int y = 0; y < 3; ++y) {
      const bool r = m.contains(x, y);
      const double w = r ? alpha + 1 : 1.0;
      want += w * (o(x, y) - (r ? 1.0 : 0.0)) * (o(x, y) - (r ? 1.0 : 0.0));
    }
  }
  EXPECT_NEAR(wsl_loss(m, o, alpha).value, want, 1e-12);
}

TEST(Rg2Loss, ZeroScores) {
  const std::vector<Id> pos = {0};
  const auto l = rg2_context_loss(Vector::Zero(4), pos, true);
  EXPECT_DOUBLE_EQ(l.value, 0.5);
  Vector want(4);
  want << -0.75, 0.25, 0.25, 0.25;
  EXPECT_TRUE(l.gradient->isApprox(want, 1e-15));
  EXPECT_TRUE(l.gradient->isApprox(*sm_loss(Vector::Zero(4), 0, true).gradient,
                                   1e-15));
}

TEST(Rg2Loss, SquaredFormDiffersByConstant) {
  const std::vector<Id> pos = {0};
  EXPECT_DOUBLE_EQ(rg2_squared_form(Vector::Zero(4), pos).value, 1.5);
  EXPECT_DOUBLE_EQ(
      rg2_squared_form(Vector::Zero(4), pos, Scaling::kAbsorbed).value, 12.0);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Id n = 2 + static_cast<Id>(rng() % 12);
    const auto p = random_positives(rng, n);
    const double constant =
        static_cast<double>(p.size()) - static_cast<double>(n) / 2.0;
    for (int i = 0; i < 10; ++i) {
      const Vector o = random_scores(rng, n);
      EXPECT_NEAR(rg2_context_loss(o, p).value -
                      rg2_squared_form(o, p).value,
                  constant, 1e-10);
      EXPECT_NEAR(rg2_squared_form(o, p, Scaling::kAbsorbed).value,
                  2.0 * n * rg2_squared_form(o, p).value, 1e-9);
    }
  }
}

TEST(RgxLoss, ZeroSumDirectionMatchesRg2) {
  const std::vector<Id> pos = {0};
  EXPECT_DOUBLE_EQ(rgx_context_loss(Vector::Zero(4), pos).value, 0.5);
  Vector o(4);
  o << 0.1, -0.1, 0.05, -0.05;
  EXPECT_NEAR(rgx_context_loss(o, pos).value, rg2_context_loss(o, pos).value,
              1e-15);
}

TEST(RgxLoss, GradientEqualsSmAtOrigin) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Id n = 2 + static_cast<Id>(rng() % 14);
    const std::vector<Id> pos = {static_cast<Id>(rng() % n)};
    const Vector zero = Vector::Zero(n);
    const auto sm = sm_loss(zero, pos[0], true);
    const auto rgx = rgx_context_loss(zero, pos, true);
    const auto rg2 = rg2_context_loss(zero, pos, true);
    const double shift = std::log(static_cast<double>(n)) - 0.5;
    EXPECT_NEAR(sm.value, rgx.value + shift, 1e-14);
    EXPECT_NEAR(sm.value, rg2.value + shift, 1e-14);
    EXPECT_TRUE(sm.gradient->isApprox(*rgx.gradient, 1e-14));
  }
}

TEST(RgLoss, RejectsEmptyPositives) {
  const std::vector<Id> none;
  EXPECT_THROW(rg2_context_loss(Vector::Zero(3), none), InvalidArgument);
  const std::vector<Id> out_of_range = {3};
  EXPECT_THROW(rgx_context_loss(Vector::Zero(3), out_of_range),
               InvalidArgument);
}

TEST(RgLoss, Rg2CurvatureMajorizesSmNearConcentratedScores) {
  // Around o0 = N e_y - 1, the RG2 quadratic anchored at the value and
  // gradient of sm stays above sm within unit distance.
  std::mt19937_64 rng(11);
  for (int n : {2, 3, 4, 10, 16}) {
    const std::vector<Id> pos = {0};
    Vector o0 = Vector::Constant(n, -1.0);
    o0[0] = n - 1.0;
    const auto sm0 = sm_loss(o0, 0, true);
    const auto rg0 = rg2_context_loss(o0, pos, true);
    for (int s = 0; s < 200; ++s) {
      Vector step = random_scores(rng, n);
      step *= std::uniform_real_distribution<double>(0, 1)(rng) / step.norm();
      const Vector o = o0 + step;
      const double curvature = rg2_context_loss(o, pos).value - rg0.value -
                               rg0.gradient->dot(step);
      EXPECT_NEAR(curvature, step.squaredNorm() / (2.0 * n), 1e-10);
      EXPECT_LE(sm_loss(o, 0).value,
                sm0.value + sm0.gradient->dot(step) + curvature + 1e-12)
          << "N=" << n;
    }
  }
}

TEST(Baselines, TiesGiveLogTwo) {
  EXPECT_NEAR(bpr_loss(0.7, 0.7).value, std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_loss(0.0, true).value, std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_loss(0.0, false).value, std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_loss(800.0, true).value, 0.0, 1e-300);
  EXPECT_NEAR(bce_loss(800.0, false).value, 800.0, 1e-12);
  EXPECT_THROW(bpr_loss(std::numeric_limits<double>::infinity(), 0.0),
               InvalidScoreError);
}

TEST(Gradients, MatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Id n = 2 + static_cast<Id>(rng() % 15);
    const Vector o = random_scores(rng, n);
    const auto pos = random_positives(rng, n);
    const Id y = pos.front();

    auto check = [&](const LossValue& l, const Scalar& f, const Vector& at,
                     const char* name) {
      ASSERT_TRUE(l.gradient.has_value()) << name;
      EXPECT_LT(relative_error(*l.gradient, central_difference(f, at)), 1e-5)
          << name << " trial " << trial;
    };
    check(sm_loss(o, y, true),
          [&](const Vector& v) { return sm_loss(v, y).value; }, o, "sm");
    check(sm_context_loss(o, pos, true),
          [&](const Vector& v) { return sm_context_loss(v, pos).value; }, o,
          "sm_context");
    check(rg2_context_loss(o, pos, true),
          [&](const Vector& v) { return rg2_context_loss(v, pos).value; }, o,
          "rg2");
    check(rgx_context_loss(o, pos, true),
          [&](const Vector& v) { return rgx_context_loss(v, pos).value; }, o,
          "rgx");
    check(rg2_squared_form(o, pos, Scaling::kCanonical, true),
          [&](const Vector& v) { return rg2_squared_form(v, pos).value; }, o,
          "squared");

    SampledBatch batch{y, {}, {}, n};
    std::vector<double> q(n);
    double total = 0;
    for (auto& v : q) total += (v = 0.1 + static_cast<double>(rng() % 10));
    for (auto& v : q) v /= total;
    batch.proposal = q;
    const int samples = 1 + static_cast<int>(rng() % 5);
    for (int j = 0; j < samples; ++j) {
      batch.negatives.push_back(static_cast<Id>(rng() % n));
    }
    const Vector so = random_scores(rng, samples + 1);
    check(ssm_loss(batch, so, true),
          [&](const Vector& v) { return ssm_loss(batch, v).value; }, so, "ssm");

    Vector pair = random_scores(rng, 2, 3.0);
    check(bpr_loss(pair[0], pair[1], true),
          [](const Vector& v) { return bpr_loss(v[0], v[1]).value; }, pair,
          "bpr");
    const Vector one = pair.head(1);
    for (bool label : {true, false}) {
      check(bce_loss(one[0], label, true),
            [label](const Vector& v) { return bce_loss(v[0], label).value; },
            one, "bce");
    }

    const Id m = 1 + static_cast<Id>(rng() % 4);
    std::vector<std::vector<Id>> rows(m);
    for (auto& r : rows) r = random_positives(rng, n);
    const auto mat = InteractionMatrix::from_rows(m, n, rows);
    RowMatrix scores(m, n);
    const Vector flat = random_scores(rng, m * n);
    std::copy(flat.begin(), flat.end(), scores.data());
    const double alpha = static_cast<double>(rng() % 5);
    check(wsl_loss(mat, scores, alpha, true),
          [&](const Vector& v) {
            RowMatrix s(m, n);
            std::copy(v.begin(), v.end(), s.data());
            return wsl_loss(mat, s, alpha).value;
          },
          flat, "wsl");
  }
}

// Dense oracle over an explicit M x N expansion of targets and weights,
// recomputed here from the raw interaction rows.
struct DenseProblem {
  Matrix S, W;
  Vector V;
};

DenseProblem dense_targets(const InteractionMatrix& mat, const TargetSpec& t) {
  const Id m = mat.num_contexts(), n = mat.num_objects();
  DenseProblem d{Matrix(m, n), Matrix(m, n), Vector(m)};
  for (Id x = 0; x < m; ++x) {
    const double deg = static_cast<double>(mat.degree(x));
    for (Id y = 0; y < n; ++y) {
      const bool r = mat.contains(x, y);
      d.S(x, y) = (r ? 1.0 : 0.0) * n / deg - 1.0;
      if (t.variant == TargetVariant::kFull) {
        d.W(x, y) = deg;
      } else {
        d.W(x, y) = r ? deg : deg * (t.n_samples + 1.0) / n;
      }
    }
    d.V[x] = t.variant == TargetVariant::kFull
                 ? deg / n
                 : deg * (t.n_samples + 1.0) / (static_cast<double>(n) * n);
  }
  return d;
}

double dense_loss(const DenseProblem& d, const FactorModel& f, double lambda,
                  LossKind kind, InteractionForm form) {
  const Matrix o = f.P * f.Q.transpose();
  double v = 0;
  for (Eigen::Index x = 0; x < o.rows(); ++x) {
    for (Eigen::Index y = 0; y < o.cols(); ++y) {
      v += d.W(x, y) * (d.S(x, y) - o(x, y)) * (d.S(x, y) - o(x, y));
    }
    if (kind == LossKind::kRgx) {
      const double sum = o.row(x).sum();
      v -= d.V[x] * (form == InteractionForm::kRankOne
                         ? sum * sum
                         : o.row(x).squaredNorm());
    }
  }
  return v + lambda * (f.P.squaredNorm() + f.Q.squaredNorm());
}

TEST(DatasetLoss, ZeroModelIsWeightedTargetEnergy) {
  const auto mat = InteractionMatrix::from_rows(2, 5, {{0, 3}, {1}});
  const auto t = build_targets(mat, TargetSpec::full());
  const FactorModel zero{RowMatrix::Zero(2, 3), RowMatrix::Zero(5, 3)};
  const auto d = dense_targets(mat, TargetSpec::full());
  const double want = (d.W.array() * d.S.array().square()).sum();
  EXPECT_NEAR(rg_dataset_loss(mat, zero, t, {0.7, LossKind::kRgx}).value(),
              want, 1e-12);
}

TEST(DatasetLoss, MatchesDenseOracleOnRandomInstances) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const Id m = trial == 0 ? 4 : 1 + static_cast<Id>(rng() % 6);
    const Id n = trial == 0 ? 3 : 1 + static_cast<Id>(rng() % 6);
    const Eigen::Index k = trial == 0 ? 2 : 1 + rng() % 3;
    std::vector<std::vector<Id>> rows(m);
    for (auto& r : rows) r = random_positives(rng, n);
    const auto mat = InteractionMatrix::from_rows(m, n, rows);
    const auto f =
        init_model(m, n, k, {InitKind::kGaussian, 0.7}, rng());
    const double lambda = 0.1 * static_cast<double>(rng() % 5);
    for (const auto& spec : {TargetSpec::full(), TargetSpec::sampled(3)}) {
      const auto t = build_targets(mat, spec);
      const auto d = dense_targets(mat, spec);
      for (auto kind : {LossKind::kRg2, LossKind::kRgx}) {
        for (auto form : {InteractionForm::kRankOne, InteractionForm::kGram}) {
          const double got =
              rg_dataset_loss(mat, f, t, {lambda, kind, form}).value();
          const double want = dense_loss(d, f, lambda, kind, form);
          EXPECT_NEAR(got, want, 1e-10 * std::max(1.0, std::abs(want)));
        }
      }
    }
  }
}

TEST(DatasetLoss, IncreasesWithLambda) {
  std::mt19937_64 rng(9);
  const auto mat = InteractionMatrix::from_rows(3, 4, {{0}, {1, 2}, {3}});
  const auto t = build_targets(mat, TargetSpec::full());
  const auto f = init_model(3, 4, 2, {InitKind::kUniform, 0.5}, 3);
  double prev = -std::numeric_limits<double>::infinity();
  for (double lambda : {0.0, 0.01, 0.1, 1.0, 10.0}) {
    const double v = rg_dataset_loss(mat, f, t, {lambda}).value();
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(DatasetLoss, DimensionMismatch) {
  const auto mat = InteractionMatrix::from_rows(2, 2, {{0}, {1}});
  const auto t = build_targets(mat, TargetSpec::full());
  const auto f = init_model(3, 2, 2, {}, 1);
  EXPECT_THROW(rg_dataset_loss(mat, f, t, {}), DimensionMismatch);
}

TEST(DatasetLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const Id m = 1 + static_cast<Id>(rng() % 5);
    const Id n = 1 + static_cast<Id>(rng() % 5);
    const Eigen::Index k = 1 + rng() % 3;
    std::vector<std::vector<Id>> rows(m);
    for (auto& r : rows) r = random_positives(rng, n);
    const auto mat = InteractionMatrix::from_rows(m, n, rows);
    const auto t = build_targets(mat, TargetSpec::sampled(2));
    const auto f = init_model(m, n, k, {InitKind::kGaussian, 0.5}, rng());
    for (auto scaling : {RegScaling::kPlain, RegScaling::kWeighted}) {
      for (auto form : {InteractionForm::kRankOne, InteractionForm::kGram}) {
        const ObjectiveSpec spec{0.3, LossKind::kRgx, form};
        const auto g = rg_dataset_gradient(mat, f, t, spec, scaling);
        Vector flat(f.P.size() + f.Q.size());
        std::copy(f.P.data(), f.P.data() + f.P.size(), flat.data());
        std::copy(f.Q.data(), f.Q.data() + f.Q.size(),
                  flat.data() + f.P.size());
        auto value = [&](const Vector& v) {
          FactorModel h = f;
          std::copy(v.data(), v.data() + f.P.size(), h.P.data());
          std::copy(v.data() + f.P.size(), v.data() + v.size(), h.Q.data());
          return rg_dataset_loss(mat, h, t, spec).value(scaling);
        };
        Vector analytic(flat.size());
        std::copy(g.P.data(), g.P.data() + g.P.size(), analytic.data());
        std::copy(g.Q.data(), g.Q.data() + g.Q.size(),
                  analytic.data() + g.P.size());
        EXPECT_LT(relative_error(analytic, central_difference(value, flat)),
                  1e-5);
      }
    }
  }
}

}  // namespace
}  // namespace rgrank
