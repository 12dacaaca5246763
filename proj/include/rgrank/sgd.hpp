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

// Mini-batch SGD baselines (SM, SSM, BPR, BCE) on the factor model.
//
// One epoch is a shuffled pass over the positive pairs. A batch accumulates
// the mean gradient over its pairs and applies it only to rows that the
// batch touched; every other row stays bitwise unchanged. Full softmax
// touches every object row per pair, which is the O(N) cost the ALS route
// avoids.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rgrank/errors.hpp"
#include "rgrank/factor_model.hpp"
#include "rgrank/interaction_matrix.hpp"
#include "rgrank/losses.hpp"

namespace rgrank {

enum class SgdLoss { kSm, kSsm, kBpr, kBce };
enum class UpdateRule { kPlain, kAdam };

inline std::string to_string(SgdLoss l) {
  switch (l) {
    case SgdLoss::kSm: return "sm";
    case SgdLoss::kSsm: return "ssm";
    case SgdLoss::kBpr: return "bpr";
    case SgdLoss::kBce: return "bce";
  }
  return "?";
}

struct SgdConfig {
  SgdLoss loss = SgdLoss::kSm;
  int dim = 32;
  double learning_rate = 0.01;
  double weight_decay = 0.0;
  int batch_size = 256;
  int n_negatives = 10;
  int epochs = 10;
  std::uint64_t seed = 0;
  UpdateRule update_rule = UpdateRule::kAdam;
  InitSpec init{InitKind::kGaussian, 0.1};
  // Adaptive-moment constants.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool sampled() const { return loss != SgdLoss::kSm; }

  void validate() const {
    if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) {
      throw InvalidArgument("learning_rate must be finite and >= 0");
    }
    if (!(weight_decay >= 0)) throw InvalidArgument("weight_decay must be >= 0");
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (sampled() && n_negatives < 1) {
      throw InvalidArgument("n_negatives must be >= 1 for sampled losses");
    }
    if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
    if (dim < 1) throw InvalidArgument("embedding dimension K must be >= 1");
  }
};

// Uniform draws over [0, N) with replacement; training positives are not
// filtered out, so the proposal is exactly q = 1/N.
inline std::vector<Id> sample_negatives(Id num_objects, int n,
                                        std::mt19937_64& rng) {
  if (n < 1) throw InvalidArgument("sample_negatives needs n >= 1");
  if (num_objects < 1) throw InvalidArgument("num_objects must be >= 1");
  std::uniform_int_distribution<Id> dist(0, num_objects - 1);
  std::vector<Id> out(static_cast<std::size_t>(n));
  for (auto& id : out) id = dist(rng);
  return out;
}

struct SgdEpoch {
  int epoch = 0;          // 1-based
  double train_loss = 0;  // mean loss per positive pair
  double seconds = 0;     // cumulative training time
};

struct SgdResult {
  FactorModel model;
  std::vector<SgdEpoch> epochs;
};

using SgdCallback = std::function<bool(const FactorModel&, const SgdEpoch&)>;

namespace detail {

// Gradient buffer that remembers which rows were written.
class RowGradients {
 public:
  RowGradients(Eigen::Index rows, Eigen::Index k)
      : grad_(RowMatrix::Zero(rows, k)), touched_(rows, 0) {}

  auto row(Eigen::Index r) {
    if (!touched_[r]) {
      touched_[r] = 1;
      list_.push_back(r);
    }
    return grad_.row(r);
  }
  const std::vector<Eigen::Index>& touched() const { return list_; }
  auto value(Eigen::Index r) const { return grad_.row(r); }

  void clear() {
    for (auto r : list_) {
      grad_.row(r).setZero();
      touched_[r] = 0;
    }
    list_.clear();
  }

 private:
  RowMatrix grad_;
  std::vector<char> touched_;
  std::vector<Eigen::Index> list_;
};

class Optimizer {
 public:
  Optimizer(const SgdConfig& cfg, Eigen::Index m, Eigen::Index n,
            Eigen::Index k)
      : cfg_(cfg) {
    if (cfg.update_rule == UpdateRule::kAdam) {
      mp_ = RowMatrix::Zero(m, k);
      vp_ = RowMatrix::Zero(m, k);
      mq_ = RowMatrix::Zero(n, k);
      vq_ = RowMatrix::Zero(n, k);
    }
  }

  void step(FactorModel& model, const RowGradients& gp,
            const RowGradients& gq) {
    ++t_;
    apply(model.P, gp, mp_, vp_);
    apply(model.Q, gq, mq_, vq_);
  }

 private:
  void apply(RowMatrix& w, const RowGradients& g, RowMatrix& m,
             RowMatrix& v) const {
    const double lr = cfg_.learning_rate;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto r : g.touched()) {
      Vector grad = g.value(r).transpose();
      if (cfg_.weight_decay > 0) grad += cfg_.weight_decay * w.row(r).transpose();
      if (cfg_.update_rule == UpdateRule::kPlain) {
        w.row(r) -= lr * grad.transpose();
        continue;
      }
      m.row(r) = cfg_.beta1 * m.row(r) + (1.0 - cfg_.beta1) * grad.transpose();
      v.row(r) = cfg_.beta2 * v.row(r) +
                 (1.0 - cfg_.beta2) * grad.array().square().matrix().transpose();
      const auto m_hat = m.row(r).array() / c1;
      const auto v_hat = v.row(r).array() / c2;
      w.row(r).array() -= lr * m_hat / (v_hat.sqrt() + cfg_.epsilon);
    }
  }

  const SgdConfig& cfg_;
  std::int64_t t_ = 0;
  RowMatrix mp_, vp_, mq_, vq_;
};

}  // namespace detail

// Accumulates the loss and gradient of one positive pair (x, y), scaled by
// `scale`, into the row buffers. Returns the unscaled loss.
inline double sgd_pair_gradient(const FactorModel& model, const SgdConfig& cfg,
                                Id x, Id y, std::mt19937_64& rng,
                                double scale, detail::RowGradients& gp,
                                detail::RowGradients& gq) {
  const auto& P = model.P;
  const auto& Q = model.Q;
  const Id n_obj = static_cast<Id>(Q.rows());
  const auto p = P.row(x);
  switch (cfg.loss) {
    case SgdLoss::kSm: {
      const Vector o = Q * p.transpose();
      LossValue lv = sm_loss(o, y, true);
      const Vector& g = *lv.gradient;
      gp.row(x) += scale * (Q.transpose() * g).transpose();
      for (Id j = 0; j < n_obj; ++j) gq.row(j) += (scale * g[j]) * p;
      return lv.value;
    }
    case SgdLoss::kSsm: {
      SampledBatch batch;
      batch.positive = y;
      batch.negatives = sample_negatives(n_obj, cfg.n_negatives, rng);
      batch.num_objects = n_obj;
      const auto n = static_cast<Eigen::Index>(batch.negatives.size());
      Vector o(n + 1);
      o[0] = p.dot(Q.row(y));
      for (Eigen::Index j = 0; j < n; ++j) {
        o[j + 1] = p.dot(Q.row(batch.negatives[j]));
      }
      LossValue lv = ssm_loss(batch, o, true);
      const Vector& g = *lv.gradient;
      auto gpx = gp.row(x);
      gpx += (scale * g[0]) * Q.row(y);
      gq.row(y) += (scale * g[0]) * p;
      for (Eigen::Index j = 0; j < n; ++j) {
        const Id neg = batch.negatives[j];
        gpx += (scale * g[j + 1]) * Q.row(neg);
        gq.row(neg) += (scale * g[j + 1]) * p;
      }
      return lv.value;
    }
    case SgdLoss::kBpr: {
      const auto negs = sample_negatives(n_obj, cfg.n_negatives, rng);
      const double s = scale / static_cast<double>(negs.size());
      const double pos = p.dot(Q.row(y));
      double total = 0;
      for (Id neg : negs) {
        LossValue lv = bpr_loss(pos, p.dot(Q.row(neg)), true);
        const Vector& g = *lv.gradient;
        gp.row(x) += s * (g[0] * Q.row(y) + g[1] * Q.row(neg));
        gq.row(y) += (s * g[0]) * p;
        gq.row(neg) += (s * g[1]) * p;
        total += lv.value;
      }
      return total / static_cast<double>(negs.size());
    }
    case SgdLoss::kBce: {
      const auto negs = sample_negatives(n_obj, cfg.n_negatives, rng);
      LossValue lv = bce_loss(p.dot(Q.row(y)), true, true);
      double total = lv.value;
      gp.row(x) += (scale * (*lv.gradient)[0]) * Q.row(y);
      gq.row(y) += (scale * (*lv.gradient)[0]) * p;
      for (Id neg : negs) {
        LossValue ln = bce_loss(p.dot(Q.row(neg)), false, true);
        const double g = (*ln.gradient)[0];
        gp.row(x) += (scale * g) * Q.row(neg);
        gq.row(neg) += (scale * g) * p;
        total += ln.value;
      }
      return total;
    }
  }
  return 0;
}

inline SgdResult sgd_fit(const InteractionMatrix& matrix, const SgdConfig& cfg,
                         FactorModel initial,
                         const SgdCallback& callback = {}) {
  cfg.validate();
  check_dimensions(initial, matrix);
  using Clock = std::chrono::steady_clock;
  SgdResult result;
  result.model = std::move(initial);
  FactorModel& model = result.model;
  const Eigen::Index k = model.dim();

  std::vector<Interaction> pairs;
  pairs.reserve(matrix.num_positives());
  for (Id x = 0; x < matrix.num_contexts(); ++x) {
    for (Id y : matrix.row(x)) pairs.push_back({x, y});
  }
  if (pairs.empty()) throw EmptyDatasetError("no positive pairs to train on");

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  detail::RowGradients gp(model.num_contexts(), k);
  detail::RowGradients gq(model.num_objects(), k);
  detail::Optimizer opt(cfg, model.num_contexts(), model.num_objects(), k);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  double elapsed = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = Clock::now();
    std::shuffle(pairs.begin(), pairs.end(), rng);
    double total = 0;
    for (std::size_t b = 0; b < pairs.size(); b += batch) {
      const std::size_t e = std::min(pairs.size(), b + batch);
      const double scale = 1.0 / static_cast<double>(e - b);
      try {
        for (std::size_t i = b; i < e; ++i) {
          total += sgd_pair_gradient(model, cfg, pairs[i].context,
                                     pairs[i].object, rng, scale, gp, gq);
        }
      } catch (const InvalidScoreError&) {
        // Finite factors can still overflow to infinite scores.
        throw DivergedError("non-finite scores in epoch " +
                            std::to_string(epoch));
      }
      if (!std::isfinite(total)) {
        throw DivergedError("non-finite training loss in epoch " +
                            std::to_string(epoch));
      }
      opt.step(model, gp, gq);
      gp.clear();
      gq.clear();
    }
    if (!model.finite()) {
      throw DivergedError("non-finite factors after epoch " +
                          std::to_string(epoch));
    }
    elapsed += std::chrono::duration<double>(Clock::now() - start).count();
    SgdEpoch rec{epoch, total / static_cast<double>(pairs.size()), elapsed};
    result.epochs.push_back(rec);
    if (callback && !callback(model, rec)) break;
  }
  return result;
}

inline SgdResult sgd_fit(const InteractionMatrix& matrix, const SgdConfig& cfg,
                         const SgdCallback& callback = {}) {
  cfg.validate();
  return sgd_fit(matrix, cfg,
                 init_model(matrix.num_contexts(), matrix.num_objects(),
                            cfg.dim, cfg.init, cfg.seed),
                 callback);
}

}  // namespace rgrank
