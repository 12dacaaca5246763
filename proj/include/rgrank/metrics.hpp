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

// Top-K ranking metrics with binary relevance.
//
// Rankings are sequences of object ids, best first. Relevance sets may be in
// any order. DCG uses gains 2^r - 1 = r and discounts 1 / log_b(1 + i) for
// 1-based rank i (base 2 unless configured otherwise).

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rgrank/errors.hpp"
#include "rgrank/factor_model.hpp"
#include "rgrank/interaction_matrix.hpp"
#include "rgrank/interaction_set.hpp"

namespace rgrank {

enum class MapNormalization {
  kCutoff,  // 1 / min(|relevant|, K)
  kStrict,  // 1 / |relevant|
};

struct MetricOptions {
  double log_base = 2.0;
  MapNormalization map_normalization = MapNormalization::kCutoff;
};

namespace detail {

inline std::vector<Id> sorted_unique(std::span<const Id> ids) {
  std::vector<Id> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline void check_cutoff(int k) {
  if (k < 1) throw InvalidArgument("cutoff K must be >= 1");
}

inline std::vector<Id> checked_relevant(std::span<const Id> relevant) {
  auto rel = sorted_unique(relevant);
  if (rel.empty()) throw InvalidArgument("empty relevant set");
  return rel;
}

inline bool is_relevant(const std::vector<Id>& rel, Id y) {
  return std::binary_search(rel.begin(), rel.end(), y);
}

inline double discount(std::size_t rank, double base) {
  return std::log(base) / std::log1p(static_cast<double>(rank));
}

}  // namespace detail

// Candidates (all ids not in `exclude`) sorted by descending score, ties by
// ascending id. `limit` truncates the result to the best `limit` entries.
inline std::vector<Id> rank_items(
    const Eigen::Ref<const Vector>& scores, std::span<const Id> exclude = {},
    std::size_t limit = std::numeric_limits<std::size_t>::max()) {
  const auto n = static_cast<Id>(scores.size());
  std::vector<char> skip(static_cast<std::size_t>(n), 0);
  for (Id y : exclude) {
    if (y < 0 || y >= n) throw InvalidArgument("excluded id out of range");
    skip[y] = 1;
  }
  std::vector<Id> ids;
  ids.reserve(scores.size());
  for (Id y = 0; y < n; ++y) {
    if (skip[y]) continue;
    if (std::isnan(scores[y])) throw InvalidScoreError("NaN score");
    ids.push_back(y);
  }
  if (ids.empty()) throw EmptyCandidateError("every candidate is excluded");
  auto better = [&](Id a, Id b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  if (limit < ids.size()) {
    std::partial_sort(ids.begin(), ids.begin() + static_cast<long>(limit),
                      ids.end(), better);
    ids.resize(limit);
  } else {
    std::sort(ids.begin(), ids.end(), better);
  }
  return ids;
}

inline double dcg_at_k(std::span<const Id> ranking, std::span<const Id> relevant,
                       int k, const MetricOptions& opt = {}) {
  detail::check_cutoff(k);
  const auto rel = detail::checked_relevant(relevant);
  double dcg = 0;
  const std::size_t stop = std::min(ranking.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < stop; ++i) {
    if (detail::is_relevant(rel, ranking[i])) {
      dcg += detail::discount(i + 1, opt.log_base);
    }
  }
  return dcg;
}

inline double ideal_dcg_at_k(std::size_t num_relevant, int k,
                             const MetricOptions& opt = {}) {
  detail::check_cutoff(k);
  double idcg = 0;
  const std::size_t stop = std::min(num_relevant, static_cast<std::size_t>(k));
  for (std::size_t i = 1; i <= stop; ++i) idcg += detail::discount(i, opt.log_base);
  return idcg;
}

inline double ndcg_at_k(std::span<const Id> ranking,
                        std::span<const Id> relevant, int k,
                        const MetricOptions& opt = {}) {
  const double dcg = dcg_at_k(ranking, relevant, k, opt);
  return dcg / ideal_dcg_at_k(detail::sorted_unique(relevant).size(), k, opt);
}

inline double mrr_at_k(std::span<const Id> ranking, std::span<const Id> relevant,
                       int k) {
  detail::check_cutoff(k);
  const auto rel = detail::checked_relevant(relevant);
  const std::size_t stop = std::min(ranking.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < stop; ++i) {
    if (detail::is_relevant(rel, ranking[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

inline double map_at_k(std::span<const Id> ranking, std::span<const Id> relevant,
                       int k, const MetricOptions& opt = {}) {
  detail::check_cutoff(k);
  const auto rel = detail::checked_relevant(relevant);
  const std::size_t stop = std::min(ranking.size(), static_cast<std::size_t>(k));
  double sum = 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < stop; ++i) {
    if (detail::is_relevant(rel, ranking[i])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  const std::size_t norm =
      opt.map_normalization == MapNormalization::kCutoff
          ? std::min(rel.size(), static_cast<std::size_t>(k))
          : rel.size();
  return sum / static_cast<double>(norm);
}

// ---------------------------------------------------------------------------

struct ContextMetrics {
  Id context = 0;
  double dcg = 0;
  double ndcg = 0;
  double mrr = 0;
  double map = 0;
};

struct RankingResult {
  int k = 10;
  std::size_t evaluated_contexts = 0;
  // Contexts with no heldout positive; they are not averaged in.
  std::size_t skipped_contexts = 0;
  std::vector<ContextMetrics> per_context;
  double dcg = 0;
  double ndcg = 0;
  double mrr = 0;
  double map = 0;

  bool empty() const { return evaluated_contexts == 0; }
};

// Scores every context that has at least one heldout positive, excluding its
// training positives from the candidates.
inline RankingResult evaluate(const FactorModel& model,
                              const InteractionSet& heldout,
                              const InteractionMatrix& train, int k,
                              const MetricOptions& opt = {}) {
  detail::check_cutoff(k);
  check_dimensions(model, train);
  if (heldout.num_contexts() != train.num_contexts() ||
      heldout.num_objects() != train.num_objects()) {
    throw DimensionMismatch("heldout set and training matrix disagree in shape");
  }
  RankingResult out;
  out.k = k;
  const auto& entries = heldout.entries();
  std::size_t i = 0;
  std::vector<Id> relevant;
  for (Id x = 0; x < heldout.num_contexts(); ++x) {
    relevant.clear();
    while (i < entries.size() && entries[i].context == x) {
      relevant.push_back(entries[i++].object);
    }
    if (relevant.empty()) {
      ++out.skipped_contexts;
      continue;
    }
    const Vector scores = model.scores(x);
    std::vector<Id> ranking;
    try {
      ranking = rank_items(scores, train.row(x), static_cast<std::size_t>(k));
    } catch (const EmptyCandidateError&) {
      ranking.clear();
    }
    ContextMetrics cm;
    cm.context = x;
    cm.dcg = dcg_at_k(ranking, relevant, k, opt);
    cm.ndcg = cm.dcg / ideal_dcg_at_k(relevant.size(), k, opt);
    cm.mrr = mrr_at_k(ranking, relevant, k);
    cm.map = map_at_k(ranking, relevant, k, opt);
    out.per_context.push_back(cm);
  }
  out.evaluated_contexts = out.per_context.size();
  if (!out.per_context.empty()) {
    for (const auto& cm : out.per_context) {
      out.dcg += cm.dcg;
      out.ndcg += cm.ndcg;
      out.mrr += cm.mrr;
      out.map += cm.map;
    }
    const double n = static_cast<double>(out.per_context.size());
    out.dcg /= n;
    out.ndcg /= n;
    out.mrr /= n;
    out.map /= n;
  }
  return out;
}

// One structured-text record: "k=10 evaluated=... ndcg=... mrr=... map=...".
inline std::string format_report(const RankingResult& r) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "k=" << r.k << " evaluated=" << r.evaluated_contexts
     << " skipped=" << r.skipped_contexts << " ndcg=" << r.ndcg
     << " mrr=" << r.mrr << " map=" << r.map << " dcg=" << r.dcg;
  return os.str();
}

}  // namespace rgrank
