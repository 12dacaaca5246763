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

// Experiment orchestration: data preparation, training with per-epoch
// validation and early stopping, evaluation of snapshots, epoch logs,
// convergence curves and grid search.
//
// One ALS iteration (context half-step plus object half-step) is one logged
// epoch. The wall-clock column is cumulative training time only; the time
// spent evaluating is logged separately in eval_s.

#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rgrank/als.hpp"
#include "rgrank/config.hpp"
#include "rgrank/errors.hpp"
#include "rgrank/factor_model.hpp"
#include "rgrank/interaction_matrix.hpp"
#include "rgrank/interaction_set.hpp"
#include "rgrank/metrics.hpp"
#include "rgrank/sgd.hpp"
#include "rgrank/targets.hpp"

namespace rgrank {

// ---------------------------------------------------------------------------
// Epoch logs.

struct EpochLog {
  int epoch = 0;
  double wall_clock_s = 0;  // cumulative training time
  double eval_s = 0;        // evaluation time of this epoch
  double train_loss = 0;
  double ndcg = std::numeric_limits<double>::quiet_NaN();
  double mrr = std::numeric_limits<double>::quiet_NaN();
  double map = std::numeric_limits<double>::quiet_NaN();

  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

inline std::string format_epoch_log(const EpochLog& e) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "epoch=" << e.epoch << " wall_clock_s=" << e.wall_clock_s
     << " eval_s=" << e.eval_s << " train_loss=" << e.train_loss
     << " ndcg=" << e.ndcg << " mrr=" << e.mrr << " map=" << e.map;
  return os.str();
}

namespace detail {

inline double parse_log_number(std::string_view s) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidArgument("bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace detail

inline EpochLog parse_epoch_log(std::string_view line) {
  EpochLog e;
  int seen = 0;
  for (auto field : detail::split_fields(line, ' ')) {
    if (field.empty()) continue;
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("log field without '=': " + std::string(field));
    }
    const auto key = field.substr(0, eq);
    const double v = detail::parse_log_number(field.substr(eq + 1));
    if (key == "epoch") e.epoch = static_cast<int>(v);
    else if (key == "wall_clock_s") e.wall_clock_s = v;
    else if (key == "eval_s") e.eval_s = v;
    else if (key == "train_loss") e.train_loss = v;
    else if (key == "ndcg") e.ndcg = v;
    else if (key == "mrr") e.mrr = v;
    else if (key == "map") e.map = v;
    else continue;
    ++seen;
  }
  if (seen == 0) throw InvalidArgument("empty log record");
  return e;
}

inline void write_epoch_logs(std::ostream& out,
                             const std::vector<EpochLog>& logs) {
  for (const auto& e : logs) out << format_epoch_log(e) << '\n';
}

inline std::vector<EpochLog> read_epoch_logs(std::istream& in) {
  std::vector<EpochLog> logs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty() || line[0] == '#') continue;
    try {
      logs.push_back(parse_epoch_log(line));
    } catch (const InvalidArgument& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return logs;
}

inline std::vector<EpochLog> read_epoch_logs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_epoch_logs(in);
}

// ---------------------------------------------------------------------------
// Convergence curves: tab-separated "run, wall_clock_s, <metric>" rows,
// sorted by run label and then time.

struct CurveRun {
  std::string label;
  std::vector<EpochLog> logs;
};

struct CurveRow {
  std::string label;
  double wall_clock_s = 0;
  double value = 0;
  friend bool operator==(const CurveRow&, const CurveRow&) = default;
};

inline double metric_of(const EpochLog& e, const std::string& metric) {
  if (metric == "ndcg") return e.ndcg;
  if (metric == "mrr") return e.mrr;
  if (metric == "map") return e.map;
  if (metric == "train_loss") return e.train_loss;
  throw InvalidArgument("unknown curve metric '" + metric + "'");
}

inline std::vector<CurveRow> convergence_rows(const std::vector<CurveRun>& runs,
                                              const std::string& metric) {
  if (runs.empty()) throw InvalidArgument("no runs to plot");
  std::vector<CurveRow> rows;
  for (const auto& run : runs) {
    if (run.logs.empty()) {
      throw InvalidArgument("run '" + run.label + "' has no records");
    }
    for (const auto& e : run.logs) {
      rows.push_back({run.label, e.wall_clock_s, metric_of(e, metric)});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.label != b.label ? a.label < b.label
                              : a.wall_clock_s < b.wall_clock_s;
  });
  return rows;
}

inline void emit_convergence_curve(std::ostream& out,
                                   const std::vector<CurveRun>& runs,
                                   const std::string& metric = "ndcg") {
  const auto rows = convergence_rows(runs, metric);
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "run\twall_clock_s\t" << metric << '\n';
  for (const auto& r : rows) {
    out << r.label << '\t' << r.wall_clock_s << '\t' << r.value << '\n';
  }
}

inline std::vector<CurveRow> load_convergence_curve(std::istream& in) {
  std::vector<CurveRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) continue;  // header
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_fields(line, '\t');
    if (f.size() != 3) throw ParseError(lineno, "expected 3 tab-separated fields");
    try {
      rows.push_back({std::string(f[0]), detail::parse_log_number(f[1]),
                      detail::parse_log_number(f[2])});
    } catch (const InvalidArgument& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Early stopping.

class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {
    if (patience < 0) throw InvalidArgument("patience must be >= 0");
  }
  // Records an evaluation; returns true when it is a new best.
  bool update(double value) {
    if (std::isnan(value)) return false;
    if (!has_best_ || value > best_) {
      best_ = value;
      has_best_ = true;
      streak_ = 0;
      return true;
    }
    ++streak_;
    return false;
  }
  bool should_stop() const { return has_best_ && streak_ > 0 && streak_ >= patience_; }
  double best() const { return best_; }
  bool has_best() const { return has_best_; }

 private:
  int patience_;
  int streak_ = 0;
  double best_ = -std::numeric_limits<double>::infinity();
  bool has_best_ = false;
};

// ---------------------------------------------------------------------------
// Training.

struct TrainData {
  InteractionSet train;
  std::optional<InteractionSet> valid;
};

struct TrainOutcome {
  FactorModel final_model;
  FactorModel best_model;
  std::vector<EpochLog> logs;
  int best_epoch = 0;
  double best_value = std::numeric_limits<double>::quiet_NaN();
  bool stopped_early = false;
};

inline bool is_als_loss(const std::string& loss) {
  return loss == "rg2" || loss == "rgx" || loss == "wrmf";
}

// Checks the loss/optimizer pairing and cross-key constraints.
inline void validate_run_config(const RunConfig& cfg) {
  const std::string loss = cfg.get("loss");
  const std::string opt = cfg.get("optimizer");
  if (opt == "sgd" && is_als_loss(loss)) {
    throw InvalidArgument("optimizer sgd needs loss sm, ssm, bpr or bce");
  }
  if (opt != "sgd" && !is_als_loss(loss)) {
    throw InvalidArgument("optimizer " + opt + " needs loss rg2, rgx or wrmf");
  }
  if (opt == "als-full" && loss == "rgx") {
    throw InvalidArgument("als-full supports rg2 and wrmf only");
  }
  if (cfg.get_int("dim") < 1) throw InvalidArgument("dim must be >= 1");
  if (cfg.get_int("cutoff") < 1) throw InvalidArgument("cutoff must be >= 1");
  if (cfg.get_int("epochs") < 0) throw InvalidArgument("epochs must be >= 0");
  if (cfg.get_int("patience") < 0) throw InvalidArgument("patience must be >= 0");
  if (cfg.get_int("seed") < 0) throw InvalidArgument("seed must be >= 0");
}

inline TargetSpec target_spec_from(const RunConfig& cfg) {
  if (cfg.get("loss") == "wrmf") return TargetSpec::wrmf(cfg.get_real("alpha"));
  const std::string t = cfg.get("target");
  if (t == "sampled") {
    return TargetSpec::sampled(static_cast<int>(cfg.get_int("n_negatives")));
  }
  if (t == "hyper") {
    return TargetSpec::hyper(cfg.get_real("alpha"), cfg.get_real("beta"));
  }
  return TargetSpec::full();
}

inline InitSpec init_spec_from(const RunConfig& cfg, bool sgd) {
  InitSpec init;
  const std::string kind = cfg.get("init");
  init.kind = kind == "gaussian" || (kind == "auto" && sgd) ? InitKind::kGaussian
                                                            : InitKind::kUniform;
  const double scale = cfg.get_real("init_scale");
  init.scale = scale > 0 ? scale : (sgd ? 0.1 : 0.01);
  return init;
}

inline AlsConfig als_config_from(const RunConfig& cfg) {
  AlsConfig a;
  a.dim = static_cast<int>(cfg.get_int("dim"));
  a.lambda = cfg.get_real("lambda");
  a.kind = cfg.get("loss") == "rgx" ? LossKind::kRgx : LossKind::kRg2;
  a.interaction_form = cfg.get("interaction_form") == "gram"
                           ? InteractionForm::kGram
                           : InteractionForm::kRankOne;
  const std::string rs = cfg.get("reg_scaling");
  a.reg_scaling = rs == "plain" || (rs == "auto" && cfg.get("loss") == "wrmf")
                      ? RegScaling::kPlain
                      : RegScaling::kWeighted;
  a.max_iters = static_cast<int>(cfg.get_int("epochs"));
  a.tolerance = cfg.get_real("tolerance");
  a.init = init_spec_from(cfg, false);
  a.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  a.pd_floor = cfg.get_real("pd_floor");
  return a;
}

inline SgdConfig sgd_config_from(const RunConfig& cfg) {
  SgdConfig s;
  const std::string loss = cfg.get("loss");
  s.loss = loss == "ssm"   ? SgdLoss::kSsm
           : loss == "bpr" ? SgdLoss::kBpr
           : loss == "bce" ? SgdLoss::kBce
                           : SgdLoss::kSm;
  s.dim = static_cast<int>(cfg.get_int("dim"));
  s.learning_rate = cfg.get_real("learning_rate");
  s.weight_decay = cfg.get_real("weight_decay");
  s.batch_size = static_cast<int>(cfg.get_int("batch_size"));
  s.n_negatives = static_cast<int>(cfg.get_int("n_negatives"));
  s.epochs = static_cast<int>(cfg.get_int("epochs"));
  s.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  s.update_rule =
      cfg.get("update_rule") == "plain" ? UpdateRule::kPlain : UpdateRule::kAdam;
  s.init = init_spec_from(cfg, true);
  return s;
}

inline TrainOutcome run_train(const RunConfig& cfg, const TrainData& data) {
  validate_run_config(cfg);
  if (data.train.empty()) throw EmptyDatasetError("training set is empty");
  if (data.valid && (data.valid->num_contexts() != data.train.num_contexts() ||
                     data.valid->num_objects() != data.train.num_objects())) {
    throw DimensionMismatch("validation and training sets differ in shape");
  }
  using Clock = std::chrono::steady_clock;
  const InteractionMatrix matrix = build_matrix(data.train);
  const int cutoff = static_cast<int>(cfg.get_int("cutoff"));
  const bool use_map = cfg.get("early_stop_metric") == "map";
  EarlyStopper stopper(static_cast<int>(cfg.get_int("patience")));
  TrainOutcome out;

  // Shared per-epoch bookkeeping; returns false to stop training.
  auto on_epoch = [&](const FactorModel& model, int epoch, double loss,
                      double seconds) {
    EpochLog e;
    e.epoch = epoch;
    e.wall_clock_s = seconds;
    e.train_loss = loss;
    bool improved = false;
    if (data.valid) {
      const auto start = Clock::now();
      const RankingResult r = evaluate(model, *data.valid, matrix, cutoff);
      e.eval_s = std::chrono::duration<double>(Clock::now() - start).count();
      e.ndcg = r.ndcg;
      e.mrr = r.mrr;
      e.map = r.map;
      improved = stopper.update(use_map ? e.map : e.ndcg);
    }
    if (improved || !data.valid) {
      out.best_model = model;
      out.best_epoch = epoch;
      out.best_value = data.valid ? stopper.best()
                                  : std::numeric_limits<double>::quiet_NaN();
    }
    out.logs.push_back(e);
    if (stopper.should_stop()) {
      out.stopped_early = true;
      return false;
    }
    return true;
  };

  const std::string opt = cfg.get("optimizer");
  if (opt == "sgd") {
    const SgdConfig s = sgd_config_from(cfg);
    auto res = sgd_fit(matrix, s, [&](const FactorModel& m, const SgdEpoch& ep) {
      return on_epoch(m, ep.epoch, ep.train_loss, ep.seconds);
    });
    out.final_model = std::move(res.model);
  } else {
    const TargetMatrices targets = build_targets(matrix, target_spec_from(cfg));
    const AlsConfig a = als_config_from(cfg);
    if (opt == "als") {
      auto res = als_fit(matrix, targets, a,
                         [&](const FactorModel& m, const AlsIteration& it) {
                           return on_epoch(m, it.iteration,
                                           it.objective_after_object, it.seconds);
                         });
      out.final_model = std::move(res.model);
    } else {
      FullMatrixConfig f;
      f.dim = a.dim;
      f.lambda = a.lambda;
      f.max_iters = a.max_iters;
      f.tolerance = a.tolerance;
      f.init = a.init;
      f.seed = a.seed;
      auto res = als_fit_full_matrix(
          matrix, targets, f,
          [&](const FactorModel& m, int it, double obj, double sec) {
            return on_epoch(m, it, obj, sec);
          });
      out.final_model = std::move(res.model);
    }
  }
  if (out.logs.empty()) out.best_model = out.final_model;

  const std::string log_path = cfg.get("log");
  if (!log_path.empty()) {
    std::ofstream lf(log_path);
    if (!lf) throw Error("cannot write '" + log_path + "'");
    write_epoch_logs(lf, out.logs);
  }
  const std::string ckpt = cfg.get("checkpoint");
  if (!ckpt.empty()) save_model(ckpt, out.best_model, cfg.get_bool("binary_snapshot"));
  return out;
}

inline TrainData load_train_data(const RunConfig& cfg) {
  const std::string train = cfg.get("train");
  if (train.empty()) throw InvalidArgument("config key 'train' is required");
  TrainData data{read_set_file(train), std::nullopt};
  const std::string valid = cfg.get("valid");
  if (!valid.empty()) data.valid = read_set_file(valid);
  return data;
}

inline TrainOutcome run_train(const RunConfig& cfg) {
  return run_train(cfg, load_train_data(cfg));
}

// ---------------------------------------------------------------------------
// Evaluation of a persisted snapshot.

inline RankingResult run_eval(const FactorModel& model,
                              const InteractionSet& heldout,
                              const InteractionSet& train, int cutoff) {
  const InteractionMatrix matrix = build_matrix(train);
  return evaluate(model, heldout, matrix, cutoff);
}

inline RankingResult run_eval(const std::string& snapshot_path,
                              const InteractionSet& heldout,
                              const InteractionSet& train, int cutoff) {
  return run_eval(load_model(snapshot_path), heldout, train, cutoff);
}

// ---------------------------------------------------------------------------
// Data preparation: ingest, k-core, per-context split.

struct PrepOutcome {
  InteractionSet filtered;
  SplitBundle split;
};

inline DelimitedFormat format_from(const RunConfig& cfg) {
  DelimitedFormat f;
  const std::string d = cfg.get("delimiter");
  f.delimiter = d == "tab" ? '\t' : d == "comma" ? ',' : d == "space" ? ' ' : '\0';
  f.context_column = static_cast<int>(cfg.get_int("context_column"));
  f.object_column = static_cast<int>(cfg.get_int("object_column"));
  f.rating_column = static_cast<int>(cfg.get_int("rating_column"));
  f.timestamp_column = static_cast<int>(cfg.get_int("timestamp_column"));
  f.header = cfg.get_bool("header");
  const std::string thr = cfg.get("rating_threshold");
  if (!thr.empty()) {
    double v = 0;
    if (!detail::parse_double(thr, v)) {
      throw InvalidArgument("rating_threshold must be a number");
    }
    f.rating_threshold = v;
  }
  return f;
}

inline PrepOutcome run_prep(const RunConfig& cfg, const InteractionSet& raw) {
  PrepOutcome out;
  out.filtered = kcore_filter(raw, static_cast<int>(cfg.get_int("kcore")));
  if (out.filtered.empty()) {
    throw EmptyDatasetError("nothing left after k-core filtering");
  }
  SplitRatios ratios{cfg.get_real("split_train"), cfg.get_real("split_valid"),
                     cfg.get_real("split_test")};
  out.split = split_per_user(out.filtered, ratios,
                             static_cast<std::uint64_t>(cfg.get_int("seed")),
                             cfg.get("short_contexts") == "error"
                                 ? ShortContextPolicy::kError
                                 : ShortContextPolicy::kTrainOnly);
  return out;
}

// Writes train/valid/test snapshots and the id map into out_dir.
inline PrepOutcome run_prep(const RunConfig& cfg) {
  const std::string raw = cfg.get("raw");
  if (raw.empty()) throw InvalidArgument("config key 'raw' is required");
  PrepOutcome out = run_prep(cfg, load_interactions_file(raw, format_from(cfg)));
  const std::string dir = cfg.get("out_dir");
  auto write = [&](const std::string& name, auto&& fn) {
    const std::string path = dir + "/" + name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path + "'");
    fn(f);
  };
  write("train.txt", [&](std::ostream& o) { write_set(o, out.split.train); });
  write("valid.txt", [&](std::ostream& o) { write_set(o, out.split.valid); });
  write("test.txt", [&](std::ostream& o) { write_set(o, out.split.test); });
  write("idmap.tsv", [&](std::ostream& o) { write_id_map(o, out.filtered); });
  return out;
}

// ---------------------------------------------------------------------------
// Grid search.

struct GridPoint {
  std::string param;
  double value = 0;
  double best_metric = std::numeric_limits<double>::quiet_NaN();
  int best_epoch = 0;
  int epochs_run = 0;
  std::string error;  // non-empty when the run failed (e.g. not PD)
};

inline std::string grid_param_for(const RunConfig& cfg) {
  const std::string p = cfg.get("grid_param");
  if (p != "auto") return p;
  return cfg.get("optimizer") == "sgd" ? "learning_rate" : "lambda";
}

inline std::vector<double> grid_values_for(const RunConfig& cfg,
                                           const std::string& param) {
  const std::string text = cfg.get("grid");
  std::vector<double> values;
  if (!text.empty()) {
    for (auto f : detail::split_fields(text, ',')) {
      double v = 0;
      if (!detail::parse_double(f, v)) {
        throw InvalidArgument("bad grid value '" + std::string(f) + "'");
      }
      values.push_back(v);
    }
    return values;
  }
  if (param == "learning_rate") return {0.1, 0.01, 0.001};
  return {0, 1, 0.5, 0.1, 0.05, 0.01, 0.005, 0.001};
}

inline std::vector<GridPoint> run_grid(const RunConfig& cfg,
                                       const TrainData& data) {
  if (!data.valid) throw InvalidArgument("grid search needs a validation set");
  const std::string param = grid_param_for(cfg);
  std::vector<GridPoint> points;
  for (double v : grid_values_for(cfg, param)) {
    RunConfig run = cfg;
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    run.set(param, os.str());
    run.set("log", "");
    run.set("checkpoint", "");
    GridPoint gp;
    gp.param = param;
    gp.value = v;
    try {
      const TrainOutcome t = run_train(run, data);
      gp.best_metric = t.best_value;
      gp.best_epoch = t.best_epoch;
      gp.epochs_run = static_cast<int>(t.logs.size());
    } catch (const Error& e) {
      gp.error = e.what();
    }
    points.push_back(gp);
  }
  return points;
}

}  // namespace rgrank
