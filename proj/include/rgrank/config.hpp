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

// Flat key=value run configuration. Only explicitly set keys are stored, so
// serialize(parse(text)) reproduces the text up to comments and ordering;
// typed getters fall back to the schema defaults.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rgrank/errors.hpp"
#include "rgrank/interaction_set.hpp"

namespace rgrank {

enum class KeyType { kString, kInt, kReal, kBool, kChoice };

struct ConfigKey {
  std::string name;
  KeyType type;
  std::string default_value;
  std::string help;
  std::vector<std::string> choices = {};
};

inline const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> keys = {
      // Data.
      {"raw", KeyType::kString, "", "raw delimited interaction file (prep)"},
      {"out_dir", KeyType::kString, ".", "output directory of prep"},
      {"train", KeyType::kString, "", "training set snapshot"},
      {"valid", KeyType::kString, "", "validation set snapshot"},
      {"test", KeyType::kString, "", "test set snapshot"},
      {"delimiter", KeyType::kChoice, "auto", "field delimiter of raw input",
       {"auto", "tab", "comma", "space"}},
      {"context_column", KeyType::kInt, "0", "column of the context id"},
      {"object_column", KeyType::kInt, "1", "column of the object id"},
      {"rating_column", KeyType::kInt, "-1", "rating column, -1 if absent"},
      {"timestamp_column", KeyType::kInt, "-1",
       "timestamp column, -1 if absent"},
      {"header", KeyType::kBool, "false", "skip the first line of raw input"},
      {"rating_threshold", KeyType::kString, "",
       "drop rows rated below this value"},
      {"kcore", KeyType::kInt, "5", "k-core threshold (1 disables)"},
      {"split_train", KeyType::kReal, "0.8", "per-context train ratio"},
      {"split_valid", KeyType::kReal, "0.1", "per-context validation ratio"},
      {"split_test", KeyType::kReal, "0.1", "per-context test ratio"},
      {"short_contexts", KeyType::kChoice, "train",
       "contexts with fewer than 3 interactions", {"train", "error"}},
      // Model and optimizer.
      {"loss", KeyType::kChoice, "rg2", "training loss",
       {"rg2", "rgx", "wrmf", "sm", "ssm", "bpr", "bce"}},
      {"optimizer", KeyType::kChoice, "als", "optimizer",
       {"als", "als-full", "sgd"}},
      {"target", KeyType::kChoice, "full", "RG target/weight variant",
       {"full", "sampled", "hyper"}},
      {"interaction_form", KeyType::kChoice, "rank-one",
       "RG-x interaction quadratic", {"rank-one", "gram"}},
      {"reg_scaling", KeyType::kChoice, "auto",
       "ALS regularizer: weighted (lambda sum W), plain, or auto",
       {"auto", "weighted", "plain"}},
      {"dim", KeyType::kInt, "32", "embedding dimension K"},
      {"lambda", KeyType::kReal, "0.01", "regularization strength"},
      {"alpha", KeyType::kReal, "1", "negative weight (hyper) / WRMF alpha"},
      {"beta", KeyType::kReal, "0", "interaction coefficient (hyper)"},
      {"n_negatives", KeyType::kInt, "10", "sampled negatives per positive"},
      {"learning_rate", KeyType::kReal, "0.01", "SGD learning rate"},
      {"weight_decay", KeyType::kReal, "0", "SGD l2 shrinkage"},
      {"batch_size", KeyType::kInt, "256", "SGD batch size"},
      {"update_rule", KeyType::kChoice, "adam", "SGD update rule",
       {"adam", "plain"}},
      {"init", KeyType::kChoice, "auto", "factor initialization",
       {"auto", "uniform", "gaussian"}},
      {"init_scale", KeyType::kReal, "0",
       "init half-width or sigma (0: 0.01 for ALS, 0.1 for SGD)"},
      {"epochs", KeyType::kInt, "20", "epochs / ALS iterations"},
      {"tolerance", KeyType::kReal, "1e-4", "ALS relative decrease to stop"},
      {"pd_floor", KeyType::kReal, "1e-10", "ALS positive-definiteness floor"},
      // Evaluation and bookkeeping.
      {"cutoff", KeyType::kInt, "10", "metric cutoff K"},
      {"early_stop_metric", KeyType::kChoice, "ndcg", "early stop indicator",
       {"ndcg", "map"}},
      {"patience", KeyType::kInt, "5", "evaluations without improvement"},
      {"seed", KeyType::kInt, "0", "random seed"},
      {"log", KeyType::kString, "", "epoch log output path"},
      {"checkpoint", KeyType::kString, "", "best snapshot output path"},
      {"binary_snapshot", KeyType::kBool, "false", "write binary snapshots"},
      {"label", KeyType::kString, "", "run label for curves"},
      {"snapshot", KeyType::kString, "", "factor snapshot to evaluate"},
      {"grid_param", KeyType::kChoice, "auto", "grid-searched key",
       {"auto", "lambda", "alpha", "beta", "learning_rate"}},
      {"grid", KeyType::kString, "", "comma-separated grid values"},
  };
  return keys;
}

inline const ConfigKey* find_config_key(std::string_view name) {
  for (const auto& k : config_schema()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

namespace detail {

inline bool parse_bool(std::string_view s, bool& out) {
  if (s == "true" || s == "1" || s == "yes") {
    out = true;
    return true;
  }
  if (s == "false" || s == "0" || s == "no") {
    out = false;
    return true;
  }
  return false;
}

inline void check_value(const ConfigKey& key, const std::string& value) {
  bool ok = true;
  switch (key.type) {
    case KeyType::kString:
      break;
    case KeyType::kInt: {
      long long v = 0;
      ok = parse_int(value, v);
      break;
    }
    case KeyType::kReal: {
      double v = 0;
      ok = parse_double(value, v) && std::isfinite(v);
      break;
    }
    case KeyType::kBool: {
      bool v = false;
      ok = parse_bool(value, v);
      break;
    }
    case KeyType::kChoice:
      ok = std::find(key.choices.begin(), key.choices.end(), value) !=
           key.choices.end();
      break;
  }
  if (!ok) {
    throw InvalidArgument("invalid value '" + value + "' for key '" +
                          key.name + "'");
  }
}

}  // namespace detail

class RunConfig {
 public:
  void set(const std::string& key, const std::string& value) {
    const ConfigKey* k = find_config_key(key);
    if (!k) throw InvalidArgument("unknown config key '" + key + "'");
    detail::check_value(*k, value);
    values_[key] = value;
  }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get(const std::string& key) const {
    const ConfigKey* k = find_config_key(key);
    if (!k) throw InvalidArgument("unknown config key '" + key + "'");
    auto it = values_.find(key);
    return it == values_.end() ? k->default_value : it->second;
  }
  long long get_int(const std::string& key) const {
    long long v = 0;
    detail::parse_int(get(key), v);
    return v;
  }
  double get_real(const std::string& key) const {
    double v = 0;
    detail::parse_double(get(key), v);
    return v;
  }
  bool get_bool(const std::string& key) const {
    bool v = false;
    detail::parse_bool(get(key), v);
    return v;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

 private:
  std::map<std::string, std::string> values_;
};

// Lines "key = value"; '#' starts a comment; blank lines are ignored.
inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string_view body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(lineno, "expected 'key = value'");
    }
    const std::string key(detail::trim(body.substr(0, eq)));
    const std::string value(detail::trim(body.substr(eq + 1)));
    try {
      cfg.set(key, value);
    } catch (const InvalidArgument& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return cfg;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

// Explicitly set keys, sorted, one "key = value" per line.
inline std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : cfg.values()) out += k + " = " + v + "\n";
  return out;
}

// Overlays every key set in `overrides` onto `base`.
inline RunConfig merge_config(RunConfig base, const RunConfig& overrides) {
  for (const auto& [k, v] : overrides.values()) base.set(k, v);
  return base;
}

}  // namespace rgrank
