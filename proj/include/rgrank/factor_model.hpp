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

#pragma once

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "rgrank/errors.hpp"
#include "rgrank/interaction_matrix.hpp"

namespace rgrank {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Latent factors: scores are O = P * Q^T.
struct FactorModel {
  RowMatrix P;  // M x K
  RowMatrix Q;  // N x K

  Eigen::Index num_contexts() const { return P.rows(); }
  Eigen::Index num_objects() const { return Q.rows(); }
  Eigen::Index dim() const { return P.cols(); }

  double score(Eigen::Index x, Eigen::Index y) const {
    return P.row(x).dot(Q.row(y));
  }
  // Score row o^{(x)} over all objects.
  Vector scores(Eigen::Index x) const { return Q * P.row(x).transpose(); }

  bool finite() const { return P.allFinite() && Q.allFinite(); }

  friend bool operator==(const FactorModel& a, const FactorModel& b) {
    return a.P.rows() == b.P.rows() && a.P.cols() == b.P.cols() &&
           a.Q.rows() == b.Q.rows() && a.Q.cols() == b.Q.cols() &&
           a.P == b.P && a.Q == b.Q;
  }
};

enum class InitKind { kUniform, kGaussian };

struct InitSpec {
  InitKind kind = InitKind::kUniform;
  double scale = 0.01;  // half-width for uniform, sigma for gaussian
};

inline FactorModel init_model(Eigen::Index m, Eigen::Index n, Eigen::Index k,
                              const InitSpec& init, std::uint64_t seed) {
  if (k < 1) throw InvalidArgument("embedding dimension K must be >= 1");
  std::mt19937_64 rng(seed);
  FactorModel model{RowMatrix(m, k), RowMatrix(n, k)};
  auto fill = [&](RowMatrix& mat) {
    if (init.kind == InitKind::kUniform) {
      std::uniform_real_distribution<double> dist(-init.scale, init.scale);
      for (Eigen::Index i = 0; i < mat.size(); ++i) mat.data()[i] = dist(rng);
    } else {
      std::normal_distribution<double> dist(0.0, init.scale);
      for (Eigen::Index i = 0; i < mat.size(); ++i) mat.data()[i] = dist(rng);
    }
  };
  fill(model.P);
  fill(model.Q);
  return model;
}

inline void check_dimensions(const FactorModel& model,
                             const InteractionMatrix& matrix) {
  if (model.P.rows() != matrix.num_contexts() ||
      model.Q.rows() != matrix.num_objects() ||
      model.P.cols() != model.Q.cols()) {
    throw DimensionMismatch(
        "model is " + std::to_string(model.P.rows()) + "x" +
        std::to_string(model.Q.rows()) + " (K=" +
        std::to_string(model.P.cols()) + ") but data is " +
        std::to_string(matrix.num_contexts()) + "x" +
        std::to_string(matrix.num_objects()));
  }
}

// ---------------------------------------------------------------------------
// Factor snapshots. Text: header "M N K", then M rows of P and N rows of Q,
// values printed with round-trip precision. Binary: magic "RGFM", then
// little-endian u64 M, N, K and IEEE-754 doubles for P then Q (row-major).

inline void write_model_text(std::ostream& out, const FactorModel& model) {
  out << model.P.rows() << ' ' << model.Q.rows() << ' ' << model.P.cols()
      << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  auto rows = [&](const RowMatrix& mat) {
    for (Eigen::Index i = 0; i < mat.rows(); ++i) {
      for (Eigen::Index j = 0; j < mat.cols(); ++j) {
        if (j) out << ' ';
        out << mat(i, j);
      }
      out << '\n';
    }
  };
  rows(model.P);
  rows(model.Q);
}

inline void write_model_binary(std::ostream& out, const FactorModel& model) {
  static_assert(std::endian::native == std::endian::little,
                "binary snapshots assume a little-endian host");
  out.write("RGFM", 4);
  detail::put_u64(out, static_cast<std::uint64_t>(model.P.rows()));
  detail::put_u64(out, static_cast<std::uint64_t>(model.Q.rows()));
  detail::put_u64(out, static_cast<std::uint64_t>(model.P.cols()));
  out.write(reinterpret_cast<const char*>(model.P.data()),
            static_cast<std::streamsize>(model.P.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(model.Q.data()),
            static_cast<std::streamsize>(model.Q.size() * sizeof(double)));
}

inline FactorModel read_model(std::istream& in) {
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::memcmp(magic, "RGFM", 4) == 0) {
    const auto m = static_cast<Eigen::Index>(detail::get_u64(in));
    const auto n = static_cast<Eigen::Index>(detail::get_u64(in));
    const auto k = static_cast<Eigen::Index>(detail::get_u64(in));
    FactorModel model{RowMatrix(m, k), RowMatrix(n, k)};
    in.read(reinterpret_cast<char*>(model.P.data()),
            static_cast<std::streamsize>(model.P.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(model.Q.data()),
            static_cast<std::streamsize>(model.Q.size() * sizeof(double)));
    if (!in) throw Error("truncated binary factor snapshot");
    return model;
  }
  in.clear();
  std::string text(magic, static_cast<std::size_t>(in.gcount()));
  text.append(std::istreambuf_iterator<char>(in),
              std::istreambuf_iterator<char>());
  std::istringstream body(text);
  long long m = -1, n = -1, k = -1;
  if (!(body >> m >> n >> k) || m < 0 || n < 0 || k < 1) {
    throw ParseError(1, "factor snapshot header must be 'M N K'");
  }
  FactorModel model{RowMatrix(m, k), RowMatrix(n, k)};
  auto rows = [&](RowMatrix& mat) {
    for (Eigen::Index i = 0; i < mat.size(); ++i) {
      if (!(body >> mat.data()[i])) {
        throw Error("factor snapshot ended early");
      }
    }
  };
  rows(model.P);
  rows(model.Q);
  if (!model.finite()) throw Error("factor snapshot holds non-finite values");
  return model;
}

inline void save_model(const std::string& path, const FactorModel& model,
                       bool binary = false) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  binary ? write_model_binary(out, model) : write_model_text(out, model);
  if (!out) throw Error("write failed for '" + path + "'");
}

inline FactorModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_model(in);
}

}  // namespace rgrank
