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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rgrank {

// Base class for every error raised by the library. The CLI maps it to exit
// status 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidScoreError : public Error {
 public:
  using Error::Error;
};

class InvalidProposalError : public Error {
 public:
  using Error::Error;
};

class ZeroDegreeError : public Error {
 public:
  explicit ZeroDegreeError(std::size_t context)
      : Error("context " + std::to_string(context) +
              " has no positive interactions (division by zero degree)"),
        context_(context) {}
  std::size_t context() const { return context_; }

 private:
  std::size_t context_;
};

// A row system of the ALS update is not positive definite.
class NotPositiveDefiniteError : public Error {
 public:
  NotPositiveDefiniteError(const std::string& side, std::size_t row,
                           double min_eigenvalue)
      : Error(side + " row " + std::to_string(row) +
              ": system not positive definite (smallest eigenvalue " +
              std::to_string(min_eigenvalue) +
              "); use a smaller V/beta or a larger lambda"),
        row_(row),
        min_eigenvalue_(min_eigenvalue) {}
  std::size_t row() const { return row_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  std::size_t row_;
  double min_eigenvalue_;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class DivergedError : public Error {
 public:
  using Error::Error;
};

class EmptyCandidateError : public Error {
 public:
  using Error::Error;
};

}  // namespace rgrank
