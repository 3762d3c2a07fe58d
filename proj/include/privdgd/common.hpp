// Copyright 2026 The privdgd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PRIVDGD_COMMON_HPP_
#define PRIVDGD_COMMON_HPP_

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace privdgd {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Base of every error raised by the library. Callers that only care about
// "something was wrong with the input" can catch this one.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InputError : public Error {
 public:
  using Error::Error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

// A standing assumption (eta < 1, doubly stochastic W, ...) does not hold.
class AssumptionError : public Error {
 public:
  using Error::Error;
};

class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long round)
      : Error(what), round_(round) {}
  long round() const { return round_; }

 private:
  long round_;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Carries the dotted key path of the offending config entry.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key_path, const std::string& what)
      : Error(key_path + ": " + what), key_path_(key_path) {}
  const std::string& key_path() const { return key_path_; }

 private:
  std::string key_path_;
};

inline bool AllFinite(const Mat& a) { return a.allFinite(); }

// Scaled slack used by every inequality monitor: (rhs - lhs) / (1 + |rhs|).
inline double ScaledSlack(double rhs, double lhs) {
  return (rhs - lhs) / (1.0 + std::abs(rhs));
}

}  // namespace privdgd

#endif  // PRIVDGD_COMMON_HPP_
