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

// Per-agent objectives f_i(theta) = |z_i - M_i theta|^2 + sigma_i |theta|^2.
// Rendezvous is the special case M_i = I, z_i = x_{i,0}, sigma_i = 0, so one
// representation covers both kinds. F is the agent average of the f_i.

#ifndef PRIVDGD_OBJECTIVES_HPP_
#define PRIVDGD_OBJECTIVES_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "privdgd/common.hpp"
#include "privdgd/random.hpp"

namespace privdgd {

enum class ProblemKind { kQuadraticSensing, kRendezvous };

inline std::string KindName(ProblemKind k) {
  return k == ProblemKind::kRendezvous ? "rendezvous" : "quadratic-sensing";
}

struct Problem {
  ProblemKind kind = ProblemKind::kQuadraticSensing;
  int m = 0;
  int d = 0;
  int s = 0;
  std::vector<Mat> M;
  std::vector<Vec> z;
  std::vector<double> sigma;
  Vec theta_true;  // empty unless generated
  double noise = 0.0;
  uint64_t seed = 0;

  void CheckAgent(int i) const {
    if (i < 0 || i >= m) {
      throw InputError("agent index " + std::to_string(i + 1) +
                       " out of range");
    }
  }

  double Value(int i, const Vec& theta) const {
    CheckAgent(i);
    return (z[i] - M[i] * theta).squaredNorm() + sigma[i] * theta.squaredNorm();
  }

  Vec Gradient(int i, const Vec& theta) const {
    CheckAgent(i);
    if (theta.size() != d) throw InputError("theta has wrong dimension");
    if (!theta.allFinite()) throw InputError("theta is not finite");
    return 2.0 * (M[i].transpose() * (M[i] * theta - z[i])) +
           2.0 * sigma[i] * theta;
  }

  // Row i is grad f_i(x_i).
  Mat Gradients(const Mat& x) const {
    Mat g(m, d);
    for (int i = 0; i < m; ++i) g.row(i) = Gradient(i, x.row(i).transpose());
    return g;
  }

  double GlobalValue(const Vec& theta) const {
    double total = 0.0;
    for (int i = 0; i < m; ++i) total += Value(i, theta);
    return total / m;
  }

  Vec GlobalGradient(const Vec& theta) const {
    Vec g = Vec::Zero(d);
    for (int i = 0; i < m; ++i) g += Gradient(i, theta);
    return g / m;
  }

  double AgentLipschitz(int i) const {
    Mat h = M[i].transpose() * M[i];
    Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
    return 2.0 * (es.eigenvalues().maxCoeff() + sigma[i]);
  }

  double LipschitzBound() const {
    if (kind == ProblemKind::kRendezvous) return 2.0;
    double l = 0.0;
    for (int i = 0; i < m; ++i) l = std::max(l, AgentLipschitz(i));
    return l;
  }
};

inline Problem MakeQuadraticSensing(std::vector<Mat> measurements,
                                    std::vector<Vec> observations,
                                    std::vector<double> sigma) {
  Problem p;
  p.m = static_cast<int>(measurements.size());
  if (p.m < 1) throw InputError("need at least one agent");
  p.s = static_cast<int>(measurements[0].rows());
  p.d = static_cast<int>(measurements[0].cols());
  if (observations.size() != measurements.size() ||
      sigma.size() != measurements.size()) {
    throw InputError("per-agent parameter counts disagree");
  }
  for (int i = 0; i < p.m; ++i) {
    if (measurements[i].rows() != p.s || measurements[i].cols() != p.d ||
        observations[i].size() != p.s) {
      throw InputError("agent " + std::to_string(i + 1) +
                       " has inconsistent dimensions");
    }
    if (sigma[i] < 0.0) throw InputError("sigma must be nonnegative");
  }
  p.M = std::move(measurements);
  p.z = std::move(observations);
  p.sigma = std::move(sigma);
  return p;
}

inline Problem MakeRendezvous(const std::vector<Vec>& anchors) {
  if (anchors.empty()) throw InputError("need at least one agent");
  const int d = static_cast<int>(anchors[0].size());
  std::vector<Mat> ms(anchors.size(), Mat::Identity(d, d));
  Problem p = MakeQuadraticSensing(ms, anchors,
                                   std::vector<double>(anchors.size(), 0.0));
  p.kind = ProblemKind::kRendezvous;
  return p;
}

// theta_true ~ N(0, I), M_i entries ~ N(0, 1), z_i = M_i theta_true + w_i.
inline Problem GenerateSensingInstance(int m, int s, int d, double noise,
                                       uint64_t seed, double sigma = 0.0) {
  if (m < 1 || s < 1 || d < 1) throw InputError("m, s, d must be positive");
  Stream ts(DeriveSeed(seed, "theta-true"));
  Vec theta(d);
  for (int c = 0; c < d; ++c) theta(c) = ts.Normal();
  std::vector<Mat> ms;
  std::vector<Vec> zs;
  for (int i = 0; i < m; ++i) {
    Stream ms_stream(DeriveSeed(seed, "measurement", i));
    Mat mi(s, d);
    for (int r = 0; r < s; ++r)
      for (int c = 0; c < d; ++c) mi(r, c) = ms_stream.Normal();
    Stream ns(DeriveSeed(seed, "noise", i));
    Vec w(s);
    for (int r = 0; r < s; ++r) w(r) = noise * ns.Normal();
    zs.push_back(mi * theta + w);
    ms.push_back(std::move(mi));
  }
  Problem p = MakeQuadraticSensing(ms, zs, std::vector<double>(m, sigma));
  p.theta_true = theta;
  p.noise = noise;
  p.seed = seed;
  return p;
}

struct Optimum {
  Vec theta_star;
  double f_star = 0.0;
  std::vector<Vec> residual_gradients;  // grad f_i(theta*)

  double ResidualSquaredSum() const {
    double s = 0.0;
    for (const Vec& g : residual_gradients) s += g.squaredNorm();
    return s;
  }
};

inline Optimum ComputeOptimum(const Problem& p) {
  Mat h = Mat::Zero(p.d, p.d);
  Vec b = Vec::Zero(p.d);
  for (int i = 0; i < p.m; ++i) {
    h += p.M[i].transpose() * p.M[i] + p.sigma[i] * Mat::Identity(p.d, p.d);
    b += p.M[i].transpose() * p.z[i];
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 1e-12 * std::max(hi, 1.0))) {
    const double cond = lo > 0.0 ? hi / lo : INFINITY;
    throw RankDeficiencyError(
        "normal matrix is singular (condition estimate " +
            std::to_string(cond) + ")",
        cond);
  }
  Eigen::LDLT<Mat> ldlt(h);
  Optimum o;
  o.theta_star = ldlt.solve(b);
  o.theta_star += ldlt.solve(b - h * o.theta_star);  // one refinement step
  o.f_star = p.GlobalValue(o.theta_star);
  for (int i = 0; i < p.m; ++i)
    o.residual_gradients.push_back(p.Gradient(i, o.theta_star));
  return o;
}

inline nlohmann::json MatToJson(const Mat& a) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < a.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline nlohmann::json VecToJson(const Vec& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Mat MatFromJson(const nlohmann::json& j) {
  const int r = static_cast<int>(j.size());
  const int c = r ? static_cast<int>(j[0].size()) : 0;
  Mat a(r, c);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(j[i].size()) != c) throw InputError("ragged matrix");
    for (int k = 0; k < c; ++k) a(i, k) = j[i][k].get<double>();
  }
  return a;
}

inline Vec VecFromJson(const nlohmann::json& j) {
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

// Row-major matrices; doubles round-trip exactly through nlohmann's printer.
inline nlohmann::json ProblemToJson(const Problem& p) {
  nlohmann::json j;
  j["kind"] = KindName(p.kind);
  j["m"] = p.m;
  j["s"] = p.s;
  j["d"] = p.d;
  j["seed"] = p.seed;
  j["noise"] = p.noise;
  j["sigma"] = p.sigma;
  j["M"] = nlohmann::json::array();
  j["z"] = nlohmann::json::array();
  for (int i = 0; i < p.m; ++i) {
    j["M"].push_back(MatToJson(p.M[i]));
    j["z"].push_back(VecToJson(p.z[i]));
  }
  if (p.theta_true.size()) j["theta_true"] = VecToJson(p.theta_true);
  return j;
}

inline Problem ProblemFromJson(const nlohmann::json& j) {
  try {
    std::vector<Mat> ms;
    std::vector<Vec> zs;
    for (const auto& x : j.at("M")) ms.push_back(MatFromJson(x));
    for (const auto& x : j.at("z")) zs.push_back(VecFromJson(x));
    Problem p = MakeQuadraticSensing(
        ms, zs, j.at("sigma").get<std::vector<double>>());
    if (j.value("kind", "quadratic-sensing") == "rendezvous")
      p.kind = ProblemKind::kRendezvous;
    p.seed = j.value("seed", uint64_t{0});
    p.noise = j.value("noise", 0.0);
    if (j.contains("theta_true")) p.theta_true = VecFromJson(j["theta_true"]);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("problem document: ") + e.what());
  }
}

}  // namespace privdgd

#endif  // PRIVDGD_OBJECTIVES_HPP_
