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

// Trajectory metrics and the Lyapunov-inequality monitors. Every monitored
// inequality is evaluated with the ledger stepsizes on consecutive snapshots
// and reported as a scaled slack (rhs - lhs) / (1 + |rhs|).

#ifndef PRIVDGD_ANALYSIS_HPP_
#define PRIVDGD_ANALYSIS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "privdgd/common.hpp"
#include "privdgd/engine.hpp"
#include "privdgd/objectives.hpp"

namespace privdgd {

inline constexpr double kSlackTolerance = -1e-9;

struct MetricsRow {
  long k = 0;
  double mean_error = 0.0;  // |xbar - theta*|
  double consensus = 0.0;   // sum_i |x_i - xbar|^2
  double f_gap = 0.0;       // F(xbar) - F(theta*)
  double ybar_norm = std::numeric_limits<double>::quiet_NaN();
  double lambda_bar = 0.0;
  double lambda_max = 0.0;
};

inline Vec RowMean(const Mat& a) { return a.colwise().mean().transpose(); }

inline double Spread(const Mat& a) {
  return (a.rowwise() - a.colwise().mean()).squaredNorm();
}

// Mean of lambda_i^k g_i^k, i.e. the tracker average of PDG-NDS.
inline Vec WeightedGradientMean(const Trace& tr, long k) {
  return RowMean(tr.ledger.lambda[k].asDiagonal() * tr.ledger.gradients[k]);
}

inline std::vector<MetricsRow> ComputeMetrics(const Trace& tr,
                                              const Optimum& opt) {
  std::vector<MetricsRow> rows;
  rows.reserve(tr.states.size());
  for (const NetworkState& s : tr.states) {
    MetricsRow r;
    r.k = s.k;
    const Vec xbar = RowMean(s.x);
    r.mean_error = (xbar - opt.theta_star).norm();
    r.consensus = Spread(s.x);
    r.f_gap = tr.problem.GlobalValue(xbar) - opt.f_star;
    const Vec& lam = tr.ledger.lambda[s.k];
    r.lambda_bar = lam.mean();
    r.lambda_max = lam.maxCoeff();
    if (tr.algorithm == Algorithm::kPdgNds) {
      r.ybar_norm = WeightedGradientMean(tr, s.k).norm();
    } else if (s.y.size()) {
      r.ybar_norm = RowMean(s.y).norm();
    }
    rows.push_back(r);
  }
  return rows;
}

struct ConvergenceSummary {
  bool reached = false;
  long k = -1;
  double final_mean_error = 0.0;
  double final_consensus = 0.0;
};

inline ConvergenceSummary DetectConvergence(const std::vector<MetricsRow>& rows,
                                            double tol_mean, double tol_cons) {
  ConvergenceSummary s;
  if (rows.empty()) return s;
  s.final_mean_error = rows.back().mean_error;
  s.final_consensus = rows.back().consensus;
  for (const MetricsRow& r : rows) {
    if (r.mean_error <= tol_mean && r.consensus <= tol_cons) {
      s.reached = true;
      s.k = r.k;
      break;
    }
  }
  return s;
}

// ---- diminishing-stepsize monitor -------------------------------------

struct DsEntries {
  double a11, a12, a21, a22;
  double a() const { return std::max({a11, a12, a21, a22}); }
};

inline DsEntries DsMatrixEntries(const Vec& lam, double L, double eta, int d) {
  const double m = static_cast<double>(lam.size());
  const double n2 = lam.squaredNorm();
  const double dev = (lam.array() - lam.mean()).matrix().norm();
  DsEntries e;
  e.a11 = (L * L * n2 + 2.0 * L * m * std::sqrt(m * d) * dev) / m +
          4.0 * m * d * n2 * L * L;
  e.a12 = 4.0 * d * n2 * L * L;
  e.a21 = 2.0 * std::pow(m, 5) * L * L / (1.0 - eta) * n2;
  e.a22 = 2.0 * std::pow(m, 4) * L * L / (1.0 - eta) * n2;
  return e;
}

struct DsRow {
  long k = 0;
  double v1 = 0.0, v2 = 0.0;            // |xbar - theta*|^2, consensus
  double v1_next = 0.0, v2_next = 0.0;
  DsEntries entries{};
  double rhs1 = 0.0, rhs2 = 0.0;
  double slack1 = 0.0, slack2 = 0.0;    // scaled
  // Consensus row re-derived without assuming grad f_i(theta*) = 0 for each
  // agent: adds the residual-gradient energy S.
  double rhs2_residual = 0.0, slack2_residual = 0.0;
};

struct LyapunovReportDS {
  std::vector<DsRow> rows;
  double min_slack_mean_row = INFINITY;
  double min_slack_consensus_row = INFINITY;
  double min_slack_residual_row = INFINITY;
  long worst_k = -1;
  double min_slack() const {
    return std::min(min_slack_mean_row, min_slack_consensus_row);
  }
  bool holds() const { return min_slack() >= kSlackTolerance; }
};

inline LyapunovReportDS VerifyLyapunovDs(const Trace& tr, const Optimum& opt,
                                         double L, double eta) {
  if (tr.algorithm != Algorithm::kPdgDs)
    throw UnsupportedError("diminishing monitor needs a pdg-ds trace");
  const Problem& p = tr.problem;
  const double m = p.m;
  const double s_res = opt.ResidualSquaredSum();
  LyapunovReportDS rep;
  double worst = INFINITY;
  for (long k = 0; k + 1 < static_cast<long>(tr.states.size()); ++k) {
    const Mat& x = tr.states[k].x;
    const Mat& xn = tr.states[k + 1].x;
    const Vec& lam = tr.ledger.lambda[k];
    DsRow r;
    r.k = k;
    const Vec xbar = RowMean(x);
    r.v1 = (xbar - opt.theta_star).squaredNorm();
    r.v2 = Spread(x);
    r.v1_next = (RowMean(xn) - opt.theta_star).squaredNorm();
    r.v2_next = Spread(xn);
    r.entries = DsMatrixEntries(lam, L, eta, p.d);
    const DsEntries& e = r.entries;
    const double gap = p.GlobalValue(xbar) - opt.f_star;
    r.rhs1 = (1.0 + e.a11) * r.v1 + (1.0 / m + e.a12) * r.v2 -
             2.0 * lam.mean() * gap;
    r.rhs2 = e.a21 * r.v1 + (eta + e.a22) * r.v2;
    r.slack1 = ScaledSlack(r.rhs1, r.v1_next);
    r.slack2 = ScaledSlack(r.rhs2, r.v2_next);
    const double n2 = lam.squaredNorm();
    r.rhs2_residual = (eta + 4.0 * m * m * L * L * n2 / (1.0 - eta)) * r.v2 +
                      4.0 * m * m * m * L * L * n2 / (1.0 - eta) * r.v1 +
                      2.0 * m * m * n2 * s_res / (1.0 - eta);
    r.slack2_residual = ScaledSlack(r.rhs2_residual, r.v2_next);
    rep.min_slack_mean_row = std::min(rep.min_slack_mean_row, r.slack1);
    rep.min_slack_consensus_row = std::min(rep.min_slack_consensus_row, r.slack2);
    rep.min_slack_residual_row =
        std::min(rep.min_slack_residual_row, r.slack2_residual);
    if (std::min(r.slack1, r.slack2) < worst) {
      worst = std::min(r.slack1, r.slack2);
      rep.worst_k = k;
    }
    rep.rows.push_back(r);
  }
  return rep;
}

// ---- non-diminishing monitor ------------------------------------------

// Raw ingredients of one round of the NDS inequalities.
struct NdsInputs {
  int m = 0;
  double L = 0.0, eta = 0.0, r = 0.0;
  double residual = 0.0;  // S = sum_i |grad f_i(theta*)|^2
  Vec lam, lam_next;
  double gap = 0.0, gap_next = 0.0;  // F(xbar) - F*
  double grad_f_sq = 0.0;            // |grad F(xbar^k)|^2
  double ybar_sq = 0.0;              // |ybar^k|^2
  double v2 = 0.0, v3 = 0.0;         // x and y spread at k
  double v2_next = 0.0, v3_next = 0.0;
  double step_sq = 0.0;              // sum_i |x_i^{k+1} - x_i^k|^2
};

struct NdsSlacks {
  double descent, consensus, step, tracking;  // the four monitored rows
  std::array<double, 3> composite;            // diagnostic
  double a = 0.0, b = 0.0;
};

inline double C1(double L, int m) { return std::max(4.0 * L, 4.0 / (m * L)); }

inline NdsSlacks EvaluateNds(const NdsInputs& in,
                             std::optional<std::pair<double, double>> delta_c) {
  const double m = in.m, L = in.L, eta = in.eta, r = in.r, S = in.residual;
  const double lb = in.lam.mean();
  const double lmax = in.lam.maxCoeff();
  const double dev2 = (in.lam.array() - lb).matrix().squaredNorm();
  const double n1 = in.lam_next.squaredNorm();
  const double dl = (in.lam_next - in.lam).squaredNorm();
  const double c1 = C1(L, in.m);
  const double v1 = 2.0 / L * in.gap;
  const double v1n = 2.0 / L * in.gap_next;
  NdsSlacks out{};

  const double rhs65 = v1 + c1 / lb * dev2 * (v1 + S) +
                       2.0 * L / (m * lb) * lmax * lmax * in.v2 -
                       lb / L * in.grad_f_sq +
                       (lb * L - 1.0) / (lb * L) * in.ybar_sq;
  out.descent = ScaledSlack(rhs65, v1n);

  const double rhs67 = eta * in.v2 + in.v3 / (1.0 - eta);
  out.consensus = ScaledSlack(rhs67, in.v2_next);

  const double rhs68 = 3.0 * r * r * in.v2 + 3.0 * in.v3 + 3.0 * m * in.ybar_sq;
  out.step = ScaledSlack(rhs68, in.step_sq);

  const double k75 = 6.0 * m * m * L * L / (1.0 - eta);
  const double rhs75 = (eta + k75 * n1) * in.v3 +
                       k75 * r * r * (n1 * in.v2 + m * n1 * in.ybar_sq) +
                       2.0 * m * m / (1.0 - eta) * dl *
                           (2.0 * L * L * in.v2 + 8.0 * m * L * in.gap + 4.0 * S);
  out.tracking = ScaledSlack(rhs75, in.v3_next);

  out.a = std::max(c1 / lb * dev2, 8.0 * m * m * m * L * L / (1.0 - eta) * dl);
  out.b = std::max(c1 / lb * dev2, 8.0 * m * m / (1.0 - eta) * dl) * S;
  out.composite = {INFINITY, INFINITY, INFINITY};
  if (delta_c) {
    const auto [delta, c] = *delta_c;
    const double v[3] = {v1, in.v2, in.v3};
    const double vn[3] = {v1n, in.v2_next, in.v3_next};
    const double vm[3][3] = {
        {1.0, 1.0 - eta, 0.0},
        {0.0, eta, 1.0 / (1.0 - eta)},
        {0.0, (1.0 - eta) * (1.0 - eta) * (1.0 - c) * (1.0 - delta), c}};
    const double vsum = v[0] + v[1] + v[2];
    const double cterm[3] = {
        lb / L * in.grad_f_sq + (1.0 - lb * L) / (lb * L) * in.ybar_sq, 0.0,
        -(1.0 - eta) * (1.0 - eta) * (1.0 - c) * in.ybar_sq};
    for (int row = 0; row < 3; ++row) {
      double rhs = out.a * vsum + out.b - cterm[row];
      for (int col = 0; col < 3; ++col) rhs += vm[row][col] * v[col];
      out.composite[row] = ScaledSlack(rhs, vn[row]);
    }
  }
  return out;
}

struct NdsRow {
  long k = 0;
  double v1 = 0.0, v2 = 0.0, v3 = 0.0;
  double gamma = 0.0, tau = 0.0;
  NdsSlacks slacks{};
};

struct LyapunovReportNDS {
  std::vector<NdsRow> rows;
  double min_descent = INFINITY, min_consensus = INFINITY, min_step = INFINITY,
         min_tracking = INFINITY;
  std::array<double, 3> min_composite = {INFINITY, INFINITY, INFINITY};
  bool tau_in_unit_interval = true;
  double min_slack() const {
    return std::min({min_descent, min_consensus, min_step, min_tracking});
  }
  bool holds() const { return min_slack() >= kSlackTolerance; }
};

inline LyapunovReportNDS VerifyLyapunovNds(
    const Trace& tr, const Optimum& opt, double L, double eta, double r,
    std::optional<std::pair<double, double>> delta_c = std::nullopt) {
  if (tr.algorithm != Algorithm::kPdgNds)
    throw UnsupportedError("non-diminishing monitor needs a pdg-nds trace");
  const Problem& p = tr.problem;
  LyapunovReportNDS rep;
  const long K = tr.iterations;
  // y^k exists for k < K, and each row needs y^{k+1}.
  for (long k = 0; k + 2 <= K; ++k) {
    const NetworkState& s = tr.states[k];
    const NetworkState& sn = tr.states[k + 1];
    NdsInputs in;
    in.m = p.m;
    in.L = L;
    in.eta = eta;
    in.r = r;
    in.residual = opt.ResidualSquaredSum();
    in.lam = tr.ledger.lambda[k];
    in.lam_next = tr.ledger.lambda[k + 1];
    if (!(in.lam.mean() > 0.0)) continue;  // descent row undefined
    const Vec xbar = RowMean(s.x), xbar_n = RowMean(sn.x);
    in.gap = p.GlobalValue(xbar) - opt.f_star;
    in.gap_next = p.GlobalValue(xbar_n) - opt.f_star;
    in.grad_f_sq = p.GlobalGradient(xbar).squaredNorm();
    in.ybar_sq = RowMean(s.y).squaredNorm();
    in.v2 = Spread(s.x);
    in.v3 = Spread(s.y);
    in.v2_next = Spread(sn.x);
    in.v3_next = Spread(sn.y);
    in.step_sq = (sn.x - s.x).squaredNorm();
    NdsRow row;
    row.k = k;
    row.v1 = 2.0 / L * in.gap;
    row.v2 = in.v2;
    row.v3 = in.v3;
    row.gamma = in.lam.mean() / L;
    row.tau = in.lam.mean() * L;
    row.slacks = EvaluateNds(in, delta_c);
    rep.min_descent = std::min(rep.min_descent, row.slacks.descent);
    rep.min_consensus = std::min(rep.min_consensus, row.slacks.consensus);
    rep.min_step = std::min(rep.min_step, row.slacks.step);
    rep.min_tracking = std::min(rep.min_tracking, row.slacks.tracking);
    for (int q = 0; q < 3; ++q)
      rep.min_composite[q] = std::min(rep.min_composite[q], row.slacks.composite[q]);
    if (!(row.tau > 0.0 && row.tau < 1.0)) rep.tau_in_unit_interval = false;
    rep.rows.push_back(row);
  }
  return rep;
}

// ---- identities ---------------------------------------------------------

struct IdentityResiduals {
  double mean_dynamics = 0.0;  // |xbar^{k+1} - xbar^k + mean(lambda g)|, max over k
  double tracker_mean = 0.0;   // PDG-NDS: |ybar^k - mean(lambda^k g^k)|
  double tracker_recursion = 0.0;  // PDG-NDS: y^{k+1} vs W y^k + B(...)
};

inline IdentityResiduals CheckIdentities(const Trace& tr) {
  IdentityResiduals res;
  const long K = tr.iterations;
  const Mat& w = tr.topology.w;
  for (long k = 0; k < K; ++k) {
    const Vec step = RowMean(tr.states[k + 1].x) - RowMean(tr.states[k].x);
    const Vec drift = WeightedGradientMean(tr, k);
    if (tr.algorithm == Algorithm::kPdgDs) {
      res.mean_dynamics = std::max(res.mean_dynamics, (step + drift).cwiseAbs().maxCoeff());
    }
    if (tr.algorithm == Algorithm::kPdgNds) {
      // xbar^{k+1} = xbar^k - ybar^k with ybar^k = mean(lambda^k g^k).
      const Vec ybar = RowMean(tr.states[k].y);
      res.mean_dynamics = std::max(res.mean_dynamics, (step + ybar).cwiseAbs().maxCoeff());
      res.tracker_mean = std::max(res.tracker_mean, (ybar - drift).cwiseAbs().maxCoeff());
      if (k + 1 < K) {
        const Mat& b = tr.ledger.mixing[k + 1];  // B drawn for round k+1
        const Mat diff = tr.ledger.lambda[k + 1].asDiagonal() * tr.ledger.gradients[k + 1] -
                         tr.ledger.lambda[k].asDiagonal() * tr.ledger.gradients[k];
        const Mat pred = w * tr.states[k].y + b * diff;
        res.tracker_recursion = std::max(
            res.tracker_recursion, (pred - tr.states[k + 1].y).cwiseAbs().maxCoeff());
      }
    }
  }
  return res;
}

}  // namespace privdgd

#endif  // PRIVDGD_ANALYSIS_HPP_
