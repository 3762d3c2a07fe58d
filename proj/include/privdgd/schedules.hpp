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

// Per-agent time-varying stepsizes and the admissibility checkers for the
// diminishing (DS) and non-diminishing (NDS) convergence results.
//
// Infinite-sum conditions cannot be decided from a finite prefix. Each
// family therefore carries an analytic tail certificate, and a verdict of
// "pass" needs both the prefix numbers and the certificate.

#ifndef PRIVDGD_SCHEDULES_HPP_
#define PRIVDGD_SCHEDULES_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "privdgd/common.hpp"
#include "privdgd/random.hpp"

namespace privdgd {

enum class Family {
  kDiminishingHeterogeneous,
  kDiminishingHomogeneous,
  kNondiminishingHeterogeneous,
  kConstantHomogeneous,
  kFiniteDeviation,
  kCustom,
};

inline std::string FamilyName(Family f) {
  switch (f) {
    case Family::kDiminishingHeterogeneous: return "diminishing-heterogeneous";
    case Family::kDiminishingHomogeneous: return "diminishing-homogeneous";
    case Family::kNondiminishingHeterogeneous:
      return "nondiminishing-heterogeneous";
    case Family::kConstantHomogeneous: return "constant-homogeneous";
    case Family::kFiniteDeviation: return "finite-deviation";
    case Family::kCustom: return "custom";
  }
  return "?";
}

inline Family ParseFamily(const std::string& s) {
  for (Family f : {Family::kDiminishingHeterogeneous,
                   Family::kDiminishingHomogeneous,
                   Family::kNondiminishingHeterogeneous,
                   Family::kConstantHomogeneous, Family::kFiniteDeviation,
                   Family::kCustom}) {
    if (FamilyName(f) == s) return f;
  }
  throw ParameterError("unknown schedule family '" + s + "'");
}

inline bool IsDiminishing(Family f) {
  return f == Family::kDiminishingHeterogeneous ||
         f == Family::kDiminishingHomogeneous;
}

// (1 - rho / (k+1)^2) / (k+1): the iteration count starts at 0 here.
inline double DiminishingHeterogeneousValue(long k, double rho) {
  const double kk = static_cast<double>(k) + 1.0;
  return (1.0 - rho / (kk * kk)) / kk;
}

class StepsizeSchedule {
 public:
  static StepsizeSchedule DiminishingHeterogeneous(int m, uint64_t seed,
                                                   double scale = 1.0) {
    StepsizeSchedule s(Family::kDiminishingHeterogeneous, m, seed);
    s.scale_ = scale;
    return s;
  }

  static StepsizeSchedule DiminishingHomogeneous(int m, double scale = 1.0) {
    StepsizeSchedule s(Family::kDiminishingHomogeneous, m, 0);
    s.scale_ = scale;
    return s;
  }

  static StepsizeSchedule NondiminishingHeterogeneous(int m, double base,
                                                      uint64_t seed) {
    StepsizeSchedule s(Family::kNondiminishingHeterogeneous, m, seed);
    s.base_ = base;
    return s;
  }

  static StepsizeSchedule ConstantHomogeneous(int m, double base) {
    StepsizeSchedule s(Family::kConstantHomogeneous, m, 0);
    s.base_ = base;
    return s;
  }

  // lambda = max(0, base + delta), delta uniform on [-amplitude, amplitude]
  // for k < t_dev and zero afterwards.
  static StepsizeSchedule FiniteDeviation(int m, double base, long t_dev,
                                          double amplitude, uint64_t seed) {
    if (t_dev < 0 || amplitude < 0.0)
      throw ParameterError("finite-deviation needs t_dev >= 0, amplitude >= 0");
    StepsizeSchedule s(Family::kFiniteDeviation, m, seed);
    s.base_ = base;
    s.t_dev_ = t_dev;
    s.amplitude_ = amplitude;
    return s;
  }

  // Explicit table lambda^0..lambda^{n-1}; nothing is known past the table.
  static StepsizeSchedule Custom(std::vector<Vec> table) {
    if (table.empty()) throw ParameterError("custom schedule table is empty");
    StepsizeSchedule s(Family::kCustom, static_cast<int>(table[0].size()), 0);
    for (const Vec& v : table) {
      if (v.size() != s.m_) throw ParameterError("custom table is ragged");
      if ((v.array() < 0.0).any() || !v.allFinite())
        throw ParameterError("custom stepsizes must be finite and >= 0");
    }
    s.table_ = std::make_shared<const std::vector<Vec>>(std::move(table));
    return s;
  }

  // Finitely many (agent, k) values replaced. The tail certificate of the
  // underlying family still applies beyond the last override.
  StepsizeSchedule WithOverrides(
      const std::map<std::pair<int, long>, double>& values) const {
    StepsizeSchedule s = *this;
    auto merged = overrides_ ? *overrides_
                             : std::map<std::pair<int, long>, double>{};
    for (const auto& [key, v] : values) {
      if (key.first < 0 || key.first >= m_ || key.second < 0)
        throw ParameterError("override index out of range");
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ParameterError("override stepsize must be finite and >= 0");
      merged[key] = v;
    }
    s.overrides_ =
        std::make_shared<const std::map<std::pair<int, long>, double>>(merged);
    return s;
  }

  StepsizeSchedule WithBase(double base) const {
    StepsizeSchedule s = *this;
    s.base_ = base;
    return s;
  }

  double Evaluate(int i, long k) const {
    if (i < 0 || i >= m_ || k < 0)
      throw ParameterError("stepsize index out of range");
    if (overrides_) {
      auto it = overrides_->find({i, k});
      if (it != overrides_->end()) return it->second;
    }
    switch (family_) {
      case Family::kDiminishingHeterogeneous:
        return scale_ * DiminishingHeterogeneousValue(k, Rho(i, k));
      case Family::kDiminishingHomogeneous:
        return scale_ / (static_cast<double>(k) + 1.0);
      case Family::kNondiminishingHeterogeneous: {
        const double kk = static_cast<double>(k) + 1.0;
        return base_ * (1.0 - Rho(i, k) / (kk * kk));
      }
      case Family::kConstantHomogeneous:
        return base_;
      case Family::kFiniteDeviation: {
        if (k >= t_dev_) return base_;
        const double delta = amplitude_ * (2.0 * Rho(i, k) - 1.0);
        return std::max(0.0, base_ + delta);
      }
      case Family::kCustom:
        if (k >= static_cast<long>(table_->size())) {
          throw ParameterError("custom schedule has no entry for k=" +
                               std::to_string(k));
        }
        return (*table_)[k](i);
    }
    return 0.0;
  }

  Vec At(long k) const {
    Vec v(m_);
    for (int i = 0; i < m_; ++i) v(i) = Evaluate(i, k);
    return v;
  }

  // Last k at which values may differ from the family's regular pattern.
  long last_irregular() const {
    long last = -1;
    if (family_ == Family::kFiniteDeviation) last = t_dev_ - 1;
    if (overrides_) {
      for (const auto& [key, v] : *overrides_) last = std::max(last, key.second);
    }
    return last;
  }

  long table_size() const {
    return table_ ? static_cast<long>(table_->size()) : -1;
  }

  int m() const { return m_; }
  Family family() const { return family_; }
  double base() const { return base_; }
  double scale() const { return scale_; }
  long t_dev() const { return t_dev_; }
  double amplitude() const { return amplitude_; }
  uint64_t seed() const { return seed_; }
  bool has_overrides() const { return overrides_ && !overrides_->empty(); }

 private:
  StepsizeSchedule(Family f, int m, uint64_t seed)
      : family_(f), m_(m), seed_(seed) {
    if (m < 1) throw ParameterError("schedule needs at least one agent");
    keys_.resize(m);
    for (int i = 0; i < m; ++i) keys_[i] = DeriveSeed(seed, "rho", i);
  }

  // rho_i^k, uniform on [0, 1), from agent i's private stream.
  double Rho(int i, long k) const {
    return UniformAt(keys_[i], static_cast<uint64_t>(k));
  }

  Family family_;
  int m_;
  uint64_t seed_;
  std::vector<uint64_t> keys_;
  double base_ = 0.0;
  double scale_ = 1.0;
  long t_dev_ = 0;
  double amplitude_ = 0.0;
  std::shared_ptr<const std::vector<Vec>> table_;
  std::shared_ptr<const std::map<std::pair<int, long>, double>> overrides_;
};

enum class Verdict { kPass, kFail, kUndecided };

inline std::string VerdictName(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "pass";
    case Verdict::kFail: return "fail";
    case Verdict::kUndecided: return "undecided-at-horizon";
  }
  return "?";
}

inline Verdict Combine(Verdict prefix, Verdict tail) {
  if (prefix == Verdict::kFail || tail == Verdict::kFail) return Verdict::kFail;
  if (prefix == Verdict::kPass && tail == Verdict::kPass) return Verdict::kPass;
  return Verdict::kUndecided;
}

struct Condition {
  std::string name;
  Verdict verdict = Verdict::kUndecided;
  Verdict prefix = Verdict::kUndecided;  // finite-horizon part alone
  Verdict tail = Verdict::kUndecided;    // analytic certificate
  double value = 0.0;  // partial sum, or min margin for per-iteration rows
  bool informational = false;  // excluded from the overall verdict
  // Per-iteration rows only, indexed from first_k.
  long first_k = 0;
  std::vector<double> lhs, rhs;
  double margin(size_t t) const { return rhs[t] - lhs[t]; }
};

struct ConditionReport {
  bool diminishing = true;  // false: the non-diminishing conditions
  long horizon = 0;
  long t_start = 0;
  double delta = 0.0;
  double c = 0.0;
  std::vector<Condition> conditions;
  Verdict overall = Verdict::kUndecided;
  std::vector<std::string> notes;

  const Condition& Get(const std::string& name) const {
    for (const Condition& c : conditions)
      if (c.name == name) return c;
    throw ParameterError("no condition named " + name);
  }

  void Finish() {
    overall = Verdict::kPass;
    for (const Condition& c : conditions) {
      if (c.informational) continue;
      if (c.verdict == Verdict::kFail) overall = Verdict::kFail;
      if (c.verdict == Verdict::kUndecided && overall == Verdict::kPass)
        overall = Verdict::kUndecided;
    }
  }
};

namespace schedules_internal {

inline Verdict Certify(bool ok) { return ok ? Verdict::kPass : Verdict::kFail; }

// Tail certificate for the infinite sums of the DS result:
// {sum lambda = inf, sum lambda^2 < inf, heterogeneity summable}.
inline std::array<Verdict, 3> DiminishingTail(const StepsizeSchedule& s) {
  using V = Verdict;
  const bool positive = s.base() > 0.0;
  switch (s.family()) {
    case Family::kDiminishingHeterogeneous:
    case Family::kDiminishingHomogeneous:
      return {Certify(s.scale() > 0.0), V::kPass, V::kPass};
    case Family::kNondiminishingHeterogeneous:
      // |lambda_i - lambda_j| <= base / (k+1)^2, summable.
      return {Certify(positive), Certify(!positive), V::kPass};
    case Family::kConstantHomogeneous:
    case Family::kFiniteDeviation:
      // A constant tail: divergent sum iff base > 0, and then not
      // square-summable. Finitely many deviations change neither.
      return {Certify(positive), Certify(!positive), V::kPass};
    case Family::kCustom:
      return {V::kUndecided, V::kUndecided, V::kUndecided};
  }
  return {V::kUndecided, V::kUndecided, V::kUndecided};
}

}  // namespace schedules_internal

inline ConditionReport CheckDiminishingConditions(const StepsizeSchedule& s, long horizon) {
  if (horizon < 1) throw ParameterError("horizon must be >= 1");
  const int m = s.m();
  Vec sum = Vec::Zero(m), sq = Vec::Zero(m);
  double het = 0.0;
  for (long k = 0; k <= horizon; ++k) {
    const Vec lam = s.At(k);
    sum += lam;
    sq += lam.cwiseProduct(lam);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (i != j) het += std::abs(lam(i) - lam(j));
  }
  const auto tail = schedules_internal::DiminishingTail(s);
  ConditionReport rep;
  rep.diminishing = true;
  rep.horizon = horizon;
  auto add = [&](const std::string& name, double value, bool prefix_ok,
                 Verdict t) {
    Condition c;
    c.name = name;
    c.value = value;
    c.prefix = schedules_internal::Certify(prefix_ok && std::isfinite(value));
    c.tail = t;
    c.verdict = Combine(c.prefix, c.tail);
    rep.conditions.push_back(std::move(c));
  };
  add("divergent-sum", sum.minCoeff(), sum.minCoeff() > 0.0, tail[0]);
  add("square-summable", sq.maxCoeff(), true, tail[1]);
  add("heterogeneity", het, true, tail[2]);
  rep.Finish();
  return rep;
}

// Inputs of the NDS per-iteration conditions at one k.
struct NdsStepData {
  double lbar = 0.0;     // mean of lambda^k
  double lmax = 0.0;     // max of lambda^k
  double next_sq = 0.0;  // |lambda^{k+1}|^2
};

struct NdsLhs {
  double a, b, c_rate, d;
};

inline NdsLhs NdsConditionLhs(const NdsStepData& q, double L, double eta,
                              double r, int m) {
  NdsLhs o;
  o.a = q.lbar > 0.0 ? 2.0 * L / (m * q.lbar) * q.lmax * q.lmax : 0.0;
  o.b = q.lbar * L;
  o.c_rate = eta + 6.0 * m * m * L * L / (1.0 - eta) * q.next_sq;
  const double mm = static_cast<double>(m);
  o.d = std::max(mm * mm * mm * r * r, mm * mm) * 6.0 * L * L * q.next_sq;
  return o;
}

struct NdsRhs {
  double a, b, c_rate, d;
};

inline NdsRhs NdsConditionRhs(double eta, double delta, double c) {
  return {1.0 - eta, delta / (1.0 + delta), c,
          std::pow(1.0 - eta, 3) * (1.0 - c) * (1.0 - delta)};
}

inline bool NdsHolds(const NdsLhs& l, const NdsRhs& r) {
  return l.a <= r.a && l.b <= r.b && l.c_rate <= r.c_rate && l.d <= r.d;
}

namespace schedules_internal {

// Worst case of the per-iteration inputs over all k >= k0, from the family's
// analytic envelope. nullopt when the family gives no envelope.
inline std::optional<NdsStepData> NdsEnvelope(const StepsizeSchedule& s,
                                              long k0) {
  const double m = s.m();
  const double kk = static_cast<double>(k0) + 1.0;
  switch (s.family()) {
    case Family::kConstantHomogeneous:
    case Family::kFiniteDeviation:
      return NdsStepData{s.base(), s.base(), m * s.base() * s.base()};
    case Family::kNondiminishingHeterogeneous: {
      // lambda in [base (1 - 1/(k+1)^2), base]. The mean only enters
      // condition (a) through 1/lbar, so use its lower end there. The
      // lower end is returned in lbar and condition (b) is checked with the
      // upper end by the caller.
      return NdsStepData{s.base() * (1.0 - 1.0 / (kk * kk)), s.base(),
                         m * s.base() * s.base()};
    }
    case Family::kDiminishingHeterogeneous:
    case Family::kDiminishingHomogeneous: {
      // lambda in [scale (1 - 1/(k+1)^2)/(k+1), scale/(k+1)]; every
      // left-hand side is decreasing in k.
      const double hi = s.scale() / kk;
      const double lo = s.family() == Family::kDiminishingHomogeneous
                            ? hi
                            : s.scale() * (1.0 - 1.0 / (kk * kk)) / kk;
      const double next = s.scale() / (kk + 1.0);
      return NdsStepData{lo, hi, m * next * next};
    }
    case Family::kCustom:
      return std::nullopt;
  }
  return std::nullopt;
}

// Upper end of lbar over k >= k0 (for condition (b)).
inline double LbarUpper(const StepsizeSchedule& s, long k0) {
  if (IsDiminishing(s.family()))
    return s.scale() / (static_cast<double>(k0) + 1.0);
  return s.base();
}

struct NdsPrefix {
  long first_k = 0;
  long last_k = 0;
  std::vector<NdsStepData> steps;
  std::vector<NdsLhs> lhs;
  double sum_lbar = 0.0;
  double sum_variation = 0.0;
  double sum_heterogeneity = 0.0;
  bool summable_finite = true;
  bool custom_short = false;
};

inline NdsPrefix ComputeNdsPrefix(const StepsizeSchedule& s, double L,
                                  double eta, double r, long horizon,
                                  long t_start) {
  NdsPrefix p;
  p.first_k = t_start;
  long last = horizon;
  if (s.family() != Family::kCustom)
    last = std::max(last, s.last_irregular() + 1);
  if (s.family() == Family::kCustom && last + 1 >= s.table_size()) {
    last = s.table_size() - 2;  // lambda^{k+1} must exist
    p.custom_short = true;
  }
  p.last_k = last;
  if (last < t_start) return p;
  Vec cur = s.At(t_start);
  for (long k = t_start; k <= last; ++k) {
    const Vec next = s.At(k + 1);
    NdsStepData q{cur.mean(), cur.maxCoeff(), next.squaredNorm()};
    p.steps.push_back(q);
    p.lhs.push_back(NdsConditionLhs(q, L, eta, r, s.m()));
    p.sum_lbar += q.lbar;
    p.sum_variation += (next - cur).squaredNorm();
    const double dev = (cur.array() - q.lbar).matrix().squaredNorm();
    if (dev > 0.0) p.sum_heterogeneity += dev / q.lbar;  // 0/0 counts as 0
    cur = next;
  }
  p.summable_finite = std::isfinite(p.sum_lbar) &&
                      std::isfinite(p.sum_variation) &&
                      std::isfinite(p.sum_heterogeneity);
  return p;
}

inline Verdict NdsTail(const StepsizeSchedule& s, double L, double eta,
                       double r, long k0, double delta, double c) {
  auto env = NdsEnvelope(s, k0);
  if (!env) return Verdict::kUndecided;
  NdsLhs l = NdsConditionLhs(*env, L, eta, r, s.m());
  l.b = LbarUpper(s, k0) * L;
  return NdsHolds(l, NdsConditionRhs(eta, delta, c)) ? Verdict::kPass
                                                     : Verdict::kUndecided;
}

inline std::array<Verdict, 3> NdsSumTail(const StepsizeSchedule& s) {
  using V = Verdict;
  switch (s.family()) {
    case Family::kCustom:
      return {V::kUndecided, V::kUndecided, V::kUndecided};
    case Family::kDiminishingHeterogeneous:
    case Family::kDiminishingHomogeneous:
      // Harmonic mean sum; variation O(1/k^4); heterogeneity O(1/k^5).
      return {Certify(s.scale() > 0.0), V::kPass, V::kPass};
    default:
      // Constant or O(1/k^2)-perturbed constant tail.
      return {Certify(s.base() > 0.0), V::kPass, V::kPass};
  }
}

}  // namespace schedules_internal

inline void CheckDeltaC(double delta, double c) {
  if (!(delta > 0.0 && delta < 1.0) || !(c > 0.0 && c < 1.0))
    throw ParameterError("delta and c must lie in (0, 1)");
}

inline ConditionReport CheckNondiminishingFromPrefix(
    const StepsizeSchedule& s, const schedules_internal::NdsPrefix& p,
    double L, double eta, double r, double delta, double c, long horizon,
    long t_start) {
  CheckDeltaC(delta, c);
  namespace si = schedules_internal;
  ConditionReport rep;
  rep.diminishing = false;
  rep.horizon = horizon;
  rep.t_start = t_start;
  rep.delta = delta;
  rep.c = c;
  const NdsRhs rhs = NdsConditionRhs(eta, delta, c);
  const Verdict tail =
      s.family() == Family::kCustom
          ? Verdict::kUndecided
          : si::NdsTail(s, L, eta, r, p.last_k + 1, delta, c);
  const char* names[4] = {"a", "b", "c", "d"};
  const double rhs_v[4] = {rhs.a, rhs.b, rhs.c_rate, rhs.d};
  for (int which = 0; which < 4; ++which) {
    Condition cond;
    cond.name = names[which];
    cond.first_k = p.first_k;
    double min_margin = INFINITY;
    for (const NdsLhs& l : p.lhs) {
      const double lv[4] = {l.a, l.b, l.c_rate, l.d};
      cond.lhs.push_back(lv[which]);
      cond.rhs.push_back(rhs_v[which]);
      min_margin = std::min(min_margin, rhs_v[which] - lv[which]);
    }
    cond.value = min_margin;
    cond.prefix = si::Certify(min_margin >= 0.0 || p.lhs.empty());
    if (p.custom_short && cond.prefix == Verdict::kPass)
      cond.prefix = Verdict::kUndecided;
    cond.tail = tail;
    cond.verdict = Combine(cond.prefix, cond.tail);
    rep.conditions.push_back(std::move(cond));
  }
  {
    // The same mean bound without the factor L, reported for comparison.
    Condition cond;
    cond.name = "b-unscaled";
    cond.informational = true;
    cond.first_k = p.first_k;
    double min_margin = INFINITY;
    for (const auto& q : p.steps) {
      cond.lhs.push_back(q.lbar);
      cond.rhs.push_back(rhs.b);
      min_margin = std::min(min_margin, rhs.b - q.lbar);
    }
    cond.value = min_margin;
    cond.prefix = si::Certify(min_margin >= 0.0);
    cond.tail = Verdict::kUndecided;
    cond.verdict = cond.prefix;
    rep.conditions.push_back(std::move(cond));
    rep.notes.push_back(
        "condition b is checked as mean(lambda)*L <= delta/(1+delta); the "
        "unscaled form is listed as b-unscaled and does not enter the "
        "verdict");
  }
  const auto sums = si::NdsSumTail(s);
  auto add_sum = [&](const std::string& name, double value, bool ok,
                     Verdict t) {
    Condition cond;
    cond.name = name;
    cond.value = value;
    cond.prefix = si::Certify(ok && p.summable_finite);
    cond.tail = t;
    cond.verdict = Combine(cond.prefix, cond.tail);
    rep.conditions.push_back(std::move(cond));
  };
  add_sum("sum-mean-stepsize", p.sum_lbar, p.sum_lbar > 0.0, sums[0]);
  add_sum("sum-variation", p.sum_variation, true, sums[1]);
  add_sum("sum-heterogeneity", p.sum_heterogeneity, true, sums[2]);
  rep.Finish();
  return rep;
}

inline ConditionReport CheckNondiminishingConditions(const StepsizeSchedule& s, double L,
                                     double eta, double r, int m, double delta,
                                     double c, long horizon, long t_start = 0) {
  CheckDeltaC(delta, c);
  if (m != s.m()) throw ParameterError("agent count mismatch");
  if (t_start < 0) throw ParameterError("T must be >= 0");
  auto p = schedules_internal::ComputeNdsPrefix(s, L, eta, r, horizon, t_start);
  return CheckNondiminishingFromPrefix(s, p, L, eta, r, delta, c, horizon, t_start);
}

inline double GridValue(int i) { return 0.05 * i; }

// First (delta, c) on the 0.05..0.95 grid, delta outer, for which every
// condition passes.
inline std::optional<std::pair<double, double>> FindFeasibleDeltaC(
    const StepsizeSchedule& s, double L, double eta, double r, int m,
    long horizon, long t_start = 0) {
  if (m != s.m()) throw ParameterError("agent count mismatch");
  auto p = schedules_internal::ComputeNdsPrefix(s, L, eta, r, horizon, t_start);
  // Cheap screen on the raw margins before building full reports.
  double worst_a = 0.0, worst_b = 0.0, worst_c = 0.0, worst_d = 0.0;
  for (const NdsLhs& l : p.lhs) {
    worst_a = std::max(worst_a, l.a);
    worst_b = std::max(worst_b, l.b);
    worst_c = std::max(worst_c, l.c_rate);
    worst_d = std::max(worst_d, l.d);
  }
  if (worst_a > 1.0 - eta) return std::nullopt;
  for (int i = 1; i <= 19; ++i) {
    const double delta = GridValue(i);
    if (worst_b > delta / (1.0 + delta)) continue;
    for (int j = 1; j <= 19; ++j) {
      const double c = GridValue(j);
      const NdsRhs rhs = NdsConditionRhs(eta, delta, c);
      if (worst_c > rhs.c_rate || worst_d > rhs.d) continue;
      ConditionReport rep =
          CheckNondiminishingFromPrefix(s, p, L, eta, r, delta, c, horizon, t_start);
      if (rep.overall == Verdict::kPass) return std::make_pair(delta, c);
    }
  }
  return std::nullopt;
}

// Largest base (by bisection, then shrunk by `safety`) for which
// FindFeasibleDeltaC succeeds. Returns 0 when no positive base works.
inline double MaxAdmissibleBase(const StepsizeSchedule& s, double L, double eta,
                                double r, long horizon, double safety = 0.98) {
  double lo = 0.0, hi = 1.0 / L;
  auto ok = [&](double b) {
    return FindFeasibleDeltaC(s.WithBase(b), L, eta, r, s.m(), horizon)
        .has_value();
  };
  while (ok(hi)) hi *= 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo * safety;
}

}  // namespace privdgd

#endif  // PRIVDGD_SCHEDULES_HPP_
