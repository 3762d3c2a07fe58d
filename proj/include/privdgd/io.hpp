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

// CSV and JSON emitters. Numbers are printed with 17 significant digits so
// every double round-trips.

#ifndef PRIVDGD_IO_HPP_
#define PRIVDGD_IO_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "privdgd/adversary.hpp"
#include "privdgd/analysis.hpp"
#include "privdgd/engine.hpp"
#include "privdgd/schedules.hpp"

namespace privdgd {

inline constexpr int kTraceFormatVersion = 1;

inline std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// JSON cannot hold inf/nan; they become strings.
inline nlohmann::json JNum(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline void WriteText(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw InputError("cannot write " + p.string());
  f << text;
}

inline void WriteJson(const std::filesystem::path& p, const nlohmann::json& j) {
  WriteText(p, j.dump(2) + "\n");
}

inline std::string MetricsCsv(const std::vector<MetricsRow>& rows) {
  std::string out = "k,mean_error,consensus,f_gap,ybar_norm,lambda_bar,lambda_max\n";
  for (const MetricsRow& r : rows) {
    out += std::to_string(r.k) + "," + Num(r.mean_error) + "," +
           Num(r.consensus) + "," + Num(r.f_gap) + "," + Num(r.ybar_norm) +
           "," + Num(r.lambda_bar) + "," + Num(r.lambda_max) + "\n";
  }
  return out;
}

inline std::string MessagesCsv(const Trace& tr) {
  const int d = tr.problem.d;
  std::string out = "k,sender,receiver,channel";
  for (int c = 1; c <= d; ++c) out += ",payload_" + std::to_string(c);
  out += "\n";
  for (const MessageRecord& m : tr.messages) {
    out += std::to_string(m.k) + "," + std::to_string(m.sender + 1) + "," +
           std::to_string(m.receiver + 1) + "," + ChannelName(m.channel);
    for (int c = 0; c < d; ++c) out += "," + Num(m.payload(c));
    out += "\n";
  }
  return out;
}

inline std::string StatesCsv(const Trace& tr) {
  const int d = tr.problem.d;
  const bool has_y = std::any_of(tr.states.begin(), tr.states.end(),
                                 [](const NetworkState& s) { return s.y.size() > 0; });
  std::string out = "k,agent";
  for (int c = 1; c <= d; ++c) out += ",x_" + std::to_string(c);
  if (has_y)
    for (int c = 1; c <= d; ++c) out += ",y_" + std::to_string(c);
  out += "\n";
  for (const NetworkState& s : tr.states) {
    for (int i = 0; i < s.x.rows(); ++i) {
      out += std::to_string(s.k) + "," + std::to_string(i + 1);
      for (int c = 0; c < d; ++c) out += "," + Num(s.x(i, c));
      if (has_y) {
        for (int c = 0; c < d; ++c)
          out += "," + (s.y.size() ? Num(s.y(i, c)) : std::string("nan"));
      }
      out += "\n";
    }
  }
  return out;
}

inline nlohmann::json TraceHeader(const Trace& tr, const nlohmann::json& config) {
  nlohmann::json h;
  h["format"] = "privdgd-trace";
  h["version"] = kTraceFormatVersion;
  h["algorithm"] = AlgorithmName(tr.algorithm);
  h["iterations"] = tr.iterations;
  h["master_seed"] = tr.master_seed;
  h["agents"] = tr.topology.graph.m();
  h["dimension"] = tr.problem.d;
  h["W"] = MatToJson(tr.topology.w);
  h["eta"] = tr.topology.spectral.eta;
  h["r"] = tr.topology.spectral.r;
  h["files"] = {{"states", "states.csv"}, {"messages", "messages.csv"}};
  h["config"] = config;
  return h;
}

inline nlohmann::json ReportToJson(const ConditionReport& rep) {
  nlohmann::json j;
  j["regime"] = rep.diminishing ? "diminishing" : "non-diminishing";
  j["horizon"] = rep.horizon;
  j["T"] = rep.t_start;
  if (!rep.diminishing) {
    j["delta"] = rep.delta;
    j["c"] = rep.c;
  }
  j["overall"] = VerdictName(rep.overall);
  j["notes"] = rep.notes;
  j["conditions"] = nlohmann::json::array();
  for (const Condition& c : rep.conditions) {
    nlohmann::json cj;
    cj["name"] = c.name;
    cj["verdict"] = VerdictName(c.verdict);
    cj["finite_horizon"] = VerdictName(c.prefix);
    cj["tail_certificate"] = VerdictName(c.tail);
    cj["value"] = JNum(c.value);
    if (c.informational) cj["informational"] = true;
    if (!c.lhs.empty()) {
      cj["first_k"] = c.first_k;
      nlohmann::json margins = nlohmann::json::array();
      for (size_t t = 0; t < c.lhs.size(); ++t) margins.push_back(JNum(c.margin(t)));
      cj["margins"] = margins;
    }
    j["conditions"].push_back(cj);
  }
  return j;
}

inline nlohmann::json DsReportToJson(const LyapunovReportDS& rep) {
  nlohmann::json j;
  j["monitor"] = "diminishing";
  j["min_slack"] = JNum(rep.min_slack());
  j["min_slack_mean_row"] = JNum(rep.min_slack_mean_row);
  j["min_slack_consensus_row"] = JNum(rep.min_slack_consensus_row);
  j["min_slack_consensus_row_with_residual"] = JNum(rep.min_slack_residual_row);
  j["worst_k"] = rep.worst_k;
  j["holds"] = rep.holds();
  nlohmann::json s1 = nlohmann::json::array(), s2 = nlohmann::json::array(),
                 s2r = nlohmann::json::array(), a = nlohmann::json::array();
  for (const DsRow& r : rep.rows) {
    s1.push_back(JNum(r.slack1));
    s2.push_back(JNum(r.slack2));
    s2r.push_back(JNum(r.slack2_residual));
    a.push_back(JNum(r.entries.a()));
  }
  j["slack_mean_row"] = s1;
  j["slack_consensus_row"] = s2;
  j["slack_consensus_row_with_residual"] = s2r;
  j["a"] = a;
  return j;
}

inline nlohmann::json NdsReportToJson(const LyapunovReportNDS& rep) {
  nlohmann::json j;
  j["monitor"] = "non-diminishing";
  j["min_slack"] = JNum(rep.min_slack());
  j["min_slack_descent"] = JNum(rep.min_descent);
  j["min_slack_consensus"] = JNum(rep.min_consensus);
  j["min_slack_step"] = JNum(rep.min_step);
  j["min_slack_tracking"] = JNum(rep.min_tracking);
  j["composite_min_slack"] = {JNum(rep.min_composite[0]), JNum(rep.min_composite[1]),
                              JNum(rep.min_composite[2])};
  j["tau_in_unit_interval"] = rep.tau_in_unit_interval;
  j["holds"] = rep.holds();
  nlohmann::json d = nlohmann::json::array(), c = nlohmann::json::array(),
                 s = nlohmann::json::array(), t = nlohmann::json::array();
  for (const NdsRow& r : rep.rows) {
    d.push_back(JNum(r.slacks.descent));
    c.push_back(JNum(r.slacks.consensus));
    s.push_back(JNum(r.slacks.step));
    t.push_back(JNum(r.slacks.tracking));
  }
  j["slack_descent"] = d;
  j["slack_consensus"] = c;
  j["slack_step"] = s;
  j["slack_tracking"] = t;
  return j;
}

inline nlohmann::json WitnessToJson(const WitnessResult& w) {
  nlohmann::json j;
  j["target"] = w.target + 1;
  j["max_relative_discrepancy"] = w.max_discrepancy;
  j["max_log_difference_error"] = w.max_zeta_error;
  j["messages_compared"] = w.messages_compared;
  j["perturbations"] = nlohmann::json::array();
  for (const auto& [k, z] : w.zeta) {
    nlohmann::json p;
    p["k"] = k;
    p["zeta"] = z;
    p["realized"] = JNum(w.realized.at(k));
    p["lambda_hat"] = w.alt_lambda.at(k);
    p["gradient_hat"] = VecToJson(w.alt_gradient.at(k));
    j["perturbations"].push_back(p);
  }
  j["stepsize_sums"] = {
      {"heterogeneity", {JNum(w.heterogeneity_sum), JNum(w.heterogeneity_sum_alt)}},
      {"variation", {JNum(w.variation_sum), JNum(w.variation_sum_alt)}},
      {"weighted_spread", {JNum(w.weighted_spread_sum), JNum(w.weighted_spread_sum_alt)}},
      {"alternative_finite", w.alt_sums_finite}};
  return j;
}

}  // namespace privdgd

#endif  // PRIVDGD_IO_HPP_
