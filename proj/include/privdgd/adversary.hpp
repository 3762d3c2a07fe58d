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

// Threat models over a message log. The two baseline attacks recover
// gradients exactly from what a curious neighbor receives; the witness shows
// that a PDG log is equally consistent with a rescaled gradient history.

#ifndef PRIVDGD_ADVERSARY_HPP_
#define PRIVDGD_ADVERSARY_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "privdgd/common.hpp"
#include "privdgd/engine.hpp"
#include "privdgd/topology.hpp"

namespace privdgd {

enum class AdversaryType { kHonestButCurious, kEavesdropper };

// What an agent knows about itself. Never filled for other agents.
struct AgentInternals {
  std::vector<Vec> x;
  std::vector<Vec> y;
  std::vector<Vec> gradient;
  std::vector<double> lambda;
  std::vector<Vec> mixing_column;  // own column of B^t / C^t, per round
};

struct AdversaryView {
  AdversaryType type = AdversaryType::kEavesdropper;
  std::vector<int> agents;  // curious (possibly colluding) agents
  Algorithm algorithm = Algorithm::kPdgDs;
  long iterations = 0;
  Graph graph;
  Mat w;
  std::vector<MessageRecord> received;  // eavesdropper: the whole log
  std::vector<MessageRecord> sent;      // outgoing messages of `agents`
  std::map<int, AgentInternals> own;

  bool IsCurious(int i) const {
    return std::find(agents.begin(), agents.end(), i) != agents.end();
  }
};

inline AgentInternals ExtractInternals(const Trace& tr, int i) {
  AgentInternals a;
  for (const NetworkState& s : tr.states) {
    a.x.push_back(s.x.row(i).transpose());
    if (s.y.size()) a.y.push_back(s.y.row(i).transpose());
  }
  for (const Mat& g : tr.ledger.gradients) a.gradient.push_back(g.row(i).transpose());
  for (const Vec& l : tr.ledger.lambda) a.lambda.push_back(l(i));
  for (const Mat& b : tr.ledger.mixing)
    a.mixing_column.push_back(b.size() ? Vec(b.col(i)) : Vec());
  return a;
}

inline AdversaryView ProjectView(const Trace& tr, AdversaryType type,
                                 int agent = -1) {
  AdversaryView v;
  v.type = type;
  v.algorithm = tr.algorithm;
  v.iterations = tr.iterations;
  v.graph = tr.topology.graph;
  v.w = tr.topology.w;
  if (type == AdversaryType::kEavesdropper) {
    v.received = tr.messages;
    return v;
  }
  if (agent < 0 || agent >= tr.topology.graph.m())
    throw InputError("curious agent index out of range");
  v.agents = {agent};
  for (const MessageRecord& m : tr.messages) {
    if (m.receiver == agent) v.received.push_back(m);
    if (m.sender == agent) v.sent.push_back(m);
  }
  v.own[agent] = ExtractInternals(tr, agent);
  return v;
}

// Colluding curious agents pool what they saw.
inline AdversaryView UnionViews(const std::vector<AdversaryView>& views) {
  if (views.empty()) throw InputError("no views to merge");
  AdversaryView u = views[0];
  auto key = [](const MessageRecord& m) {
    return std::make_tuple(m.k, m.sender, m.receiver, static_cast<int>(m.channel));
  };
  auto merge = [&](std::vector<MessageRecord>& into,
                   const std::vector<MessageRecord>& from) {
    into.insert(into.end(), from.begin(), from.end());
    std::stable_sort(into.begin(), into.end(),
                     [&](const auto& a, const auto& b) { return key(a) < key(b); });
    into.erase(std::unique(into.begin(), into.end(),
                           [&](const auto& a, const auto& b) {
                             return key(a) == key(b);
                           }),
               into.end());
  };
  for (size_t q = 1; q < views.size(); ++q) {
    const AdversaryView& v = views[q];
    if (v.type == AdversaryType::kEavesdropper) u.type = v.type;
    for (int a : v.agents)
      if (!u.IsCurious(a)) u.agents.push_back(a);
    merge(u.received, v.received);
    merge(u.sent, v.sent);
    for (const auto& [a, internals] : v.own) u.own[a] = internals;
  }
  return u;
}

namespace adversary_internal {

inline const MessageRecord* Find(const std::vector<MessageRecord>& log, long k,
                                 int sender, int receiver, Channel ch) {
  for (const MessageRecord& m : log)
    if (m.k == k && m.sender == sender && m.receiver == receiver &&
        m.channel == ch)
      return &m;
  return nullptr;
}

inline int SoleCuriousAgent(const AdversaryView& v) {
  if (v.type != AdversaryType::kHonestButCurious || v.agents.empty())
    throw InputError("attack needs an honest-but-curious view");
  return v.agents[0];
}

}  // namespace adversary_internal

struct DigingEstimate {
  Vec x1;  // x_j^1
  Vec g1;  // grad f_j(x_j^1)
};

// The round-0 tracker message is w_ij g_j^1 and the round-1 state message is
// x_j^1 itself.
inline DigingEstimate InferDigingGradient(const AdversaryView& view, int target) {
  namespace ai = adversary_internal;
  const int i = ai::SoleCuriousAgent(view);
  if (view.algorithm != Algorithm::kDiging)
    throw UnsupportedError("diging attack needs a diging log");
  if (target < 0 || target >= view.graph.m() || target == i ||
      view.w(i, target) == 0.0)
    throw InputError("target is not a neighbor of the curious agent");
  const MessageRecord* ym = ai::Find(view.received, 0, target, i, Channel::kY);
  const MessageRecord* xm = ai::Find(view.received, 1, target, i, Channel::kX);
  if (!ym || !xm) throw InputError("log lacks the round 0/1 messages of the target");
  return {xm->payload, ym->payload / view.w(i, target)};
}

// Rendezvous: grad f_j(x) = 2(x - x_{j,0}), so the anchor follows.
inline Vec RecoverRendezvousAnchor(const DigingEstimate& e) {
  return e.x1 - 0.5 * e.g1;
}

struct AbEstimate {
  std::vector<Vec> series;  // series[t] estimates g_j^{t+1}
  Vec final;
};

// Valid when the curious agent i is the only neighbor of j. Then
// y_j^{t+1} = y_j^t + g_j^{t+1} - g_j^t + m^t with
// m^t = (i -> j tracker message) - (j -> i tracker message), and y_j^0 = g_j^0
// gives g_j^{t+1} - y_j^{t+1} = -(m^0 + ... + m^t).
inline AbEstimate InferAbGradient(const AdversaryView& view, int target,
                                  long horizon) {
  namespace ai = adversary_internal;
  const int i = ai::SoleCuriousAgent(view);
  if (view.algorithm != Algorithm::kAbTv)
    throw UnsupportedError("ab attack needs an ab-tv log");
  if (target < 0 || target >= view.graph.m() || target == i ||
      !view.graph.adjacent(i, target))
    throw InputError("target is not a neighbor of the curious agent");
  if (view.graph.degree(target) != 1)
    throw InputError("target must have the curious agent as its only neighbor");
  if (horizon < 0 || horizon >= view.iterations)
    throw InputError("horizon beyond the logged rounds");
  // Index the tracker messages once.
  std::vector<const MessageRecord*> in(view.iterations, nullptr),
      out(view.iterations, nullptr);
  for (const MessageRecord& m : view.received)
    if (m.sender == target && m.channel == Channel::kY) in[m.k] = &m;
  for (const MessageRecord& m : view.sent)
    if (m.receiver == target && m.channel == Channel::kY) out[m.k] = &m;
  AbEstimate e;
  Vec acc;
  for (long k = 0; k <= horizon; ++k) {
    if (!in[k] || !out[k]) throw InputError("tracker message missing in round " + std::to_string(k));
    if (acc.size() == 0) acc = Vec::Zero(in[k]->payload.size());
    acc += out[k]->payload - in[k]->payload;
    e.series.push_back(-acc);
  }
  e.final = e.series.back();
  return e;
}

struct WitnessResult {
  int target = 0;
  std::map<long, double> zeta;
  std::map<long, Vec> alt_gradient;     // e^{zeta} g_i^k
  std::map<long, double> alt_lambda;    // e^{-zeta} lambda_i^k
  std::map<long, double> realized;      // log(|g_hat| / |g|)
  double max_discrepancy = 0.0;         // relative, over all replayed messages
  double max_zeta_error = 0.0;          // |realized - zeta|
  long messages_compared = 0;
  // Stepsize sums before and after substituting lambda_hat.
  double heterogeneity_sum = 0.0, heterogeneity_sum_alt = 0.0;
  double variation_sum = 0.0, variation_sum_alt = 0.0;
  double weighted_spread_sum = 0.0, weighted_spread_sum_alt = 0.0;
  bool alt_sums_finite = true;
};

namespace adversary_internal {

struct StepsizeSums {
  double heterogeneity = 0.0;   // sum_k sum_{i != j} |lambda_i - lambda_j|
  double variation = 0.0;       // sum_k |lambda^{k+1} - lambda^k|^2
  double weighted_spread = 0.0; // sum_k |lambda^k - mean 1|^2 / mean
};

inline StepsizeSums SumsOf(const std::vector<Vec>& lam) {
  StepsizeSums s;
  for (size_t k = 0; k < lam.size(); ++k) {
    const Vec& l = lam[k];
    for (int a = 0; a < l.size(); ++a)
      for (int b = 0; b < l.size(); ++b)
        if (a != b) s.heterogeneity += std::abs(l(a) - l(b));
    const double mean = l.mean();
    const double dev = (l.array() - mean).matrix().squaredNorm();
    if (dev > 0.0) s.weighted_spread += dev / mean;
    if (k + 1 < lam.size()) s.variation += (lam[k + 1] - l).squaredNorm();
  }
  return s;
}

}  // namespace adversary_internal

// Replays agent i with (e^{zeta} g, e^{-zeta} lambda) in place of (g, lambda)
// and compares every message i sends against the log. Messages from other
// agents are taken from the log, as i would receive them.
inline WitnessResult ConstructWitness(const Trace& tr, int target,
                                      const std::map<long, double>& zeta) {
  namespace ai = adversary_internal;
  if (!IsPdg(tr.algorithm))
    throw UnsupportedError("no witness exists for " + AlgorithmName(tr.algorithm) +
                           ": its messages determine the gradients");
  const int m = tr.topology.graph.m();
  const int i = target;
  if (i < 0 || i >= m) throw InputError("witness target out of range");
  const long K = tr.iterations;
  for (const auto& [k, z] : zeta) {
    if (k < 0 || k >= K) throw ParameterError("zeta index outside the logged rounds");
    if (!std::isfinite(z)) throw ParameterError("zeta must be finite");
  }
  WitnessResult res;
  res.target = i;
  res.zeta = zeta;

  // Alternative ledger for agent i.
  std::vector<double> lam_hat(K + 1);
  std::vector<Vec> g_hat(K + 1);
  for (long k = 0; k <= K; ++k) {
    lam_hat[k] = tr.ledger.lambda[k](i);
    g_hat[k] = tr.ledger.gradients[k].row(i).transpose();
    auto it = zeta.find(k);
    if (it == zeta.end()) continue;
    const double z = it->second;
    const Vec g = g_hat[k];
    lam_hat[k] = std::exp(-z) * lam_hat[k];
    g_hat[k] = std::exp(z) * g;
    res.alt_lambda[k] = lam_hat[k];
    res.alt_gradient[k] = g_hat[k];
    const double gn = g.norm();
    const double realized = gn > 0.0 ? std::log(g_hat[k].norm() / gn) : NAN;
    res.realized[k] = realized;
    if (gn > 0.0)
      res.max_zeta_error = std::max(res.max_zeta_error, std::abs(realized - z));
  }

  const Mat& w = tr.topology.w;
  const bool nds = tr.algorithm == Algorithm::kPdgNds;
  std::vector<int> receivers;
  if (nds) {
    receivers = CommunicationSets::FromSupport(NdsSupport(w, tr.w2)).receivers(i);
  } else {
    receivers = tr.topology.graph.neighbors(i);
  }

  Vec xh = tr.states[0].x.row(i).transpose();
  Vec xh_prev;
  for (long t = 0; t < K; ++t) {
    const Mat& b = tr.ledger.mixing[t];
    const Vec orig_share = tr.ledger.lambda[t](i) * tr.ledger.gradients[t].row(i).transpose();
    Vec share = lam_hat[t] * g_hat[t];
    Vec orig_diff = orig_share;
    if (nds && t >= 1) {
      share -= lam_hat[t - 1] * g_hat[t - 1];
      orig_diff -= tr.ledger.lambda[t - 1](i) *
                   tr.ledger.gradients[t - 1].row(i).transpose();
    }
    auto message = [&](int r) -> Vec {
      if (!nds) return w(r, i) * xh - b(r, i) * share;
      if (t == 0) {
        Vec v = w(r, i) * xh;
        if (r == i) v -= share;
        return v;
      }
      return 2.0 * w(r, i) * xh - tr.w2(r, i) * xh_prev - b(r, i) * share;
    };
    const std::vector<int>& outs =
        (nds && t == 0) ? tr.topology.graph.neighbors(i) : receivers;
    for (int r : outs) {
      const MessageRecord* logged = nullptr;
      for (size_t q = tr.round_begin[t]; q < tr.round_begin[t + 1]; ++q) {
        const MessageRecord& mr = tr.messages[q];
        if (mr.sender == i && mr.receiver == r) {
          logged = &mr;
          break;
        }
      }
      if (!logged) throw InputError("log lacks a message of the target");
      const Vec v = message(r);
      // Scale of the gradient part, so near-cancelling payloads are not
      // judged against their own tiny norm.
      const double bscale =
          (nds && t == 0) ? 0.0 : std::abs(b(r, i)) * orig_diff.norm();
      const double denom = std::max(logged->payload.norm(), bscale);
      const double diff = (v - logged->payload).norm();
      const double rel = denom > 0.0 ? diff / denom : diff;
      res.max_discrepancy = std::max(res.max_discrepancy, rel);
      ++res.messages_compared;
    }
    // Own next state: own message plus what the others sent to i.
    Vec next = message(i);
    for (size_t q = tr.round_begin[t]; q < tr.round_begin[t + 1]; ++q) {
      const MessageRecord& mr = tr.messages[q];
      if (mr.receiver == i) next += mr.payload;
    }
    xh_prev = xh;
    xh = next;
  }

  std::vector<Vec> lam = tr.ledger.lambda;
  const ai::StepsizeSums before = ai::SumsOf(lam);
  for (long k = 0; k <= K; ++k) lam[k](i) = lam_hat[k];
  const ai::StepsizeSums after = ai::SumsOf(lam);
  res.heterogeneity_sum = before.heterogeneity;
  res.heterogeneity_sum_alt = after.heterogeneity;
  res.variation_sum = before.variation;
  res.variation_sum_alt = after.variation;
  res.weighted_spread_sum = before.weighted_spread;
  res.weighted_spread_sum_alt = after.weighted_spread;
  res.alt_sums_finite = std::isfinite(after.heterogeneity) &&
                        std::isfinite(after.variation) &&
                        std::isfinite(after.weighted_spread);
  return res;
}

inline nlohmann::json MessageToJson(const MessageRecord& m) {
  return {{"k", m.k},
          {"sender", m.sender + 1},
          {"receiver", m.receiver + 1},
          {"channel", ChannelName(m.channel)},
          {"payload", VecToJson(m.payload)}};
}

// Serialized view. Ledger data of other agents has no field to live in.
inline nlohmann::json ViewToJson(const AdversaryView& v) {
  nlohmann::json j;
  j["type"] = v.type == AdversaryType::kEavesdropper ? "eavesdropper"
                                                     : "honest-but-curious";
  j["agents"] = nlohmann::json::array();
  for (int a : v.agents) j["agents"].push_back(a + 1);
  j["algorithm"] = AlgorithmName(v.algorithm);
  j["iterations"] = v.iterations;
  j["public"] = {{"W", MatToJson(v.w)}, {"edges", nlohmann::json::array()}};
  for (auto [a, b] : v.graph.edges())
    j["public"]["edges"].push_back({a + 1, b + 1});
  j["received"] = nlohmann::json::array();
  for (const auto& m : v.received) j["received"].push_back(MessageToJson(m));
  j["sent"] = nlohmann::json::array();
  for (const auto& m : v.sent) j["sent"].push_back(MessageToJson(m));
  j["own"] = nlohmann::json::object();
  for (const auto& [a, in] : v.own) {
    nlohmann::json o;
    o["lambda"] = in.lambda;
    o["x"] = nlohmann::json::array();
    for (const Vec& x : in.x) o["x"].push_back(VecToJson(x));
    o["gradient"] = nlohmann::json::array();
    for (const Vec& g : in.gradient) o["gradient"].push_back(VecToJson(g));
    j["own"][std::to_string(a + 1)] = o;
  }
  return j;
}

}  // namespace privdgd

#endif  // PRIVDGD_ADVERSARY_HPP_
