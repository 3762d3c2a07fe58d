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

// Synchronous round engine. Round t maps the state at iteration t to the
// state at t+1 and logs every cross-agent message sent during the round
// under k = t.
//
// PDG-DS   x^{t+1} = W x^t - B^t L^t g^t
// PDG-NDS  x^1 = W x^0 - L^0 g^0,
//          x^{t+1} = 2W x^t - W^2 x^{t-1} - B^{t-1}(L^t g^t - L^{t-1} g^{t-1})
// DGD      x^{t+1} = W x^t - L^t g^t
// EXTRA    x^1 as PDG-NDS, x^{t+1} = W1 x^t - W2 x^{t-1} - (L^t g^t - L^{t-1} g^{t-1})
// DIGing   x^{t+1} = W x^t - L^t y^t, y^{t+1} = W(y^t + g^{t+1} - g^t)
// AB-TV    x^{t+1} = R^t x^t - L^t y^t, y^{t+1} = C^t(y^t + g^{t+1} - g^t)
//
// with L^t = diag(lambda^t) and rows of x, y, g indexed by agent.
//
// For the two PDG variants each agent's next state is the plain sum of the
// messages addressed to it (its own included), so nothing outside the inbox
// reaches the update. PDG-NDS needs {W^2}_ij which is nonzero for two-hop
// pairs; those pairs exchange messages too (see CommunicationSets).

#ifndef PRIVDGD_ENGINE_HPP_
#define PRIVDGD_ENGINE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "privdgd/common.hpp"
#include "privdgd/objectives.hpp"
#include "privdgd/random.hpp"
#include "privdgd/schedules.hpp"
#include "privdgd/topology.hpp"

namespace privdgd {

enum class Algorithm { kPdgDs, kPdgNds, kDgd, kExtra, kDiging, kAbTv };

inline std::string AlgorithmName(Algorithm a) {
  switch (a) {
    case Algorithm::kPdgDs: return "pdg-ds";
    case Algorithm::kPdgNds: return "pdg-nds";
    case Algorithm::kDgd: return "dgd";
    case Algorithm::kExtra: return "extra";
    case Algorithm::kDiging: return "diging";
    case Algorithm::kAbTv: return "ab-tv";
  }
  return "?";
}

inline Algorithm ParseAlgorithm(const std::string& s) {
  for (Algorithm a : {Algorithm::kPdgDs, Algorithm::kPdgNds, Algorithm::kDgd,
                      Algorithm::kExtra, Algorithm::kDiging, Algorithm::kAbTv})
    if (AlgorithmName(a) == s) return a;
  throw UnsupportedError("unsupported algorithm '" + s + "'");
}

inline bool IsPdg(Algorithm a) {
  return a == Algorithm::kPdgDs || a == Algorithm::kPdgNds;
}

inline bool HasTwoChannels(Algorithm a) {
  return a == Algorithm::kDiging || a == Algorithm::kAbTv;
}

// kStandard: W1 = I + W, W2 = (I + W)/2.  kSquared: W1 = 2W, W2 = W^2.
enum class ExtraVariant { kStandard, kSquared };

enum class Channel { kX, kY };

inline const char* ChannelName(Channel c) {
  return c == Channel::kX ? "x" : "y";
}

struct MessageRecord {
  long k = 0;
  int sender = 0;
  int receiver = 0;
  Channel channel = Channel::kX;
  Vec payload;
};

struct NetworkState {
  long k = 0;
  Mat x;
  Mat x_prev;  // PDG-NDS / EXTRA; empty at k = 0 and for other algorithms
  Mat y;       // DIGing / AB-TV tracker, or the PDG-NDS diagnostic W x^k - x^{k+1}
  Mat g_prev;  // gradients at x_prev when the recursion needs them
};

// Ground truth that no adversary view may contain.
struct Ledger {
  std::vector<Vec> lambda;     // lambda^0 .. lambda^K
  std::vector<Mat> mixing;     // per round: B used (PDG), C^t (AB-TV); else empty
  std::vector<Mat> row_mixing; // per round: R^t (AB-TV only)
  std::vector<Mat> gradients;  // g^0 .. g^K, g^k evaluated at x^k
};

struct Trace {
  Algorithm algorithm = Algorithm::kPdgDs;
  ExtraVariant extra_variant = ExtraVariant::kStandard;
  MixingMode mixing_mode = MixingMode::kFlat;
  long iterations = 0;
  uint64_t master_seed = 0;
  Problem problem;
  Topology topology;
  Mat w1, w2;  // EXTRA weights, or W^2 for PDG-NDS
  std::vector<NetworkState> states;  // k = 0 .. K
  std::vector<MessageRecord> messages;
  std::vector<size_t> round_begin;  // messages of round t: [round_begin[t], round_begin[t+1])
  Ledger ledger;

  size_t RoundCount() const { return round_begin.empty() ? 0 : round_begin.size() - 1; }
};

// Directed communication lists. comm[i] holds every j != i that sends to i.
struct CommunicationSets {
  std::vector<std::vector<int>> senders;  // ascending

  static CommunicationSets FromSupport(const Mat& support) {
    CommunicationSets c;
    const int m = static_cast<int>(support.rows());
    c.senders.assign(m, {});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (i != j && support(i, j) != 0.0) c.senders[i].push_back(j);
    return c;
  }

  // Receivers of j, ascending.
  std::vector<int> receivers(int j) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(senders.size()); ++i)
      for (int s : senders[i])
        if (s == j) out.push_back(i);
    return out;
  }
};

inline Mat NdsSupport(const Mat& w, const Mat& w2) {
  return (w.array().abs() + w2.array().abs()).matrix();
}

struct StepResult {
  Mat x_next;
  std::vector<MessageRecord> messages;
};

namespace engine_internal {

// Receiver i's update: sum of payloads in sender order (own message included
// at its position), fixed so results are bit-reproducible.
struct Inbox {
  explicit Inbox(int m, int d) : sum(Mat::Zero(m, d)) {}
  void Deliver(int receiver, const Vec& payload) {
    sum.row(receiver) += payload.transpose();
  }
  Mat sum;
};

}  // namespace engine_internal

// One PDG-DS round. Agent j sends v_ij = w_ij x_j - b_ij lambda_j g_j to each
// i in its closed neighborhood.
inline StepResult PdgDsStep(long k, const Mat& x, const Mat& w, const Mat& b,
                            const Vec& lambda, const Mat& g,
                            const Graph& graph) {
  const int m = static_cast<int>(x.rows()), d = static_cast<int>(x.cols());
  if (w.rows() != m || b.rows() != m || lambda.size() != m || g.rows() != m ||
      g.cols() != d)
    throw InputError("pdg-ds step: dimension mismatch");
  StepResult out;
  engine_internal::Inbox inbox(m, d);
  // Sender-major loop visits senders in ascending order for every receiver.
  for (int j = 0; j < m; ++j) {
    const Vec xj = x.row(j).transpose();
    const Vec share = lambda(j) * g.row(j).transpose();
    for (int i : graph.closed_neighborhood(j)) {
      Vec v = w(i, j) * xj - b(i, j) * share;
      inbox.Deliver(i, v);
      if (i != j) out.messages.push_back({k, j, i, Channel::kX, std::move(v)});
    }
  }
  out.x_next = std::move(inbox.sum);
  return out;
}

// PDG-NDS start: x^1 = W x^0 - L^0 g^0. Agent j sends w_ij x_j^0.
inline StepResult PdgNdsInit(const Mat& x0, const Mat& w, const Vec& lambda0,
                             const Mat& g0, const Graph& graph) {
  const int m = static_cast<int>(x0.rows()), d = static_cast<int>(x0.cols());
  StepResult out;
  engine_internal::Inbox inbox(m, d);
  for (int j = 0; j < m; ++j) {
    const Vec xj = x0.row(j).transpose();
    for (int i : graph.closed_neighborhood(j)) {
      Vec v = w(i, j) * xj;
      if (i == j) v -= lambda0(j) * g0.row(j).transpose();
      inbox.Deliver(i, v);
      if (i != j) out.messages.push_back({0, j, i, Channel::kX, std::move(v)});
    }
  }
  out.x_next = std::move(inbox.sum);
  return out;
}

// PDG-NDS round t >= 1 with the mixing matrix drawn for t-1. Agent j sends
// 2 w_ij x_j^t - {W^2}_ij x_j^{t-1} - b_ij (lambda_j^t g_j^t - lambda_j^{t-1} g_j^{t-1})
// over supp(W) + supp(W^2).
inline StepResult PdgNdsStep(long t, const Mat& x, const Mat& x_prev,
                             const Mat& w, const Mat& w2, const Mat& b,
                             const Vec& lambda, const Vec& lambda_prev,
                             const Mat& g, const Mat& g_prev,
                             const CommunicationSets& comm) {
  const int m = static_cast<int>(x.rows()), d = static_cast<int>(x.cols());
  if (t < 1) throw InputError("pdg-nds two-step round needs t >= 1");
  if (x_prev.rows() != m || b.rows() != m || g_prev.rows() != m)
    throw InputError("pdg-nds step: dimension mismatch");
  StepResult out;
  engine_internal::Inbox inbox(m, d);
  std::vector<std::vector<int>> recv(m);
  for (int i = 0; i < m; ++i)
    for (int j : comm.senders[i]) recv[j].push_back(i);
  for (int j = 0; j < m; ++j) {
    const Vec share = lambda(j) * g.row(j).transpose() -
                      lambda_prev(j) * g_prev.row(j).transpose();
    const Vec xj = x.row(j).transpose();
    const Vec xpj = x_prev.row(j).transpose();
    std::vector<int> targets = recv[j];
    targets.insert(std::lower_bound(targets.begin(), targets.end(), j), j);
    for (int i : targets) {
      Vec v = 2.0 * w(i, j) * xj - w2(i, j) * xpj - b(i, j) * share;
      inbox.Deliver(i, v);
      if (i != j) out.messages.push_back({t, j, i, Channel::kX, std::move(v)});
    }
  }
  out.x_next = std::move(inbox.sum);
  return out;
}

// Raw state broadcast used by the baselines; receivers apply their weights.
inline void LogStateBroadcast(long k, const Mat& x, const CommunicationSets& comm,
                              Channel ch, std::vector<MessageRecord>* log) {
  for (int j = 0; j < static_cast<int>(x.rows()); ++j)
    for (int i : comm.receivers(j))
      log->push_back({k, j, i, ch, x.row(j).transpose()});
}

inline StepResult DgdStep(long k, const Mat& x, const Mat& w, const Vec& lambda,
                          const Mat& g, const CommunicationSets& comm) {
  StepResult out;
  LogStateBroadcast(k, x, comm, Channel::kX, &out.messages);
  out.x_next = w * x - lambda.asDiagonal() * g;
  return out;
}

struct TrackingResult {
  Mat x_next;
  Mat y_next;
  Mat g_next;
  std::vector<MessageRecord> messages;
};

// One DIGing (r = w, c = w) or AB-TV round: x-update, then the gradient at
// the new point, then the tracker. Payloads: raw x_j, and c_ij (y_j + g_j'
// - g_j) on the y channel.
inline TrackingResult TrackingStep(long k, const Mat& x, const Mat& y,
                                   const Mat& g, const Mat& r, const Mat& c,
                                   const Vec& lambda, const Problem& problem,
                                   const CommunicationSets& comm) {
  TrackingResult out;
  LogStateBroadcast(k, x, comm, Channel::kX, &out.messages);
  out.x_next = r * x - lambda.asDiagonal() * y;
  out.g_next = problem.Gradients(out.x_next);
  const Mat carried = y + out.g_next - g;
  const int m = static_cast<int>(x.rows());
  out.y_next = Mat::Zero(m, x.cols());
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      if (c(i, j) == 0.0) continue;
      Vec v = c(i, j) * carried.row(j).transpose();
      out.y_next.row(i) += v.transpose();
      if (i != j) out.messages.push_back({k, j, i, Channel::kY, std::move(v)});
    }
  }
  return out;
}

struct RunOptions {
  Algorithm algorithm = Algorithm::kPdgDs;
  long iterations = 100;
  uint64_t master_seed = 1;
  MixingMode mixing = MixingMode::kFlat;
  ExtraVariant extra_variant = ExtraVariant::kStandard;
  std::optional<Mat> x0;  // overrides the seeded initial states
};

inline constexpr double kDivergenceBound = 1e12;

inline Mat InitialStates(int m, int d, uint64_t master_seed) {
  Mat x(m, d);
  for (int i = 0; i < m; ++i) {
    Stream s(DeriveSeed(master_seed, "initial-state", i));
    for (int c = 0; c < d; ++c) x(i, c) = s.Uniform(-1.0, 1.0);
  }
  return x;
}

namespace engine_internal {

inline void GuardFinite(const Mat& a, long round) {
  if (!a.allFinite() || (a.size() && a.cwiseAbs().maxCoeff() > kDivergenceBound))
    throw DivergenceError("state diverged in round " + std::to_string(round),
                          round);
}

inline void Append(Trace* tr, std::vector<MessageRecord>&& msgs) {
  for (auto& m : msgs) tr->messages.push_back(std::move(m));
  tr->round_begin.push_back(tr->messages.size());
}

}  // namespace engine_internal

inline Trace Run(const Problem& problem, const Topology& topo,
                 const StepsizeSchedule& schedule, const RunOptions& opt) {
  namespace ei = engine_internal;
  const int m = topo.graph.m();
  const int d = problem.d;
  if (problem.m != m || schedule.m() != m)
    throw InputError("agent counts of problem, topology and schedule differ");
  if (opt.iterations < 1) throw InputError("iterations must be >= 1");
  const long K = opt.iterations;

  Trace tr;
  tr.algorithm = opt.algorithm;
  tr.extra_variant = opt.extra_variant;
  tr.mixing_mode = opt.mixing;
  tr.iterations = K;
  tr.master_seed = opt.master_seed;
  tr.problem = problem;
  tr.topology = topo;
  tr.states.reserve(K + 1);
  tr.round_begin.push_back(0);

  const Mat& w = topo.w;
  const Mat eye = Mat::Identity(m, m);
  const auto mix_keys = AgentKeys(DeriveSeed(opt.master_seed, "mixing"), "agent", m);
  const auto row_keys = AgentKeys(DeriveSeed(opt.master_seed, "row-mixing"), "agent", m);

  Mat x = opt.x0 ? *opt.x0 : InitialStates(m, d, opt.master_seed);
  if (x.rows() != m || x.cols() != d) throw InputError("x0 has wrong shape");
  for (long k = 0; k <= K; ++k) tr.ledger.lambda.push_back(schedule.At(k));
  const auto& lam = tr.ledger.lambda;

  Mat g = problem.Gradients(x);
  tr.ledger.gradients.push_back(g);
  tr.states.push_back({0, x, Mat(), Mat(), Mat()});

  switch (opt.algorithm) {
    case Algorithm::kPdgDs: {
      for (long t = 0; t < K; ++t) {
        Mat b = SampleMixingMatrix(topo.graph, mix_keys, t, opt.mixing);
        StepResult s = PdgDsStep(t, x, w, b, lam[t], g, topo.graph);
        ei::GuardFinite(s.x_next, t);
        tr.ledger.mixing.push_back(std::move(b));
        ei::Append(&tr, std::move(s.messages));
        x = std::move(s.x_next);
        g = problem.Gradients(x);
        tr.ledger.gradients.push_back(g);
        tr.states.push_back({t + 1, x, Mat(), Mat(), Mat()});
      }
      break;
    }
    case Algorithm::kPdgNds:
    case Algorithm::kExtra: {
      const bool nds = opt.algorithm == Algorithm::kPdgNds;
      if (nds || opt.extra_variant == ExtraVariant::kSquared) {
        tr.w1 = 2.0 * w;
        tr.w2 = w * w;
      } else {
        tr.w1 = eye + w;
        tr.w2 = 0.5 * (eye + w);
      }
      const CommunicationSets comm =
          CommunicationSets::FromSupport(NdsSupport(tr.w1, tr.w2));
      Mat x_prev, g_prev;
      for (long t = 0; t < K; ++t) {
        StepResult s;
        Mat b;
        if (t == 0) {
          if (nds) {
            s = PdgNdsInit(x, w, lam[0], g, topo.graph);
          } else {
            LogStateBroadcast(0, x, comm, Channel::kX, &s.messages);
            s.x_next = w * x - lam[0].asDiagonal() * g;
          }
        } else if (nds) {
          b = SampleMixingMatrix(topo.graph, mix_keys, t - 1, opt.mixing);
          s = PdgNdsStep(t, x, x_prev, w, tr.w2, b, lam[t], lam[t - 1], g,
                         g_prev, comm);
        } else {
          LogStateBroadcast(t, x, comm, Channel::kX, &s.messages);
          s.x_next = tr.w1 * x - tr.w2 * x_prev -
                     (lam[t].asDiagonal() * g - lam[t - 1].asDiagonal() * g_prev);
        }
        ei::GuardFinite(s.x_next, t);
        tr.ledger.mixing.push_back(std::move(b));
        ei::Append(&tr, std::move(s.messages));
        x_prev = std::move(x);
        g_prev = std::move(g);
        x = std::move(s.x_next);
        g = problem.Gradients(x);
        tr.ledger.gradients.push_back(g);
        tr.states.push_back({t + 1, x, x_prev, Mat(), g_prev});
      }
      if (nds) {
        // Diagnostic tracker y^k = W x^k - x^{k+1}, defined for k < K.
        for (long k = 0; k < K; ++k)
          tr.states[k].y = w * tr.states[k].x - tr.states[k + 1].x;
      }
      break;
    }
    case Algorithm::kDgd: {
      const CommunicationSets comm = CommunicationSets::FromSupport(w);
      for (long t = 0; t < K; ++t) {
        StepResult s = DgdStep(t, x, w, lam[t], g, comm);
        ei::GuardFinite(s.x_next, t);
        tr.ledger.mixing.push_back(Mat());
        ei::Append(&tr, std::move(s.messages));
        x = std::move(s.x_next);
        g = problem.Gradients(x);
        tr.ledger.gradients.push_back(g);
        tr.states.push_back({t + 1, x, Mat(), Mat(), Mat()});
      }
      break;
    }
    case Algorithm::kDiging:
    case Algorithm::kAbTv: {
      const bool ab = opt.algorithm == Algorithm::kAbTv;
      const CommunicationSets comm = CommunicationSets::FromSupport(w);
      Mat y = g;
      tr.states[0].y = y;
      for (long t = 0; t < K; ++t) {
        Mat r = w, c = w;
        if (ab) {
          r = SampleRowStochastic(topo.graph, row_keys, t);
          c = SampleMixingMatrix(topo.graph, mix_keys, t, MixingMode::kFlat);
        }
        TrackingResult s = TrackingStep(t, x, y, g, r, c, lam[t], problem, comm);
        ei::GuardFinite(s.x_next, t);
        ei::GuardFinite(s.y_next, t);
        if (ab) {
          tr.ledger.mixing.push_back(std::move(c));
          tr.ledger.row_mixing.push_back(std::move(r));
        } else {
          tr.ledger.mixing.push_back(Mat());
        }
        ei::Append(&tr, std::move(s.messages));
        x = std::move(s.x_next);
        y = std::move(s.y_next);
        g = std::move(s.g_next);
        tr.ledger.gradients.push_back(g);
        tr.states.push_back({t + 1, x, Mat(), y, Mat()});
      }
      break;
    }
  }
  return tr;
}

// Messages of round t.
inline std::vector<const MessageRecord*> RoundMessages(const Trace& tr, long t) {
  std::vector<const MessageRecord*> out;
  for (size_t q = tr.round_begin[t]; q < tr.round_begin[t + 1]; ++q)
    out.push_back(&tr.messages[q]);
  return out;
}

}  // namespace privdgd

#endif  // PRIVDGD_ENGINE_HPP_
