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


#include <cmath>
#include <map>
#include <set>
#include <tuple>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "privdgd/adversary.hpp"
#include "privdgd/random.hpp"

namespace privdgd {
namespace {

Trace RunWith(Algorithm a, const Problem& p, const Topology& t, const StepsizeSchedule& s,
              long K, uint64_t seed = 1) {
  RunOptions o;
  o.algorithm = a;
  o.iterations = K;
  o.master_seed = seed;
  return Run(p, t, s, o);
}

Problem Rendezvous1d(double a, double b) { return MakeRendezvous({Vec::Constant(1, a), Vec::Constant(1, b)}); }

TEST(DigingAttackTest, RecoversGradientExactly) {
  const Problem p = GenerateSensingInstance(5, 3, 2, 0.1, 9);
  const Topology t = Topology::Metropolis(PresetGraph("chorded5", 5));
  const Trace tr = RunWith(Algorithm::kDiging, p, t, StepsizeSchedule::ConstantHomogeneous(5, 0.01), 10);
  for (int i = 0; i < 5; ++i) {
    const AdversaryView v = ProjectView(tr, AdversaryType::kHonestButCurious, i);
    for (int j : t.graph.neighbors(i)) {
      const DigingEstimate e = InferDigingGradient(v, j);
      EXPECT_LE((e.g1 - tr.ledger.gradients[1].row(j).transpose()).norm(), 1e-12);
      EXPECT_LE((e.x1 - tr.states[1].x.row(j).transpose()).norm(), 0.0);
    }
  }
}

TEST(DigingAttackTest, RendezvousAnchor) {
  const Problem p = MakeRendezvous({(Vec(2) << 0, 1).finished(), (Vec(2) << 4, -2).finished()});
  const Topology t = Topology::Metropolis(CompleteGraph(2));
  const Trace tr = RunWith(Algorithm::kDiging, p, t, StepsizeSchedule::ConstantHomogeneous(2, 0.05), 50);
  const AdversaryView v = ProjectView(tr, AdversaryType::kHonestButCurious, 0);
  const Vec anchor = RecoverRendezvousAnchor(InferDigingGradient(v, 1));
  EXPECT_LE((anchor - Vec((Vec(2) << 4, -2).finished())).norm(), 1e-10);
}

TEST(DigingAttackTest, HandcraftedView) {
  AdversaryView v;
  v.type = AdversaryType::kHonestButCurious;
  v.agents = {0};
  v.algorithm = Algorithm::kDiging;
  v.iterations = 2;
  v.graph = CompleteGraph(2);
  v.w = Mat::Constant(2, 2, 0.5);
  v.received.push_back({0, 1, 0, Channel::kY, (Vec(2) << 3, -1).finished()});
  v.received.push_back({1, 1, 0, Channel::kX, (Vec(2) << 7, 7).finished()});
  const DigingEstimate e = InferDigingGradient(v, 1);
  EXPECT_EQ(e.g1, (Vec(2) << 6, -2).finished());
  EXPECT_EQ(e.x1, (Vec(2) << 7, 7).finished());
  v.received.pop_back();
  EXPECT_THROW(InferDigingGradient(v, 1), InputError);
}

TEST(DigingAttackTest, Preconditions) {
  const Problem p = GenerateSensingInstance(3, 3, 2, 0.1, 9);
  const Topology t = Topology::Metropolis(PathGraph(3));
  const Trace tr = RunWith(Algorithm::kDiging, p, t, StepsizeSchedule::ConstantHomogeneous(3, 0.01), 5);
  const AdversaryView v = ProjectView(tr, AdversaryType::kHonestButCurious, 0);
  EXPECT_THROW(InferDigingGradient(v, 2), InputError);  // not a neighbor
  const Trace ds = RunWith(Algorithm::kPdgDs, p, t, StepsizeSchedule::DiminishingHeterogeneous(3, 1), 5);
  EXPECT_THROW(InferDigingGradient(ProjectView(ds, AdversaryType::kHonestButCurious, 0), 1),
               UnsupportedError);
}

double AbFinal(const Problem& p, long K, double lam, Vec* exact, double* identity_err) {
  const Topology t = Topology::Metropolis(PathGraph(2));
  const Trace tr = RunWith(Algorithm::kAbTv, p, t, StepsizeSchedule::ConstantHomogeneous(2, lam), K);
  const AdversaryView v = ProjectView(tr, AdversaryType::kHonestButCurious, 0);
  const AbEstimate e = InferAbGradient(v, 1, K - 1);
  *identity_err = 0.0;
  for (long s = 0; s < K; ++s) {
    const Vec truth = tr.ledger.gradients[s + 1].row(1) - tr.states[s + 1].y.row(1);
    *identity_err = std::max(*identity_err, (e.series[s] - truth).norm());
  }
  const Optimum opt = ComputeOptimum(p);
  *exact = p.Gradient(1, opt.theta_star);
  return (e.final - *exact).norm();
}

TEST(AbAttackTest, TwoAgentRendezvous) {
  Vec exact;
  double id = 0;
  const double err = AbFinal(Rendezvous1d(0, 4), 20000, 0.005, &exact, &id);
  EXPECT_NEAR(exact(0), -4.0, 1e-12);
  EXPECT_LE(err / 4.0, 1e-3);
  EXPECT_LE(id, 1e-9);
}

TEST(AbAttackTest, SymmetricAnchorsGiveZero) {
  Vec exact;
  double id = 0;
  const double err = AbFinal(Rendezvous1d(2, 2), 20000, 0.005, &exact, &id);
  EXPECT_LE(exact.norm(), 1e-12);
  EXPECT_LE(err, 1e-6);
  EXPECT_LE(id, 1e-9);
}

TEST(AbAttackTest, QuadraticSensing) {
  Vec exact;
  double id = 0;
  const Problem p = GenerateSensingInstance(2, 3, 2, 0.1, 21);
  const double err = AbFinal(p, 20000, 0.005, &exact, &id);
  EXPECT_GT(exact.norm(), 1e-3);
  EXPECT_LE(err / exact.norm(), 1e-3);
  EXPECT_LE(id, 1e-9);
}

TEST(AbAttackTest, NeedsLeafTarget) {
  const Problem p = GenerateSensingInstance(3, 3, 2, 0.1, 9);
  const Topology t = Topology::Metropolis(CompleteGraph(3));
  const Trace tr = RunWith(Algorithm::kAbTv, p, t, StepsizeSchedule::ConstantHomogeneous(3, 0.01), 10);
  const AdversaryView v = ProjectView(tr, AdversaryType::kHonestButCurious, 0);
  EXPECT_THROW(InferAbGradient(v, 1, 5), InputError);
  const Topology path = Topology::Metropolis(PathGraph(3));
  const Trace tp = RunWith(Algorithm::kAbTv, p, path, StepsizeSchedule::ConstantHomogeneous(3, 0.01), 10);
  const AdversaryView vp = ProjectView(tp, AdversaryType::kHonestButCurious, 1);
  EXPECT_NO_THROW(InferAbGradient(vp, 0, 9));
  EXPECT_THROW(InferAbGradient(vp, 0, 10), InputError);
}

Trace DsTrace(long K = 40) {
  const Problem p = GenerateSensingInstance(5, 3, 2, 0.1, 11);
  const Topology t = Topology::Metropolis(PresetGraph("chorded5", 5));
  return RunWith(Algorithm::kPdgDs, p, t, StepsizeSchedule::DiminishingHeterogeneous(5, 11, 0.05), K, 11);
}

Trace NdsTrace(long K = 40) {
  const Problem p = GenerateSensingInstance(5, 3, 2, 0.1, 12);
  const Topology t = Topology::Metropolis(PresetGraph("chorded5", 5));
  return RunWith(Algorithm::kPdgNds, p, t, StepsizeSchedule::NondiminishingHeterogeneous(5, 0.01, 12), K, 12);
}

TEST(WitnessTest, ZeroPerturbationIsTheTrace) {
  const Trace tr = DsTrace();
  const WitnessResult w = ConstructWitness(tr, 2, {{3, 0.0}});
  // Replay re-associates the sums, so only rounding separates it from the log.
  EXPECT_LE(w.max_discrepancy, 1e-15);
  EXPECT_EQ(w.max_zeta_error, 0.0);
  EXPECT_GT(w.messages_compared, 0);
}

TEST(WitnessTest, DiminishingSinglePerturbation) {
  const Trace tr = DsTrace();
  const WitnessResult w = ConstructWitness(tr, 2, {{5, 2.0}});
  EXPECT_LE(w.max_discrepancy, 1e-12);
  EXPECT_LE(w.max_zeta_error, 1e-14);
  EXPECT_NEAR(w.realized.at(5), 2.0, 1e-14);
  const Vec g = tr.ledger.gradients[5].row(2).transpose();
  EXPECT_LE((w.alt_gradient.at(5) - std::exp(2.0) * g).norm(), 1e-12 * g.norm() * std::exp(2.0));
  EXPECT_NEAR(w.alt_lambda.at(5), std::exp(-2.0) * tr.ledger.lambda[5](2), 1e-15);
  EXPECT_TRUE(w.alt_sums_finite);
}

TEST(WitnessTest, NondiminishingAdjacentRounds) {
  const Trace tr = NdsTrace();
  const WitnessResult w = ConstructWitness(tr, 0, {{7, 1.0}, {8, -3.0}});
  EXPECT_LE(w.max_discrepancy, 1e-12);
  EXPECT_LE(w.max_zeta_error, 1e-14);
  EXPECT_TRUE(w.alt_sums_finite);
  EXPECT_TRUE(std::isfinite(w.variation_sum_alt));
  EXPECT_TRUE(std::isfinite(w.heterogeneity_sum_alt));
}

TEST(WitnessTest, RandomPerturbationsEveryTarget) {
  const Trace ds = DsTrace(60), nds = NdsTrace(60);
  Stream rng(DeriveSeed(99, "zeta"));
  for (const Trace* tr : {&ds, &nds}) {
    for (int target = 0; target < 5; ++target) {
      std::map<long, double> z;
      for (int q = 0; q < 4; ++q) z[static_cast<long>(rng.NextU64() % 60)] = rng.Uniform(-3.0, 3.0);
      const WitnessResult w = ConstructWitness(*tr, target, z);
      EXPECT_LE(w.max_discrepancy, 1e-12);
      EXPECT_LE(w.max_zeta_error, 1e-14);
    }
  }
}

TEST(WitnessTest, BaselinesHaveNoWitness) {
  const Problem p = GenerateSensingInstance(3, 3, 2, 0.1, 9);
  const Topology t = Topology::Metropolis(PathGraph(3));
  for (Algorithm a : {Algorithm::kDgd, Algorithm::kDiging, Algorithm::kAbTv, Algorithm::kExtra}) {
    const Trace tr = RunWith(a, p, t, StepsizeSchedule::ConstantHomogeneous(3, 0.01), 5);
    EXPECT_THROW(ConstructWitness(tr, 0, {{1, 1.0}}), UnsupportedError);
  }
  const Trace ds = DsTrace(10);
  EXPECT_THROW(ConstructWitness(ds, 0, {{10, 1.0}}), ParameterError);
  EXPECT_THROW(ConstructWitness(ds, 0, {{1, INFINITY}}), ParameterError);
}

TEST(ViewTest, EavesdropperAndCuriousOnPathThree) {
  const Problem p = GenerateSensingInstance(3, 3, 2, 0.1, 9);
  const Topology t = Topology::Metropolis(PathGraph(3));
  const long K = 30;
  const Trace tr = RunWith(Algorithm::kPdgDs, p, t, StepsizeSchedule::DiminishingHeterogeneous(3, 1), K);
  const AdversaryView e = ProjectView(tr, AdversaryType::kEavesdropper);
  EXPECT_EQ(e.received.size(), static_cast<size_t>(4 * K));
  EXPECT_TRUE(e.own.empty());
  const AdversaryView c = ProjectView(tr, AdversaryType::kHonestButCurious, 0);
  EXPECT_EQ(c.received.size(), static_cast<size_t>(K));
  for (const MessageRecord& m : c.received) {
    EXPECT_EQ(m.receiver, 0);
    EXPECT_EQ(m.sender, 1);
  }
  EXPECT_EQ(c.own.size(), 1u);
  EXPECT_EQ(c.own.at(0).lambda.size(), static_cast<size_t>(K + 1));
}

TEST(ViewTest, JsonCarriesNoForeignInternals) {
  const Trace tr = DsTrace(8);
  const nlohmann::json j = ViewToJson(ProjectView(tr, AdversaryType::kHonestButCurious, 1));
  std::set<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.insert(it.key());
  for (const char* banned : {"ledger", "lambda", "gradients", "mixing", "states"})
    EXPECT_EQ(keys.count(banned), 0u) << banned;
  // The only internals present belong to agent 2 (1-based).
  ASSERT_TRUE(j.contains("own"));
  EXPECT_EQ(j["own"].size(), 1u);
  EXPECT_TRUE(j["own"].contains("2"));
  for (const auto& m : j["received"]) EXPECT_EQ(m["receiver"], 2);
}

TEST(ViewTest, UnionOfCuriousAgents) {
  const Trace tr = DsTrace(8);
  const AdversaryView a = ProjectView(tr, AdversaryType::kHonestButCurious, 0);
  const AdversaryView b = ProjectView(tr, AdversaryType::kHonestButCurious, 3);
  const AdversaryView u = UnionViews({a, b});
  EXPECT_EQ(u.agents.size(), 2u);
  EXPECT_TRUE(u.IsCurious(0) && u.IsCurious(3) && !u.IsCurious(1));
  EXPECT_EQ(u.own.size(), 2u);
  std::set<std::tuple<long, int, int, int>> want;
  for (const auto* v : {&a, &b})
    for (const MessageRecord& m : v->received)
      want.insert({m.k, m.sender, m.receiver, static_cast<int>(m.channel)});
  EXPECT_EQ(u.received.size(), want.size());
}

}  // namespace
}  // namespace privdgd
