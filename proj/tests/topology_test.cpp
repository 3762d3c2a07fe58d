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


#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "privdgd/topology.hpp"

namespace privdgd {
namespace {

double MaxStochasticError(const Mat& w) {
  const double rows = (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double cols = (w.colwise().sum().array() - 1.0).abs().maxCoeff();
  return std::max(rows, cols);
}

TEST(MetropolisTest, CompleteTwoIsUniformAverage) {
  const Topology t = Topology::Metropolis(CompleteGraph(2));
  EXPECT_DOUBLE_EQ(t.w(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(t.w(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(t.w(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(t.w(1, 1), 0.5);
  EXPECT_NEAR(t.spectral.eta, 0.0, 1e-15);
  // W - I has eigenvalues 0 and -1.
  EXPECT_NEAR(t.spectral.r, 1.0, 1e-12);
}

TEST(MetropolisTest, PathThreeByFormula) {
  const Topology t = Topology::Metropolis(PathGraph(3));
  Mat expected(3, 3);
  expected << 2.0 / 3, 1.0 / 3, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 1.0 / 3, 2.0 / 3;
  EXPECT_LE((t.w - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE(MaxStochasticError(t.w), 1e-12);
}

TEST(MetropolisTest, PathThreeEtaIsTwoThirds) {
  // W has eigenvalues 1, 2/3, 0 with eigenvectors 1, (1,0,-1), (1,-2,1);
  // removing the mean kills the eigenvalue 1.
  const Topology t = Topology::Metropolis(PathGraph(3));
  EXPECT_NEAR(t.spectral.eta, 2.0 / 3.0, 1e-12);
  Vec v(3);
  v << 1, 0, -1;
  EXPECT_LE((t.w * v - 2.0 / 3.0 * v).norm(), 1e-15);
  v << 1, -2, 1;
  EXPECT_LE((t.w * v).norm(), 1e-15);
  // r = |W - I| = 1 - 0 = 1.
  EXPECT_NEAR(t.spectral.r, 1.0, 1e-12);
}

TEST(MetropolisTest, SingleAgent) {
  const Topology t = Topology::Metropolis(Graph::FromEdges(1, {}));
  ASSERT_EQ(t.w.rows(), 1);
  EXPECT_DOUBLE_EQ(t.w(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(t.spectral.eta, 0.0);
  EXPECT_DOUBLE_EQ(t.spectral.r, 0.0);
}

TEST(MetropolisTest, InvariantsOnPresets) {
  for (const char* name : {"path", "ring", "star", "complete"}) {
    for (int m = 2; m <= 9; ++m) {
      const Graph g = PresetGraph(name, m);
      const Topology t = Topology::Metropolis(g);
      SCOPED_TRACE(std::string(name) + " m=" + std::to_string(m));
      EXPECT_LE(MaxStochasticError(t.w), 1e-12);
      EXPECT_LE((t.w - t.w.transpose()).cwiseAbs().maxCoeff(), 0.0);
      EXPECT_LT(t.spectral.eta, 1.0);
      EXPECT_GE(t.spectral.r, 0.0);
      EXPECT_LE(t.spectral.r, 2.0);
      for (int i = 0; i < m; ++i) {
        EXPECT_GT(t.w(i, i), 0.0);
        for (int j = 0; j < m; ++j) {
          if (i == j) continue;
          EXPECT_EQ(t.w(i, j) > 0.0, g.adjacent(i, j));
          EXPECT_GE(t.w(i, j), 0.0);
        }
      }
    }
  }
}

TEST(MetropolisTest, StandInFiveNodeGraph) {
  const Graph g = PresetGraph("chorded5", 5);
  EXPECT_EQ(g.edges().size(), 7u);
  const Graph from_file =
      LoadEdgeList(std::string(PRIVDGD_SOURCE_DIR) + "/assets/topologies/chorded5.edges", 5);
  EXPECT_EQ(from_file.edges(), g.edges());
}

TEST(SpectralTest, MatchesEigenvaluesForSymmetricW) {
  const Topology t = Topology::Metropolis(RingGraph(6));
  Eigen::SelfAdjointEigenSolver<Mat> es(t.w);
  // Ring: eigenvalue 1 for the mean, the rest below 1 in magnitude.
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + 6);
  std::sort(ev.begin(), ev.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
  EXPECT_NEAR(ev[0], 1.0, 1e-12);
  EXPECT_NEAR(t.spectral.eta, std::abs(ev[1]), 1e-12);
}

TEST(SpectralTest, PermutationEquivariance) {
  std::mt19937 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 4 + trial % 5;
    // Random connected graph: a random spanning path plus random chords.
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), gen);
    std::set<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < m; ++i)
      edges.insert({std::min(order[i], order[i + 1]), std::max(order[i], order[i + 1])});
    std::uniform_int_distribution<int> pick(0, m - 1);
    for (int c = 0; c < m; ++c) {
      const int a = pick(gen), b = pick(gen);
      if (a != b) edges.insert({std::min(a, b), std::max(a, b)});
    }
    const Graph g = Graph::FromEdges(m, {edges.begin(), edges.end()});
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    const Topology a = Topology::Metropolis(g);
    const Topology b = Topology::Metropolis(g.Permuted(perm));
    EXPECT_NEAR(a.spectral.eta, b.spectral.eta, 1e-12);
    EXPECT_NEAR(a.spectral.r, b.spectral.r, 1e-12);
  }
}

TEST(SpectralTest, NonSymmetricCustomWUsesSvd) {
  // Doubly stochastic but not symmetric.
  Mat w(3, 3);
  w << 0.5, 0.3, 0.2, 0.2, 0.5, 0.3, 0.3, 0.2, 0.5;
  const Topology t = Topology::Custom(w);
  Eigen::JacobiSVD<Mat> svd(w - Mat::Constant(3, 3, 1.0 / 3));
  EXPECT_NEAR(t.spectral.eta, svd.singularValues()(0), 1e-12);
}

TEST(GraphTest, RejectsBadInput) {
  EXPECT_THROW(Graph::FromEdges(3, {{0, 1}}), TopologyError);          // disconnected
  EXPECT_THROW(Graph::FromEdges(3, {{0, 1}, {1, 1}}), TopologyError);  // self-loop
  EXPECT_THROW(Graph::FromEdges(3, {{0, 1}, {1, 0}, {1, 2}}), TopologyError);
  EXPECT_THROW(Graph::FromEdges(3, {{0, 3}}), TopologyError);
  EXPECT_THROW(Graph::FromEdges(0, {}), TopologyError);
  EXPECT_THROW(ParseEdgeList("1 2\n2 x\n"), TopologyError);
  EXPECT_THROW(PresetGraph("hexagon", 6), TopologyError);
}

TEST(GraphTest, EdgeListParsing) {
  const Graph g = ParseEdgeList("# a comment\n1 2\n\n2 3   # trailing\n", 3);
  EXPECT_EQ(g.m(), 3);
  EXPECT_TRUE(g.adjacent(0, 1));
  EXPECT_TRUE(g.adjacent(1, 2));
  EXPECT_FALSE(g.adjacent(0, 2));
}

TEST(CustomWeightsTest, Validation) {
  Mat bad(2, 2);
  bad << 0.7, 0.3, 0.4, 0.6;  // rows fine, columns off
  EXPECT_THROW(Topology::Custom(bad), AssumptionError);
  Mat neg(2, 2);
  neg << 1.2, -0.2, -0.2, 1.2;
  EXPECT_THROW(Topology::Custom(neg), AssumptionError);
  // Identity: doubly stochastic but disconnected support.
  EXPECT_THROW(Topology::Custom(Mat::Identity(3, 3)), TopologyError);
}

TEST(MixingTest, IdentitySamplerIsValid) {
  const Graph g = PathGraph(4);
  const auto keys = AgentKeys(1, "agent", 4);
  const Mat b = SampleMixingMatrix(g, keys, 0, MixingMode::kIdentity);
  EXPECT_EQ(b, Mat::Identity(4, 4));
}

TEST(MixingTest, CompleteThreeSeedSeven) {
  const Graph g = CompleteGraph(3);
  const auto keys = AgentKeys(7, "agent", 3);
  const Mat b = SampleMixingMatrix(g, keys, 0);
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(b.col(j).sum(), 1.0, 1e-15);
    for (int i = 0; i < 3; ++i) EXPECT_GT(b(i, j), 0.0);
  }
}

TEST(MixingTest, PathThreeSupport) {
  const Graph g = PathGraph(3);
  const auto keys = AgentKeys(5, "agent", 3);
  const Mat b = SampleMixingMatrix(g, keys, 4);
  EXPECT_GT(b(0, 0), 0.0);
  EXPECT_GT(b(1, 0), 0.0);
  EXPECT_EQ(b(2, 0), 0.0);
  EXPECT_EQ((b.col(0).array() != 0.0).count(), 2);
}

TEST(MixingTest, ColumnInvariantsOverManySamples) {
  const Graph g = PresetGraph("chorded5", 5);
  const Mat w = MetropolisWeights(g);
  const auto keys = AgentKeys(2026, "agent", 5);
  double worst = 0.0;
  for (uint64_t k = 0; k < 10000; ++k) {
    const Mat b = SampleMixingMatrix(g, keys, k);
    worst = std::max(worst, (b.colwise().sum().array() - 1.0).abs().maxCoeff());
    ASSERT_GE(b.minCoeff(), 0.0);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) ASSERT_EQ(b(i, j) > 0.0, w(i, j) > 0.0);
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(MixingTest, ColumnDependsOnlyOnOwnKey) {
  const Graph g = CompleteGraph(4);
  auto keys = AgentKeys(9, "agent", 4);
  const Mat b1 = SampleMixingMatrix(g, keys, 3);
  keys[2] ^= 0xdeadbeef;
  const Mat b2 = SampleMixingMatrix(g, keys, 3);
  for (int j = 0; j < 4; ++j) {
    if (j == 2) {
      EXPECT_NE(b1.col(j), b2.col(j));
    } else {
      EXPECT_EQ(b1.col(j), b2.col(j));
    }
  }
}

TEST(MixingTest, RowStochasticSampler) {
  const Graph g = RingGraph(5);
  const auto keys = AgentKeys(4, "agent", 5);
  const Mat r = SampleRowStochastic(g, keys, 0);
  EXPECT_LE((r.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_EQ(r(0, 2), 0.0);
}

}  // namespace
}  // namespace privdgd
