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


#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "privdgd/objectives.hpp"

namespace privdgd {
namespace {

Vec V(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Mat Scalar(double a) { return Mat::Constant(1, 1, a); }

Vec RandomVec(std::mt19937& gen, int d, double scale = 3.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vec v(d);
  for (int c = 0; c < d; ++c) v(c) = n(gen);
  return v;
}

TEST(GradientTest, RendezvousPerCoordinate) {
  const Problem p = MakeRendezvous({V({0.0, 4.0}), V({1.0, 1.0})});
  EXPECT_EQ(p.Gradient(0, V({2.0, 2.0})), V({4.0, -4.0}));
}

TEST(GradientTest, ScalarSensing) {
  const Problem p = MakeQuadraticSensing({Scalar(1.0)}, {V({3.0})}, {0.0});
  EXPECT_DOUBLE_EQ(p.Gradient(0, V({1.0}))(0), -4.0);
}

TEST(GradientTest, RejectsNonFiniteAndBadIndex) {
  const Problem p = MakeQuadraticSensing({Scalar(1.0)}, {V({3.0})}, {0.0});
  EXPECT_THROW(p.Gradient(0, V({NAN})), InputError);
  EXPECT_THROW(p.Gradient(0, V({INFINITY})), InputError);
  EXPECT_THROW(p.Gradient(1, V({0.0})), InputError);
  EXPECT_THROW(p.Gradient(0, V({0.0, 1.0})), InputError);
}

TEST(GradientTest, FiniteDifferenceAgreement) {
  std::mt19937 gen(11);
  const double h = 1e-5;
  int probes = 0;
  for (uint64_t seed = 1; probes < 100; ++seed) {
    const Problem p = GenerateSensingInstance(4, 3, 1 + seed % 3, 0.2, seed, 0.5 * (seed % 2));
    for (int i = 0; i < p.m && probes < 100; ++i, ++probes) {
      const Vec theta = RandomVec(gen, p.d);
      const Vec g = p.Gradient(i, theta);
      Vec fd(p.d);
      for (int c = 0; c < p.d; ++c) {
        Vec a = theta, b = theta;
        a(c) += h;
        b(c) -= h;
        fd(c) = (p.Value(i, a) - p.Value(i, b)) / (2 * h);
      }
      EXPECT_LE((fd - g).norm(), 1e-6 * (1.0 + g.norm())) << "seed " << seed << " agent " << i;
    }
  }
}

TEST(OptimumTest, ScalarMean) {
  const Problem p = MakeQuadraticSensing({Scalar(1), Scalar(1), Scalar(1)},
                                         {V({1}), V({2}), V({3})}, {0, 0, 0});
  EXPECT_NEAR(ComputeOptimum(p).theta_star(0), 2.0, 1e-14);
}

TEST(OptimumTest, RendezvousMidpoint) {
  const Problem p = MakeRendezvous({V({0.0}), V({4.0})});
  const Optimum o = ComputeOptimum(p);
  EXPECT_NEAR(o.theta_star(0), 2.0, 1e-14);
  // Each agent still pulls toward its own anchor.
  EXPECT_NEAR(o.residual_gradients[0](0), 4.0, 1e-14);
  EXPECT_NEAR(o.residual_gradients[1](0), -4.0, 1e-14);
}

TEST(OptimumTest, OptimalityResidualOnGeneratedInstances) {
  for (uint64_t seed = 1; seed <= 50; ++seed) {
    const Problem p = GenerateSensingInstance(5, 3, 2, 0.1, seed, (seed % 3) * 0.5);
    const Optimum o = ComputeOptimum(p);
    Vec sum = Vec::Zero(p.d);
    for (int i = 0; i < p.m; ++i) sum += p.Gradient(i, o.theta_star);
    EXPECT_LE(sum.norm(), 1e-10) << "seed " << seed;
    // Independent oracle: normal equations solved by a different factorization.
    Mat h = Mat::Zero(p.d, p.d);
    Vec b = Vec::Zero(p.d);
    for (int i = 0; i < p.m; ++i) {
      h += p.M[i].transpose() * p.M[i] + p.sigma[i] * Mat::Identity(p.d, p.d);
      b += p.M[i].transpose() * p.z[i];
    }
    const Vec ref = h.colPivHouseholderQr().solve(b);
    EXPECT_LE((ref - o.theta_star).norm(), 1e-10 * (1.0 + ref.norm()));
  }
}

TEST(OptimumTest, NoiselessRecovery) {
  const Problem p = GenerateSensingInstance(5, 3, 2, 0.0, 1);
  EXPECT_LE((ComputeOptimum(p).theta_star - p.theta_true).norm(), 1e-10);
}

TEST(OptimumTest, GlobalMinimizer) {
  std::mt19937 gen(5);
  const Problem p = GenerateSensingInstance(5, 3, 2, 0.1, 3);
  const Optimum o = ComputeOptimum(p);
  for (int t = 0; t < 200; ++t)
    EXPECT_GE(p.GlobalValue(RandomVec(gen, 2)) - o.f_star, 0.0);
}

TEST(OptimumTest, RankDeficient) {
  // s = 1 < d = 2, a single agent, no regularization.
  Mat m(1, 2);
  m << 1.0, 1.0;
  const Problem p = MakeQuadraticSensing({m}, {V({1.0})}, {0.0});
  try {
    ComputeOptimum(p);
    FAIL() << "expected RankDeficiencyError";
  } catch (const RankDeficiencyError& e) {
    EXPECT_TRUE(e.condition() > 1e12 || std::isinf(e.condition()));
  }
}

TEST(LipschitzTest, Examples) {
  EXPECT_DOUBLE_EQ(MakeRendezvous({V({0.0}), V({1.0})}).LipschitzBound(), 2.0);
  const Problem p = MakeQuadraticSensing({Scalar(3.0)}, {V({0.0})}, {1.0});
  EXPECT_NEAR(p.LipschitzBound(), 20.0, 1e-12);
}

TEST(LipschitzTest, SampledPairsRespectBound) {
  std::mt19937 gen(8);
  const Problem p = GenerateSensingInstance(5, 3, 2, 0.1, 4, 0.3);
  const double L = p.LipschitzBound();
  for (int t = 0; t < 1000; ++t) {
    const Vec u = RandomVec(gen, 2), v = RandomVec(gen, 2);
    for (int i = 0; i < p.m; ++i)
      EXPECT_LE((p.Gradient(i, u) - p.Gradient(i, v)).norm(),
                L * (u - v).norm() * (1 + 1e-12) + 1e-12);
  }
}

TEST(ConvexityTest, FirstOrderInequality) {
  std::mt19937 gen(9);
  const Problem p = GenerateSensingInstance(5, 3, 2, 0.1, 6);
  for (int t = 0; t < 1000; ++t) {
    const Vec u = RandomVec(gen, 2), v = RandomVec(gen, 2);
    const int i = t % p.m;
    EXPECT_GE(p.Value(i, u), p.Value(i, v) + p.Gradient(i, v).dot(u - v) - 1e-10);
  }
}

TEST(GeneratorTest, DefaultDimensionsAndDeterminism) {
  const Problem a = GenerateSensingInstance(5, 3, 2, 0.1, 1);
  const Problem b = GenerateSensingInstance(5, 3, 2, 0.1, 1);
  EXPECT_EQ(a.m, 5);
  EXPECT_EQ(a.s, 3);
  EXPECT_EQ(a.d, 2);
  EXPECT_NO_THROW(ComputeOptimum(a));
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(a.M[i], b.M[i]);
    EXPECT_EQ(a.z[i], b.z[i]);
  }
  const Problem c = GenerateSensingInstance(5, 3, 2, 0.1, 2);
  EXPECT_NE(a.M[0], c.M[0]);
}

TEST(JsonTest, RoundTripIsExact) {
  const Problem p = GenerateSensingInstance(5, 3, 2, 0.1, 12, 0.25);
  const Problem q = ProblemFromJson(nlohmann::json::parse(ProblemToJson(p).dump()));
  ASSERT_EQ(q.m, p.m);
  for (int i = 0; i < p.m; ++i) {
    EXPECT_EQ(q.M[i], p.M[i]);
    EXPECT_EQ(q.z[i], p.z[i]);
    EXPECT_EQ(q.sigma[i], p.sigma[i]);
  }
  EXPECT_THROW(ProblemFromJson(nlohmann::json::parse("{\"M\": 3}")), InputError);
}

}  // namespace
}  // namespace privdgd
