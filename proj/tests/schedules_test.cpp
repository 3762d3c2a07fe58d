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
#include <numbers>

#include <gtest/gtest.h>

#include "privdgd/schedules.hpp"

namespace privdgd {
namespace {

TEST(EvaluateTest, ConstantHomogeneous) {
  const auto s = StepsizeSchedule::ConstantHomogeneous(4, 0.02);
  for (int i = 0; i < 4; ++i)
    for (long k : {0L, 1L, 17L, 100000L}) EXPECT_EQ(s.Evaluate(i, k), 0.02);
}

TEST(EvaluateTest, DiminishingFormulaAtZero) {
  EXPECT_EQ(DiminishingHeterogeneousValue(0, 0.0), 1.0);
  EXPECT_EQ(DiminishingHeterogeneousValue(0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(DiminishingHeterogeneousValue(1, 0.5), (1.0 - 0.5 / 4.0) / 2.0);
}

TEST(EvaluateTest, ReplayIsIdentical) {
  const auto a = StepsizeSchedule::DiminishingHeterogeneous(5, 99);
  const auto b = StepsizeSchedule::DiminishingHeterogeneous(5, 99);
  for (long k = 0; k < 10000; ++k)
    for (int i = 0; i < 5; ++i) ASSERT_EQ(a.Evaluate(i, k), b.Evaluate(i, k));
}

TEST(EvaluateTest, AgentsAreHeterogeneous) {
  const auto s = StepsizeSchedule::DiminishingHeterogeneous(5, 99);
  int distinct = 0;
  for (long k = 0; k < 50; ++k) distinct += s.Evaluate(0, k) != s.Evaluate(1, k);
  EXPECT_GT(distinct, 45);
}

TEST(EvaluateTest, Nonnegative) {
  const auto fd = StepsizeSchedule::FiniteDeviation(6, 0.01, 200, 0.05, 3);
  const auto nd = StepsizeSchedule::NondiminishingHeterogeneous(6, 0.02, 3);
  const auto dh = StepsizeSchedule::DiminishingHeterogeneous(6, 3);
  for (long k = 0; k < 2000; ++k) {
    for (int i = 0; i < 6; ++i) {
      ASSERT_GE(fd.Evaluate(i, k), 0.0);
      ASSERT_GE(nd.Evaluate(i, k), 0.0);
      ASSERT_GE(dh.Evaluate(i, k), 0.0);
    }
  }
  for (int i = 0; i < 6; ++i) EXPECT_EQ(fd.Evaluate(i, 200), 0.01);
}

TEST(EvaluateTest, HeterogeneityBound) {
  const auto s = StepsizeSchedule::DiminishingHeterogeneous(7, 5);
  for (long k = 0; k < 5000; ++k) {
    const Vec l = s.At(k);
    const double kk = k + 1.0;
    ASSERT_LE(l.maxCoeff() - l.minCoeff(), 1.0 / (kk * kk * kk)) << k;
  }
}

TEST(EvaluateTest, OverridesAndCustom) {
  const auto s = StepsizeSchedule::ConstantHomogeneous(2, 0.1).WithOverrides({{{1, 3}, 0.5}});
  EXPECT_EQ(s.Evaluate(1, 3), 0.5);
  EXPECT_EQ(s.Evaluate(0, 3), 0.1);
  EXPECT_EQ(s.last_irregular(), 3);
  Vec r0(2), r1(2);
  r0 << 0.1, 0.2;
  r1 << 0.3, 0.4;
  const auto c = StepsizeSchedule::Custom({r0, r1});
  EXPECT_EQ(c.Evaluate(1, 1), 0.4);
  EXPECT_THROW(c.Evaluate(0, 2), ParameterError);
  EXPECT_THROW(StepsizeSchedule::Custom({}), ParameterError);
  EXPECT_THROW(s.WithOverrides({{{0, 1}, -1.0}}), ParameterError);
}

TEST(DiminishingCheckTest, ConstantHasZeroHeterogeneityAndFailsSquareSum) {
  const auto s = StepsizeSchedule::ConstantHomogeneous(5, 0.02);
  const ConditionReport r = CheckDiminishingConditions(s, 1000);
  EXPECT_EQ(r.Get("heterogeneity").value, 0.0);
  EXPECT_EQ(r.Get("square-summable").verdict, Verdict::kFail);
  EXPECT_EQ(r.Get("divergent-sum").verdict, Verdict::kPass);
  EXPECT_EQ(r.overall, Verdict::kFail);
}

TEST(DiminishingCheckTest, HarmonicSquareSum) {
  const auto s = StepsizeSchedule::DiminishingHomogeneous(3);
  const ConditionReport r = CheckDiminishingConditions(s, 1000);
  const double v = r.Get("square-summable").value;
  EXPECT_GE(v, 1.64);
  EXPECT_LE(v, 1.6450);
  EXPECT_LT(v, std::numbers::pi * std::numbers::pi / 6);
  // Independent partial sum over k = 0..1000.
  double ref = 0.0;
  for (int k = 1; k <= 1001; ++k) ref += 1.0 / (double(k) * k);
  EXPECT_NEAR(v, ref, 1e-12);
}

TEST(DiminishingCheckTest, DiminishingHeterogeneousPasses) {
  const auto s = StepsizeSchedule::DiminishingHeterogeneous(5, 1);
  const ConditionReport r = CheckDiminishingConditions(s, 10000);
  for (const char* n : {"divergent-sum", "square-summable", "heterogeneity"})
    EXPECT_EQ(r.Get(n).verdict, Verdict::kPass) << n;
  EXPECT_EQ(r.overall, Verdict::kPass);
}

TEST(DiminishingCheckTest, FiniteDeviationAndCustom) {
  const auto fd = StepsizeSchedule::FiniteDeviation(3, 0.05, 10, 0.01, 2);
  const ConditionReport r = CheckDiminishingConditions(fd, 500);
  EXPECT_EQ(r.Get("square-summable").verdict, Verdict::kFail);
  EXPECT_EQ(r.Get("heterogeneity").verdict, Verdict::kPass);
  Vec row(2);
  row << 0.1, 0.1;
  const ConditionReport rc = CheckDiminishingConditions(StepsizeSchedule::Custom({row, row, row}), 2);
  EXPECT_EQ(rc.Get("divergent-sum").verdict, Verdict::kUndecided);
}

TEST(NondiminishingCheckTest, WorkedExampleMargins) {
  const auto s = StepsizeSchedule::ConstantHomogeneous(2, 0.01);
  const ConditionReport r = CheckNondiminishingConditions(s, 2.0, 0.0, 1.0, 2, 0.5, 0.5, 100);
  // Left sides computed by hand from the four inequalities.
  const double lhs[4] = {2 * 2 / (2 * 0.01) * 0.01 * 0.01, 0.01 * 2,
                         0 + (6.0 * 4 * 4 / 1) * 2e-4, 8 * 6 * 4 * 2e-4};
  const double rhs[4] = {1.0, 0.5 / 1.5, 0.5, 0.25};
  const char* names[4] = {"a", "b", "c", "d"};
  for (int q = 0; q < 4; ++q) {
    const Condition& c = r.Get(names[q]);
    ASSERT_FALSE(c.lhs.empty());
    EXPECT_NEAR(c.lhs[0], lhs[q], 1e-12) << names[q];
    EXPECT_NEAR(c.margin(0), rhs[q] - lhs[q], 1e-12) << names[q];
    EXPECT_EQ(c.verdict, Verdict::kPass) << names[q];
  }
  EXPECT_NEAR(lhs[0], 0.02, 1e-15);
  EXPECT_NEAR(lhs[2], 0.0192, 1e-15);
  EXPECT_NEAR(lhs[3], 0.0384, 1e-15);
  EXPECT_EQ(r.Get("sum-variation").value, 0.0);
  EXPECT_EQ(r.Get("sum-heterogeneity").value, 0.0);
  EXPECT_EQ(r.overall, Verdict::kPass);
}

TEST(NondiminishingCheckTest, LargeBaseFailsConditionB) {
  const auto s = StepsizeSchedule::ConstantHomogeneous(2, 1.0);
  const ConditionReport r = CheckNondiminishingConditions(s, 2.0, 0.0, 1.0, 2, 0.5, 0.5, 100);
  EXPECT_EQ(r.Get("b").verdict, Verdict::kFail);
  EXPECT_NEAR(r.Get("b").lhs[0], 2.0, 1e-15);
  EXPECT_EQ(r.overall, Verdict::kFail);
}

TEST(NondiminishingCheckTest, ParameterRange) {
  const auto s = StepsizeSchedule::ConstantHomogeneous(2, 0.01);
  EXPECT_THROW(CheckNondiminishingConditions(s, 2, 0, 1, 2, 0.0, 0.5, 10), ParameterError);
  EXPECT_THROW(CheckNondiminishingConditions(s, 2, 0, 1, 2, 0.5, 1.0, 10), ParameterError);
}

TEST(NondiminishingCheckTest, StartIndexSkipsEarlyIterations) {
  // Large early deviations, fine afterwards.
  const auto s = StepsizeSchedule::ConstantHomogeneous(2, 0.01).WithOverrides({{{0, 2}, 5.0}});
  EXPECT_EQ(CheckNondiminishingConditions(s, 2, 0, 1, 2, 0.5, 0.5, 50).overall, Verdict::kFail);
  const ConditionReport late = CheckNondiminishingConditions(s, 2, 0, 1, 2, 0.5, 0.5, 50, 3);
  EXPECT_EQ(late.Get("a").verdict, Verdict::kPass);
  EXPECT_EQ(late.Get("b").first_k, 3);
}

TEST(NondiminishingCheckTest, MonotoneInHorizon) {
  const auto s = StepsizeSchedule::NondiminishingHeterogeneous(3, 0.004, 8);
  const ConditionReport big = CheckNondiminishingConditions(s, 2.0, 0.3, 1.0, 3, 0.5, 0.5, 400);
  for (long k : {1L, 10L, 100L, 399L}) {
    const ConditionReport small = CheckNondiminishingConditions(s, 2.0, 0.3, 1.0, 3, 0.5, 0.5, k);
    for (const char* n : {"a", "b", "c", "d"}) {
      if (big.Get(n).prefix == Verdict::kPass) EXPECT_EQ(small.Get(n).prefix, Verdict::kPass);
    }
  }
}

TEST(FeasibleTest, WorkedExampleAndInfeasible) {
  const auto s = StepsizeSchedule::ConstantHomogeneous(2, 0.01);
  const auto dc = FindFeasibleDeltaC(s, 2.0, 0.0, 1.0, 2, 100);
  ASSERT_TRUE(dc.has_value());
  EXPECT_EQ(CheckNondiminishingConditions(s, 2, 0, 1, 2, dc->first, dc->second, 100).overall, Verdict::kPass);
  EXPECT_EQ(CheckNondiminishingConditions(s, 2, 0, 1, 2, 0.5, 0.5, 100).overall, Verdict::kPass);
  EXPECT_FALSE(FindFeasibleDeltaC(StepsizeSchedule::ConstantHomogeneous(2, 10.0), 2, 0, 1, 2, 100));
}

TEST(FeasibleTest, SingleAgentTinyStep) {
  const auto s = StepsizeSchedule::ConstantHomogeneous(1, 1e-4);
  EXPECT_TRUE(FindFeasibleDeltaC(s, 2.0, 0.0, 0.0, 1, 100).has_value());
}

TEST(FeasibleTest, MaxAdmissibleBaseIsFeasibleAndTight) {
  const auto s = StepsizeSchedule::NondiminishingHeterogeneous(5, 0.0, 4);
  const double L = 10.0, eta = 0.5, r = 1.0;
  const double b = MaxAdmissibleBase(s, L, eta, r, 300, 1.0);
  ASSERT_GT(b, 0.0);
  EXPECT_TRUE(FindFeasibleDeltaC(s.WithBase(b * 0.999), L, eta, r, 5, 300).has_value());
  EXPECT_FALSE(FindFeasibleDeltaC(s.WithBase(b * 1.01), L, eta, r, 5, 300).has_value());
}

TEST(FiniteDeviationTest, VariationSumHasFewTerms) {
  const auto s = StepsizeSchedule::FiniteDeviation(4, 0.001, 5, 0.0005, 9);
  const ConditionReport r = CheckNondiminishingConditions(s, 2.0, 0.5, 1.0, 4, 0.5, 0.5, 1000);
  double ref = 0.0;
  for (long k = 0; k < 6; ++k) ref += (s.At(k + 1) - s.At(k)).squaredNorm();
  EXPECT_NEAR(r.Get("sum-variation").value, ref, 1e-18);
  EXPECT_EQ(r.Get("sum-variation").verdict, Verdict::kPass);
}

}  // namespace
}  // namespace privdgd
