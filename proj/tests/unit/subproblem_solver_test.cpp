// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The isac-hbf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "isac/subproblem_solver.hpp"
#include "oracles/qp_oracle.hpp"

#include <gtest/gtest.h>

namespace isac {
namespace {

ConvexQp scalar_qp() {
  // min x^2 s.t. x >= 1
  ConvexQp qp;
  qp.dim = 1;
  qp.quad = MatrixXd::Constant(1, 1, 1.0);
  qp.lin = VectorXd::Zero(1);
  qp.linear.push_back({VectorXd::Constant(1, 1.0), 1.0});
  return qp;
}

TEST(QpSolver, ScalarBoundIsActive) {
  const auto s = solve(scalar_qp());
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_NEAR(s.x(0), 1.0, 1e-7);
  EXPECT_NEAR(s.objective, 1.0, 1e-7);
  EXPECT_NEAR(s.duals.linear[0], 2.0, 1e-5);
  EXPECT_LE(s.kkt_residual, 1e-6);
}

TEST(QpSolver, UnconstrainedMatchesClosedForm) {
  ConvexQp qp;
  qp.dim = 3;
  qp.quad = MatrixXd::Identity(3, 3) * 2.0;
  qp.quad(0, 1) = qp.quad(1, 0) = 0.5;
  qp.lin = VectorXd::LinSpaced(3, -1.0, 2.0);
  const auto s = solve(qp);
  const VectorXd expected = -0.5 * qp.quad.ldlt().solve(qp.lin);
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_LE((s.x - expected).norm(), 1e-9);
}

TEST(QpSolver, SecondOrderConeHandWorked) {
  // min (x0 - 2)^2 + (x1 - 2)^2 s.t. ||x0|| <= 1 - x1 ... written as ||[x0]|| <= -x1 + 1
  ConvexQp qp;
  qp.dim = 2;
  qp.quad = MatrixXd::Identity(2, 2);
  qp.lin = VectorXd::Constant(2, -4.0);
  SocConstraint c;
  c.a = MatrixXd::Zero(1, 2);
  c.a(0, 0) = 1.0;
  c.b = VectorXd::Zero(1);
  c.c = VectorXd::Zero(2);
  c.c(1) = -1.0;
  c.d = 1.0;
  qp.soc.push_back(c);
  const auto s = solve(qp);
  // projection of (2, 2) onto {|x0| <= 1 - x1}: the boundary x0 + x1 = 1 gives (0.5, 0.5)
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_NEAR(s.x(0), 0.5, 1e-6);
  EXPECT_NEAR(s.x(1), 0.5, 1e-6);
}

TEST(QpSolver, DetectsInfeasibility) {
  ConvexQp qp;
  qp.dim = 2;
  qp.quad = MatrixXd::Identity(2, 2);
  qp.lin = VectorXd::Zero(2);
  qp.linear.push_back({VectorXd::Unit(2, 0), 1.0});
  qp.linear.push_back({-VectorXd::Unit(2, 0), 1.0});
  EXPECT_EQ(solve(qp).status, QpStatus::kInfeasible);
  QuadraticInequality ball{MatrixXd::Identity(2, 2), 1.0};
  ConvexQp q2 = qp;
  q2.linear.pop_back();
  q2.linear[0].h = 2.0;
  q2.quadratic.push_back(ball);
  EXPECT_EQ(solve(q2).status, QpStatus::kInfeasible);
}

TEST(QpSolver, RejectsMalformedProblems) {
  auto qp = scalar_qp();
  qp.quad(0, 0) = -1.0;
  EXPECT_THROW(solve(qp), std::invalid_argument);
  auto q2 = scalar_qp();
  q2.lin = VectorXd::Zero(2);
  EXPECT_THROW(solve(q2), std::invalid_argument);
}

TEST(QpSolver, AgreesWithProjectedGradientOracle) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> dims(2, 64);
  for (int i = 0; i < 25; ++i) {
    const auto p = oracle::random_projectable_qp(rng, dims(rng));
    const auto s = solve(p.qp);
    ASSERT_EQ(s.status, QpStatus::kOptimal) << "instance " << i;
    const double ref = p.qp.objective(oracle::projected_gradient(p));
    EXPECT_LE(std::abs(s.objective - ref), 1e-4 * std::max(1.0, std::abs(ref))) << "instance " << i;
    EXPECT_LE(s.kkt_residual, 1e-6);
    EXPECT_LE(kkt_residual(p.qp, s.x, s.duals), 1e-5);
  }
}

TEST(QpSolver, WarmStartGivesSameAnswer) {
  std::mt19937_64 rng(5);
  const auto p = oracle::random_projectable_qp(rng, 12);
  const auto cold = solve(p.qp);
  const auto warm = solve(p.qp, {}, cold.x);
  EXPECT_NEAR(cold.objective, warm.objective, 1e-6 * std::max(1.0, std::abs(cold.objective)));
}

TEST(Kkt, NonOptimalPointHasLargeResidual) {
  const auto qp = scalar_qp();
  VectorXd x = VectorXd::Constant(1, 3.0);
  EXPECT_GT(kkt_residual(qp, x), 1e-3);
  EXPECT_LE(kkt_residual(qp, VectorXd::Constant(1, 1.0)), 1e-9);
}

TEST(Kkt, ScalingProblemScalesStationarity) {
  std::mt19937_64 rng(8);
  const auto p = oracle::random_projectable_qp(rng, 6);
  const auto s = solve(p.qp);
  ConvexQp big = p.qp;
  big.quad *= 10.0;
  big.lin *= 10.0;
  for (auto& c : big.soc) {
    c.a *= 10.0;
    c.b *= 10.0;
    c.c *= 10.0;
    c.d *= 10.0;
  }
  for (auto& c : big.linear) {
    c.g *= 10.0;
    c.h *= 10.0;
  }
  for (auto& c : big.quadratic) {
    c.q *= 10.0;
    c.r *= 10.0;
  }
  VectorXd x = s.x + VectorXd::Constant(s.x.size(), 0.01);
  const double base = kkt_components(p.qp, x, s.duals).stationarity;
  EXPECT_NEAR(kkt_components(big, x, s.duals).stationarity, 10.0 * base, 1e-9 * base);
}

TEST(Lifting, HermitianFormReproducesQuadratic) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  CMatrix b(4, 4);
  for (Index i = 0; i < b.size(); ++i) b(i) = cd(n(rng), n(rng));
  const CMatrix m = b.adjoint() * b;
  CVector v(4), g(4);
  for (Index i = 0; i < 4; ++i) {
    v(i) = cd(n(rng), n(rng));
    g(i) = cd(n(rng), n(rng));
  }
  const VectorXd x = lifting::stack(v);
  EXPECT_NEAR(x.dot(lifting::hermitian_form(m) * x), std::real(v.dot(m * v)), 1e-10);
  const cd inner = g.dot(v);  // g^H v
  EXPECT_NEAR(lifting::re_row(g).dot(x), inner.real(), 1e-12);
  EXPECT_NEAR(lifting::im_row(g).dot(x), inner.imag(), 1e-12);
  EXPECT_LE((lifting::unstack(x) - v).norm(), 0.0);
}

}  // namespace
}  // namespace isac
