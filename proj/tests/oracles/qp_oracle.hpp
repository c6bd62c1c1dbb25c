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

#pragma once

// Random convex QPs whose constraint sets have closed-form projections, and
// an accelerated projected-gradient reference solver using Dykstra's method
// for the projection onto their intersection.

#include "isac/subproblem_solver.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace isac::oracle {

struct ProjectableQp {
  ConvexQp qp;
  // ||x_S + b|| <= alpha x_j + d for each cone, stored alongside the generic form
  struct Cone {
    std::vector<Index> support;
    VectorXd shift;
    Index axis;
    double alpha;
    double offset;
  };
  std::vector<Cone> cones;
  // x^T diag(w) x <= r
  struct Ellipsoid {
    VectorXd weights;
    double r;
  };
  std::vector<Ellipsoid> ellipsoids;
};

inline VectorXd project_halfspace(const VectorXd& x, const LinearInequality& l) {
  const double v = l.h - l.g.dot(x);
  return v > 0.0 ? VectorXd(x + v * l.g / l.g.squaredNorm()) : x;
}

inline VectorXd project_cone(const VectorXd& x, const ProjectableQp::Cone& c) {
  VectorXd y(c.support.size());
  for (std::size_t i = 0; i < c.support.size(); ++i) y(i) = x(c.support[i]) + c.shift(i);
  const double s = x(c.axis) + c.offset / c.alpha;
  const double r = y.norm();
  VectorXd out = x;
  double r_new, s_new;
  if (r <= c.alpha * s) return x;
  if (c.alpha * r <= -s) {
    r_new = 0.0;
    s_new = 0.0;
  } else {
    const double k = (c.alpha * r + s) / (1.0 + c.alpha * c.alpha);
    r_new = c.alpha * k;
    s_new = k;
  }
  const VectorXd y_new = r > 0.0 ? VectorXd(y * (r_new / r)) : VectorXd(VectorXd::Zero(y.size()));
  for (std::size_t i = 0; i < c.support.size(); ++i) out(c.support[i]) = y_new(i) - c.shift(i);
  out(c.axis) = s_new - c.offset / c.alpha;
  return out;
}

inline VectorXd project_ellipsoid(const VectorXd& x, const ProjectableQp::Ellipsoid& e) {
  auto value = [&](double nu) {
    return (x.array().square() * e.weights.array() / (1.0 + nu * e.weights.array()).square()).sum();
  };
  if (value(0.0) <= e.r) return x;
  double lo = 0.0, hi = 1.0;
  while (value(hi) > e.r) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (value(mid) > e.r ? lo : hi) = mid;
  }
  return (x.array() / (1.0 + hi * e.weights.array())).matrix();
}

inline VectorXd project_intersection(const ProjectableQp& p, const VectorXd& x0) {
  const std::size_t m = p.qp.linear.size() + p.cones.size() + p.ellipsoids.size();
  std::vector<VectorXd> inc(m, VectorXd::Zero(x0.size()));
  VectorXd x = x0;
  for (int cycle = 0; cycle < 200000; ++cycle) {
    const VectorXd before = x;
    std::size_t i = 0;
    auto step = [&](auto&& proj) {
      const VectorXd y = x + inc[i];
      const VectorXd px = proj(y);
      inc[i] = y - px;
      x = px;
      ++i;
    };
    for (const auto& l : p.qp.linear) step([&](const VectorXd& v) { return project_halfspace(v, l); });
    for (const auto& c : p.cones) step([&](const VectorXd& v) { return project_cone(v, c); });
    for (const auto& e : p.ellipsoids) step([&](const VectorXd& v) { return project_ellipsoid(v, e); });
    if (m <= 1 || (x - before).norm() <= 1e-14 * (1.0 + x.norm())) break;
  }
  return x;
}

inline VectorXd projected_gradient(const ProjectableQp& p, double tol = 1e-8) {
  const MatrixXd& q = p.qp.quad;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(q, Eigen::EigenvaluesOnly);
  const double lip = 2.0 * es.eigenvalues().maxCoeff();
  VectorXd x = project_intersection(p, VectorXd::Zero(p.qp.dim));
  VectorXd y = x;
  double t = 1.0;
  for (int it = 0; it < 100000; ++it) {
    const VectorXd grad = 2.0 * q * y + p.qp.lin;
    const VectorXd x_new = project_intersection(p, y - grad / lip);
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x_new + ((t - 1.0) / t_new) * (x_new - x);
    const double move = (x_new - x).norm();
    x = x_new;
    t = t_new;
    if (move <= 1e-2 * tol * (1.0 + x.norm())) break;
  }
  return x;
}

// Strongly convex objective, 1-3 constraints, strictly feasible by construction.
inline ProjectableQp random_projectable_qp(std::mt19937_64& rng, Index dim) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_int_distribution<int> family(0, 2);
  std::uniform_real_distribution<double> unif(0.2, 1.0);
  ProjectableQp p;
  p.qp.dim = dim;
  MatrixXd m(dim, dim);
  for (Index i = 0; i < m.size(); ++i) m(i) = n01(rng);
  p.qp.quad = MatrixXd::Identity(dim, dim) + m.transpose() * m / static_cast<double>(4 * dim);
  p.qp.lin.resize(dim);
  for (Index i = 0; i < dim; ++i) p.qp.lin(i) = 4.0 * n01(rng);
  VectorXd feasible(dim);
  for (Index i = 0; i < dim; ++i) feasible(i) = 0.3 * n01(rng);
  const int k = count(rng);
  for (int c = 0; c < k; ++c) {
    const int f = dim >= 3 ? family(rng) : (c % 2 == 0 ? 0 : 2);
    if (f == 0) {
      LinearInequality l;
      l.g.resize(dim);
      for (Index i = 0; i < dim; ++i) l.g(i) = n01(rng);
      l.h = l.g.dot(feasible) - unif(rng);
      p.qp.linear.push_back(l);
    } else if (f == 1) {
      ProjectableQp::Cone cone;
      std::vector<Index> idx(dim);
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      cone.axis = idx[0];
      const Index width = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(std::min<Index>(dim - 1, 8)));
      cone.support.assign(idx.begin() + 1, idx.begin() + 1 + width);
      cone.shift.resize(width);
      for (Index i = 0; i < width; ++i) cone.shift(i) = n01(rng);
      cone.alpha = 0.5 + unif(rng);
      double lhs = 0.0;
      for (Index i = 0; i < width; ++i) lhs += std::pow(feasible(cone.support[i]) + cone.shift(i), 2);
      cone.offset = std::sqrt(lhs) - cone.alpha * feasible(cone.axis) + unif(rng);
      SocConstraint s;
      s.a = MatrixXd::Zero(width, dim);
      for (Index i = 0; i < width; ++i) s.a(i, cone.support[i]) = 1.0;
      s.b = cone.shift;
      s.c = VectorXd::Zero(dim);
      s.c(cone.axis) = cone.alpha;
      s.d = cone.offset;
      p.qp.soc.push_back(s);
      p.cones.push_back(cone);
    } else {
      ProjectableQp::Ellipsoid e;
      e.weights.resize(dim);
      for (Index i = 0; i < dim; ++i) e.weights(i) = unif(rng);
      e.r = (feasible.array().square() * e.weights.array()).sum() + unif(rng);
      QuadraticInequality q;
      q.q = e.weights.asDiagonal();
      q.r = e.r;
      p.qp.quadratic.push_back(q);
      p.ellipsoids.push_back(e);
    }
  }
  return p;
}

}  // namespace isac::oracle
