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

#include "isac/core_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace isac {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ||a x + b|| <= c^T x + d
struct SocConstraint {
  MatrixXd a;
  VectorXd b;
  VectorXd c;
  double d = 0.0;
};

// g^T x >= h
struct LinearInequality {
  VectorXd g;
  double h = 0.0;
};

// x^T q x <= r
struct QuadraticInequality {
  MatrixXd q;
  double r = 0.0;
};

// minimize x^T quad x + lin^T x over the constraints.
struct ConvexQp {
  Index dim = 0;
  MatrixXd quad;
  VectorXd lin;
  std::vector<SocConstraint> soc;
  std::vector<LinearInequality> linear;
  std::vector<QuadraticInequality> quadratic;

  double objective(const VectorXd& x) const { return x.dot(quad * x) + lin.dot(x); }

  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("qp: " + what); };
    auto check_psd = [&](const MatrixXd& m, const char* name) {
      if (m.rows() != dim || m.cols() != dim) fail(std::string(name) + " has wrong shape");
      if (!m.allFinite()) fail(std::string(name) + " has non-finite entries");
      const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
      if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) fail(std::string(name) + " is not symmetric");
      if (dim > 0) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-9 * scale) fail(std::string(name) + " is not positive semidefinite");
      }
    };
    if (dim < 1) fail("dimension must be positive");
    check_psd(quad, "objective matrix");
    if (lin.size() != dim) fail("linear term has wrong size");
    for (const auto& s : soc) {
      if (s.a.cols() != dim || s.b.size() != s.a.rows() || s.c.size() != dim) fail("cone constraint has wrong shape");
    }
    for (const auto& l : linear)
      if (l.g.size() != dim) fail("linear constraint has wrong size");
    for (const auto& q : quadratic) check_psd(q.q, "constraint matrix");
  }
};

enum class QpStatus { kOptimal, kInfeasible, kMaxIter };

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kInfeasible: return "infeasible";
    case QpStatus::kMaxIter: return "max-iter";
  }
  return "unknown";
}

// Cone multipliers are (z, zeta) with ||z|| <= zeta, paired with (a x + b, c^T x + d).
struct QpDuals {
  std::vector<VectorXd> soc_z;
  std::vector<double> soc_zeta;
  std::vector<double> linear;
  std::vector<double> quadratic;
};

struct QpOptions {
  double feasibility_tol = 1e-7;
  double gap_tol = 1e-6;
  int max_newton_steps = 200;  // per phase
  double barrier_growth = 10.0;
};

struct QpSolution {
  VectorXd x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  QpStatus status = QpStatus::kMaxIter;
  double kkt_residual = std::numeric_limits<double>::infinity();  // on the internally scaled problem
  QpDuals duals;
  int newton_steps = 0;
};

struct KktResidual {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
  double max() const { return std::max({stationarity, primal, dual, complementarity}); }
};

inline KktResidual kkt_components(const ConvexQp& qp, const VectorXd& x, const QpDuals& y) {
  if (y.soc_z.size() != qp.soc.size() || y.soc_zeta.size() != qp.soc.size() || y.linear.size() != qp.linear.size() ||
      y.quadratic.size() != qp.quadratic.size())
    throw std::invalid_argument("kkt: dual sizes do not match the problem");
  KktResidual r;
  VectorXd grad = 2.0 * qp.quad * x + qp.lin;
  for (std::size_t i = 0; i < qp.soc.size(); ++i) {
    const auto& s = qp.soc[i];
    const VectorXd w = s.a * x + s.b;
    const double u = s.c.dot(x) + s.d;
    grad -= s.a.transpose() * y.soc_z[i] + y.soc_zeta[i] * s.c;
    r.primal = std::max(r.primal, w.norm() - u);
    r.dual = std::max(r.dual, y.soc_z[i].norm() - y.soc_zeta[i]);
    r.complementarity = std::max(r.complementarity, std::abs(y.soc_z[i].dot(w) + y.soc_zeta[i] * u));
  }
  for (std::size_t i = 0; i < qp.linear.size(); ++i) {
    const auto& l = qp.linear[i];
    const double slack = l.g.dot(x) - l.h;
    grad -= y.linear[i] * l.g;
    r.primal = std::max(r.primal, -slack);
    r.dual = std::max(r.dual, -y.linear[i]);
    r.complementarity = std::max(r.complementarity, std::abs(y.linear[i] * slack));
  }
  for (std::size_t i = 0; i < qp.quadratic.size(); ++i) {
    const auto& q = qp.quadratic[i];
    const double slack = q.r - x.dot(q.q * x);
    grad += 2.0 * y.quadratic[i] * (q.q * x);
    r.primal = std::max(r.primal, -slack);
    r.dual = std::max(r.dual, -y.quadratic[i]);
    r.complementarity = std::max(r.complementarity, std::abs(y.quadratic[i] * slack));
  }
  r.stationarity = grad.cwiseAbs().maxCoeff();
  r.primal = std::max(r.primal, 0.0);
  r.dual = std::max(r.dual, 0.0);
  return r;
}

inline double kkt_residual(const ConvexQp& qp, const VectorXd& x, const QpDuals& y) {
  return kkt_components(qp, x, y).max();
}

// Residual with multipliers fitted by non-negative least squares on the
// stationarity condition; used for points that carry no duals.
inline double kkt_residual(const ConvexQp& qp, const VectorXd& x) {
  const std::size_t m = qp.soc.size() + qp.linear.size() + qp.quadratic.size();
  QpDuals y;
  const VectorXd grad = 2.0 * qp.quad * x + qp.lin;
  MatrixXd cols(qp.dim, static_cast<Index>(m));
  std::vector<VectorXd> directions;
  Index j = 0;
  for (const auto& s : qp.soc) {
    const VectorXd w = s.a * x + s.b;
    const double nw = w.norm();
    directions.push_back(nw > 0.0 ? VectorXd(w / nw) : VectorXd(VectorXd::Zero(w.size())));
    cols.col(j++) = s.a.transpose() * directions.back() - s.c;
  }
  for (const auto& l : qp.linear) cols.col(j++) = -l.g;
  for (const auto& q : qp.quadratic) cols.col(j++) = 2.0 * q.q * x;
  VectorXd lam = VectorXd::Zero(static_cast<Index>(m));
  if (m > 0) {
    const MatrixXd gram = cols.transpose() * cols;
    const double step = 1.0 / std::max(gram.norm(), 1e-300);
    for (int it = 0; it < 20000; ++it) {
      const VectorXd g = cols.transpose() * (grad + cols * lam);
      lam = (lam - step * g).cwiseMax(0.0);
    }
  }
  j = 0;
  for (std::size_t i = 0; i < qp.soc.size(); ++i, ++j) {
    y.soc_z.push_back(-lam(j) * directions[i]);
    y.soc_zeta.push_back(lam(j));
  }
  for (std::size_t i = 0; i < qp.linear.size(); ++i) y.linear.push_back(lam(j++));
  for (std::size_t i = 0; i < qp.quadratic.size(); ++i) y.quadratic.push_back(lam(j++));
  return kkt_residual(qp, x, y);
}

namespace detail {

// Log-barrier problem in a variable z; quadratic constraints may carry a
// linear term so the same machinery serves the slack-augmented Phase I.
class Barrier {
 public:
  struct Soc {
    MatrixXd a;
    VectorXd b;
    VectorXd c;
    double d;
    MatrixXd ata;
  };
  struct Lin {
    VectorXd g;
    double h;
  };
  struct Quad {
    MatrixXd q;
    VectorXd p;
    double r;
  };

  MatrixXd quad;
  VectorXd lin;
  std::vector<Soc> soc;
  std::vector<Lin> lins;
  std::vector<Quad> quads;

  double degree() const { return 2.0 * static_cast<double>(soc.size()) + static_cast<double>(lins.size() + quads.size()); }

  double objective(const VectorXd& z) const { return z.dot(quad * z) + lin.dot(z); }

  // -sum log(slack), or +inf outside the domain.
  double barrier(const VectorXd& z) const {
    double phi = 0.0;
    for (const auto& s : soc) {
      const double u = s.c.dot(z) + s.d;
      const double v = u * u - (s.a * z + s.b).squaredNorm();
      if (!(u > 0.0) || !(v > 0.0)) return std::numeric_limits<double>::infinity();
      phi -= std::log(v);
    }
    for (const auto& l : lins) {
      const double v = l.g.dot(z) - l.h;
      if (!(v > 0.0)) return std::numeric_limits<double>::infinity();
      phi -= std::log(v);
    }
    for (const auto& q : quads) {
      const double v = q.r - z.dot(q.q * z) - q.p.dot(z);
      if (!(v > 0.0)) return std::numeric_limits<double>::infinity();
      phi -= std::log(v);
    }
    return phi;
  }

  void derivatives(const VectorXd& z, double t, VectorXd& g, MatrixXd& h) const {
    g = t * (2.0 * quad * z + lin);
    h = 2.0 * t * quad;
    for (const auto& s : soc) {
      const VectorXd w = s.a * z + s.b;
      const double u = s.c.dot(z) + s.d;
      const double v = u * u - w.squaredNorm();
      const VectorXd dv = 2.0 * u * s.c - 2.0 * s.a.transpose() * w;
      g -= dv / v;
      h += (2.0 / v) * (s.ata - s.c * s.c.transpose()) + (dv * dv.transpose()) / (v * v);
    }
    for (const auto& l : lins) {
      const double v = l.g.dot(z) - l.h;
      g -= l.g / v;
      h += (l.g * l.g.transpose()) / (v * v);
    }
    for (const auto& q : quads) {
      const VectorXd dq = 2.0 * q.q * z + q.p;
      const double v = q.r - z.dot(q.q * z) - q.p.dot(z);
      g += dq / v;
      h += (2.0 / v) * q.q + (dq * dq.transpose()) / (v * v);
    }
  }
};

enum class CenterResult { kCentered, kStopped, kBudget };

template <class Stop>
CenterResult center(const Barrier& bar, VectorXd& z, double t, int& budget, Stop&& stop) {
  VectorXd g;
  MatrixXd h;
  const Index n = z.size();
  double previous = std::numeric_limits<double>::infinity();
  while (true) {
    bar.derivatives(z, t, g, h);
    if (g.cwiseAbs().maxCoeff() <= 1e-11 * t) return CenterResult::kCentered;
    if (budget <= 0) return CenterResult::kBudget;
    Eigen::LDLT<MatrixXd> ldlt(h);
    VectorXd dz = ldlt.solve(-g);
    if (ldlt.info() != Eigen::Success || !dz.allFinite() || g.dot(dz) >= 0.0) {
      const double reg = 1e-12 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
      dz = (h + reg * MatrixXd::Identity(n, n)).ldlt().solve(-g);
      if (!dz.allFinite() || g.dot(dz) >= 0.0) dz = -g / std::max(1.0, h.diagonal().maxCoeff());
    }
    const double decrement = -g.dot(dz);
    // stop at the rounding floor: tiny decrement that no longer contracts
    if (decrement <= 1e-20 || (decrement < 1e-8 && decrement > 0.25 * previous)) return CenterResult::kCentered;
    previous = decrement;
    --budget;
    double alpha = 1.0;
    VectorXd trial = z + dz;
    double phi = bar.barrier(trial);
    while (!std::isfinite(phi) && alpha > 1e-20) {
      alpha *= 0.5;
      trial = z + alpha * dz;
      phi = bar.barrier(trial);
    }
    if (!std::isfinite(phi)) return CenterResult::kCentered;
    // Inside the quadratic convergence region the merit change is below
    // rounding at large t, so the full (domain-feasible) step is taken.
    if (decrement > 0.2 || alpha < 1.0) {
      const double f0 = t * bar.objective(z) + bar.barrier(z);
      double f1 = t * bar.objective(trial) + phi;
      while (f1 > f0 - 0.25 * alpha * decrement && alpha > 1e-12) {
        alpha *= 0.5;
        trial = z + alpha * dz;
        f1 = t * bar.objective(trial) + bar.barrier(trial);
      }
      if (!(f1 <= f0)) return CenterResult::kCentered;
    }
    z = trial;
    if (stop(z)) return CenterResult::kStopped;
  }
}

struct Scaled {
  ConvexQp qp;
  double objective_scale = 1.0;
  std::vector<double> soc_scale, lin_scale, quad_scale;
};

inline double max_abs(const MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline Scaled equilibrate(const ConvexQp& qp) {
  Scaled s{qp, 1.0, {}, {}, {}};
  auto positive = [](double v) { return v > 0.0 ? v : 1.0; };
  s.objective_scale = positive(std::max(max_abs(qp.quad), max_abs(qp.lin)));
  s.qp.quad /= s.objective_scale;
  s.qp.lin /= s.objective_scale;
  for (auto& c : s.qp.soc) {
    const double k = positive(std::max(max_abs(c.a), max_abs(c.c)));
    c.a /= k;
    c.b /= k;
    c.c /= k;
    c.d /= k;
    s.soc_scale.push_back(k);
  }
  for (auto& c : s.qp.linear) {
    const double k = positive(max_abs(c.g));
    c.g /= k;
    c.h /= k;
    s.lin_scale.push_back(k);
  }
  for (auto& c : s.qp.quadratic) {
    const double k = positive(max_abs(c.q));
    c.q /= k;
    c.r /= k;
    s.quad_scale.push_back(k);
  }
  return s;
}

inline double max_violation(const ConvexQp& qp, const VectorXd& x) {
  double v = -std::numeric_limits<double>::infinity();
  for (const auto& s : qp.soc) v = std::max(v, (s.a * x + s.b).norm() - (s.c.dot(x) + s.d));
  for (const auto& l : qp.linear) v = std::max(v, l.h - l.g.dot(x));
  for (const auto& q : qp.quadratic) v = std::max(v, x.dot(q.q * x) - q.r);
  return v;
}

inline Barrier phase_two_barrier(const ConvexQp& qp) {
  Barrier b;
  b.quad = qp.quad;
  b.lin = qp.lin;
  for (const auto& s : qp.soc) b.soc.push_back({s.a, s.b, s.c, s.d, s.a.transpose() * s.a});
  for (const auto& l : qp.linear) b.lins.push_back({l.g, l.h});
  for (const auto& q : qp.quadratic) b.quads.push_back({q.q, VectorXd::Zero(qp.dim), q.r});
  return b;
}

// Variables (x, s); every constraint is relaxed by s, plus ||x||^2 <= radius^2 and s >= -1.
inline Barrier phase_one_barrier(const ConvexQp& qp, double radius_sq) {
  const Index n = qp.dim;
  Barrier b;
  b.quad = MatrixXd::Zero(n + 1, n + 1);
  b.lin = VectorXd::Zero(n + 1);
  b.lin(n) = 1.0;
  for (const auto& s : qp.soc) {
    MatrixXd a = MatrixXd::Zero(s.a.rows(), n + 1);
    a.leftCols(n) = s.a;
    VectorXd c(n + 1);
    c << s.c, 1.0;
    b.soc.push_back({a, s.b, c, s.d, a.transpose() * a});
  }
  for (const auto& l : qp.linear) {
    VectorXd g(n + 1);
    g << l.g, 1.0;
    b.lins.push_back({g, l.h});
  }
  for (const auto& q : qp.quadratic) {
    MatrixXd qq = MatrixXd::Zero(n + 1, n + 1);
    qq.topLeftCorner(n, n) = q.q;
    VectorXd p = VectorXd::Zero(n + 1);
    p(n) = -1.0;
    b.quads.push_back({qq, p, q.r});
  }
  MatrixXd ball = MatrixXd::Zero(n + 1, n + 1);
  ball.topLeftCorner(n, n).setIdentity();
  b.quads.push_back({ball, VectorXd::Zero(n + 1), radius_sq});
  VectorXd e = VectorXd::Zero(n + 1);
  e(n) = 1.0;
  b.lins.push_back({e, -1.0});
  return b;
}

inline QpDuals central_path_duals(const ConvexQp& qp, const VectorXd& x, double t) {
  QpDuals y;
  for (const auto& s : qp.soc) {
    const VectorXd w = s.a * x + s.b;
    const double u = s.c.dot(x) + s.d;
    const double k = 2.0 / (t * (u * u - w.squaredNorm()));
    y.soc_z.push_back(-k * w);
    y.soc_zeta.push_back(k * u);
  }
  for (const auto& l : qp.linear) y.linear.push_back(1.0 / (t * (l.g.dot(x) - l.h)));
  for (const auto& q : qp.quadratic) y.quadratic.push_back(1.0 / (t * (q.r - x.dot(q.q * x))));
  return y;
}

}  // namespace detail

inline QpSolution solve(const ConvexQp& problem, const QpOptions& opt = {}, const std::optional<VectorXd>& start = {}) {
  problem.validate();
  const auto scaled = detail::equilibrate(problem);
  const ConvexQp& qp = scaled.qp;
  const Index n = qp.dim;
  QpSolution sol;
  VectorXd x = (start && start->size() == n && start->allFinite()) ? *start : VectorXd(VectorXd::Zero(n));

  const bool has_constraints = !(qp.soc.empty() && qp.linear.empty() && qp.quadratic.empty());
  // A start hugging the boundary would make the first centering crawl, so it
  // must clear every constraint by the same margin Phase I aims for.
  if (has_constraints && !(detail::max_violation(qp, x) < -1e-4 &&
                           std::isfinite(detail::phase_two_barrier(qp).barrier(x)))) {
    const double radius_sq = 1e6 * std::max(1.0, x.squaredNorm());
    const auto bar = detail::phase_one_barrier(qp, radius_sq);
    VectorXd z(n + 1);
    z << x, std::max(detail::max_violation(qp, x), 0.0) + 1.0;
    int budget = opt.max_newton_steps;
    double t = 1.0;
    auto early = [](const VectorXd& v) { return v(v.size() - 1) < -1e-4; };
    bool found = false;
    while (true) {
      const auto r = detail::center(bar, z, t, budget, early);
      sol.newton_steps = opt.max_newton_steps - budget;
      if (r == detail::CenterResult::kStopped || z(n) < -1e-4) {
        found = true;
        break;
      }
      if (r == detail::CenterResult::kBudget || bar.degree() / t < 1e-10) break;
      t *= opt.barrier_growth;
    }
    x = z.head(n);
    if (!found && !(z(n) < 0.0 && std::isfinite(detail::phase_two_barrier(qp).barrier(x)))) {
      sol.x = x;
      sol.objective = problem.objective(x);
      sol.status = z(n) > opt.feasibility_tol ? QpStatus::kInfeasible : QpStatus::kMaxIter;
      return sol;
    }
  }

  const auto bar = detail::phase_two_barrier(qp);
  const double gap_target = 1e-2 * std::min(opt.gap_tol, 1e-6);
  int budget = opt.max_newton_steps;
  double t = 1.0;
  bool converged = false;
  auto never = [](const VectorXd&) { return false; };
  while (true) {
    const auto r = detail::center(bar, x, t, budget, never);
    if (r == detail::CenterResult::kBudget) break;
    if (!has_constraints || bar.degree() / t <= gap_target) {
      converged = true;
      break;
    }
    if (bar.objective(x) < -1e15) break;
    t *= opt.barrier_growth;
  }
  sol.newton_steps += opt.max_newton_steps - budget;
  sol.x = x;
  sol.objective = problem.objective(x);
  const QpDuals y = detail::central_path_duals(qp, x, t);
  sol.kkt_residual = kkt_residual(qp, x, y);
  sol.status = converged && sol.kkt_residual <= 1e-6 ? QpStatus::kOptimal : QpStatus::kMaxIter;
  for (std::size_t i = 0; i < y.soc_z.size(); ++i) {
    const double k = scaled.objective_scale / scaled.soc_scale[i];
    sol.duals.soc_z.push_back(k * y.soc_z[i]);
    sol.duals.soc_zeta.push_back(k * y.soc_zeta[i]);
  }
  for (std::size_t i = 0; i < y.linear.size(); ++i)
    sol.duals.linear.push_back(scaled.objective_scale / scaled.lin_scale[i] * y.linear[i]);
  for (std::size_t i = 0; i < y.quadratic.size(); ++i)
    sol.duals.quadratic.push_back(scaled.objective_scale / scaled.quad_scale[i] * y.quadratic[i]);
  return sol;
}

// Real lifting of complex vectors: x = [Re v; Im v].
namespace lifting {

inline VectorXd stack(const CVector& v) {
  VectorXd x(2 * v.size());
  x << v.real(), v.imag();
  return x;
}

inline CVector unstack(const VectorXd& x) {
  const Index n = x.size() / 2;
  CVector v(n);
  v.real() = x.head(n);
  v.imag() = x.tail(n);
  return v;
}

// v^H m v = x^T hermitian_form(m) x for Hermitian m.
inline MatrixXd hermitian_form(const CMatrix& m) {
  const Index n = m.rows();
  MatrixXd out(2 * n, 2 * n);
  out << m.real(), -m.imag(), m.imag(), m.real();
  return 0.5 * (out + out.transpose());
}

// Re(g^H v) = re_row(g) . x
inline VectorXd re_row(const CVector& g) {
  VectorXd r(2 * g.size());
  r << g.real(), g.imag();
  return r;
}

// Im(g^H v) = im_row(g) . x
inline VectorXd im_row(const CVector& g) {
  VectorXd r(2 * g.size());
  r << -g.imag(), g.real();
  return r;
}

}  // namespace lifting

}  // namespace isac
