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

#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace isac {

// Point on the complex circle manifold {phi : |phi_i| = 1}.
class CirclePoint {
 public:
  explicit CirclePoint(CVector phi, double tol = 1e-9) : phi_(std::move(phi)) {
    if (phi_.size() == 0) throw std::invalid_argument("circle point: empty vector");
    if (!phi_.allFinite() || !unit_modulus(phi_, tol)) throw std::invalid_argument("circle point: entries must have unit modulus");
  }

  // Elementwise normalization; zero entries are rejected.
  static CirclePoint normalized(const CVector& v) {
    CVector out(v.size());
    for (Index i = 0; i < v.size(); ++i) {
      const double m = std::abs(v(i));
      if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("circle point: cannot normalize a zero entry");
      out(i) = v(i) / m;
    }
    return CirclePoint(std::move(out), 1e-12);
  }

  static CirclePoint from_phases(const Eigen::VectorXd& phases) {
    CVector v(phases.size());
    for (Index i = 0; i < phases.size(); ++i) v(i) = std::polar(1.0, phases(i));
    return CirclePoint(std::move(v));
  }

  const CVector& value() const { return phi_; }
  Index size() const { return phi_.size(); }

 private:
  CVector phi_;
};

// Real inner product Re(a^H b).
inline double real_inner(const CVector& a, const CVector& b) { return std::real(a.dot(b)); }

inline CVector tangent_project(const CirclePoint& p, const CVector& g) {
  if (g.size() != p.size()) throw std::invalid_argument("tangent_project: size mismatch");
  const CVector& phi = p.value();
  CVector out(g.size());
  for (Index i = 0; i < g.size(); ++i) out(i) = g(i) - std::real(g(i) * std::conj(phi(i))) * phi(i);
  return out;
}

// Moves along xi and normalizes; an entry that lands exactly on zero keeps
// its previous value.
inline CirclePoint retract(const CirclePoint& p, const CVector& xi) {
  if (xi.size() != p.size()) throw std::invalid_argument("retract: size mismatch");
  CVector v = p.value() + xi;
  for (Index i = 0; i < v.size(); ++i) {
    const double m = std::abs(v(i));
    v(i) = m > 0.0 ? v(i) / m : p.value()(i);
  }
  return CirclePoint(std::move(v), 1e-12);
}

inline CVector transport(const CirclePoint& to, const CVector& xi) { return tangent_project(to, xi); }

// A real function of a complex vector with its Euclidean gradient
// (twice the Wirtinger derivative with respect to the conjugate).
struct SmoothFunction {
  std::function<double(const CVector&)> value;
  std::function<CVector(const CVector&)> gradient;
};

struct RcgOptions {
  double grad_tol = 1e-6;  // on the squared Riemannian gradient norm
  int max_iterations = 500;
  double armijo_beta = 0.5;
  double armijo_sigma = 1e-4;
  int max_backtracks = 50;
};

struct RcgResult {
  CirclePoint point;
  double value = 0.0;
  double grad_norm_sq = 0.0;
  int iterations = 0;
  bool converged = false;
  bool stagnated = false;
  std::vector<double> trace;
};

inline RcgResult rcg_minimize(const SmoothFunction& f, const CirclePoint& start, const RcgOptions& opt = {}) {
  if (!f.value || !f.gradient) throw std::invalid_argument("rcg_minimize: objective callbacks are required");
  RcgResult res{start, f.value(start.value()), 0.0, 0, false, false, {}};
  CirclePoint x = start;
  double fx = res.value;
  CVector g = tangent_project(x, f.gradient(x.value()));
  double gn2 = g.squaredNorm();
  CVector zeta = -g;
  double last_step = 0.0;
  res.trace.push_back(fx);
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (gn2 <= opt.grad_tol) {
      res.converged = true;
      break;
    }
    double slope = real_inner(g, zeta);
    if (!(slope < 0.0)) {
      zeta = -g;
      slope = -gn2;
    }
    double nu = last_step > 0.0 ? 2.0 * last_step : 1.0 / std::max(zeta.cwiseAbs().maxCoeff(), 1e-300);
    bool accepted = false;
    CirclePoint trial = x;
    double ft = fx;
    for (int m = 0; m <= opt.max_backtracks; ++m) {
      trial = retract(x, nu * zeta);
      ft = f.value(trial.value());
      if (ft <= fx + opt.armijo_sigma * nu * slope) {
        accepted = true;
        break;
      }
      nu *= opt.armijo_beta;
    }
    if (!accepted) {
      res.stagnated = true;
      break;
    }
    last_step = nu;
    const CVector g_new = tangent_project(trial, f.gradient(trial.value()));
    const CVector g_old = transport(trial, g);
    const double beta = std::max(0.0, real_inner(g_new, g_new - g_old) / std::max(gn2, 1e-300));
    zeta = -g_new + beta * transport(trial, zeta);
    x = trial;
    fx = ft;
    g = g_new;
    gn2 = g.squaredNorm();
    res.iterations = it + 1;
    res.trace.push_back(fx);
  }
  if (!res.converged && gn2 <= opt.grad_tol) res.converged = true;
  res.point = x;
  res.value = fx;
  res.grad_norm_sq = gn2;
  return res;
}

// Objective plus squared-hinge penalty terms (each zero when its constraint holds).
struct PenaltyProblem {
  SmoothFunction objective;
  std::vector<SmoothFunction> penalties;
};

inline SmoothFunction penalized(const PenaltyProblem& p, double lambda) {
  return SmoothFunction{[p, lambda](const CVector& phi) {
                          double v = p.objective.value(phi);
                          for (const auto& t : p.penalties) v += lambda * t.value(phi);
                          return v;
                        },
                        [p, lambda](const CVector& phi) {
                          CVector g = p.objective.gradient(phi);
                          for (const auto& t : p.penalties) g += lambda * t.gradient(phi);
                          return g;
                        }};
}

inline double max_penalty(const PenaltyProblem& p, const CVector& phi) {
  double v = 0.0;
  for (const auto& t : p.penalties) v = std::max(v, t.value(phi));
  return v;
}

struct PenaltyOptions {
  double lambda0 = 10.0;
  double scale = 0.2;             // lambda <- lambda / scale between rounds
  double violation_tol = 1e-5;    // on the largest penalty term
  int max_rounds = 30;
  RcgOptions rcg;
};

struct PenaltyResult {
  CirclePoint point;
  double lambda = 0.0;
  double max_violation = 0.0;
  int rounds = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // penalized objective after each round
};

inline PenaltyResult penalty_minimize(const PenaltyProblem& p, const CirclePoint& start, const PenaltyOptions& opt = {}) {
  if (!(opt.scale > 0.0 && opt.scale < 1.0)) throw std::invalid_argument("penalty_minimize: scale must lie in (0, 1)");
  if (!(opt.lambda0 > 0.0)) throw std::invalid_argument("penalty_minimize: lambda0 must be positive");
  PenaltyResult res{start, opt.lambda0, max_penalty(p, start.value()), 0, 0, false, {}};
  CirclePoint x = start;
  double lambda = opt.lambda0;
  CirclePoint best = start;
  double best_violation = res.max_violation;
  double best_objective = p.objective.value(start.value());
  for (int round = 0; round < opt.max_rounds; ++round) {
    const auto r = rcg_minimize(penalized(p, lambda), x, opt.rcg);
    x = r.point;
    res.iterations += r.iterations;
    res.rounds = round + 1;
    res.lambda = lambda;
    res.trace.push_back(r.value);
    const double viol = max_penalty(p, x.value());
    const double obj = p.objective.value(x.value());
    if (viol < best_violation || (viol <= opt.violation_tol && obj < best_objective)) {
      best = x;
      best_violation = viol;
      best_objective = obj;
    }
    if (viol <= opt.violation_tol) {
      res.converged = true;
      res.point = x;
      res.max_violation = viol;
      return res;
    }
    lambda /= opt.scale;
  }
  res.point = best;
  res.max_violation = best_violation;
  return res;
}

}  // namespace isac
