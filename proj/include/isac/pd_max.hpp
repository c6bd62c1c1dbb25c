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

// Detection-probability maximization under per-user SINR floors and a power
// budget: bisection on the detection target, each step answered by a
// minimum-power problem solved by alternating BB (SCA over SOC programs) and
// RF (penalized conjugate gradient on the circle manifold) updates.
//
// Functions taking a "normalized" ChannelSet expect channels already divided
// by the user noise amplitude (see noise_normalized), so every noise power is 1.

#include "isac/core_model.hpp"
#include "isac/detection.hpp"
#include "isac/manifold_opt.hpp"
#include "isac/solve_report.hpp"
#include "isac/subproblem_solver.hpp"

#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace isac {

inline CVector vec(const CMatrix& m) { return Eigen::Map<const CVector>(m.data(), m.size()); }

inline CMatrix unvec(const CVector& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw std::invalid_argument("unvec: size mismatch");
  return Eigen::Map<const CMatrix>(v.data(), rows, cols);
}

inline double precoder_power(const CMatrix& rf, const CMatrix& bb) { return (rf * bb).squaredNorm(); }

inline double beampattern_power(const CVector& steer, const CMatrix& rf, const CMatrix& bb) {
  return (steer.adjoint() * rf * bb).squaredNorm();
}

// Phase-only column matched to v.
inline CVector phase_of(const CVector& v) {
  CVector out(v.size());
  for (Index i = 0; i < v.size(); ++i) out(i) = std::abs(v(i)) > 0.0 ? v(i) / std::abs(v(i)) : cd(1.0);
  return out;
}

// RF columns: target, then each user's equal-gain match, cycling with a
// 2q/N_t shift in sin-space once the base directions are used up.
inline CMatrix initial_rf(const ChannelSet& ch, Index n_rf) {
  const Index nt = ch.n_tx();
  std::vector<CVector> base{phase_of(ch.steer)};
  for (const auto& h : ch.h) base.push_back(phase_of(h));
  CMatrix rf(nt, n_rf);
  const auto nb = static_cast<Index>(base.size());
  for (Index r = 0; r < n_rf; ++r) {
    const Index q = r / nb;
    CVector col = base[static_cast<std::size_t>(r % nb)];
    for (Index n = 0; n < nt; ++n)
      col(n) *= std::polar(1.0, std::numbers::pi * static_cast<double>(n) * 2.0 * static_cast<double>(q) /
                                    static_cast<double>(nt));
    rf.col(r) = col;
  }
  return rf;
}

// Least-squares fit of normalized MRT through rf, scaled to the given power.
inline CMatrix mrt_baseband(const ChannelSet& ch, const CMatrix& rf, double power) {
  const Index k = ch.n_users();
  CMatrix f(ch.n_tx(), k);
  for (Index i = 0; i < k; ++i) f.col(i) = ch.h[static_cast<std::size_t>(i)].normalized();
  CMatrix gram = rf.adjoint() * rf;
  gram.diagonal().array() += 1e-9 * std::max(1.0, gram.diagonal().real().maxCoeff());
  CMatrix bb = gram.ldlt().solve(rf.adjoint() * f);
  const double p = precoder_power(rf, bb);
  if (!(p > 0.0)) throw std::runtime_error("mrt_baseband: degenerate analog precoder");
  return bb * std::sqrt(power / p);
}

inline HybridPrecoder initial_precoder(const ChannelSet& ch, Index n_rf, double power, bool fully_digital = false) {
  HybridPrecoder p;
  p.fully_digital = fully_digital;
  p.rf = fully_digital ? CMatrix(CMatrix::Identity(ch.n_tx(), ch.n_tx())) : initial_rf(ch, n_rf);
  p.bb = mrt_baseband(ch, p.rf, 0.5 * power);
  return p;
}

// Rotates each BB column so that the effective channel gain g_k^H v_k is real and non-negative.
inline CMatrix common_phase_rotate(const ChannelSet& chn, const CMatrix& rf, const CMatrix& bb) {
  CMatrix out = bb;
  for (Index k = 0; k < bb.cols(); ++k) {
    const cd t = chn.h[static_cast<std::size_t>(k)].dot(rf * bb.col(k));
    if (std::abs(t) > 0.0) out.col(k) *= std::conj(t) / std::abs(t);
  }
  return out;
}

// Largest relative shortfall of the SINR floors (normalized channels) and of the beampattern floor.
inline double constraint_shortfall(const ChannelSet& chn, const CMatrix& rf, const CMatrix& bb, double omega,
                                   std::span<const double> gamma) {
  HybridPrecoder p{rf, bb, false};
  double worst = 0.0;
  for (Index k = 0; k < chn.n_users(); ++k) {
    const double g = gamma[static_cast<std::size_t>(k)];
    if (g > 0.0) worst = std::max(worst, (g - sinr(k, chn, p, 1.0)) / g);
  }
  if (omega > 0.0) worst = std::max(worst, (omega - beampattern_power(chn.steer, rf, bb)) / omega);
  return worst;
}

// Lifted BB subproblem at expansion point bb_prev, variable x = [Re vec(V_BB); Im vec(V_BB)]:
// minimize sum_k v_k^H M v_k subject to the per-user SINR cones and the
// beampattern floor linearized at bb_prev.
inline ConvexQp build_bb_subproblem(const ChannelSet& chn, const CMatrix& rf, const CMatrix& bb_prev, double omega,
                                    std::span<const double> gamma) {
  const Index n_rf = rf.cols();
  const Index k_users = chn.n_users();
  if (bb_prev.rows() != n_rf || bb_prev.cols() != k_users) throw std::invalid_argument("bb subproblem: shape mismatch");
  if (static_cast<Index>(gamma.size()) != k_users) throw std::invalid_argument("bb subproblem: one SINR target per user");
  const Index n = n_rf * k_users;
  ConvexQp qp;
  qp.dim = 2 * n;
  const CMatrix m = rf.adjoint() * rf;
  CMatrix blocks = CMatrix::Zero(n, n);
  for (Index k = 0; k < k_users; ++k) blocks.block(k * n_rf, k * n_rf, n_rf, n_rf) = m;
  qp.quad = lifting::hermitian_form(blocks);
  qp.lin = VectorXd::Zero(qp.dim);
  for (Index k = 0; k < k_users; ++k) {
    const double g_k = gamma[static_cast<std::size_t>(k)];
    if (!(g_k > 0.0)) continue;
    const CVector g = rf.adjoint() * chn.h[static_cast<std::size_t>(k)];
    SocConstraint s;
    s.a = MatrixXd::Zero(2 * k_users + 1, qp.dim);
    for (Index i = 0; i < k_users; ++i) {
      CVector gi = CVector::Zero(n);
      gi.segment(i * n_rf, n_rf) = g;
      s.a.row(2 * i) = lifting::re_row(gi).transpose();
      s.a.row(2 * i + 1) = lifting::im_row(gi).transpose();
      if (i == k) s.c = std::sqrt(1.0 + 1.0 / g_k) * lifting::re_row(gi);
    }
    s.b = VectorXd::Zero(2 * k_users + 1);
    s.b(2 * k_users) = 1.0;
    s.d = 0.0;
    qp.soc.push_back(std::move(s));
  }
  if (omega > 0.0) {
    const CVector c = rf.adjoint() * chn.steer;
    CVector w(n);
    double current = 0.0;
    for (Index k = 0; k < k_users; ++k) {
      const cd proj = c.dot(bb_prev.col(k));
      w.segment(k * n_rf, n_rf) = c * proj;
      current += std::norm(proj);
    }
    qp.linear.push_back({2.0 * lifting::re_row(w), omega + current});
  }
  return qp;
}

struct ScaResult {
  CMatrix bb;
  bool feasible = false;
  double power = std::numeric_limits<double>::infinity();
  int iterations = 0;
  QpStatus last_status = QpStatus::kMaxIter;
  std::vector<double> trace;
};

inline ScaResult sca_bb_optimize(const ChannelSet& chn, const CMatrix& rf, const CMatrix& bb_start, double omega,
                                 std::span<const double> gamma, const Tolerances& tol, const QpOptions& qp_opt = {}) {
  ScaResult r;
  r.bb = bb_start;
  CMatrix bb = common_phase_rotate(chn, rf, bb_start);
  const Index n_rf = rf.cols();
  const Index k_users = chn.n_users();
  for (int j = 0; j < tol.max_sca; ++j) {
    const ConvexQp qp = build_bb_subproblem(chn, rf, bb, omega, gamma);
    const QpSolution sol = solve(qp, qp_opt, lifting::stack(vec(bb)));
    r.last_status = sol.status;
    if (sol.status == QpStatus::kInfeasible) break;
    const CMatrix cand = unvec(lifting::unstack(sol.x), n_rf, k_users);
    if (constraint_shortfall(chn, rf, cand, omega, gamma) > 1e-9) break;
    const double p = precoder_power(rf, cand);
    if (r.feasible && p > r.power) break;
    const double previous = r.power;
    r.bb = cand;
    r.power = p;
    r.feasible = true;
    r.iterations = j + 1;
    r.trace.push_back(p);
    if (std::isfinite(previous) && previous - p <= tol.sca) break;
    bb = common_phase_rotate(chn, rf, cand);
  }
  return r;
}

namespace detail {

inline Eigen::Map<const CMatrix> as_matrix(const CVector& phi, Index rows, Index cols) {
  return Eigen::Map<const CMatrix>(phi.data(), rows, cols);
}

}  // namespace detail

// RF subproblem for fixed BB: minimize ||V_RF V_BB||^2 with squared-hinge
// penalties on the SINR floors and on the beampattern floor.
inline PenaltyProblem rf_penalty_problem(const ChannelSet& chn, const CMatrix& bb, double omega,
                                         std::span<const double> gamma) {
  const Index nt = chn.n_tx();
  const Index n_rf = bb.rows();
  const CMatrix bbh = bb * bb.adjoint();
  PenaltyProblem p;
  p.objective = {[=](const CVector& phi) { return (detail::as_matrix(phi, nt, n_rf) * bb).squaredNorm(); },
                 [=](const CVector& phi) { return vec(2.0 * detail::as_matrix(phi, nt, n_rf) * bbh); }};
  for (Index k = 0; k < chn.n_users(); ++k) {
    const double g_k = gamma[static_cast<std::size_t>(k)];
    if (!(g_k > 0.0)) continue;
    const CVector h = chn.h[static_cast<std::size_t>(k)];
    // q(phi) = h^H V R V^H h + g_k with R = g_k sum_{i != k} b_i b_i^H - b_k b_k^H
    const CMatrix r = g_k * (bbh - bb.col(k) * bb.col(k).adjoint()) - bb.col(k) * bb.col(k).adjoint();
    auto shortfall = [=](const CVector& phi, Eigen::RowVectorXcd& hv) {
      hv = h.adjoint() * detail::as_matrix(phi, nt, n_rf);
      return std::real((hv * r * hv.adjoint())(0, 0)) + g_k;
    };
    p.penalties.push_back({[=](const CVector& phi) {
                             Eigen::RowVectorXcd hv;
                             const double s = std::max(0.0, shortfall(phi, hv));
                             return s * s;
                           },
                           [=](const CVector& phi) {
                             Eigen::RowVectorXcd hv;
                             const double s = std::max(0.0, shortfall(phi, hv));
                             if (s == 0.0) return CVector(CVector::Zero(nt * n_rf));
                             return vec(4.0 * s * h * (hv * r));
                           }});
  }
  if (omega > 0.0) {
    const CVector a = chn.steer;
    p.penalties.push_back({[=](const CVector& phi) {
                             const double s = std::max(0.0, omega - (a.adjoint() * detail::as_matrix(phi, nt, n_rf) * bb).squaredNorm());
                             return s * s;
                           },
                           [=](const CVector& phi) {
                             const auto v = detail::as_matrix(phi, nt, n_rf);
                             const Eigen::RowVectorXcd av = a.adjoint() * v;
                             const double s = std::max(0.0, omega - (av * bb).squaredNorm());
                             if (s == 0.0) return CVector(CVector::Zero(nt * n_rf));
                             return vec(-4.0 * s * a * (av * bbh));
                           }});
  }
  return p;
}

inline SmoothFunction rf_penalized_objective(const ChannelSet& chn, const CMatrix& bb, double omega,
                                             std::span<const double> gamma, double lambda) {
  return penalized(rf_penalty_problem(chn, bb, omega, gamma), lambda);
}

inline PenaltyOptions penalty_options(const Tolerances& tol) {
  PenaltyOptions o;
  o.lambda0 = tol.penalty_init;
  o.scale = tol.penalty_scale;
  o.violation_tol = tol.penalty;
  o.max_rounds = tol.max_penalty_rounds;
  o.rcg.grad_tol = tol.rcg_gradient;
  o.rcg.max_iterations = tol.max_rcg;
  return o;
}

struct InnerOptions {
  bool optimize_rf = true;
  bool stop_when_feasible = true;
  QpOptions qp;
};

struct InnerResult {
  HybridPrecoder precoder;
  bool feasible = false;
  double power = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<double> trace;  // J after each accepted step
};

// Minimum-power hybrid design meeting the SINR floors and the beampattern
// floor omega, by alternating BB and RF updates from the given start.
inline InnerResult inner_bcd(const ChannelSet& chn, const HybridPrecoder& start, double omega,
                             std::span<const double> gamma, double power_budget, const Tolerances& tol,
                             const InnerOptions& opt = {}) {
  InnerResult res;
  res.precoder = start;
  CMatrix rf = start.rf;
  CMatrix bb = start.bb;
  double j_cur = std::numeric_limits<double>::infinity();
  const auto sca = sca_bb_optimize(chn, rf, bb, omega, gamma, tol, opt.qp);
  if (sca.feasible) {
    bb = sca.bb;
    j_cur = sca.power;
    res.trace.push_back(j_cur);
  }
  auto done = [&] { return opt.stop_when_feasible && j_cur <= power_budget; };
  const bool rf_free = opt.optimize_rf && !start.fully_digital;
  const auto popt = penalty_options(tol);
  for (int it = 0; it < tol.max_inner && rf_free && !done(); ++it) {
    const auto pen = penalty_minimize(rf_penalty_problem(chn, bb, omega, gamma), CirclePoint(vec(rf), 1e-8), popt);
    const CMatrix rf_c = unvec(pen.point.value(), rf.rows(), rf.cols());
    const auto bb_c = sca_bb_optimize(chn, rf_c, bb, omega, gamma, tol, opt.qp);
    res.iterations = it + 1;
    if (!bb_c.feasible || bb_c.power > j_cur) break;
    const double previous = j_cur;
    rf = rf_c;
    bb = bb_c.bb;
    j_cur = bb_c.power;
    res.trace.push_back(j_cur);
    if (std::isfinite(previous) && previous - j_cur <= tol.inner) break;
  }
  res.precoder = HybridPrecoder{rf, bb, start.fully_digital};
  res.power = j_cur;
  res.feasible = std::isfinite(j_cur) && j_cur <= power_budget * (1.0 + 1e-9) &&
                 constraint_shortfall(chn, rf, bb, omega, gamma) <= 1e-6;
  return res;
}

struct PdMaxOptions {
  bool optimize_rf = true;
  bool stop_when_feasible = true;
  std::optional<HybridPrecoder> start;
  QpOptions qp;
};

struct PdMaxResult {
  HybridPrecoder precoder;
  bool feasible = false;
  double detection_probability = std::numeric_limits<double>::quiet_NaN();
  double eta_lo = 0.0;
  double eta_hi = 1.0;
  double rho_tilde = 0.0;
  double omega = 0.0;
  SolveReport report;
};

inline double omega_for_target(double eta, const DetectionSpec& spec) {
  if (eta <= spec.pfa) return 0.0;
  return spec.beampattern_floor(required_noncentrality(eta, spec));
}

// Bisection on the detection target; the returned precoder is the last
// feasible one, scaled to the full power budget.
inline PdMaxResult bi_alt(const ChannelSet& ch, const Scenario& sc, const PdMaxOptions& opt = {}) {
  sc.validate();
  Stopwatch clock;
  const ChannelSet chn = noise_normalized(ch, sc.user_noise_w);
  const DetectionSpec spec = detection_spec(sc);
  const double budget = sc.tx_power_w;
  const std::span<const double> gamma(sc.sinr_threshold);
  PdMaxResult res;
  res.report.algorithm = "pd-max";
  HybridPrecoder current = opt.start ? *opt.start : initial_precoder(chn, sc.n_rf, budget);
  std::optional<HybridPrecoder> best;
  InnerOptions iopt{opt.optimize_rf, opt.stop_when_feasible, opt.qp};
  while (res.eta_hi - res.eta_lo > sc.tol.bisection) {
    const double eta = 0.5 * (res.eta_lo + res.eta_hi);
    const double omega = omega_for_target(eta, spec);
    bool feasible = false;
    if (omega <= budget) {
      const auto inner = inner_bcd(chn, current, omega, gamma, budget, sc.tol, iopt);
      res.report.inner_traces.push_back(inner.trace);
      if (!inner.trace.empty()) current = inner.precoder;
      feasible = inner.feasible;
      if (feasible) {
        best = inner.precoder;
        res.rho_tilde = eta <= spec.pfa ? 0.0 : required_noncentrality(eta, spec);
        res.omega = omega;
      }
    }
    (feasible ? res.eta_lo : res.eta_hi) = eta;
    res.report.feasible_trace.push_back(feasible);
    res.report.objective_trace.push_back(res.eta_lo);
    ++res.report.iterations;
  }
  if (!best) {
    const auto inner = inner_bcd(chn, current, 0.0, gamma, budget, sc.tol, iopt);
    if (inner.feasible) best = inner.precoder;
  }
  res.report.wall_time_s = clock.seconds();
  if (!best) {
    res.report.status = SolveStatus::kInfeasible;
    res.precoder = current;
    return res;
  }
  HybridPrecoder out = *best;
  out.bb *= std::sqrt(budget / precoder_power(out.rf, out.bb));
  res.precoder = out;
  res.feasible = true;
  res.detection_probability = detection_probability(ch, out, spec);
  for (Index k = 0; k < chn.n_users(); ++k)
    res.report.constraint_residuals.push_back(sinr(k, chn, out, 1.0) - gamma[static_cast<std::size_t>(k)]);
  res.report.status = SolveStatus::kConverged;
  res.report.wall_time_s = clock.seconds();
  return res;
}

}  // namespace isac
