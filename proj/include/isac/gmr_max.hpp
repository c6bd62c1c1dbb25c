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

// Geometric-mean rate maximization under a detection floor and a power
// budget: each outer step reweights the users by max_j R_j / R_k, then
// improves BB through a concave quadratic minorant of the weighted rate sum
// (one convex QP) and RF through the same minorant in the vectorized RF
// variable (penalized conjugate gradient). Steps that would lower the
// geometric mean or break a constraint are backtracked or rejected.

#include "isac/pd_max.hpp"

namespace isac {

// u_k = max_j R_j / R_k, with rates floored at `floor` (bits).
inline std::vector<double> update_weights(std::span<const double> rates_bits, double floor,
                                          std::vector<std::string>* warnings = nullptr) {
  if (rates_bits.empty()) throw std::invalid_argument("update_weights: empty rate vector");
  if (!(floor > 0.0)) throw std::invalid_argument("update_weights: floor must be positive");
  std::vector<double> r(rates_bits.begin(), rates_bits.end());
  for (auto& x : r) {
    if (!(x >= floor)) {
      if (warnings) warnings->push_back("rate floored at " + std::to_string(floor) + " bits for weight update");
      x = floor;
    }
  }
  const double top = *std::max_element(r.begin(), r.end());
  std::vector<double> u;
  for (double x : r) u.push_back(top / x);
  return u;
}

// Per-user minorant coefficients of ln(1 + SINR_k) at an expansion point:
// ln(1 + SINR_k(v)) >= 2 Re{a_k s_k(v)} - b_k (sum_i |h_k^H V v_i|^2 + 1) + ln(1 + g_k) - g_k,
// with s_k(v) = h_k^H V v_k, a_k = g_k / s_k, b_k = g_k / (sum_i |h_k^H V v_i|^2 + 1).
struct RateMinorant {
  std::vector<cd> a;
  std::vector<double> b;
  std::vector<double> c;  // ln(1 + g) - g - b, so the bound reads 2 Re{a s} - b sum_i |.|^2 + c

  double value(const ChannelSet& chn, const CMatrix& rf, const CMatrix& bb, std::span<const double> weights) const {
    double v = 0.0;
    for (Index k = 0; k < chn.n_users(); ++k) {
      const auto ks = static_cast<std::size_t>(k);
      const Eigen::RowVectorXcd t = chn.h[ks].adjoint() * rf * bb;
      v += weights[ks] * (2.0 * std::real(a[ks] * t(k)) - b[ks] * t.squaredNorm() + c[ks]);
    }
    return v;
  }
};

inline RateMinorant rate_minorant(const ChannelSet& chn, const CMatrix& rf, const CMatrix& bb) {
  RateMinorant m;
  for (Index k = 0; k < chn.n_users(); ++k) {
    const Eigen::RowVectorXcd t = chn.h[static_cast<std::size_t>(k)].adjoint() * rf * bb;
    const double total = t.squaredNorm() + 1.0;
    const double s2 = std::norm(t(k));
    if (!(s2 > 0.0)) throw std::domain_error("rate_minorant: zero effective gain");
    const double g = s2 / (total - s2);
    m.a.push_back(g / t(k));
    m.b.push_back(g / total);
    m.c.push_back(std::log1p(g) - g - g / total);
  }
  return m;
}

// Weighted ln-rate sum, the quantity the minorants bound from below.
inline double weighted_log_rate(const ChannelSet& chn, const CMatrix& rf, const CMatrix& bb,
                                std::span<const double> weights) {
  const HybridPrecoder p{rf, bb, false};
  double v = 0.0;
  for (Index k = 0; k < chn.n_users(); ++k) v += weights[static_cast<std::size_t>(k)] * std::log1p(sinr(k, chn, p, 1.0));
  return v;
}

// Nudges columns with zero effective gain toward their user.
inline CMatrix ensure_nonzero_gain(const ChannelSet& chn, const CMatrix& rf, const CMatrix& bb) {
  CMatrix out = bb;
  for (Index k = 0; k < bb.cols(); ++k) {
    const CVector g = rf.adjoint() * chn.h[static_cast<std::size_t>(k)];
    if (std::norm(g.dot(bb.col(k))) > 0.0) continue;
    if (!(g.norm() > 0.0)) throw std::domain_error("ensure_nonzero_gain: user unreachable through analog precoder");
    out.col(k) += 1e-8 * g.normalized();
  }
  return out;
}

// BB minorant problem: minimize sum_i v_i^H Phi v_i - 2 Re sum_k d_k v_k
// subject to the power budget and the linearized beampattern floor.
inline ConvexQp build_bb_minorant(const ChannelSet& chn, const CMatrix& rf, const CMatrix& bb,
                                  std::span<const double> weights, double omega, double power_budget) {
  const Index n_rf = rf.cols();
  const Index k_users = chn.n_users();
  const Index n = n_rf * k_users;
  const RateMinorant mm = rate_minorant(chn, rf, bb);
  CMatrix phi = CMatrix::Zero(n_rf, n_rf);
  CVector lin = CVector::Zero(n);  // d^H stacked per user
  for (Index k = 0; k < k_users; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const CVector g = rf.adjoint() * chn.h[ks];
    phi += weights[ks] * mm.b[ks] * g * g.adjoint();
    lin.segment(k * n_rf, n_rf) = std::conj(weights[ks] * mm.a[ks]) * g;
  }
  CMatrix blocks = CMatrix::Zero(n, n);
  CMatrix power = CMatrix::Zero(n, n);
  const CMatrix m = rf.adjoint() * rf;
  for (Index k = 0; k < k_users; ++k) {
    blocks.block(k * n_rf, k * n_rf, n_rf, n_rf) = phi;
    power.block(k * n_rf, k * n_rf, n_rf, n_rf) = m;
  }
  ConvexQp qp;
  qp.dim = 2 * n;
  qp.quad = lifting::hermitian_form(blocks);
  qp.lin = -2.0 * lifting::re_row(lin);
  qp.quadratic.push_back({lifting::hermitian_form(power), power_budget});
  if (omega > 0.0) {
    const CVector c = rf.adjoint() * chn.steer;
    CVector w(n);
    double current = 0.0;
    for (Index k = 0; k < k_users; ++k) {
      const cd proj = c.dot(bb.col(k));
      w.segment(k * n_rf, n_rf) = c * proj;
      current += std::norm(proj);
    }
    qp.linear.push_back({2.0 * lifting::re_row(w), omega + current});
  }
  return qp;
}

// RF minorant problem for fixed BB with coefficients taken at (rf_prev, bb):
// minimize sum_k u_k b_k ||h_k^H V B||^2 - 2 Re sum_k u_k a_k h_k^H V b_k
// with squared-hinge penalties on the beampattern floor and the power budget.
inline PenaltyProblem rf_minorant_problem(const ChannelSet& chn, const CMatrix& rf_prev, const CMatrix& bb,
                                          std::span<const double> weights, double omega, double power_budget) {
  const Index nt = chn.n_tx();
  const Index n_rf = bb.rows();
  const RateMinorant mm = rate_minorant(chn, rf_prev, bb);
  const CMatrix bbh = bb * bb.adjoint();
  std::vector<CVector> h = chn.h;
  std::vector<double> wb;
  std::vector<cd> wa;
  for (std::size_t k = 0; k < h.size(); ++k) {
    wb.push_back(weights[k] * mm.b[k]);
    wa.push_back(weights[k] * mm.a[k]);
  }
  PenaltyProblem p;
  p.objective = {[=](const CVector& phi) {
                   const auto v = detail::as_matrix(phi, nt, n_rf);
                   double f = 0.0;
                   for (std::size_t k = 0; k < h.size(); ++k) {
                     const Eigen::RowVectorXcd t = h[k].adjoint() * v * bb;
                     f += wb[k] * t.squaredNorm() - 2.0 * std::real(wa[k] * t(static_cast<Index>(k)));
                   }
                   return f;
                 },
                 [=](const CVector& phi) {
                   const auto v = detail::as_matrix(phi, nt, n_rf);
                   CMatrix g = CMatrix::Zero(nt, n_rf);
                   for (std::size_t k = 0; k < h.size(); ++k) {
                     const Eigen::RowVectorXcd hv = h[k].adjoint() * v;
                     g += 2.0 * wb[k] * h[k] * (hv * bbh);
                     g -= 2.0 * std::conj(wa[k]) * h[k] * bb.col(static_cast<Index>(k)).adjoint();
                   }
                   return vec(g);
                 }};
  if (omega > 0.0) {
    const CVector a = chn.steer;
    p.penalties.push_back({[=](const CVector& phi) {
                             const double s = std::max(0.0, omega - (a.adjoint() * detail::as_matrix(phi, nt, n_rf) * bb).squaredNorm());
                             return s * s;
                           },
                           [=](const CVector& phi) {
                             const Eigen::RowVectorXcd av = a.adjoint() * detail::as_matrix(phi, nt, n_rf);
                             const double s = std::max(0.0, omega - (av * bb).squaredNorm());
                             if (s == 0.0) return CVector(CVector::Zero(nt * n_rf));
                             return vec(-4.0 * s * a * (av * bbh));
                           }});
  }
  p.penalties.push_back({[=](const CVector& phi) {
                           const double s = std::max(0.0, (detail::as_matrix(phi, nt, n_rf) * bb).squaredNorm() - power_budget);
                           return s * s;
                         },
                         [=](const CVector& phi) {
                           const auto v = detail::as_matrix(phi, nt, n_rf);
                           const double s = std::max(0.0, (v * bb).squaredNorm() - power_budget);
                           if (s == 0.0) return CVector(CVector::Zero(nt * n_rf));
                           return vec(4.0 * s * v * bbh);
                         }});
  return p;
}

struct GmrOptions {
  bool sum_rate = false;  // unit weights: sum-rate maximization
  bool optimize_rf = true;
  bool fully_digital = false;  // rf = I, no analog step
  std::optional<HybridPrecoder> start;
  QpOptions qp;
};

struct GmrResult {
  HybridPrecoder precoder;
  bool feasible = false;
  double gm_rate = std::numeric_limits<double>::quiet_NaN();
  double sum_rate = std::numeric_limits<double>::quiet_NaN();
  double min_rate = std::numeric_limits<double>::quiet_NaN();
  double detection_probability = std::numeric_limits<double>::quiet_NaN();
  double omega = 0.0;
  SolveReport report;
};

namespace detail {

struct MmState {
  const ChannelSet& chn;
  double omega;
  double budget;
  bool sum_rate;

  double objective(const CMatrix& rf, const CMatrix& bb) const {
    const HybridPrecoder p{rf, bb, false};
    std::vector<double> r;
    for (Index k = 0; k < chn.n_users(); ++k) r.push_back(std::log2(1.0 + sinr(k, chn, p, 1.0)));
    return sum_rate ? std::accumulate(r.begin(), r.end(), 0.0) : geometric_mean(r);
  }
  bool feasible(const CMatrix& rf, const CMatrix& bb) const {
    return precoder_power(rf, bb) <= budget * (1.0 + 1e-9) &&
           (omega <= 0.0 || beampattern_power(chn.steer, rf, bb) >= omega * (1.0 - 1e-9));
  }
};

}  // namespace detail

inline double detection_floor(const Scenario& sc, const DetectionSpec& spec) {
  return sc.pd_threshold > spec.pfa ? spec.beampattern_floor(required_noncentrality(sc.pd_threshold, spec)) : 0.0;
}

// Starting point: minimum-power sensing design at the detection floor, scaled to full power.
inline std::optional<HybridPrecoder> gmr_initial_precoder(const ChannelSet& chn, const Scenario& sc, double omega,
                                                          bool optimize_rf, bool fully_digital, const QpOptions& qp) {
  HybridPrecoder p = initial_precoder(chn, fully_digital ? sc.n_tx : sc.n_rf, sc.tx_power_w, fully_digital);
  if (omega > 0.0) {
    const std::vector<double> none(static_cast<std::size_t>(chn.n_users()), 0.0);
    const auto inner = inner_bcd(chn, p, omega, none, sc.tx_power_w, sc.tol, InnerOptions{optimize_rf, true, qp});
    if (!inner.feasible) return std::nullopt;
    p = inner.precoder;
  }
  p.bb *= std::sqrt(sc.tx_power_w / precoder_power(p.rf, p.bb));
  return p;
}

inline GmrResult mm_alt(const ChannelSet& ch, const Scenario& sc, const GmrOptions& opt = {}) {
  sc.validate();
  Stopwatch clock;
  const ChannelSet chn = noise_normalized(ch, sc.user_noise_w);
  const DetectionSpec spec = detection_spec(sc);
  GmrResult res;
  res.report.algorithm = opt.sum_rate ? "sr-max" : "gmr-max";
  const double budget = sc.tx_power_w;
  res.omega = detection_floor(sc, spec);
  const bool fully_digital = opt.start ? opt.start->fully_digital : opt.fully_digital;
  if (fully_digital && !opt.sum_rate) res.report.algorithm = "fdb-gmr";
  std::optional<HybridPrecoder> start =
      opt.start ? opt.start
                : gmr_initial_precoder(chn, sc, res.omega, opt.optimize_rf && !fully_digital, fully_digital, opt.qp);
  if (res.omega > budget || !start) {
    res.report.status = SolveStatus::kInfeasible;
    res.report.wall_time_s = clock.seconds();
    if (start) res.precoder = *start;
    return res;
  }
  const detail::MmState st{chn, res.omega, budget, opt.sum_rate};
  CMatrix rf = start->rf;
  CMatrix bb = ensure_nonzero_gain(chn, rf, start->bb);
  if (!st.feasible(rf, bb)) {
    res.report.status = SolveStatus::kInfeasible;
    res.report.wall_time_s = clock.seconds();
    res.precoder = *start;
    return res;
  }
  const bool rf_free = opt.optimize_rf && !fully_digital;
  const auto popt = penalty_options(sc.tol);
  double obj = st.objective(rf, bb);
  res.report.objective_trace.push_back(obj);
  res.report.status = SolveStatus::kMaxIter;
  const std::vector<double> unit(static_cast<std::size_t>(chn.n_users()), 1.0);
  for (int it = 0; it < sc.tol.max_mm; ++it) {
    const double before = obj;
    const HybridPrecoder cur{rf, bb, fully_digital};
    std::vector<double> w = opt.sum_rate ? unit : update_weights(rates(chn, cur, unit), sc.tol.rate_floor, &res.report.warnings);
    // BB step: backtrack toward the previous BB if the minorant step lowers the
    // objective, otherwise keep stepping further along the same direction
    // while it still pays off. Every trial is scaled to the full budget: a
    // common scale-up raises each SINR and the beampattern, and the minorant
    // maximizer is not unique (rank-deficient quadratic), so the QP may return
    // a point that leaves power unused.
    bb = ensure_nonzero_gain(chn, rf, bb);
    const auto qp = build_bb_minorant(chn, rf, bb, w, res.omega, budget);
    const auto sol = solve(qp, opt.qp, lifting::stack(vec(bb)));
    if (sol.status != QpStatus::kInfeasible) {
      const CMatrix from = bb;
      const CMatrix dir = unvec(lifting::unstack(sol.x), bb.rows(), bb.cols()) - from;
      auto attempt = [&](double alpha) {
        CMatrix trial = from + alpha * dir;
        const double p = precoder_power(rf, trial);
        if (!(p > 0.0)) return false;
        trial *= std::sqrt(budget / p);
        const double v = st.objective(rf, trial);
        if (!st.feasible(rf, trial) || !(v >= obj)) return false;
        const bool gained = v > obj;
        bb = trial;
        obj = v;
        return gained;
      };
      double alpha = 1.0;
      while (alpha >= 1.0 / 1024.0 && !attempt(alpha)) alpha *= 0.5;
      if (alpha == 1.0)
        for (double a = 2.0; a <= 1024.0 && attempt(a); a *= 2.0) {
        }
    }
    // RF step: minorant with penalties, then exact feasibility repair or rejection
    if (rf_free) {
      bb = ensure_nonzero_gain(chn, rf, bb);
      const auto pen =
          penalty_minimize(rf_minorant_problem(chn, rf, bb, w, res.omega, budget), CirclePoint(vec(rf), 1e-8), popt);
      const CMatrix rf_c = unvec(pen.point.value(), rf.rows(), rf.cols());
      CMatrix bb_c = bb;
      const double p = precoder_power(rf_c, bb_c);
      if (p > budget) bb_c *= std::sqrt(budget / p);
      if (!st.feasible(rf_c, bb_c)) {
        const auto fix = solve(build_bb_minorant(chn, rf_c, ensure_nonzero_gain(chn, rf_c, bb_c), w, res.omega, budget),
                               opt.qp);
        if (fix.status != QpStatus::kInfeasible) bb_c = unvec(lifting::unstack(fix.x), bb.rows(), bb.cols());
      }
      if (st.feasible(rf_c, bb_c)) {
        const double v = st.objective(rf_c, bb_c);
        if (v >= obj) {
          rf = rf_c;
          bb = bb_c;
          obj = v;
        }
      }
    }
    res.report.objective_trace.push_back(obj);
    res.report.iterations = it + 1;
    if (std::abs(obj - before) <= sc.tol.mm) {
      res.report.status = SolveStatus::kConverged;
      break;
    }
  }
  const HybridPrecoder out{rf, bb, fully_digital};
  const std::vector<double> unit_noise(static_cast<std::size_t>(chn.n_users()), 1.0);
  const auto r = rates(chn, out, unit_noise);
  res.precoder = out;
  res.feasible = true;
  res.gm_rate = geometric_mean(r);
  res.sum_rate = std::accumulate(r.begin(), r.end(), 0.0);
  res.min_rate = *std::min_element(r.begin(), r.end());
  res.detection_probability = detection_probability(ch, out, spec);
  res.report.wall_time_s = clock.seconds();
  return res;
}

}  // namespace isac
