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

// Reference designs: sensing-only detection, fully digital precoding and
// max-min fairness. All return the same metric bundle as the main designs.

#include "isac/gmr_max.hpp"

namespace isac {

// Everything a sweep reports for one precoder on one channel realization.
struct DesignResult {
  HybridPrecoder precoder;
  bool feasible = false;
  double detection_probability = std::numeric_limits<double>::quiet_NaN();
  double gm_rate = std::numeric_limits<double>::quiet_NaN();
  double sum_rate = std::numeric_limits<double>::quiet_NaN();
  double min_rate = std::numeric_limits<double>::quiet_NaN();
  double power = std::numeric_limits<double>::quiet_NaN();
  SolveReport report;
};

// Metrics of a precoder in physical units; infeasible designs keep NaN.
inline DesignResult evaluate(const ChannelSet& ch, const Scenario& sc, const HybridPrecoder& p, bool feasible,
                             SolveReport report) {
  DesignResult d;
  d.precoder = p;
  d.feasible = feasible;
  d.report = std::move(report);
  if (!feasible) return d;
  const auto r = rates(ch, p, sc.user_noise_w);
  d.detection_probability = detection_probability(ch, p, detection_spec(sc));
  d.gm_rate = geometric_mean(r);
  d.sum_rate = std::accumulate(r.begin(), r.end(), 0.0);
  d.min_rate = *std::min_element(r.begin(), r.end());
  d.power = total_power(p);
  return d;
}

inline DesignResult pd_max(const ChannelSet& ch, const Scenario& sc, const PdMaxOptions& opt = {}) {
  auto r = bi_alt(ch, sc, opt);
  return evaluate(ch, sc, r.precoder, r.feasible, std::move(r.report));
}

inline DesignResult gmr_max(const ChannelSet& ch, const Scenario& sc, const GmrOptions& opt = {}) {
  auto r = mm_alt(ch, sc, opt);
  return evaluate(ch, sc, r.precoder, r.feasible, std::move(r.report));
}

inline DesignResult sr_max(const ChannelSet& ch, const Scenario& sc, GmrOptions opt = {}) {
  opt.sum_rate = true;
  return gmr_max(ch, sc, opt);
}

// Detection-only design: the SINR floors are dropped.
inline DesignResult sensing_only(const ChannelSet& ch, const Scenario& sc, const PdMaxOptions& opt = {}) {
  Scenario s = sc;
  std::fill(s.sinr_threshold.begin(), s.sinr_threshold.end(), 0.0);
  auto r = bi_alt(ch, s, opt);
  r.report.algorithm = "sensing-only";
  return evaluate(ch, sc, r.precoder, r.feasible, std::move(r.report));
}

// Fully digital variants: rf = I, only the BB machinery runs.
inline DesignResult fdb_pd(const ChannelSet& ch, const Scenario& sc) {
  const ChannelSet chn = noise_normalized(ch, sc.user_noise_w);
  PdMaxOptions opt;
  opt.optimize_rf = false;
  opt.start = initial_precoder(chn, sc.n_tx, sc.tx_power_w, true);
  auto r = bi_alt(ch, sc, opt);
  r.report.algorithm = "fdb-pd";
  return evaluate(ch, sc, r.precoder, r.feasible, std::move(r.report));
}

inline DesignResult fdb_gmr(const ChannelSet& ch, const Scenario& sc) {
  GmrOptions opt;
  opt.fully_digital = true;
  return gmr_max(ch, sc, opt);
}

struct MmrOptions {
  bool optimize_rf = true;
  QpOptions qp;
};

// Max-min rate by bisection on a common rate target r: the feasibility test
// is the minimum-power design with SINR floors 2^r - 1 and the detection floor.
inline DesignResult mmr_max(const ChannelSet& ch, const Scenario& sc, const MmrOptions& opt = {}) {
  sc.validate();
  Stopwatch clock;
  const ChannelSet chn = noise_normalized(ch, sc.user_noise_w);
  const DetectionSpec spec = detection_spec(sc);
  const double budget = sc.tx_power_w;
  SolveReport report;
  report.algorithm = "mmr-max";
  const double omega = detection_floor(sc, spec);
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& h : chn.h) hi = std::min(hi, std::log2(1.0 + budget * h.squaredNorm()));
  double lo = 0.0;
  HybridPrecoder current = initial_precoder(chn, sc.n_rf, budget);
  std::optional<HybridPrecoder> best;
  const InnerOptions iopt{opt.optimize_rf, true, opt.qp};
  const auto k = static_cast<std::size_t>(chn.n_users());
  auto attempt = [&](double r) {
    if (omega > budget) return false;
    const std::vector<double> gamma(k, std::exp2(r) - 1.0);
    const auto inner = inner_bcd(chn, current, omega, gamma, budget, sc.tol, iopt);
    report.inner_traces.push_back(inner.trace);
    if (!inner.trace.empty()) current = inner.precoder;
    if (inner.feasible) best = inner.precoder;
    report.feasible_trace.push_back(inner.feasible);
    return inner.feasible;
  };
  while (hi - lo > sc.tol.rate_bracket) {
    const double r = 0.5 * (lo + hi);
    (attempt(r) ? lo : hi) = r;
    report.objective_trace.push_back(lo);
    ++report.iterations;
  }
  if (!best) attempt(sc.tol.rate_bracket);
  report.wall_time_s = clock.seconds();
  if (!best) {
    report.status = SolveStatus::kInfeasible;
    return evaluate(ch, sc, current, false, std::move(report));
  }
  HybridPrecoder out = *best;
  out.bb *= std::sqrt(budget / precoder_power(out.rf, out.bb));
  report.status = SolveStatus::kConverged;
  return evaluate(ch, sc, out, true, std::move(report));
}

}  // namespace isac
