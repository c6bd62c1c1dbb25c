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

#include <cmath>
#include <stdexcept>

namespace isac {

namespace detail {

// P(X <= Y) for independent X ~ Poisson(mx), Y ~ Poisson(my).
inline double poisson_not_greater(double mx, double my) {
  if (mx == 0.0) return 1.0;
  if (my == 0.0) return std::exp(-mx);
  const double m = std::max(mx, my);
  const auto last = static_cast<long>(std::ceil(m + 12.0 * std::sqrt(m) + 40.0));
  const double log_mx = std::log(mx);
  const double log_my = std::log(my);
  double log_px = -mx;
  double log_py = -my;
  double cdf_x = 0.0;
  double sum = 0.0;
  for (long j = 0; j <= last; ++j) {
    if (j > 0) {
      const double log_j = std::log(static_cast<double>(j));
      log_px += log_mx - log_j;
      log_py += log_my - log_j;
    }
    cdf_x = std::min(1.0, cdf_x + std::exp(log_px));
    sum += std::exp(log_py) * cdf_x;
  }
  return std::min(1.0, sum);
}

// P(X < Y) for the same pair.
inline double poisson_less(double mx, double my) {
  if (my == 0.0) return 0.0;
  if (mx == 0.0) return 1.0 - std::exp(-my);
  const double m = std::max(mx, my);
  const auto last = static_cast<long>(std::ceil(m + 12.0 * std::sqrt(m) + 40.0));
  const double log_mx = std::log(mx);
  const double log_my = std::log(my);
  double log_px = -mx;
  double log_py = -my;
  double cdf_x_prev = 0.0;  // P(X <= j - 1)
  double sum = 0.0;
  for (long j = 0; j <= last; ++j) {
    if (j > 0) {
      const double log_j = std::log(static_cast<double>(j));
      log_py += log_my - log_j;
      sum += std::exp(log_py) * cdf_x_prev;
      log_px += log_mx - log_j;
    }
    cdf_x_prev = std::min(1.0, cdf_x_prev + std::exp(log_px));
  }
  return std::min(1.0, sum);
}

}  // namespace detail

// First-order Marcum Q function Q1(a, b).
inline double marcum_q1(double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw std::domain_error("marcum_q1: arguments must be finite and non-negative");
  if (b == 0.0) return 1.0;
  const double y = 0.5 * b * b;
  if (a == 0.0) return std::exp(-y);
  const double x = 0.5 * a * a;
  // Q1 = P(N_y <= N_x) with N_x ~ Pois(a^2/2), N_y ~ Pois(b^2/2).
  if (a <= b) return detail::poisson_not_greater(y, x);
  return 1.0 - detail::poisson_less(x, y);
}

struct DetectionSpec {
  double pfa = 1e-6;
  double tau = 0.0;  // -2 ln(pfa)
  double mu = 1.0;   // rcs variance over echo noise power
  bool rho_linear_in_power = false;

  static DetectionSpec make(double pfa, double mu, bool linear = false) {
    if (!(pfa > 0.0 && pfa < 1.0)) throw std::invalid_argument("detection: pfa must lie in (0, 1)");
    if (!(mu > 0.0)) throw std::invalid_argument("detection: mu must be positive");
    return DetectionSpec{pfa, -2.0 * std::log(pfa), mu, linear};
  }

  double noncentrality(double beampattern) const {
    return rho_linear_in_power ? mu * beampattern : mu * beampattern * beampattern;
  }

  // Smallest beampattern power whose noncentrality reaches rho.
  double beampattern_floor(double rho) const {
    if (!(rho >= 0.0)) throw std::invalid_argument("detection: noncentrality must be non-negative");
    return rho_linear_in_power ? rho / mu : std::sqrt(rho / mu);
  }
};

inline DetectionSpec detection_spec(const Scenario& sc) {
  return DetectionSpec::make(sc.pfa, sc.mu(), sc.rho_linear_in_power);
}

inline double detection_probability(double rho, const DetectionSpec& spec) {
  if (!(rho >= 0.0)) throw std::domain_error("detection_probability: rho must be non-negative");
  return marcum_q1(std::sqrt(rho), std::sqrt(spec.tau));
}

inline double detection_probability(const ChannelSet& ch, const HybridPrecoder& p, const DetectionSpec& spec) {
  return detection_probability(spec.noncentrality(beampattern_power(ch.steer, p)), spec);
}

// Smallest rho with P_D(rho) >= eta, to |P_D(rho) - eta| <= 1e-10.
inline double required_noncentrality(double eta, const DetectionSpec& spec) {
  if (!(eta > spec.pfa)) throw std::domain_error("required_noncentrality: target below false-alarm floor");
  if (!(eta < 1.0)) throw std::domain_error("required_noncentrality: target must be below 1");
  double lo = 0.0;
  double hi = 1.0;
  while (detection_probability(hi, spec) < eta) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw std::domain_error("required_noncentrality: target not reachable");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double pd = detection_probability(mid, spec);
    if (pd < eta) lo = mid;
    else hi = mid;
    if (detection_probability(hi, spec) - eta <= 1e-10 || hi - lo <= 1e-15 * hi) break;
  }
  return hi;
}

inline double beampattern_floor(double rho, double mu) { return DetectionSpec::make(0.5, mu).beampattern_floor(rho); }

}  // namespace isac
