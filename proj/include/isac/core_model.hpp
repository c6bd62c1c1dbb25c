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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace isac {

using cd = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using Index = Eigen::Index;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double dbm_to_watt(double dbm) { return db_to_linear(dbm - 30.0); }
inline double watt_to_dbm(double w) { return linear_to_db(w) + 30.0; }
inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

// Which outer product the radar response matrix uses. kTranspose is a a^T,
// kHermitian is a a^H. Optimizers always use the beampattern a a^H.
enum class RadarConvention { kTranspose, kHermitian };

struct Tolerances {
  double sca = 1e-5;              // BB successive convex approximation
  double rcg_gradient = 1e-6;     // squared Riemannian gradient norm
  double penalty = 1e-5;          // max squared constraint violation
  double inner = 1e-3;            // BB/RF alternation, in watts
  double bisection = 1e-6;        // eta bracket width
  double penalty_init = 10.0;
  double penalty_scale = 0.2;
  double mm = 1e-4;               // geometric-mean rate change, bits
  double rate_bracket = 1e-3;     // max-min rate bisection, bits
  double rate_floor = 1e-6;       // weight update guard, bits
  int max_sca = 50;
  int max_rcg = 500;
  int max_penalty_rounds = 30;
  int max_inner = 30;
  int max_mm = 100;
};

struct Scenario {
  int n_tx = 16;
  int n_rf = 4;
  int n_users = 2;
  std::vector<double> user_distances_m{30.0, 20.0};
  std::vector<double> user_angles_deg{-30.0, 30.0};
  double target_angle_deg = 0.0;
  int n_paths = 3;
  double shadowing_std_db = 5.8;
  double tx_power_w = 1.0;
  std::vector<double> user_noise_w{dbm_to_watt(-75.0), dbm_to_watt(-75.0)};
  double echo_noise_w = dbm_to_watt(-60.0);
  double rcs_variance = db_to_linear(-72.0);
  double pfa = 1e-6;
  std::vector<double> sinr_threshold{db_to_linear(10.0), db_to_linear(10.0)};
  double pd_threshold = 0.9;
  double carrier_hz = 28e9;
  double bandwidth_hz = 100e6;
  RadarConvention radar_convention = RadarConvention::kTranspose;
  bool rho_linear_in_power = false;
  Tolerances tol;
  std::uint64_t seed = 1;

  double mu() const { return rcs_variance / echo_noise_w; }

  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("scenario: " + what); };
    if (n_tx < 1) fail("n_tx must be positive");
    if (n_users < 1) fail("n_users must be positive");
    if (n_rf < 1 || n_rf > n_tx) fail("n_rf must lie in [1, n_tx]");
    if (n_users >= n_rf && n_rf != n_tx) fail("n_users must be smaller than n_rf");
    if (n_paths < 1) fail("n_paths must be positive");
    const auto k = static_cast<std::size_t>(n_users);
    if (user_distances_m.size() != k) fail("user_distances_m needs one entry per user");
    if (user_angles_deg.size() != k) fail("user_angles_deg needs one entry per user");
    if (user_noise_w.size() != k) fail("user_noise_w needs one entry per user");
    if (sinr_threshold.size() != k) fail("sinr_threshold needs one entry per user");
    for (double d : user_distances_m)
      if (!(d > 0.0)) fail("user distances must be positive");
    for (double s : user_noise_w)
      if (!(s > 0.0)) fail("user noise power must be positive");
    for (double g : sinr_threshold)
      if (!(g >= 0.0)) fail("sinr thresholds must be non-negative");
    if (!(tx_power_w > 0.0)) fail("tx power must be positive");
    if (!(echo_noise_w > 0.0)) fail("echo noise power must be positive");
    if (!(rcs_variance > 0.0)) fail("rcs variance must be positive");
    if (!(pfa > 0.0 && pfa < 1.0)) fail("pfa must lie in (0, 1)");
    if (!(pd_threshold >= 0.0 && pd_threshold < 1.0)) fail("pd_threshold must lie in [0, 1)");
    if (!(shadowing_std_db >= 0.0)) fail("shadowing std must be non-negative");
    if (!(tol.penalty_scale > 0.0 && tol.penalty_scale < 1.0)) fail("penalty scale must lie in (0, 1)");
    if (!(tol.penalty_init >= 1.0)) fail("initial penalty must be at least 1");
  }
};

struct ChannelSet {
  std::vector<CVector> h;  // h_k, so the received signal is h_k^H x
  CVector steer;           // a(target)
  CMatrix radar_matrix;
  std::vector<std::vector<cd>> path_gains;
  std::vector<std::vector<double>> path_angles_deg;
  std::vector<double> shadowing_db;

  Index n_tx() const { return steer.size(); }
  Index n_users() const { return static_cast<Index>(h.size()); }
};

struct HybridPrecoder {
  CMatrix rf;  // N_t x N_RF, unit-modulus entries unless fully_digital
  CMatrix bb;  // N_RF x K
  bool fully_digital = false;

  CMatrix product() const { return rf * bb; }
  Index n_users() const { return bb.cols(); }
};

// Half-wavelength ULA response, unit norm.
inline CVector steering_vector(double theta_deg, int n_tx) {
  if (n_tx < 1) throw std::invalid_argument("steering_vector: n_tx must be positive");
  const double s = std::sin(deg_to_rad(theta_deg));
  CVector a(n_tx);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_tx));
  for (int n = 0; n < n_tx; ++n) a(n) = scale * std::polar(1.0, std::numbers::pi * n * s);
  return a;
}

inline double path_loss_db(double distance_m, double shadowing_db) {
  if (!(distance_m > 0.0)) throw std::invalid_argument("path_loss_db: distance must be positive");
  return 61.4 + 20.0 * std::log10(distance_m) + shadowing_db;
}

inline CVector channel_from_paths(int n_tx, std::span<const cd> gains, std::span<const double> angles_deg) {
  if (gains.size() != angles_deg.size() || gains.empty())
    throw std::invalid_argument("channel_from_paths: gains and angles must be non-empty and equal length");
  CVector h = CVector::Zero(n_tx);
  for (std::size_t l = 0; l < gains.size(); ++l) h += std::conj(gains[l]) * steering_vector(angles_deg[l], n_tx);
  return h * std::sqrt(static_cast<double>(n_tx) / static_cast<double>(gains.size()));
}

inline CMatrix radar_matrix(const CVector& steer, RadarConvention convention) {
  return convention == RadarConvention::kTranspose ? CMatrix(steer * steer.transpose())
                                                   : CMatrix(steer * steer.adjoint());
}

// Draw order per user: shadowing, then for each path its angle (path 0 uses
// the configured user angle, later paths are uniform over [-90, 90] degrees)
// followed by its complex gain.
inline ChannelSet generate_channels(const Scenario& sc, std::mt19937_64& rng) {
  sc.validate();
  ChannelSet ch;
  ch.steer = steering_vector(sc.target_angle_deg, sc.n_tx);
  ch.radar_matrix = radar_matrix(ch.steer, sc.radar_convention);
  std::normal_distribution<double> shadow(0.0, sc.shadowing_std_db);
  std::uniform_real_distribution<double> angle(-90.0, 90.0);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < sc.n_users; ++k) {
    const double shadowing = sc.shadowing_std_db > 0.0 ? shadow(rng) : 0.0;
    const double variance = db_to_linear(-path_loss_db(sc.user_distances_m[k], shadowing));
    const double sd = std::sqrt(variance / 2.0);
    std::vector<cd> gains;
    std::vector<double> angles;
    for (int l = 0; l < sc.n_paths; ++l) {
      angles.push_back(l == 0 ? sc.user_angles_deg[k] : angle(rng));
      const double re = unit(rng);
      const double im = unit(rng);
      gains.emplace_back(sd * re, sd * im);
    }
    ch.h.push_back(channel_from_paths(sc.n_tx, gains, angles));
    ch.path_gains.push_back(std::move(gains));
    ch.path_angles_deg.push_back(std::move(angles));
    ch.shadowing_db.push_back(shadowing);
  }
  return ch;
}

inline ChannelSet generate_channels(const Scenario& sc, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return generate_channels(sc, rng);
}

// Channels divided by each user's noise amplitude, so every noise power is 1.
inline ChannelSet noise_normalized(const ChannelSet& ch, std::span<const double> noise_w) {
  if (noise_w.size() != ch.h.size()) throw std::invalid_argument("noise_normalized: one noise power per user");
  ChannelSet out = ch;
  for (std::size_t k = 0; k < ch.h.size(); ++k) {
    if (!(noise_w[k] > 0.0)) throw std::invalid_argument("noise_normalized: noise power must be positive");
    out.h[k] = ch.h[k] / std::sqrt(noise_w[k]);
  }
  return out;
}

inline double total_power(const HybridPrecoder& p) { return p.product().squaredNorm(); }

inline double beampattern_power(const CVector& steer, const HybridPrecoder& p) {
  return (steer.adjoint() * p.product()).squaredNorm();
}

inline double beampattern_power(double theta_deg, const HybridPrecoder& p) {
  return beampattern_power(steering_vector(theta_deg, static_cast<int>(p.rf.rows())), p);
}

inline double sinr(Index k, const ChannelSet& ch, const HybridPrecoder& p, double noise_w) {
  if (k < 0 || k >= ch.n_users()) throw std::out_of_range("sinr: user index out of range");
  if (!(noise_w > 0.0)) throw std::invalid_argument("sinr: noise power must be positive");
  if (p.bb.cols() != ch.n_users()) throw std::invalid_argument("sinr: precoder has wrong number of streams");
  const Eigen::RowVectorXcd g = ch.h[k].adjoint() * p.product();
  double interference = 0.0;
  for (Index i = 0; i < g.size(); ++i)
    if (i != k) interference += std::norm(g(i));
  return std::norm(g(k)) / (interference + noise_w);
}

inline double rate(Index k, const ChannelSet& ch, const HybridPrecoder& p, double noise_w) {
  return std::log2(1.0 + sinr(k, ch, p, noise_w));
}

inline std::vector<double> rates(const ChannelSet& ch, const HybridPrecoder& p, std::span<const double> noise_w) {
  std::vector<double> r;
  for (Index k = 0; k < ch.n_users(); ++k) r.push_back(rate(k, ch, p, noise_w[k]));
  return r;
}

inline double geometric_mean(std::span<const double> r) {
  if (r.empty()) throw std::invalid_argument("geometric_mean: empty input");
  double log_sum = 0.0;
  for (double x : r) {
    if (!(x > 0.0)) return 0.0;
    log_sum += std::log(x);
  }
  return std::exp(log_sum / static_cast<double>(r.size()));
}

inline double gm_rate(const ChannelSet& ch, const HybridPrecoder& p, std::span<const double> noise_w) {
  const auto r = rates(ch, p, noise_w);
  return geometric_mean(r);
}

inline double sum_rate(const ChannelSet& ch, const HybridPrecoder& p, std::span<const double> noise_w) {
  const auto r = rates(ch, p, noise_w);
  return std::accumulate(r.begin(), r.end(), 0.0);
}

inline double min_rate(const ChannelSet& ch, const HybridPrecoder& p, std::span<const double> noise_w) {
  const auto r = rates(ch, p, noise_w);
  return *std::min_element(r.begin(), r.end());
}

inline bool unit_modulus(const CMatrix& rf, double tol = 1e-9) {
  return ((rf.array().abs() - 1.0).abs() <= tol).all();
}

}  // namespace isac
