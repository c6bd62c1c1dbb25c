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

// Monte-Carlo sweeps driven by a flat `key = value` config file.
//
//   # comment
//   scenario.n_tx = 16
//   scenario.user_angles_deg = -30, 30
//   sweep.algorithm = pd-max
//   sweep.axis = sinr_threshold_db
//   sweep.values = 6, 9, 12, 15
//   sweep.trials = 50
//
// Trial t of every axis value draws its channels from seed base + t, so runs
// of different algorithms on one config are paired.

#include "isac/baselines.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace isac {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& what)
      : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

inline const std::vector<std::string>& algorithms() {
  static const std::vector<std::string> names{"pd-max",       "gmr-max", "sr-max", "mmr-max",
                                              "sensing-only", "fdb-pd",  "fdb-gmr"};
  return names;
}

inline const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> names{"sinr_threshold_db", "tx_power_dbm", "n_users",
                                              "pd_threshold",      "pfa",          "n_rf"};
  return names;
}

struct SweepSpec {
  std::string algorithm = "pd-max";
  std::string axis = "sinr_threshold_db";
  std::vector<double> values;
  int trials = 50;
  Scenario base;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_number(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("expected a number, got '" + text + "'");
  }
  if (used != text.size()) throw std::invalid_argument("expected a number, got '" + text + "'");
  if (!std::isfinite(v)) throw std::invalid_argument("number must be finite");
  return v;
}

inline std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(trim(item)));
  if (out.empty()) throw std::invalid_argument("expected a comma separated list");
  return out;
}

inline int parse_int(const std::string& text) {
  const double v = parse_number(text);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw std::invalid_argument("expected an integer, got '" + text + "'");
  return static_cast<int>(v);
}

inline bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + text + "'");
}

// Per-user lists are cycled when fewer entries than users are given.
inline std::vector<double> cycled(const std::vector<double>& v, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(v[static_cast<std::size_t>(i) % v.size()]);
  return out;
}

inline void resize_users(Scenario& sc, int k) {
  sc.n_users = k;
  sc.user_distances_m = cycled(sc.user_distances_m, k);
  sc.user_angles_deg = cycled(sc.user_angles_deg, k);
  sc.user_noise_w = cycled(sc.user_noise_w, k);
  sc.sinr_threshold = cycled(sc.sinr_threshold, k);
}

struct PendingUsers {
  std::vector<double> distances, angles, noise, sinr;
};

inline void apply_key(SweepSpec& spec, PendingUsers& users, const std::string& key, const std::string& value) {
  Scenario& sc = spec.base;
  Tolerances& tol = sc.tol;
  auto to_watt = [](const std::vector<double>& dbm) {
    std::vector<double> w;
    for (double x : dbm) w.push_back(dbm_to_watt(x));
    return w;
  };
  auto to_linear = [](const std::vector<double>& db) {
    std::vector<double> w;
    for (double x : db) w.push_back(db_to_linear(x));
    return w;
  };
  const std::map<std::string, std::function<void()>> setters{
      {"scenario.n_tx", [&] { sc.n_tx = parse_int(value); }},
      {"scenario.n_rf", [&] { sc.n_rf = parse_int(value); }},
      {"scenario.n_users", [&] { sc.n_users = parse_int(value); }},
      {"scenario.user_distances_m", [&] { users.distances = parse_list(value); }},
      {"scenario.user_angles_deg", [&] { users.angles = parse_list(value); }},
      {"scenario.target_angle_deg", [&] { sc.target_angle_deg = parse_number(value); }},
      {"scenario.n_paths", [&] { sc.n_paths = parse_int(value); }},
      {"scenario.shadowing_std_db", [&] { sc.shadowing_std_db = parse_number(value); }},
      {"scenario.tx_power_dbm", [&] { sc.tx_power_w = dbm_to_watt(parse_number(value)); }},
      {"scenario.user_noise_dbm", [&] { users.noise = to_watt(parse_list(value)); }},
      {"scenario.echo_noise_dbm", [&] { sc.echo_noise_w = dbm_to_watt(parse_number(value)); }},
      {"scenario.rcs_variance_db", [&] { sc.rcs_variance = db_to_linear(parse_number(value)); }},
      {"scenario.pfa", [&] { sc.pfa = parse_number(value); }},
      {"scenario.sinr_threshold_db", [&] { users.sinr = to_linear(parse_list(value)); }},
      {"scenario.pd_threshold", [&] { sc.pd_threshold = parse_number(value); }},
      {"scenario.carrier_hz", [&] { sc.carrier_hz = parse_number(value); }},
      {"scenario.bandwidth_hz", [&] { sc.bandwidth_hz = parse_number(value); }},
      {"scenario.radar_convention",
       [&] {
         if (value == "transpose") sc.radar_convention = RadarConvention::kTranspose;
         else if (value == "hermitian") sc.radar_convention = RadarConvention::kHermitian;
         else throw std::invalid_argument("expected transpose or hermitian, got '" + value + "'");
       }},
      {"scenario.rho_linear_in_power", [&] { sc.rho_linear_in_power = parse_bool(value); }},
      {"scenario.seed",
       [&] {
         const double v = parse_number(value);
         if (v < 0 || v != std::floor(v) || v > 9.007e15) throw std::invalid_argument("seed must be a non-negative integer");
         sc.seed = static_cast<std::uint64_t>(v);
       }},
      {"tol.sca", [&] { tol.sca = parse_number(value); }},
      {"tol.rcg_gradient", [&] { tol.rcg_gradient = parse_number(value); }},
      {"tol.penalty", [&] { tol.penalty = parse_number(value); }},
      {"tol.inner", [&] { tol.inner = parse_number(value); }},
      {"tol.bisection", [&] { tol.bisection = parse_number(value); }},
      {"tol.penalty_init", [&] { tol.penalty_init = parse_number(value); }},
      {"tol.penalty_scale", [&] { tol.penalty_scale = parse_number(value); }},
      {"tol.mm", [&] { tol.mm = parse_number(value); }},
      {"tol.rate_bracket", [&] { tol.rate_bracket = parse_number(value); }},
      {"tol.rate_floor", [&] { tol.rate_floor = parse_number(value); }},
      {"tol.max_sca", [&] { tol.max_sca = parse_int(value); }},
      {"tol.max_rcg", [&] { tol.max_rcg = parse_int(value); }},
      {"tol.max_penalty_rounds", [&] { tol.max_penalty_rounds = parse_int(value); }},
      {"tol.max_inner", [&] { tol.max_inner = parse_int(value); }},
      {"tol.max_mm", [&] { tol.max_mm = parse_int(value); }},
      {"sweep.algorithm",
       [&] {
         if (std::find(algorithms().begin(), algorithms().end(), value) == algorithms().end())
           throw std::invalid_argument("unknown algorithm '" + value + "'");
         spec.algorithm = value;
       }},
      {"sweep.axis",
       [&] {
         if (std::find(sweep_axes().begin(), sweep_axes().end(), value) == sweep_axes().end())
           throw std::invalid_argument("unknown sweep axis '" + value + "'");
         spec.axis = value;
       }},
      {"sweep.values", [&] { spec.values = parse_list(value); }},
      {"sweep.trials", [&] { spec.trials = parse_int(value); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw std::invalid_argument("unknown key '" + key + "'");
  it->second();
}

}  // namespace detail

// Scenario for one point of the sweep.
inline Scenario at_axis_value(const SweepSpec& spec, double v) {
  Scenario sc = spec.base;
  if (spec.axis == "sinr_threshold_db") std::fill(sc.sinr_threshold.begin(), sc.sinr_threshold.end(), db_to_linear(v));
  else if (spec.axis == "tx_power_dbm") sc.tx_power_w = dbm_to_watt(v);
  else if (spec.axis == "n_users") detail::resize_users(sc, static_cast<int>(v));
  else if (spec.axis == "pd_threshold") sc.pd_threshold = v;
  else if (spec.axis == "pfa") sc.pfa = v;
  else if (spec.axis == "n_rf") sc.n_rf = static_cast<int>(v);
  else throw std::invalid_argument("unknown sweep axis '" + spec.axis + "'");
  return sc;
}

inline void validate(const SweepSpec& spec) {
  if (spec.values.empty()) throw std::invalid_argument("sweep.values must not be empty");
  for (std::size_t i = 1; i < spec.values.size(); ++i)
    if (!(spec.values[i] > spec.values[i - 1])) throw std::invalid_argument("sweep.values must be strictly increasing");
  if (spec.trials < 1) throw std::invalid_argument("sweep.trials must be at least 1");
  if (spec.axis == "n_users" || spec.axis == "n_rf")
    for (double v : spec.values)
      if (v != std::floor(v) || v < 1) throw std::invalid_argument("sweep.values must be positive integers for " + spec.axis);
  for (double v : spec.values) at_axis_value(spec, v).validate();
}

inline SweepSpec parse_config(std::istream& in, const std::string& source = "<config>") {
  SweepSpec spec;
  detail::PendingUsers users;
  std::map<std::string, int> seen;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = detail::trim(std::string_view(raw).substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line, "expected 'key = value'");
    const std::string key = detail::trim(std::string_view(text).substr(0, eq));
    const std::string value = detail::trim(std::string_view(text).substr(eq + 1));
    if (key.empty()) throw ConfigError(source, line, "missing key");
    if (value.empty()) throw ConfigError(source, line, "missing value for '" + key + "'");
    if (const auto prev = seen.find(key); prev != seen.end())
      throw ConfigError(source, line, "duplicate key '" + key + "' (first set on line " + std::to_string(prev->second) + ")");
    seen[key] = line;
    try {
      detail::apply_key(spec, users, key, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(source, line, e.what());
    }
  }
  // Per-user lists are resolved once n_users is known.
  Scenario& sc = spec.base;
  const auto fill = [&](const std::vector<double>& given, std::vector<double>& field) {
    if (!given.empty()) field = given;
  };
  fill(users.distances, sc.user_distances_m);
  fill(users.angles, sc.user_angles_deg);
  fill(users.noise, sc.user_noise_w);
  fill(users.sinr, sc.sinr_threshold);
  if (sc.n_users >= 1) detail::resize_users(sc, sc.n_users);
  if (spec.values.empty()) throw ConfigError(source, 0, "sweep.values is required");
  try {
    validate(spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source, 0, e.what());
  }
  return spec;
}

inline SweepSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  return parse_config(in, path);
}

inline DesignResult run_design(const std::string& algorithm, const ChannelSet& ch, const Scenario& sc) {
  if (algorithm == "pd-max") return pd_max(ch, sc);
  if (algorithm == "gmr-max") return gmr_max(ch, sc);
  if (algorithm == "sr-max") return sr_max(ch, sc);
  if (algorithm == "mmr-max") return mmr_max(ch, sc);
  if (algorithm == "sensing-only") return sensing_only(ch, sc);
  if (algorithm == "fdb-pd") return fdb_pd(ch, sc);
  if (algorithm == "fdb-gmr") return fdb_gmr(ch, sc);
  throw std::invalid_argument("unknown algorithm '" + algorithm + "'");
}

struct TrialOutcome {
  bool feasible = false;
  double pd = 0.0, gm = 0.0, sum = 0.0, min = 0.0;
  int iterations = 0;
  double wall_s = 0.0;
};

// Mean and standard error over feasible trials; NaN when none are feasible.
struct MetricStats {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stderr_ = std::numeric_limits<double>::quiet_NaN();
};

inline MetricStats summarize(const std::vector<double>& xs) {
  MetricStats s;
  if (xs.empty()) return s;
  const double n = static_cast<double>(xs.size());
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) {
    s.stderr_ = 0.0;
    return s;
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  return s;
}

struct SweepRow {
  double axis_value = 0.0;
  MetricStats pd, gm, sum, min;
  double mean_iterations = 0.0;
  double mean_wall_s = 0.0;
  int infeasible = 0;
  std::vector<TrialOutcome> trials;
};

// Runs fn(i) for i in [0, n) on `workers` threads; the first exception is rethrown.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  const int count = std::max(1, std::min(workers, n));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < count; ++w) pool.emplace_back(body);
    body();
  }
  if (error) std::rethrow_exception(error);
}

inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, int workers) {
  validate(spec);
  std::vector<SweepRow> rows;
  for (double v : spec.values) {
    const Scenario sc = at_axis_value(spec, v);
    SweepRow row;
    row.axis_value = v;
    row.trials.resize(static_cast<std::size_t>(spec.trials));
    parallel_for(spec.trials, workers, [&](int t) {
      const auto ch = generate_channels(sc, sc.seed + static_cast<std::uint64_t>(t));
      const auto d = run_design(spec.algorithm, ch, sc);
      TrialOutcome o;
      o.feasible = d.feasible;
      o.pd = d.detection_probability;
      o.gm = d.gm_rate;
      o.sum = d.sum_rate;
      o.min = d.min_rate;
      o.iterations = d.report.iterations;
      o.wall_s = d.report.wall_time_s;
      row.trials[static_cast<std::size_t>(t)] = o;
    });
    std::vector<double> pd, gm, sum, min;
    double it = 0.0, wall = 0.0;
    for (const auto& o : row.trials) {
      it += o.iterations;
      wall += o.wall_s;
      if (!o.feasible) {
        ++row.infeasible;
        continue;
      }
      pd.push_back(o.pd);
      gm.push_back(o.gm);
      sum.push_back(o.sum);
      min.push_back(o.min);
    }
    row.pd = summarize(pd);
    row.gm = summarize(gm);
    row.sum = summarize(sum);
    row.min = summarize(min);
    row.mean_iterations = it / spec.trials;
    row.mean_wall_s = wall / spec.trials;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string format_number(double x) {
  if (std::isnan(x)) return "NaN";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

// Wall time varies between runs, so it is only written when asked for.
inline void write_csv(std::ostream& out, const SweepSpec& spec, const std::vector<SweepRow>& rows, bool timing) {
  out << spec.axis
      << ",pd_mean,pd_stderr,gm_rate_mean,gm_rate_stderr,sum_rate_mean,sum_rate_stderr,min_rate_mean,min_rate_stderr,"
         "mean_iterations,infeasible_trials";
  if (timing) out << ",mean_wall_s";
  out << '\n';
  int infeasible = 0;
  for (const auto& r : rows) {
    infeasible += r.infeasible;
    out << format_number(r.axis_value);
    for (const auto* m : {&r.pd, &r.gm, &r.sum, &r.min}) out << ',' << format_number(m->mean) << ',' << format_number(m->stderr_);
    out << ',' << format_number(r.mean_iterations) << ',' << r.infeasible;
    if (timing) out << ',' << format_number(r.mean_wall_s);
    out << '\n';
  }
  out << "# algorithm=" << spec.algorithm << " trials=" << spec.trials << " base_seed=" << spec.base.seed
      << " infeasible_trials=" << infeasible;
  if (infeasible > 0) out << " (excluded from means)";
  out << '\n';
}

inline void describe(std::ostream& out, const SweepSpec& spec) {
  const Scenario& sc = spec.base;
  auto list = [&](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i]);
    return s;
  };
  out << "algorithm            " << spec.algorithm << '\n'
      << "sweep axis           " << spec.axis << " = " << list(spec.values) << '\n'
      << "trials per value     " << spec.trials << " (seeds " << sc.seed << " .. " << sc.seed + spec.trials - 1 << ")\n"
      << "antennas N_t         " << sc.n_tx << '\n'
      << "rf chains N_RF       " << sc.n_rf << '\n'
      << "users K              " << sc.n_users << '\n'
      << "user distances [m]   " << list(sc.user_distances_m) << '\n'
      << "user angles [deg]    " << list(sc.user_angles_deg) << '\n'
      << "target angle [deg]   " << format_number(sc.target_angle_deg) << '\n'
      << "paths per user       " << sc.n_paths << '\n'
      << "shadowing std [dB]   " << format_number(sc.shadowing_std_db) << '\n'
      << "tx power [W]         " << format_number(sc.tx_power_w) << '\n'
      << "user noise [W]       " << list(sc.user_noise_w) << '\n'
      << "echo noise [W]       " << format_number(sc.echo_noise_w) << '\n'
      << "rcs variance         " << format_number(sc.rcs_variance) << '\n'
      << "mu                   " << format_number(sc.mu()) << '\n'
      << "pfa                  " << format_number(sc.pfa) << '\n'
      << "sinr thresholds [lin]" << list(sc.sinr_threshold) << '\n'
      << "pd threshold         " << format_number(sc.pd_threshold) << '\n'
      << "carrier [Hz]         " << format_number(sc.carrier_hz) << '\n'
      << "bandwidth [Hz]       " << format_number(sc.bandwidth_hz) << '\n'
      << "radar matrix         " << (sc.radar_convention == RadarConvention::kTranspose ? "transpose" : "hermitian") << '\n';
  out << "subproblem sizes per axis value:\n";
  const bool fdb = spec.algorithm.rfind("fdb-", 0) == 0;
  for (double v : spec.values) {
    const Scenario s = at_axis_value(spec, v);
    const int n_rf = fdb ? s.n_tx : s.n_rf;
    out << "  " << format_number(v) << ": bb qp " << 2 * n_rf * s.n_users << " real variables";
    if (spec.algorithm == "pd-max" || spec.algorithm == "fdb-pd" || spec.algorithm == "mmr-max")
      out << ", " << s.n_users << " cones of size " << 2 * s.n_users + 1;
    if (!fdb) out << "; rf manifold " << s.n_tx * n_rf << " phases";
    out << '\n';
  }
}

}  // namespace isac
