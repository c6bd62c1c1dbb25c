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

#include "isac/sweep.hpp"

#include <gtest/gtest.h>

namespace isac {
namespace {

SweepSpec parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.cfg");
}

int error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

const std::string kMinimal = "sweep.values = 6, 9\n";

TEST(Config, DefaultsAndUnitConversion) {
  const auto s = parse(kMinimal + "scenario.tx_power_dbm = 30\nscenario.user_noise_dbm = -90\n");
  EXPECT_NEAR(s.base.tx_power_w, 1.0, 1e-12);
  EXPECT_NEAR(s.base.user_noise_w[0], 1e-12, 1e-24);
  EXPECT_EQ(s.base.user_noise_w.size(), 2u);
  EXPECT_EQ(s.trials, 50);
  EXPECT_EQ(s.algorithm, "pd-max");
}

TEST(Config, CommentsAndWhitespace) {
  const auto s = parse("# header\n\n  sweep.values =  2 ,3,4   # trailing\nsweep.axis=n_rf\nscenario.n_users = 1\n");
  EXPECT_EQ(s.values, (std::vector<double>{2, 3, 4}));
  EXPECT_EQ(s.axis, "n_rf");
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line(kMinimal + "scenario.n_tx 16\n"), 2);
  EXPECT_EQ(error_line("\n\nscenario.bogus = 1\n" + kMinimal), 3);
  EXPECT_EQ(error_line(kMinimal + "sweep.algorithm = simplex\n"), 2);
  EXPECT_EQ(error_line(kMinimal + "scenario.n_tx = 16.5\n"), 2);
  EXPECT_EQ(error_line(kMinimal + "scenario.pfa = abc\n"), 2);
  EXPECT_EQ(error_line(kMinimal + "scenario.pfa = \n"), 2);
  EXPECT_EQ(error_line(kMinimal + "scenario.n_tx = 8\nscenario.n_tx = 16\n"), 3);
}

TEST(Config, SemanticValidation) {
  EXPECT_THROW(parse("sweep.values = 9, 6\n"), ConfigError);
  EXPECT_THROW(parse("sweep.trials = 4\n"), ConfigError);
  EXPECT_THROW(parse(kMinimal + "sweep.trials = 0\n"), ConfigError);
  EXPECT_THROW(parse(kMinimal + "scenario.n_rf = 2\n"), ConfigError);  // K must stay below N_RF
  EXPECT_THROW(parse("sweep.axis = n_users\nsweep.values = 1, 4\n"), ConfigError);
  EXPECT_NO_THROW(parse("sweep.axis = n_users\nsweep.values = 1, 3\n"));
}

TEST(Config, UserListsCycleWithUserCount) {
  const auto s = parse("sweep.axis = n_users\nsweep.values = 1, 3\nscenario.user_angles_deg = -20, 40\n");
  const auto sc = at_axis_value(s, 3);
  EXPECT_EQ(sc.user_angles_deg, (std::vector<double>{-20, 40, -20}));
  EXPECT_EQ(sc.sinr_threshold.size(), 3u);
}

TEST(Config, AxisValuesApply) {
  auto s = parse(kMinimal);
  EXPECT_NEAR(at_axis_value(s, 6).sinr_threshold[1], db_to_linear(6), 1e-12);
  s.axis = "tx_power_dbm";
  EXPECT_NEAR(at_axis_value(s, 27).tx_power_w, dbm_to_watt(27), 1e-15);
  s.axis = "pfa";
  EXPECT_EQ(at_axis_value(s, 1e-4).pfa, 1e-4);
}

TEST(Stats, MeanAndStandardError) {
  const auto m = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.stderr_, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  EXPECT_TRUE(std::isnan(summarize({}).mean));
  EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "NaN");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333");
}

TEST(Sweep, DeterministicAcrossWorkerCounts) {
  const auto s = parse("sweep.values = 6, 12\nsweep.trials = 3\nscenario.n_tx = 8\nscenario.n_rf = 3\nscenario.seed = 7\n");
  std::ostringstream a, b, c;
  write_csv(a, s, run_sweep(s, 1), false);
  write_csv(b, s, run_sweep(s, 1), false);
  write_csv(c, s, run_sweep(s, 3), false);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str(), c.str());
  EXPECT_EQ(a.str().rfind("sinr_threshold_db,pd_mean,", 0), 0u);
}

TEST(Sweep, InfeasibleTrialsBecomeNaN) {
  const auto s = parse(
      "sweep.algorithm = gmr-max\nsweep.axis = pd_threshold\nsweep.values = 0.99\nsweep.trials = 2\n"
      "scenario.rcs_variance_db = -120\n");
  const auto rows = run_sweep(s, 1);
  EXPECT_EQ(rows[0].infeasible, 2);
  EXPECT_TRUE(std::isnan(rows[0].gm.mean));
  std::ostringstream out;
  write_csv(out, s, rows, false);
  EXPECT_NE(out.str().find("NaN"), std::string::npos);
  EXPECT_NE(out.str().find("infeasible_trials=2"), std::string::npos);
}

TEST(Sweep, WorkerExceptionsPropagate) {
  EXPECT_THROW(parallel_for(8, 3, [](int i) { if (i == 5) throw std::runtime_error("boom"); }), std::runtime_error);
}

TEST(Describe, ListsResolvedUnits) {
  std::ostringstream out;
  describe(out, parse(kMinimal + "scenario.tx_power_dbm = 30\n"));
  EXPECT_NE(out.str().find("tx power [W]         1\n"), std::string::npos);
  EXPECT_NE(out.str().find("bb qp 16 real variables"), std::string::npos);
}

}  // namespace
}  // namespace isac
