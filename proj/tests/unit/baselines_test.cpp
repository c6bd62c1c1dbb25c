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

#include "isac/baselines.hpp"

#include <gtest/gtest.h>

namespace isac {
namespace {

TEST(SensingOnly, BoundsConstrainedDesign) {
  Scenario sc;
  sc.sinr_threshold.assign(2, db_to_linear(15.0));
  const auto ch = generate_channels(sc, 3);
  const auto s = sensing_only(ch, sc);
  const auto p = pd_max(ch, sc);
  ASSERT_TRUE(s.feasible);
  ASSERT_TRUE(p.feasible);
  EXPECT_GE(s.detection_probability, p.detection_probability - 1e-6);
  EXPECT_GE(beampattern_power(ch.steer, s.precoder), beampattern_power(ch.steer, p.precoder) * (1 - 1e-6));
  EXPECT_EQ(s.report.algorithm, "sensing-only");
}

TEST(SensingOnly, UserCountIrrelevant) {
  Scenario sc;
  const auto ch = generate_channels(sc, 5);
  Scenario one = sc;
  one.n_users = 1;
  one.user_distances_m.resize(1);
  one.user_angles_deg.resize(1);
  one.user_noise_w.resize(1);
  one.sinr_threshold.resize(1);
  ChannelSet ch1 = ch;
  ch1.h.resize(1);
  const double a = sensing_only(ch, sc).detection_probability;
  const double b = sensing_only(ch1, one).detection_probability;
  EXPECT_NEAR(a, b, 2e-3);
}

TEST(Fdb, IdentityAnalogAndUpperBound) {
  Scenario sc;
  const auto ch = generate_channels(sc, 2);
  const auto f = fdb_pd(ch, sc);
  const auto h = pd_max(ch, sc);
  ASSERT_TRUE(f.feasible);
  EXPECT_TRUE(f.precoder.fully_digital);
  EXPECT_TRUE(f.precoder.rf.isApprox(CMatrix::Identity(sc.n_tx, sc.n_tx)));
  EXPECT_GE(f.detection_probability, h.detection_probability - 1e-3);
  const auto g = fdb_gmr(ch, sc);
  ASSERT_TRUE(g.feasible);
  EXPECT_TRUE(g.precoder.rf.isApprox(CMatrix::Identity(sc.n_tx, sc.n_tx)));
  EXPECT_GE(g.detection_probability, sc.pd_threshold - 1e-6);
  EXPECT_EQ(g.report.algorithm, "fdb-gmr");
}

TEST(MmrMax, BalancesSymmetricUsers) {
  Scenario sc;
  auto ch = generate_channels(sc, 1);
  const cd gain = 3e-4;  // equal path gains, mirrored angles around the target
  ch.h[0] = gain * steering_vector(-30.0, sc.n_tx);
  ch.h[1] = gain * steering_vector(30.0, sc.n_tx);
  const auto r = mmr_max(ch, sc);
  ASSERT_TRUE(r.feasible);
  const auto rr = rates(ch, r.precoder, sc.user_noise_w);
  EXPECT_NEAR(rr[0], rr[1], 1e-3);
  EXPECT_GE(r.detection_probability, sc.pd_threshold - 1e-6);
  EXPECT_NEAR(r.power, sc.tx_power_w, 1e-9);
}

TEST(MmrMax, FairestOfTheRateDesigns) {
  Scenario sc;
  const auto ch = generate_channels(sc, 0);
  const auto m = mmr_max(ch, sc);
  const auto g = gmr_max(ch, sc);
  const auto s = sr_max(ch, sc);
  EXPECT_GE(m.min_rate, g.min_rate - 1e-3);
  EXPECT_GE(g.min_rate, s.min_rate - 1e-3);
  EXPECT_GE(s.sum_rate, g.sum_rate - 1e-3);
  EXPECT_GE(g.gm_rate, m.gm_rate - 1e-3);
}

TEST(MmrMax, UnreachableFloorIsInfeasible) {
  Scenario sc;
  sc.rcs_variance = db_to_linear(-110.0);
  sc.pd_threshold = 0.99;
  const auto ch = generate_channels(sc, 1);
  const auto r = mmr_max(ch, sc);
  EXPECT_FALSE(r.feasible);
  EXPECT_TRUE(std::isnan(r.min_rate));
  EXPECT_EQ(r.report.status, SolveStatus::kInfeasible);
}

}  // namespace
}  // namespace isac
