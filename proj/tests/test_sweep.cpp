// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "ftsim/sweep.hpp"
#include "support.hpp"

using namespace ftsim;

namespace {

ScenarioSource fig3_source() { return read_source(ftsim::test::scenario_path("fig3")); }

}  // namespace

TEST(Sweep, ParseAxis) {
  auto a = parse_axis("tile_groups.0.base_period=1000,2000,4000");
  EXPECT_EQ(a.path, "tile_groups.0.base_period");
  EXPECT_EQ(a.values, (std::vector<double>{1000, 2000, 4000}));
  EXPECT_THROW(parse_axis("nothing"), SweepError);
  EXPECT_THROW(parse_axis("x=1,abc"), SweepError);
}

TEST(Sweep, NonNumericFieldRejected) {
  EXPECT_THROW(sweep(fig3_source(), {}, {parse_axis("name=1,2")}, {1}), SweepError);
  EXPECT_THROW(sweep(fig3_source(), {}, {parse_axis("tiles.0.id=1,2")}, {1}), SweepError);
  EXPECT_THROW(sweep(fig3_source(), {}, {parse_axis("no.such.field=1")}, {1}), SweepError);
  EXPECT_THROW(sweep(fig3_source(), {}, {parse_axis("horizon=1000.5")}, {1}), SweepError);
}

TEST(Sweep, SinglePointEqualsPlainRun) {
  auto rows = sweep(fig3_source(), {}, {parse_axis("tile_groups.0.base_period=1000")}, {3});
  ASSERT_EQ(rows.size(), 1u);
  RunOptions o;
  o.seed = 3;
  auto plain = run_scenario(ftsim::test::bundled("fig3"), o);
  EXPECT_EQ(metrics_to_string(rows[0].metrics), metrics_to_string(plain.metrics));
}

TEST(Sweep, RowsOrderedAndWorkerCountIrrelevant) {
  const std::vector<SweepAxis> axes{parse_axis("tile_groups.0.base_period=500,1000"),
                                    parse_axis("threads.0.state_words=8,16")};
  auto one = sweep(fig3_source(), {}, axes, {1, 2}, 1);
  auto many = sweep(fig3_source(), {}, axes, {1, 2}, 3);
  ASSERT_EQ(one.size(), 8u);
  EXPECT_EQ(sweep_to_csv(axes, one), sweep_to_csv(axes, many));
  EXPECT_EQ(one[0].point, (std::vector<double>{500, 8}));
  EXPECT_EQ(one[1].seed, 2u);
  EXPECT_EQ(one[2].point, (std::vector<double>{500, 16}));
  EXPECT_EQ(one[7].point, (std::vector<double>{1000, 16}));
}

TEST(Sweep, OverheadDecreasesWithPeriod) {
  const std::vector<SweepAxis> axes{parse_axis("tile_groups.0.base_period=1000,2000,4000,8000")};
  auto rows = sweep(fig3_source(), {"faults.events=[]", "horizon=400000"}, axes, {1});
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 1; i < rows.size(); ++i)
    EXPECT_LT(rows[i].metrics.overhead.at("C0"), rows[i - 1].metrics.overhead.at("C0"));
}

TEST(Sweep, RecoveryNonDecreasingInStateSize) {
  const std::vector<SweepAxis> axes{parse_axis("threads.0.state_words=8,16,32,64"),
                                    parse_axis("threads.0.update_cost=30,60,120,240")};
  // keep the two axes aligned: cost grows with state size
  auto rows = sweep(fig3_source(), {}, axes, {3});
  std::vector<double> rec;
  for (const auto& r : rows)
    if (r.point[1] == 30 * r.point[0] / 8) rec.push_back(r.metrics.recovery.mean);
  ASSERT_EQ(rec.size(), 4u);
  for (std::size_t i = 1; i < rec.size(); ++i) EXPECT_GE(rec[i], rec[i - 1]);
}

TEST(Sweep, CsvHeader) {
  const std::vector<SweepAxis> axes{parse_axis("tile_groups.0.base_period=1000")};
  auto csv = sweep_to_csv(axes, sweep(fig3_source(), {}, axes, {3}));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "tile_groups.0.base_period,seed,injected,corrected,replaced,repaired,degraded,undetected,absorbed,"
            "detection_mean,detection_max,recovery_mean,recovery_max,overhead_mean,min_availability,"
            "checkpoints,supervisor_commands,propagation_windows,loss_of_mission");
}
