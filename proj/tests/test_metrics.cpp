// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sstream>

#include "ftsim/metrics.hpp"
#include "support.hpp"

using namespace ftsim;

namespace {

TraceRecord rec(SimTime at, const std::string& kind, Json payload) {
  return TraceRecord{at, "x", kind, std::move(payload)};
}

std::vector<TraceRecord> synthetic() {
  return {
      rec(0, "run-start", {{"tiles", {"C0", "C1"}}, {"threads", {"T_a"}}}),
      rec(0, "availability", {{"thread", "T_a"}, {"up", true}}),
      rec(0, "checkpoint-start", {{"group", "G0"}, {"index", 0}, {"tiles", {"C0", "C1"}}}),
      rec(20, "checkpoint-end", {{"group", "G0"}, {"index", 0}}),
      rec(300, "fault-injected", {{"fault", 0}, {"kind", "transient-state"}}),
      rec(400, "fault-injected", {{"fault", 1}, {"kind", "sefi-tile"}}),
      rec(500, "availability", {{"thread", "T_a"}, {"up", false}}),
      rec(1020, "checkpoint-start", {{"group", "G0"}, {"index", 1}, {"tiles", {"C0"}}}),
      rec(1060, "fault-detected", {{"fault", 0}}),
      rec(1060, "command", {{"tile", "C1"}}),
      rec(1100, "checkpoint-end", {{"group", "G0"}, {"index", 1}}),
      rec(1100, "fault-outcome", {{"fault", 0}, {"outcome", "corrected"}}),
      rec(1100, "fault-outcome", {{"fault", 1}, {"outcome", "absorbed"}}),
      rec(1500, "availability", {{"thread", "T_a"}, {"up", true}}),
      rec(1500, "output-vote", {{"propagated", 0}, {"suppressed", 1}, {"no_majority", false}}),
      rec(2000, "run-end", {{"loss_of_mission", false}}),
  };
}

}  // namespace

TEST(Metrics, SyntheticTrace) {
  auto m = compute_metrics(synthetic());
  EXPECT_FALSE(m.partial);
  EXPECT_EQ(m.duration, 2000u);
  EXPECT_EQ(m.injected, 2u);
  EXPECT_EQ(m.outcome("corrected"), 1u);
  EXPECT_EQ(m.outcome("absorbed"), 1u);
  EXPECT_EQ(m.outcome("undetected"), 0u);
  EXPECT_TRUE(m.accounting_ok);
  EXPECT_EQ(m.detection.count, 1u);
  EXPECT_EQ(m.detection.max, 760u);
  EXPECT_EQ(m.recovery.max, 40u);
  // up 0..500 and 1500..2000
  EXPECT_DOUBLE_EQ(m.availability.at("T_a"), 1000.0 / 2000.0);
  EXPECT_DOUBLE_EQ(m.overhead.at("C0"), (20.0 + 80.0) / 2000.0);
  EXPECT_DOUBLE_EQ(m.overhead.at("C1"), 20.0 / 2000.0);
  EXPECT_EQ(m.supervisor_commands, 1u);
  EXPECT_EQ(m.checkpoints, 2u);
  EXPECT_EQ(m.suppressed_outputs, 1u);
}

TEST(Metrics, MissingRunEndIsPartial) {
  auto t = synthetic();
  t.pop_back();
  auto m = compute_metrics(t);
  EXPECT_TRUE(m.partial);
  EXPECT_EQ(m.partial_reason, "run-end record missing");
  EXPECT_TRUE(compute_metrics(synthetic(), true).partial);
}

TEST(Metrics, DoubleOutcomeBreaksAccounting) {
  auto t = synthetic();
  t.insert(t.end() - 1, rec(1900, "fault-outcome", {{"fault", 0}, {"outcome", "replaced"}}));
  EXPECT_FALSE(compute_metrics(t).accounting_ok);
  auto u = synthetic();
  u.erase(u.begin() + 12);  // fault 1 left without an outcome
  EXPECT_FALSE(compute_metrics(u).accounting_ok);
}

TEST(Metrics, JsonlRoundTripAndTruncation) {
  const auto t = synthetic();
  const std::string text = to_jsonl(t);
  std::istringstream in(text);
  auto back = read_jsonl(in);
  EXPECT_FALSE(back.truncated);
  EXPECT_EQ(to_jsonl(back.records), text);
  EXPECT_EQ(metrics_to_string(compute_metrics(back.records)), metrics_to_string(compute_metrics(t)));

  std::istringstream cut(text.substr(0, text.size() - 15));
  auto partial = read_jsonl(cut);
  EXPECT_TRUE(partial.truncated);
  EXPECT_TRUE(compute_metrics(partial.records, partial.truncated).partial);
}

TEST(Metrics, FaultFreeRunIsClean) {
  auto r = run_scenario(ftsim::test::bundled("fig3", {"faults.events=[]"}));
  EXPECT_EQ(r.metrics.injected, 0u);
  EXPECT_EQ(r.metrics.outcome("undetected"), 0u);
  EXPECT_EQ(r.metrics.supervisor_commands, 0u);
  for (const auto& [th, a] : r.metrics.availability) EXPECT_DOUBLE_EQ(a, 1.0) << th;
  EXPECT_FALSE(r.metrics.loss_of_mission);
}

TEST(Metrics, SingleCorrectedTransientLatencies) {
  // spare-less group so the fault is corrected in place
  auto sc = ftsim::test::bundled("fig3", {"spares=[]", "supervisor.transient_threshold=3"});
  auto r = run_scenario(sc);
  ASSERT_EQ(r.metrics.outcome("corrected"), 1u);
  const SimTime period = sc.tile_groups[0].base_period;
  EXPECT_LE(r.metrics.detection.max, period);
  EXPECT_LE(r.metrics.recovery.max, 2 * period);
}
