// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>

#include "ftsim/random.hpp"
#include "ftsim/supervisor.hpp"

using namespace ftsim;

namespace {

constexpr auto kAgree = SiblingVerdict::Agree;
constexpr auto kDisagree = SiblingVerdict::Disagree;
constexpr auto kMiss = SiblingVerdict::DeadlineMiss;

AgreementSignal sig(const std::string& src, std::map<std::string, SiblingVerdict> bits) {
  return AgreementSignal{src, 0, std::move(bits)};
}

// Independent oracle: enumerate member subsets by decreasing size via
// combinations and test pairwise consistency directly from the signals.
struct OracleVerdict {
  bool unresolvable = false;
  std::vector<std::string> faulty;
};

OracleVerdict oracle(const std::vector<std::string>& members, const std::vector<AgreementSignal>& sigs) {
  auto said = [&](const std::string& a, const std::string& b) -> int {
    for (const auto& s : sigs)
      if (s.source == a) {
        auto it = s.bits.find(b);
        if (it != s.bits.end()) return it->second == kAgree ? 1 : 2;
      }
    return 0;
  };
  auto compatible = [&](const std::string& a, const std::string& b) {
    const int x = said(a, b), y = said(b, a);
    return x != 2 && y != 2 && (x == 1 || y == 1);
  };
  const std::size_t n = members.size();
  for (std::size_t k = n; k >= 1; --k) {
    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + static_cast<long>(k), true);
    std::vector<std::vector<bool>> found;
    do {
      bool ok = true;
      for (std::size_t i = 0; i < n && ok; ++i)
        for (std::size_t j = i + 1; j < n && ok; ++j)
          if (pick[i] && pick[j]) ok = compatible(members[i], members[j]);
      if (ok) found.push_back(pick);
    } while (std::prev_permutation(pick.begin(), pick.end()));
    if (found.empty()) continue;
    OracleVerdict v;
    if (found.size() > 1) {
      v.unresolvable = true;
      return v;
    }
    for (std::size_t i = 0; i < n; ++i)
      if (!found[0][i]) v.faulty.push_back(members[i]);
    return v;
  }
  return {true, {}};
}

}  // namespace

TEST(Ingest, Fig3Verdict) {
  const std::vector<std::string> m{"C0", "C1", "C2"};
  auto v = ingest_signals(m, {sig("C0", {{"C1", kAgree}, {"C2", kDisagree}}),
                              sig("C1", {{"C2", kDisagree}}), sig("C2", {{"C0", kDisagree}})});
  EXPECT_EQ(v.kind, VerdictKind::Faulty);
  EXPECT_EQ(v.faulty, std::vector<std::string>{"C2"});
  EXPECT_EQ(v.majority, (std::vector<std::string>{"C0", "C1"}));
  EXPECT_EQ(v.donor, "C0");
}

TEST(Ingest, AllAgree) {
  const std::vector<std::string> m{"C0", "C1", "C2"};
  std::vector<AgreementSignal> s;
  for (const auto& a : m) {
    std::map<std::string, SiblingVerdict> bits;
    for (const auto& b : m)
      if (a != b) bits[b] = kAgree;
    s.push_back(sig(a, bits));
  }
  auto v = ingest_signals(m, s);
  EXPECT_EQ(v.kind, VerdictKind::AllAgree);
  EXPECT_TRUE(v.faulty.empty());
}

TEST(Ingest, FourWayTwoTwoSplitIsUnresolvable) {
  const std::vector<std::string> m{"C0", "C1", "C2", "C3"};
  std::vector<AgreementSignal> s{
      sig("C0", {{"C1", kAgree}, {"C2", kDisagree}}), sig("C1", {{"C2", kDisagree}}),
      sig("C2", {{"C3", kAgree}, {"C0", kDisagree}}), sig("C3", {{"C0", kDisagree}})};
  auto v = ingest_signals(m, s);
  EXPECT_EQ(v.kind, VerdictKind::Unresolvable);
  EXPECT_TRUE(oracle(m, s).unresolvable);
}

TEST(Ingest, PairSplitIsUnresolvable) {
  auto v = ingest_signals({"C0", "C1"}, {sig("C0", {{"C1", kDisagree}}), sig("C1", {{"C0", kDisagree}})});
  EXPECT_EQ(v.kind, VerdictKind::Unresolvable);
}

TEST(Ingest, SilentTileIsFaulty) {
  const std::vector<std::string> m{"C0", "C1", "C2"};
  auto v = ingest_signals(m, {sig("C0", {{"C1", kAgree}, {"C2", kMiss}}),
                              sig("C1", {{"C2", kMiss}})});
  EXPECT_EQ(v.faulty, std::vector<std::string>{"C2"});
}

TEST(Ingest, MatchesCliqueOracleOnRandomSignals) {
  RandomStream r(99, "signals");
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t n = 2 + r.uniform_range(0, 3);
    std::vector<std::string> m;
    for (std::size_t i = 0; i < n; ++i) m.push_back("C" + std::to_string(i));
    std::vector<AgreementSignal> s;
    for (const auto& a : m) {
      if (r.bernoulli(0.1)) continue;
      std::map<std::string, SiblingVerdict> bits;
      for (const auto& b : m) {
        if (a == b || r.bernoulli(0.2)) continue;
        const auto k = r.uniform_range(0, 5);
        bits[b] = k < 4 ? kAgree : (k == 4 ? kDisagree : kMiss);
      }
      s.push_back(sig(a, bits));
    }
    const auto got = ingest_signals(m, s);
    const auto want = oracle(m, s);
    ASSERT_EQ(got.kind == VerdictKind::Unresolvable, want.unresolvable) << trial;
    if (!want.unresolvable) ASSERT_EQ(got.faulty, want.faulty) << trial;
  }
}

TEST(FaultCounter, Thresholds) {
  SupervisorState sup({3, 100, 5, 0});
  sup.add_spare("C3");
  auto d1 = handle_fault(sup, "C2", 1);
  EXPECT_EQ(d1.action, FaultAction::StateUpdate);
  EXPECT_EQ(sup.pending.at("C2"), PendingAction::StateUpdate);
  EXPECT_EQ(handle_fault(sup, "C2", 2).action, FaultAction::StateUpdate);
  auto d3 = handle_fault(sup, "C2", 3);
  EXPECT_EQ(d3.action, FaultAction::ReplaceWithSpare);
  EXPECT_EQ(d3.spare, std::optional<std::string>("C3"));
  EXPECT_FALSE(sup.is_spare("C3"));
  auto d4 = handle_fault(sup, "C2", 4);
  EXPECT_EQ(d4.action, FaultAction::ReplaceWithSpare);
  EXPECT_TRUE(d4.escalate_stage2);
  EXPECT_EQ(sup.pending.at("C2"), PendingAction::Stage2);
  auto d5 = handle_fault(sup, "C2", 5);
  EXPECT_EQ(d5.action, FaultAction::MarkDefunct);
  EXPECT_EQ(d5.lifetime_count, 5u);
  EXPECT_EQ(sup.count("C2"), 5u);
  EXPECT_EQ(sup.count("C0"), 0u);
}

TEST(FaultCounter, WindowForgetsOldFaults) {
  SupervisorState sup({2, 8, 10, 0});
  sup.add_spare("C3");
  EXPECT_EQ(handle_fault(sup, "C1", 0).action, FaultAction::StateUpdate);
  EXPECT_EQ(handle_fault(sup, "C1", 10).window_count, 1u);
  EXPECT_EQ(handle_fault(sup, "C1", 12).action, FaultAction::ReplaceWithSpare);
  EXPECT_EQ(sup.count("C1"), 3u);
  sup.reset_counter("C1");
  EXPECT_EQ(sup.count("C1"), 0u);
}

TEST(FaultCounter, ThresholdOrderingValidated) {
  EXPECT_THROW(SupervisorState({5, 10, 5, 0}), std::invalid_argument);
}

TEST(SparePool, NaturalOrder) {
  SupervisorState sup;
  for (const char* t : {"C10", "C2", "C7"}) sup.add_spare(t);
  sup.add_spare("C2");
  EXPECT_EQ(sup.spare_pool, (std::vector<std::string>{"C2", "C7", "C10"}));
  EXPECT_EQ(*sup.take_spare(), "C2");
  sup.remove_spare("C10");
  EXPECT_EQ(sup.spare_pool, std::vector<std::string>{"C7"});
}

TEST(Watchdog, Timing) {
  SupervisorState off;
  EXPECT_FALSE(watchdog_tick(off, 1'000'000));

  SupervisorState sup({3, 100, 10, 500});
  for (SimTime t = 0; t < 10'000; t += 400) {
    kick_watchdog(sup, t);
    EXPECT_FALSE(watchdog_tick(sup, t + 400));
  }
  kick_watchdog(sup, 100);
  EXPECT_FALSE(watchdog_tick(sup, 600));
  EXPECT_TRUE(watchdog_tick(sup, 601));
  sup.watchdog_hold_until = 1000;
  EXPECT_FALSE(watchdog_tick(sup, 700));
  EXPECT_FALSE(watchdog_tick(sup, 1500));
  EXPECT_TRUE(watchdog_tick(sup, 1501));
}

TEST(Commands, DefunctTargetRejected) {
  Tile t;
  t.tile_id = "C4";
  t.status = TileStatus::Defunct;
  EXPECT_THROW(check_command(t, Command::Halt), RejectedCommand);
  t.status = TileStatus::Active;
  EXPECT_NO_THROW(check_command(t, Command::Reboot));
}
