// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>

#include "ftsim/random.hpp"
#include "support.hpp"

using namespace ftsim;
using ftsim::test::spec;

namespace {

// Independent restatement of the checksum fold.
std::uint64_t oracle_fold(const std::vector<std::uint64_t>& words, std::uint64_t cycle) {
  const std::uint64_t prime = 0x100000001b3ULL * 0x9e3779b1ULL | 1ULL;
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (auto w : words) h = mix64((h ^ w) * prime);
  return mix64(h ^ (cycle * 0x9e3779b97f4a7c15ULL));
}

}  // namespace

TEST(Workload, InitIsTileIndependent) {
  auto s = spec("T_a");
  EXPECT_EQ(init_thread(s, "C0").state, init_thread(s, "C1").state);
}

TEST(Workload, InitSizeAndSeparation) {
  auto a = init_thread(spec("T_a", 4), "C0");
  auto b = init_thread(spec("T_b", 4), "C0");
  EXPECT_EQ(a.state.size(), 4u);
  EXPECT_NE(a.state, b.state);
  EXPECT_EQ(a.cycle_counter, 0u);
}

TEST(Workload, FrozenInitialState) {
  auto ts = init_thread(spec("T_a", 4), "C0");
  const std::vector<std::uint64_t> want{0x63ca35bf94ebc4e9ULL, 0x426f23f1961fa284ULL,
                                        0xd6f5e92c72ff81bfULL, 0x67c807ed4b9db387ULL};
  EXPECT_EQ(ts.state, want);
  EXPECT_EQ(checksum_callback(ts), 0x8f6d7527f057138fULL);
}

TEST(Workload, ChecksumSeedFoldGolden) {
  EXPECT_EQ(oracle_fold({0}, 0), 0x04b55fc6c43ef7a9ULL);
  EXPECT_EQ(fold_words({0}, 0), 0x04b55fc6c43ef7a9ULL);
  auto s = spec("T_zero", 1);
  ThreadState ts;
  ts.spec = s;
  ts.state = {0};
  EXPECT_EQ(checksum_callback(ts), 0x04b55fc6c43ef7a9ULL);
}

TEST(Workload, ChecksumMatchesOracleOnRandomStates) {
  RandomStream r(5, "words");
  for (int i = 0; i < 200; ++i) {
    std::vector<std::uint64_t> w(1 + r.uniform_range(0, 20));
    for (auto& x : w) x = r.uniform64();
    const auto c = r.uniform64();
    ASSERT_EQ(fold_words(w, c), oracle_fold(w, c));
  }
}

TEST(Workload, ZeroTicksIsIdentity) {
  auto ts = init_thread(spec("T_a"), "C0");
  auto out = execute_slice(ts, 0);
  EXPECT_EQ(out.state, ts.state);
  EXPECT_EQ(out.cycle_counter, 0u);
}

TEST(Workload, ReplicasStayEqual) {
  auto s = spec("T_a", 8);
  auto a = execute_slice(init_thread(s, "C0"), 137);
  auto b = execute_slice(init_thread(s, "C1"), 137);
  EXPECT_EQ(a.state, b.state);
  EXPECT_EQ(a.cycle_counter, 137u);
}

TEST(Workload, SingleBitFlipStaysDiverged) {
  auto s = spec("T_a", 8);
  for (std::size_t word = 0; word < 8; ++word) {
    for (int bit : {0, 17, 63}) {
      auto a = init_thread(s, "C0");
      auto b = a;
      b.state[word] ^= 1ULL << bit;
      for (int k = 0; k < 5; ++k) {
        a = execute_slice(std::move(a), 10);
        b = execute_slice(std::move(b), 10);
        ASSERT_NE(checksum_callback(a), checksum_callback(b));
        // diffusion: after one slice most words differ
        int differing = 0;
        for (std::size_t i = 0; i < 8; ++i) differing += a.state[i] != b.state[i];
        ASSERT_GE(differing, 6);
      }
    }
  }
}

TEST(Workload, ExhaustiveSingleBitFlipsDistinct) {
  auto ts = init_thread(spec("T_a", 4), "C0");
  const auto base = checksum_callback(ts);
  std::set<std::uint64_t> seen;
  for (int word = 0; word < 4; ++word)
    for (int bit = 0; bit < 64; ++bit) {
      auto t = ts;
      t.state[word] ^= 1ULL << bit;
      const auto c = checksum_callback(t);
      ASSERT_NE(c, base);
      seen.insert(c);
    }
  EXPECT_EQ(seen.size(), 256u);
}

TEST(Workload, SnapshotRoundTrip) {
  auto s = spec("T_a", 6);
  auto src = execute_slice(init_thread(s, "C0"), 33);
  src.state[2] ^= 0xff;
  const auto snap = sync_callback(src);
  EXPECT_EQ(snap.cycle_counter, src.cycle_counter);
  EXPECT_EQ(snap.state, src.state);  // honest about corruption
  auto dst = update_callback(init_thread(s, "C1"), snap);
  EXPECT_EQ(checksum_callback(dst), checksum_callback(src));
  auto self = update_callback(src, sync_callback(src));
  EXPECT_EQ(self.state, src.state);
  EXPECT_EQ(self.cycle_counter, src.cycle_counter);
}

TEST(Workload, UpdateRejectsOtherThread) {
  auto a = init_thread(spec("T_a"), "C0");
  auto b = init_thread(spec("T_b"), "C0");
  EXPECT_THROW(update_callback(a, sync_callback(b)), ProtocolError);
}

TEST(Workload, Outputs) {
  auto quiet = init_thread(spec("T_q"), "C0");
  EXPECT_FALSE(emit_output(quiet));
  auto s = std::make_shared<ThreadSpec>(*spec("T_o"));
  s->emits_output = true;
  auto a = execute_slice(init_thread(s, "C0"), 5);
  auto b = execute_slice(init_thread(s, "C1"), 5);
  EXPECT_EQ(*emit_output(a), *emit_output(b));
  b.state[0] ^= 1;
  EXPECT_NE(emit_output(a)->digest, emit_output(b)->digest);
}
