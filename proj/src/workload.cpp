// SPDX-License-Identifier: Apache-2.0
#include "ftsim/workload.hpp"

#include <bit>

#include "ftsim/random.hpp"

namespace ftsim {

namespace {
constexpr std::uint64_t kFoldPrime = 0x100000001b3ULL * 0x9e3779b1ULL | 1ULL;
constexpr std::uint64_t kMixMul = 0xd6e8feb86659fd93ULL;
constexpr std::uint64_t kDigestSeed = 0xbb67ae8584caa73bULL;
constexpr std::uint64_t kInitSalt = 0x3c6ef372fe94f82bULL;
}  // namespace

ThreadState init_thread(const ThreadSpecPtr& spec, const std::string& /*tile_id*/) {
  ThreadState ts;
  ts.spec = spec;
  ts.state.resize(spec->state_words);
  const std::uint64_t base = hash_label(spec->thread_id) ^ kInitSalt;
  for (std::size_t i = 0; i < ts.state.size(); ++i) {
    ts.state[i] = mix64(base + 0x9e3779b97f4a7c15ULL * (i + 1));
  }
  return ts;
}

void mix_cycle(std::vector<std::uint64_t>& words, std::uint64_t cycle) {
  // Forward then backward triangular pass: each word update is bijective
  // given the carry, which only depends on already-updated words.
  std::uint64_t carry = mix64(cycle ^ 0xa54ff53a5f1d36f1ULL);
  for (auto& w : words) {
    w = std::rotl((w ^ carry) * kMixMul, 29);
    carry = mix64(carry + w);
  }
  carry = mix64(carry ^ cycle);
  for (auto it = words.rbegin(); it != words.rend(); ++it) {
    *it = std::rotl((*it + carry) * kMixMul, 17) ^ (carry >> 7);
    carry = mix64(carry ^ *it);
  }
}

ThreadState execute_slice(ThreadState ts, SimTime ticks) {
  const SimTime per = ts.spec->work_per_tick == 0 ? 1 : ts.spec->work_per_tick;
  const std::uint64_t cycles = ticks / per;
  for (std::uint64_t c = 0; c < cycles; ++c) {
    mix_cycle(ts.state, ts.cycle_counter);
    ++ts.cycle_counter;
  }
  return ts;
}

std::uint64_t fold_words(const std::vector<std::uint64_t>& words, std::uint64_t cycle,
                         std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::uint64_t w : words) h = mix64((h ^ w) * kFoldPrime);
  return mix64(h ^ (cycle * 0x9e3779b97f4a7c15ULL));
}

std::uint64_t checksum_callback(const ThreadState& ts) {
  return fold_words(ts.state, ts.cycle_counter);
}

StateSnapshot sync_callback(const ThreadState& ts) {
  return StateSnapshot{ts.spec->thread_id, ts.cycle_counter, ts.state};
}

ThreadState update_callback(ThreadState target, const StateSnapshot& snap) {
  if (snap.thread_id != target.spec->thread_id) {
    throw ProtocolError("update_callback: snapshot of '" + snap.thread_id +
                        "' applied to thread '" + target.spec->thread_id + "'");
  }
  target.state = snap.state;
  target.cycle_counter = snap.cycle_counter;
  return target;
}

std::optional<OutputRecord> emit_output(const ThreadState& ts) {
  if (!ts.spec->emits_output) return std::nullopt;
  return OutputRecord{ts.spec->thread_id, ts.cycle_counter,
                      fold_words(ts.state, ts.cycle_counter, kDigestSeed)};
}

}  // namespace ftsim
