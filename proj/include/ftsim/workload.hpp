// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftsim/sim_engine.hpp"

namespace ftsim {

/// Per-thread checkpoint cost scalars, in ticks.
struct ThreadCosts {
  SimTime checksum = 0;
  SimTime sync = 0;
  SimTime update = 0;
  /// Interrupt-deferral delay before the thread reaches a viable state.
  SimTime viable_delay = 0;
};

struct ThreadSpec {
  std::string thread_id;
  unsigned criticality = 0;
  SimTime desired_checkpoint_period = 1000;
  std::size_t state_words = 1;
  SimTime work_per_tick = 1;
  bool emits_output = false;
  /// State already lives in validation memory; the sync callback is omitted.
  bool state_in_vmem = false;
  ThreadCosts costs;
  /// Compute load in capacity units (criticality manager).
  double load = 0.0;
};

using ThreadSpecPtr = std::shared_ptr<const ThreadSpec>;

struct ThreadState {
  ThreadSpecPtr spec;
  std::vector<std::uint64_t> state;
  std::uint64_t cycle_counter = 0;
  /// Oracle bookkeeping only. Protocol code must never branch on this.
  bool corrupted = false;
};

struct StateSnapshot {
  std::string thread_id;
  std::uint64_t cycle_counter = 0;
  std::vector<std::uint64_t> state;

  friend bool operator==(const StateSnapshot&, const StateSnapshot&) = default;
};

struct OutputRecord {
  std::string thread_id;
  std::uint64_t cycle_counter = 0;
  std::uint64_t digest = 0;

  friend bool operator==(const OutputRecord&, const OutputRecord&) = default;
  friend auto operator<=>(const OutputRecord&, const OutputRecord&) = default;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seed of the checksum fold; checksum of a one-word zero state at cycle 0
/// is a fixed function of this constant.
inline constexpr std::uint64_t kChecksumSeed = 0x6a09e667f3bcc908ULL;

// The four application callbacks.
ThreadState init_thread(const ThreadSpecPtr& spec, const std::string& tile_id);
ThreadState execute_slice(ThreadState ts, SimTime ticks);
std::uint64_t checksum_callback(const ThreadState& ts);
StateSnapshot sync_callback(const ThreadState& ts);
ThreadState update_callback(ThreadState target, const StateSnapshot& snap);

std::optional<OutputRecord> emit_output(const ThreadState& ts);

/// One application cycle of the state-evolution function; a bijection on the
/// state vector for a fixed cycle counter.
void mix_cycle(std::vector<std::uint64_t>& words, std::uint64_t cycle);

/// Default fold over a word range (the checksum used when a thread provides
/// no callback of its own).
std::uint64_t fold_words(const std::vector<std::uint64_t>& words, std::uint64_t cycle,
                         std::uint64_t seed = kChecksumSeed);

}  // namespace ftsim
