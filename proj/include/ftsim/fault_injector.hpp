// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ftsim/random.hpp"
#include "ftsim/sim_engine.hpp"
#include "ftsim/workload.hpp"

namespace ftsim {

enum class FaultKind {
  TransientState,
  TransientValidationMemory,
  PermanentCell,
  ConfigUpset,
  SefiTile,
  SefiShared,
  MainMemory,
};

inline constexpr FaultKind kAllFaultKinds[] = {
    FaultKind::TransientState, FaultKind::TransientValidationMemory, FaultKind::PermanentCell,
    FaultKind::ConfigUpset,    FaultKind::SefiTile,                  FaultKind::SefiShared,
    FaultKind::MainMemory};

const char* to_string(FaultKind k);
std::optional<FaultKind> fault_kind_from_string(const std::string& s);

struct WordFlip {
  std::size_t word = 0;
  std::uint64_t mask = 0;
};

struct FaultEvent {
  std::uint64_t id = 0;
  SimTime at = 0;
  FaultKind kind = FaultKind::TransientState;
  std::string tile;
  std::string thread;
  std::vector<WordFlip> flips;
  std::string partition;
  std::uint32_t cell = 0;
  /// SEFIs only; 0 elsewhere.
  SimTime duration = 0;
  bool scripted = false;
};

struct RateWindow {
  SimTime from = 0;
  SimTime to = 0;
  double factor = 1.0;
};

struct FaultProfile {
  /// Poisson rate per kind in events per simulated second.
  std::map<FaultKind, double> rates;
  std::vector<RateWindow> windows;
  std::vector<FaultEvent> explicit_events;
  /// Share of transient-state upsets that hit two adjacent words.
  double multi_bit_share = 0.0;
  SimTime sefi_duration = 1000;
  SimTime shared_sefi_duration = 1000;

  double factor_at(SimTime t) const;
};

struct StateTarget {
  std::string tile;
  std::string thread;
  std::size_t words = 1;
};

struct PartitionTarget {
  std::string partition;
  std::uint32_t cells = 64;
};

/// Valid targets at generation time.
struct TargetSpace {
  std::vector<StateTarget> state;
  std::vector<std::string> tiles;
  std::vector<PartitionTarget> partitions;
};

/// Nonzero random 64-bit mask.
std::uint64_t random_mask(RandomStream& stream);

/// Explicit events merged with Poisson arrivals per kind; sorted by time and
/// renumbered. Deterministic given (profile, targets, stream seed).
std::vector<FaultEvent> generate(const FaultProfile& profile, SimTime horizon,
                                 const TargetSpace& targets, RandomStream& stream);

/// XOR the flips into the state and set the oracle flag.
void corrupt_state(ThreadState& ts, const std::vector<WordFlip>& flips);

}  // namespace ftsim
