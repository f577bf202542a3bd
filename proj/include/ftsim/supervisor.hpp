// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftsim/lockstep.hpp"

namespace ftsim {

/// One tile's agreement lines for one checkpoint. Absence of a signal is
/// itself information (the tile never reported).
struct AgreementSignal {
  std::string source;
  std::uint64_t checkpoint_index = 0;
  std::map<std::string, SiblingVerdict> bits;
};

AgreementSignal to_signal(const CheckpointReport& report);

enum class VerdictKind { AllAgree, Faulty, Unresolvable };
const char* to_string(VerdictKind k);

struct GroupVerdict {
  VerdictKind kind = VerdictKind::AllAgree;
  std::vector<std::string> majority;  // largest mutually-agreeing clique
  std::vector<std::string> faulty;    // members outside it
  std::string donor;                  // lowest tile id inside the majority
};

/// Builds the agreement graph over `members` (edge = no disagreement or miss
/// in either direction and at least one agree) and takes the unique maximum
/// clique as the majority.
GroupVerdict ingest_signals(const std::vector<std::string>& members,
                            const std::vector<AgreementSignal>& signals);

enum class PendingAction { StateUpdate, Replace, Reboot, Stage2, Stage3 };
const char* to_string(PendingAction a);

struct SupervisorConfig {
  std::uint64_t transient_threshold = 3;
  /// Sliding window for the transient threshold, in checkpoints.
  std::uint64_t transient_window = 100;
  std::uint64_t defunct_threshold = 10;
  SimTime watchdog_period = 0;
};

struct SupervisorState {
  SupervisorConfig config;
  std::map<std::string, std::uint64_t> fault_counter;
  /// Checkpoint sequence numbers of recent faults per tile.
  std::map<std::string, std::deque<std::uint64_t>> recent;
  std::vector<std::string> spare_pool;  // natural order
  SimTime watchdog_last_kick = 0;
  /// Watchdog is held (e.g. during full reconfiguration) until this time.
  SimTime watchdog_hold_until = 0;
  std::map<std::string, PendingAction> pending;

  explicit SupervisorState(SupervisorConfig cfg = {});

  std::uint64_t count(const std::string& tile) const;
  void add_spare(const std::string& tile);
  std::optional<std::string> take_spare();
  bool is_spare(const std::string& tile) const;
  void remove_spare(const std::string& tile);
  /// Stage 2 repair success is the only reset path.
  void reset_counter(const std::string& tile);
};

enum class FaultAction { StateUpdate, ReplaceWithSpare, MarkDefunct };
const char* to_string(FaultAction a);

struct FaultDecision {
  FaultAction action = FaultAction::StateUpdate;
  std::uint64_t lifetime_count = 0;
  std::uint64_t window_count = 0;
  /// Replacement wanted but no spare left.
  bool escalate_stage2 = false;
  std::optional<std::string> spare;
};

/// Count the fault and choose the response by thresholds. `checkpoint_seq`
/// is a global monotonically increasing checkpoint counter for windowing.
FaultDecision handle_fault(SupervisorState& sup, const std::string& tile_id,
                           std::uint64_t checkpoint_seq);

void kick_watchdog(SupervisorState& sup, SimTime now);

/// True when the watchdog should force a full-system reset at `now`.
bool watchdog_tick(const SupervisorState& sup, SimTime now);

enum class Command { StateUpdate, Reboot, ActivateWithMapping, Halt, Checkpoint };
const char* to_string(Command c);

class RejectedCommand : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws RejectedCommand for Defunct targets.
void check_command(const Tile& tile, Command command);

}  // namespace ftsim
