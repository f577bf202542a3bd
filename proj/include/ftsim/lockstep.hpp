// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ftsim/tile.hpp"

namespace ftsim {

enum class Trigger { Timer, Supervisor };
enum class SiblingVerdict { Agree, Disagree, DeadlineMiss };

const char* to_string(Trigger t);
const char* to_string(SiblingVerdict v);

struct CheckpointCost {
  SimTime checksum = 0;
  SimTime sync = 0;
  SimTime update = 0;
  SimTime context_switch = 0;
};

struct CheckpointReport {
  std::string tile_id;
  std::uint64_t checkpoint_index = 0;
  /// In comparison order; siblings after the first disagreement are absent.
  std::vector<std::pair<std::string, SiblingVerdict>> verdicts;
  SimTime duration = 0;
  SimTime reported_at = 0;

  bool all_agree() const;
  bool detected_mismatch() const;
};

struct TileCheckpoint {
  std::string tile_id;
  std::vector<std::pair<std::string, std::uint64_t>> checksums;
  SimTime duration = 0;
  bool published = false;
  bool snapshots_written = false;
};

struct CheckpointContext {
  std::string group_id;
  std::uint64_t index = 0;
  /// Validation-memory key. Equals `index` unless the caller assigns a
  /// system-wide unique slot (tiles in several groups).
  std::uint64_t slot = 0;
  Trigger trigger = Trigger::Timer;
  SimTime started_at = 0;
  /// Interrupt-deferral delay before the handler runs, capped by the deadline.
  SimTime delay = 0;
  SimTime deadline_at = 0;
  std::vector<std::string> scheduled_threads;
  std::vector<std::string> all_threads;
  std::vector<TileCheckpoint> tiles;

  TileCheckpoint* find(const std::string& tile_id);
  const TileCheckpoint* find(const std::string& tile_id) const;
};

using ThreadGroupMap = std::map<std::string, ThreadGroup>;
using TileMap = std::map<std::string, Tile>;

/// Group-level checkpoint start: advances the group's checkpoint index and
/// fixes which threads are scheduled for checking.
CheckpointContext open_checkpoint(TileGroup& group, const ThreadGroupMap& thread_groups,
                                  Trigger trigger, SimTime now);

/// Enrol one tile. SEFI-blocked or inactive tiles never start.
bool start_checkpoint(CheckpointContext& ctx, const Tile& tile);

/// Run checksum callbacks for the scheduled threads. Returns the added duration.
SimTime compute_checksums(CheckpointContext& ctx, const Tile& tile, SimTime context_switch);

/// Write computed checksums into the tile's validation memory. False when the
/// writes were lost (interface SEFI).
bool publish_checksums(CheckpointContext& ctx, Tile& tile);

CheckpointReport compare_with_siblings(const CheckpointContext& ctx, const Tile& self,
                                       const TileGroup& group, const TileMap& tiles,
                                       bool shared_blocked, SimTime now,
                                       SimTime comparison_deadline);

/// Sync callbacks for all threads of the group into validation memory.
/// Returns the duration spent (threads whose state already sits in
/// validation memory cost nothing).
SimTime propagate_state(CheckpointContext& ctx, Tile& tile, const TileGroup& group,
                        const ThreadGroupMap& thread_groups, SimTime context_switch);

struct UpdateResult {
  bool ok = false;
  SimTime duration = 0;
  std::vector<std::string> updated_threads;
  std::string failure;
};

/// Pull donor snapshots for every thread of `thread_group_ids` and run update
/// callbacks on `updating`.
UpdateResult apply_update(Tile& updating, const Tile& donor,
                          const std::vector<std::string>& thread_group_ids,
                          const ThreadGroupMap& thread_groups, std::uint64_t index,
                          SimTime context_switch);

/// Updates the group's Updating/Suspect members from the donor; all members
/// resume exactly grace_period after checkpoint end.
struct ResumePlan {
  SimTime resume_at = 0;
  std::vector<std::pair<std::string, UpdateResult>> updates;
};
ResumePlan apply_update_and_resume(const TileGroup& group, TileMap& tiles,
                                   const std::vector<std::string>& updating_tiles,
                                   const std::string& donor, const ThreadGroupMap& thread_groups,
                                   std::uint64_t index, SimTime checkpoint_end,
                                   bool disagreement, SimTime context_switch);

struct VoteResult {
  std::optional<OutputRecord> voted;
  /// Records released to the outside world.
  std::vector<OutputRecord> released;
  /// Records differing from the majority (or from the largest class).
  std::size_t divergent = 0;
  bool no_majority = false;
};

VoteResult vote_outputs(const std::vector<OutputRecord>& replicas, bool voting_enabled);

/// Fault-free checkpoint duration: delay + sum over scheduled threads of
/// (checksum cost + context switch).
SimTime analytic_checkpoint_time(const TileGroup& group, const ThreadGroupMap& thread_groups,
                                 std::uint64_t index, SimTime context_switch);

}  // namespace ftsim
