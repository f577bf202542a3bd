// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftsim/fabric.hpp"
#include "ftsim/sim_engine.hpp"
#include "ftsim/workload.hpp"

namespace ftsim {

enum class TileStatus { Booting, Active, IdleSpare, Updating, Suspect, Rebooting, Defunct };

const char* to_string(TileStatus s);

/// Whether the tile lifecycle permits `from -> to`.
bool transition_allowed(TileStatus from, TileStatus to);

class VmemAccessError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct VmemEntry {
  std::uint64_t checksum = 0;
  std::optional<StateSnapshot> snapshot;
};

/// Tile-owned region: writable by its owner only, readable by every tile.
class ValidationMemory {
 public:
  ValidationMemory() = default;
  explicit ValidationMemory(std::string owner) : owner_(std::move(owner)) {}

  const std::string& owner() const { return owner_; }

  /// Announce how many checksum entries make checkpoint `index` complete.
  void begin_checkpoint(const std::string& actor, std::uint64_t index, std::size_t expected);
  void write_checksum(const std::string& actor, const std::string& thread_id, std::uint64_t index,
                      std::uint64_t checksum);
  void write_snapshot(const std::string& actor, std::uint64_t index, StateSnapshot snap);
  /// Fault injection path: corrupt a stored checksum in place (no actor check).
  bool flip_checksum(const std::string& thread_id, std::uint64_t index, std::uint64_t mask);

  bool ready(std::uint64_t index) const { return ready_.count(index) > 0; }
  std::optional<std::uint64_t> checksum(const std::string& thread_id, std::uint64_t index) const;
  const StateSnapshot* snapshot(const std::string& thread_id, std::uint64_t index) const;
  std::optional<std::uint64_t> latest_index() const;
  std::size_t entry_count() const { return entries_.size(); }
  std::uint64_t mutations() const { return mutations_; }

  /// Drop entries older than `keep_from`.
  void prune(std::uint64_t keep_from);
  void clear();

 private:
  void check_owner(const std::string& actor) const;

  std::string owner_;
  std::map<std::pair<std::string, std::uint64_t>, VmemEntry> entries_;
  std::map<std::uint64_t, std::size_t> expected_;
  std::map<std::uint64_t, std::size_t> written_;
  std::set<std::uint64_t> ready_;
  std::uint64_t mutations_ = 0;
};

struct ThreadGroup {
  std::string tg_id;
  std::vector<ThreadSpecPtr> threads;
  /// thread checked every check_divisor-th checkpoint
  std::map<std::string, unsigned> check_divisor;

  unsigned criticality() const;
  unsigned divisor(const std::string& thread_id) const;
};

struct TileGroup {
  std::string group_id;
  std::vector<std::string> members;  // natural order
  std::vector<std::string> thread_groups;
  SimTime base_period = 1000;
  SimTime comparison_deadline = 100;
  SimTime grace_period = 0;
  std::uint64_t checkpoint_index = 0;
  /// Membership the supervisor tries to restore after losses.
  std::size_t target_size = 3;
  /// Cleared when a group is degraded to a detecting pair.
  bool correction_enabled = true;
  /// Multiplier applied to base_period by the frequency-reduction lever.
  unsigned period_factor = 1;

  SimTime period() const { return base_period * period_factor; }
};

struct Tile {
  std::string tile_id;
  TileStatus status = TileStatus::Booting;
  std::set<std::string> hosted_groups;
  ValidationMemory vmem;
  std::string partition;
  bool sefi_blocked = false;
  double capacity = 100.0;

  /// Every thread is initialized on every tile at boot.
  std::map<std::string, ThreadState> threads;
  /// Groups this tile joined but has not yet synchronized.
  std::set<std::string> pending_update;
  /// Set when the hosting fabric partition corrupts execution.
  bool persistent_corruption = false;
};

/// Applies a lifecycle transition; throws std::logic_error on a forbidden one.
void set_status(Tile& tile, TileStatus to);

/// base_period = min desired period over the threads; divisor = floor(desired/base).
SimTime combine_base_period(const std::vector<const ThreadGroup*>& groups);
void assign_divisors(ThreadGroup& group, SimTime base_period);

enum class BootOutcome { Activated, IdleSpare, BootFailed };

struct BootResult {
  BootOutcome outcome = BootOutcome::BootFailed;
  /// Time of the first checkpoint (immediately) when activated.
  std::optional<SimTime> first_checkpoint;
};

/// Self-test against the fabric, then run every thread's init routine.
BootResult boot_tile(Tile& tile, const std::vector<std::string>& assigned_groups,
                     const std::vector<ThreadSpecPtr>& all_threads, const Fabric& fabric,
                     SimTime now);

enum class SchedulerAction { RunThreads, PerformUpdate, SleepUntilCheckpoint };

SchedulerAction scheduler_step(const Tile& tile, bool has_active_group);

/// Returns false when the write was lost to an interface SEFI.
bool write_validation(Tile& tile, const std::string& actor, const std::string& thread_id,
                      std::uint64_t checkpoint_index, std::uint64_t checksum,
                      const std::optional<StateSnapshot>& snapshot = std::nullopt);

}  // namespace ftsim
