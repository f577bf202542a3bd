// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ftsim/lockstep.hpp"

namespace ftsim {

enum class Lever { ReduceReplicas, ReduceCheckpointFrequency, Deactivate };
const char* to_string(Lever l);
std::optional<Lever> lever_from_string(const std::string& s);

struct CriticalityPolicy {
  unsigned min_replicas_high = 3;
  unsigned min_replicas_low = 2;
  /// Groups with criticality >= this are high-criticality.
  unsigned high_threshold = 5;
  std::vector<Lever> degradation_order{Lever::ReduceReplicas, Lever::ReduceCheckpointFrequency,
                                       Lever::Deactivate};
  unsigned frequency_factor = 2;
  unsigned max_period_factor = 4;

  unsigned class_min(unsigned criticality) const {
    return criticality >= high_threshold ? min_replicas_high : min_replicas_low;
  }
};

/// Linear-additive demand: work share plus checkpoint share; the checkpoint
/// share scales down with the period factor.
struct GroupDemand {
  std::string tg_id;
  unsigned criticality = 0;
  double work = 0.0;
  double checkpoint = 0.0;
  std::vector<std::string> current_tiles;
  std::size_t desired_replicas = 0;

  double at_factor(unsigned factor) const { return work + checkpoint / std::max(1u, factor); }
};

struct CapacityModel {
  std::map<std::string, double> tile_capacity;  // healthy tiles only
  std::vector<GroupDemand> groups;
};

struct GroupPlacement {
  std::string tg_id;
  unsigned criticality = 0;
  std::vector<std::string> tiles;
  unsigned period_factor = 1;
  std::vector<Lever> levers;
  bool deactivated = false;
  bool loss_of_capability = false;

  bool detect_only() const { return tiles.size() == 2; }
};

struct AssignmentPlan {
  std::vector<GroupPlacement> groups;  // processing order
  std::map<std::string, double> residual;

  const GroupPlacement* find(const std::string& tg_id) const;
};

/// Greedy placement in descending criticality (ties by label), preferring
/// tiles already hosting the group. High groups that fit undegraded first,
/// then everything else with degradation levers, extra replicas last.
AssignmentPlan reallocate(const CapacityModel& model, const CriticalityPolicy& policy);

/// No group sits below its class minimum while a strictly-lower-criticality
/// group holds capacity that would let it reach that minimum.
bool priority_dominance_holds(const AssignmentPlan& plan, const CapacityModel& model,
                              const CriticalityPolicy& policy, std::string* why = nullptr);

/// High-criticality groups holding their minimum at the undegraded period.
std::size_t fully_replicated_high(const AssignmentPlan& plan, const CriticalityPolicy& policy);

struct DegradationResult {
  bool applied = false;
  std::optional<std::string> removed_tile;
};

/// Apply one lever to a running tile group. Returns applied=false when the
/// lever is already at its floor.
DegradationResult apply_degradation(TileGroup& group, Lever lever,
                                    const CriticalityPolicy& policy);

struct MigrationResult {
  bool restarted = false;
  std::optional<std::string> donor;
  /// Tiles whose checkpoint timers change because they host a new group.
  std::vector<std::string> timer_adjusted;
  std::vector<std::string> updated_tiles;
};

/// Move a thread group between tile groups. Targets pull the donor's
/// snapshot (written to its validation memory at `snapshot_index`); with no
/// healthy donor every target restarts the threads from their initial state.
MigrationResult migrate_thread_group(const std::string& tg_id, TileGroup& from, TileGroup& to,
                                     TileMap& tiles, const ThreadGroupMap& thread_groups,
                                     std::uint64_t snapshot_index);

}  // namespace ftsim
