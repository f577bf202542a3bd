// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ftsim/criticality.hpp"
#include "ftsim/fabric.hpp"
#include "ftsim/fault_injector.hpp"
#include "ftsim/ids.hpp"
#include "ftsim/lockstep.hpp"
#include "ftsim/metrics.hpp"
#include "ftsim/scenario.hpp"
#include "ftsim/sim_engine.hpp"
#include "ftsim/supervisor.hpp"
#include "ftsim/trace.hpp"

namespace ftsim {

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<SimTime> until;
  /// Keep trace records in memory. Off for bulk Monte Carlo runs; counters
  /// in RunStats are maintained either way.
  bool keep_trace = true;
};

struct FaultRecord {
  FaultEvent event;
  bool injected = false;
  bool open = false;
  bool detected = false;
  SimTime detected_at = 0;
  /// Where the effect lives: tile id or "shared".
  std::string holder;
  /// Tile group whose threads were hit ("" = every group of the holder).
  std::string group;
  bool sefi_active = false;
  std::string outcome;
};

struct RunStats {
  std::uint64_t injected = 0;
  std::map<std::string, std::uint64_t> outcomes;
  std::uint64_t checkpoints = 0;
  std::uint64_t commands = 0;
  std::uint64_t masked_divergences = 0;
  std::uint64_t propagated_outputs = 0;
  bool loss_of_mission = false;
};

struct GroupRuntime {
  enum class Phase { Running, Checkpoint, Halted, Disbanded };

  TileGroup group;
  Phase phase = Phase::Halted;
  SimTime running_since = 0;
  std::uint64_t epoch = 0;
  std::optional<EventHandle> timer;
  std::optional<CheckpointContext> ctx;
  std::vector<std::string> expected;
  std::vector<CheckpointReport> reports;
  std::vector<std::string> diverged_at_start;
  bool published = false;
  std::vector<std::string> joiners;
  std::vector<std::string> updaters;
  std::string donor;
  /// Fault outcomes released when the group next resumes or restarts.
  std::vector<std::pair<std::uint64_t, std::string>> pending_outcomes;
  std::map<std::string, std::vector<std::uint64_t>> pending_vmem_flips;
};

class Simulation {
 public:
  explicit Simulation(const Scenario& scenario, RunOptions options = {});

  /// Process one event. Returns false once the run has ended.
  bool step();
  void run();

  SimTime now() const { return queue_.now(); }
  bool finished() const { return finished_; }

  /// Schedule an extra fault (at >= now). Returns its fault id.
  std::uint64_t inject(FaultEvent ev);

  const Trace& trace() const { return trace_; }
  const RunStats& stats() const { return stats_; }
  const TileMap& tiles() const { return tiles_; }
  const ThreadGroupMap& thread_groups() const { return thread_groups_; }
  const std::map<std::string, GroupRuntime, NaturalLess>& groups() const { return groups_; }
  const GroupRuntime* group(const std::string& id) const;
  const SupervisorState& supervisor() const { return sup_; }
  const Fabric& fabric() const { return fabric_; }
  const std::vector<FaultRecord>& faults() const { return faults_; }
  const Scenario& scenario() const { return sc_; }
  std::uint64_t seed() const { return seed_; }

 private:
  struct Payload {
    std::string target;
    std::uint64_t n = 0;
    std::uint64_t epoch = 0;
  };

  // event handlers
  void on_timer(const Payload& p);
  void on_compare(const Payload& p);
  void on_ingest(const Payload& p);
  void on_resume(const Payload& p);
  void on_fault(const Payload& p);
  void on_sefi_end(const Payload& p);
  void on_reboot_done(const Payload& p);
  void on_reconfig_done(const Payload& p);
  void on_watchdog(const Payload& p);
  void on_supervisor_command(const Payload& p);
  void on_horizon();

  // protocol steps
  void begin_checkpoint(GroupRuntime& g, Trigger trigger);
  void catch_up(GroupRuntime& g);
  void vote_group_outputs(GroupRuntime& g, const std::vector<std::string>& participants);
  void handle_faulty_tile(GroupRuntime& g, const std::string& tile_id, const GroupVerdict& v);
  void replace_tile(GroupRuntime& g, const std::string& tile_id, const std::string& spare);
  void activate_spare(GroupRuntime& g, const std::string& spare);
  void restore_membership();
  void reboot_group(GroupRuntime& g, const std::string& reason);
  void restart_group_if_ready(GroupRuntime& g);
  void detach_tile(const std::string& tile_id);
  void schedule_reboot(const std::string& tile_id, bool after_repair);
  void mark_defunct(const std::string& tile_id, const std::string& reason);

  // stage 2 / 3
  void start_repair(const std::string& tile_id);
  void next_repair_attempt(const std::string& tile_id);
  void start_full_reconfig(const std::string& reason);
  void request_stage3();
  void apply_stage3();
  void disband(GroupRuntime& g);

  void full_reset(const std::string& reason);
  void rekick_watchdog();

  // faults
  void open_fault(std::uint64_t id, const std::string& holder, const std::string& group);
  void close_fault(std::uint64_t id, const std::string& outcome, const std::string& reason);
  void detect_faults(const std::string& holder, const std::string& group, std::uint64_t index);
  /// Close matching open faults on `holder`; permanent damage stays open
  /// unless `include_permanent`.
  void close_tile_faults(const std::string& holder, const std::string& group,
                         const std::string& outcome, const std::string& reason,
                         bool include_permanent, std::vector<std::pair<std::uint64_t, std::string>>* defer = nullptr);
  /// A reboot ends any functional interrupt on the tile.
  void clear_sefi(const std::string& tile_id);

  // helpers
  void set_tile_status(Tile& t, TileStatus to, const std::string& reason);
  void command(const std::string& tile, Command c, Json extra = Json::object());
  bool shared_blocked() const;
  std::vector<std::string> groups_of(const std::string& tile_id) const;
  GroupRuntime* group_hosting_thread(const std::string& tile_id, const std::string& thread_id);
  std::vector<ThreadSpecPtr> group_threads(const TileGroup& g) const;
  void refresh_availability();
  void end_run(const std::string& reason);
  EventHandle schedule(SimTime at, EventKind kind, Payload p);

  Scenario sc_;
  RunOptions opt_;
  std::uint64_t seed_ = 0;
  SimTime end_at_ = 0;
  Trace trace_;
  RunStats stats_;
  EventQueue<Payload> queue_;
  bool finished_ = false;

  std::vector<ThreadSpecPtr> all_threads_;
  ThreadGroupMap thread_groups_;
  TileMap tiles_;
  std::map<std::string, GroupRuntime, NaturalLess> groups_;
  SupervisorState sup_;
  Fabric fabric_;
  std::vector<FaultRecord> faults_;

  std::uint64_t next_slot_ = 0;
  std::map<std::string, std::uint64_t> tile_epoch_;
  std::map<std::string, SimTime> sefi_until_;
  SimTime shared_sefi_until_ = 0;
  bool shared_damaged_ = false;
  std::map<std::string, RepairJob> repairs_;
  std::map<std::string, RepairJob::Attempt> repair_attempt_;
  bool full_reconfig_active_ = false;
  bool stage3_pending_ = false;
  std::optional<EventHandle> watchdog_;
  std::map<std::string, bool> available_;
};

struct RunResult {
  std::vector<TraceRecord> trace;
  MetricsSummary metrics;
  RunStats stats;
};

/// Run to completion; metrics are computed from the trace.
RunResult run_scenario(const Scenario& scenario, RunOptions options = {});

}  // namespace ftsim
