// SPDX-License-Identifier: Apache-2.0
#include "ftsim/simulation.hpp"

#include <algorithm>

#include "ftsim/random.hpp"

namespace ftsim {

namespace {

bool is_permanent(FaultKind k) { return k == FaultKind::PermanentCell || k == FaultKind::ConfigUpset; }

Json id_array(const std::vector<std::string>& ids) {
  Json a = Json::array();
  for (const auto& s : ids) a.push_back(s);
  return a;
}

std::uint64_t perturbation(const std::string& tile, std::uint64_t cycle) {
  return mix64(hash_label(tile) ^ (cycle * 0x9e3779b97f4a7c15ULL)) | 1u;
}

void erase_id(std::vector<std::string>& v, const std::string& id) {
  v.erase(std::remove(v.begin(), v.end(), id), v.end());
}

bool operational(const Tile& t) {
  return t.status == TileStatus::Active || t.status == TileStatus::Suspect;
}

}  // namespace

Simulation::Simulation(const Scenario& scenario, RunOptions options)
    : sc_(scenario), opt_(options), trace_(options.keep_trace), sup_(scenario.supervisor) {
  seed_ = opt_.seed.value_or(sc_.seed);
  end_at_ = sc_.horizon;
  if (opt_.until) end_at_ = std::min(end_at_, *opt_.until);

  std::map<std::string, ThreadSpecPtr> specs;
  for (const auto& t : sc_.threads) {
    auto p = std::make_shared<const ThreadSpec>(t);
    all_threads_.push_back(p);
    specs[t.thread_id] = p;
  }
  for (const auto& tgc : sc_.thread_groups) {
    ThreadGroup tg;
    tg.tg_id = tgc.id;
    for (const auto& th : tgc.threads) tg.threads.push_back(specs.at(th));
    thread_groups_[tgc.id] = std::move(tg);
  }

  std::vector<Partition> parts;
  for (const auto& t : sc_.tiles) {
    Partition p;
    p.partition_id = t.partition;
    p.cell_count = sc_.fabric.cell_count;
    p.hosted_tile = t.id;
    parts.push_back(p);
  }
  for (const auto& fp : sc_.fabric.free_partitions) {
    Partition p;
    p.partition_id = fp;
    p.cell_count = sc_.fabric.cell_count;
    parts.push_back(p);
  }
  Partition shared;
  shared.partition_id = kSharedRegionId;
  shared.cell_count = sc_.fabric.shared_cell_count;
  fabric_ = Fabric(parts, sc_.fabric.variants, shared, sc_.fabric.shared_variants);

  for (const auto& tc : sc_.tiles) {
    Tile t;
    t.tile_id = tc.id;
    t.vmem = ValidationMemory(tc.id);
    t.partition = tc.partition;
    t.capacity = tc.capacity;
    tiles_.emplace(tc.id, std::move(t));
  }
  for (const auto& gc : sc_.tile_groups) {
    GroupRuntime g;
    g.group.group_id = gc.id;
    g.group.members = gc.members;
    sort_natural(g.group.members);
    g.group.thread_groups = gc.thread_groups;
    g.group.base_period = gc.base_period;
    g.group.comparison_deadline = gc.comparison_deadline;
    g.group.grace_period = gc.grace_period;
    g.group.target_size = g.group.members.size();
    g.group.correction_enabled = g.group.members.size() >= 3;
    for (const auto& tg : gc.thread_groups) assign_divisors(thread_groups_.at(tg), gc.base_period);
    groups_.emplace(gc.id, std::move(g));
  }
  for (const auto& s : sc_.spares) sup_.add_spare(s);

  TargetSpace targets;
  for (const auto& [gid, g] : groups_)
    for (const auto& m : g.group.members)
      for (const auto& spec : group_threads(g.group))
        targets.state.push_back({m, spec->thread_id, spec->state_words});
  for (const auto& t : sc_.tiles) targets.tiles.push_back(t.id);
  sort_natural(targets.tiles);
  for (const auto& p : fabric_.partitions()) targets.partitions.push_back({p.partition_id, p.cell_count});
  targets.partitions.push_back({kSharedRegionId, sc_.fabric.shared_cell_count});
  RandomStream rng(seed_, "faults");
  for (auto& ev : generate(sc_.faults, sc_.horizon, targets, rng)) {
    FaultRecord r;
    r.event = std::move(ev);
    faults_.push_back(std::move(r));
  }

  Json start;
  start["scenario"] = sc_.name;
  start["seed"] = seed_;
  start["horizon"] = sc_.horizon;
  start["end_at"] = end_at_;
  std::vector<std::string> tile_ids, thread_ids;
  for (const auto& t : sc_.tiles) tile_ids.push_back(t.id);
  sort_natural(tile_ids);
  for (const auto& t : sc_.threads) thread_ids.push_back(t.thread_id);
  start["tiles"] = id_array(tile_ids);
  start["threads"] = id_array(thread_ids);
  start["spares"] = id_array(sup_.spare_pool);
  Json gs = Json::array();
  for (const auto& [gid, g] : groups_) {
    Json j;
    j["id"] = gid;
    j["members"] = id_array(g.group.members);
    j["thread_groups"] = id_array(g.group.thread_groups);
    j["base_period"] = g.group.base_period;
    j["comparison_deadline"] = g.group.comparison_deadline;
    j["grace_period"] = g.group.grace_period;
    gs.push_back(j);
  }
  start["groups"] = gs;
  start["faults_planned"] = faults_.size();
  trace_.emit(0, "sim", "run-start", start);

  schedule(end_at_, EventKind::Horizon, {});
  for (std::size_t i = 0; i < faults_.size(); ++i)
    if (faults_[i].event.at < end_at_) schedule(faults_[i].event.at, EventKind::FaultArrival, {"", i, 0});

  for (const auto& id : tile_ids) {
    Tile& t = tiles_.at(id);
    auto res = boot_tile(t, groups_of(id), all_threads_, fabric_, 0);
    Json b;
    b["tile"] = id;
    b["outcome"] = res.outcome == BootOutcome::Activated ? "active"
                   : res.outcome == BootOutcome::IdleSpare ? "idle-spare"
                                                          : "boot-failed";
    trace_.emit(0, id, "boot", b);
    if (res.outcome == BootOutcome::BootFailed) {
      mark_defunct(id, "boot self-test failed");
      start_repair(id);
    } else {
      Json s;
      s["tile"] = id;
      s["from"] = to_string(TileStatus::Booting);
      s["to"] = to_string(t.status);
      s["reason"] = "boot";
      trace_.emit(0, id, "tile-status", s);
    }
  }
  for (auto& [gid, g] : groups_) {
    g.phase = GroupRuntime::Phase::Running;
    g.running_since = 0;
    g.timer = schedule(0, EventKind::TimerCheckpoint, {gid, 0, g.epoch});
  }
  kick_watchdog(sup_, 0);
  rekick_watchdog();
  refresh_availability();
}

EventHandle Simulation::schedule(SimTime at, EventKind kind, Payload p) {
  return queue_.schedule(at, kind, std::move(p));
}

const GroupRuntime* Simulation::group(const std::string& id) const {
  auto it = groups_.find(id);
  return it == groups_.end() ? nullptr : &it->second;
}

std::uint64_t Simulation::inject(FaultEvent ev) {
  if (ev.at < now()) throw PastTimeError(ev.at, now());
  const std::uint64_t id = faults_.size();
  ev.id = id;
  ev.scripted = true;
  FaultRecord r;
  r.event = std::move(ev);
  faults_.push_back(std::move(r));
  if (faults_.back().event.at < end_at_)
    schedule(faults_.back().event.at, EventKind::FaultArrival, {"", id, 0});
  return id;
}

bool Simulation::step() {
  if (finished_) return false;
  auto ev = queue_.advance();
  if (!ev) {
    end_run("drained");
    return false;
  }
  const Payload& p = ev->payload;
  switch (ev->kind) {
    case EventKind::TimerCheckpoint: on_timer(p); break;
    case EventKind::CheckpointCompare: on_compare(p); break;
    case EventKind::CheckpointIngest: on_ingest(p); break;
    case EventKind::CheckpointResume: on_resume(p); break;
    case EventKind::FaultArrival: on_fault(p); break;
    case EventKind::SefiEnd: on_sefi_end(p); break;
    case EventKind::TileRebootDone: on_reboot_done(p); break;
    case EventKind::ReconfigurationDone: on_reconfig_done(p); break;
    case EventKind::WatchdogExpiry: on_watchdog(p); break;
    case EventKind::SupervisorCommand: on_supervisor_command(p); break;
    case EventKind::Horizon: on_horizon(); break;
  }
  if (!finished_) refresh_availability();
  return !finished_;
}

void Simulation::run() {
  while (step()) {
  }
}

// ---------------------------------------------------------------- helpers

std::vector<std::string> Simulation::groups_of(const std::string& tile_id) const {
  std::vector<std::string> out;
  for (const auto& [gid, g] : groups_)
    if (g.phase != GroupRuntime::Phase::Disbanded && contains(g.group.members, tile_id))
      out.push_back(gid);
  return out;
}

std::vector<ThreadSpecPtr> Simulation::group_threads(const TileGroup& g) const {
  std::vector<ThreadSpecPtr> out;
  for (const auto& tg : g.thread_groups) {
    auto it = thread_groups_.find(tg);
    if (it == thread_groups_.end()) continue;
    out.insert(out.end(), it->second.threads.begin(), it->second.threads.end());
  }
  return out;
}

GroupRuntime* Simulation::group_hosting_thread(const std::string& tile_id,
                                               const std::string& thread_id) {
  for (auto& [gid, g] : groups_) {
    if (g.phase == GroupRuntime::Phase::Disbanded || !contains(g.group.members, tile_id)) continue;
    for (const auto& spec : group_threads(g.group))
      if (spec->thread_id == thread_id) return &g;
  }
  return nullptr;
}

void Simulation::set_tile_status(Tile& t, TileStatus to, const std::string& reason) {
  if (t.status == to) return;
  const TileStatus from = t.status;
  set_status(t, to);
  Json s;
  s["tile"] = t.tile_id;
  s["from"] = to_string(from);
  s["to"] = to_string(to);
  s["reason"] = reason;
  trace_.emit(now(), t.tile_id, "tile-status", s);
}

void Simulation::command(const std::string& tile, Command c, Json extra) {
  Json j;
  j["tile"] = tile;
  j["command"] = to_string(c);
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  auto t = tiles_.find(tile);
  if (t != tiles_.end()) {
    try {
      check_command(t->second, c);
    } catch (const RejectedCommand& e) {
      j["reason"] = e.what();
      trace_.emit(now(), "supervisor", "rejected-command", j);
      return;
    }
  }
  ++stats_.commands;
  trace_.emit(now(), "supervisor", "command", j);
}

bool Simulation::shared_blocked() const { return shared_damaged_ || shared_sefi_until_ > now(); }

void Simulation::refresh_availability() {
  for (const auto& spec : all_threads_) {
    bool up = false;
    for (const auto& [gid, g] : groups_) {
      if (g.phase != GroupRuntime::Phase::Running && g.phase != GroupRuntime::Phase::Checkpoint) continue;
      bool hosts = false;
      for (const auto& s : group_threads(g.group)) hosts = hosts || s->thread_id == spec->thread_id;
      if (!hosts) continue;
      for (const auto& m : g.group.members)
        if (tiles_.at(m).status == TileStatus::Active) up = true;
    }
    auto it = available_.find(spec->thread_id);
    if (it == available_.end() || it->second != up) {
      available_[spec->thread_id] = up;
      Json j;
      j["thread"] = spec->thread_id;
      j["up"] = up;
      trace_.emit(now(), "sim", "availability", j);
    }
  }
}

void Simulation::rekick_watchdog() {
  if (watchdog_) queue_.cancel(*watchdog_);
  watchdog_.reset();
  if (sup_.config.watchdog_period == 0) return;
  const SimTime base = std::max(sup_.watchdog_last_kick, sup_.watchdog_hold_until);
  const SimTime at = base + sup_.config.watchdog_period + 1;
  if (at < end_at_) watchdog_ = schedule(at, EventKind::WatchdogExpiry, {});
}

// ---------------------------------------------------------------- faults

void Simulation::open_fault(std::uint64_t id, const std::string& holder, const std::string& group) {
  auto& f = faults_[id];
  f.open = true;
  f.holder = holder;
  f.group = group;
}

void Simulation::close_fault(std::uint64_t id, const std::string& outcome, const std::string& reason) {
  auto& f = faults_[id];
  if (!f.outcome.empty()) return;
  f.open = false;
  f.outcome = outcome;
  ++stats_.outcomes[outcome];
  Json j;
  j["fault"] = id;
  j["kind"] = to_string(f.event.kind);
  j["outcome"] = outcome;
  j["reason"] = reason;
  if (!f.holder.empty()) j["holder"] = f.holder;
  trace_.emit(now(), "injector", "fault-outcome", j);
}

void Simulation::detect_faults(const std::string& holder, const std::string& group,
                               std::uint64_t index) {
  for (auto& f : faults_) {
    if (!f.open || f.detected || f.holder != holder) continue;
    if (!group.empty() && !f.group.empty() && f.group != group) continue;
    f.detected = true;
    f.detected_at = now();
    Json j;
    j["fault"] = f.event.id;
    j["holder"] = holder;
    if (!group.empty()) j["group"] = group;
    j["index"] = index;
    trace_.emit(now(), "supervisor", "fault-detected", j);
  }
}

void Simulation::close_tile_faults(const std::string& holder, const std::string& group,
                                   const std::string& outcome, const std::string& reason,
                                   bool include_permanent,
                                   std::vector<std::pair<std::uint64_t, std::string>>* defer) {
  for (auto& f : faults_) {
    if (!f.open || f.holder != holder) continue;
    if (!group.empty() && !f.group.empty() && f.group != group) continue;
    if (!include_permanent && is_permanent(f.event.kind)) continue;
    if (f.sefi_active && !include_permanent) continue;
    if (defer) {
      f.open = false;
      defer->emplace_back(f.event.id, outcome);
    } else {
      close_fault(f.event.id, outcome, reason);
    }
  }
}

void Simulation::on_fault(const Payload& p) {
  auto& rec = faults_[p.n];
  const FaultEvent& ev = rec.event;
  rec.injected = true;
  ++stats_.injected;
  Json j;
  j["fault"] = ev.id;
  j["kind"] = to_string(ev.kind);
  if (!ev.tile.empty()) j["tile"] = ev.tile;
  if (!ev.thread.empty()) j["thread"] = ev.thread;
  if (!ev.flips.empty()) {
    Json w = Json::array();
    for (const auto& f : ev.flips) w.push_back(Json::array({f.word, f.mask}));
    j["words"] = w;
  }
  if (!ev.partition.empty()) {
    j["partition"] = ev.partition;
    j["cell"] = ev.cell;
  }
  if (ev.duration) j["duration"] = ev.duration;
  j["scripted"] = ev.scripted;
  trace_.emit(now(), "injector", "fault-injected", j);

  auto absorb = [&](const std::string& why) { close_fault(ev.id, "absorbed", why); };
  auto tile_it = ev.tile.empty() ? tiles_.end() : tiles_.find(ev.tile);

  switch (ev.kind) {
    case FaultKind::MainMemory:
      if (sc_.ecc) {
        absorb("ecc");
        return;
      }
      [[fallthrough]];
    case FaultKind::TransientState: {
      if (tile_it == tiles_.end() || !operational(tile_it->second)) {
        absorb("target inactive");
        return;
      }
      GroupRuntime* g = group_hosting_thread(ev.tile, ev.thread);
      if (!g || (g->phase != GroupRuntime::Phase::Running && g->phase != GroupRuntime::Phase::Checkpoint)) {
        absorb("thread not hosted");
        return;
      }
      catch_up(*g);
      corrupt_state(tile_it->second.threads.at(ev.thread), ev.flips);
      open_fault(ev.id, ev.tile, g->group.group_id);
      return;
    }
    case FaultKind::TransientValidationMemory: {
      if (tile_it == tiles_.end() || !operational(tile_it->second)) {
        absorb("target inactive");
        return;
      }
      for (auto& [gid, g] : groups_) {
        if (g.phase != GroupRuntime::Phase::Checkpoint || g.published || !g.ctx) continue;
        if (!g.ctx->find(ev.tile)) continue;
        g.pending_vmem_flips[ev.tile].push_back(ev.id);
        return;
      }
      absorb("stale entry");
      return;
    }
    case FaultKind::PermanentCell:
    case FaultKind::ConfigUpset: {
      if (ev.partition != kSharedRegionId && !fabric_.has_partition(ev.partition)) {
        absorb("unknown partition");
        return;
      }
      if (ev.kind == FaultKind::PermanentCell) fabric_.damage_cell(ev.partition, ev.cell);
      else fabric_.upset_config(ev.partition, ev.cell);
      if (ev.partition == kSharedRegionId) {
        if (!fabric_.self_test(kSharedRegionId)) {
          shared_damaged_ = true;
          open_fault(ev.id, kSharedRegionId, "");
        } else {
          absorb("latent");
        }
        return;
      }
      const auto& part = fabric_.partition(ev.partition);
      if (!part.hosted_tile || fabric_.self_test(ev.partition)) {
        absorb("latent");
        return;
      }
      Tile& t = tiles_.at(*part.hosted_tile);
      if (t.status == TileStatus::Defunct || repairs_.count(t.tile_id)) {
        absorb("host out of service");
        return;
      }
      open_fault(ev.id, t.tile_id, "");
      if (t.status == TileStatus::IdleSpare) {
        sup_.remove_spare(t.tile_id);
        detect_faults(t.tile_id, "", 0);
        Json st;
        st["tile"] = t.tile_id;
        st["partition"] = ev.partition;
        trace_.emit(now(), t.tile_id, "spare-self-test-failed", st);
        set_tile_status(t, TileStatus::Rebooting, "spare self-test failed");
        ++tile_epoch_[t.tile_id];
        start_repair(t.tile_id);
        return;
      }
      for (const auto& gid : groups_of(t.tile_id)) catch_up(groups_.at(gid));
      t.persistent_corruption = true;
      return;
    }
    case FaultKind::SefiTile: {
      if (tile_it == tiles_.end() || tile_it->second.status == TileStatus::Defunct) {
        absorb("target inactive");
        return;
      }
      Tile& t = tile_it->second;
      t.sefi_blocked = true;
      const SimTime until = now() + ev.duration;
      sefi_until_[t.tile_id] = std::max(sefi_until_[t.tile_id], until);
      rec.sefi_active = true;
      open_fault(ev.id, t.tile_id, "");
      schedule(until, EventKind::SefiEnd, {t.tile_id, ev.id, 0});
      return;
    }
    case FaultKind::SefiShared: {
      const SimTime until = now() + ev.duration;
      shared_sefi_until_ = std::max(shared_sefi_until_, until);
      rec.sefi_active = true;
      open_fault(ev.id, kSharedRegionId, "");
      schedule(until, EventKind::SefiEnd, {kSharedRegionId, ev.id, 0});
      return;
    }
  }
}

void Simulation::clear_sefi(const std::string& tile_id) {
  auto it = tiles_.find(tile_id);
  if (it != tiles_.end()) it->second.sefi_blocked = false;
  sefi_until_.erase(tile_id);
  for (auto& f : faults_)
    if (f.holder == tile_id && f.event.kind == FaultKind::SefiTile) f.sefi_active = false;
}

void Simulation::on_sefi_end(const Payload& p) {
  auto& rec = faults_[p.n];
  rec.sefi_active = false;
  if (p.target == kSharedRegionId) {
    if (shared_sefi_until_ <= now()) trace_.emit(now(), kSharedRegionId, "sefi-end", Json{{"fault", p.n}});
  } else {
    auto it = tiles_.find(p.target);
    if (it != tiles_.end() && sefi_until_[p.target] <= now() && it->second.sefi_blocked) {
      it->second.sefi_blocked = false;
      trace_.emit(now(), p.target, "sefi-end", Json{{"fault", p.n}});
    }
  }
  if (!rec.open) return;
  if (!rec.detected) {
    close_fault(p.n, "absorbed", "no checkpoint observed the interruption");
    return;
  }
  auto it = tiles_.find(p.target);
  if (it != tiles_.end() && !it->second.sefi_blocked &&
      (it->second.status == TileStatus::Active || it->second.status == TileStatus::IdleSpare))
    close_fault(p.n, "corrected", "interrupt cleared");
}

// ---------------------------------------------------------------- stage 1

void Simulation::catch_up(GroupRuntime& g) {
  if (g.phase != GroupRuntime::Phase::Running) return;
  const SimTime dt = now() - g.running_since;
  if (dt == 0) return;
  const auto specs = group_threads(g.group);
  for (const auto& m : g.group.members) {
    Tile& t = tiles_.at(m);
    if (t.status != TileStatus::Active) continue;
    for (const auto& spec : specs) {
      ThreadState& ts = t.threads.at(spec->thread_id);
      ts = execute_slice(std::move(ts), dt);
      if (t.persistent_corruption) {
        ts.state[0] ^= perturbation(t.tile_id, ts.cycle_counter);
        ts.corrupted = true;
      }
    }
  }
  g.running_since = now();
}

void Simulation::on_timer(const Payload& p) {
  auto it = groups_.find(p.target);
  if (it == groups_.end()) return;
  GroupRuntime& g = it->second;
  if (p.epoch != g.epoch || g.phase != GroupRuntime::Phase::Running) return;
  g.timer.reset();
  begin_checkpoint(g, Trigger::Timer);
}

void Simulation::begin_checkpoint(GroupRuntime& g, Trigger trigger) {
  if (g.timer) {
    queue_.cancel(*g.timer);
    g.timer.reset();
  }
  catch_up(g);
  CheckpointContext ctx = open_checkpoint(g.group, thread_groups_, trigger, now());
  ctx.slot = next_slot_++;
  g.expected.clear();
  g.updaters.clear();
  g.donor.clear();
  std::vector<std::string> participants;
  for (const auto& m : g.group.members) {
    Tile& t = tiles_.at(m);
    if (operational(t)) g.expected.push_back(m);
    if (start_checkpoint(ctx, t)) {
      compute_checksums(ctx, t, sc_.context_switch);
      participants.push_back(m);
    } else if (operational(t)) {
      Json j;
      j["tile"] = m;
      j["group"] = g.group.group_id;
      j["index"] = ctx.index;
      j["reason"] = "interface blocked";
      trace_.emit(now(), m, "checkpoint-missed", j);
    }
  }
  g.diverged_at_start.clear();
  for (const auto& th : ctx.scheduled_threads) {
    const ThreadState* ref = nullptr;
    for (const auto& m : participants) {
      const ThreadState& ts = tiles_.at(m).threads.at(th);
      if (!ref) {
        ref = &ts;
      } else if (ts.cycle_counter != ref->cycle_counter || ts.state != ref->state) {
        g.diverged_at_start.push_back(th);
        break;
      }
    }
  }
  Json j;
  j["group"] = g.group.group_id;
  j["index"] = ctx.index;
  j["trigger"] = to_string(trigger);
  j["scheduled"] = id_array(ctx.scheduled_threads);
  j["tiles"] = id_array(participants);
  trace_.emit(now(), g.group.group_id, "checkpoint-start", j);
  ++stats_.checkpoints;

  vote_group_outputs(g, participants);

  SimTime ready = now();
  for (const auto& tc : ctx.tiles) ready = std::max(ready, ctx.started_at + tc.duration);
  if (participants.empty()) ready = std::max(ready, ctx.deadline_at);
  g.ctx = std::move(ctx);
  g.reports.clear();
  g.published = false;
  g.phase = GroupRuntime::Phase::Checkpoint;
  schedule(ready, EventKind::CheckpointCompare, {g.group.group_id, 0, g.epoch});
}

void Simulation::vote_group_outputs(GroupRuntime& g, const std::vector<std::string>& participants) {
  for (const auto& spec : group_threads(g.group)) {
    if (!spec->emits_output) continue;
    std::vector<OutputRecord> recs;
    for (const auto& m : participants) {
      const Tile& t = tiles_.at(m);
      if (t.status != TileStatus::Active) continue;
      if (auto r = emit_output(t.threads.at(spec->thread_id))) recs.push_back(*r);
    }
    if (recs.empty()) continue;
    const bool voting = sc_.output_voting && recs.size() >= 3;
    const VoteResult vr = vote_outputs(recs, voting);
    const std::uint64_t propagated = voting ? 0 : vr.divergent;
    const std::uint64_t suppressed = voting ? (vr.voted ? vr.divergent : recs.size()) : 0;
    stats_.propagated_outputs += propagated;
    Json j;
    j["group"] = g.group.group_id;
    j["thread"] = spec->thread_id;
    j["cycle"] = recs.front().cycle_counter;
    j["replicas"] = recs.size();
    j["voting"] = voting;
    j["divergent"] = vr.divergent;
    j["propagated"] = propagated;
    j["suppressed"] = suppressed;
    j["no_majority"] = vr.no_majority;
    trace_.emit(now(), g.group.group_id, "output-vote", j);
  }
}

void Simulation::on_compare(const Payload& p) {
  auto it = groups_.find(p.target);
  if (it == groups_.end()) return;
  GroupRuntime& g = it->second;
  if (p.epoch != g.epoch || g.phase != GroupRuntime::Phase::Checkpoint || !g.ctx) return;
  CheckpointContext& ctx = *g.ctx;

  if (!g.published) {
    g.published = true;
    for (const auto& tc : std::vector<TileCheckpoint>(ctx.tiles)) {
      Tile& t = tiles_.at(tc.tile_id);
      if (!contains(g.group.members, t.tile_id)) continue;
      if (!publish_checksums(ctx, t)) {
        Json j;
        j["tile"] = t.tile_id;
        j["group"] = g.group.group_id;
        j["index"] = ctx.index;
        trace_.emit(now(), t.tile_id, "vmem-write-lost", j);
        continue;
      }
      auto fl = g.pending_vmem_flips.find(t.tile_id);
      if (fl == g.pending_vmem_flips.end()) continue;
      for (auto id : fl->second) {
        const auto& ev = faults_[id].event;
        if (ctx.scheduled_threads.empty()) {
          close_fault(id, "absorbed", "no checksum stored");
          continue;
        }
        const auto& th = ctx.scheduled_threads[ev.flips.front().word % ctx.scheduled_threads.size()];
        if (t.vmem.flip_checksum(th, ctx.slot, ev.flips.front().mask)) open_fault(id, t.tile_id, g.group.group_id);
        else close_fault(id, "absorbed", "no checksum stored");
      }
      g.pending_vmem_flips.erase(fl);
    }
    for (const auto& [tile, ids] : g.pending_vmem_flips)
      for (auto id : ids) close_fault(id, "absorbed", "checksum write lost");
    g.pending_vmem_flips.clear();
  }

  if (!shared_damaged_ && shared_sefi_until_ > now() && shared_sefi_until_ < ctx.deadline_at) {
    schedule(shared_sefi_until_, EventKind::CheckpointCompare, p);
    return;
  }

  TileGroup view = g.group;
  view.members.clear();
  for (const auto& m : g.expected)
    if (contains(g.group.members, m)) view.members.push_back(m);

  SimTime end = now();
  const bool blocked = shared_blocked();
  for (const auto& m : view.members) {
    Tile& t = tiles_.at(m);
    if (!ctx.find(m) || t.sefi_blocked) continue;
    CheckpointReport rep =
        compare_with_siblings(ctx, t, view, tiles_, blocked, now(), g.group.comparison_deadline);
    SimTime finish = rep.reported_at;
    if (rep.detected_mismatch()) {
      const SimTime spent = propagate_state(ctx, t, g.group, thread_groups_, sc_.context_switch);
      Json s;
      s["tile"] = m;
      s["group"] = g.group.group_id;
      s["index"] = ctx.index;
      s["threads"] = group_threads(g.group).size();
      s["cost"] = spent;
      trace_.emit(now(), m, "snapshot-written", s);
      finish = std::max(finish, now() + spent);
    }
    rep.duration = finish - ctx.started_at;
    Json j;
    j["tile"] = m;
    j["group"] = g.group.group_id;
    j["index"] = ctx.index;
    Json v = Json::array();
    for (const auto& [sib, verdict] : rep.verdicts) v.push_back(Json::array({sib, to_string(verdict)}));
    j["verdicts"] = v;
    j["duration"] = rep.duration;
    trace_.emit(rep.reported_at, m, "checkpoint-report", j);
    end = std::max(end, finish);
    g.reports.push_back(std::move(rep));
  }
  if (g.reports.empty()) end = std::max(end, ctx.deadline_at);
  schedule(end, EventKind::CheckpointIngest, p);
}

void Simulation::on_ingest(const Payload& p) {
  auto it = groups_.find(p.target);
  if (it == groups_.end()) return;
  GroupRuntime& g = it->second;
  if (p.epoch != g.epoch || g.phase != GroupRuntime::Phase::Checkpoint || !g.ctx) return;
  const std::uint64_t index = g.ctx->index;
  const std::string gid = g.group.group_id;

  std::vector<AgreementSignal> signals;
  for (const auto& r : g.reports) signals.push_back(to_signal(r));
  std::vector<std::string> expected;
  for (const auto& m : g.expected)
    if (contains(g.group.members, m)) expected.push_back(m);

  bool disturbed = false;
  std::vector<std::string> majority;
  if (signals.empty()) {
    if (!expected.empty()) {
      Json j;
      j["group"] = gid;
      j["index"] = index;
      trace_.emit(now(), gid, "checkpoint-silent", j);
    }
  } else {
    kick_watchdog(sup_, now());
    rekick_watchdog();
    bool all_miss = signals.size() >= 2;
    for (const auto& s : signals) {
      if (s.bits.empty()) all_miss = false;
      for (const auto& [sib, v] : s.bits) all_miss = all_miss && v == SiblingVerdict::DeadlineMiss;
    }
    if (all_miss) {
      Json j;
      j["group"] = gid;
      j["index"] = index;
      j["kind"] = "shared-region";
      trace_.emit(now(), "supervisor", "verdict", j);
      detect_faults(kSharedRegionId, "", index);
      start_full_reconfig("every sibling missed the deadline");
      return;
    }
    const GroupVerdict v = ingest_signals(expected, signals);
    Json j;
    j["group"] = gid;
    j["index"] = index;
    const bool pair_mode = v.kind == VerdictKind::Unresolvable && !g.group.correction_enabled;
    j["kind"] = pair_mode ? "unresolvable-pair" : to_string(v.kind);
    j["majority"] = id_array(v.majority);
    j["faulty"] = id_array(v.faulty);
    if (!v.donor.empty()) j["donor"] = v.donor;
    trace_.emit(now(), "supervisor", "verdict", j);
    for (const auto& r : g.reports)
      if (!r.all_agree()) disturbed = true;
    majority = v.majority;

    switch (v.kind) {
      case VerdictKind::AllAgree:
        if (!g.diverged_at_start.empty()) {
          ++stats_.masked_divergences;
          Json m;
          m["group"] = gid;
          m["index"] = index;
          m["threads"] = id_array(g.diverged_at_start);
          trace_.emit(now(), "oracle", "masked-divergence", m);
        }
        break;
      case VerdictKind::Faulty:
        g.donor = v.donor;
        for (const auto& f : v.faulty) handle_faulty_tile(g, f, v);
        break;
      case VerdictKind::Unresolvable:
        for (const auto& m : expected) detect_faults(m, gid, index);
        if (pair_mode) {
          for (const auto& m : expected) close_tile_faults(m, gid, "degraded", "detect-only group", false);
        } else {
          reboot_group(g, "unresolvable verdict");
          return;
        }
        break;
    }
  }
  if (g.phase != GroupRuntime::Phase::Checkpoint) return;

  restore_membership();

  SimTime resume_base = now();
  if (!g.joiners.empty() || !g.updaters.empty()) {
    disturbed = true;
    if (g.donor.empty()) {
      for (const auto& m : majority.empty() ? expected : majority) {
        const Tile& t = tiles_.at(m);
        if (t.status == TileStatus::Active && g.ctx->find(m)) {
          g.donor = m;
          break;
        }
      }
    }
    if (!g.donor.empty()) {
      Tile& d = tiles_.at(g.donor);
      if (!d.sefi_blocked) {
        bool missing = false;
        for (const auto& spec : group_threads(g.group))
          missing = missing || !d.vmem.snapshot(spec->thread_id, g.ctx->slot);
        if (missing) {
          const SimTime spent = propagate_state(*g.ctx, d, g.group, thread_groups_, sc_.context_switch);
          Json s;
          s["tile"] = d.tile_id;
          s["group"] = gid;
          s["index"] = index;
          s["threads"] = group_threads(g.group).size();
          s["cost"] = spent;
          s["requested"] = true;
          trace_.emit(now(), d.tile_id, "snapshot-written", s);
          resume_base = now() + spent;
        }
      }
    }
  }
  const SimTime resume = resume_base + (disturbed ? g.group.grace_period : 0);
  schedule(resume, EventKind::CheckpointResume, p);
}

void Simulation::handle_faulty_tile(GroupRuntime& g, const std::string& tile_id, const GroupVerdict&) {
  Tile& t = tiles_.at(tile_id);
  const std::uint64_t index = g.ctx->index;
  detect_faults(tile_id, g.group.group_id, index);
  const FaultDecision d = handle_fault(sup_, tile_id, index);
  Json j;
  j["tile"] = tile_id;
  j["count"] = d.lifetime_count;
  j["window_count"] = d.window_count;
  j["action"] = to_string(d.action);
  trace_.emit(now(), "supervisor", "fault-counter", j);

  switch (d.action) {
    case FaultAction::StateUpdate:
      if (t.status == TileStatus::Active) set_tile_status(t, TileStatus::Suspect, "disagreement");
      if (t.status == TileStatus::Suspect) {
        if (!contains(g.updaters, tile_id)) g.updaters.push_back(tile_id);
        command(tile_id, Command::StateUpdate, Json{{"group", g.group.group_id}, {"donor", g.donor}});
      }
      break;
    case FaultAction::ReplaceWithSpare:
      if (d.spare) {
        replace_tile(g, tile_id, *d.spare);
      } else {
        Json e;
        e["tile"] = tile_id;
        e["stage"] = 2;
        e["reason"] = "no spare available";
        trace_.emit(now(), "supervisor", "escalate", e);
        detach_tile(tile_id);
        if (t.status == TileStatus::Active) set_tile_status(t, TileStatus::Suspect, "disagreement");
        command(tile_id, Command::Halt, Json{{"reason", "stage 2 repair"}});
        set_tile_status(t, TileStatus::Rebooting, "halted for repair");
        start_repair(tile_id);
      }
      break;
    case FaultAction::MarkDefunct:
      mark_defunct(tile_id, "defunct threshold reached");
      start_repair(tile_id);
      break;
  }
}

void Simulation::replace_tile(GroupRuntime& g, const std::string& tile_id, const std::string& spare) {
  Tile& t = tiles_.at(tile_id);
  clear_sefi(tile_id);
  close_tile_faults(tile_id, "", "replaced", "replaced by spare " + spare, false, &g.pending_outcomes);
  detach_tile(tile_id);
  if (t.status == TileStatus::Active) set_tile_status(t, TileStatus::Suspect, "disagreement");
  command(tile_id, Command::Reboot, Json{{"group", g.group.group_id}, {"replaced_by", spare}});
  set_tile_status(t, TileStatus::Rebooting, "replaced");
  schedule_reboot(tile_id, false);
  activate_spare(g, spare);
}

void Simulation::activate_spare(GroupRuntime& g, const std::string& spare) {
  Tile& s = tiles_.at(spare);
  sup_.remove_spare(spare);
  command(spare, Command::ActivateWithMapping,
          Json{{"group", g.group.group_id}, {"thread_groups", id_array(g.group.thread_groups)}});
  set_tile_status(s, TileStatus::Updating, "activated");
  g.group.members.push_back(spare);
  sort_natural(g.group.members);
  s.hosted_groups.insert(g.group.group_id);
  s.pending_update.insert(g.group.group_id);
  if (!contains(g.joiners, spare)) g.joiners.push_back(spare);
}

void Simulation::restore_membership() {
  for (auto& [gid, g] : groups_) {
    if (g.phase != GroupRuntime::Phase::Running && g.phase != GroupRuntime::Phase::Checkpoint) continue;
    if (g.group.thread_groups.empty()) continue;
    bool added = false;
    while (g.group.members.size() < g.group.target_size) {
      auto spare = sup_.take_spare();
      if (!spare) break;
      activate_spare(g, *spare);
      added = true;
    }
    if (added && g.phase == GroupRuntime::Phase::Running) {
      command(g.group.members.front(), Command::Checkpoint, Json{{"group", gid}});
      begin_checkpoint(g, Trigger::Supervisor);
    }
  }
}

void Simulation::detach_tile(const std::string& tile_id) {
  Tile& t = tiles_.at(tile_id);
  for (auto& [gid, g] : groups_) {
    erase_id(g.group.members, tile_id);
    erase_id(g.joiners, tile_id);
    erase_id(g.updaters, tile_id);
    erase_id(g.expected, tile_id);
    if (g.donor == tile_id) g.donor.clear();
  }
  t.hosted_groups.clear();
  t.pending_update.clear();
}

void Simulation::schedule_reboot(const std::string& tile_id, bool after_repair) {
  const std::uint64_t e = ++tile_epoch_[tile_id];
  schedule(now() + sc_.reboot_duration, EventKind::TileRebootDone, {tile_id, after_repair ? 1u : 0u, e});
}

void Simulation::mark_defunct(const std::string& tile_id, const std::string& reason) {
  Tile& t = tiles_.at(tile_id);
  detach_tile(tile_id);
  sup_.remove_spare(tile_id);
  ++tile_epoch_[tile_id];
  set_tile_status(t, TileStatus::Defunct, reason);
  Json j;
  j["tile"] = tile_id;
  j["reason"] = reason;
  trace_.emit(now(), "supervisor", "defunct", j);
}

void Simulation::on_resume(const Payload& p) {
  auto it = groups_.find(p.target);
  if (it == groups_.end()) return;
  GroupRuntime& g = it->second;
  if (p.epoch != g.epoch || g.phase != GroupRuntime::Phase::Checkpoint || !g.ctx) return;
  const std::uint64_t index = g.ctx->index;
  const std::uint64_t slot = g.ctx->slot;
  const std::string gid = g.group.group_id;

  auto run_update = [&](const std::string& tile_id) -> bool {
    Tile& t = tiles_.at(tile_id);
    UpdateResult r;
    if (g.donor.empty() || !contains(g.group.members, g.donor)) {
      r.failure = "no donor";
    } else {
      const Tile& d = tiles_.at(g.donor);
      r = apply_update(t, d, g.group.thread_groups, thread_groups_, slot, sc_.context_switch);
      if (r.ok)
        for (const auto& th : r.updated_threads) t.threads.at(th).corrupted = d.threads.at(th).corrupted;
    }
    Json j;
    j["tile"] = tile_id;
    j["group"] = gid;
    j["index"] = index;
    j["donor"] = g.donor;
    if (r.ok) {
      j["threads"] = id_array(r.updated_threads);
      j["duration"] = r.duration;
      trace_.emit(now(), tile_id, "update", j);
    } else {
      j["failure"] = r.failure;
      trace_.emit(now(), tile_id, "update-failed", j);
    }
    return r.ok;
  };

  std::vector<std::string> escalate;
  for (const auto& u : std::vector<std::string>(g.updaters)) {
    if (!contains(g.group.members, u) || tiles_.at(u).status != TileStatus::Suspect) continue;
    if (run_update(u)) {
      set_tile_status(tiles_.at(u), TileStatus::Active, "state updated");
      close_tile_faults(u, gid, "corrected", "state update from " + g.donor, false);
    } else {
      escalate.push_back(u);
    }
  }
  g.updaters.clear();
  std::vector<std::string> still_joining;
  for (const auto& jn : g.joiners) {
    if (!contains(g.group.members, jn) || tiles_.at(jn).status != TileStatus::Updating) continue;
    if (run_update(jn)) {
      Tile& t = tiles_.at(jn);
      t.pending_update.erase(gid);
      set_tile_status(t, TileStatus::Active, "joined group " + gid);
    } else {
      still_joining.push_back(jn);
    }
  }
  g.joiners = still_joining;
  for (const auto& [id, outcome] : g.pending_outcomes) {
    faults_[id].open = true;
    close_fault(id, outcome, "group " + gid + " resumed");
  }
  g.pending_outcomes.clear();

  for (const auto& m : g.group.members) tiles_.at(m).vmem.prune(slot > 64 ? slot - 64 : 0);
  g.ctx.reset();
  g.phase = GroupRuntime::Phase::Running;
  g.running_since = now();
  Json j;
  j["group"] = gid;
  j["index"] = index;
  trace_.emit(now(), gid, "checkpoint-end", j);
  g.timer = schedule(now() + g.group.period(), EventKind::TimerCheckpoint, {gid, 0, g.epoch});

  for (const auto& u : escalate) {
    if (auto spare = sup_.take_spare()) {
      Json e;
      e["tile"] = u;
      e["reason"] = "update failed";
      trace_.emit(now(), "supervisor", "escalate", e);
      replace_tile(g, u, *spare);
    }
  }
  if (!escalate.empty()) restore_membership();
  if (stage3_pending_) request_stage3();
}

void Simulation::reboot_group(GroupRuntime& g, const std::string& reason) {
  const std::string gid = g.group.group_id;
  Json j;
  j["group"] = gid;
  j["reason"] = reason;
  j["members"] = id_array(g.group.members);
  trace_.emit(now(), "supervisor", "group-reboot", j);
  if (g.ctx) {
    Json a;
    a["group"] = gid;
    a["index"] = g.ctx->index;
    trace_.emit(now(), gid, "checkpoint-abort", a);
  }
  ++g.epoch;
  if (g.timer) queue_.cancel(*g.timer);
  g.timer.reset();
  g.ctx.reset();
  g.phase = GroupRuntime::Phase::Halted;
  g.joiners.clear();
  g.updaters.clear();
  for (const auto& m : g.group.members) {
    Tile& t = tiles_.at(m);
    if (t.status != TileStatus::Rebooting && t.status != TileStatus::Defunct && t.status != TileStatus::Booting)
      clear_sefi(m);
    close_tile_faults(m, "", "corrected", "group reboot", false, &g.pending_outcomes);
    command(m, Command::Reboot, Json{{"group", gid}});
    if (t.status == TileStatus::Rebooting || t.status == TileStatus::Defunct) continue;
    if (t.status == TileStatus::Booting) continue;
    set_tile_status(t, TileStatus::Rebooting, "group reboot");
    schedule_reboot(m, false);
  }
}

void Simulation::restart_group_if_ready(GroupRuntime& g) {
  if (g.phase != GroupRuntime::Phase::Halted) return;
  if (g.group.thread_groups.empty()) return;
  if (g.group.members.empty()) return;
  for (const auto& m : g.group.members) {
    const auto s = tiles_.at(m).status;
    if (s == TileStatus::Rebooting || s == TileStatus::Booting) return;
  }
  if (full_reconfig_active_) return;
  for (const auto& [id, outcome] : g.pending_outcomes) {
    faults_[id].open = true;
    close_fault(id, outcome, "group " + g.group.group_id + " restarted");
  }
  g.pending_outcomes.clear();
  g.phase = GroupRuntime::Phase::Running;
  g.running_since = now();
  Json j;
  j["group"] = g.group.group_id;
  j["members"] = id_array(g.group.members);
  trace_.emit(now(), g.group.group_id, "group-restart", j);
  begin_checkpoint(g, Trigger::Timer);
}

void Simulation::on_reboot_done(const Payload& p) {
  auto it = tiles_.find(p.target);
  if (it == tiles_.end()) return;
  if (p.epoch != tile_epoch_[p.target]) return;
  Tile& t = it->second;
  if (t.status != TileStatus::Rebooting) return;
  if (full_reconfig_active_) return;
  clear_sefi(t.tile_id);
  const auto assigned = groups_of(t.tile_id);
  const auto res = boot_tile(t, assigned, all_threads_, fabric_, now());
  Json b;
  b["tile"] = t.tile_id;
  b["outcome"] = res.outcome == BootOutcome::Activated ? "active"
                 : res.outcome == BootOutcome::IdleSpare ? "idle-spare"
                                                        : "boot-failed";
  trace_.emit(now(), t.tile_id, "boot", b);
  if (res.outcome == BootOutcome::BootFailed) {
    Json s;
    s["tile"] = t.tile_id;
    s["from"] = to_string(TileStatus::Rebooting);
    s["to"] = to_string(TileStatus::Booting);
    s["reason"] = "reboot";
    trace_.emit(now(), t.tile_id, "tile-status", s);
    mark_defunct(t.tile_id, "boot self-test failed");
    start_repair(t.tile_id);
    for (auto& [gid, g] : groups_) restart_group_if_ready(g);
    restore_membership();
    return;
  }
  Json s;
  s["tile"] = t.tile_id;
  s["from"] = to_string(TileStatus::Rebooting);
  s["to"] = to_string(t.status);
  s["reason"] = p.n ? "repaired" : "reboot";
  trace_.emit(now(), t.tile_id, "tile-status", s);
  if (res.outcome == BootOutcome::IdleSpare) {
    sup_.add_spare(t.tile_id);
    if (p.n) {
      sup_.reset_counter(t.tile_id);
      close_tile_faults(t.tile_id, "", "repaired", "stage 2 repair", true);
      Json r;
      r["tile"] = t.tile_id;
      r["counter"] = 0;
      trace_.emit(now(), "supervisor", "spare-returned", r);
    } else {
      Json r;
      r["tile"] = t.tile_id;
      trace_.emit(now(), "supervisor", "spare-returned", r);
    }
    restore_membership();
    if (stage3_pending_) request_stage3();
    return;
  }
  for (const auto& gid : assigned) restart_group_if_ready(groups_.at(gid));
}

// ---------------------------------------------------------------- stage 2

void Simulation::start_repair(const std::string& tile_id) {
  if (repairs_.count(tile_id)) return;
  Tile& t = tiles_.at(tile_id);
  repairs_.emplace(tile_id, RepairJob(tile_id, t.partition, fabric_.free_partitions(),
                                      fabric_.tile_variants().size()));
  Json j;
  j["tile"] = tile_id;
  j["partition"] = t.partition;
  trace_.emit(now(), "supervisor", "repair-start", j);
  next_repair_attempt(tile_id);
}

void Simulation::next_repair_attempt(const std::string& tile_id) {
  auto& job = repairs_.at(tile_id);
  auto attempt = job.next();
  Tile& t = tiles_.at(tile_id);
  if (!attempt) {
    Json j;
    j["tile"] = tile_id;
    j["attempts"] = job.attempts();
    Json ev = Json::object();
    std::vector<std::string> parts{t.partition};
    for (const auto& fp : fabric_.free_partitions())
      if (fp != t.partition) parts.push_back(fp);
    for (const auto& pid : parts) {
      Json cells = Json::array();
      for (auto c : fabric_.damaged_cells(pid)) cells.push_back(c);
      ev[pid] = cells;
    }
    j["evidence"] = ev;
    trace_.emit(now(), "supervisor", "repair-exhausted", j);
    repairs_.erase(tile_id);
    repair_attempt_.erase(tile_id);
    if (t.status != TileStatus::Defunct) mark_defunct(tile_id, "repair exhausted");
    request_stage3();
    return;
  }
  repair_attempt_[tile_id] = *attempt;
  Json j;
  j["tile"] = tile_id;
  j["partition"] = attempt->partition_id;
  j["variant"] = fabric_.variants_for(attempt->partition_id)[attempt->variant].variant_id;
  j["relocation"] = attempt->partition_id != t.partition;
  trace_.emit(now(), "fabric", "repair-attempt", j);
  schedule(now() + sc_.fabric.reconfig_duration, EventKind::ReconfigurationDone, {tile_id, 0, 0});
}

void Simulation::on_reconfig_done(const Payload& p) {
  if (p.target == kSharedRegionId) {
    full_reconfig_active_ = false;
    const bool ok = fabric_.full_reconfigure();
    shared_sefi_until_ = 0;
    shared_damaged_ = !fabric_.self_test(kSharedRegionId);
    Json j;
    j["ok"] = ok;
    j["variant"] = fabric_.shared_variants().empty()
                       ? std::string()
                       : fabric_.shared_variants()[fabric_.shared_region().active_variant].variant_id;
    j["halted_for"] = sc_.fabric.full_reconfig_duration;
    trace_.emit(now(), "fabric", "full-reconfig-end", j);
    if (!ok) {
      trace_.emit(now(), "fabric", "unrecoverable-system",
                  Json{{"reason", "every shared-region variant overlaps damage"}});
      stats_.loss_of_mission = true;
      trace_.emit(now(), "supervisor", "loss-of-mission", Json{{"reason", "unrecoverable-system"}});
      end_run("loss-of-mission");
      return;
    }
    close_tile_faults(kSharedRegionId, "", "repaired", "full reconfiguration", true);
    for (auto& [id, t] : tiles_) {
      close_tile_faults(id, "", "repaired", "full reconfiguration", false);
      if (t.status == TileStatus::Rebooting && !repairs_.count(id)) schedule_reboot(id, false);
    }
    return;
  }
  auto ait = repair_attempt_.find(p.target);
  if (ait == repair_attempt_.end() || !repairs_.count(p.target)) return;
  const auto attempt = ait->second;
  Tile& t = tiles_.at(p.target);
  const auto r = fabric_.partial_reconfigure(attempt.partition_id, attempt.variant, false);
  const auto v = fabric_.validate_partition(attempt.partition_id);
  Json j;
  j["tile"] = t.tile_id;
  j["partition"] = attempt.partition_id;
  j["variant"] = fabric_.variants_for(attempt.partition_id)[attempt.variant].variant_id;
  j["pass"] = r.success && v.pass;
  Json cells = Json::array();
  for (auto c : v.evidence) cells.push_back(c);
  j["evidence"] = cells;
  trace_.emit(now(), "fabric", "repair-validation", j);
  if (!(r.success && v.pass)) {
    next_repair_attempt(p.target);
    return;
  }
  if (attempt.partition_id != t.partition) {
    fabric_.bind(t.partition, std::nullopt);
    fabric_.bind(attempt.partition_id, t.tile_id);
    Json m;
    m["tile"] = t.tile_id;
    m["from"] = t.partition;
    m["to"] = attempt.partition_id;
    trace_.emit(now(), "fabric", "relocated", m);
    t.partition = attempt.partition_id;
  }
  repairs_.erase(p.target);
  repair_attempt_.erase(p.target);
  if (t.status == TileStatus::Defunct) set_tile_status(t, TileStatus::Rebooting, "repair validated");
  else if (t.status != TileStatus::Rebooting) set_tile_status(t, TileStatus::Rebooting, "repair validated");
  schedule_reboot(t.tile_id, true);
}

void Simulation::start_full_reconfig(const std::string& reason) {
  if (full_reconfig_active_) return;
  full_reconfig_active_ = true;
  Json j;
  j["reason"] = reason;
  j["duration"] = sc_.fabric.full_reconfig_duration;
  trace_.emit(now(), "fabric", "full-reconfig-start", j);
  for (auto& [gid, g] : groups_) {
    if (g.phase == GroupRuntime::Phase::Disbanded) continue;
    if (g.ctx) {
      Json a;
      a["group"] = gid;
      a["index"] = g.ctx->index;
      trace_.emit(now(), gid, "checkpoint-abort", a);
    }
    ++g.epoch;
    if (g.timer) queue_.cancel(*g.timer);
    g.timer.reset();
    g.ctx.reset();
    g.joiners.clear();
    g.updaters.clear();
    g.phase = GroupRuntime::Phase::Halted;
  }
  for (auto& [id, t] : tiles_) {
    if (t.status == TileStatus::Defunct || t.status == TileStatus::Booting || repairs_.count(id)) continue;
    if (t.status == TileStatus::IdleSpare) sup_.remove_spare(id);
    t.pending_update.clear();
    set_tile_status(t, TileStatus::Rebooting, "full reconfiguration");
    clear_sefi(id);
    ++tile_epoch_[id];
  }
  sup_.watchdog_hold_until = now() + sc_.fabric.full_reconfig_duration + sc_.reboot_duration;
  rekick_watchdog();
  schedule(now() + sc_.fabric.full_reconfig_duration, EventKind::ReconfigurationDone, {kSharedRegionId, 0, 0});
}

// ---------------------------------------------------------------- watchdog

void Simulation::on_watchdog(const Payload&) {
  watchdog_.reset();
  if (!watchdog_tick(sup_, now())) {
    rekick_watchdog();
    return;
  }
  full_reset("watchdog expired");
}

void Simulation::full_reset(const std::string& reason) {
  Json j;
  j["reason"] = reason;
  j["last_kick"] = sup_.watchdog_last_kick;
  trace_.emit(now(), "supervisor", "watchdog-reset", j);
  for (auto& [gid, g] : groups_) {
    if (g.phase == GroupRuntime::Phase::Disbanded) continue;
    if (g.ctx) {
      Json a;
      a["group"] = gid;
      a["index"] = g.ctx->index;
      trace_.emit(now(), gid, "checkpoint-abort", a);
    }
    ++g.epoch;
    if (g.timer) queue_.cancel(*g.timer);
    g.timer.reset();
    g.ctx.reset();
    g.joiners.clear();
    g.updaters.clear();
    g.phase = GroupRuntime::Phase::Halted;
  }
  for (auto& [id, t] : tiles_) {
    if (t.status == TileStatus::Defunct || t.status == TileStatus::Booting || repairs_.count(id)) continue;
    if (t.status == TileStatus::IdleSpare) sup_.remove_spare(id);
    t.pending_update.clear();
    clear_sefi(id);
    close_tile_faults(id, "", "corrected", "system reset", false);
    command(id, Command::Reboot, Json{{"reason", reason}});
    if (t.status != TileStatus::Rebooting) set_tile_status(t, TileStatus::Rebooting, "system reset");
    schedule_reboot(id, false);
  }
  kick_watchdog(sup_, now());
  rekick_watchdog();
}

// ---------------------------------------------------------------- stage 3

void Simulation::request_stage3() {
  stage3_pending_ = true;
  for (const auto& [gid, g] : groups_)
    if (g.phase == GroupRuntime::Phase::Checkpoint) return;  // retried at the next resume
  schedule(now(), EventKind::SupervisorCommand, {"stage3", 0, 0});
}

void Simulation::on_supervisor_command(const Payload& p) {
  if (p.target != "stage3" || !stage3_pending_) return;
  for (const auto& [gid, g] : groups_)
    if (g.phase == GroupRuntime::Phase::Checkpoint) return;
  stage3_pending_ = false;
  apply_stage3();
}

void Simulation::disband(GroupRuntime& g) {
  const std::string gid = g.group.group_id;
  for (const auto& m : g.group.members) tiles_.at(m).hosted_groups.erase(gid);
  ++g.epoch;
  if (g.timer) queue_.cancel(*g.timer);
  g.timer.reset();
  g.ctx.reset();
  g.phase = GroupRuntime::Phase::Disbanded;
  Json j;
  j["group"] = gid;
  trace_.emit(now(), "supervisor", "group-disbanded", j);
}

void Simulation::apply_stage3() {
  std::vector<std::string> healthy;
  for (const auto& [id, t] : tiles_) {
    if (repairs_.count(id)) continue;
    if (t.status == TileStatus::Active || t.status == TileStatus::Suspect ||
        t.status == TileStatus::Updating || t.status == TileStatus::IdleSpare)
      healthy.push_back(id);
  }
  sort_natural(healthy);

  CapacityModel model;
  for (const auto& id : healthy) model.tile_capacity[id] = tiles_.at(id).capacity;
  for (const auto& [gid, g] : groups_) {
    if (g.phase == GroupRuntime::Phase::Disbanded) continue;
    for (const auto& tg_id : g.group.thread_groups) {
      const ThreadGroup& tg = thread_groups_.at(tg_id);
      GroupDemand d;
      d.tg_id = tg_id;
      d.criticality = tg.criticality();
      SimTime ckpt = 0;
      for (const auto& spec : tg.threads) {
        d.work += spec->load;
        ckpt += spec->costs.checksum + sc_.context_switch;
      }
      d.checkpoint = 100.0 * static_cast<double>(ckpt) / static_cast<double>(std::max<SimTime>(1, g.group.base_period));
      for (const auto& m : g.group.members)
        if (contains(healthy, m)) d.current_tiles.push_back(m);
      d.desired_replicas = g.group.target_size;
      model.groups.push_back(std::move(d));
    }
  }
  const AssignmentPlan plan = reallocate(model, sc_.policy);
  std::string why;
  const bool dominance = priority_dominance_holds(plan, model, sc_.policy, &why);

  Json pj;
  Json arr = Json::array();
  for (const auto& gp : plan.groups) {
    Json e;
    e["thread_group"] = gp.tg_id;
    e["criticality"] = gp.criticality;
    e["tiles"] = id_array(gp.tiles);
    e["period_factor"] = gp.period_factor;
    Json lv = Json::array();
    for (auto l : gp.levers) lv.push_back(to_string(l));
    e["levers"] = lv;
    e["deactivated"] = gp.deactivated;
    e["detect_only"] = gp.detect_only();
    e["loss_of_capability"] = gp.loss_of_capability;
    arr.push_back(e);
  }
  pj["groups"] = arr;
  pj["healthy_tiles"] = id_array(healthy);
  pj["priority_dominance"] = dominance;
  if (!dominance) pj["violation"] = why;
  trace_.emit(now(), "supervisor", "stage3-plan", pj);

  for (auto& [gid, g] : groups_) catch_up(g);

  auto find_host = [&](const std::string& tg_id) -> GroupRuntime* {
    for (auto& [gid, g] : groups_)
      if (g.phase != GroupRuntime::Phase::Disbanded && contains(g.group.thread_groups, tg_id)) return &g;
    return nullptr;
  };

  std::set<std::string> claimed;
  std::vector<std::string> fresh;
  for (const auto& gp : plan.groups) {
    GroupRuntime* src = find_host(gp.tg_id);
    if (!src) continue;
    const std::string sid = src->group.group_id;
    if (gp.deactivated) {
      erase_id(src->group.thread_groups, gp.tg_id);
      trace_.emit(now(), "supervisor", "degradation",
                  Json{{"thread_group", gp.tg_id}, {"group", sid}, {"lever", to_string(Lever::Deactivate)}});
      if (src->group.thread_groups.empty()) disband(*src);
      continue;
    }
    std::vector<std::string> target = gp.tiles;
    sort_natural(target);
    std::vector<std::string> current;
    for (const auto& m : src->group.members)
      if (contains(healthy, m)) current.push_back(m);
    const bool subset = std::all_of(target.begin(), target.end(), [&](const std::string& t) { return contains(current, t); });
    GroupRuntime* dest = nullptr;
    if (!claimed.count(sid) && subset) {
      for (const auto& m : src->group.members)
        if (!contains(target, m)) tiles_.at(m).hosted_groups.erase(sid);
      src->group.members = target;
      claimed.insert(sid);
      dest = src;
    } else {
      for (auto& [hid, h] : groups_)
        if (hid != sid && h.phase != GroupRuntime::Phase::Disbanded && h.group.members == target) dest = &h;
      if (!dest) {
        GroupRuntime n;
        n.group.group_id = sid + "." + gp.tg_id;
        n.group.members = target;
        n.group.base_period = src->group.base_period;
        n.group.comparison_deadline = src->group.comparison_deadline;
        n.group.grace_period = src->group.grace_period;
        n.phase = GroupRuntime::Phase::Running;
        n.running_since = now();
        const std::string nid = n.group.group_id;
        groups_.emplace(nid, std::move(n));
        dest = &groups_.at(nid);
        fresh.push_back(nid);
      }
      claimed.insert(dest->group.group_id);
      const auto mr = migrate_thread_group(gp.tg_id, src->group, dest->group, tiles_, thread_groups_, next_slot_++);
      Json mj;
      mj["thread_group"] = gp.tg_id;
      mj["from"] = sid;
      mj["to"] = dest->group.group_id;
      mj["tiles"] = id_array(target);
      if (mr.donor) mj["donor"] = *mr.donor;
      mj["updated"] = id_array(mr.updated_tiles);
      trace_.emit(now(), "supervisor", "migration", mj);
      if (mr.restarted)
        trace_.emit(now(), "supervisor", "restart", Json{{"thread_group", gp.tg_id}, {"group", dest->group.group_id}});
      for (const auto& m : target) {
        Tile& t = tiles_.at(m);
        if (t.status == TileStatus::IdleSpare) {
          sup_.remove_spare(m);
          command(m, Command::ActivateWithMapping, Json{{"group", dest->group.group_id}});
          set_tile_status(t, TileStatus::Updating, "stage 3 mapping");
          set_tile_status(t, TileStatus::Active, "stage 3 mapping");
        }
      }
      for (const auto& m : mr.timer_adjusted) {
        Json tj;
        tj["tile"] = m;
        tj["group"] = dest->group.group_id;
        tj["period"] = dest->group.period();
        trace_.emit(now(), m, "timer-adjust", tj);
      }
      if (src->group.thread_groups.empty()) disband(*src);
    }
    if (dest->group.period_factor != gp.period_factor) {
      dest->group.period_factor = gp.period_factor;
      for (const auto& m : dest->group.members) {
        Json tj;
        tj["tile"] = m;
        tj["group"] = dest->group.group_id;
        tj["period"] = dest->group.period();
        trace_.emit(now(), m, "timer-adjust", tj);
      }
    }
    dest->group.target_size = target.size();
    dest->group.correction_enabled = target.size() >= 3;
    for (auto l : gp.levers)
      trace_.emit(now(), "supervisor", "degradation",
                  Json{{"thread_group", gp.tg_id}, {"group", dest->group.group_id}, {"lever", to_string(l)}});
    if (gp.detect_only())
      trace_.emit(now(), "supervisor", "degradation",
                  Json{{"thread_group", gp.tg_id}, {"group", dest->group.group_id}, {"mode", "detect-only"},
                       {"tiles", id_array(target)}});
    if (gp.loss_of_capability) {
      trace_.emit(now(), "supervisor", "loss-of-capability",
                  Json{{"thread_group", gp.tg_id}, {"criticality", gp.criticality}});
      if (gp.criticality >= sc_.policy.high_threshold) stats_.loss_of_mission = true;
    }
  }
  for (auto& [id, t] : tiles_)
    if (t.status == TileStatus::Defunct) close_tile_faults(id, "", "degraded", "stage 3 reallocation", true);
  for (const auto& nid : fresh) begin_checkpoint(groups_.at(nid), Trigger::Supervisor);
  if (stats_.loss_of_mission) {
    trace_.emit(now(), "supervisor", "loss-of-mission", Json{{"reason", "loss-of-capability"}});
    end_run("loss-of-mission");
  }
}

// ---------------------------------------------------------------- end

void Simulation::on_horizon() { end_run(opt_.until && *opt_.until < sc_.horizon ? "until" : "horizon"); }

void Simulation::end_run(const std::string& reason) {
  if (finished_) return;
  refresh_availability();
  for (auto& f : faults_)
    if (f.injected && f.outcome.empty())
      close_fault(f.event.id, "undetected", f.detected ? "unresolved at end of run" : "open at end of run");
  Json j;
  j["reason"] = reason;
  j["loss_of_mission"] = stats_.loss_of_mission;
  j["injected"] = stats_.injected;
  trace_.emit(now(), "sim", "run-end", j);
  finished_ = true;
}

RunResult run_scenario(const Scenario& scenario, RunOptions options) {
  options.keep_trace = true;
  Simulation sim(scenario, options);
  sim.run();
  RunResult r;
  r.trace = sim.trace().records();
  r.metrics = compute_metrics(r.trace);
  r.stats = sim.stats();
  return r;
}

}  // namespace ftsim
