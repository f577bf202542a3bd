// SPDX-License-Identifier: Apache-2.0
#include "ftsim/lockstep.hpp"

#include <algorithm>

#include "ftsim/ids.hpp"

namespace ftsim {

const char* to_string(Trigger t) { return t == Trigger::Timer ? "timer" : "supervisor"; }

const char* to_string(SiblingVerdict v) {
  switch (v) {
    case SiblingVerdict::Agree: return "agree";
    case SiblingVerdict::Disagree: return "disagree";
    case SiblingVerdict::DeadlineMiss: return "deadline-miss";
  }
  return "?";
}

bool CheckpointReport::all_agree() const {
  return std::all_of(verdicts.begin(), verdicts.end(),
                     [](const auto& v) { return v.second == SiblingVerdict::Agree; });
}

bool CheckpointReport::detected_mismatch() const {
  return std::any_of(verdicts.begin(), verdicts.end(),
                     [](const auto& v) { return v.second == SiblingVerdict::Disagree; });
}

TileCheckpoint* CheckpointContext::find(const std::string& tile_id) {
  for (auto& t : tiles)
    if (t.tile_id == tile_id) return &t;
  return nullptr;
}

const TileCheckpoint* CheckpointContext::find(const std::string& tile_id) const {
  return const_cast<CheckpointContext*>(this)->find(tile_id);
}

namespace {

template <class Fn>
void for_each_thread(const TileGroup& group, const ThreadGroupMap& thread_groups, Fn&& fn) {
  for (const auto& tg_id : group.thread_groups) {
    auto it = thread_groups.find(tg_id);
    if (it == thread_groups.end()) continue;
    for (const auto& spec : it->second.threads) fn(it->second, spec);
  }
}

}  // namespace

CheckpointContext open_checkpoint(TileGroup& group, const ThreadGroupMap& thread_groups,
                                  Trigger trigger, SimTime now) {
  CheckpointContext ctx;
  ctx.group_id = group.group_id;
  ctx.index = group.checkpoint_index++;
  ctx.slot = ctx.index;
  ctx.trigger = trigger;
  ctx.started_at = now;
  ctx.deadline_at = now + group.comparison_deadline;
  SimTime delay = 0;
  for_each_thread(group, thread_groups, [&](const ThreadGroup& tg, const ThreadSpecPtr& spec) {
    ctx.all_threads.push_back(spec->thread_id);
    if (ctx.index % tg.divisor(spec->thread_id) == 0) {
      ctx.scheduled_threads.push_back(spec->thread_id);
      delay = std::max(delay, spec->costs.viable_delay);
    }
  });
  ctx.delay = std::min(delay, group.comparison_deadline);
  return ctx;
}

bool start_checkpoint(CheckpointContext& ctx, const Tile& tile) {
  if (tile.sefi_blocked) return false;
  if (tile.status != TileStatus::Active && tile.status != TileStatus::Suspect) return false;
  if (ctx.find(tile.tile_id)) return true;
  TileCheckpoint tc;
  tc.tile_id = tile.tile_id;
  tc.duration = ctx.delay;
  ctx.tiles.push_back(std::move(tc));
  return true;
}

SimTime compute_checksums(CheckpointContext& ctx, const Tile& tile, SimTime context_switch) {
  TileCheckpoint* tc = ctx.find(tile.tile_id);
  if (!tc) throw std::logic_error("compute_checksums: checkpoint not started on " + tile.tile_id);
  SimTime spent = 0;
  tc->checksums.clear();
  for (const auto& thread_id : ctx.scheduled_threads) {
    const ThreadState& ts = tile.threads.at(thread_id);
    tc->checksums.emplace_back(thread_id, checksum_callback(ts));
    spent += ts.spec->costs.checksum + context_switch;
  }
  tc->duration += spent;
  return spent;
}

bool publish_checksums(CheckpointContext& ctx, Tile& tile) {
  TileCheckpoint* tc = ctx.find(tile.tile_id);
  if (!tc) return false;
  if (tile.sefi_blocked) return false;
  tile.vmem.begin_checkpoint(tile.tile_id, ctx.slot, tc->checksums.size());
  for (const auto& [thread_id, sum] : tc->checksums) {
    if (!write_validation(tile, tile.tile_id, thread_id, ctx.slot, sum)) return false;
  }
  tc->published = true;
  return true;
}

CheckpointReport compare_with_siblings(const CheckpointContext& ctx, const Tile& self,
                                       const TileGroup& group, const TileMap& tiles,
                                       bool shared_blocked, SimTime now,
                                       SimTime comparison_deadline) {
  CheckpointReport rep;
  rep.tile_id = self.tile_id;
  rep.checkpoint_index = ctx.index;
  rep.reported_at = now;

  const TileCheckpoint* own = ctx.find(self.tile_id);
  std::vector<std::string> waiting;
  bool stopped = false;
  // start with the member after self so that, with one faulty tile, every
  // pair of healthy tiles is compared directly by one side
  std::vector<std::string> order;
  const auto self_at = std::find(group.members.begin(), group.members.end(), self.tile_id);
  if (self_at != group.members.end()) {
    order.insert(order.end(), std::next(self_at), group.members.end());
    order.insert(order.end(), group.members.begin(), self_at);
  } else {
    order = group.members;
  }
  for (const auto& sib_id : order) {
    auto it = tiles.find(sib_id);
    const bool ready = !shared_blocked && it != tiles.end() && it->second.vmem.ready(ctx.slot);
    if (!ready) {
      waiting.push_back(sib_id);
      continue;
    }
    bool match = own != nullptr;
    if (own) {
      for (const auto& [thread_id, sum] : own->checksums) {
        auto theirs = it->second.vmem.checksum(thread_id, ctx.slot);
        if (!theirs || *theirs != sum) {
          match = false;
          break;
        }
      }
    }
    rep.verdicts.emplace_back(sib_id, match ? SiblingVerdict::Agree : SiblingVerdict::Disagree);
    if (!match) {
      stopped = true;
      break;
    }
  }
  if (!stopped && !waiting.empty()) {
    // keep polling until the deadline, then give up on the first laggard
    rep.verdicts.emplace_back(waiting.front(), SiblingVerdict::DeadlineMiss);
    rep.reported_at = std::max(now, ctx.started_at + comparison_deadline);
  }
  rep.duration = rep.reported_at - ctx.started_at;
  return rep;
}

SimTime propagate_state(CheckpointContext& ctx, Tile& tile, const TileGroup& group,
                        const ThreadGroupMap& thread_groups, SimTime context_switch) {
  TileCheckpoint* tc = ctx.find(tile.tile_id);
  SimTime spent = 0;
  if (tile.sefi_blocked) return 0;
  for_each_thread(group, thread_groups, [&](const ThreadGroup&, const ThreadSpecPtr& spec) {
    const ThreadState& ts = tile.threads.at(spec->thread_id);
    if (tile.vmem.snapshot(spec->thread_id, ctx.slot)) return;
    tile.vmem.write_snapshot(tile.tile_id, ctx.slot, sync_callback(ts));
    // state already exposed in validation memory: callback omitted
    if (!spec->state_in_vmem) spent += spec->costs.sync + context_switch;
  });
  if (tc) {
    tc->snapshots_written = true;
    tc->duration += spent;
  }
  return spent;
}

UpdateResult apply_update(Tile& updating, const Tile& donor,
                          const std::vector<std::string>& thread_group_ids,
                          const ThreadGroupMap& thread_groups, std::uint64_t index,
                          SimTime context_switch) {
  UpdateResult r;
  if (donor.sefi_blocked) {
    r.failure = "donor " + donor.tile_id + " unreachable";
    return r;
  }
  if (updating.sefi_blocked) {
    r.failure = "tile " + updating.tile_id + " interface blocked";
    return r;
  }
  std::vector<std::pair<std::string, const StateSnapshot*>> snaps;
  for (const auto& tg_id : thread_group_ids) {
    const auto& tg = thread_groups.at(tg_id);
    for (const auto& spec : tg.threads) {
      const StateSnapshot* s = donor.vmem.snapshot(spec->thread_id, index);
      if (!s) {
        r.failure = "donor " + donor.tile_id + " has no snapshot of " + spec->thread_id;
        return r;
      }
      // the snapshot is written after the checksum; reject it if it no
      // longer matches what the donor published
      if (auto published = donor.vmem.checksum(spec->thread_id, index)) {
        ThreadState probe = update_callback(updating.threads.at(spec->thread_id), *s);
        if (checksum_callback(probe) != *published) {
          r.failure = "snapshot of " + spec->thread_id + " on " + donor.tile_id + " fails its checksum";
          return r;
        }
      }
      snaps.emplace_back(spec->thread_id, s);
    }
  }
  for (const auto& [thread_id, snap] : snaps) {
    ThreadState& ts = updating.threads.at(thread_id);
    ts = update_callback(std::move(ts), *snap);
    r.duration += ts.spec->costs.update + context_switch;
    r.updated_threads.push_back(thread_id);
  }
  r.ok = true;
  return r;
}

ResumePlan apply_update_and_resume(const TileGroup& group, TileMap& tiles,
                                   const std::vector<std::string>& updating_tiles,
                                   const std::string& donor, const ThreadGroupMap& thread_groups,
                                   std::uint64_t index, SimTime checkpoint_end,
                                   bool disagreement, SimTime context_switch) {
  ResumePlan plan;
  plan.resume_at = checkpoint_end + ((disagreement || !updating_tiles.empty()) ? group.grace_period : 0);
  const Tile& donor_tile = tiles.at(donor);
  for (const auto& id : updating_tiles) {
    Tile& t = tiles.at(id);
    plan.updates.emplace_back(
        id, apply_update(t, donor_tile, group.thread_groups, thread_groups, index, context_switch));
  }
  return plan;
}

VoteResult vote_outputs(const std::vector<OutputRecord>& replicas, bool voting_enabled) {
  VoteResult r;
  if (replicas.empty()) return r;
  std::map<OutputRecord, std::size_t> classes;
  for (const auto& rec : replicas) ++classes[rec];
  std::size_t best = 0, ties = 0;
  const OutputRecord* best_rec = nullptr;
  for (const auto& [rec, n] : classes) {
    if (n > best) {
      best = n;
      ties = 1;
      best_rec = &rec;
    } else if (n == best) {
      ++ties;
    }
  }
  const std::size_t need = (replicas.size() + 1) / 2;
  const bool majority = ties == 1 && best >= need && (classes.size() == 1 || replicas.size() > 2);
  r.divergent = replicas.size() - best;
  if (!voting_enabled) {
    r.released = replicas;
    if (majority) r.voted = *best_rec;
    r.no_majority = !majority;
    return r;
  }
  if (majority) {
    r.voted = *best_rec;
    r.released.push_back(*best_rec);
  } else {
    r.no_majority = true;
  }
  return r;
}

SimTime analytic_checkpoint_time(const TileGroup& group, const ThreadGroupMap& thread_groups,
                                 std::uint64_t index, SimTime context_switch) {
  SimTime delay = 0, cost = 0;
  for_each_thread(group, thread_groups, [&](const ThreadGroup& tg, const ThreadSpecPtr& spec) {
    if (index % tg.divisor(spec->thread_id) != 0) return;
    delay = std::max(delay, spec->costs.viable_delay);
    cost += spec->costs.checksum + context_switch;
  });
  return std::min(delay, group.comparison_deadline) + cost;
}

}  // namespace ftsim
