// SPDX-License-Identifier: Apache-2.0
#include "ftsim/tile.hpp"

#include <algorithm>
#include <limits>

namespace ftsim {

const char* to_string(TileStatus s) {
  switch (s) {
    case TileStatus::Booting: return "Booting";
    case TileStatus::Active: return "Active";
    case TileStatus::IdleSpare: return "Idle-Spare";
    case TileStatus::Updating: return "Updating";
    case TileStatus::Suspect: return "Suspect";
    case TileStatus::Rebooting: return "Rebooting";
    case TileStatus::Defunct: return "Defunct";
  }
  return "?";
}

bool transition_allowed(TileStatus from, TileStatus to) {
  using S = TileStatus;
  if (from == to) return true;
  if (to == S::Defunct) return true;  // supervisor decision only; callers enforce
  switch (from) {
    case S::Booting: return to == S::Active || to == S::IdleSpare;
    case S::Active: return to == S::Suspect || to == S::Rebooting;
    case S::Suspect: return to == S::Active || to == S::Rebooting;
    case S::Rebooting: return to == S::Booting;
    case S::IdleSpare: return to == S::Updating || to == S::Rebooting;
    // a full-system reset may catch a tile mid-activation
    case S::Updating: return to == S::Active || to == S::Rebooting;
    // only after Stage 2 validated a repair
    case S::Defunct: return to == S::Rebooting;
  }
  return false;
}

void set_status(Tile& tile, TileStatus to) {
  if (!transition_allowed(tile.status, to)) {
    throw std::logic_error("tile " + tile.tile_id + ": illegal transition " +
                           to_string(tile.status) + " -> " + to_string(to));
  }
  tile.status = to;
}

void ValidationMemory::check_owner(const std::string& actor) const {
  if (actor != owner_) {
    throw VmemAccessError("validation memory of " + owner_ + " written by " + actor);
  }
}

void ValidationMemory::begin_checkpoint(const std::string& actor, std::uint64_t index,
                                        std::size_t expected) {
  check_owner(actor);
  expected_[index] = expected;
  written_[index] = 0;
  ready_.erase(index);
  if (expected == 0) ready_.insert(index);
  ++mutations_;
}

void ValidationMemory::write_checksum(const std::string& actor, const std::string& thread_id,
                                      std::uint64_t index, std::uint64_t checksum) {
  check_owner(actor);
  auto [it, fresh] = entries_.try_emplace({thread_id, index});
  it->second.checksum = checksum;
  ++mutations_;
  if (fresh) {
    const std::size_t n = ++written_[index];
    auto e = expected_.find(index);
    if (e != expected_.end() && n >= e->second) ready_.insert(index);
  }
}

void ValidationMemory::write_snapshot(const std::string& actor, std::uint64_t index,
                                      StateSnapshot snap) {
  check_owner(actor);
  auto& entry = entries_[{snap.thread_id, index}];
  entry.snapshot = std::move(snap);
  ++mutations_;
}

bool ValidationMemory::flip_checksum(const std::string& thread_id, std::uint64_t index,
                                     std::uint64_t mask) {
  auto it = entries_.find({thread_id, index});
  if (it == entries_.end()) return false;
  it->second.checksum ^= mask;
  return true;
}

std::optional<std::uint64_t> ValidationMemory::checksum(const std::string& thread_id,
                                                        std::uint64_t index) const {
  auto it = entries_.find({thread_id, index});
  if (it == entries_.end()) return std::nullopt;
  return it->second.checksum;
}

const StateSnapshot* ValidationMemory::snapshot(const std::string& thread_id,
                                                std::uint64_t index) const {
  auto it = entries_.find({thread_id, index});
  if (it == entries_.end() || !it->second.snapshot) return nullptr;
  return &*it->second.snapshot;
}

std::optional<std::uint64_t> ValidationMemory::latest_index() const {
  if (expected_.empty()) return std::nullopt;
  return expected_.rbegin()->first;
}

void ValidationMemory::prune(std::uint64_t keep_from) {
  for (auto it = entries_.begin(); it != entries_.end();) {
    it = it->first.second < keep_from ? entries_.erase(it) : std::next(it);
  }
  expected_.erase(expected_.begin(), expected_.lower_bound(keep_from));
  written_.erase(written_.begin(), written_.lower_bound(keep_from));
  ready_.erase(ready_.begin(), ready_.lower_bound(keep_from));
}

void ValidationMemory::clear() {
  entries_.clear();
  expected_.clear();
  written_.clear();
  ready_.clear();
}

unsigned ThreadGroup::criticality() const {
  unsigned c = 0;
  for (const auto& t : threads) c = std::max(c, t->criticality);
  return c;
}

unsigned ThreadGroup::divisor(const std::string& thread_id) const {
  auto it = check_divisor.find(thread_id);
  return it == check_divisor.end() ? 1u : std::max(1u, it->second);
}

SimTime combine_base_period(const std::vector<const ThreadGroup*>& groups) {
  SimTime base = std::numeric_limits<SimTime>::max();
  for (const auto* g : groups)
    for (const auto& t : g->threads) base = std::min(base, t->desired_checkpoint_period);
  return base == std::numeric_limits<SimTime>::max() ? 0 : base;
}

void assign_divisors(ThreadGroup& group, SimTime base_period) {
  for (const auto& t : group.threads) {
    const SimTime d = base_period == 0 ? 1 : t->desired_checkpoint_period / base_period;
    group.check_divisor[t->thread_id] = static_cast<unsigned>(std::max<SimTime>(1, d));
  }
}

BootResult boot_tile(Tile& tile, const std::vector<std::string>& assigned_groups,
                     const std::vector<ThreadSpecPtr>& all_threads, const Fabric& fabric,
                     SimTime now) {
  if (tile.status != TileStatus::Booting && tile.status != TileStatus::Rebooting) {
    throw std::logic_error("boot_tile: tile " + tile.tile_id + " is " + to_string(tile.status));
  }
  if (tile.status == TileStatus::Rebooting) set_status(tile, TileStatus::Booting);

  BootResult r;
  if (!fabric.self_test(tile.partition)) {
    r.outcome = BootOutcome::BootFailed;
    return r;
  }
  tile.threads.clear();
  for (const auto& spec : all_threads) {
    tile.threads.emplace(spec->thread_id, init_thread(spec, tile.tile_id));
  }
  tile.vmem.clear();
  tile.pending_update.clear();
  tile.persistent_corruption = false;
  tile.hosted_groups = {assigned_groups.begin(), assigned_groups.end()};
  if (assigned_groups.empty()) {
    set_status(tile, TileStatus::IdleSpare);
    r.outcome = BootOutcome::IdleSpare;
  } else {
    set_status(tile, TileStatus::Active);
    r.outcome = BootOutcome::Activated;
    r.first_checkpoint = now;
  }
  return r;
}

SchedulerAction scheduler_step(const Tile& tile, bool has_active_group) {
  if (!tile.pending_update.empty() || tile.status == TileStatus::Updating)
    return SchedulerAction::PerformUpdate;
  if (!has_active_group || tile.hosted_groups.empty() || tile.status == TileStatus::Suspect)
    return SchedulerAction::SleepUntilCheckpoint;
  return SchedulerAction::RunThreads;
}

bool write_validation(Tile& tile, const std::string& actor, const std::string& thread_id,
                      std::uint64_t checkpoint_index, std::uint64_t checksum,
                      const std::optional<StateSnapshot>& snapshot) {
  if (actor != tile.vmem.owner()) {
    throw VmemAccessError("validation memory of " + tile.vmem.owner() + " written by " + actor);
  }
  if (tile.sefi_blocked) return false;
  tile.vmem.write_checksum(actor, thread_id, checkpoint_index, checksum);
  if (snapshot) tile.vmem.write_snapshot(actor, checkpoint_index, *snapshot);
  return true;
}

}  // namespace ftsim
