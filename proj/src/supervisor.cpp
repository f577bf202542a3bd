// SPDX-License-Identifier: Apache-2.0
#include "ftsim/supervisor.hpp"

#include <algorithm>
#include <bit>
#include <set>

#include "ftsim/ids.hpp"

namespace ftsim {

AgreementSignal to_signal(const CheckpointReport& report) {
  AgreementSignal s;
  s.source = report.tile_id;
  s.checkpoint_index = report.checkpoint_index;
  for (const auto& [sib, v] : report.verdicts) s.bits[sib] = v;
  return s;
}

const char* to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::AllAgree: return "all-agree";
    case VerdictKind::Faulty: return "faulty";
    case VerdictKind::Unresolvable: return "unresolvable";
  }
  return "?";
}

const char* to_string(PendingAction a) {
  switch (a) {
    case PendingAction::StateUpdate: return "state-update";
    case PendingAction::Replace: return "replace";
    case PendingAction::Reboot: return "reboot";
    case PendingAction::Stage2: return "stage2";
    case PendingAction::Stage3: return "stage3";
  }
  return "?";
}

const char* to_string(FaultAction a) {
  switch (a) {
    case FaultAction::StateUpdate: return "state-update";
    case FaultAction::ReplaceWithSpare: return "replace";
    case FaultAction::MarkDefunct: return "defunct";
  }
  return "?";
}

const char* to_string(Command c) {
  switch (c) {
    case Command::StateUpdate: return "state-update";
    case Command::Reboot: return "reboot";
    case Command::ActivateWithMapping: return "activate-with-mapping";
    case Command::Halt: return "halt";
    case Command::Checkpoint: return "checkpoint";
  }
  return "?";
}

GroupVerdict ingest_signals(const std::vector<std::string>& members,
                            const std::vector<AgreementSignal>& signals) {
  const std::size_t n = members.size();
  if (n > 24) throw std::invalid_argument("ingest_signals: tile group too large");
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < n; ++i) pos[members[i]] = i;

  // per ordered pair: 0 = nothing, 1 = agree, 2 = disagree/miss
  std::vector<std::vector<int>> said(n, std::vector<int>(n, 0));
  for (const auto& s : signals) {
    auto a = pos.find(s.source);
    if (a == pos.end()) continue;
    for (const auto& [sib, v] : s.bits) {
      auto b = pos.find(sib);
      if (b == pos.end()) continue;
      said[a->second][b->second] = v == SiblingVerdict::Agree ? 1 : 2;
    }
  }
  std::vector<std::uint32_t> adj(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const int x = said[i][j], y = said[j][i];
      if (x != 2 && y != 2 && (x == 1 || y == 1)) adj[i] |= 1u << j;
    }

  // exhaustive clique search; groups are small
  int best = 0;
  std::vector<std::uint32_t> best_sets;
  for (std::uint32_t set = 1; set < (1u << n); ++set) {
    const int sz = std::popcount(set);
    if (sz < best) continue;
    bool clique = true;
    for (std::size_t i = 0; i < n && clique; ++i)
      if ((set >> i) & 1u) clique = ((adj[i] | (1u << i)) & set) == set;
    if (!clique) continue;
    if (sz > best) {
      best = sz;
      best_sets.clear();
    }
    best_sets.push_back(set);
  }

  GroupVerdict v;
  if (best_sets.size() != 1) {
    v.kind = VerdictKind::Unresolvable;
    return v;
  }
  const std::uint32_t maj = best_sets.front();
  for (std::size_t i = 0; i < n; ++i) {
    ((maj >> i) & 1u ? v.majority : v.faulty).push_back(members[i]);
  }
  sort_natural(v.majority);
  sort_natural(v.faulty);
  v.donor = v.majority.front();
  v.kind = v.faulty.empty() ? VerdictKind::AllAgree : VerdictKind::Faulty;
  return v;
}

SupervisorState::SupervisorState(SupervisorConfig cfg) : config(cfg) {
  if (config.transient_threshold >= config.defunct_threshold) {
    throw std::invalid_argument("transient_threshold must be below defunct_threshold");
  }
}

std::uint64_t SupervisorState::count(const std::string& tile) const {
  auto it = fault_counter.find(tile);
  return it == fault_counter.end() ? 0 : it->second;
}

void SupervisorState::add_spare(const std::string& tile) {
  if (is_spare(tile)) return;
  spare_pool.push_back(tile);
  sort_natural(spare_pool);
}

std::optional<std::string> SupervisorState::take_spare() {
  if (spare_pool.empty()) return std::nullopt;
  std::string s = spare_pool.front();
  spare_pool.erase(spare_pool.begin());
  return s;
}

bool SupervisorState::is_spare(const std::string& tile) const { return contains(spare_pool, tile); }

void SupervisorState::remove_spare(const std::string& tile) {
  spare_pool.erase(std::remove(spare_pool.begin(), spare_pool.end(), tile), spare_pool.end());
}

void SupervisorState::reset_counter(const std::string& tile) {
  fault_counter[tile] = 0;
  recent[tile].clear();
}

FaultDecision handle_fault(SupervisorState& sup, const std::string& tile_id,
                           std::uint64_t checkpoint_seq) {
  FaultDecision d;
  d.lifetime_count = ++sup.fault_counter[tile_id];
  auto& window = sup.recent[tile_id];
  window.push_back(checkpoint_seq);
  while (!window.empty() && window.front() + sup.config.transient_window <= checkpoint_seq)
    window.pop_front();
  d.window_count = window.size();

  if (d.lifetime_count >= sup.config.defunct_threshold) {
    d.action = FaultAction::MarkDefunct;
    sup.pending[tile_id] = PendingAction::Stage2;
  } else if (d.window_count >= sup.config.transient_threshold) {
    d.action = FaultAction::ReplaceWithSpare;
    d.spare = sup.take_spare();
    d.escalate_stage2 = !d.spare.has_value();
    sup.pending[tile_id] = d.spare ? PendingAction::Replace : PendingAction::Stage2;
  } else {
    d.action = FaultAction::StateUpdate;
    sup.pending[tile_id] = PendingAction::StateUpdate;
  }
  return d;
}

void kick_watchdog(SupervisorState& sup, SimTime now) { sup.watchdog_last_kick = now; }

bool watchdog_tick(const SupervisorState& sup, SimTime now) {
  if (sup.config.watchdog_period == 0) return false;
  if (now < sup.watchdog_hold_until) return false;
  const SimTime since = std::max(sup.watchdog_last_kick, sup.watchdog_hold_until);
  return now - since > sup.config.watchdog_period;
}

void check_command(const Tile& tile, Command command) {
  if (tile.status == TileStatus::Defunct) {
    throw RejectedCommand(std::string("command ") + to_string(command) + " to defunct tile " +
                          tile.tile_id);
  }
}

}  // namespace ftsim
