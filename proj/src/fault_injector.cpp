// SPDX-License-Identifier: Apache-2.0
#include "ftsim/fault_injector.hpp"

#include <algorithm>
#include <cmath>

namespace ftsim {

const char* to_string(FaultKind k) {
  switch (k) {
    case FaultKind::TransientState: return "transient-state";
    case FaultKind::TransientValidationMemory: return "transient-validation-memory";
    case FaultKind::PermanentCell: return "permanent-cell";
    case FaultKind::ConfigUpset: return "config-upset";
    case FaultKind::SefiTile: return "sefi-tile";
    case FaultKind::SefiShared: return "sefi-shared";
    case FaultKind::MainMemory: return "main-memory";
  }
  return "?";
}

std::optional<FaultKind> fault_kind_from_string(const std::string& s) {
  for (FaultKind k : kAllFaultKinds)
    if (s == to_string(k)) return k;
  return std::nullopt;
}

double FaultProfile::factor_at(SimTime t) const {
  double f = 1.0;
  for (const auto& w : windows)
    if (t >= w.from && t < w.to) f *= w.factor;
  return f;
}

std::uint64_t random_mask(RandomStream& stream) {
  std::uint64_t m = 0;
  while (m == 0) m = stream.uniform64();
  return m;
}

namespace {

double max_factor(const FaultProfile& p) {
  // upper bound for thinning: product of all factors > 1
  double f = 1.0;
  for (const auto& w : p.windows) f *= std::max(1.0, w.factor);
  return f;
}

bool fill_target(FaultEvent& ev, const FaultProfile& profile, const TargetSpace& targets,
                 RandomStream& rng) {
  switch (ev.kind) {
    case FaultKind::TransientState:
    case FaultKind::MainMemory: {
      if (targets.state.empty()) return false;
      const auto& t = targets.state[rng.uniform_range(0, targets.state.size() - 1)];
      ev.tile = t.tile;
      ev.thread = t.thread;
      const std::size_t w = rng.uniform_range(0, t.words - 1);
      ev.flips.push_back({w, random_mask(rng)});
      if (ev.kind == FaultKind::TransientState && t.words > 1 &&
          rng.bernoulli(profile.multi_bit_share))
        ev.flips.push_back({(w + 1) % t.words, random_mask(rng)});
      return true;
    }
    case FaultKind::TransientValidationMemory:
      if (targets.tiles.empty()) return false;
      ev.tile = targets.tiles[rng.uniform_range(0, targets.tiles.size() - 1)];
      ev.flips.push_back({0, random_mask(rng)});
      return true;
    case FaultKind::PermanentCell:
    case FaultKind::ConfigUpset: {
      if (targets.partitions.empty()) return false;
      const auto& p = targets.partitions[rng.uniform_range(0, targets.partitions.size() - 1)];
      ev.partition = p.partition;
      ev.cell = static_cast<std::uint32_t>(rng.uniform_range(0, p.cells - 1));
      return true;
    }
    case FaultKind::SefiTile:
      if (targets.tiles.empty()) return false;
      ev.tile = targets.tiles[rng.uniform_range(0, targets.tiles.size() - 1)];
      ev.duration = std::max<SimTime>(1, profile.sefi_duration);
      return true;
    case FaultKind::SefiShared:
      ev.duration = std::max<SimTime>(1, profile.shared_sefi_duration);
      return true;
  }
  return false;
}

}  // namespace

std::vector<FaultEvent> generate(const FaultProfile& profile, SimTime horizon,
                                 const TargetSpace& targets, RandomStream& stream) {
  std::vector<FaultEvent> out;
  for (const auto& ev : profile.explicit_events) {
    FaultEvent e = ev;
    e.scripted = true;
    out.push_back(std::move(e));
  }
  const double bound = max_factor(profile);
  for (FaultKind kind : kAllFaultKinds) {
    auto it = profile.rates.find(kind);
    if (it == profile.rates.end() || !(it->second > 0.0)) continue;
    const double per_tick = it->second / 1e6 * bound;
    double t = 0.0;
    while (true) {
      t += stream.exponential(per_tick);
      if (t >= static_cast<double>(horizon)) break;
      const auto at = static_cast<SimTime>(t);
      if (bound > 1.0 && !stream.bernoulli(profile.factor_at(at) / bound)) continue;
      FaultEvent ev;
      ev.at = at;
      ev.kind = kind;
      if (fill_target(ev, profile, targets, stream)) out.push_back(std::move(ev));
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const FaultEvent& a, const FaultEvent& b) { return a.at < b.at; });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = i;
  return out;
}

void corrupt_state(ThreadState& ts, const std::vector<WordFlip>& flips) {
  for (const auto& f : flips) {
    if (ts.state.empty()) return;
    ts.state[f.word % ts.state.size()] ^= f.mask;
  }
  ts.corrupted = true;
}

}  // namespace ftsim
