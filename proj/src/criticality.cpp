// SPDX-License-Identifier: Apache-2.0
#include "ftsim/criticality.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

#include "ftsim/ids.hpp"

namespace ftsim {

namespace {
constexpr double kEps = 1e-9;
}

const char* to_string(Lever l) {
  switch (l) {
    case Lever::ReduceReplicas: return "reduce-replicas";
    case Lever::ReduceCheckpointFrequency: return "reduce-checkpoint-frequency";
    case Lever::Deactivate: return "deactivate";
  }
  return "?";
}

std::optional<Lever> lever_from_string(const std::string& s) {
  for (Lever l : {Lever::ReduceReplicas, Lever::ReduceCheckpointFrequency, Lever::Deactivate})
    if (s == to_string(l)) return l;
  return std::nullopt;
}

const GroupPlacement* AssignmentPlan::find(const std::string& tg_id) const {
  for (const auto& g : groups)
    if (g.tg_id == tg_id) return &g;
  return nullptr;
}

namespace {

std::vector<const GroupDemand*> priority_order(const CapacityModel& model) {
  std::vector<const GroupDemand*> order;
  for (const auto& g : model.groups) order.push_back(&g);
  std::stable_sort(order.begin(), order.end(), [](const GroupDemand* a, const GroupDemand* b) {
    if (a->criticality != b->criticality) return a->criticality > b->criticality;
    return natural_less(a->tg_id, b->tg_id);
  });
  return order;
}

/// Feasible tiles not in `taken`, best first: hosting tiles, then tightest
/// fit, then lowest id.
std::vector<std::string> feasible_tiles(const GroupDemand& g, double demand,
                                        const std::map<std::string, double>& residual,
                                        const std::vector<std::string>& taken) {
  std::vector<std::string> hosting, others;
  for (const auto& [tile, free] : residual) {
    if (contains(taken, tile) || free + kEps < demand) continue;
    (contains(g.current_tiles, tile) ? hosting : others).push_back(tile);
  }
  sort_natural(hosting);
  std::stable_sort(others.begin(), others.end(), [&](const std::string& a, const std::string& b) {
    const double fa = residual.at(a) - demand, fb = residual.at(b) - demand;
    if (fa < fb - kEps || fa > fb + kEps) return fa < fb;
    return natural_less(a, b);
  });
  hosting.insert(hosting.end(), others.begin(), others.end());
  return hosting;
}

std::vector<std::string> pick_tiles(const GroupDemand& g, double demand, std::size_t want,
                                    const std::map<std::string, double>& residual,
                                    const std::vector<std::string>& taken) {
  auto out = feasible_tiles(g, demand, residual, taken);
  if (out.size() > want) out.resize(want);
  return out;
}

/// Backtracking search for tile sets giving every group its minimum at the
/// undegraded period. Candidates are tried in feasible_tiles order, so the
/// first solution found is the one the plain greedy would pick when that
/// one works.
class Packer {
 public:
  Packer(std::vector<const GroupDemand*> groups, const CriticalityPolicy& policy,
         std::map<std::string, double> residual)
      : groups_(std::move(groups)), policy_(policy), residual_(std::move(residual)),
        out_(groups_.size()) {}

  /// nullopt when the node budget ran out before an answer was known.
  std::optional<bool> solve() {
    const bool found = place(0);
    if (!found && exhausted_) return std::nullopt;
    return found;
  }
  const std::vector<std::vector<std::string>>& tiles() const { return out_; }

 private:
  bool place(std::size_t gi) {
    if (gi == groups_.size()) return true;
    const GroupDemand& g = *groups_[gi];
    const double d = g.at_factor(1);
    const auto cand = feasible_tiles(g, d, residual_, {});
    const unsigned need = policy_.class_min(g.criticality);
    if (cand.size() < need) return false;
    return choose(gi, cand, 0, need, d);
  }

  bool choose(std::size_t gi, const std::vector<std::string>& cand, std::size_t start, unsigned left, double d) {
    if (left == 0) return place(gi + 1);
    for (std::size_t k = start; k + left <= cand.size(); ++k) {
      if (budget_ == 0) {
        exhausted_ = true;
        return false;
      }
      --budget_;
      residual_[cand[k]] -= d;
      out_[gi].push_back(cand[k]);
      if (choose(gi, cand, k + 1, left - 1, d)) return true;
      residual_[cand[k]] += d;
      out_[gi].pop_back();
      if (exhausted_) return false;
    }
    return false;
  }

  std::vector<const GroupDemand*> groups_;
  const CriticalityPolicy& policy_;
  std::map<std::string, double> residual_;
  std::vector<std::vector<std::string>> out_;
  std::size_t budget_ = 200000;
  bool exhausted_ = false;
};

/// Sequential greedy placement of every group's minimum; fallback when the
/// search budget is exhausted.
std::optional<std::vector<std::vector<std::string>>> pack_greedy(const std::vector<const GroupDemand*>& groups,
                                                                 const CriticalityPolicy& policy,
                                                                 std::map<std::string, double> residual) {
  std::vector<std::vector<std::string>> out;
  for (const GroupDemand* g : groups) {
    const unsigned need = policy.class_min(g->criticality);
    auto chosen = pick_tiles(*g, g->at_factor(1), need, residual, {});
    if (chosen.size() < need) return std::nullopt;
    for (const auto& t : chosen) residual[t] -= g->at_factor(1);
    out.push_back(std::move(chosen));
  }
  return out;
}

}  // namespace

AssignmentPlan reallocate(const CapacityModel& model, const CriticalityPolicy& policy) {
  AssignmentPlan plan;
  plan.residual = model.tile_capacity;
  const auto order = priority_order(model);
  plan.groups.resize(order.size());
  std::vector<bool> done(order.size(), false);

  auto commit = [&](std::size_t i, std::vector<std::string> tiles, unsigned factor) {
    const GroupDemand* g = order[i];
    GroupPlacement& p = plan.groups[i];
    p.period_factor = factor;
    p.tiles = std::move(tiles);
    for (const auto& t : p.tiles) plan.residual[t] -= g->at_factor(factor);
    p.loss_of_capability = g->criticality >= policy.high_threshold && p.tiles.size() < policy.min_replicas_low;
    done[i] = true;
  };

  for (std::size_t i = 0; i < order.size(); ++i) {
    plan.groups[i].tg_id = order[i]->tg_id;
    plan.groups[i].criticality = order[i]->criticality;
  }

  // high-criticality groups are admitted at full strength in priority order;
  // a group is admitted if some packing of it and every group admitted so
  // far exists. Groups left out cannot consume capacity an admitted one needs.
  std::vector<std::size_t> admitted;
  std::vector<std::vector<std::string>> packing;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i]->criticality < policy.high_threshold) continue;
    std::vector<const GroupDemand*> trial;
    for (std::size_t a : admitted) trial.push_back(order[a]);
    trial.push_back(order[i]);
    Packer packer(trial, policy, plan.residual);
    const auto found = packer.solve();
    if (found.value_or(false)) {
      admitted.push_back(i);
      packing = packer.tiles();
    } else if (!found) {
      if (auto greedy = pack_greedy(trial, policy, plan.residual)) {
        admitted.push_back(i);
        packing = std::move(*greedy);
      }
    }
  }
  for (std::size_t k = 0; k < admitted.size(); ++k) commit(admitted[k], packing[k], 1);

  for (std::size_t i = 0; i < order.size(); ++i) {
    if (done[i]) continue;
    const GroupDemand* g = order[i];
    GroupPlacement& p = plan.groups[i];
    const unsigned class_min = policy.class_min(g->criticality);
    unsigned floor = class_min;
    unsigned factor = 1;

    auto chosen = pick_tiles(*g, g->at_factor(factor), class_min, plan.residual, {});
    bool placed = chosen.size() >= floor;
    for (std::size_t li = 0; !placed && li < policy.degradation_order.size(); ++li) {
      const Lever lever = policy.degradation_order[li];
      if (lever == Lever::ReduceReplicas) {
        if (floor <= policy.min_replicas_low) continue;
        floor = policy.min_replicas_low;
      } else if (lever == Lever::ReduceCheckpointFrequency) {
        if (factor != 1 || policy.frequency_factor <= 1) continue;
        factor = policy.frequency_factor;
      } else {
        p.levers.push_back(lever);
        p.deactivated = true;
        break;
      }
      p.levers.push_back(lever);
      chosen = pick_tiles(*g, g->at_factor(factor), class_min, plan.residual, {});
      placed = chosen.size() >= floor;
    }
    if (!placed) {
      p.deactivated = true;
      chosen.clear();
    }
    commit(i, std::move(chosen), factor);
  }

  // extra replicas up to the desired count, same priority order
  for (std::size_t i = 0; i < order.size(); ++i) {
    const GroupDemand* g = order[i];
    GroupPlacement& p = plan.groups[i];
    if (p.deactivated) continue;
    const std::size_t desired = std::max<std::size_t>(g->desired_replicas,
                                                      policy.class_min(g->criticality));
    if (p.tiles.size() >= desired) continue;
    const double demand = g->at_factor(p.period_factor);
    auto extra = pick_tiles(*g, demand, desired - p.tiles.size(), plan.residual, p.tiles);
    for (const auto& t : extra) {
      plan.residual[t] -= demand;
      p.tiles.push_back(t);
    }
  }
  for (auto& p : plan.groups) sort_natural(p.tiles);
  return plan;
}

bool priority_dominance_holds(const AssignmentPlan& plan, const CapacityModel& model,
                              const CriticalityPolicy& policy, std::string* why) {
  std::map<std::string, const GroupDemand*> demand;
  for (const auto& g : model.groups) demand[g.tg_id] = &g;

  for (const auto& high : plan.groups) {
    const unsigned need = policy.class_min(high.criticality);
    if (high.tiles.size() >= need && high.period_factor == 1) continue;
    // free everything held by strictly-lower groups, and by `high` itself,
    // and see whether `high` could reach its minimum undegraded
    auto residual = plan.residual;
    bool lower_holds = false;
    for (const auto& low : plan.groups) {
      if (low.criticality >= high.criticality && &low != &high) continue;
      if (&low != &high && !low.tiles.empty()) lower_holds = true;
      const double d = demand.at(low.tg_id)->at_factor(low.period_factor);
      for (const auto& t : low.tiles) residual[t] += d;
    }
    if (!lower_holds) continue;
    const double high_d = demand.at(high.tg_id)->at_factor(1);
    std::size_t feasible = 0;
    for (const auto& [tile, free] : residual)
      if (free + kEps >= high_d) ++feasible;
    if (feasible >= need) {
      if (why) {
        std::ostringstream os;
        os << high.tg_id << " has " << high.tiles.size() << "/" << need
           << " replicas while lower-criticality groups hold capacity";
        *why = os.str();
      }
      return false;
    }
  }
  return true;
}

std::size_t fully_replicated_high(const AssignmentPlan& plan, const CriticalityPolicy& policy) {
  std::size_t n = 0;
  for (const auto& g : plan.groups)
    if (g.criticality >= policy.high_threshold && g.period_factor == 1 &&
        g.tiles.size() >= policy.min_replicas_high)
      ++n;
  return n;
}

DegradationResult apply_degradation(TileGroup& group, Lever lever,
                                    const CriticalityPolicy& policy) {
  DegradationResult r;
  switch (lever) {
    case Lever::ReduceReplicas:
      if (group.members.size() <= policy.min_replicas_low) return r;
      r.removed_tile = group.members.back();
      group.members.pop_back();
      group.target_size = group.members.size();
      group.correction_enabled = group.members.size() >= 3;
      r.applied = true;
      return r;
    case Lever::ReduceCheckpointFrequency: {
      const unsigned next = group.period_factor * std::max(2u, policy.frequency_factor);
      if (next > policy.max_period_factor) return r;
      group.period_factor = next;
      r.applied = true;
      return r;
    }
    case Lever::Deactivate:
      if (group.thread_groups.empty()) return r;
      group.thread_groups.clear();
      r.applied = true;
      return r;
  }
  return r;
}

MigrationResult migrate_thread_group(const std::string& tg_id, TileGroup& from, TileGroup& to,
                                     TileMap& tiles, const ThreadGroupMap& thread_groups,
                                     std::uint64_t snapshot_index) {
  MigrationResult r;
  const ThreadGroup& tg = thread_groups.at(tg_id);

  for (const auto& m : from.members) {
    const Tile& t = tiles.at(m);
    if (t.status == TileStatus::Active && !t.sefi_blocked) {
      r.donor = m;
      break;
    }
  }
  if (r.donor) {
    Tile& donor = tiles.at(*r.donor);
    for (const auto& spec : tg.threads)
      donor.vmem.write_snapshot(donor.tile_id, snapshot_index,
                                sync_callback(donor.threads.at(spec->thread_id)));
  }
  for (const auto& m : to.members) {
    Tile& t = tiles.at(m);
    const bool hosted_before = contains(from.members, m) && contains(from.thread_groups, tg_id);
    if (!r.donor) {
      for (const auto& spec : tg.threads)
        t.threads[spec->thread_id] = init_thread(spec, t.tile_id);
      r.updated_tiles.push_back(m);
    } else if (m != *r.donor && !hosted_before) {
      const Tile& donor = tiles.at(*r.donor);
      for (const auto& spec : tg.threads) {
        ThreadState& ts = t.threads.at(spec->thread_id);
        ts = update_callback(std::move(ts), *donor.vmem.snapshot(spec->thread_id, snapshot_index));
      }
      r.updated_tiles.push_back(m);
    }
    t.hosted_groups.insert(to.group_id);
    if (!hosted_before) r.timer_adjusted.push_back(m);
  }
  r.restarted = !r.donor.has_value();
  from.thread_groups.erase(std::remove(from.thread_groups.begin(), from.thread_groups.end(), tg_id),
                           from.thread_groups.end());
  if (!contains(to.thread_groups, tg_id)) to.thread_groups.push_back(tg_id);
  return r;
}

}  // namespace ftsim
