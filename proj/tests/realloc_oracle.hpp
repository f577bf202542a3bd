// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ftsim/criticality.hpp"
#include "ftsim/random.hpp"

namespace ftsim::test {

// Brute force over every assignment of tile subsets to high-criticality
// groups at the undegraded period. Low groups are left unplaced: they never
// help a high group. Among feasible assignments, the set of fully replicated
// high groups is ranked lexicographically in priority order (criticality
// descending, label ascending), so a group is never given up to make room
// for lower-priority ones. Returns the size of the best set.
inline std::size_t oracle_max_full_high(const CapacityModel& model, const CriticalityPolicy& policy) {
  std::vector<std::string> tiles;
  std::vector<double> cap;
  for (const auto& [t, c] : model.tile_capacity) {
    tiles.push_back(t);
    cap.push_back(c);
  }
  const std::size_t nt = tiles.size();
  std::vector<const GroupDemand*> high;
  for (const auto& g : model.groups)
    if (g.criticality >= policy.high_threshold) high.push_back(&g);
  std::sort(high.begin(), high.end(), [](const GroupDemand* a, const GroupDemand* b) {
    if (a->criticality != b->criticality) return a->criticality > b->criticality;
    return a->tg_id < b->tg_id;
  });
  const std::size_t nh = high.size();
  const unsigned need = policy.min_replicas_high;
  std::uint64_t best_key = 0;
  std::vector<std::uint32_t> pick(nh, 0);
  const auto eps = 1e-9;

  auto evaluate = [&]() {
    std::vector<double> used(nt, 0.0);
    for (std::size_t h = 0; h < nh; ++h)
      for (std::size_t t = 0; t < nt; ++t)
        if (pick[h] >> t & 1u) used[t] += high[h]->work + high[h]->checkpoint;
    for (std::size_t t = 0; t < nt; ++t)
      if (used[t] > cap[t] + eps) return;
    std::uint64_t key = 0;
    for (std::size_t h = 0; h < nh; ++h)
      if (pick[h] != 0) key |= std::uint64_t{1} << (nh - 1 - h);
    best_key = std::max(best_key, key);
  };

  std::vector<std::uint32_t> options{0};
  for (std::uint32_t s = 1; s < (1u << nt); ++s)
    if (static_cast<unsigned>(std::popcount(s)) >= need) options.push_back(s);
  std::vector<std::size_t> idx(nh, 0);
  while (true) {
    for (std::size_t h = 0; h < nh; ++h) pick[h] = options[idx[h]];
    evaluate();
    std::size_t k = 0;
    while (k < nh && ++idx[k] == options.size()) idx[k++] = 0;
    if (k == nh) break;
  }
  return static_cast<std::size_t>(std::popcount(best_key));
}

inline CapacityModel random_instance(RandomStream& r, std::size_t max_tiles = 4, std::size_t max_groups = 4) {
  CapacityModel m;
  const std::size_t nt = 1 + r.uniform_range(0, max_tiles - 1);
  const std::size_t ng = 1 + r.uniform_range(0, max_groups - 1);
  const double caps[] = {40, 60, 80, 100};
  for (std::size_t t = 0; t < nt; ++t) m.tile_capacity["C" + std::to_string(t)] = caps[r.uniform_range(0, 3)];
  for (std::size_t g = 0; g < ng; ++g) {
    GroupDemand d;
    d.tg_id = "TG" + std::to_string(g);
    d.criticality = static_cast<unsigned>(r.uniform_range(1, 9));
    d.work = 10.0 * static_cast<double>(r.uniform_range(1, 6));
    d.checkpoint = static_cast<double>(r.uniform_range(0, 2)) * 5.0;
    for (const auto& [t, c] : m.tile_capacity)
      if (r.bernoulli(0.5)) d.current_tiles.push_back(t);
    d.desired_replicas = 3;
    m.groups.push_back(std::move(d));
  }
  return m;
}

}  // namespace ftsim::test
