// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ftsim/scenario.hpp"
#include "ftsim/simulation.hpp"
#include "ftsim/workload.hpp"

namespace ftsim::test {

inline std::string scenario_path(const std::string& name) {
  return std::string(FTSIM_SCENARIO_DIR) + "/" + name + ".scenario";
}

inline Scenario bundled(const std::string& name, const std::vector<std::string>& overrides = {}) {
  return load_scenario(scenario_path(name), overrides);
}

inline ThreadSpecPtr spec(const std::string& id, std::size_t words = 4, SimTime period = 1000,
                          SimTime checksum = 5, SimTime sync = 10, SimTime update = 15) {
  auto s = std::make_shared<ThreadSpec>();
  s->thread_id = id;
  s->state_words = words;
  s->desired_checkpoint_period = period;
  s->costs.checksum = checksum;
  s->costs.sync = sync;
  s->costs.update = update;
  return s;
}

inline std::vector<TraceRecord> of_kind(const std::vector<TraceRecord>& trace, const std::string& kind) {
  std::vector<TraceRecord> out;
  for (const auto& r : trace)
    if (r.kind == kind) out.push_back(r);
  return out;
}

}  // namespace ftsim::test
