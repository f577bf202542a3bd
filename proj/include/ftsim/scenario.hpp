// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ftsim/criticality.hpp"
#include "ftsim/fabric.hpp"
#include "ftsim/fault_injector.hpp"
#include "ftsim/supervisor.hpp"
#include "ftsim/trace.hpp"
#include "ftsim/workload.hpp"

namespace ftsim {

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct TileConfig {
  std::string id;
  std::string partition;
  double capacity = 100.0;
};

struct ThreadGroupConfig {
  std::string id;
  std::vector<std::string> threads;
};

struct TileGroupConfig {
  std::string id;
  std::vector<std::string> members;
  std::vector<std::string> thread_groups;
  SimTime base_period = 0;
  SimTime comparison_deadline = 0;
  SimTime grace_period = 0;
};

struct FabricConfig {
  std::uint32_t cell_count = 64;
  std::vector<ConfigVariant> variants;
  std::vector<std::string> free_partitions;
  std::uint32_t shared_cell_count = 64;
  std::vector<ConfigVariant> shared_variants;
  SimTime reconfig_duration = 500;
  SimTime full_reconfig_duration = 2000;
};

/// Fully resolved scenario: every default filled in, every reference checked.
struct Scenario {
  std::string name;
  std::uint64_t seed = 1;
  SimTime horizon = 0;
  std::vector<TileConfig> tiles;
  std::vector<std::string> spares;
  FabricConfig fabric;
  std::vector<ThreadSpec> threads;
  std::vector<ThreadGroupConfig> thread_groups;
  std::vector<TileGroupConfig> tile_groups;
  SimTime context_switch = 0;
  SimTime reboot_duration = 100;
  SupervisorConfig supervisor;
  CriticalityPolicy policy;
  FaultProfile faults;
  bool output_voting = true;
  bool ecc = true;

  const ThreadSpec* thread(const std::string& id) const;
  const TileConfig* tile(const std::string& id) const;
};

/// Maps JSON pointers ("/tile_groups/0/members") to 1-based source lines.
class LineIndex {
 public:
  LineIndex() = default;
  explicit LineIndex(std::string_view text);
  /// Line of the value at `pointer`, or of its closest indexed ancestor.
  int line_of(const std::string& pointer) const;
  static int line_at_offset(std::string_view text, std::size_t offset);

 private:
  std::map<std::string, int> lines_;
};

struct ScenarioSource {
  std::string origin;
  std::string base_dir;
  std::string text;
  Json doc;
  LineIndex lines;
};

ScenarioSource parse_source(std::string text, std::string origin, std::string base_dir = ".");
ScenarioSource read_source(const std::string& path);

/// "tile_groups.0.base_period" -> "/tile_groups/0/base_period".
std::string dotted_to_pointer(const std::string& dotted);

/// Resolve a dotted path; nullptr when absent.
const Json* find_path(const Json& doc, const std::string& dotted);

/// Apply `key=value`. The value is parsed as JSON when possible, else taken
/// as a string. Missing object keys are created; array indices must exist.
void apply_override(Json& doc, const std::string& assignment);

Scenario compile_scenario(const ScenarioSource& src, const std::vector<std::string>& overrides = {});
Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides = {});

}  // namespace ftsim
