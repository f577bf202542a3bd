// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ftsim {

using CellSet = std::set<std::uint32_t>;

/// A differently-routed, functionally equivalent programming of one tile
/// design. Footprint = cell indices used within a partition.
struct ConfigVariant {
  std::string variant_id;
  CellSet footprint;
};

struct Partition {
  std::string partition_id;
  std::uint32_t cell_count = 64;
  std::optional<std::string> hosted_tile;
  std::size_t active_variant = 0;
  /// Configuration-memory upsets: behave like damage until the partition is
  /// successfully reprogrammed.
  CellSet config_upsets;
};

inline constexpr const char* kSharedRegionId = "shared";

struct ReconfigResult {
  bool success = false;
  CellSet fault_cells;
};

struct ValidationResult {
  bool pass = false;
  CellSet evidence;
};

/// Default footprints: anchor cells {0,1} used by every variant plus one
/// third of the remaining cells each.
std::vector<ConfigVariant> default_variants(std::uint32_t cell_count, std::size_t count = 3);

class Fabric {
 public:
  Fabric() = default;
  Fabric(std::vector<Partition> partitions, std::vector<ConfigVariant> tile_variants,
         Partition shared_region, std::vector<ConfigVariant> shared_variants);

  const std::vector<Partition>& partitions() const { return partitions_; }
  const Partition& shared_region() const { return shared_; }
  const std::vector<ConfigVariant>& tile_variants() const { return tile_variants_; }
  const std::vector<ConfigVariant>& shared_variants() const { return shared_variants_; }

  bool has_partition(const std::string& id) const;
  const Partition& partition(const std::string& id) const;
  Partition& partition(const std::string& id);

  const std::vector<ConfigVariant>& variants_for(const std::string& partition_id) const;
  const ConfigVariant& active_variant(const std::string& partition_id) const;

  /// Permanent displacement damage. Never cleared.
  void damage_cell(const std::string& partition_id, std::uint32_t cell);
  /// Transient configuration-memory upset; cleared by a successful reprogram.
  void upset_config(const std::string& partition_id, std::uint32_t cell);

  CellSet damaged_cells(const std::string& partition_id) const;
  std::size_t total_damage() const { return damaged_.size(); }
  /// Damage plus live configuration upsets.
  CellSet faulty_cells(const std::string& partition_id) const;
  CellSet overlap(const std::string& partition_id, const ConfigVariant& variant) const;

  /// Boot self-test: the active variant touches no faulty cell.
  bool self_test(const std::string& partition_id) const;

  void bind(const std::string& partition_id, const std::optional<std::string>& tile_id);
  std::vector<std::string> free_partitions() const;

  /// Re-program one partition with `variant`. Only the named partition changes.
  ReconfigResult partial_reconfigure(const std::string& partition_id, std::size_t variant,
                                     bool host_active);
  ValidationResult validate_partition(const std::string& partition_id) const;

  /// Advance the shared region to the next variant avoiding its damage.
  /// Returns false when every shared variant overlaps damage.
  bool full_reconfigure();

 private:
  std::vector<Partition> partitions_;
  std::vector<ConfigVariant> tile_variants_;
  Partition shared_;
  std::vector<ConfigVariant> shared_variants_;
  std::set<std::pair<std::string, std::uint32_t>> damaged_;
};

/// Stepwise Stage 2 repair search over (partition, variant) candidates:
/// variants of the home partition in order, then each free partition.
class RepairJob {
 public:
  RepairJob(std::string tile_id, std::string home_partition,
            std::vector<std::string> free_partitions, std::size_t variant_count);

  const std::string& tile_id() const { return tile_id_; }
  struct Attempt {
    std::string partition_id;
    std::size_t variant = 0;
  };
  std::optional<Attempt> next();
  std::size_t attempts() const { return attempts_; }

 private:
  std::string tile_id_;
  std::vector<std::string> partitions_;
  std::size_t variant_count_;
  std::size_t part_idx_ = 0;
  std::size_t variant_idx_ = 0;
  std::size_t attempts_ = 0;
};

struct RepairOutcome {
  bool repaired = false;
  std::string partition_id;
  std::size_t variant = 0;
  bool relocated = false;
  std::size_t attempts = 0;
  CellSet evidence;
};

/// Synchronous repair loop: reconfigure + validate until a candidate passes.
RepairOutcome repair_tile(Fabric& fabric, const std::string& tile_id,
                          const std::string& home_partition);

}  // namespace ftsim
