// SPDX-License-Identifier: Apache-2.0
#include "ftsim/fabric.hpp"

#include <algorithm>

#include "ftsim/ids.hpp"

namespace ftsim {

std::vector<ConfigVariant> default_variants(std::uint32_t cell_count, std::size_t count) {
  std::vector<ConfigVariant> out;
  if (count == 0) return out;
  const std::uint32_t anchors = cell_count >= 4 ? 2 : 0;
  const std::uint32_t span = cell_count - anchors;
  for (std::size_t v = 0; v < count; ++v) {
    ConfigVariant cv;
    cv.variant_id = std::string(1, static_cast<char>('A' + v % 26)) +
                    (v >= 26 ? std::to_string(v / 26) : "");
    for (std::uint32_t a = 0; a < anchors; ++a) cv.footprint.insert(a);
    const std::uint32_t lo = anchors + static_cast<std::uint32_t>(span * v / count);
    const std::uint32_t hi = anchors + static_cast<std::uint32_t>(span * (v + 1) / count);
    for (std::uint32_t c = lo; c < hi; ++c) cv.footprint.insert(c);
    out.push_back(std::move(cv));
  }
  return out;
}

Fabric::Fabric(std::vector<Partition> partitions, std::vector<ConfigVariant> tile_variants,
               Partition shared_region, std::vector<ConfigVariant> shared_variants)
    : partitions_(std::move(partitions)),
      tile_variants_(std::move(tile_variants)),
      shared_(std::move(shared_region)),
      shared_variants_(std::move(shared_variants)) {
  shared_.partition_id = kSharedRegionId;
}

bool Fabric::has_partition(const std::string& id) const {
  if (id == kSharedRegionId) return true;
  return std::any_of(partitions_.begin(), partitions_.end(),
                     [&](const Partition& p) { return p.partition_id == id; });
}

const Partition& Fabric::partition(const std::string& id) const {
  if (id == kSharedRegionId) return shared_;
  for (const auto& p : partitions_)
    if (p.partition_id == id) return p;
  throw std::out_of_range("unknown partition '" + id + "'");
}

Partition& Fabric::partition(const std::string& id) {
  return const_cast<Partition&>(std::as_const(*this).partition(id));
}

const std::vector<ConfigVariant>& Fabric::variants_for(const std::string& partition_id) const {
  return partition_id == kSharedRegionId ? shared_variants_ : tile_variants_;
}

const ConfigVariant& Fabric::active_variant(const std::string& partition_id) const {
  const auto& vs = variants_for(partition_id);
  const auto& p = partition(partition_id);
  if (vs.empty()) throw std::logic_error("no configuration variants for '" + partition_id + "'");
  return vs.at(p.active_variant % vs.size());
}

void Fabric::damage_cell(const std::string& partition_id, std::uint32_t cell) {
  const auto& p = partition(partition_id);
  if (cell >= p.cell_count) throw std::out_of_range("cell index out of range");
  damaged_.emplace(partition_id, cell);
}

void Fabric::upset_config(const std::string& partition_id, std::uint32_t cell) {
  auto& p = partition(partition_id);
  if (cell >= p.cell_count) throw std::out_of_range("cell index out of range");
  p.config_upsets.insert(cell);
}

CellSet Fabric::damaged_cells(const std::string& partition_id) const {
  CellSet out;
  for (auto it = damaged_.lower_bound({partition_id, 0});
       it != damaged_.end() && it->first == partition_id; ++it)
    out.insert(it->second);
  return out;
}

CellSet Fabric::faulty_cells(const std::string& partition_id) const {
  CellSet out = damaged_cells(partition_id);
  const auto& ups = partition(partition_id).config_upsets;
  out.insert(ups.begin(), ups.end());
  return out;
}

CellSet Fabric::overlap(const std::string& partition_id, const ConfigVariant& variant) const {
  const CellSet faulty = faulty_cells(partition_id);
  CellSet out;
  std::set_intersection(faulty.begin(), faulty.end(), variant.footprint.begin(),
                        variant.footprint.end(), std::inserter(out, out.end()));
  return out;
}

bool Fabric::self_test(const std::string& partition_id) const {
  return overlap(partition_id, active_variant(partition_id)).empty();
}

void Fabric::bind(const std::string& partition_id, const std::optional<std::string>& tile_id) {
  partition(partition_id).hosted_tile = tile_id;
}

std::vector<std::string> Fabric::free_partitions() const {
  std::vector<std::string> out;
  for (const auto& p : partitions_)
    if (!p.hosted_tile) out.push_back(p.partition_id);
  sort_natural(out);
  return out;
}

ReconfigResult Fabric::partial_reconfigure(const std::string& partition_id, std::size_t variant,
                                           bool host_active) {
  if (host_active) {
    throw std::logic_error("partial reconfiguration of '" + partition_id +
                           "' while its tile is active");
  }
  auto& p = partition(partition_id);
  const auto& vs = variants_for(partition_id);
  if (variant >= vs.size()) throw std::out_of_range("variant index out of range");
  p.active_variant = variant;
  p.config_upsets.clear();
  ReconfigResult r;
  r.fault_cells = overlap(partition_id, vs[variant]);
  r.success = r.fault_cells.empty();
  return r;
}

ValidationResult Fabric::validate_partition(const std::string& partition_id) const {
  ValidationResult v;
  v.evidence = overlap(partition_id, active_variant(partition_id));
  v.pass = v.evidence.empty();
  return v;
}

bool Fabric::full_reconfigure() {
  const std::size_t n = shared_variants_.size();
  if (n == 0) return false;
  shared_.config_upsets.clear();
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t v = (shared_.active_variant + step) % n;
    if (overlap(kSharedRegionId, shared_variants_[v]).empty()) {
      shared_.active_variant = v;
      return true;
    }
  }
  return false;
}

RepairJob::RepairJob(std::string tile_id, std::string home_partition,
                     std::vector<std::string> free_partitions, std::size_t variant_count)
    : tile_id_(std::move(tile_id)), variant_count_(variant_count) {
  partitions_.push_back(std::move(home_partition));
  for (auto& p : free_partitions)
    if (p != partitions_.front()) partitions_.push_back(std::move(p));
}

std::optional<RepairJob::Attempt> RepairJob::next() {
  if (variant_count_ == 0) return std::nullopt;
  if (part_idx_ >= partitions_.size()) return std::nullopt;
  Attempt a{partitions_[part_idx_], variant_idx_};
  if (++variant_idx_ >= variant_count_) {
    variant_idx_ = 0;
    ++part_idx_;
  }
  ++attempts_;
  return a;
}

RepairOutcome repair_tile(Fabric& fabric, const std::string& tile_id,
                          const std::string& home_partition) {
  RepairJob job(tile_id, home_partition, fabric.free_partitions(),
                fabric.tile_variants().size());
  RepairOutcome out;
  while (auto attempt = job.next()) {
    auto r = fabric.partial_reconfigure(attempt->partition_id, attempt->variant, false);
    auto v = fabric.validate_partition(attempt->partition_id);
    out.evidence.insert(r.fault_cells.begin(), r.fault_cells.end());
    if (r.success && v.pass) {
      out.repaired = true;
      out.partition_id = attempt->partition_id;
      out.variant = attempt->variant;
      out.relocated = attempt->partition_id != home_partition;
      if (out.relocated) {
        fabric.bind(home_partition, std::nullopt);
        fabric.bind(attempt->partition_id, tile_id);
      }
      break;
    }
  }
  out.attempts = job.attempts();
  return out;
}

}  // namespace ftsim
