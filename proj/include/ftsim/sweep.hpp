// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftsim/metrics.hpp"
#include "ftsim/scenario.hpp"

namespace ftsim {

struct SweepAxis {
  std::string path;  // dotted, e.g. "tile_groups.0.base_period"
  std::vector<double> values;
};

/// "path=v1,v2,v3"
SweepAxis parse_axis(const std::string& spec);

struct SweepRow {
  std::vector<double> point;  // one value per axis
  std::uint64_t seed = 0;
  MetricsSummary metrics;
};

class SweepError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One run per (grid point, seed). Rows are sorted by grid index, then seed,
/// regardless of how many worker threads ran the cells.
std::vector<SweepRow> sweep(const ScenarioSource& src, const std::vector<std::string>& overrides,
                            const std::vector<SweepAxis>& axes, const std::vector<std::uint64_t>& seeds,
                            unsigned workers = 1);

std::string sweep_to_csv(const std::vector<SweepAxis>& axes, const std::vector<SweepRow>& rows);

}  // namespace ftsim
