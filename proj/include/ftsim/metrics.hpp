// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ftsim/trace.hpp"

namespace ftsim {

inline constexpr const char* kOutcomes[] = {"corrected", "replaced", "repaired",
                                            "degraded",  "undetected", "absorbed"};

struct LatencyStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  SimTime max = 0;
};

struct MetricsSummary {
  bool partial = false;
  std::string partial_reason;
  SimTime duration = 0;
  std::map<std::string, double> availability;
  std::uint64_t injected = 0;
  std::map<std::string, std::uint64_t> by_kind;
  std::map<std::string, std::uint64_t> by_outcome;
  LatencyStats detection;
  LatencyStats recovery;
  std::map<std::string, double> overhead;
  std::uint64_t propagation_windows = 0;
  std::uint64_t suppressed_outputs = 0;
  std::uint64_t no_majority = 0;
  std::uint64_t masked_divergences = 0;
  std::uint64_t supervisor_commands = 0;
  std::uint64_t checkpoints = 0;
  bool loss_of_mission = false;
  /// Every injected fault has exactly one outcome.
  bool accounting_ok = true;

  std::uint64_t outcome(const std::string& name) const;
  Json to_json() const;
};

/// Derived from trace records only. A trace without its run-end record (or
/// flagged truncated by the reader) yields a partial summary.
MetricsSummary compute_metrics(const std::vector<TraceRecord>& trace, bool truncated = false);

std::string metrics_to_string(const MetricsSummary& m);

}  // namespace ftsim
