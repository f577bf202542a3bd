// SPDX-License-Identifier: Apache-2.0
#include "ftsim/sim_engine.hpp"

namespace ftsim {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::TimerCheckpoint: return "timer-checkpoint";
    case EventKind::SupervisorCommand: return "supervisor-command";
    case EventKind::FaultArrival: return "fault-arrival";
    case EventKind::ReconfigurationDone: return "reconfiguration-done";
    case EventKind::TileRebootDone: return "tile-reboot-done";
    case EventKind::WatchdogExpiry: return "watchdog-expiry";
    case EventKind::CheckpointCompare: return "checkpoint-compare";
    case EventKind::CheckpointIngest: return "checkpoint-ingest";
    case EventKind::CheckpointResume: return "checkpoint-resume";
    case EventKind::SefiEnd: return "sefi-end";
    case EventKind::Horizon: return "horizon";
  }
  return "unknown";
}

PastTimeError::PastTimeError(SimTime requested, SimTime now)
    : std::invalid_argument("cannot schedule event at t=" + std::to_string(requested) +
                            " before current clock t=" + std::to_string(now)) {}

}  // namespace ftsim
