// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace ftsim {

/// Simulated time in microseconds. Integer ticks only; the clock never drifts.
using SimTime = std::uint64_t;

inline constexpr SimTime kNever = ~SimTime{0};

enum class EventKind {
  TimerCheckpoint,
  SupervisorCommand,
  FaultArrival,
  ReconfigurationDone,
  TileRebootDone,
  WatchdogExpiry,
  // internal checkpoint phases
  CheckpointCompare,
  CheckpointIngest,
  CheckpointResume,
  SefiEnd,
  Horizon,
};

const char* to_string(EventKind kind);

class PastTimeError : public std::invalid_argument {
 public:
  PastTimeError(SimTime requested, SimTime now);
};

struct EventHandle {
  std::uint64_t seq = 0;
  friend bool operator==(EventHandle, EventHandle) = default;
};

template <class Payload>
struct Event {
  SimTime fire_at = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::TimerCheckpoint;
  Payload payload{};
};

/// Ordered event queue with a virtual clock. Events at equal times dispatch in
/// insertion order, which makes replays bit-exact.
template <class Payload>
class EventQueue {
 public:
  SimTime now() const { return clock_; }
  bool empty() const { return pending_.empty(); }
  std::size_t pending() const { return pending_.size(); }

  EventHandle schedule(SimTime fire_at, EventKind kind, Payload payload) {
    if (fire_at < clock_) throw PastTimeError(fire_at, clock_);
    const std::uint64_t seq = next_seq_++;
    heap_.push(Event<Payload>{fire_at, seq, kind, std::move(payload)});
    pending_.insert(seq);
    return EventHandle{seq};
  }

  /// Cancelling an already-dispatched or unknown handle is a no-op.
  void cancel(EventHandle handle) {
    if (pending_.erase(handle.seq)) cancelled_.insert(handle.seq);
  }

  /// Pops the earliest live event and moves the clock to its time.
  /// Returns nullopt at end of simulation; the clock is left unchanged.
  std::optional<Event<Payload>> advance() {
    while (!heap_.empty()) {
      Event<Payload> ev = heap_.top();
      heap_.pop();
      if (auto it = cancelled_.find(ev.seq); it != cancelled_.end()) {
        cancelled_.erase(it);
        continue;
      }
      pending_.erase(ev.seq);
      clock_ = ev.fire_at;
      return ev;
    }
    return std::nullopt;
  }

  std::optional<SimTime> peek_time() {
    while (!heap_.empty() && cancelled_.count(heap_.top().seq)) {
      cancelled_.erase(heap_.top().seq);
      heap_.pop();
    }
    if (heap_.empty()) return std::nullopt;
    return heap_.top().fire_at;
  }

 private:
  struct Later {
    bool operator()(const Event<Payload>& a, const Event<Payload>& b) const {
      if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
      return a.seq > b.seq;
    }
  };

  SimTime clock_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Event<Payload>, std::vector<Event<Payload>>, Later> heap_;
  std::unordered_set<std::uint64_t> cancelled_;
  std::unordered_set<std::uint64_t> pending_;
};

}  // namespace ftsim
