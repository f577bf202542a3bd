// SPDX-License-Identifier: Apache-2.0
#include "ftsim/metrics.hpp"

#include <algorithm>
#include <set>

namespace ftsim {

std::uint64_t MetricsSummary::outcome(const std::string& name) const {
  auto it = by_outcome.find(name);
  return it == by_outcome.end() ? 0 : it->second;
}

namespace {

Json latency_json(const LatencyStats& l) {
  Json j;
  j["count"] = l.count;
  j["mean"] = l.mean;
  j["max"] = l.max;
  return j;
}

struct Accum {
  std::uint64_t n = 0;
  long double sum = 0;
  SimTime max = 0;
  void add(SimTime v) {
    ++n;
    sum += v;
    max = std::max(max, v);
  }
  LatencyStats stats() const {
    LatencyStats s;
    s.count = n;
    s.mean = n ? static_cast<double>(sum / n) : 0.0;
    s.max = max;
    return s;
  }
};

}  // namespace

Json MetricsSummary::to_json() const {
  Json j;
  j["partial"] = partial;
  if (partial) j["partial_reason"] = partial_reason;
  j["duration"] = duration;
  j["loss_of_mission"] = loss_of_mission;
  j["availability"] = Json::object();
  for (const auto& [k, v] : availability) j["availability"][k] = v;
  Json f;
  f["injected"] = injected;
  f["by_kind"] = Json::object();
  for (const auto& [k, v] : by_kind) f["by_kind"][k] = v;
  f["by_outcome"] = Json::object();
  for (const char* o : kOutcomes) f["by_outcome"][o] = outcome(o);
  f["accounting_ok"] = accounting_ok;
  j["faults"] = f;
  j["detection_latency"] = latency_json(detection);
  j["recovery_latency"] = latency_json(recovery);
  j["overhead"] = Json::object();
  for (const auto& [k, v] : overhead) j["overhead"][k] = v;
  j["propagation_windows"] = propagation_windows;
  j["suppressed_outputs"] = suppressed_outputs;
  j["no_majority_outputs"] = no_majority;
  j["masked_divergences"] = masked_divergences;
  j["supervisor_commands"] = supervisor_commands;
  j["checkpoints"] = checkpoints;
  return j;
}

std::string metrics_to_string(const MetricsSummary& m) { return m.to_json().dump(2) + "\n"; }

MetricsSummary compute_metrics(const std::vector<TraceRecord>& trace, bool truncated) {
  MetricsSummary m;
  std::vector<std::string> tiles, threads;
  std::map<std::string, bool> up;
  std::map<std::string, SimTime> up_since, up_total;
  std::map<std::uint64_t, SimTime> injected_at;
  std::map<std::uint64_t, SimTime> detected_at;
  std::map<std::uint64_t, std::uint64_t> outcomes_per_fault;
  Accum detect, recover;
  // (group, index) -> start, participants
  struct Window {
    SimTime start = 0;
    std::vector<std::string> tiles;
  };
  std::map<std::pair<std::string, std::uint64_t>, Window> open;
  std::map<std::string, SimTime> busy;
  bool ended = false;
  SimTime end_at = 0;

  auto close_window = [&](const std::pair<std::string, std::uint64_t>& key, SimTime at) {
    auto it = open.find(key);
    if (it == open.end()) return;
    for (const auto& t : it->second.tiles) busy[t] += at - it->second.start;
    open.erase(it);
  };

  for (const auto& r : trace) {
    const auto& p = r.payload;
    end_at = std::max(end_at, r.at);
    if (r.kind == "run-start") {
      for (const auto& t : p.value("tiles", Json::array())) tiles.push_back(t.get<std::string>());
      for (const auto& t : p.value("threads", Json::array())) threads.push_back(t.get<std::string>());
    } else if (r.kind == "availability") {
      const auto th = p.at("thread").get<std::string>();
      const bool now_up = p.at("up").get<bool>();
      if (now_up && !up[th]) up_since[th] = r.at;
      if (!now_up && up[th]) up_total[th] += r.at - up_since[th];
      up[th] = now_up;
    } else if (r.kind == "fault-injected") {
      const auto id = p.at("fault").get<std::uint64_t>();
      injected_at[id] = r.at;
      ++m.injected;
      ++m.by_kind[p.at("kind").get<std::string>()];
    } else if (r.kind == "fault-detected") {
      const auto id = p.at("fault").get<std::uint64_t>();
      if (!detected_at.count(id)) {
        detected_at[id] = r.at;
        if (auto it = injected_at.find(id); it != injected_at.end()) detect.add(r.at - it->second);
      }
    } else if (r.kind == "fault-outcome") {
      const auto id = p.at("fault").get<std::uint64_t>();
      const auto outcome = p.at("outcome").get<std::string>();
      ++m.by_outcome[outcome];
      ++outcomes_per_fault[id];
      if (outcome == "corrected" || outcome == "replaced" || outcome == "repaired") {
        if (auto it = detected_at.find(id); it != detected_at.end()) recover.add(r.at - it->second);
      }
    } else if (r.kind == "checkpoint-start") {
      ++m.checkpoints;
      Window w;
      w.start = r.at;
      for (const auto& t : p.value("tiles", Json::array())) w.tiles.push_back(t.get<std::string>());
      open[{p.at("group").get<std::string>(), p.at("index").get<std::uint64_t>()}] = std::move(w);
    } else if (r.kind == "checkpoint-end" || r.kind == "checkpoint-abort") {
      close_window({p.at("group").get<std::string>(), p.at("index").get<std::uint64_t>()}, r.at);
    } else if (r.kind == "command") {
      ++m.supervisor_commands;
    } else if (r.kind == "output-vote") {
      m.propagation_windows += p.value("propagated", std::uint64_t{0});
      m.suppressed_outputs += p.value("suppressed", std::uint64_t{0});
      if (p.value("no_majority", false)) ++m.no_majority;
    } else if (r.kind == "masked-divergence") {
      ++m.masked_divergences;
    } else if (r.kind == "loss-of-mission") {
      m.loss_of_mission = true;
    } else if (r.kind == "run-end") {
      ended = true;
      if (p.value("loss_of_mission", false)) m.loss_of_mission = true;
    }
  }

  m.duration = end_at;
  std::vector<std::pair<std::string, std::uint64_t>> keys;
  for (const auto& [k, w] : open) keys.push_back(k);
  for (const auto& k : keys) close_window(k, end_at);

  for (const auto& th : threads) {
    SimTime total = up_total[th];
    if (up[th]) total += end_at - up_since[th];
    m.availability[th] = end_at ? static_cast<double>(total) / static_cast<double>(end_at) : 1.0;
  }
  for (const auto& t : tiles)
    m.overhead[t] = end_at ? static_cast<double>(busy[t]) / static_cast<double>(end_at) : 0.0;

  m.detection = detect.stats();
  m.recovery = recover.stats();

  std::uint64_t total = 0;
  for (const auto& [k, v] : m.by_outcome) total += v;
  m.accounting_ok = total == m.injected;
  for (const auto& [id, at] : injected_at) {
    auto it = outcomes_per_fault.find(id);
    if (it == outcomes_per_fault.end() || it->second != 1) m.accounting_ok = false;
  }
  if (truncated || !ended) {
    m.partial = true;
    m.partial_reason = truncated ? "trace truncated" : "run-end record missing";
  }
  return m;
}

}  // namespace ftsim
