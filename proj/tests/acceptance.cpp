// SPDX-License-Identifier: Apache-2.0
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ftsim/simulation.hpp"
#include "ftsim/sweep.hpp"
#include "realloc_oracle.hpp"

using namespace ftsim;

namespace {

using Clock = std::chrono::steady_clock;
using Ids = std::vector<std::string>;

std::string scenario_path(const std::string& name) {
  return std::string(FTSIM_SCENARIO_DIR) + "/" + name + ".scenario";
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Collects the first problem found; a criterion passes when none was recorded.
struct Check {
  std::string problem;
  bool ok() const { return problem.empty(); }
  void require(bool cond, const std::string& what) {
    if (!cond && problem.empty()) problem = what;
  }
};

const TraceRecord* first(const std::vector<TraceRecord>& t, const std::string& kind, const std::string& key,
                         const Json& value) {
  for (const auto& r : t)
    if (r.kind == kind && r.payload.contains(key) && r.payload.at(key) == value) return &r;
  return nullptr;
}

std::vector<const TraceRecord*> all(const std::vector<TraceRecord>& t, const std::string& kind) {
  std::vector<const TraceRecord*> out;
  for (const auto& r : t)
    if (r.kind == kind) out.push_back(&r);
  return out;
}

bool accounting_ok(const RunStats& s) {
  std::uint64_t total = 0;
  for (const auto& [k, v] : s.outcomes) total += v;
  return total == s.injected;
}

// Fast three-member group without spares and with a transient threshold
// that is never reached, so a single state upset is corrected in place.
std::vector<std::string> single_fault_overrides() {
  return {"horizon=5000",
          "spares=[]",
          "faults.events=[]",
          "threads.0.state_words=4",
          "threads.1.state_words=4",
          "threads.0.work_per_tick=100",
          "threads.1.work_per_tick=100",
          "supervisor.defunct_threshold=1000001",
          "supervisor.transient_threshold=1000000"};
}

// 1: fig3 walk-through, replay determinism, wall time.
void criterion1(Check& c) {
  const Scenario sc = load_scenario(scenario_path("fig3"));
  std::vector<std::string> traces;
  RunResult r;
  for (int i = 0; i < 3; ++i) {
    const auto t0 = Clock::now();
    r = run_scenario(sc);
    const double dt = seconds_since(t0);
    c.require(dt < 1.0, "fig3 run took " + std::to_string(dt) + " s");
    traces.push_back(to_jsonl(r.trace));
  }
  c.require(traces[0] == traces[1] && traces[1] == traces[2], "fig3 traces differ between runs");
  const auto& t = r.trace;
  std::map<std::string, Json> reports;
  for (const auto* rep : all(t, "checkpoint-report"))
    if (rep->payload.at("index") == 2) reports[rep->payload.at("tile")] = rep->payload.at("verdicts");
  c.require(reports["C0"] == Json::parse(R"([["C1","agree"],["C2","disagree"]])"), "C0 report at cycle 2");
  c.require(reports["C1"] == Json::parse(R"([["C2","disagree"]])"), "C1 report at cycle 2");
  c.require(reports["C2"] == Json::parse(R"([["C0","disagree"]])"), "C2 report at cycle 2");
  const auto* verdict = first(t, "verdict", "index", 2);
  c.require(verdict && verdict->payload.at("faulty") == Json::array({"C2"}), "C2 not judged faulty at cycle 2");
  const auto* act = first(t, "command", "command", "activate-with-mapping");
  c.require(act && act->payload.at("tile") == "C3", "spare C3 not activated");
  const auto* upd = first(t, "update", "tile", "C3");
  c.require(upd && verdict && verdict->at < upd->at, "C3 not updated after the verdict");
  const auto* next = first(t, "verdict", "index", 3);
  c.require(next && next->payload.at("kind") == "all-agree" &&
                next->payload.at("majority") == Json::array({"C0", "C1", "C3"}),
            "cycle 3 is not all-agree on C0, C1, C3");
  c.require(r.metrics.outcome("replaced") == 1 && r.metrics.accounting_ok, "fault not accounted as replaced");
}

// 2: fig6 stage-3 reallocation.
void criterion2(Check& c) {
  const auto t0 = Clock::now();
  const auto r = run_scenario(load_scenario(scenario_path("fig6")));
  const double dt = seconds_since(t0);
  c.require(dt < 1.0, "fig6 run took " + std::to_string(dt) + " s");
  const auto plans = all(r.trace, "stage3-plan");
  c.require(plans.size() == 1, "expected one stage-3 plan");
  if (!c.ok()) return;
  std::map<std::string, Json> groups;
  for (const auto& g : plans[0]->payload.at("groups")) groups[g.at("thread_group")] = g;
  c.require(groups["TG_c"].value("tiles", Json()) == Json::array({"C2", "C3", "C4"}), "TG_c not on C2, C3, C4");
  c.require(groups["TG_d"].value("detect_only", false), "TG_d not detect-only");
  c.require(plans[0]->payload.at("priority_dominance").get<bool>(), "priority dominance violated");
  const auto adj = all(r.trace, "timer-adjust");
  c.require(!adj.empty() && adj[0]->payload.at("tile") == "C2", "no timer adjustment on C2");
  c.require(!r.metrics.loss_of_mission && r.metrics.accounting_ok, "fig6 loss of mission or accounting");
}

// 3: every single-word, single-bit transient in a three-member group is
// detected at the first checkpoint after it and corrected within two.
void criterion3(Check& c, std::size_t& cases) {
  const auto t0 = Clock::now();
  const Scenario sc = load_scenario(scenario_path("fig3"), single_fault_overrides());
  for (SimTime at = 1001; at < 3000; at += 97) {
    for (const auto& tile : {"C0", "C1", "C2"}) {
      for (const auto& th : sc.threads) {
        for (std::size_t w = 0; w < th.state_words; ++w) {
          for (unsigned bit = 0; bit < 64; ++bit) {
            ++cases;
            Simulation sim(sc);
            FaultEvent ev;
            ev.at = at;
            ev.kind = FaultKind::TransientState;
            ev.tile = tile;
            ev.thread = th.thread_id;
            ev.flips = {{w, std::uint64_t{1} << bit}};
            const auto id = sim.inject(ev);
            sim.run();
            const auto& t = sim.trace().records();
            const std::string label = std::string(tile) + "/" + th.thread_id + " word " + std::to_string(w) +
                                      " bit " + std::to_string(bit) + " at " + std::to_string(at);
            const TraceRecord* start = nullptr;
            for (const auto& r : t)
              if (r.kind == "checkpoint-start" && r.at >= at) {
                start = &r;
                break;
              }
            c.require(start != nullptr, label + ": no checkpoint after the fault");
            if (!c.ok()) return;
            const auto k = start->payload.at("index").get<std::uint64_t>();
            const auto* det = first(t, "fault-detected", "fault", id);
            c.require(det && det->payload.at("index") == k, label + ": not detected at checkpoint " + std::to_string(k));
            const auto* out = first(t, "fault-outcome", "fault", id);
            c.require(out && out->payload.at("outcome") == "corrected", label + ": not corrected");
            const auto* k2 = first(t, "checkpoint-start", "index", k + 2);
            c.require(out && (!k2 || out->at < k2->at), label + ": correction later than two checkpoints");
            const auto* v1 = first(t, "verdict", "index", k + 1);
            c.require(v1 && v1->payload.at("kind") == "all-agree", label + ": next verdict not all-agree");
            c.require(accounting_ok(sim.stats()) && sim.stats().masked_divergences == 0, label + ": accounting");
            if (!c.ok()) return;
          }
        }
      }
    }
  }
  const double dt = seconds_since(t0);
  c.require(dt < 60.0, "exhaustive sweep took " + std::to_string(dt) + " s");
}

// 4: Monte Carlo over random single transients.
void criterion4(Check& c, std::size_t trials) {
  const auto t0 = Clock::now();
  const Scenario sc = load_scenario(scenario_path("fig3"), single_fault_overrides());
  RandomStream rng(2024, "acceptance-monte-carlo");
  const Ids tiles{"C0", "C1", "C2"};
  std::uint64_t undetected = 0, masked = 0;
  RunOptions o;
  o.keep_trace = false;
  for (std::size_t i = 0; i < trials; ++i) {
    Simulation sim(sc, o);
    const auto& th = sc.threads[rng.uniform_range(0, sc.threads.size() - 1)];
    FaultEvent ev;
    ev.at = rng.uniform_range(1, 2999);
    ev.kind = FaultKind::TransientState;
    ev.tile = tiles[rng.uniform_range(0, tiles.size() - 1)];
    ev.thread = th.thread_id;
    ev.flips = {{rng.uniform_range(0, th.state_words - 1), random_mask(rng)}};
    sim.inject(ev);
    sim.run();
    const auto& s = sim.stats();
    if (auto it = s.outcomes.find("undetected"); it != s.outcomes.end()) undetected += it->second;
    masked += s.masked_divergences;
    c.require(accounting_ok(s) && s.injected == 1, "trial " + std::to_string(i) + ": accounting");
  }
  c.require(undetected == 0, std::to_string(undetected) + " undetected faults");
  c.require(masked == 0, std::to_string(masked) + " masked divergences");
  const double dt = seconds_since(t0);
  c.require(dt < 300.0, "Monte Carlo took " + std::to_string(dt) + " s");
}

// 5: fault-free overhead follows T / (T + P) and falls with the period.
void criterion5(Check& c) {
  const std::vector<double> periods{1000, 2000, 4000, 8000};
  const auto axis = parse_axis("tile_groups.0.base_period=1000,2000,4000,8000");
  const auto src = read_source(scenario_path("fig3"));
  const auto rows = sweep(src, {"faults.events=[]", "horizon=1600000"}, {axis}, {1}, 4);
  c.require(rows.size() == periods.size(), "wrong number of sweep rows");
  if (!c.ok()) return;
  const Scenario sc = load_scenario(scenario_path("fig3"));
  ThreadGroupMap tgs;
  ThreadGroup tg{"TG", {}};
  for (const auto& th : sc.threads) tg.threads.push_back(std::make_shared<ThreadSpec>(th));
  tgs.emplace("TG", tg);
  TileGroup g;
  g.thread_groups = {"TG"};
  g.comparison_deadline = sc.tile_groups[0].comparison_deadline;
  const double ck = static_cast<double>(analytic_checkpoint_time(g, tgs, 0, sc.context_switch));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double want = ck / (ck + periods[i]);
    for (const char* tile : {"C0", "C1", "C2"}) {
      const double got = rows[i].metrics.overhead.at(tile);
      c.require(std::abs(got - want) <= 0.01 * want, std::string(tile) + " overhead " + std::to_string(got) +
                                                         " vs " + std::to_string(want) + " at P=" +
                                                         std::to_string(periods[i]));
    }
    if (i > 0)
      c.require(rows[i].metrics.overhead.at("C0") < rows[i - 1].metrics.overhead.at("C0"),
                "overhead not strictly decreasing");
  }
}

// 6: spare-pool exhaustion, repair and escalation.
void criterion6(Check& c) {
  const auto r = run_scenario(load_scenario(scenario_path("exhaustion")));
  c.require(r.metrics.outcome("repaired") == 1, "exhaustion fault not repaired");
  c.require(first(r.trace, "spare-returned", "tile", "C2") != nullptr, "C2 not returned to the spare pool");
  c.require(all(r.trace, "stage3-plan").empty(), "unexpected stage 3");
  const auto bad = run_scenario(load_scenario(scenario_path("exhaustion"), {"faults.events.0.cell=0"}));
  c.require(all(bad.trace, "repair-exhausted").size() == 1, "repair of anchor damage not exhausted");
  const auto plans = all(bad.trace, "stage3-plan");
  c.require(plans.size() == 1 && plans[0]->payload.at("priority_dominance").get<bool>(),
            "stage 3 missing or priority dominance violated");
  c.require(r.metrics.accounting_ok && bad.metrics.accounting_ok, "exhaustion accounting");
}

// 7: greedy reallocation against an exhaustive oracle.
void criterion7(Check& c, std::size_t instances) {
  const auto t0 = Clock::now();
  RandomStream rng(11, "acceptance-realloc");
  CriticalityPolicy policy;
  for (std::size_t i = 0; i < instances; ++i) {
    const auto m = ftsim::test::random_instance(rng, 4, 4);
    const auto plan = reallocate(m, policy);
    const auto got = fully_replicated_high(plan, policy);
    const auto want = ftsim::test::oracle_max_full_high(m, policy);
    c.require(got == want, "instance " + std::to_string(i) + ": greedy " + std::to_string(got) + ", oracle " +
                               std::to_string(want));
    c.require(priority_dominance_holds(plan, m, policy), "instance " + std::to_string(i) + ": dominance");
    if (!c.ok()) return;
  }
  const double dt = seconds_since(t0);
  c.require(dt < 60.0, "reallocation check took " + std::to_string(dt) + " s");
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FTSIM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 8: replay determinism through the CLI and fault accounting on every bundled scenario.
void criterion8(Check& c) {
  for (const char* name : {"fig3", "fig6", "exhaustion", "storm"}) {
    const int code = run_cli("replay-check --quiet --scenario " + scenario_path(name));
    c.require(code == 0, std::string("replay-check ") + name + " exited " + std::to_string(code));
    const auto r = run_scenario(load_scenario(scenario_path(name)));
    c.require(r.metrics.accounting_ok, std::string(name) + ": accounting");
  }
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RunOptions o;
    o.seed = seed;
    const auto r = run_scenario(load_scenario(scenario_path("storm")), o);
    c.require(r.metrics.accounting_ok, "storm seed " + std::to_string(seed) + ": accounting");
  }
}

}  // namespace

int main() {
  bool all_ok = true;
  auto report = [&](int n, const std::string& what, const std::function<void(Check&)>& fn) {
    Check c;
    const auto t0 = Clock::now();
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.2f", seconds_since(t0));
    all_ok = all_ok && c.ok();
    std::cout << "criterion " << n << ": " << (c.ok() ? "PASS" : "FAIL") << " - " << what << " (" << secs << " s)";
    if (!c.ok()) std::cout << ": " << c.problem;
    std::cout << std::endl;
  };
  report(1, "fig3 recovery sequence, byte-identical replays", criterion1);
  report(2, "fig6 reallocation plan", criterion2);
  std::size_t cases = 0;
  report(3, "exhaustive single transients detected and corrected", [&](Check& c) { criterion3(c, cases); });
  report(4, "100000 Monte Carlo transients, none undetected or masked", [](Check& c) { criterion4(c, 100000); });
  report(5, "fault-free overhead matches the analytic formula", criterion5);
  report(6, "spare exhaustion repair and stage-3 escalation", criterion6);
  report(7, "greedy reallocation matches the exhaustive oracle", [](Check& c) { criterion7(c, 20000); });
  report(8, "replay-check and fault accounting on bundled scenarios", criterion8);
  std::cout << "exhaustive cases: " << cases << std::endl;
  return all_ok ? 0 : 1;
}
