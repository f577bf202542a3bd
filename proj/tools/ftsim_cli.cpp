// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "ftsim/metrics.hpp"
#include "ftsim/scenario.hpp"
#include "ftsim/simulation.hpp"
#include "ftsim/sweep.hpp"
#include "ftsim/trace.hpp"

using namespace ftsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitLoss = 2;

struct RunArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<SimTime> until;
  std::string trace_out;
  std::string metrics_out;
  std::vector<std::string> overrides;
  bool quiet = false;
  bool fail_on_loss = false;
};

void add_scenario_flags(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("--scenario", a.scenario, "scenario file")->required();
  cmd->add_option("--seed", a.seed, "override the scenario seed");
  cmd->add_option("--until", a.until, "stop at this simulated time (us)");
  cmd->add_option("--set", a.overrides, "override a scenario field, key=value")->take_all()->expected(1);
  cmd->add_flag("--quiet", a.quiet, "suppress stdout summary");
}

bool write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    return false;
  }
  out << data;
  return static_cast<bool>(out);
}

struct Rendered {
  std::string trace;
  std::string metrics;
  bool loss = false;
};

Rendered render(const Scenario& sc, const RunArgs& a) {
  RunOptions opt;
  opt.seed = a.seed;
  opt.until = a.until;
  auto r = run_scenario(sc, opt);
  return {to_jsonl(r.trace), metrics_to_string(r.metrics) + "\n", r.metrics.loss_of_mission};
}

void report_problems(const ScenarioError& e) {
  for (const auto& p : e.problems()) std::cerr << p << "\n";
}

int cmd_run(const RunArgs& a) {
  const Scenario sc = load_scenario(a.scenario, a.overrides);
  const Rendered r = render(sc, a);
  if (!a.trace_out.empty() && !write_file(a.trace_out, r.trace)) return kExitInvalid;
  if (!a.metrics_out.empty() && !write_file(a.metrics_out, r.metrics)) return kExitInvalid;
  if (!a.quiet) std::cout << r.metrics;
  if (r.loss && a.fail_on_loss) return kExitLoss;
  return kExitOk;
}

int cmd_validate(const RunArgs& a) {
  const Scenario sc = load_scenario(a.scenario, a.overrides);
  if (!a.quiet)
    std::cout << a.scenario << ": ok (" << sc.tiles.size() << " tiles, " << sc.tile_groups.size()
              << " tile groups, " << sc.threads.size() << " threads)\n";
  return kExitOk;
}

int cmd_replay_check(const RunArgs& a, const std::string& golden_trace, const std::string& golden_metrics) {
  const Scenario sc = load_scenario(a.scenario, a.overrides);
  const Rendered first = render(sc, a);
  const Rendered second = render(sc, a);
  bool ok = true;
  auto check = [&](const std::string& what, const std::string& x, const std::string& y) {
    if (x == y) return;
    ok = false;
    std::size_t i = 0;
    while (i < x.size() && i < y.size() && x[i] == y[i]) ++i;
    const auto line = 1 + std::count(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(i), '\n');
    std::cerr << "replay-check: " << what << " differs at byte " << i << " (line " << line << ")\n";
  };
  check("trace", first.trace, second.trace);
  check("metrics", first.metrics, second.metrics);
  auto slurp = [](const std::string& path, std::string& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::ostringstream ss;
    ss << in.rdbuf();
    out = ss.str();
    return true;
  };
  for (const auto& [path, what, mine] : {std::tuple{golden_trace, "golden trace", first.trace},
                                         std::tuple{golden_metrics, "golden metrics", first.metrics}}) {
    if (path.empty()) continue;
    std::string data;
    if (!slurp(path, data)) {
      std::cerr << "error: cannot read " << path << "\n";
      return kExitInvalid;
    }
    check(what, data, mine);
  }
  // metrics must be recomputable from the emitted trace alone
  std::istringstream tin(first.trace);
  const auto parsed = read_jsonl(tin);
  check("recomputed metrics", first.metrics, metrics_to_string(compute_metrics(parsed.records, parsed.truncated)) + "\n");
  if (!a.trace_out.empty() && !write_file(a.trace_out, first.trace)) return kExitInvalid;
  if (!a.metrics_out.empty() && !write_file(a.metrics_out, first.metrics)) return kExitInvalid;
  if (!a.quiet)
    std::cout << "replay-check " << (ok ? "ok" : "FAILED") << ": " << a.scenario << " ("
              << std::count(first.trace.begin(), first.trace.end(), '\n') << " records)\n";
  return ok ? kExitOk : kExitInvalid;
}

int cmd_metrics(const std::string& trace_path, const std::string& metrics_out, bool quiet) {
  std::ifstream in(trace_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open trace " << trace_path << "\n";
    return kExitInvalid;
  }
  const auto parsed = read_jsonl(in);
  if (parsed.truncated) std::cerr << "warning: " << parsed.error << "\n";
  const std::string m = metrics_to_string(compute_metrics(parsed.records, parsed.truncated)) + "\n";
  if (!metrics_out.empty() && !write_file(metrics_out, m)) return kExitInvalid;
  if (!quiet) std::cout << m;
  return kExitOk;
}

int cmd_sweep(const RunArgs& a, const std::vector<std::string>& grid, std::vector<std::uint64_t> seeds,
              unsigned jobs, const std::string& csv_out) {
  std::vector<SweepAxis> axes;
  for (const auto& g : grid) axes.push_back(parse_axis(g));
  const ScenarioSource src = read_source(a.scenario);
  if (seeds.empty()) seeds.push_back(a.seed.value_or(compile_scenario(src, a.overrides).seed));
  const auto rows = sweep(src, a.overrides, axes, seeds, jobs);
  const std::string csv = sweep_to_csv(axes, rows);
  if (!csv_out.empty() && !write_file(csv_out, csv)) return kExitInvalid;
  if (!a.quiet) std::cout << csv;
  bool loss = false;
  for (const auto& r : rows) loss = loss || r.metrics.loss_of_mission;
  return loss && a.fail_on_loss ? kExitLoss : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ftsim: fault-tolerant tiled MPSoC simulator"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "run a scenario to its horizon");
  add_scenario_flags(run, run_args);
  run->add_option("--trace-out", run_args.trace_out, "write JSON-lines trace");
  run->add_option("--metrics-out", run_args.metrics_out, "write metrics JSON");
  run->add_flag("--fail-on-loss", run_args.fail_on_loss, "exit 2 on loss of mission");

  RunArgs sweep_args;
  std::vector<std::string> grid;
  std::vector<std::uint64_t> seeds;
  unsigned jobs = 1;
  std::string csv_out;
  auto* sw = app.add_subcommand("sweep", "run a parameter grid over seeds");
  sw->add_option("--scenario", sweep_args.scenario, "scenario file")->required();
  sw->add_option("--grid", grid, "axis as path=v1,v2,...")->take_all()->expected(1);
  sw->add_option("--seeds", seeds, "seeds, comma separated")->delimiter(',');
  sw->add_option("--seed", sweep_args.seed, "single seed when --seeds is absent");
  sw->add_option("--set", sweep_args.overrides, "override a scenario field, key=value")->take_all()->expected(1);
  sw->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1u, 256u));
  sw->add_option("--csv-out", csv_out, "write the result table as CSV");
  sw->add_flag("--quiet", sweep_args.quiet, "suppress stdout table");
  sw->add_flag("--fail-on-loss", sweep_args.fail_on_loss, "exit 2 if any cell lost the mission");

  std::string trace_in, metrics_out;
  bool metrics_quiet = false;
  auto* met = app.add_subcommand("metrics", "recompute metrics from a trace");
  met->add_option("--trace", trace_in, "JSON-lines trace")->required();
  met->add_option("--metrics-out", metrics_out, "write metrics JSON");
  met->add_flag("--quiet", metrics_quiet, "suppress stdout");

  RunArgs val_args;
  auto* val = app.add_subcommand("validate", "lint a scenario");
  add_scenario_flags(val, val_args);

  RunArgs rc_args;
  std::string golden_trace, golden_metrics;
  auto* rc = app.add_subcommand("replay-check", "run twice and byte-compare trace and metrics");
  add_scenario_flags(rc, rc_args);
  rc->add_option("--trace-out", rc_args.trace_out, "write JSON-lines trace");
  rc->add_option("--metrics-out", rc_args.metrics_out, "write metrics JSON");
  rc->add_option("--golden-trace", golden_trace, "also compare against this trace file");
  rc->add_option("--golden-metrics", golden_metrics, "also compare against this metrics file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*sw) return cmd_sweep(sweep_args, grid, seeds, jobs, csv_out);
    if (*met) return cmd_metrics(trace_in, metrics_out, metrics_quiet);
    if (*val) return cmd_validate(val_args);
    if (*rc) return cmd_replay_check(rc_args, golden_trace, golden_metrics);
  } catch (const ScenarioError& e) {
    report_problems(e);
    return kExitInvalid;
  } catch (const SweepError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}
