// SPDX-License-Identifier: Apache-2.0
#include "ftsim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "ftsim/simulation.hpp"

namespace ftsim {

namespace {

std::string format_value(double v) {
  if (std::floor(v) == v && std::fabs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  std::ostringstream o;
  o.precision(10);
  o << v;
  return o.str();
}

std::string format_double(double v) {
  std::ostringstream o;
  o.precision(9);
  o << v;
  return o.str();
}

}  // namespace

SweepAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw SweepError("grid axis '" + spec + "': expected path=v1,v2,...");
  SweepAxis a;
  a.path = spec.substr(0, eq);
  std::stringstream ss(spec.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      a.values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw SweepError("grid axis '" + a.path + "': value '" + item + "' is not numeric");
    }
  }
  if (a.values.empty()) throw SweepError("grid axis '" + a.path + "': no values");
  return a;
}

std::vector<SweepRow> sweep(const ScenarioSource& src, const std::vector<std::string>& overrides,
                            const std::vector<SweepAxis>& axes, const std::vector<std::uint64_t>& seeds,
                            unsigned workers) {
  Json base = src.doc;
  for (const auto& o : overrides) apply_override(base, o);
  for (const auto& a : axes) {
    const Json* v = find_path(base, a.path);
    if (!v) throw SweepError("grid axis '" + a.path + "': no such field in scenario");
    if (!v->is_number()) throw SweepError("grid axis '" + a.path + "': field is not numeric");
    if (a.values.empty()) throw SweepError("grid axis '" + a.path + "': no values");
  }

  std::vector<std::vector<double>> points{{}};
  for (const auto& a : axes) {
    std::vector<std::vector<double>> next;
    for (const auto& p : points)
      for (double v : a.values) {
        auto q = p;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }

  std::vector<Scenario> scenarios;
  for (const auto& p : points) {
    std::vector<std::string> ov = overrides;
    for (std::size_t i = 0; i < axes.size(); ++i) {
      const Json* cur = find_path(base, axes[i].path);
      const bool integral = cur->is_number_integer() || cur->is_number_unsigned();
      if (integral && std::floor(p[i]) != p[i])
        throw SweepError("grid axis '" + axes[i].path + "': field is integral, value " + format_value(p[i]));
      ov.push_back(axes[i].path + "=" + format_value(p[i]));
    }
    scenarios.push_back(compile_scenario(src, ov));
  }

  const std::size_t cells = points.size() * seeds.size();
  std::vector<SweepRow> rows(cells);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (;;) {
      const std::size_t c = next++;
      if (c >= cells) return;
      try {
        const std::size_t pi = c / seeds.size();
        RunOptions opt;
        opt.seed = seeds[c % seeds.size()];
        auto r = run_scenario(scenarios[pi], opt);
        rows[c].point = points[pi];
        rows[c].seed = *opt.seed;
        rows[c].metrics = std::move(r.metrics);
      } catch (...) {
        std::lock_guard lk(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, cells))));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < workers; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepAxis>& axes, const std::vector<SweepRow>& rows) {
  std::ostringstream o;
  for (const auto& a : axes) o << a.path << ',';
  o << "seed,injected";
  for (const char* k : kOutcomes) o << ',' << k;
  o << ",detection_mean,detection_max,recovery_mean,recovery_max,overhead_mean,min_availability,"
       "checkpoints,supervisor_commands,propagation_windows,loss_of_mission\n";
  for (const auto& r : rows) {
    for (double v : r.point) o << format_value(v) << ',';
    const auto& m = r.metrics;
    o << r.seed << ',' << m.injected;
    for (const char* k : kOutcomes) o << ',' << m.outcome(k);
    double ov = 0.0;
    for (const auto& [t, f] : m.overhead) ov += f;
    if (!m.overhead.empty()) ov /= static_cast<double>(m.overhead.size());
    double av = 1.0;
    for (const auto& [t, a] : m.availability) av = std::min(av, a);
    o << ',' << format_double(m.detection.mean) << ',' << m.detection.max << ','
      << format_double(m.recovery.mean) << ',' << m.recovery.max << ',' << format_double(ov) << ','
      << format_double(av) << ',' << m.checkpoints << ',' << m.supervisor_commands << ','
      << m.propagation_windows << ',' << (m.loss_of_mission ? 1 : 0) << '\n';
  }
  return o.str();
}

}  // namespace ftsim
