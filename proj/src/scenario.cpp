// SPDX-License-Identifier: Apache-2.0
#include "ftsim/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ftsim/ids.hpp"

namespace ftsim {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string s;
  for (const auto& p : problems) {
    if (!s.empty()) s += '\n';
    s += p;
  }
  return s;
}

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

std::string pointer_to_dotted(const std::string& ptr) {
  if (ptr.empty()) return "(root)";
  std::string s = ptr.substr(1);
  std::replace(s.begin(), s.end(), '/', '.');
  return s;
}

// Structural scanner: only records where each value starts.
class Scanner {
 public:
  Scanner(std::string_view text, std::map<std::string, int>& out) : t_(text), out_(out) {}

  void run() {
    ws();
    value("");
  }

 private:
  void ws() {
    while (p_ < t_.size() && std::isspace(static_cast<unsigned char>(t_[p_]))) {
      if (t_[p_] == '\n') ++line_;
      ++p_;
    }
  }

  bool string(std::string* out) {
    if (p_ >= t_.size() || t_[p_] != '"') return false;
    ++p_;
    while (p_ < t_.size() && t_[p_] != '"') {
      if (t_[p_] == '\\' && p_ + 1 < t_.size()) {
        if (out) out->push_back(t_[p_ + 1]);
        p_ += 2;
        continue;
      }
      if (t_[p_] == '\n') ++line_;
      if (out) out->push_back(t_[p_]);
      ++p_;
    }
    if (p_ >= t_.size()) return false;
    ++p_;
    return true;
  }

  bool value(const std::string& ptr) {
    if (p_ >= t_.size()) return false;
    out_.emplace(ptr, line_);
    const char c = t_[p_];
    if (c == '{') {
      ++p_;
      ws();
      if (p_ < t_.size() && t_[p_] == '}') {
        ++p_;
        return true;
      }
      while (p_ < t_.size()) {
        ws();
        std::string key;
        if (!string(&key)) return false;
        ws();
        if (p_ >= t_.size() || t_[p_] != ':') return false;
        ++p_;
        ws();
        if (!value(ptr + "/" + escape_token(key))) return false;
        ws();
        if (p_ < t_.size() && t_[p_] == ',') {
          ++p_;
          continue;
        }
        if (p_ < t_.size() && t_[p_] == '}') {
          ++p_;
          return true;
        }
        return false;
      }
      return false;
    }
    if (c == '[') {
      ++p_;
      ws();
      if (p_ < t_.size() && t_[p_] == ']') {
        ++p_;
        return true;
      }
      for (std::size_t i = 0; p_ < t_.size(); ++i) {
        ws();
        if (!value(ptr + "/" + std::to_string(i))) return false;
        ws();
        if (p_ < t_.size() && t_[p_] == ',') {
          ++p_;
          continue;
        }
        if (p_ < t_.size() && t_[p_] == ']') {
          ++p_;
          return true;
        }
        return false;
      }
      return false;
    }
    if (c == '"') return string(nullptr);
    while (p_ < t_.size() && !std::isspace(static_cast<unsigned char>(t_[p_])) && t_[p_] != ',' &&
           t_[p_] != ']' && t_[p_] != '}')
      ++p_;
    return true;
  }

  std::string_view t_;
  std::map<std::string, int>& out_;
  std::size_t p_ = 0;
  int line_ = 1;
};

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

const ThreadSpec* Scenario::thread(const std::string& id) const {
  for (const auto& t : threads)
    if (t.thread_id == id) return &t;
  return nullptr;
}

const TileConfig* Scenario::tile(const std::string& id) const {
  for (const auto& t : tiles)
    if (t.id == id) return &t;
  return nullptr;
}

LineIndex::LineIndex(std::string_view text) { Scanner(text, lines_).run(); }

int LineIndex::line_of(const std::string& pointer) const {
  std::string p = pointer;
  while (true) {
    auto it = lines_.find(p);
    if (it != lines_.end()) return it->second;
    if (p.empty()) return 0;
    p.erase(p.rfind('/'));
  }
}

int LineIndex::line_at_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + offset, '\n'));
}

ScenarioSource parse_source(std::string text, std::string origin, std::string base_dir) {
  ScenarioSource src;
  src.origin = std::move(origin);
  src.base_dir = std::move(base_dir);
  src.text = std::move(text);
  try {
    src.doc = Json::parse(src.text);
  } catch (const nlohmann::json::parse_error& e) {
    const int line = LineIndex::line_at_offset(src.text, e.byte > 0 ? e.byte - 1 : 0);
    throw ScenarioError({src.origin + ":" + std::to_string(line) + ": syntax error: " + e.what()});
  }
  if (!src.doc.is_object())
    throw ScenarioError({src.origin + ":1: scenario must be a JSON object"});
  src.lines = LineIndex(src.text);
  return src;
}

ScenarioSource read_source(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError({path + ": cannot open scenario file"});
  std::ostringstream ss;
  ss << in.rdbuf();
  auto dir = std::filesystem::path(path).parent_path().string();
  return parse_source(ss.str(), path, dir.empty() ? "." : dir);
}

std::string dotted_to_pointer(const std::string& dotted) {
  std::string out;
  std::string part;
  std::istringstream is(dotted);
  while (std::getline(is, part, '.')) out += "/" + escape_token(part);
  return out;
}

namespace {

bool is_index(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::vector<std::string> split_dotted(const std::string& dotted) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream is(dotted);
  while (std::getline(is, part, '.')) parts.push_back(part);
  return parts;
}

}  // namespace

const Json* find_path(const Json& doc, const std::string& dotted) {
  const Json* cur = &doc;
  for (const auto& part : split_dotted(dotted)) {
    if (cur->is_object()) {
      auto it = cur->find(part);
      if (it == cur->end()) return nullptr;
      cur = &*it;
    } else if (cur->is_array() && is_index(part)) {
      const auto i = std::stoul(part);
      if (i >= cur->size()) return nullptr;
      cur = &(*cur)[i];
    } else {
      return nullptr;
    }
  }
  return cur;
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ScenarioError({"--set " + assignment + ": expected key=value"});
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  Json* cur = &doc;
  const auto parts = split_dotted(key);
  if (parts.empty()) throw ScenarioError({"--set " + assignment + ": empty key"});
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& part = parts[i];
    const bool last = i + 1 == parts.size();
    if (cur->is_array()) {
      if (!is_index(part) || std::stoul(part) >= cur->size())
        throw ScenarioError({"--set " + key + ": no element '" + part + "'"});
      cur = &(*cur)[std::stoul(part)];
    } else if (cur->is_object() || cur->is_null()) {
      if (last) {
        (*cur)[part] = value;
        return;
      }
      cur = &(*cur)[part];
    } else {
      throw ScenarioError({"--set " + key + ": '" + part + "' is not inside an object or array"});
    }
    if (last) *cur = value;
  }
}

namespace {

class Checker {
 public:
  Checker(const ScenarioSource& src, std::set<std::string> overridden)
      : src_(src), overridden_(std::move(overridden)) {}

  void err(const std::string& ptr, const std::string& msg) {
    std::string where;
    for (const auto& o : overridden_) {
      if (ptr == o || ptr.rfind(o + "/", 0) == 0) {
        where = "--set " + pointer_to_dotted(o);
        break;
      }
    }
    if (where.empty()) where = src_.origin + ":" + std::to_string(src_.lines.line_of(ptr));
    problems_.push_back(where + ": " + pointer_to_dotted(ptr) + ": " + msg);
  }

  const std::vector<std::string>& problems() const { return problems_; }

  void keys(const Json& obj, const std::string& ptr, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
      err(ptr, "expected an object");
      return;
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || it.key() == a;
      if (!ok) err(ptr + "/" + escape_token(it.key()), "unknown key '" + it.key() + "'");
    }
  }

  std::uint64_t uint(const Json& obj, const std::string& ptr, const char* key, std::uint64_t def,
                     bool required = false) {
    auto it = obj.find(key);
    const std::string p = ptr + "/" + key;
    if (it == obj.end()) {
      if (required) err(ptr, std::string("missing required key '") + key + "'");
      return def;
    }
    if (it->is_number_unsigned()) return it->get<std::uint64_t>();
    if (it->is_number_integer()) {
      err(p, "must be non-negative");
      return def;
    }
    err(p, "expected a non-negative integer");
    return def;
  }

  double number(const Json& obj, const std::string& ptr, const char* key, double def) {
    auto it = obj.find(key);
    if (it == obj.end()) return def;
    if (it->is_number()) return it->get<double>();
    err(ptr + "/" + key, "expected a number");
    return def;
  }

  bool boolean(const Json& obj, const std::string& ptr, const char* key, bool def) {
    auto it = obj.find(key);
    if (it == obj.end()) return def;
    if (it->is_boolean()) return it->get<bool>();
    err(ptr + "/" + key, "expected true or false");
    return def;
  }

  std::string str(const Json& obj, const std::string& ptr, const char* key, std::string def,
                  bool required = false) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) err(ptr, std::string("missing required key '") + key + "'");
      return def;
    }
    if (it->is_string()) return it->get<std::string>();
    err(ptr + "/" + key, "expected a string");
    return def;
  }

  std::vector<std::string> strings(const Json& obj, const std::string& ptr, const char* key,
                                   bool required = false) {
    std::vector<std::string> out;
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) err(ptr, std::string("missing required key '") + key + "'");
      return out;
    }
    if (!it->is_array()) {
      err(ptr + "/" + key, "expected a list of strings");
      return out;
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
      if ((*it)[i].is_string()) out.push_back((*it)[i].get<std::string>());
      else err(ptr + "/" + key + "/" + std::to_string(i), "expected a string");
    }
    return out;
  }

  const Json* array(const Json& obj, const std::string& ptr, const char* key, bool required) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) err(ptr, std::string("missing required key '") + key + "'");
      return nullptr;
    }
    if (!it->is_array()) {
      err(ptr + "/" + key, "expected a list");
      return nullptr;
    }
    return &*it;
  }

  const Json* object(const Json& obj, const std::string& ptr, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return nullptr;
    if (!it->is_object()) {
      err(ptr + "/" + key, "expected an object");
      return nullptr;
    }
    return &*it;
  }

  std::optional<std::uint64_t> mask(const Json& v, const std::string& ptr) {
    if (v.is_number_unsigned()) {
      if (v.get<std::uint64_t>() == 0) {
        err(ptr, "mask must be nonzero");
        return std::nullopt;
      }
      return v.get<std::uint64_t>();
    }
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      try {
        std::size_t used = 0;
        const auto m = std::stoull(s, &used, 0);
        if (used == s.size() && m != 0) return m;
      } catch (const std::exception&) {
      }
    }
    err(ptr, "expected a nonzero integer or hex string");
    return std::nullopt;
  }

 private:
  const ScenarioSource& src_;
  std::set<std::string> overridden_;
  std::vector<std::string> problems_;
};

CellSet read_cells(Checker& c, const Json& v, const std::string& ptr, std::uint32_t cell_count) {
  CellSet out;
  if (!v.is_array()) {
    c.err(ptr, "expected a list of cell indices");
    return out;
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_unsigned()) {
      c.err(ptr + "/" + std::to_string(i), "expected a cell index");
      continue;
    }
    const auto cell = v[i].get<std::uint64_t>();
    if (cell >= cell_count)
      c.err(ptr + "/" + std::to_string(i),
            "cell " + std::to_string(cell) + " outside [0, " + std::to_string(cell_count) + ")");
    else
      out.insert(static_cast<std::uint32_t>(cell));
  }
  return out;
}

std::vector<ConfigVariant> read_variants(Checker& c, const Json& obj, const std::string& ptr,
                                         const char* key, const char* count_key,
                                         std::uint32_t cell_count) {
  std::vector<ConfigVariant> out;
  if (const Json* arr = c.array(obj, ptr, key, false)) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string p = ptr + "/" + key + "/" + std::to_string(i);
      const Json& v = (*arr)[i];
      c.keys(v, p, {"id", "cells"});
      if (!v.is_object()) continue;
      ConfigVariant cv;
      cv.variant_id = c.str(v, p, "id", std::string(1, static_cast<char>('A' + i % 26)));
      if (auto it = v.find("cells"); it != v.end()) cv.footprint = read_cells(c, *it, p + "/cells", cell_count);
      else c.err(p, "missing required key 'cells'");
      out.push_back(std::move(cv));
    }
    if (arr->empty()) c.err(ptr + "/" + key, "at least one variant is required");
    return out;
  }
  const auto count = c.uint(obj, ptr, count_key, 3);
  if (count == 0) c.err(ptr + "/" + count_key, "must be at least 1");
  else if (cell_count < 3) c.err(ptr, "cell count too small for default variants");
  else out = default_variants(cell_count, count);
  return out;
}

}  // namespace

Scenario compile_scenario(const ScenarioSource& base, const std::vector<std::string>& overrides) {
  ScenarioSource src = base;
  std::set<std::string> overridden;
  {
    std::vector<std::string> problems;
    for (const auto& o : overrides) {
      try {
        apply_override(src.doc, o);
        overridden.insert(dotted_to_pointer(o.substr(0, o.find('='))));
      } catch (const ScenarioError& e) {
        problems.insert(problems.end(), e.problems().begin(), e.problems().end());
      }
    }
    if (!problems.empty()) throw ScenarioError(problems);
  }

  Checker c(src, overridden);
  const Json& d = src.doc;
  Scenario s;
  c.keys(d, "", {"name", "description", "seed", "horizon", "tiles", "spares", "fabric", "threads",
                 "thread_groups", "tile_groups", "costs", "supervisor", "criticality", "faults",
                 "features"});
  s.name = c.str(d, "", "name", "scenario");
  s.seed = c.uint(d, "", "seed", 1);
  s.horizon = c.uint(d, "", "horizon", 0, true);
  if (d.contains("horizon") && s.horizon == 0) c.err("/horizon", "horizon must be > 0");

  // costs
  if (const Json* costs = c.object(d, "", "costs")) {
    c.keys(*costs, "/costs", {"context_switch", "reboot_duration"});
    s.context_switch = c.uint(*costs, "/costs", "context_switch", 0);
    s.reboot_duration = c.uint(*costs, "/costs", "reboot_duration", 100);
  }

  // fabric
  std::uint32_t cell_count = 64;
  {
    static const Json empty = Json::object();
    const Json* fab = c.object(d, "", "fabric");
    const Json& f = fab ? *fab : empty;
    c.keys(f, "/fabric", {"cell_count", "variants", "variant_count", "free_partitions",
                          "shared_cell_count", "shared_variants", "shared_variant_count",
                          "reconfig_duration", "full_reconfig_duration"});
    cell_count = static_cast<std::uint32_t>(c.uint(f, "/fabric", "cell_count", 64));
    if (cell_count == 0) c.err("/fabric/cell_count", "must be > 0");
    s.fabric.cell_count = cell_count;
    s.fabric.variants = read_variants(c, f, "/fabric", "variants", "variant_count", cell_count);
    s.fabric.free_partitions = c.strings(f, "/fabric", "free_partitions");
    s.fabric.shared_cell_count = static_cast<std::uint32_t>(c.uint(f, "/fabric", "shared_cell_count", 64));
    s.fabric.shared_variants = read_variants(c, f, "/fabric", "shared_variants",
                                             "shared_variant_count", s.fabric.shared_cell_count);
    s.fabric.reconfig_duration = c.uint(f, "/fabric", "reconfig_duration", 500);
    s.fabric.full_reconfig_duration = c.uint(f, "/fabric", "full_reconfig_duration", 2000);
  }

  // tiles
  std::set<std::string> tile_ids, partitions;
  if (const Json* arr = c.array(d, "", "tiles", true)) {
    if (arr->empty()) c.err("/tiles", "at least one tile is required");
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string p = "/tiles/" + std::to_string(i);
      const Json& t = (*arr)[i];
      c.keys(t, p, {"id", "partition", "capacity"});
      if (!t.is_object()) continue;
      TileConfig tc;
      tc.id = c.str(t, p, "id", "", true);
      tc.partition = c.str(t, p, "partition", "P_" + tc.id);
      tc.capacity = c.number(t, p, "capacity", 100.0);
      if (tc.capacity < 0) c.err(p + "/capacity", "must be >= 0");
      if (tc.id.empty()) continue;
      if (!tile_ids.insert(tc.id).second) c.err(p + "/id", "duplicate tile id '" + tc.id + "'");
      if (tc.partition == kSharedRegionId)
        c.err(p + "/partition", "partition name 'shared' is reserved");
      else if (!partitions.insert(tc.partition).second)
        c.err(p + "/partition", "partition '" + tc.partition + "' already hosts another tile");
      s.tiles.push_back(std::move(tc));
    }
  }
  for (std::size_t i = 0; i < s.fabric.free_partitions.size(); ++i) {
    const auto& fp = s.fabric.free_partitions[i];
    if (fp == kSharedRegionId || !partitions.insert(fp).second)
      c.err("/fabric/free_partitions/" + std::to_string(i), "partition '" + fp + "' already in use");
  }
  s.spares = c.strings(d, "", "spares");
  for (std::size_t i = 0; i < s.spares.size(); ++i)
    if (!tile_ids.count(s.spares[i]))
      c.err("/spares/" + std::to_string(i), "unknown tile '" + s.spares[i] + "'");

  // threads
  if (const Json* arr = c.array(d, "", "threads", true)) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string p = "/threads/" + std::to_string(i);
      const Json& t = (*arr)[i];
      c.keys(t, p, {"id", "criticality", "period", "state_words", "work_per_tick", "emits_output",
                    "state_in_vmem", "checksum_cost", "sync_cost", "update_cost",
                    "checksum_cost_per_word", "sync_cost_per_word", "update_cost_per_word",
                    "viable_delay", "load"});
      if (!t.is_object()) continue;
      ThreadSpec ts;
      ts.thread_id = c.str(t, p, "id", "", true);
      ts.criticality = static_cast<unsigned>(c.uint(t, p, "criticality", 0));
      ts.desired_checkpoint_period = c.uint(t, p, "period", 1000);
      if (ts.desired_checkpoint_period == 0) c.err(p + "/period", "period must be > 0");
      ts.state_words = c.uint(t, p, "state_words", 1);
      if (ts.state_words == 0) c.err(p + "/state_words", "state_words must be >= 1");
      ts.work_per_tick = c.uint(t, p, "work_per_tick", 1);
      if (ts.work_per_tick == 0) c.err(p + "/work_per_tick", "work_per_tick must be >= 1");
      ts.emits_output = c.boolean(t, p, "emits_output", false);
      ts.state_in_vmem = c.boolean(t, p, "state_in_vmem", false);
      const SimTime words = ts.state_words;
      ts.costs.checksum = c.uint(t, p, "checksum_cost", 0) + words * c.uint(t, p, "checksum_cost_per_word", 0);
      ts.costs.sync = c.uint(t, p, "sync_cost", 0) + words * c.uint(t, p, "sync_cost_per_word", 0);
      ts.costs.update = c.uint(t, p, "update_cost", 0) + words * c.uint(t, p, "update_cost_per_word", 0);
      ts.costs.viable_delay = c.uint(t, p, "viable_delay", 0);
      ts.load = c.number(t, p, "load", 0.0);
      if (ts.load < 0) c.err(p + "/load", "must be >= 0");
      if (ts.thread_id.empty()) continue;
      if (!seen.insert(ts.thread_id).second) c.err(p + "/id", "duplicate thread id '" + ts.thread_id + "'");
      s.threads.push_back(std::move(ts));
    }
  }

  // thread groups
  std::map<std::string, std::string> thread_owner;
  std::set<std::string> tg_ids;
  if (const Json* arr = c.array(d, "", "thread_groups", true)) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string p = "/thread_groups/" + std::to_string(i);
      const Json& t = (*arr)[i];
      c.keys(t, p, {"id", "threads"});
      if (!t.is_object()) continue;
      ThreadGroupConfig g;
      g.id = c.str(t, p, "id", "", true);
      g.threads = c.strings(t, p, "threads", true);
      if (g.threads.empty() && t.contains("threads")) c.err(p + "/threads", "thread group must not be empty");
      for (std::size_t k = 0; k < g.threads.size(); ++k) {
        const std::string tp = p + "/threads/" + std::to_string(k);
        if (!s.thread(g.threads[k])) c.err(tp, "unknown thread '" + g.threads[k] + "'");
        else if (!thread_owner.emplace(g.threads[k], g.id).second)
          c.err(tp, "thread '" + g.threads[k] + "' already belongs to '" + thread_owner[g.threads[k]] + "'");
      }
      if (!g.id.empty() && !tg_ids.insert(g.id).second) c.err(p + "/id", "duplicate thread group '" + g.id + "'");
      s.thread_groups.push_back(std::move(g));
    }
  }

  // tile groups
  std::set<std::string> spares(s.spares.begin(), s.spares.end());
  if (const Json* arr = c.array(d, "", "tile_groups", true)) {
    if (arr->empty()) c.err("/tile_groups", "at least one tile group is required");
    std::set<std::string> gids;
    std::map<std::string, std::string> tg_home;
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string p = "/tile_groups/" + std::to_string(i);
      const Json& t = (*arr)[i];
      c.keys(t, p, {"id", "members", "thread_groups", "base_period", "comparison_deadline",
                    "grace_period"});
      if (!t.is_object()) continue;
      TileGroupConfig g;
      g.id = c.str(t, p, "id", "", true);
      if (!g.id.empty() && !gids.insert(g.id).second) c.err(p + "/id", "duplicate tile group '" + g.id + "'");
      g.members = c.strings(t, p, "members", true);
      if (t.contains("members") && g.members.size() < 2)
        c.err(p + "/members", "a tile group needs at least 2 members");
      std::set<std::string> uniq;
      for (std::size_t k = 0; k < g.members.size(); ++k) {
        const std::string mp = p + "/members/" + std::to_string(k);
        if (!tile_ids.count(g.members[k])) c.err(mp, "unknown tile '" + g.members[k] + "'");
        else if (spares.count(g.members[k])) c.err(mp, "tile '" + g.members[k] + "' is designated a spare");
        if (!uniq.insert(g.members[k]).second) c.err(mp, "duplicate member '" + g.members[k] + "'");
      }
      g.thread_groups = c.strings(t, p, "thread_groups", true);
      if (t.contains("thread_groups") && g.thread_groups.empty())
        c.err(p + "/thread_groups", "a tile group must host at least one thread group");
      std::vector<const ThreadSpec*> specs;
      for (std::size_t k = 0; k < g.thread_groups.size(); ++k) {
        const std::string tp = p + "/thread_groups/" + std::to_string(k);
        const auto& id = g.thread_groups[k];
        if (!tg_ids.count(id)) {
          c.err(tp, "unknown thread group '" + id + "'");
          continue;
        }
        if (!tg_home.emplace(id, g.id).second) {
          c.err(tp, "thread group '" + id + "' already hosted by '" + tg_home[id] + "'");
          continue;
        }
        for (const auto& tgc : s.thread_groups)
          if (tgc.id == id)
            for (const auto& th : tgc.threads)
              if (const auto* spec = s.thread(th)) specs.push_back(spec);
      }
      SimTime derived = 0;
      SimTime ckpt = 0, delay = 0, updates = 0;
      for (const auto* spec : specs) {
        derived = derived == 0 ? spec->desired_checkpoint_period
                               : std::min(derived, spec->desired_checkpoint_period);
        ckpt += spec->costs.checksum + s.context_switch;
        delay = std::max(delay, spec->costs.viable_delay);
        updates += spec->costs.update;
      }
      g.base_period = c.uint(t, p, "base_period", derived);
      if (t.contains("base_period") && g.base_period == 0) c.err(p + "/base_period", "must be > 0");
      g.comparison_deadline = c.uint(t, p, "comparison_deadline", g.base_period / 10);
      g.grace_period = c.uint(t, p, "grace_period", 2 * updates);
      if (!specs.empty() && g.base_period > 0 && ckpt + delay >= g.comparison_deadline) {
        c.err(t.contains("comparison_deadline") ? p + "/comparison_deadline" : p,
              "comparison deadline " + std::to_string(g.comparison_deadline) +
                  " must exceed the fault-free checkpoint time " + std::to_string(ckpt + delay));
      }
      s.tile_groups.push_back(std::move(g));
    }
  }

  // supervisor
  SimTime max_period = 0;
  for (const auto& g : s.tile_groups) max_period = std::max(max_period, g.base_period);
  {
    static const Json empty = Json::object();
    const Json* sup = c.object(d, "", "supervisor");
    const Json& o = sup ? *sup : empty;
    c.keys(o, "/supervisor", {"transient_threshold", "transient_window", "defunct_threshold",
                              "watchdog_period"});
    s.supervisor.transient_threshold = c.uint(o, "/supervisor", "transient_threshold", 3);
    s.supervisor.transient_window = c.uint(o, "/supervisor", "transient_window", 100);
    s.supervisor.defunct_threshold = c.uint(o, "/supervisor", "defunct_threshold", 10);
    s.supervisor.watchdog_period = c.uint(o, "/supervisor", "watchdog_period", 4 * max_period);
    if (s.supervisor.transient_threshold == 0)
      c.err("/supervisor/transient_threshold", "must be >= 1");
    if (s.supervisor.transient_threshold >= s.supervisor.defunct_threshold)
      c.err("/supervisor", "transient_threshold must be < defunct_threshold");
    if (s.supervisor.transient_window == 0) c.err("/supervisor/transient_window", "must be >= 1");
  }

  // criticality
  if (const Json* cr = c.object(d, "", "criticality")) {
    const std::string p = "/criticality";
    c.keys(*cr, p, {"min_replicas_high", "min_replicas_low", "high_threshold", "degradation_order",
                    "frequency_factor", "max_period_factor"});
    s.policy.min_replicas_high = static_cast<unsigned>(c.uint(*cr, p, "min_replicas_high", 3));
    s.policy.min_replicas_low = static_cast<unsigned>(c.uint(*cr, p, "min_replicas_low", 2));
    s.policy.high_threshold = static_cast<unsigned>(c.uint(*cr, p, "high_threshold", 5));
    s.policy.frequency_factor = static_cast<unsigned>(c.uint(*cr, p, "frequency_factor", 2));
    s.policy.max_period_factor = static_cast<unsigned>(c.uint(*cr, p, "max_period_factor", 4));
    if (s.policy.min_replicas_low < 1 || s.policy.min_replicas_high < s.policy.min_replicas_low)
      c.err(p, "require min_replicas_high >= min_replicas_low >= 1");
    if (s.policy.frequency_factor < 2) c.err(p + "/frequency_factor", "must be >= 2");
    if (cr->contains("degradation_order")) {
      s.policy.degradation_order.clear();
      const auto names = c.strings(*cr, p, "degradation_order");
      for (std::size_t i = 0; i < names.size(); ++i) {
        if (auto l = lever_from_string(names[i])) s.policy.degradation_order.push_back(*l);
        else c.err(p + "/degradation_order/" + std::to_string(i), "unknown lever '" + names[i] + "'");
      }
    }
  }

  // features
  if (const Json* f = c.object(d, "", "features")) {
    c.keys(*f, "/features", {"output_voting", "ecc"});
    s.output_voting = c.boolean(*f, "/features", "output_voting", true);
    s.ecc = c.boolean(*f, "/features", "ecc", true);
  }

  // faults
  auto read_event = [&](const Json& e, const std::string& p, Checker& ck) -> std::optional<FaultEvent> {
    ck.keys(e, p, {"at", "kind", "tile", "thread", "word", "mask", "words", "partition", "cell",
                   "duration"});
    if (!e.is_object()) return std::nullopt;
    FaultEvent ev;
    ev.at = ck.uint(e, p, "at", 0, true);
    const auto kind_name = ck.str(e, p, "kind", "", true);
    auto kind = fault_kind_from_string(kind_name);
    if (!kind) {
      if (!kind_name.empty()) ck.err(p + "/kind", "unknown fault kind '" + kind_name + "'");
      return std::nullopt;
    }
    ev.kind = *kind;
    if (e.contains("at") && ev.at >= s.horizon && s.horizon > 0)
      ck.err(p + "/at", "fault time beyond horizon");
    switch (ev.kind) {
      case FaultKind::TransientState:
      case FaultKind::MainMemory: {
        ev.tile = ck.str(e, p, "tile", "", true);
        ev.thread = ck.str(e, p, "thread", "", true);
        if (!ev.tile.empty() && !tile_ids.count(ev.tile)) ck.err(p + "/tile", "unknown tile '" + ev.tile + "'");
        const ThreadSpec* spec = ev.thread.empty() ? nullptr : s.thread(ev.thread);
        if (!ev.thread.empty() && !spec) ck.err(p + "/thread", "unknown thread '" + ev.thread + "'");
        if (auto it = e.find("words"); it != e.end()) {
          if (!it->is_array() || it->empty()) {
            ck.err(p + "/words", "expected a non-empty list of {word, mask}");
          } else {
            for (std::size_t k = 0; k < it->size(); ++k) {
              const std::string wp = p + "/words/" + std::to_string(k);
              ck.keys((*it)[k], wp, {"word", "mask"});
              if (!(*it)[k].is_object()) continue;
              WordFlip wf;
              wf.word = ck.uint((*it)[k], wp, "word", 0);
              if (auto m = (*it)[k].find("mask"); m != (*it)[k].end()) {
                if (auto v = ck.mask(*m, wp + "/mask")) wf.mask = *v;
              } else {
                wf.mask = 1;
              }
              if (spec && wf.word >= spec->state_words) ck.err(wp + "/word", "word index out of range");
              ev.flips.push_back(wf);
            }
          }
        } else {
          WordFlip wf;
          wf.word = ck.uint(e, p, "word", 0);
          wf.mask = 1;
          if (auto m = e.find("mask"); m != e.end())
            if (auto v = ck.mask(*m, p + "/mask")) wf.mask = *v;
          if (spec && wf.word >= spec->state_words) ck.err(p + "/word", "word index out of range");
          ev.flips.push_back(wf);
        }
        break;
      }
      case FaultKind::TransientValidationMemory: {
        ev.tile = ck.str(e, p, "tile", "", true);
        if (!ev.tile.empty() && !tile_ids.count(ev.tile)) ck.err(p + "/tile", "unknown tile '" + ev.tile + "'");
        WordFlip wf;
        wf.word = ck.uint(e, p, "word", 0);
        wf.mask = 1;
        if (auto m = e.find("mask"); m != e.end())
          if (auto v = ck.mask(*m, p + "/mask")) wf.mask = *v;
        ev.flips.push_back(wf);
        break;
      }
      case FaultKind::PermanentCell:
      case FaultKind::ConfigUpset: {
        ev.partition = ck.str(e, p, "partition", "");
        if (ev.partition.empty()) {
          const auto tile = ck.str(e, p, "tile", "");
          if (const TileConfig* tc = s.tile(tile)) ev.partition = tc->partition;
          else if (!tile.empty()) ck.err(p + "/tile", "unknown tile '" + tile + "'");
          else ck.err(p, "missing 'partition' or 'tile'");
        } else if (ev.partition != kSharedRegionId && !partitions.count(ev.partition)) {
          ck.err(p + "/partition", "unknown partition '" + ev.partition + "'");
        }
        ev.cell = static_cast<std::uint32_t>(ck.uint(e, p, "cell", 0, true));
        const std::uint32_t limit = ev.partition == kSharedRegionId ? s.fabric.shared_cell_count : cell_count;
        if (ev.cell >= limit) ck.err(p + "/cell", "cell outside the partition");
        break;
      }
      case FaultKind::SefiTile:
        ev.tile = ck.str(e, p, "tile", "", true);
        if (!ev.tile.empty() && !tile_ids.count(ev.tile)) ck.err(p + "/tile", "unknown tile '" + ev.tile + "'");
        [[fallthrough]];
      case FaultKind::SefiShared:
        ev.duration = ck.uint(e, p, "duration", 0, true);
        if (e.contains("duration") && ev.duration == 0) ck.err(p + "/duration", "SEFI duration must be > 0");
        break;
    }
    return ev;
  };

  if (const Json* f = c.object(d, "", "faults")) {
    const std::string p = "/faults";
    c.keys(*f, p, {"rates", "windows", "multi_bit_share", "sefi_duration", "shared_sefi_duration",
                   "events", "script"});
    if (const Json* rates = c.object(*f, p, "rates")) {
      for (auto it = rates->begin(); it != rates->end(); ++it) {
        const std::string rp = p + "/rates/" + escape_token(it.key());
        auto kind = fault_kind_from_string(it.key());
        if (!kind) {
          c.err(rp, "unknown fault kind '" + it.key() + "'");
          continue;
        }
        if (!it->is_number() || it->get<double>() < 0) {
          c.err(rp, "rate must be a number >= 0");
          continue;
        }
        s.faults.rates[*kind] = it->get<double>();
      }
    }
    if (const Json* wins = c.array(*f, p, "windows", false)) {
      for (std::size_t i = 0; i < wins->size(); ++i) {
        const std::string wp = p + "/windows/" + std::to_string(i);
        c.keys((*wins)[i], wp, {"from", "to", "factor"});
        if (!(*wins)[i].is_object()) continue;
        RateWindow w;
        w.from = c.uint((*wins)[i], wp, "from", 0);
        w.to = c.uint((*wins)[i], wp, "to", 0, true);
        w.factor = c.number((*wins)[i], wp, "factor", 1.0);
        if (w.to <= w.from) c.err(wp, "window must satisfy from < to");
        if (w.factor < 0) c.err(wp + "/factor", "must be >= 0");
        s.faults.windows.push_back(w);
      }
    }
    s.faults.multi_bit_share = c.number(*f, p, "multi_bit_share", 0.0);
    if (s.faults.multi_bit_share < 0 || s.faults.multi_bit_share > 1)
      c.err(p + "/multi_bit_share", "must lie in [0, 1]");
    s.faults.sefi_duration = c.uint(*f, p, "sefi_duration", std::max<SimTime>(1, max_period));
    s.faults.shared_sefi_duration = c.uint(*f, p, "shared_sefi_duration", std::max<SimTime>(1, max_period));
    if (s.faults.sefi_duration == 0) c.err(p + "/sefi_duration", "must be > 0");
    if (s.faults.shared_sefi_duration == 0) c.err(p + "/shared_sefi_duration", "must be > 0");
    if (const Json* evs = c.array(*f, p, "events", false)) {
      for (std::size_t i = 0; i < evs->size(); ++i)
        if (auto ev = read_event((*evs)[i], p + "/events/" + std::to_string(i), c))
          s.faults.explicit_events.push_back(std::move(*ev));
    }
    const auto script = c.str(*f, p, "script", "");
    if (!script.empty()) {
      const auto path = (std::filesystem::path(src.base_dir) / script).string();
      try {
        ScenarioSource ss;
        {
          std::ifstream in(path, std::ios::binary);
          if (!in) throw ScenarioError({path + ": cannot open fault script"});
          std::ostringstream os;
          os << in.rdbuf();
          ss.origin = path;
          ss.text = os.str();
          try {
            ss.doc = Json::parse(ss.text);
          } catch (const nlohmann::json::parse_error& e) {
            throw ScenarioError({path + ":" + std::to_string(LineIndex::line_at_offset(ss.text, e.byte)) +
                                 ": syntax error: " + e.what()});
          }
          ss.lines = LineIndex(ss.text);
        }
        Checker sc(ss, {});
        if (!ss.doc.is_array()) sc.err("", "fault script must be a list of events");
        else
          for (std::size_t i = 0; i < ss.doc.size(); ++i)
            if (auto ev = read_event(ss.doc[i], "/" + std::to_string(i), sc))
              s.faults.explicit_events.push_back(std::move(*ev));
        if (!sc.problems().empty()) throw ScenarioError(sc.problems());
      } catch (const ScenarioError& e) {
        for (const auto& pr : e.problems()) c.err(p + "/script", pr);
      }
    }
  }

  if (!c.problems().empty()) throw ScenarioError(c.problems());
  return s;
}

Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides) {
  return compile_scenario(read_source(path), overrides);
}

}  // namespace ftsim
