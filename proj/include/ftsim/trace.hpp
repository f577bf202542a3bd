// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ftsim/sim_engine.hpp"
#include "json.hpp"

namespace ftsim {

using Json = nlohmann::ordered_json;

struct TraceRecord {
  SimTime at = 0;
  std::string actor;
  std::string kind;
  Json payload = Json::object();
};

/// Records in emission order. With `keep` off only the count is retained.
class Trace {
 public:
  explicit Trace(bool keep = true) : keep_(keep) {}

  void emit(SimTime at, std::string actor, std::string kind, Json payload = Json::object());

  const std::vector<TraceRecord>& records() const { return records_; }
  std::size_t size() const { return count_; }
  bool keeping() const { return keep_; }

 private:
  bool keep_;
  std::size_t count_ = 0;
  std::vector<TraceRecord> records_;
};

std::string to_json_line(const TraceRecord& rec);
void write_jsonl(std::ostream& out, const std::vector<TraceRecord>& records);
std::string to_jsonl(const std::vector<TraceRecord>& records);

struct TraceReadResult {
  std::vector<TraceRecord> records;
  /// A line failed to parse (typically a cut-off final line).
  bool truncated = false;
  std::string error;
};

TraceReadResult read_jsonl(std::istream& in);

}  // namespace ftsim
