// SPDX-License-Identifier: Apache-2.0
#include "ftsim/trace.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace ftsim {

void Trace::emit(SimTime at, std::string actor, std::string kind, Json payload) {
  ++count_;
  if (!keep_) return;
  records_.push_back(TraceRecord{at, std::move(actor), std::move(kind), std::move(payload)});
}

std::string to_json_line(const TraceRecord& rec) {
  Json j;
  j["at"] = rec.at;
  j["actor"] = rec.actor;
  j["kind"] = rec.kind;
  j["payload"] = rec.payload;
  return j.dump();
}

void write_jsonl(std::ostream& out, const std::vector<TraceRecord>& records) {
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

std::string to_jsonl(const std::vector<TraceRecord>& records) {
  std::ostringstream os;
  write_jsonl(os, records);
  return os.str();
}

TraceReadResult read_jsonl(std::istream& in) {
  TraceReadResult res;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      Json j = Json::parse(line);
      TraceRecord r;
      r.at = j.at("at").get<SimTime>();
      r.actor = j.at("actor").get<std::string>();
      r.kind = j.at("kind").get<std::string>();
      r.payload = j.at("payload");
      res.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      res.truncated = true;
      res.error = "line " + std::to_string(lineno) + ": " + e.what();
      break;
    }
  }
  return res;
}

}  // namespace ftsim
