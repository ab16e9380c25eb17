#include "owgp/trace.h"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace owgp {

std::string trace_record_to_json(const TraceRecord& rec) {
  nlohmann::json j;
  j["step"] = rec.step;
  j["kind"] = rec.kind;
  j["payload"] = nlohmann::json::object();
  for (const auto& [k, v] : rec.payload) j["payload"][k] = v;
  nlohmann::json objs = nlohmann::json::array();
  for (const BeliefObjectSummary& s : rec.belief) {
    nlohmann::json o;
    o["anchor"] = s.anchor;
    o["type"] = s.map_type;
    o["pose"] = {s.pose(0), s.pose(1), s.pose(2), s.pose(3)};
    o["color"] = s.top_color;
    o["weight_median_g"] = s.weight_median_g;
    o["detection_weight"] = s.detection_weight;
    o["held"] = s.held;
    objs.push_back(std::move(o));
  }
  j["belief"] = std::move(objs);
  j["stack_depth"] = rec.stack_depth;
  j["seed"] = rec.seed;
  return j.dump();
}

void emit_trace(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open trace file: " + path);
  for (const TraceRecord& rec : trace) {
    out << trace_record_to_json(rec) << "\n";
  }
  if (!out) throw std::runtime_error("failed writing trace file: " + path);
}

}  // namespace owgp
