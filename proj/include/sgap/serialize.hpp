//===- serialize.hpp - JSON forms of points, metrics and rows --*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef SGAP_SERIALIZE_HPP
#define SGAP_SERIALIZE_HPP

#include <string>

#include "json.hpp"
#include "sgap/design_space.hpp"
#include "sgap/simulator.hpp"
#include "sgap/sweep.hpp"

namespace sgap {

inline void to_json(nlohmann::json& j, const AtomicParallelismPoint& p) {
  j = {{"data_kind", to_string(p.data_kind)},
       {"data_amount", p.data_amount.str()},
       {"col_amount", p.col_amount.str()},
       {"r", p.r},
       {"text", p.cli_str()}};
}

inline void from_json(const nlohmann::json& j, AtomicParallelismPoint& p) {
  p = parse_point(j.at("text").get<std::string>());
}

inline void to_json(nlohmann::json& j, const KernelConfig& c) {
  j = {{"point", c.point}, {"N", c.N}, {"p", c.p}};
  if (c.grid_size) j["grid_size"] = *c.grid_size;
}

inline void to_json(nlohmann::json& j, const SimMetrics& m) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [steps, count] : m.per_warp_steps) hist[std::to_string(steps)] = count;
  j = {{"max_warp_steps", m.max_warp_steps},
       {"total_steps", m.total_steps},
       {"atomic_ops", m.atomic_ops},
       {"idle_lane_steps", m.idle_lane_steps},
       {"warps", m.warps},
       {"per_warp_steps", hist}};
}

inline void to_json(nlohmann::json& j, const SweepRow& r) {
  j = {{"matrix", r.matrix}, {"N", r.N}, {"p", r.p}, {"status", to_string(r.status)}};
  j["point"] = r.point ? nlohmann::json(r.point->cli_str()) : nlohmann::json();
  if (r.status == RowStatus::Pass || r.status == RowStatus::Fail) {
    j["max_rel_error"] = r.max_rel_error;
    j["metrics"] = r.metrics;
  }
  if (!r.message.empty()) j["message"] = r.message;
}

inline std::string sweep_json(const std::vector<SweepRow>& rows) {
  nlohmann::json j = {{"schema_version", kSweepSchemaVersion}, {"rows", rows}};
  return j.dump(2) + "\n";
}

}  // namespace sgap

#endif  // SGAP_SERIALIZE_HPP
