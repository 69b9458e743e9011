#pragma once

#include "driftwatch/investigation.hpp"
#include "driftwatch/pipeline.hpp"

#include <string>

namespace driftwatch {

// One alerts.jsonl line: {window_index, malicious_nodes[], path_count,
// scenario_file, window_ids[]} with uuids for nodes.
std::string alert_to_jsonl(const Alert& alert, const EntityStore& store,
                           const std::string& scenario_file);

// {"window_ids":[...],"nodes":[{id,name,kind,ss}],"edges":[{src,dst,kind,rl,window}]}
// Node ids are entity uuids; ordering is deterministic.
std::string scenario_to_json(const ScenarioGraph& scenario, const EntityStore& store);

// DOT text with deterministic node ordering, rendered from the JSON form.
// With merge_names, nodes sharing (kind, name) collapse into one rendered
// node and parallel edges dedupe to the highest-rl representative with an
// occurrence count.
std::string scenario_json_to_dot(const std::string& json_text, bool merge_names);

inline std::string scenario_to_dot(const ScenarioGraph& scenario, const EntityStore& store,
                                   bool merge_names) {
  return scenario_json_to_dot(scenario_to_json(scenario, store), merge_names);
}

}  // namespace driftwatch
