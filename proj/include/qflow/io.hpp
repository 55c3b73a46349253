#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "qflow/circuit.hpp"
#include "qflow/contraction.hpp"
#include "qflow/flow.hpp"

namespace qflow {

using json = nlohmann::json;

/// Row-major list of [re, im] pairs.
json matrix_to_json(const CMatrix& m);
/// Accepts a row-major list of dim² [re, im] pairs (or plain reals).
CMatrix matrix_from_json(const json& j);

json circuit_to_json(const Circuit& c);
Circuit circuit_from_json(const json& j);

json plan_to_json(const ContractionPlan& plan);

json flow_config_to_json(const FlowConfig& cfg);
json history_to_json(const std::vector<FlowRecord>& history);

/// Circuit, flow settings and history so far.
void write_checkpoint(const std::string& path, const Circuit& c, const FlowConfig& cfg,
                      const std::vector<FlowRecord>& history, int restart);

/// Reads a circuit file or a checkpoint (whose "circuit" member is used).
Circuit load_circuit_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace qflow
