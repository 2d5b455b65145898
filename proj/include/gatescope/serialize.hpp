#pragma once

#include <string>

#include <json.hpp>

#include "gatescope/dataflow.hpp"
#include "gatescope/netlist.hpp"

namespace gatescope {

nlohmann::json to_json(const DataflowGraph& graph);
DataflowGraph dataflow_from_json(const nlohmann::json& doc);

/// Throws Error when a known pass result references objects absent from
/// `netlist`; unknown pass names are accepted as opaque blobs.
void validate_result(const std::string& pass, const nlohmann::json& blob, const Netlist& netlist);

}  // namespace gatescope
