#pragma once

#include <set>
#include <string>

#include "gatescope/dataflow.hpp"

namespace gatescope {

struct DotOptions {
  std::string graph_name = "dataflow";
  /// Edges drawn with color=red.
  std::set<GroupEdge> highlight;
};

/// One node per register group labeled `name (width)`, one edge per group
/// connection. Output is deterministic.
std::string export_dataflow_dot(const DataflowGraph& graph, const DotOptions& options = {});

}  // namespace gatescope
