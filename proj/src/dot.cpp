#include "gatescope/dot.hpp"

#include <sstream>

namespace gatescope {

namespace {

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string export_dataflow_dot(const DataflowGraph& graph, const DotOptions& options) {
  std::ostringstream os;
  os << "digraph " << quoted(options.graph_name) << " {\n";
  os << "  rankdir=LR;\n  node [shape=box];\n";
  for (const auto& [id, g] : graph.groups) {
    os << "  g" << id << " [label=" << quoted(g.name + " (" + std::to_string(g.members.size()) + ")") << "];\n";
  }
  for (const auto& [edge, paths] : graph.edges) {
    os << "  g" << edge.first << " -> g" << edge.second;
    if (options.highlight.contains(edge)) os << " [color=red]";
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace gatescope
