#pragma once

#include <memory>
#include <optional>
#include <string_view>

#include "gatescope/gate_library.hpp"
#include "gatescope/netlist.hpp"

namespace gatescope {

/// Parses one structural Verilog module into a netlist over `library`.
///
/// Supported: module header (plain or ANSI port list), input/output/wire
/// declarations with optional ranges, cell instantiations with named port
/// connections, and `assign` of a net or a 1-bit constant. Ranged nets are
/// expanded to per-bit nets named `name[i]`. Gate ids follow source order.
///
/// Constants are driven by constant_source cells; when the library has
/// none, TIE0_SYN / TIE1_SYN are added to the netlist's library. A
/// net-to-net assign inserts the library's buffer_like cell.
///
/// Throws ParseError carrying the source location.
Netlist parse_verilog(std::string_view text, std::shared_ptr<const GateLibrary> library,
                      std::string_view source_name = "<verilog>");

/// Definition of a cell the parser may synthesize, by name.
std::optional<GateType> synthesized_cell(std::string_view name);

}  // namespace gatescope
