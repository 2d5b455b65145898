#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gstest {

/// Signals of a VCD file keyed by reference name. Values are '0', '1' or 'x'.
struct VcdSignal {
  std::string id;
  char initial = 'x';
  std::vector<std::pair<std::uint64_t, char>> changes;
};

struct VcdFile {
  std::string timescale;
  std::map<std::string, VcdSignal> signals;
  std::uint64_t last_time = 0;
};

/// Minimal reader for 1-bit scalar VCD; throws std::runtime_error on
/// anything it does not understand.
VcdFile read_vcd(std::string_view text);

}  // namespace gstest
