#include "vcd_reader.hpp"

#include <sstream>
#include <stdexcept>

namespace gstest {

namespace {

std::vector<std::string> tokens(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

}  // namespace

VcdFile read_vcd(std::string_view text) {
  VcdFile f;
  const auto tok = tokens(text);
  std::map<std::string, std::string> by_id;
  std::size_t i = 0;
  auto skip_to_end = [&]() {
    while (i < tok.size() && tok[i] != "$end") ++i;
    if (i == tok.size()) throw std::runtime_error("unterminated section");
    ++i;
  };
  bool defs_done = false;
  bool in_dumpvars = false;
  bool seen_time = false;
  std::uint64_t now = 0;
  while (i < tok.size()) {
    const std::string& t = tok[i];
    if (!defs_done) {
      if (t == "$timescale") {
        ++i;
        while (i < tok.size() && tok[i] != "$end") f.timescale += tok[i++];
        ++i;
      } else if (t == "$var") {
        if (i + 5 >= tok.size() || tok[i + 2] != "1") throw std::runtime_error("only 1-bit vars are supported");
        const std::string id = tok[i + 3], name = tok[i + 4];
        if (f.signals.contains(name) || by_id.contains(id)) throw std::runtime_error("duplicate var " + name);
        f.signals[name].id = id;
        by_id[id] = name;
        i += 5;
        skip_to_end();
      } else if (t == "$enddefinitions") {
        ++i;
        skip_to_end();
        defs_done = true;
      } else if (t[0] == '$') {
        ++i;
        skip_to_end();
      } else {
        throw std::runtime_error("unexpected token in header: " + t);
      }
      continue;
    }
    ++i;
    if (t == "$dumpvars") {
      in_dumpvars = true;
    } else if (t == "$end") {
      if (!in_dumpvars) throw std::runtime_error("stray $end");
      in_dumpvars = false;
    } else if (t[0] == '#') {
      const std::uint64_t next = std::stoull(t.substr(1));
      if (seen_time && next <= now) throw std::runtime_error("time does not increase at " + t);
      now = next;
      seen_time = true;
      f.last_time = now;
    } else if (t[0] == '0' || t[0] == '1' || t[0] == 'x' || t[0] == 'X') {
      const char v = t[0] == 'X' ? 'x' : t[0];
      auto it = by_id.find(t.substr(1));
      if (it == by_id.end()) throw std::runtime_error("unknown identifier in " + t);
      VcdSignal& s = f.signals[it->second];
      if (in_dumpvars || (now == 0 && s.changes.empty())) {
        s.initial = v;
      } else {
        if (!s.changes.empty() && s.changes.back().first == now) throw std::runtime_error("double change at one time");
        s.changes.emplace_back(now, v);
      }
    } else {
      throw std::runtime_error("unsupported token " + t);
    }
  }
  if (!defs_done) throw std::runtime_error("missing $enddefinitions");
  return f;
}

}  // namespace gstest
