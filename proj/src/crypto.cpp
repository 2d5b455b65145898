#include "gatescope/crypto.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "gatescope/symbolic.hpp"

namespace gatescope {

namespace {

constexpr std::size_t kMinBits = 3;
constexpr std::size_t kMaxBits = 8;

std::uint8_t gf_mul(std::uint8_t a, std::uint8_t b) {
  std::uint8_t r = 0;
  while (b != 0) {
    if (b & 1U) r ^= a;
    a = static_cast<std::uint8_t>((a << 1) ^ ((a & 0x80U) ? 0x1B : 0));
    b >>= 1;
  }
  return r;
}

std::uint8_t gf_inverse(std::uint8_t a) {
  // a^254 = a^-1 in GF(2^8); 0 maps to 0.
  std::uint8_t r = 1, p = a;
  for (unsigned e = 254; e != 0; e >>= 1) {
    if (e & 1U) r = gf_mul(r, p);
    p = gf_mul(p, p);
  }
  return a == 0 ? 0 : r;
}

std::uint8_t rotl8(std::uint8_t x, unsigned k) { return static_cast<std::uint8_t>((x << k) | (x >> (8 - k))); }

}  // namespace

std::vector<std::uint32_t> aes_sbox() {
  std::vector<std::uint32_t> t(256);
  for (unsigned x = 0; x < 256; ++x) {
    const std::uint8_t b = gf_inverse(static_cast<std::uint8_t>(x));
    t[x] = static_cast<std::uint8_t>(b ^ rotl8(b, 1) ^ rotl8(b, 2) ^ rotl8(b, 3) ^ rotl8(b, 4) ^ 0x63);
  }
  return t;
}

std::vector<std::uint32_t> present_sbox() {
  // Algebraic normal form per output bit: monomials as input-bit masks.
  static const std::array<std::vector<unsigned>, 4> anf = {{
      {1, 4, 6, 8},
      {2, 7, 8, 10, 11, 12, 13},
      {0, 3, 4, 8, 9, 10, 11, 13},
      {0, 1, 2, 6, 7, 8, 11, 13},
  }};
  std::vector<std::uint32_t> t(16, 0);
  for (unsigned x = 0; x < 16; ++x) {
    for (unsigned bit = 0; bit < 4; ++bit) {
      unsigned v = 0;
      for (unsigned m : anf[bit]) v ^= (x & m) == m ? 1U : 0U;
      t[x] |= v << bit;
    }
  }
  return t;
}

const std::vector<SBoxLibraryEntry>& builtin_sbox_library() {
  static const std::vector<SBoxLibraryEntry> lib = {
      {"AES", 8, aes_sbox(), "multiplicative inverse in GF(2^8) mod x^8+x^4+x^3+x+1, then the affine map with constant 0x63"},
      {"PRESENT", 4, present_sbox(), "algebraic normal form of the 4-bit substitution"},
  };
  return lib;
}

std::vector<std::uint32_t> SBoxCandidate::values() const {
  std::vector<std::uint32_t> v(std::size_t{1} << inputs.size(), 0);
  for (std::size_t j = 0; j < tables.size(); ++j) {
    for (std::size_t x = 0; x < v.size(); ++x) v[x] |= static_cast<std::uint32_t>(tables[j].bit(x)) << j;
  }
  return v;
}

std::string to_string(SBoxVerdict v) {
  switch (v) {
    case SBoxVerdict::match: return "match";
    case SBoxVerdict::bijective_unknown: return "bijective-unknown";
    case SBoxVerdict::not_bijective: return "not-bijective";
  }
  return "not-bijective";
}

namespace {

using Support = std::vector<NetId>;  // sorted

// Boundary nets of each net's combinational cone, capped at kMaxBits.
class SupportOracle {
 public:
  explicit SupportOracle(const Netlist& nl) : nl_(nl) {}

  // Null when the support exceeds the cap or the cone is cyclic.
  const Support* of(NetId root) {
    struct Frame {
      NetId net;
      bool expanded;
    };
    std::vector<Frame> stack{{root, false}};
    std::unordered_set<NetId> on_stack;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (memo_.contains(f.net)) {
        stack.pop_back();
        continue;
      }
      const NetId net = f.net;
      const Gate* g = driver(net);
      if (g == nullptr) {
        memo_.emplace(net, Support{net});
        stack.pop_back();
        continue;
      }
      const auto ins = inputs_of(*g);
      if (!f.expanded) {
        f.expanded = true;
        on_stack.insert(net);
        for (NetId in : ins) {
          if (memo_.contains(in)) continue;
          if (on_stack.contains(in)) {
            memo_.emplace(in, std::nullopt);
            continue;
          }
          stack.push_back({in, false});
        }
        continue;
      }
      on_stack.erase(net);
      std::optional<Support> s = Support{};
      for (NetId in : ins) {
        const auto& child = memo_.at(in);
        if (!child) {
          s.reset();
          break;
        }
        Support merged;
        std::set_union(s->begin(), s->end(), child->begin(), child->end(), std::back_inserter(merged));
        s = std::move(merged);
        if (s->size() > kMaxBits) {
          s.reset();
          break;
        }
      }
      memo_.emplace(net, std::move(s));
      stack.pop_back();
    }
    const auto& r = memo_.at(root);
    return r ? &*r : nullptr;
  }

  // Combinational driver, or null at a stage boundary.
  [[nodiscard]] const Gate* driver(NetId id) const {
    const Net& n = nl_.get_net(id);
    if (n.global_input || n.drivers.size() != 1) return nullptr;
    const Gate& g = nl_.get_gate(n.drivers.front().gate);
    return g.type->is_sequential() ? nullptr : &g;
  }

  [[nodiscard]] std::vector<NetId> inputs_of(const Gate& g) const {
    std::vector<NetId> out;
    for (const auto& [pin, n] : g.connections) {
      if (g.type->pin_direction(pin) == PinDirection::input) out.push_back(n);
    }
    return out;
  }

 private:
  const Netlist& nl_;
  std::unordered_map<NetId, std::optional<Support>> memo_;
};

// Nets ending a stage: flip-flop data inputs and global outputs.
std::set<NetId> stage_sinks(const Netlist& nl) {
  std::set<NetId> out;
  for (const auto& [id, g] : nl.gates()) {
    if (!g.type->is_sequential()) continue;
    for (const auto& pin : g.type->data_pins()) {
      if (auto n = g.net_at(pin)) out.insert(*n);
    }
  }
  for (const auto& [id, n] : nl.nets()) {
    if (n.global_output) out.insert(id);
  }
  return out;
}

std::set<GateId> cone_gates(const SupportOracle& oracle, const std::vector<NetId>& outputs) {
  std::set<GateId> gates;
  std::set<NetId> seen;
  std::vector<NetId> work(outputs.begin(), outputs.end());
  while (!work.empty()) {
    const NetId n = work.back();
    work.pop_back();
    if (!seen.insert(n).second) continue;
    const Gate* g = oracle.driver(n);
    if (g == nullptr) continue;
    gates.insert(g->id);
    for (NetId in : oracle.inputs_of(*g)) work.push_back(in);
  }
  return gates;
}

}  // namespace

std::vector<SBoxCandidate> enumerate_candidates(const Netlist& netlist, const DataflowGraph* dataflow) {
  SupportOracle oracle(netlist);
  // Structural support first, then drop variables the function ignores.
  std::map<Support, std::vector<std::pair<NetId, TruthTable>>> by_support;
  for (NetId sink : stage_sinks(netlist)) {
    if (oracle.driver(sink) == nullptr) continue;
    const Support* s = oracle.of(sink);
    if (s == nullptr || s->size() < kMinBits) continue;
    const auto f = cone_functions(netlist, {sink}).at(sink);
    std::vector<std::string> vars;
    for (NetId n : *s) vars.push_back(net_variable(n));
    const TruthTable t = truth_table(f, vars);
    Support used;
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < s->size(); ++i) {
      for (std::size_t r = 0; r < t.rows(); ++r) {
        if (((r >> i) & 1U) == 0 && t.bit(r) != t.bit(r | (std::size_t{1} << i))) {
          used.push_back((*s)[i]);
          positions.push_back(i);
          break;
        }
      }
    }
    if (used.size() < kMinBits) continue;
    if (used.size() == s->size()) {
      by_support[used].emplace_back(sink, t);
      continue;
    }
    // Project onto the used variables; the others do not matter.
    std::vector<std::string> uv;
    for (NetId n : used) uv.push_back(net_variable(n));
    std::vector<std::uint64_t> words(((std::size_t{1} << used.size()) + 63) / 64, 0);
    for (std::size_t r = 0; r < (std::size_t{1} << used.size()); ++r) {
      std::size_t full = 0;
      for (std::size_t k = 0; k < positions.size(); ++k) full |= ((r >> k) & 1U) << positions[k];
      if (t.bit(full)) words[r / 64] |= std::uint64_t{1} << (r % 64);
    }
    by_support[used].emplace_back(sink, TruthTable(uv, words));
  }

  std::vector<SBoxCandidate> out;
  for (auto& [support, sinks] : by_support) {
    if (sinks.size() != support.size()) continue;
    SBoxCandidate c;
    c.inputs = support;
    for (auto& [net, table] : sinks) {
      c.outputs.push_back(net);
      c.tables.push_back(std::move(table));
    }
    c.gates = cone_gates(oracle, c.outputs);
    if (dataflow != nullptr) {
      for (NetId in : c.inputs) {
        if (auto d = netlist.get_net(in).driver_gate()) {
          if (auto grp = dataflow->group_of(*d)) c.source_groups.insert(*grp);
        }
      }
      for (NetId o : c.outputs) {
        for (const auto& e : netlist.get_net(o).sinks) {
          if (e.kind != Endpoint::Kind::gate_pin) continue;
          if (auto grp = dataflow->group_of(e.gate)) c.sink_groups.insert(*grp);
        }
      }
    }
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const SBoxCandidate& a, const SBoxCandidate& b) { return a.outputs < b.outputs; });
  return out;
}

bool verify_match(const std::vector<std::uint32_t>& candidate_values, const std::vector<std::uint32_t>& library_table,
                  const std::vector<std::size_t>& input_permutation, const std::vector<std::size_t>& output_permutation) {
  const std::size_t n = input_permutation.size();
  if (output_permutation.size() != n || candidate_values.size() != (std::size_t{1} << n) ||
      library_table.size() != candidate_values.size()) {
    return false;
  }
  for (std::uint32_t u = 0; u < library_table.size(); ++u) {
    std::uint32_t x = 0, y = 0;
    for (std::size_t k = 0; k < n; ++k) {
      x |= ((u >> k) & 1U) << input_permutation[k];
      y |= ((library_table[u] >> k) & 1U) << output_permutation[k];
    }
    if (candidate_values[x] != y) return false;
  }
  return true;
}

namespace {

using Column = std::array<std::uint64_t, 4>;

std::optional<SBoxIdentification> search(const std::vector<std::uint32_t>& values, const SBoxLibraryEntry& entry) {
  const std::size_t n = entry.n;
  const std::size_t rows = std::size_t{1} << n;
  std::vector<Column> lib(n, Column{});
  for (std::size_t u = 0; u < rows; ++u) {
    for (std::size_t k = 0; k < n; ++k) {
      if ((entry.table[u] >> k) & 1U) lib[k][u >> 6] |= std::uint64_t{1} << (u & 63);
    }
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::uint32_t> px(rows);
  std::vector<Column> cols(n);
  std::vector<std::size_t> outp(n);
  std::vector<bool> used(n);
  do {
    // px[u] = candidate row carrying library input u
    px[0] = 0;
    for (std::size_t u = 1; u < rows; ++u) {
      const std::size_t low = static_cast<std::size_t>(__builtin_ctzll(u));
      px[u] = px[u & (u - 1)] | (std::uint32_t{1} << perm[low]);
    }
    std::fill(cols.begin(), cols.end(), Column{});
    for (std::size_t u = 0; u < rows; ++u) {
      std::uint32_t y = values[px[u]];
      while (y != 0) {
        const auto j = static_cast<std::size_t>(__builtin_ctz(y));
        cols[j][u >> 6] |= std::uint64_t{1} << (u & 63);
        y &= y - 1;
      }
    }
    std::fill(used.begin(), used.end(), false);
    bool ok = true;
    for (std::size_t k = 0; k < n && ok; ++k) {
      ok = false;
      for (std::size_t j = 0; j < n; ++j) {
        if (!used[j] && cols[j] == lib[k]) {
          used[j] = true;
          outp[k] = j;
          ok = true;
          break;
        }
      }
    }
    if (ok) return SBoxIdentification{SBoxVerdict::match, entry.cipher, perm, outp};
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::nullopt;
}

}  // namespace

SBoxIdentification identify(const SBoxCandidate& candidate, const std::vector<SBoxLibraryEntry>& library) {
  const auto values = candidate.values();
  const std::size_t n = candidate.inputs.size();
  SBoxIdentification r;
  if (candidate.outputs.size() != n) return r;
  std::vector<bool> hit(values.size(), false);
  for (std::uint32_t v : values) {
    if (v >= hit.size() || hit[v]) return r;
    hit[v] = true;
  }
  r.verdict = SBoxVerdict::bijective_unknown;
  for (const auto& entry : library) {
    if (entry.n != n || entry.table.size() != values.size()) continue;
    if (auto m = search(values, entry)) return *m;
  }
  return r;
}

std::size_t CryptoReport::match_count() const {
  return static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(), [](const CryptoFinding& f) {
    return f.identification.verdict == SBoxVerdict::match;
  }));
}

namespace {

ModuleId common_module(const Netlist& nl, const std::set<GateId>& gates) {
  std::optional<ModuleId> m;
  for (GateId g : gates) {
    ModuleId gm = nl.get_gate(g).module;
    if (!m) {
      m = gm;
      continue;
    }
    while (!nl.is_ancestor(*m, gm)) m = *nl.get_module(*m).parent;
  }
  return m.value_or(nl.top_module());
}

}  // namespace

CryptoReport scan_crypto(const Netlist& netlist, const ScanOptions& options) {
  const DataflowGraph dataflow = options.dataflow ? *options.dataflow : recover_registers(netlist);
  auto candidates = enumerate_candidates(netlist, &dataflow);

  std::vector<SBoxIdentification> ids(candidates.size());
  std::size_t threads = options.threads != 0 ? options.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, candidates.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < candidates.size(); i = next++) ids[i] = identify(candidates[i], options.library);
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  CryptoReport report;
  report.candidates = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (ids[i].verdict == SBoxVerdict::not_bijective) {
      ++report.not_bijective;
      continue;
    }
    const ModuleId m = common_module(netlist, candidates[i].gates);
    report.findings.push_back({std::move(candidates[i]), std::move(ids[i]), m});
  }
  std::stable_sort(report.findings.begin(), report.findings.end(), [](const CryptoFinding& a, const CryptoFinding& b) {
    return a.identification.verdict < b.identification.verdict;
  });
  return report;
}

nlohmann::json to_json(const CryptoReport& report) {
  using nlohmann::json;
  json findings = json::array();
  for (const auto& f : report.findings) {
    json in = json::array(), out = json::array(), gates = json::array(), table = json::array();
    for (NetId n : f.candidate.inputs) in.push_back(n.value);
    for (NetId n : f.candidate.outputs) out.push_back(n.value);
    for (GateId g : f.candidate.gates) gates.push_back(g.value);
    for (std::uint32_t v : f.candidate.values()) table.push_back(v);
    json entry = {{"inputs", in},
                  {"outputs", out},
                  {"gates", gates},
                  {"table", table},
                  {"verdict", to_string(f.identification.verdict)},
                  {"module", f.module.value},
                  {"source_groups", f.candidate.source_groups},
                  {"sink_groups", f.candidate.sink_groups}};
    if (f.identification.verdict == SBoxVerdict::match) {
      entry["cipher"] = f.identification.cipher;
      entry["input_permutation"] = f.identification.input_permutation;
      entry["output_permutation"] = f.identification.output_permutation;
    }
    findings.push_back(std::move(entry));
  }
  return {{"candidates", report.candidates}, {"not_bijective", report.not_bijective}, {"findings", findings}};
}

std::string format_report(const CryptoReport& report, const Netlist& netlist) {
  std::ostringstream os;
  os << report.candidates << " candidate(s), " << report.match_count() << " match(es), " << report.not_bijective
     << " not bijective\n";
  for (const auto& f : report.findings) {
    const auto& c = f.candidate;
    os << (f.identification.verdict == SBoxVerdict::match ? f.identification.cipher : "unknown") << " " << c.inputs.size()
       << "x" << c.outputs.size() << " in module '" << netlist.get_module(f.module).name << "', " << c.gates.size()
       << " gates\n  inputs:";
    for (std::size_t i = 0; i < c.inputs.size(); ++i) {
      os << " " << netlist.get_net(c.inputs[i]).name;
    }
    os << "\n  outputs:";
    for (NetId n : c.outputs) os << " " << netlist.get_net(n).name;
    os << "\n";
    if (f.identification.verdict == SBoxVerdict::match) {
      os << "  input bit k -> candidate input:";
      for (auto p : f.identification.input_permutation) os << " " << p;
      os << "\n  output bit k -> candidate output:";
      for (auto p : f.identification.output_permutation) os << " " << p;
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace gatescope
