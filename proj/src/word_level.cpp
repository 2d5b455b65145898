#include "gatescope/word_level.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <random>

#include "gatescope/symbolic.hpp"

namespace gatescope {

std::string to_string(ModuleKind k) {
  switch (k) {
    case ModuleKind::add: return "ADD";
    case ModuleKind::sub: return "SUB";
    case ModuleKind::const_mul: return "CONST_MUL";
    case ModuleKind::counter: return "COUNTER";
    case ModuleKind::shift_reg: return "SHIFT_REG";
    case ModuleKind::unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

std::string to_string(Verification v) {
  switch (v) {
    case Verification::verified: return "verified";
    case Verification::inconclusive: return "inconclusive";
    case Verification::failed: return "failed";
  }
  return "failed";
}

std::string to_string(OrderConfidence c) {
  switch (c) {
    case OrderConfidence::anchor: return "anchor";
    case OrderConfidence::propagated: return "propagated";
    case OrderConfidence::conflict: return "conflict";
  }
  return "conflict";
}

namespace {

using Word = std::vector<NetId>;
using BF = BooleanFunction;

constexpr std::size_t kFilterRows = 64;
constexpr std::size_t kCheckRows = 512;
constexpr std::size_t kMaxExtras = 8;
constexpr std::size_t kMaxTieCombos = 256;

std::optional<NetId> state_net(const Gate& g) {
  for (const auto& [pin, binding] : g.type->ff()->output_binding) {
    if (binding == StateBinding::state) {
      if (auto n = g.net_at(pin)) return n;
    }
  }
  return std::nullopt;
}

std::optional<NetId> data_net(const Gate& g) {
  const auto pins = g.type->data_pins();
  if (pins.size() != 1) return std::nullopt;
  return g.net_at(pins.front());
}

// Everything the order search and the verification need about a candidate.
struct Analysis {
  std::vector<Word> words;  // sorted ids
  Word outputs;             // sorted ids
  bool sequential = false;
  std::map<NetId, NetId> state_of;  // output -> state net, sequential only
  std::map<NetId, BF> fn;
  std::map<NetId, std::set<NetId>> support;  // restricted to word nets
  std::vector<NetId> extras;
  std::vector<NetId> vars;  // word nets, then extras
  std::map<NetId, std::size_t> var_index;
  std::vector<std::uint64_t> rows;     // per row, bit v = value of vars[v]
  std::vector<std::uint64_t> results;  // per row, bit j = value of outputs[j]
  std::size_t filter_rows = 0;
};

Analysis analyze(const Netlist& nl, const ModuleCandidate& cand, const IdentifyConfig& cfg) {
  if (cand.inputs.empty() || cand.inputs.size() > 2) {
    throw Error("module candidate needs one or two input words, got " + std::to_string(cand.inputs.size()));
  }
  Analysis a;
  for (const auto& w : cand.inputs) {
    if (w.empty() || w.size() > cfg.max_width) {
      throw Error("input word width " + std::to_string(w.size()) + " outside 1.." + std::to_string(cfg.max_width));
    }
    a.words.emplace_back(w.begin(), w.end());
  }
  if (cand.outputs.empty() || cand.outputs.size() > cfg.max_width + 2) {
    throw Error("output word width " + std::to_string(cand.outputs.size()) + " outside 1.." +
                std::to_string(cfg.max_width + 2));
  }
  a.outputs.assign(cand.outputs.begin(), cand.outputs.end());
  for (const auto& w : a.words) {
    for (NetId n : w) {
      if (nl.net(n) == nullptr) throw Error("unknown net " + std::to_string(n.value));
    }
  }
  for (NetId n : a.outputs) {
    if (nl.net(n) == nullptr) throw Error("unknown net " + std::to_string(n.value));
  }

  // Sequential when every output is the data net of a flip-flop whose state
  // output is in the single input word.
  if (a.words.size() == 1 && a.words[0].size() == a.outputs.size()) {
    const std::set<NetId> state(a.words[0].begin(), a.words[0].end());
    for (NetId o : a.outputs) {
      for (const auto& e : nl.get_net(o).sinks) {
        if (e.kind != Endpoint::Kind::gate_pin) continue;
        const Gate& g = nl.get_gate(e.gate);
        if (!g.type->is_sequential() || data_net(g) != o) continue;
        if (auto q = state_net(g); q && state.contains(*q)) a.state_of.emplace(o, *q);
      }
    }
    std::set<NetId> covered;
    for (const auto& [o, q] : a.state_of) covered.insert(q);
    a.sequential = a.state_of.size() == a.outputs.size() && covered == state;
    if (!a.sequential) a.state_of.clear();
  }

  ConeStops stops;
  for (const auto& w : a.words) stops.cut_nets.insert(w.begin(), w.end());
  {
    const auto raw = cone_functions(nl, std::set<NetId>(a.outputs.begin(), a.outputs.end()), stops);
    std::vector<BF> fs;
    for (NetId o : a.outputs) fs.push_back(raw.at(o));
    const auto simplified = simplify_all(fs);
    for (std::size_t i = 0; i < a.outputs.size(); ++i) a.fn.emplace(a.outputs[i], simplified[i]);
  }
  std::set<NetId> word_nets = stops.cut_nets, extras;
  for (NetId o : a.outputs) {
    auto& s = a.support[o];
    for (const auto& v : a.fn.at(o).support()) {
      const NetId n = *parse_net_variable(v);
      if (word_nets.contains(n)) {
        s.insert(n);
      } else {
        extras.insert(n);
      }
    }
  }
  a.extras.assign(extras.begin(), extras.end());
  for (const auto& w : a.words) a.vars.insert(a.vars.end(), w.begin(), w.end());
  a.vars.insert(a.vars.end(), a.extras.begin(), a.extras.end());
  for (std::size_t i = 0; i < a.vars.size(); ++i) a.var_index.emplace(a.vars[i], i);
  if (a.extras.size() > kMaxExtras) return a;  // no template accepts these

  // Sample rows: exhaustive when small, else seeded random.
  const std::size_t nv = a.vars.size();
  std::mt19937_64 rng(0x5eed + nv);
  const std::size_t full = std::size_t{1} << nv;
  const std::size_t total = kFilterRows + std::min(full, kCheckRows);
  for (std::size_t r = 0; r < kFilterRows; ++r) a.rows.push_back(rng() & (full - 1));
  for (std::size_t r = 0; r + kFilterRows < total; ++r) {
    a.rows.push_back(full <= kCheckRows ? r : (rng() & (full - 1)));
  }
  a.filter_rows = kFilterRows;
  std::vector<BF> roots;
  for (NetId o : a.outputs) roots.push_back(a.fn.at(o));
  std::vector<std::string> names;
  for (NetId v : a.vars) names.push_back(net_variable(v));
  const CompiledFunctions compiled(roots, names);
  std::vector<std::uint64_t> in(nv), out(roots.size()), scratch;
  a.results.assign(a.rows.size(), 0);
  for (std::size_t base = 0; base < a.rows.size(); base += 64) {
    const std::size_t count = std::min<std::size_t>(64, a.rows.size() - base);
    std::fill(in.begin(), in.end(), 0);
    for (std::size_t r = 0; r < count; ++r) {
      for (std::size_t v = 0; v < nv; ++v) in[v] |= ((a.rows[base + r] >> v) & 1U) << r;
    }
    compiled.run(in, out, scratch);
    for (std::size_t r = 0; r < count; ++r) {
      for (std::size_t j = 0; j < out.size(); ++j) a.results[base + r] |= ((out[j] >> r) & 1U) << j;
    }
  }
  return a;
}

struct Template {
  ModuleKind kind = ModuleKind::unknown;
  bool swap = false;  // SUB: second word is the minuend
  std::uint64_t constant = 0;
  std::optional<NetId> enable;
};

// Word orders under test: operands as given (before any swap), result in
// output bit order.
struct Orders {
  std::vector<Word> operands;
  Word result;
};

std::uint64_t mask(std::size_t bits) { return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1; }

std::uint64_t gather(const Analysis& a, std::uint64_t row, const Word& order) {
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < order.size(); ++k) v |= ((row >> a.var_index.at(order[k])) & 1U) << k;
  return v;
}

// Expected result and the bits it constrains.
std::pair<std::uint64_t, std::uint64_t> expected(const Analysis& a, const Template& t, const Orders& o,
                                                 std::uint64_t row) {
  const std::size_t m = o.result.size();
  const std::uint64_t x = gather(a, row, o.operands[0]);
  const std::uint64_t y = o.operands.size() > 1 ? gather(a, row, o.operands[1]) : 0;
  switch (t.kind) {
    case ModuleKind::add: return {(x + y) & mask(m), mask(m)};
    case ModuleKind::sub: return {(t.swap ? y - x : x - y) & mask(m), mask(m)};
    case ModuleKind::const_mul: return {(x * t.constant) & mask(m), mask(m)};
    case ModuleKind::counter: {
      const bool on = !t.enable || ((row >> a.var_index.at(*t.enable)) & 1U) != 0;
      return {(on ? x + t.constant : x) & mask(m), mask(m)};
    }
    case ModuleKind::shift_reg: return {(x << 1) & mask(m), mask(m) & ~std::uint64_t{1}};
    case ModuleKind::unknown: break;
  }
  return {0, 0};
}

std::uint64_t observed(const Analysis& a, std::size_t row_index, const Word& result) {
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < result.size(); ++k) {
    const auto j = static_cast<std::size_t>(std::lower_bound(a.outputs.begin(), a.outputs.end(), result[k]) - a.outputs.begin());
    v |= ((a.results[row_index] >> j) & 1U) << k;
  }
  return v;
}

bool sample_check(const Analysis& a, const Template& t, const Orders& o) {
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    const auto [want, care] = expected(a, t, o, a.rows[r]);
    if ((observed(a, r, o.result) & care) != want) return false;
  }
  return true;
}

// Boolean templates with constant folding.
BF bxor(const BF& x, const BF& y) {
  if (x.is_constant()) return x.constant_value() ? !y : y;
  if (y.is_constant()) return y.constant_value() ? !x : x;
  return x ^ y;
}
BF band(const BF& x, const BF& y) {
  if (x.is_constant()) return x.constant_value() ? y : x;
  if (y.is_constant()) return y.constant_value() ? x : y;
  return x & y;
}
BF bor(const BF& x, const BF& y) {
  if (x.is_constant()) return x.constant_value() ? x : y;
  if (y.is_constant()) return y.constant_value() ? y : x;
  return x | y;
}

std::vector<BF> ripple(std::vector<BF> x, std::vector<BF> y, BF carry, std::size_t m) {
  x.resize(m, BF::constant(false));
  y.resize(m, BF::constant(false));
  std::vector<BF> s;
  for (std::size_t i = 0; i < m; ++i) {
    const BF p = bxor(x[i], y[i]);
    s.push_back(bxor(p, carry));
    carry = bor(band(x[i], y[i]), band(p, carry));
  }
  return s;
}

std::vector<BF> vars_of(const Word& w) {
  std::vector<BF> out;
  for (NetId n : w) out.push_back(BF::variable(net_variable(n)));
  return out;
}

std::vector<BF> constant_bits(std::uint64_t c, std::size_t m) {
  std::vector<BF> out;
  for (std::size_t i = 0; i < m; ++i) out.push_back(BF::constant(((c >> i) & 1U) != 0));
  return out;
}

// Template function of each result bit; nullopt where unconstrained.
std::vector<std::optional<BF>> template_bits(const Template& t, const Orders& o) {
  const std::size_t m = o.result.size();
  const auto x = vars_of(o.operands[0]);
  std::vector<BF> bits;
  switch (t.kind) {
    case ModuleKind::add: bits = ripple(x, vars_of(o.operands[1]), BF::constant(false), m); break;
    case ModuleKind::sub: {
      auto minuend = t.swap ? vars_of(o.operands[1]) : x;
      auto sub = t.swap ? x : vars_of(o.operands[1]);
      sub.resize(m, BF::constant(false));
      for (auto& b : sub) b = b.is_constant() ? BF::constant(!b.constant_value()) : !b;
      bits = ripple(minuend, sub, BF::constant(true), m);
      break;
    }
    case ModuleKind::const_mul: {
      bits = constant_bits(0, m);
      for (std::size_t k = 0; k < m; ++k) {
        if (((t.constant >> k) & 1U) == 0) continue;
        std::vector<BF> shifted = constant_bits(0, k);
        shifted.insert(shifted.end(), x.begin(), x.end());
        if (shifted.size() > m) shifted.resize(m);
        bits = ripple(bits, shifted, BF::constant(false), m);
      }
      break;
    }
    case ModuleKind::counter: {
      bits = ripple(x, constant_bits(t.constant, m), BF::constant(false), m);
      if (t.enable) {
        const BF e = BF::variable(net_variable(*t.enable));
        for (std::size_t i = 0; i < m; ++i) bits[i] = (e & bits[i]) | ((!e) & x[i]);
      }
      break;
    }
    case ModuleKind::shift_reg: {
      std::vector<std::optional<BF>> out(m);
      for (std::size_t i = 1; i < m; ++i) out[i] = x[i - 1];
      return out;
    }
    case ModuleKind::unknown: break;
  }
  return {bits.begin(), bits.end()};
}

struct Proof {
  Verification verdict = Verification::failed;
  std::string method;
};

Proof prove(const Analysis& a, const Template& t, const Orders& o, const EquivalenceConfig& cfg) {
  const auto bits = template_bits(t, o);
  Proof p{Verification::verified, {}};
  std::set<std::string> methods;
  for (std::size_t i = 0; i < o.result.size(); ++i) {
    if (!bits[i]) continue;
    const auto r = equivalent(a.fn.at(o.result[i]), *bits[i], cfg);
    methods.insert(r.method);
    if (r.verdict == Verdict::different) return {Verification::failed, r.method};
    if (r.verdict == Verdict::inconclusive) p.verdict = Verification::inconclusive;
  }
  for (const auto& m : methods) p.method += (p.method.empty() ? "" : "+") + m;
  return p;
}

// Support-chain orders: outputs sorted by support size must have nested
// supports; the word bits first appearing at each level take the next
// positions. Ties are expanded up to a bounded number of combinations.
std::vector<Orders> chain_orders(const Analysis& a) {
  Word outs = a.outputs;
  std::stable_sort(outs.begin(), outs.end(),
                   [&](NetId x, NetId y) { return a.support.at(x).size() < a.support.at(y).size(); });
  std::vector<std::vector<NetId>> out_levels;
  std::vector<std::set<NetId>> level_support;
  for (NetId o : outs) {
    const auto& s = a.support.at(o);
    if (!level_support.empty() && level_support.back() == s) {
      out_levels.back().push_back(o);
      continue;
    }
    if (!level_support.empty() && !std::includes(s.begin(), s.end(), level_support.back().begin(), level_support.back().end())) {
      return {};
    }
    out_levels.push_back({o});
    level_support.push_back(s);
  }
  // Tie groups per word.
  std::vector<std::vector<std::vector<NetId>>> word_ties(a.words.size());
  std::set<NetId> prev;
  for (const auto& s : level_support) {
    for (std::size_t w = 0; w < a.words.size(); ++w) {
      std::vector<NetId> fresh;
      for (NetId n : a.words[w]) {
        if (s.contains(n) && !prev.contains(n)) fresh.push_back(n);
      }
      if (!fresh.empty()) word_ties[w].push_back(fresh);
    }
    prev = s;
  }
  for (std::size_t w = 0; w < a.words.size(); ++w) {
    std::vector<NetId> rest;
    for (NetId n : a.words[w]) {
      if (!prev.contains(n)) rest.push_back(n);
    }
    if (!rest.empty()) word_ties[w].push_back(rest);
  }

  // Every tie group, as a list of nets to permute.
  std::vector<std::vector<NetId>*> groups;
  for (auto& wt : word_ties) {
    for (auto& g : wt) groups.push_back(&g);
  }
  if (!a.sequential) {
    for (auto& g : out_levels) groups.push_back(&g);
  }
  for (auto* g : groups) std::sort(g->begin(), g->end());

  std::vector<Orders> out;
  for (;;) {
    Orders o;
    for (const auto& wt : word_ties) {
      Word w;
      for (const auto& g : wt) w.insert(w.end(), g.begin(), g.end());
      o.operands.push_back(w);
    }
    if (a.sequential) {
      std::map<NetId, NetId> out_of;
      for (const auto& [d, q] : a.state_of) out_of.emplace(q, d);
      for (NetId q : o.operands[0]) o.result.push_back(out_of.at(q));
    } else {
      for (const auto& g : out_levels) o.result.insert(o.result.end(), g.begin(), g.end());
    }
    out.push_back(std::move(o));
    if (out.size() >= kMaxTieCombos) break;
    // Odometer over the tie permutations.
    bool advanced = false;
    for (auto* g : groups) {
      if (std::next_permutation(g->begin(), g->end())) {
        advanced = true;
        break;
      }
    }
    if (!advanced) break;
  }
  return out;
}

// Shift chain: output of state q is exactly another state variable.
std::optional<Orders> shift_order(const Analysis& a) {
  if (!a.sequential || a.outputs.size() < 2) return std::nullopt;
  std::map<NetId, NetId> next_of;  // state -> state it feeds
  std::map<NetId, NetId> out_of;
  std::set<NetId> fed;
  for (const auto& [d, q] : a.state_of) {
    out_of.emplace(q, d);
    const BF f = simplify(a.fn.at(d));
    if (!f.is_variable()) continue;
    const auto src = parse_net_variable(f.name());
    if (!src || !std::binary_search(a.words[0].begin(), a.words[0].end(), *src)) continue;
    if (!next_of.emplace(*src, q).second) return std::nullopt;
    fed.insert(q);
  }
  std::vector<NetId> heads;
  for (NetId q : a.words[0]) {
    if (!fed.contains(q)) heads.push_back(q);
  }
  if (heads.size() != 1) return std::nullopt;
  Orders o;
  Word chain{heads[0]};
  while (next_of.contains(chain.back()) && chain.size() <= a.words[0].size()) chain.push_back(next_of.at(chain.back()));
  if (chain.size() != a.words[0].size()) return std::nullopt;
  for (NetId q : chain) o.result.push_back(out_of.at(q));
  o.operands.push_back(std::move(chain));
  return o;
}

std::uint64_t constant_for(const Analysis& a, const Template& t, const Orders& o) {
  Assignment asg;
  for (NetId v : a.vars) asg.emplace(net_variable(v), false);
  if (t.kind == ModuleKind::const_mul) asg[net_variable(o.operands[0][0])] = true;
  if (t.enable) asg[net_variable(*t.enable)] = true;
  std::uint64_t c = 0;
  for (std::size_t k = 0; k < o.result.size(); ++k) {
    if (evaluate(a.fn.at(o.result[k]), asg)) c |= std::uint64_t{1} << k;
  }
  return c;
}

std::vector<Template> templates(const Analysis& a) {
  std::vector<Template> out;
  if (a.sequential) {
    out.push_back({ModuleKind::shift_reg, false, 0, std::nullopt});
    if (a.extras.empty()) out.push_back({ModuleKind::counter, false, 0, std::nullopt});
    if (a.extras.size() == 1) out.push_back({ModuleKind::counter, false, 0, a.extras[0]});
    return out;
  }
  if (!a.extras.empty()) return out;
  if (a.words.size() == 2) {
    const std::size_t w = a.words[0].size(), m = a.outputs.size();
    if (a.words[1].size() == w && (m == w || m == w + 1)) {
      out.push_back({ModuleKind::add, false, 0, std::nullopt});
      out.push_back({ModuleKind::sub, false, 0, std::nullopt});
      out.push_back({ModuleKind::sub, true, 0, std::nullopt});
    }
  } else {
    out.push_back({ModuleKind::const_mul, false, 0, std::nullopt});
  }
  return out;
}

// Constants worth trying for a parameterized template during exhaustive search.
std::vector<std::uint64_t> constant_range(const Template& t, std::size_t m) {
  std::vector<std::uint64_t> out;
  if (t.kind == ModuleKind::const_mul || t.kind == ModuleKind::counter) {
    for (std::uint64_t c = 1; c < (std::uint64_t{1} << m); ++c) out.push_back(c);
  } else {
    out.push_back(0);
  }
  return out;
}

// Outputs matched to expected result columns over the filter rows, then
// confirmed on every row.
std::optional<Word> match_outputs(const Analysis& a, const Template& t, Orders o, std::size_t m) {
  std::vector<std::uint64_t> want(m, 0);
  o.result.assign(m, NetId{});
  for (std::size_t r = 0; r < a.filter_rows; ++r) {
    const auto [v, care] = expected(a, t, o, a.rows[r]);
    for (std::size_t j = 0; j < m; ++j) want[j] |= ((v >> j) & 1U) << r;
  }
  std::vector<std::uint64_t> have(a.outputs.size(), 0);
  for (std::size_t r = 0; r < a.filter_rows; ++r) {
    for (std::size_t j = 0; j < a.outputs.size(); ++j) have[j] |= ((a.results[r] >> j) & 1U) << r;
  }
  std::vector<bool> used(a.outputs.size(), false);
  for (std::size_t k = 0; k < m; ++k) {
    bool found = false;
    for (std::size_t j = 0; j < a.outputs.size() && !found; ++j) {
      if (!used[j] && have[j] == want[k]) {
        used[j] = true;
        o.result[k] = a.outputs[j];
        found = true;
      }
    }
    if (!found) return std::nullopt;
  }
  if (!sample_check(a, t, o)) return std::nullopt;
  return o.result;
}

template <typename F>
bool for_each_permutation_pair(const std::vector<Word>& words, F&& visit) {
  Word first = words[0];
  do {
    if (words.size() == 1) {
      if (visit(std::vector<Word>{first})) return true;
      continue;
    }
    Word second = words[1];
    do {
      if (visit(std::vector<Word>{first, second})) return true;
    } while (std::next_permutation(second.begin(), second.end()));
  } while (std::next_permutation(first.begin(), first.end()));
  return false;
}

IdentifiedModule finish(const Template& t, const Orders& o, const Proof& p) {
  IdentifiedModule m;
  m.method = p.method;
  if (p.verdict == Verification::inconclusive) {
    m.verification = Verification::inconclusive;
    m.tentative = t.kind;
  } else {
    m.kind = t.kind;
    m.verification = Verification::verified;
  }
  m.constant = t.constant;
  m.enable = t.enable;
  m.operands = o.operands;
  if (t.swap) std::swap(m.operands[0], m.operands[1]);
  m.result = o.result;
  return m;
}

}  // namespace

ModuleCandidate register_candidate(const Netlist& netlist, const std::vector<GateId>& flip_flops) {
  ModuleCandidate c;
  c.inputs.emplace_back();
  for (GateId id : flip_flops) {
    const Gate& g = netlist.get_gate(id);
    if (!g.type->is_sequential()) throw Error("gate " + std::to_string(id.value) + " is not a flip-flop");
    const auto q = state_net(g);
    const auto d = data_net(g);
    if (!q || !d) throw Error("flip-flop " + std::to_string(id.value) + " lacks a single data and state net");
    c.inputs[0].insert(*q);
    c.outputs.insert(*d);
  }
  return c;
}

IdentifiedModule identify_module(const Netlist& netlist, const ModuleCandidate& candidate,
                                 const IdentifyConfig& config) {
  const Analysis a = analyze(netlist, candidate, config);
  IdentifiedModule unknown;
  unknown.method = "no template verified";
  const auto temps = templates(a);
  if (temps.empty() || a.rows.empty()) return unknown;
  std::optional<IdentifiedModule> pending;  // first inconclusive attempt

  auto attempt = [&](Template t, const Orders& o) -> std::optional<IdentifiedModule> {
    if (t.kind == ModuleKind::const_mul || t.kind == ModuleKind::counter) {
      t.constant = constant_for(a, t, o);
      if (t.constant == 0) return std::nullopt;
    }
    if (!sample_check(a, t, o)) return std::nullopt;
    const Proof p = prove(a, t, o, config.equivalence);
    if (p.verdict == Verification::verified) return finish(t, o, p);
    if (p.verdict == Verification::inconclusive && !pending) pending = finish(t, o, p);
    return std::nullopt;
  };

  // Fast paths.
  const auto chains = chain_orders(a);
  const auto shift = shift_order(a);
  for (const Template& t : temps) {
    if (t.kind == ModuleKind::shift_reg) {
      if (shift) {
        if (auto r = attempt(t, *shift)) return *r;
      }
      continue;
    }
    for (const Orders& o : chains) {
      if (auto r = attempt(t, o)) return *r;
    }
  }

  // Exhaustive order search for narrow words.
  for (const auto& w : a.words) {
    if (w.size() > config.fallback_width) return pending.value_or(unknown);
  }
  const std::size_t m = a.outputs.size();
  for (const Template& base : temps) {
    if (base.kind == ModuleKind::shift_reg) continue;
    for (std::uint64_t c : constant_range(base, m)) {
      Template t = base;
      t.constant = c;
      std::optional<IdentifiedModule> found;
      for_each_permutation_pair(a.words, [&](const std::vector<Word>& ops) {
        Orders o{ops, {}};
        if (a.sequential) {
          std::map<NetId, NetId> out_of;
          for (const auto& [d, q] : a.state_of) out_of.emplace(q, d);
          for (NetId q : ops[0]) o.result.push_back(out_of.at(q));
          if (!sample_check(a, t, o)) return false;
        } else {
          auto r = match_outputs(a, t, o, m);
          if (!r) return false;
          o.result = *r;
        }
        const Proof p = prove(a, t, o, config.equivalence);
        if (p.verdict == Verification::verified) {
          found = finish(t, o, p);
          found->method += " (exhaustive order search)";
          return true;
        }
        if (p.verdict == Verification::inconclusive && !pending) pending = finish(t, o, p);
        return false;
      });
      if (found) return *found;
    }
  }
  return pending.value_or(unknown);
}

std::vector<Anchor> find_anchors(const Netlist& netlist, const DataflowGraph& dataflow,
                                 const std::vector<IdentifiedModule>& identified) {
  std::vector<Anchor> out;
  for (std::size_t i = 0; i < identified.size(); ++i) {
    const auto& m = identified[i];
    if (m.kind == ModuleKind::unknown || m.verification != Verification::verified) continue;
    const std::string tag = to_string(m.kind) + " #" + std::to_string(i);
    for (std::size_t k = 0; k < m.operands.size(); ++k) out.push_back({m.operands[k], tag + " operand " + std::to_string(k)});
    out.push_back({m.result, tag + " result"});
  }
  for (const auto& [id, g] : dataflow.groups) {
    if (!g.ordered || g.members.size() < 2) continue;
    Anchor a{{}, "shift chain " + g.name};
    for (GateId f : g.members) {
      const auto q = state_net(netlist.get_gate(f));
      if (!q) {
        a.nets.clear();
        break;
      }
      a.nets.push_back(*q);
    }
    if (!a.nets.empty()) out.push_back(std::move(a));
  }
  return out;
}

namespace {

// Flip-flops reached from `net` through single-input combinational gates,
// towards drivers (their state output) and towards sinks (their data pin).
std::set<GateId> single_bit_reach(const Netlist& nl, NetId net) {
  std::set<GateId> out;
  auto one_input = [](const Gate& g) {
    return !g.type->is_sequential() && g.type->input_pins().size() == 1 && g.type->output_pins().size() == 1;
  };
  std::set<NetId> seen;
  std::deque<NetId> back{net};
  while (!back.empty()) {
    const NetId n = back.front();
    back.pop_front();
    if (!seen.insert(n).second) continue;
    const Net& x = nl.get_net(n);
    if (x.global_input || x.drivers.size() != 1) continue;
    const Gate& g = nl.get_gate(x.drivers.front().gate);
    if (g.type->is_sequential()) {
      out.insert(g.id);
    } else if (one_input(g)) {
      if (auto in = g.net_at(g.type->input_pins().front())) back.push_back(*in);
    }
  }
  seen.clear();
  std::deque<NetId> fwd{net};
  while (!fwd.empty()) {
    const NetId n = fwd.front();
    fwd.pop_front();
    if (!seen.insert(n).second) continue;
    for (const auto& e : nl.get_net(n).sinks) {
      if (e.kind != Endpoint::Kind::gate_pin) continue;
      const Gate& g = nl.get_gate(e.gate);
      if (g.type->is_sequential()) {
        if (data_net(g) == n) out.insert(g.id);
      } else if (one_input(g)) {
        if (auto o = g.net_at(g.type->output_pins().front())) fwd.push_back(*o);
      }
    }
  }
  return out;
}

struct Implication {
  std::vector<GateId> order;
  std::string source;
};

// Orders implied by one word for every group it fully covers.
std::map<std::uint32_t, std::vector<GateId>> implied_orders(const Netlist& nl, const DataflowGraph& df,
                                                            const std::vector<NetId>& word) {
  std::map<std::uint32_t, std::map<GateId, std::size_t>> pos;
  std::map<std::uint32_t, std::set<std::size_t>> ambiguous_pos;
  for (std::size_t i = 0; i < word.size(); ++i) {
    std::map<std::uint32_t, std::vector<GateId>> hits;
    for (GateId f : single_bit_reach(nl, word[i])) {
      if (auto g = df.group_of(f)) hits[*g].push_back(f);
    }
    for (const auto& [g, fs] : hits) {
      if (fs.size() != 1) continue;  // several bits of one group on one position
      auto [it, fresh] = pos[g].emplace(fs[0], i);
      if (!fresh && it->second != i) ambiguous_pos[g].insert(i);
    }
  }
  std::map<std::uint32_t, std::vector<GateId>> out;
  for (const auto& [g, p] : pos) {
    const auto& members = df.groups.at(g).members;
    if (ambiguous_pos.contains(g) || p.size() != members.size()) continue;
    std::set<std::size_t> distinct;
    for (const auto& [f, i] : p) distinct.insert(i);
    if (distinct.size() != p.size()) continue;
    std::vector<GateId> order(members.begin(), members.end());
    std::sort(order.begin(), order.end(), [&](GateId x, GateId y) { return p.at(x) < p.at(y); });
    out.emplace(g, std::move(order));
  }
  return out;
}

}  // namespace

BitOrderAssignment propagate_bit_order(const Netlist& netlist, const DataflowGraph& dataflow,
                                       const std::vector<Anchor>& anchors) {
  BitOrderAssignment result;
  struct Frontier {
    std::vector<NetId> word;
    std::string source;
  };
  std::vector<Frontier> frontier;
  for (const auto& a : anchors) frontier.push_back({a.nets, a.source});
  for (std::size_t distance = 0; !frontier.empty(); ++distance) {
    std::map<std::uint32_t, std::vector<Implication>> found;
    for (const auto& f : frontier) {
      for (auto& [g, order] : implied_orders(netlist, dataflow, f.word)) {
        if (result.groups.contains(g)) continue;
        found[g].push_back({std::move(order), f.source});
      }
    }
    frontier.clear();
    for (auto& [g, imps] : found) {
      GroupOrder go;
      go.distance = distance;
      go.confidence = distance == 0 ? OrderConfidence::anchor : OrderConfidence::propagated;
      for (const auto& imp : imps) {
        if (std::find(go.sources.begin(), go.sources.end(), imp.source) == go.sources.end()) go.sources.push_back(imp.source);
      }
      const bool agree = std::all_of(imps.begin(), imps.end(), [&](const Implication& i) { return i.order == imps[0].order; });
      if (!agree) {
        go.confidence = OrderConfidence::conflict;
        result.groups.emplace(g, std::move(go));
        continue;
      }
      go.order = imps[0].order;
      // An ordered group orders its neighbours through its state and data nets.
      Frontier q{{}, dataflow.groups.at(g).name}, d{{}, dataflow.groups.at(g).name};
      for (GateId f : go.order) {
        const Gate& gate = netlist.get_gate(f);
        if (auto n = state_net(gate)) q.word.push_back(*n);
        if (auto n = data_net(gate)) d.word.push_back(*n);
      }
      if (q.word.size() == go.order.size()) frontier.push_back(std::move(q));
      if (d.word.size() == go.order.size()) frontier.push_back(std::move(d));
      result.groups.emplace(g, std::move(go));
    }
  }
  return result;
}

nlohmann::json to_json(const IdentifiedModule& m) {
  using nlohmann::json;
  auto ids = [](const Word& w) {
    json a = json::array();
    for (NetId n : w) a.push_back(n.value);
    return a;
  };
  json ops = json::array();
  for (const auto& w : m.operands) ops.push_back(ids(w));
  json j = {{"kind", to_string(m.kind)},
            {"constant", m.constant},
            {"operands", ops},
            {"result", ids(m.result)},
            {"verification", to_string(m.verification)},
            {"method", m.method}};
  if (m.enable) j["enable"] = m.enable->value;
  if (m.tentative) j["tentative"] = to_string(*m.tentative);
  return j;
}

nlohmann::json to_json(const BitOrderAssignment& a) {
  using nlohmann::json;
  json groups = json::array();
  for (const auto& [id, g] : a.groups) {
    json order = json::array();
    for (GateId f : g.order) order.push_back(f.value);
    groups.push_back({{"group", id},
                      {"flip_flops", order},
                      {"confidence", to_string(g.confidence)},
                      {"distance", g.distance},
                      {"sources", g.sources}});
  }
  return {{"groups", groups}};
}

}  // namespace gatescope
