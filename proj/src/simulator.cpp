#include "gatescope/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "gatescope/boolean_function.hpp"

namespace gatescope {

char to_char(Logic v) {
  switch (v) {
    case Logic::zero: return '0';
    case Logic::one: return '1';
    case Logic::x: return 'x';
  }
  return 'x';
}

std::optional<Logic> parse_logic(std::string_view text) {
  if (text == "0") return Logic::zero;
  if (text == "1") return Logic::one;
  if (text == "x" || text == "X") return Logic::x;
  return std::nullopt;
}

namespace {

constexpr std::size_t kTableLimit = 16;

Logic negate(Logic v) {
  if (v == Logic::x) return v;
  return v == Logic::one ? Logic::zero : Logic::one;
}

// Kleene evaluation, used only for cells too wide for a table.
Logic kleene(const BooleanFunction& f, const std::map<std::string, Logic, std::less<>>& values) {
  switch (f.kind()) {
    case BooleanFunction::Kind::constant: return to_logic(f.is_constant(true));
    case BooleanFunction::Kind::variable: {
      auto it = values.find(f.name());
      return it == values.end() ? Logic::x : it->second;
    }
    case BooleanFunction::Kind::op_not: return negate(kleene(f.operands()[0], values));
    case BooleanFunction::Kind::op_and: {
      Logic r = Logic::one;
      for (const auto& op : f.operands()) {
        const Logic v = kleene(op, values);
        if (v == Logic::zero) return Logic::zero;
        if (v == Logic::x) r = Logic::x;
      }
      return r;
    }
    case BooleanFunction::Kind::op_or: {
      Logic r = Logic::zero;
      for (const auto& op : f.operands()) {
        const Logic v = kleene(op, values);
        if (v == Logic::one) return Logic::one;
        if (v == Logic::x) r = Logic::x;
      }
      return r;
    }
    case BooleanFunction::Kind::op_xor: {
      bool acc = false;
      for (const auto& op : f.operands()) {
        const Logic v = kleene(op, values);
        if (v == Logic::x) return Logic::x;
        acc ^= v == Logic::one;
      }
      return to_logic(acc);
    }
  }
  return Logic::x;
}

// Exact 3-valued evaluation: the result is known when every completion of
// the X inputs agrees.
class TernaryFunction {
 public:
  TernaryFunction(const BooleanFunction& f, const std::vector<std::string>& pins) : f_(f) {
    const auto support = f.support();
    for (const auto& v : support) {
      const auto it = std::find(pins.begin(), pins.end(), v);
      used_.push_back(static_cast<std::size_t>(it - pins.begin()));
      names_.push_back(v);
    }
    if (support.size() <= kTableLimit) table_ = truth_table(f, support);
  }

  [[nodiscard]] Logic eval(const std::vector<Logic>& in) const {
    if (!table_) {
      std::map<std::string, Logic, std::less<>> values;
      for (std::size_t i = 0; i < used_.size(); ++i) values.emplace(names_[i], in[used_[i]]);
      return kleene(f_, values);
    }
    std::size_t base = 0;
    std::uint32_t xmask = 0;
    for (std::size_t i = 0; i < used_.size(); ++i) {
      const Logic v = in[used_[i]];
      if (v == Logic::one) base |= std::size_t{1} << i;
      if (v == Logic::x) xmask |= 1U << i;
    }
    const bool first = table_->bit(base);
    // Enumerate subsets of the X positions.
    for (std::uint32_t sub = xmask; sub != 0; sub = (sub - 1) & xmask) {
      if (table_->bit(base | sub) != first) return Logic::x;
    }
    return to_logic(first);
  }

 private:
  BooleanFunction f_;
  std::vector<std::size_t> used_;
  std::vector<std::string> names_;
  std::optional<TruthTable> table_;
};

struct CellModel {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<TernaryFunction> functions;  // combinational, per output
  bool sequential = false;
  std::optional<TernaryFunction> next, clock, reset, set;
  std::vector<bool> negated;  // sequential, per output
};

CellModel make_model(const GateType& t) {
  CellModel m;
  m.inputs = t.input_pins();
  m.outputs = t.output_pins();
  if (const auto& ff = t.ff()) {
    m.sequential = true;
    m.next.emplace(ff->next_state, m.inputs);
    m.clock.emplace(ff->clock, m.inputs);
    if (ff->async_reset) m.reset.emplace(*ff->async_reset, m.inputs);
    if (ff->async_set) m.set.emplace(*ff->async_set, m.inputs);
    for (const auto& pin : m.outputs) {
      auto it = ff->output_binding.find(pin);
      m.negated.push_back(it != ff->output_binding.end() && it->second == StateBinding::negated_state);
    }
  } else {
    for (const auto& pin : m.outputs) m.functions.emplace_back(t.output_functions().at(pin), m.inputs);
  }
  return m;
}

constexpr int kNone = -1;
constexpr std::uint8_t kUnset = 3;

struct SimGate {
  GateId id;
  const CellModel* model = nullptr;
  std::vector<int> in, out;
  std::size_t ff = 0;
};

class Engine {
 public:
  Engine(const Netlist& nl, const std::optional<std::set<GateId>>& region, const SimulationInput& input, Time until,
         const SimulationOptions& options)
      : nl_(nl), until_(until), options_(options) {
    build(region);
    schedule(input);
  }

  WaveformSet run() {
    WaveformSet w;
    w.end_time = until_;
    for (std::size_t i = 0; i < nets_.size(); ++i) w.names.emplace(nets_[i], nl_.get_net(nets_[i]).name);

    std::vector<Logic> before(nets_.size());
    std::vector<bool> touched(nets_.size(), false);
    std::vector<std::size_t> touched_list;
    auto touch = [&](std::size_t n) {
      if (!touched[n]) {
        touched[n] = true;
        before[n] = values_[n];
        touched_list.push_back(n);
      }
    };

    auto it = events_.begin();
    bool first = true;
    while (first || it != events_.end()) {
      Time t = 0;
      std::vector<std::size_t> changed;
      if (!first || (it != events_.end() && it->first == 0)) {
        t = it->first;
        for (const auto& [n, v] : it->second) {
          touch(n);
          if (values_[n] != v) {
            values_[n] = v;
            changed.push_back(n);
          }
        }
        ++it;
      }
      settle(t, changed, first, touch);
      if (first) {
        for (std::size_t n = 0; n < nets_.size(); ++n) w.initial.emplace(nets_[n], values_[n]);
      } else {
        std::sort(touched_list.begin(), touched_list.end());
        for (std::size_t n : touched_list) {
          if (values_[n] != before[n]) w.changes[nets_[n]].emplace_back(t, values_[n]);
        }
      }
      for (std::size_t n : touched_list) touched[n] = false;
      touched_list.clear();
      first = false;
    }
    return w;
  }

 private:
  void build(const std::optional<std::set<GateId>>& region) {
    std::vector<GateId> ids;
    if (region) {
      for (GateId g : *region) {
        if (nl_.gate(g) == nullptr) throw SimulationError("region contains unknown gate " + std::to_string(g.value));
        ids.push_back(g);
      }
    } else {
      for (const auto& [id, g] : nl_.gates()) ids.push_back(id);
    }
    auto net_index = [&](NetId n) {
      auto [pos, fresh] = index_.try_emplace(n, nets_.size());
      if (fresh) nets_.push_back(n);
      return static_cast<int>(pos->second);
    };
    std::set<NetId> all;
    if (!region) {
      for (const auto& [id, n] : nl_.nets()) all.insert(id);
    }
    for (GateId id : ids) {
      for (const auto& [pin, n] : nl_.get_gate(id).connections) all.insert(n);
    }
    for (NetId n : all) net_index(n);
    values_.assign(nets_.size(), Logic::x);
    driver_.assign(nets_.size(), kNone);
    sinks_.assign(nets_.size(), {});
    forced_.assign(nets_.size(), false);
    stimulated_.assign(nets_.size(), false);

    for (GateId id : ids) {
      const Gate& g = nl_.get_gate(id);
      auto [pos, fresh] = models_.try_emplace(g.type, nullptr);
      if (fresh) pos->second = std::make_unique<CellModel>(make_model(*g.type));
      SimGate s;
      s.id = id;
      s.model = pos->second.get();
      const std::size_t gi = gates_.size();
      for (const auto& pin : s.model->inputs) {
        auto n = g.net_at(pin);
        s.in.push_back(n ? static_cast<int>(index_.at(*n)) : kNone);
        if (n) sinks_[index_.at(*n)].push_back(gi);
      }
      for (const auto& pin : s.model->outputs) {
        auto n = g.net_at(pin);
        s.out.push_back(n ? static_cast<int>(index_.at(*n)) : kNone);
        if (!n) continue;
        int& d = driver_[index_.at(*n)];
        if (d != kNone) {
          throw SimulationError("net '" + nl_.get_net(*n).name + "' has several drivers in the region", std::nullopt,
                                {*n});
        }
        d = static_cast<int>(gi);
      }
      if (s.model->sequential) {
        s.ff = ff_state_.size();
        ff_state_.push_back(Logic::x);
        ff_clock_.push_back(kUnset);
        ff_index_.emplace(id, s.ff);
      }
      gates_.push_back(std::move(s));
    }
    for (auto& s : sinks_) {
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
    }
  }

  std::size_t stimulus_net(NetId n, bool force) {
    auto it = index_.find(n);
    if (it == index_.end()) {
      throw SimulationError("stimulus targets net " + std::to_string(n.value) + " outside the simulated region",
                            std::nullopt, {n});
    }
    const std::size_t i = it->second;
    if (driver_[i] != kNone && !force) {
      throw SimulationError("stimulus targets net '" + nl_.get_net(n).name +
                                "', which is driven inside the region (use force)",
                            std::nullopt, {n});
    }
    if (stimulated_[i]) throw SimulationError("net '" + nl_.get_net(n).name + "' has several stimuli", std::nullopt, {n});
    stimulated_[i] = true;
    forced_[i] = force;
    return i;
  }

  void schedule(const SimulationInput& input) {
    for (const auto& s : input.stimuli) {
      const std::size_t i = stimulus_net(s.net, s.force);
      std::optional<Time> last;
      for (const auto& [t, v] : s.changes) {
        if (last && t <= *last) {
          throw SimulationError("stimulus times for net '" + nl_.get_net(s.net).name + "' must increase", t, {s.net});
        }
        last = t;
        if (t <= until_) events_[t].emplace_back(i, v);
      }
    }
    for (const auto& c : input.clocks) {
      if (c.period < 2 || c.high == 0 || c.high >= c.period) {
        throw SimulationError("clock on net '" + nl_.get_net(c.net).name + "' needs 0 < high < period");
      }
      const std::size_t i = stimulus_net(c.net, false);
      Logic v = c.start_value == Logic::x ? Logic::zero : c.start_value;
      for (Time t = c.start_time; t <= until_;) {
        events_[t].emplace_back(i, v);
        const Time hold = v == Logic::one ? c.high : c.period - c.high;
        v = negate(v);
        t += hold;
      }
    }
    for (const auto& [g, v] : input.initial_state) {
      auto it = ff_index_.find(g);
      if (it == ff_index_.end()) {
        throw SimulationError("initial state given for gate " + std::to_string(g.value) +
                              ", which is not a flip-flop in the region");
      }
      ff_state_[it->second] = v;
    }
    std::vector<NetId> missing;
    for (std::size_t n = 0; n < nets_.size(); ++n) {
      if (driver_[n] == kNone && !stimulated_[n] && !sinks_[n].empty()) missing.push_back(nets_[n]);
    }
    if (!missing.empty()) {
      std::string names;
      for (std::size_t k = 0; k < missing.size() && k < 8; ++k) names += (k ? ", " : "") + nl_.get_net(missing[k]).name;
      if (missing.size() > 8) names += ", ...";
      throw SimulationError("nets without driver or stimulus: " + names, std::nullopt, missing);
    }
  }

  template <typename Touch>
  void settle(Time t, std::vector<std::size_t> changed, bool initial, Touch& touch) {
    std::vector<std::size_t> pending;
    if (initial) {
      pending.resize(gates_.size());
      for (std::size_t i = 0; i < gates_.size(); ++i) pending[i] = i;
    }
    std::vector<Logic> in;
    std::vector<std::pair<std::size_t, Logic>> updates;
    for (std::size_t delta = 0;; ++delta) {
      for (std::size_t n : changed) pending.insert(pending.end(), sinks_[n].begin(), sinks_[n].end());
      std::sort(pending.begin(), pending.end());
      pending.erase(std::unique(pending.begin(), pending.end()), pending.end());
      if (pending.empty()) return;
      if (delta >= options_.delta_cap) {
        std::vector<NetId> nets;
        for (std::size_t n : changed) nets.push_back(nets_[n]);
        std::sort(nets.begin(), nets.end());
        std::string names;
        for (std::size_t k = 0; k < nets.size() && k < 8; ++k) names += (k ? ", " : "") + nl_.get_net(nets[k]).name;
        throw SimulationError("oscillation at t=" + std::to_string(t) + " after " + std::to_string(delta) +
                                  " delta cycles on nets: " + names,
                              t, nets);
      }
      updates.clear();
      for (std::size_t gi : pending) evaluate(gates_[gi], in, updates);
      pending.clear();
      changed.clear();
      for (const auto& [n, v] : updates) {
        if (forced_[n] || values_[n] == v) continue;
        touch(n);
        values_[n] = v;
        changed.push_back(n);
      }
    }
  }

  void evaluate(const SimGate& g, std::vector<Logic>& in, std::vector<std::pair<std::size_t, Logic>>& updates) {
    in.resize(g.in.size());
    for (std::size_t i = 0; i < g.in.size(); ++i) in[i] = g.in[i] == kNone ? Logic::x : values_[static_cast<std::size_t>(g.in[i])];
    const CellModel& m = *g.model;
    if (!m.sequential) {
      for (std::size_t o = 0; o < g.out.size(); ++o) {
        if (g.out[o] != kNone) updates.emplace_back(static_cast<std::size_t>(g.out[o]), m.functions[o].eval(in));
      }
      return;
    }
    Logic& state = ff_state_[g.ff];
    std::uint8_t& prev = ff_clock_[g.ff];
    const Logic clock = m.clock->eval(in);
    if (prev != kUnset && prev != static_cast<std::uint8_t>(clock)) {
      const auto p = static_cast<Logic>(prev);
      const bool rising = p == Logic::zero && clock == Logic::one;
      const bool maybe = (p == Logic::zero && clock == Logic::x) || (p == Logic::x && clock == Logic::one);
      if (rising || maybe) {
        const Logic d = m.next->eval(in);
        state = rising || d == state ? d : Logic::x;
      }
    }
    prev = static_cast<std::uint8_t>(clock);
    const Logic r = m.reset ? m.reset->eval(in) : Logic::zero;
    const Logic s = m.set ? m.set->eval(in) : Logic::zero;
    if (r == Logic::one) {
      state = Logic::zero;
    } else if (s == Logic::one) {
      state = Logic::one;
    } else {
      if (r == Logic::x && state != Logic::zero) state = Logic::x;
      if (s == Logic::x && state != Logic::one) state = Logic::x;
    }
    for (std::size_t o = 0; o < g.out.size(); ++o) {
      if (g.out[o] != kNone) updates.emplace_back(static_cast<std::size_t>(g.out[o]), m.negated[o] ? negate(state) : state);
    }
  }

  const Netlist& nl_;
  Time until_;
  SimulationOptions options_;
  std::vector<NetId> nets_;
  std::unordered_map<NetId, std::size_t> index_;
  std::vector<Logic> values_;
  std::vector<int> driver_;
  std::vector<std::vector<std::size_t>> sinks_;
  std::vector<bool> forced_, stimulated_;
  std::map<const GateType*, std::unique_ptr<CellModel>> models_;
  std::vector<SimGate> gates_;
  std::vector<Logic> ff_state_;
  std::vector<std::uint8_t> ff_clock_;
  std::unordered_map<GateId, std::size_t> ff_index_;
  std::map<Time, std::vector<std::pair<std::size_t, Logic>>> events_;
};

}  // namespace

WaveformSet simulate(const Netlist& netlist, const std::optional<std::set<GateId>>& region,
                     const SimulationInput& input, Time until, const SimulationOptions& options) {
  Engine engine(netlist, region, input, until, options);
  return engine.run();
}

Logic value_at(const WaveformSet& waveforms, NetId net, Time t) {
  if (t > waveforms.end_time) {
    throw Error("time " + std::to_string(t) + " is beyond the end time " + std::to_string(waveforms.end_time));
  }
  auto init = waveforms.initial.find(net);
  if (init == waveforms.initial.end()) throw Error("net " + std::to_string(net.value) + " was not recorded");
  auto it = waveforms.changes.find(net);
  if (it == waveforms.changes.end()) return init->second;
  const auto& list = it->second;
  auto pos = std::upper_bound(list.begin(), list.end(), t, [](Time v, const auto& c) { return v < c.first; });
  return pos == list.begin() ? init->second : std::prev(pos)->second;
}

std::map<NetId, Logic> state_at(const WaveformSet& waveforms, Time t) {
  std::map<NetId, Logic> out;
  for (const auto& [net, v] : waveforms.initial) out.emplace(net, value_at(waveforms, net, t));
  return out;
}

std::string vcd_identifier(std::size_t index) {
  constexpr std::size_t base = 94;
  std::string id;
  do {
    id += static_cast<char>('!' + index % base);
    index /= base;
  } while (index-- != 0);
  return id;
}

void write_vcd(const WaveformSet& waveforms, std::ostream& out, const VcdOptions& options) {
  std::vector<NetId> nets;
  for (const auto& [net, v] : waveforms.initial) {
    if (!options.nets || options.nets->contains(net)) nets.push_back(net);
  }
  std::map<NetId, std::string> ids;
  for (std::size_t i = 0; i < nets.size(); ++i) ids.emplace(nets[i], vcd_identifier(i));

  if (!options.date.empty()) out << "$date\n  " << options.date << "\n$end\n";
  out << "$version\n  " << options.version << "\n$end\n";
  out << "$timescale " << waveforms.time_unit << " $end\n";
  out << "$scope module " << options.module_name << " $end\n";
  for (NetId n : nets) {
    std::string name;
    if (auto it = waveforms.names.find(n); it != waveforms.names.end()) name = it->second;
    if (name.empty()) name = "n" + std::to_string(n.value);
    for (char& c : name) {
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') c = '_';
    }
    out << "$var wire 1 " << ids.at(n) << ' ' << name << " $end\n";
  }
  out << "$upscope $end\n$enddefinitions $end\n";
  out << "#0\n$dumpvars\n";
  for (NetId n : nets) out << to_char(waveforms.initial.at(n)) << ids.at(n) << '\n';
  out << "$end\n";

  std::map<Time, std::vector<std::pair<NetId, Logic>>> by_time;
  for (NetId n : nets) {
    auto it = waveforms.changes.find(n);
    if (it == waveforms.changes.end()) continue;
    for (const auto& [t, v] : it->second) by_time[t].emplace_back(n, v);
  }
  Time last = 0;
  for (const auto& [t, list] : by_time) {
    out << '#' << t << '\n';
    for (const auto& [n, v] : list) out << to_char(v) << ids.at(n) << '\n';
    last = t;
  }
  if (waveforms.end_time > last) out << '#' << waveforms.end_time << '\n';
}

namespace {

std::vector<std::pair<std::string_view, std::size_t>> split_words(std::string_view line) {
  std::vector<std::pair<std::string_view, std::size_t>> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size() || line[i] == '#') break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    out.emplace_back(line.substr(start, i - start), start + 1);
  }
  return out;
}

}  // namespace

SimulationInput parse_stimulus(std::string_view text, const Netlist& netlist, std::string_view source_name) {
  std::multimap<std::string, NetId, std::less<>> nets;
  for (const auto& [id, n] : netlist.nets()) nets.emplace(n.name, id);
  std::multimap<std::string, GateId, std::less<>> gates;
  for (const auto& [id, g] : netlist.gates()) gates.emplace(g.name, id);

  SimulationInput input;
  std::map<NetId, std::size_t> slot;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto words = split_words(line);
    if (words.empty()) continue;
    auto loc = [&](std::size_t k) { return SourceLocation{std::string(source_name), line_no, words[k].second}; };
    auto fail = [&](std::size_t k, const std::string& msg) { throw ParseError(loc(k), msg); };
    auto number = [&](std::size_t k) -> Time {
      Time v = 0;
      const auto w = words[k].first;
      auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
      if (ec != std::errc() || p != w.data() + w.size()) fail(k, "expected a non-negative integer, got '" + std::string(w) + "'");
      return v;
    };
    auto value = [&](std::size_t k) {
      auto v = parse_logic(words[k].first);
      if (!v) fail(k, "expected 0, 1 or x, got '" + std::string(words[k].first) + "'");
      return *v;
    };
    auto net = [&](std::size_t k) {
      auto [lo, hi] = nets.equal_range(words[k].first);
      if (lo == hi) fail(k, "unknown net '" + std::string(words[k].first) + "'");
      if (std::next(lo) != hi) fail(k, "net name '" + std::string(words[k].first) + "' is ambiguous");
      return lo->second;
    };
    const std::string_view head = words[0].first;
    if (head == "clock") {
      if (words.size() < 3 || words.size() > 6) fail(0, "usage: clock <net> <period> [<high> [<start> [<start_time>]]]");
      ClockSpec c;
      c.net = net(1);
      c.period = number(2);
      c.high = words.size() > 3 ? number(3) : c.period / 2;
      if (words.size() > 4) c.start_value = value(4);
      if (words.size() > 5) c.start_time = number(5);
      if (c.period < 2 || c.high == 0 || c.high >= c.period) fail(2, "clock needs 0 < high < period");
      input.clocks.push_back(c);
    } else if (head == "init") {
      if (words.size() != 3) fail(0, "usage: init <gate> <value>");
      auto [lo, hi] = gates.equal_range(words[1].first);
      if (lo == hi) fail(1, "unknown gate '" + std::string(words[1].first) + "'");
      if (std::next(lo) != hi) fail(1, "gate name '" + std::string(words[1].first) + "' is ambiguous");
      if (!netlist.get_gate(lo->second).type->is_sequential()) fail(1, "gate '" + std::string(words[1].first) + "' is not a flip-flop");
      input.initial_state[lo->second] = value(2);
    } else {
      const std::size_t off = head == "force" ? 1 : 0;
      if (words.size() != 3 + off) fail(0, "usage: [force] <net> <time> <value>");
      const NetId n = net(off);
      const Time t = number(off + 1);
      const Logic v = value(off + 2);
      auto [it, fresh] = slot.try_emplace(n, input.stimuli.size());
      if (fresh) input.stimuli.push_back(Stimulus{n, {}, off == 1});
      Stimulus& s = input.stimuli[it->second];
      if (s.force != (off == 1)) fail(0, "net '" + std::string(words[off].first) + "' mixes forced and plain changes");
      if (!s.changes.empty() && t <= s.changes.back().first) fail(off + 1, "times for a net must strictly increase");
      s.changes.emplace_back(t, v);
    }
  }
  return input;
}

}  // namespace gatescope
