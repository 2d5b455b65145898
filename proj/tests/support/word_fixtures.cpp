#include "word_fixtures.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace gstest {

std::vector<NetId> shuffled_nets(Netlist& nl, const std::string& prefix, std::size_t count, std::uint64_t seed,
                                 bool global_input) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  if (seed != 0) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<NetId> out(count);
  for (std::size_t i : order) {
    out[i] = nl.add_net(prefix + "[" + std::to_string(i) + "]");
    if (global_input) nl.set_global_input(out[i]);
  }
  return out;
}

namespace {

// Ripple-carry sum of x and y (equal widths) into the given result nets;
// result may have one extra bit for the carry out. `cin` may be empty.
void ripple_into(Builder& b, const std::vector<NetId>& x, const std::vector<NetId>& y, std::optional<NetId> cin,
                 const std::vector<NetId>& result) {
  const std::size_t w = x.size();
  std::optional<NetId> carry = cin;
  for (std::size_t i = 0; i < w; ++i) {
    const bool carry_out = i + 1 == w && result.size() == w + 1;
    const bool need = i + 1 < w || carry_out;
    NetId next;
    if (!carry) {
      b.gate_into("XOR2", {x[i], y[i]}, result[i]);
      if (!need) break;
      if (carry_out) {
        b.gate_into("AND2", {x[i], y[i]}, result[w]);
        break;
      }
      next = b.gate("AND2", {x[i], y[i]});
    } else {
      NetId p = b.gate("XOR2", {x[i], y[i]});
      b.gate_into("XOR2", {p, *carry}, result[i]);
      if (!need) break;
      NetId g = b.gate("AND2", {x[i], y[i]});
      NetId t = b.gate("AND2", {p, *carry});
      if (carry_out) {
        b.gate_into("OR2", {g, t}, result[w]);
        break;
      }
      next = b.gate("OR2", {g, t});
    }
    carry = next;
  }
}

WordFixture finish(Builder& b, WordFixture f) {
  f.netlist = std::move(b.nl);
  return f;
}

}  // namespace

WordFixture adder_fixture(std::size_t width, bool carry_out, std::uint64_t seed) {
  Builder b(cells(), "add" + std::to_string(width));
  WordFixture f{Netlist(cells()), ModuleKind::add, 0, {}, {}, {}, {}};
  auto a = shuffled_nets(b.nl, "a", width, seed, true);
  auto c = shuffled_nets(b.nl, "b", width, seed * 3, true);
  auto s = shuffled_nets(b.nl, "s", width + (carry_out ? 1 : 0), seed * 7, false);
  for (NetId n : s) b.output(n);
  ripple_into(b, a, c, std::nullopt, s);
  f.operands = {a, c};
  f.result = s;
  f.candidate = {{{a.begin(), a.end()}, {c.begin(), c.end()}}, {s.begin(), s.end()}};
  return finish(b, std::move(f));
}

WordFixture subtractor_fixture(std::size_t width, std::uint64_t seed) {
  Builder b(cells(), "sub" + std::to_string(width));
  WordFixture f{Netlist(cells()), ModuleKind::sub, 0, {}, {}, {}, {}};
  auto a = shuffled_nets(b.nl, "a", width, seed, true);
  auto c = shuffled_nets(b.nl, "b", width, seed * 3, true);
  auto d = shuffled_nets(b.nl, "d", width, seed * 7, false);
  for (NetId n : d) b.output(n);
  std::vector<NetId> nb;
  for (NetId n : c) nb.push_back(b.gate("INV", {n}));
  ripple_into(b, a, nb, b.gate("TIE1", std::vector<NetId>{}), d);
  f.operands = {a, c};
  f.result = d;
  f.candidate = {{{c.begin(), c.end()}, {a.begin(), a.end()}}, {d.begin(), d.end()}};
  return finish(b, std::move(f));
}

WordFixture times3_fixture(std::size_t width, std::uint64_t seed) {
  Builder b(cells(), "mul3_" + std::to_string(width));
  WordFixture f{Netlist(cells()), ModuleKind::const_mul, 3, {}, {}, {}, {}};
  auto a = shuffled_nets(b.nl, "a", width, seed, true);
  auto p = shuffled_nets(b.nl, "p", width + 2, seed * 7, false);
  for (NetId n : p) b.output(n);
  // p = a + (a << 1): bit 0 is a0, the rest is a[1..] + a[0..] over width bits plus carry.
  b.gate_into("BUF", {a[0]}, p[0]);
  std::vector<NetId> hi(a.begin() + 1, a.end()), lo(a.begin(), a.end() - 1);
  hi.push_back(b.gate("TIE0", std::vector<NetId>{}));
  lo.push_back(a.back());
  std::vector<NetId> rest(p.begin() + 1, p.end());
  ripple_into(b, hi, lo, std::nullopt, rest);
  f.operands = {a};
  f.result = p;
  f.candidate = {{{a.begin(), a.end()}}, {p.begin(), p.end()}};
  return finish(b, std::move(f));
}

WordFixture counter_fixture(std::size_t width, std::uint64_t step, std::uint64_t seed) {
  Builder b(cells(), "counter" + std::to_string(width));
  WordFixture f{Netlist(cells()), ModuleKind::counter, step, {}, {}, {}, {}};
  NetId clk = b.input("clk");
  auto q = shuffled_nets(b.nl, "q", width, seed, false);
  auto d = shuffled_nets(b.nl, "d", width, seed * 7, false);
  std::vector<NetId> k;
  for (std::size_t i = 0; i < width; ++i) k.push_back(b.gate(((step >> i) & 1U) ? "TIE1" : "TIE0", std::vector<NetId>{}));
  ripple_into(b, q, k, std::nullopt, d);
  std::vector<std::size_t> order(width);
  std::iota(order.begin(), order.end(), 0);
  if (seed != 0) {
    std::mt19937_64 rng(seed * 11);
    std::shuffle(order.begin(), order.end(), rng);
  }
  f.flip_flops.resize(width);
  for (std::size_t i : order) {
    b.dff(d[i], clk, "cnt" + std::to_string(i), q[i]);
    f.flip_flops[i] = b.last_gate();
  }
  for (NetId n : q) b.output(n);
  f.operands = {q};
  f.result = d;
  f.candidate = register_candidate(b.nl, f.flip_flops);
  return finish(b, std::move(f));
}

WordFixture shift_register_fixture(std::size_t width, std::uint64_t seed) {
  Builder b(cells(), "shift" + std::to_string(width));
  WordFixture f{Netlist(cells()), ModuleKind::shift_reg, 0, {}, {}, {}, {}};
  NetId clk = b.input("clk"), din = b.input("din");
  auto q = shuffled_nets(b.nl, "q", width, seed, false);
  std::vector<std::size_t> order(width);
  std::iota(order.begin(), order.end(), 0);
  if (seed != 0) {
    std::mt19937_64 rng(seed * 11);
    std::shuffle(order.begin(), order.end(), rng);
  }
  f.flip_flops.resize(width);
  std::vector<NetId> d(width);
  for (std::size_t i : order) {
    d[i] = i == 0 ? din : q[i - 1];
    b.dff(d[i], clk, "sr" + std::to_string(i), q[i]);
    f.flip_flops[i] = b.last_gate();
  }
  b.output(q.back());
  f.operands = {q};
  f.result = d;
  f.candidate = register_candidate(b.nl, f.flip_flops);
  return finish(b, std::move(f));
}

}  // namespace gstest
