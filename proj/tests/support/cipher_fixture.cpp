#include "cipher_fixture.hpp"

#include <stdexcept>

#include "generators.hpp"

namespace gstest {

namespace {

const std::vector<std::uint32_t> kSBox = {0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD,
                                          0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2};

}  // namespace

ToyCipher toy_cipher(bool trojan, std::size_t width) {
  if (width == 0 || width % 4 != 0) throw std::invalid_argument("width must be a positive multiple of 4");
  Builder b(cells(), trojan ? "toy_cipher_trojan" : "toy_cipher");
  ToyCipher t{Netlist(cells()), {}, {}, {}};
  const NetId clk = b.input("clk");
  const NetId load = b.input("load");
  const NetId done = b.input("done");
  std::vector<NetId> k(width), s(width), c(width);
  for (std::size_t i = 0; i < width; ++i) {
    k[i] = b.wire("key[" + std::to_string(i) + "]");
    s[i] = b.wire("state[" + std::to_string(i) + "]");
    c[i] = b.wire("ct[" + std::to_string(i) + "]");
    b.output(c[i]);
  }
  for (std::size_t i = 0; i < width; ++i) {
    const NetId key_in = b.input("key_in[" + std::to_string(i) + "]");
    b.dff(b.gate("MUX2", {k[i], key_in, load}), clk, "key_reg_" + std::to_string(i), k[i]);
    t.key.push_back(b.last_gate());
  }
  // Round: add key, substitute nibbles, permute bits.
  std::vector<NetId> x(width), y;
  for (std::size_t i = 0; i < width; ++i) x[i] = b.gate("XOR2", {s[i], k[i]});
  for (std::size_t n = 0; n < width; n += 4) {
    const auto out = synthesize_table(b, {x[n], x[n + 1], x[n + 2], x[n + 3]}, kSBox, 4);
    y.insert(y.end(), out.begin(), out.end());
  }
  for (std::size_t i = 0; i < width; ++i) {
    const NetId pt = b.input("pt[" + std::to_string(i) + "]");
    const NetId round_bit = y[(i * 5 + 3) % width];
    b.dff(b.gate("MUX2", {round_bit, pt, load}), clk, "state_reg_" + std::to_string(i), s[i]);
    t.state.push_back(b.last_gate());
  }
  NetId trigger;
  if (trojan) {
    const NetId n2 = b.gate("INV", {s[2]});
    trigger = b.gate("AND2", {b.gate("AND3", {s[0], s[1], n2}), b.gate("AND2", {s[width - 1], s[width / 2]})});
  }
  for (std::size_t i = 0; i < width; ++i) {
    NetId value = s[i];
    if (trojan) value = b.gate("XOR2", {s[i], b.gate("AND2", {k[i], trigger})});
    b.dff(b.gate("MUX2", {c[i], value, done}), clk, "ct_reg_" + std::to_string(i), c[i]);
    t.ciphertext.push_back(b.last_gate());
  }
  t.netlist = std::move(b.nl);
  return t;
}

}  // namespace gstest
