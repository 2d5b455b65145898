#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gatescope/boolean_function.hpp"
#include "gatescope/dataflow.hpp"
#include "gatescope/netlist.hpp"

namespace gatescope {

/// Combinational block whose outputs all depend on exactly the same 3-8 inputs.
struct SBoxCandidate {
  std::vector<NetId> inputs;   // ascending id; input i is bit i of the table index
  std::vector<NetId> outputs;  // ascending id; output j is bit j of the table value
  std::set<GateId> gates;
  std::vector<TruthTable> tables;  // per output, over n<id> of `inputs` in order
  /// Register groups feeding the inputs / reading the outputs, when a
  /// dataflow graph was supplied.
  std::set<std::uint32_t> source_groups;
  std::set<std::uint32_t> sink_groups;

  /// Substitution table: entry x has bit j set when output j is 1 on row x.
  [[nodiscard]] std::vector<std::uint32_t> values() const;
};

struct SBoxLibraryEntry {
  std::string cipher;
  std::size_t n = 0;
  std::vector<std::uint32_t> table;
  std::string provenance;
};

std::vector<std::uint32_t> aes_sbox();
std::vector<std::uint32_t> present_sbox();
/// AES and PRESENT.
const std::vector<SBoxLibraryEntry>& builtin_sbox_library();

/// Register stages and global I/O bound the cones that are sliced into
/// candidates. Deterministic order (by first output net).
std::vector<SBoxCandidate> enumerate_candidates(const Netlist& netlist, const DataflowGraph* dataflow = nullptr);

enum class SBoxVerdict { match, bijective_unknown, not_bijective };
std::string to_string(SBoxVerdict v);

/// For a match, library input bit k arrives on candidate input
/// input_permutation[k] and library output bit k leaves on candidate output
/// output_permutation[k].
struct SBoxIdentification {
  SBoxVerdict verdict = SBoxVerdict::not_bijective;
  std::string cipher;
  std::vector<std::size_t> input_permutation;
  std::vector<std::size_t> output_permutation;
};

SBoxIdentification identify(const SBoxCandidate& candidate,
                            const std::vector<SBoxLibraryEntry>& library = builtin_sbox_library());

/// True when the candidate table equals the library table under the permutations.
bool verify_match(const std::vector<std::uint32_t>& candidate_values, const std::vector<std::uint32_t>& library_table,
                  const std::vector<std::size_t>& input_permutation, const std::vector<std::size_t>& output_permutation);

struct CryptoFinding {
  SBoxCandidate candidate;
  SBoxIdentification identification;
  /// Innermost module containing every gate of the candidate.
  ModuleId module;
};

struct CryptoReport {
  /// Matches first, then bijective unknown tables; not-bijective candidates are only counted.
  std::vector<CryptoFinding> findings;
  std::size_t candidates = 0;
  std::size_t not_bijective = 0;

  [[nodiscard]] std::size_t match_count() const;
};

struct ScanOptions {
  std::vector<SBoxLibraryEntry> library = builtin_sbox_library();
  /// Used for locating findings; recovered from the netlist when absent.
  std::optional<DataflowGraph> dataflow;
  std::size_t threads = 0;  // 0: hardware concurrency
};

CryptoReport scan_crypto(const Netlist& netlist, const ScanOptions& options = {});

nlohmann::json to_json(const CryptoReport& report);
std::string format_report(const CryptoReport& report, const Netlist& netlist);

}  // namespace gatescope
