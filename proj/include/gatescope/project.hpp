#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "gatescope/errors.hpp"
#include "gatescope/netlist.hpp"

namespace gatescope {

class ProjectError : public Error {
 public:
  using Error::Error;
};

/// Library stored by reference instead of embedded.
struct LibraryReference {
  std::string path;
  std::string sha256;  // of the file contents, lowercase hex
};

struct Project {
  static constexpr int format_version = 1;

  explicit Project(Netlist nl) : netlist(std::move(nl)) {}

  Netlist netlist;
  std::optional<LibraryReference> library_reference;
  /// Pass name -> serialized result ("dataflow", "crypto", "identify", "bitorder", ...).
  std::map<std::string, nlohmann::json> analysis_results;
  nlohmann::json metadata = nlohmann::json::object();
};

/// Reads the bytes of a referenced library file.
using FileReader = std::function<std::string(const std::string& path)>;

std::string sha256_hex(std::string_view data);

nlohmann::json project_to_json(const Project& project);
/// Throws ProjectError on version mismatch, hash mismatch or malformed content.
Project project_from_json(const nlohmann::json& doc, const FileReader& read = {});

void save_project(const Project& project, std::ostream& out);
Project load_project(std::istream& in, const FileReader& read = {});

void save_project_file(const Project& project, const std::string& path);
Project load_project_file(const std::string& path);

/// Whole file as a string; throws Error naming the path.
std::string read_text_file(const std::string& path);

}  // namespace gatescope
