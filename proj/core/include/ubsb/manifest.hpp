#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace ubsb {

inline constexpr const char* kVersion = "0.1.0";

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);
/// Throws DataError when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

struct FileDigest {
  std::string path;
  std::string sha256;

  bool operator==(const FileDigest&) const = default;
};

/// Record of one command invocation. `args` maps each long flag (without
/// dashes) to its resolved value and is enough to re-run the command.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> args;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, std::uint64_t> seeds;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  int threads = 1;
  double wall_clock_seconds = 0.0;
  std::map<std::string, std::string> versions;

  void add_input(const std::filesystem::path& p);
  void add_output(const std::filesystem::path& p);

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  void write(const std::filesystem::path& p) const;
  static RunManifest read(const std::filesystem::path& p);

  /// Paths of inputs whose current digest differs from the recorded one.
  std::vector<std::string> stale_inputs() const;
};

/// Outputs matched by file name; returns a line per difference.
std::vector<std::string> compare_outputs(const RunManifest& expected, const RunManifest& actual);

}  // namespace ubsb
