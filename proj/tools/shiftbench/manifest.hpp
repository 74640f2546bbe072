#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace shiftbench::cli {

/// Provenance record written next to every command's outputs. Replaying the
/// stored argv reproduces the outputs; only `timestamp` differs between runs.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();
  std::vector<std::filesystem::path> inputs;

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

/// fnv1a64 of the file's bytes as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace shiftbench::cli
