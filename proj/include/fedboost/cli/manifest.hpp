#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace fedboost::cli {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file_hex(const std::filesystem::path& path);

// Run manifest: configuration identity plus a content hash for every file
// the run produced.
struct ManifestEntry {
  std::string path;  // relative to the run directory
  std::string sha256;
};

struct Manifest {
  std::string experiment_name;
  std::string config_sha256;
  std::string data_source;  // "synthetic(seed=...)" or "csv:<path> sha256=..."
  std::vector<std::int64_t> seeds;
  std::string tool_version;
  int model_schema_version = 0;
  int protocol_version = 0;
  bool equivalence_mode = false;  // single-client run: federated == centralized
  std::vector<ManifestEntry> files;
};

nlohmann::ordered_json manifest_to_json(const Manifest& manifest);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace fedboost::cli
