#pragma once

#include <string>

namespace fidkit {

std::string sha256_file(const std::string& path);
std::string iso8601_utc_now();

// Every CLI run drops exactly one manifest.json into its output directory:
// command, resolved settings, input hashes, timestamps, tool version.
struct RunManifest {
  std::string command;
  std::string settings_json;  // resolved flag values, canonical JSON
  std::string weight_file;
  std::string weight_sha256;
  std::string dataset_file;
  std::string dataset_sha256;
  std::string started_at;
  std::string finished_at;
  std::string tool_version;

  void write(const std::string& out_dir) const;
};

}  // namespace fidkit
