#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vendor_json.hpp"

namespace examiner {

inline constexpr std::string_view kToolVersion = "1.0.0";

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct Artifact {
  std::string path;
  std::string sha256;
};

// Provenance record written next to every command's outputs.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::vector<Artifact> inputs;
  std::vector<Artifact> outputs;
  std::optional<std::uint64_t> seed;
  std::string tool_version{kToolVersion};
  std::string started_at;
  std::string finished_at;

  nlohmann::ordered_json to_json() const;
  void write(const std::filesystem::path& path) const;
};

std::string utc_now_iso8601();

}  // namespace examiner
