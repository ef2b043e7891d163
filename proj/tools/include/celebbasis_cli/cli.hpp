// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace celeb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitAdapter = 4;

inline constexpr const char* kToolName = "celebbasis";

/// Runs one command. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Record written next to every command's outputs.
struct RunManifest {
  int schema_version = 1;
  std::string tool = kToolName;
  std::string version;
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();
  std::map<std::string, std::string> adapters;
  std::map<std::string, std::string> inputs;   // path -> digest
  std::map<std::string, std::string> outputs;  // path -> digest
};

void to_json(nlohmann::json& j, const RunManifest& m);
void from_json(const nlohmann::json& j, RunManifest& m);

RunManifest read_manifest(const std::filesystem::path& path);

/// Where a command writes its manifest, given its primary output.
std::filesystem::path manifest_path_for_file(const std::filesystem::path& output);
std::filesystem::path manifest_path_for_dir(const std::filesystem::path& output_dir);

}  // namespace celeb::cli
