// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace homeseq::cli {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

/// Failure reading or writing a file named on the command line (exit 2).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FileDigest {
  std::string path;  // as resolved when the run happened
  std::string fnv1a;
};

/// Everything a later `replay` needs to re-execute one run.
struct Manifest {
  std::string subcommand;
  std::vector<std::string> argv;  // without the program name
  std::string cwd;
  std::optional<std::string> data_dir;
  std::optional<std::string> config_text;  // contents of --config, if given
  std::string resolved;                    // every option value after parsing
  std::string config_hash;
  std::map<std::string, std::uint64_t> seeds;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  std::vector<std::string> volatile_outputs;  // wall-clock timings, not hashed

  std::string to_json() const;
  static Manifest from_json(std::string_view text);
};

/// File access for one subcommand. Inputs are resolved against the data
/// directory when they do not exist relative to the working directory, and
/// every read or write is recorded for the manifest.
class RunContext {
 public:
  RunContext(std::string subcommand, std::vector<std::string> argv);

  std::filesystem::path resolve_input(const std::string& path) const;
  std::string read_input(const std::string& path);
  void write_output(const std::string& path, std::string_view content);
  /// Written but excluded from the reproducibility check.
  void write_volatile(const std::string& path, std::string_view content);
  void seed(const std::string& name, std::uint64_t value) { manifest_.seeds[name] = value; }
  void set_config(std::optional<std::string> text, std::string resolved);

  /// Writes `<primary>.manifest.json` and returns its path.
  std::string finish(const std::string& primary_output);

  const Manifest& manifest() const { return manifest_; }

 private:
  Manifest manifest_;
};

std::optional<std::string> data_dir_from_env();

}  // namespace homeseq::cli
