#pragma once

#include <string>
#include <vector>

#include "fbh/config.hpp"
#include "fbh/fbm.hpp"

namespace fbh {

/// Formats a double with enough digits to round-trip exactly.
std::string fmt_double(double v);

/// CSV writer that serializes rows through a single stream (one writer per run).
class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();
  void row(const std::vector<double>& values);
  void row_mixed(const std::vector<std::string>& values);

private:
  struct Impl;
  Impl* impl_;
};

void write_text_file(const std::string& path, const std::string& text);

/// Sampled noise field as CSV with header sigma_index,time,value.
void write_noise_csv(const std::string& path, const struct NoisePath& noise);
std::string read_text_file(const std::string& path);

/// Run manifest: config echo, master seed, subcommand and artifact version;
/// re-running the embedded config reproduces every CSV bit-exactly.
void write_manifest(const std::string& dir, const std::string& subcommand,
                    const RunConfig& config, std::uint64_t master_seed);

/// Extracts the embedded config text from a manifest file.
std::string manifest_config_text(const std::string& manifest_path);

inline constexpr const char* kArtifactVersion = "0.1.0";

}  // namespace fbh
