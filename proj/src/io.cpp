#include "fbh/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fbh/errors.hpp"
#include "fbh/rng.hpp"

namespace fbh {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CsvWriter::Impl {
  std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : impl_(new Impl) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  impl_->out.open(path);
  if (!impl_->out) throw ConfigError("cannot open output file: " + path);
  for (std::size_t i = 0; i < header.size(); ++i)
    impl_->out << header[i] << (i + 1 < header.size() ? "," : "\n");
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::row(const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i)
    impl_->out << fmt_double(values[i]) << (i + 1 < values.size() ? "," : "\n");
}

void CsvWriter::row_mixed(const std::vector<std::string>& values) {
  for (std::size_t i = 0; i < values.size(); ++i)
    impl_->out << values[i] << (i + 1 < values.size() ? "," : "\n");
}

void write_text_file(const std::string& path, const std::string& text) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_noise_csv(const std::string& path, const NoisePath& noise) {
  CsvWriter csv(path, {"sigma_index", "time", "value"});
  for (std::size_t j = 0; j < noise.values.size(); ++j)
    for (std::size_t i = 0; i < noise.grid.size(); ++i)
      csv.row_mixed({std::to_string(j), fmt_double(noise.grid.nodes[i]),
                     fmt_double(noise.values[j][i])});
}

void write_manifest(const std::string& dir, const std::string& subcommand,
                    const RunConfig& config, std::uint64_t master_seed) {
  nlohmann::json j;
  j["subcommand"] = subcommand;
  j["version"] = kArtifactVersion;
  j["master_seed"] = master_seed;
  const std::string text = config.canonical_text();
  std::uint64_t hash = 0x243f6a8885a308d3ull;
  for (char c : text) {
    hash ^= static_cast<unsigned char>(c);
    (void)splitmix64(hash);
  }
  j["config_hash"] = hash;
  j["config_text"] = text;
  write_text_file(dir + "/manifest.json", j.dump(2) + "\n");
}

std::string manifest_config_text(const std::string& manifest_path) {
  const auto j = nlohmann::json::parse(read_text_file(manifest_path));
  return j.at("config_text").get<std::string>();
}

}  // namespace fbh
