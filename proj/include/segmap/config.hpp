#pragma once

#include "segmap/alignment.hpp"
#include "segmap/reconstruction.hpp"
#include "segmap/tracker.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace segmap {

/// Every tunable of the pipeline, keyed the way the config file names them.
struct PipelineConfig {
  double T_p = 2.0;  ///< keyframe travel gate, meters
  TrackerParams tracker;
  ReconstructionParams reconstruction;
  AlignmentParams alignment;

  bool is_valid() const;
  bool operator==(const PipelineConfig& other) const;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& msg);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Names accepted by the parser, in dump order.
const std::vector<std::string>& config_keys();

/// key = value lines; '#' starts a comment. Unknown or repeated keys are
/// errors, absent keys keep their defaults. When sigma_c is absent it
/// follows eps_lim / 3.
PipelineConfig parse_config(std::istream& in);
PipelineConfig load_config(const std::filesystem::path& path);

/// Sets one key from text; throws std::invalid_argument on bad input.
void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);

std::string dump_config(const PipelineConfig& cfg);

/// FNV-1a over the dumped text; stamped into maps built with this config.
std::uint64_t config_hash(const PipelineConfig& cfg);

}  // namespace segmap
