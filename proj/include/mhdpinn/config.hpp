#pragma once

// JSON run/study configuration.
//
// Every key is optional and falls back to the RunConfig/StudyConfig default;
// unknown keys, wrong types and out-of-range values are rejected with the
// file name and line number. write_config() emits every field, and reading
// that output back yields the same configuration.

#include <string>
#include <vector>

#include "mhdpinn/training.hpp"

namespace mhdpinn {

inline constexpr int kConfigSchemaVersion = 1;

enum class StabilityTarget { forcing, u0, B0 };

std::string to_string(StabilityTarget t);
StabilityTarget parse_stability_target(const std::string& name);

struct StudyConfig {
  // loss-error: checkpoints to compare, evaluated on one frozen batch
  std::vector<std::string> checkpoints;
  Eigen::Index eval_interior = 20000;
  Eigen::Index eval_boundary = 2048;
  Eigen::Index eval_initial = 2048;
  int hodge_resolution = 64;  // grid for the irrotational-part probe

  // stability: paired trainings with the data scaled by (1 + delta)
  std::vector<double> deltas{0.0, 0.1, 0.2, 0.4};
  StabilityTarget target = StabilityTarget::forcing;

  // hodge
  int hodge_N = 128;
};

struct ConfigFile {
  int schema_version = kConfigSchemaVersion;
  RunConfig run;
  StudyConfig study;
};

/// Throws ConfigError naming `source` and the offending line.
ConfigFile parse_config(const std::string& text, const std::string& source = "<config>");

/// Reads and parses a file; a missing file is a ConfigError naming the path.
ConfigFile load_config(const std::string& path);

std::string write_config(const ConfigFile& cfg);

}  // namespace mhdpinn
