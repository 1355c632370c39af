#pragma once

// Checkpoint files: one JSON document with the network shape, activation,
// layout and the flat parameter vector as base64 of little-endian doubles.
// Optionally carries the optimizer state and best-loss tracking needed to
// resume a run.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mhdpinn/network.hpp"
#include "mhdpinn/optim.hpp"

namespace mhdpinn {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  NetworkParams params;
  std::uint64_t step = 0;
  std::optional<OptimState> optim;

  // Best-loss parameters seen so far (for resume).
  std::optional<NetworkParams> best;
  double best_loss = 0.0;
  std::uint64_t best_step = 0;
};

/// Writes via a temporary file and rename, so an existing checkpoint at
/// `path` is never left half written.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

/// Throws ConfigError on unreadable, malformed or wrong-version files.
Checkpoint load_checkpoint(const std::string& path);

std::string encode_doubles(std::span<const double> values);
/// Throws ConfigError on bad base64 or a length that is not a multiple of 8.
std::vector<double> decode_doubles(const std::string& text);

}  // namespace mhdpinn
