#pragma once

// Collocation points and Monte-Carlo quadrature weights.

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "mhdpinn/physics.hpp"

namespace mhdpinn {

enum class SamplingStrategy {
  uniform,         // independent uniform draws
  low_discrepancy  // Halton sequence (bases 2, 3, 5) with a seeded random shift
};

std::string to_string(SamplingStrategy s);
SamplingStrategy parse_strategy(const std::string& name);

struct CollocationBatch {
  Eigen::Matrix3Xd interior;         // (x, y, t), x strictly inside, 0 < t <= T
  Eigen::Matrix3Xd boundary;         // (x, y, t) on an edge, 0 < t <= T
  Eigen::Matrix2Xd boundary_normal;  // outward unit normal per boundary point
  Eigen::Matrix3Xd initial;          // (x, y, 0)

  double w_interior = 0.0;  // |Omega| T / m
  double w_boundary = 0.0;  // |dOmega| T / n
  double w_initial = 0.0;   // |Omega| / k

  Eigen::Index m() const { return interior.cols(); }
  Eigen::Index n() const { return boundary.cols(); }
  Eigen::Index k() const { return initial.cols(); }
};

/// Throws std::invalid_argument if any count is zero.
CollocationBatch sample_batch(const Rect& domain, double T, Eigen::Index m, Eigen::Index n,
                              Eigen::Index k, std::uint64_t seed,
                              SamplingStrategy strategy = SamplingStrategy::uniform);

/// Sets the three quadrature weights from the point counts.
void set_weights(CollocationBatch& batch, const Rect& domain, double T);

/// Seed of the batch drawn at optimizer step `step` from base seed `seed`.
std::uint64_t step_seed(std::uint64_t seed, std::uint64_t step);

/// i-th element (i >= 1) of the van der Corput sequence in `base`.
double radical_inverse(std::uint64_t i, unsigned base);

/// CSV with header kind,x,y,t,nx,ny and one row per point.
void save_batch_csv(const CollocationBatch& batch, const std::string& path);

/// Reads a batch written by save_batch_csv; weights are recomputed from
/// `domain` and `T`. Throws ConfigError on malformed input.
CollocationBatch load_batch_csv(const std::string& path, const Rect& domain, double T);

}  // namespace mhdpinn
