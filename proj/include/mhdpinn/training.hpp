#pragma once

// Training loop: Adam on fresh (or fixed) collocation batches, optional
// L-BFGS tail on a frozen batch, metric logging and checkpoints.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mhdpinn/loss.hpp"
#include "mhdpinn/model.hpp"
#include "mhdpinn/network.hpp"
#include "mhdpinn/norms.hpp"
#include "mhdpinn/optim.hpp"
#include "mhdpinn/physics.hpp"
#include "mhdpinn/sampling.hpp"

namespace mhdpinn {

enum class ProblemKind {
  mms,  // manufactured solution on the unit square
  zero  // zero forcing, source and initial data
};

std::string to_string(ProblemKind k);
ProblemKind parse_problem(const std::string& name);

struct ProblemConfig {
  ProblemKind kind = ProblemKind::mms;
  // Relative perturbations: f -> (1 + forcing) f, u0 -> (1 + u0) u0, ...
  double forcing = 0.0;
  double u0 = 0.0;
  double B0 = 0.0;
};

struct NetworkConfig {
  std::vector<int> layer_sizes{3, 64, 64, 64, 5};
  Activation activation = Activation::tanh;
  NetworkLayout layout = NetworkLayout::shared;
};

struct SamplingConfig {
  Eigen::Index interior = 5000;
  Eigen::Index boundary = 512;
  Eigen::Index initial = 512;
  SamplingStrategy strategy = SamplingStrategy::uniform;
  bool resample = true;  // fresh batch every step, else one fixed batch
};

struct OptimizerConfig {
  AdamHyper adam;
  std::uint64_t steps = 20000;
  double clip_norm = 1e3;  // 0 disables clipping
  int lbfgs_iterations = 0;
  int lbfgs_history = 10;
};

struct LoggingConfig {
  std::uint64_t eval_every = 100;
  std::uint64_t checkpoint_every = 0;           // 0: no periodic checkpoints
  std::vector<std::uint64_t> checkpoint_steps;  // extra explicit steps
  bool error_norms = true;                      // only used when a reference exists
  NormOptions norms;
};

struct RuntimeConfig {
  int threads = 1;
  bool deterministic = true;  // forces threads = 1
  Eigen::Index chunk = 64;
};

struct RunConfig {
  std::uint64_t seed = 1234;
  PhysicsParams physics;
  ProblemConfig problem;
  NetworkConfig network;
  LossWeights weights;
  SamplingConfig sampling;
  OptimizerConfig optimizer;
  LoggingConfig logging;
  RuntimeConfig runtime;

  /// Throws ConfigError on any invalid field.
  void validate() const;

  EvalOptions eval_options() const;
};

/// Problem data of the configured problem (with perturbations applied).
ProblemData make_problem_data(const RunConfig& cfg);

/// Reference solution model for error norms, if the problem has one.
std::optional<JetFieldFn> make_reference(const RunConfig& cfg);

/// Batch used at optimizer step `step` (or the fixed batch).
CollocationBatch batch_for_step(const RunConfig& cfg, std::uint64_t step);

/// Parameters at step 0.
NetworkParams initial_params(const RunConfig& cfg);

struct MetricRow {
  std::uint64_t step = 0;
  double wall_time_s = 0.0;  // timing.csv only, never in csv_row
  LossBreakdown loss;
  double grad_norm = 0.0;  // before clipping
  std::optional<ErrorReport> errors;

  static std::string csv_header(bool with_errors);
  std::string csv_row(bool with_errors) const;
};

struct TrainIO {
  std::string out_dir;                 // empty: no files written
  std::optional<std::string> resume;   // checkpoint to continue from
  std::function<void(const MetricRow&)> on_row;
};

struct TrainResult {
  NetworkParams final_params;
  NetworkParams best_params;
  double best_loss = 0.0;
  std::uint64_t best_step = 0;
  std::uint64_t steps_done = 0;
  std::vector<MetricRow> log;
  int clipped_steps = 0;
};

/// Runs Adam for cfg.optimizer.steps steps (from the resume step if given),
/// then the optional L-BFGS tail. A row is logged at step 0, every
/// eval_every steps and after the last step. Files in out_dir:
/// metrics.csv, timing.csv (wall time per logged step),
/// checkpoints/step_<n>.json, final.json, best.json.
///
/// On a non-finite loss or gradient the run stops with NonFiniteError; files
/// already written (the last good checkpoint) are left in place.
TrainResult train(const RunConfig& cfg, const TrainIO& io = {});

/// cfg.optimizer.lbfgs_iterations of L-BFGS on the frozen batch
/// batch_for_step(cfg, steps). The fixed-batch loss never increases; a failed
/// line search keeps the last accepted point (the input if none).
NetworkParams lbfgs_refine(const NetworkParams& params, const RunConfig& cfg);

/// Total loss of `params` on the frozen L-BFGS batch.
double frozen_batch_loss(const NetworkParams& params, const RunConfig& cfg);

}  // namespace mhdpinn
