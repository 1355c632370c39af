#pragma once

// Adam and L-BFGS on flat parameter vectors.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mhdpinn/network.hpp"

namespace mhdpinn {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Throws ConfigError on lr < 0, decays outside [0, 1) or eps <= 0.
  void validate() const;
};

struct OptimState {
  AdamHyper hyper;
  std::uint64_t step = 0;
  std::vector<double> m, v;  // first and second moments

  /// Zero moments for n parameters.
  static OptimState adam(std::size_t n, const AdamHyper& hyper = {});
};

/// One bias-corrected Adam update of theta in place. Throws ShapeError on
/// size mismatch and NonFiniteError on a non-finite gradient (state and theta
/// are left untouched then).
void adam_step(OptimState& state, std::span<double> theta, std::span<const double> grad);
void adam_step(OptimState& state, NetworkParams& params, std::span<const double> grad);

/// f(x, grad) returns the objective and writes its gradient.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
  int max_iterations = 100;
  int history = 10;
  double grad_tol = 1e-10;  // stop when |grad|_inf <= grad_tol
  double c1 = 1e-4;         // sufficient decrease
  double c2 = 0.9;          // curvature
  int max_line_search = 30;
};

struct LbfgsResult {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;           // gradient tolerance reached
  bool line_search_failed = false;  // stopped at the last accepted iterate
};

/// Limited-memory BFGS with a strong Wolfe line search. Only steps that
/// satisfy sufficient decrease are accepted, so f never increases. On a line
/// search failure the last accepted iterate is returned with a warning.
/// Throws NonFiniteError if f(x0) is not finite.
LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double> x0,
                           const LbfgsOptions& opts = {});

}  // namespace mhdpinn
