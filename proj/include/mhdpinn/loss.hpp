#pragma once

// Weighted collocation loss and its parameter gradient.
//
// Each component is the Monte-Carlo quadrature of one squared norm:
//
//   0 residual_f  |L_f|^2 over Omega_T        5 bc_Bn     |B.n|^2 over dOmega_T
//   1 residual_B  |L_B|^2 over Omega_T        6 ic_u      |u(.,0) - u0|^2 over Omega
//   2 div_u       |div u|^2 over Omega_T      7 ic_B      |B(.,0) - B0|^2 over Omega
//   3 div_B       |div B|^2 over Omega_T      8 bc_curlB  |curl B|^2 over dOmega_T
//   4 bc_u        |u|^2 over dOmega_T
//
// and the total is sum_i a_i * component_i.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mhdpinn/model.hpp"
#include "mhdpinn/network.hpp"
#include "mhdpinn/physics.hpp"
#include "mhdpinn/sampling.hpp"

namespace mhdpinn {

inline constexpr int kNumLossTerms = 9;

enum LossTerm : int {
  kResidualF = 0,
  kResidualB,
  kDivU,
  kDivB,
  kBcU,
  kBcBn,
  kIcU,
  kIcB,
  kBcCurlB
};

const char* loss_term_name(int term);

struct LossWeights {
  // a1..a6 for the six penalties of the collocation loss, a7/a8 for the
  // initial condition, a9 for curl B on the boundary (off by default).
  std::array<double, kNumLossTerms> a{1, 1, 1, 1, 1, 1, 1, 1, 0};

  /// Only the six boundary/interior penalties (a7 = a8 = a9 = 0).
  static LossWeights paper_faithful();

  /// Throws ConfigError on negative weights or if all are zero.
  void validate() const;
};

struct LossBreakdown {
  std::array<double, kNumLossTerms> components{};
  double total = 0.0;

  /// step,<components...>,total
  std::string csv_row(std::uint64_t step) const;
  static std::string csv_header();
};

struct EvalOptions {
  int threads = 1;           // 1 = deterministic single-threaded mode
  Eigen::Index chunk = 64;  // points per batched network pass
};

/// Loss of an arbitrary field model (network or closed-form oracle).
/// Throws NonFiniteError naming the offending point.
LossBreakdown loss_eval(const FieldModel& model, const PhysicsParams& phys,
                        const CollocationBatch& batch, const LossWeights& w,
                        const ProblemData& data, const EvalOptions& opts = {});

/// Network loss; shares its code path with loss_grad so both report the
/// same breakdown.
LossBreakdown loss_eval(const NetworkParams& params, const PhysicsParams& phys,
                        const CollocationBatch& batch, const LossWeights& w,
                        const ProblemData& data, const EvalOptions& opts = {});

struct LossAndGradient {
  LossBreakdown breakdown;
  std::vector<double> gradient;  // flat, NetworkParams::flatten order
};

LossAndGradient loss_grad(const NetworkParams& params, const PhysicsParams& phys,
                          const CollocationBatch& batch, const LossWeights& w,
                          const ProblemData& data, const EvalOptions& opts = {});

/// Same loss recorded point by point on a Jet2 tape with every parameter as
/// a leaf. Much slower; used as an independent route for the gradient.
LossAndGradient loss_grad_taped(const NetworkParams& params, const PhysicsParams& phys,
                                const CollocationBatch& batch, const LossWeights& w,
                                const ProblemData& data);

}  // namespace mhdpinn
