#pragma once

// Empirical studies over trained networks: loss vs error ordering, stability
// under data perturbations, and Hodge diagnostics.

#include <string>
#include <utility>
#include <vector>

#include "mhdpinn/config.hpp"
#include "mhdpinn/hodge.hpp"
#include "mhdpinn/training.hpp"

namespace mhdpinn {

/// Spearman rank correlation (average ranks for ties). NaN if either side is
/// constant; throws std::invalid_argument on size mismatch or < 2 samples.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

struct LossErrorRow {
  std::string label;
  LossBreakdown loss;  // on the frozen evaluation batch
  ErrorReport errors;
  double div_bc = 0.0;    // div_u + bc_u components (unweighted)
  double w2_norm = 0.0;   // irrotational part of u at t = T/2
  double w2_ratio = 0.0;  // |w2| / |u|
};

struct LossErrorTable {
  std::vector<LossErrorRow> rows;  // input order
  double spearman_u = 0.0;   // total loss vs sup-t L2 error of u
  double spearman_B = 0.0;
  double spearman_w2 = 0.0;  // div/boundary loss vs |w2|
  double loss_decades = 0.0; // log10(max loss / min loss)

  bool passes(double threshold = 0.8) const {
    return spearman_u >= threshold && spearman_B >= threshold;
  }
};

/// Needs at least two checkpoints (four spanning two decades for a
/// meaningful study; fewer are reported with a warning).
LossErrorTable loss_error_study(const std::vector<std::pair<std::string, NetworkParams>>& nets,
                                const RunConfig& cfg, const StudyConfig& study);

void write_loss_error_csv(const LossErrorTable& t, const std::string& path);

struct StabilityRow {
  double delta = 0.0;
  double data_diff = 0.0;  // norm of the data difference
  double dist_u = 0.0;     // L4(0,T; L2) distance between the paired models
  double dist_B = 0.0;
};

struct StabilityTable {
  StabilityTarget target = StabilityTarget::forcing;
  double data_norm = 0.0;  // norm of the unperturbed datum
  std::vector<StabilityRow> rows;
  bool monotone_u = false;
  bool monotone_B = false;
};

/// Trains the base model from `base`, then one model per delta with the
/// target datum scaled by (1 + delta) and everything else shared.
/// Needs >= 3 deltas including 0.
StabilityTable stability_study(const RunConfig& base, const StudyConfig& study);

void write_stability_csv(const StabilityTable& t, const std::string& path);

struct HodgeRow {
  std::string field;
  int N = 0;
  double w1_ratio = 0.0;  // |w1| / |w|
  double w2_ratio = 0.0;  // |w2| / |w|
  double orthogonality = 0.0;  // |(w1, w2)| / (|w1| |w2| + eps)
  int cg_iterations = 0;
};

/// gradient of x^2 + y^2, u*(., 0) and B*(., 0) on the N x N grid of the
/// unit square.
std::vector<HodgeRow> hodge_study(const PhysicsParams& phys, int N);

HodgeRow hodge_row(const std::string& name, const GridField& w);

void write_hodge_csv(const std::vector<HodgeRow>& rows, const std::string& path);

}  // namespace mhdpinn
