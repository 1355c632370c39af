#pragma once

// Anything that can produce (u, B, p) jets at space-time points: a network,
// or a closed-form field used as an oracle in place of one.

#include <array>
#include <functional>

#include <Eigen/Core>

#include "mhdpinn/network.hpp"

namespace mhdpinn {

class FieldModel {
 public:
  virtual ~FieldModel() = default;

  /// `points` is 3 x P; returns 5 x (slots * P) in the slot-major layout of
  /// BatchNetwork.
  virtual Eigen::MatrixXd evaluate(const Eigen::Ref<const Eigen::Matrix3Xd>& points,
                                   int slots) const = 0;
};

class NetworkModel final : public FieldModel {
 public:
  explicit NetworkModel(const NetworkParams& params, Eigen::Index chunk = 1024)
      : params_(params), chunk_(chunk) {}

  Eigen::MatrixXd evaluate(const Eigen::Ref<const Eigen::Matrix3Xd>& points,
                           int slots) const override;

 private:
  const NetworkParams& params_;
  Eigen::Index chunk_;
};

using JetFieldFn = std::function<FieldSample(double x, double y, double t)>;

/// Wraps a per-point jet evaluator (closed-form fields, perturbed fields).
class PointwiseModel final : public FieldModel {
 public:
  explicit PointwiseModel(JetFieldFn fn) : fn_(std::move(fn)) {}

  Eigen::MatrixXd evaluate(const Eigen::Ref<const Eigen::Matrix3Xd>& points,
                           int slots) const override;

 private:
  JetFieldFn fn_;
};

/// Unpacks column j of a model output into a FieldSample (missing slots 0).
FieldSample sample_at(const Eigen::Ref<const Eigen::MatrixXd>& out, Eigen::Index P,
                      int slots, Eigen::Index j);

using Vec2Fn = std::function<std::array<double, 2>(double x, double y, double t)>;
using Vec2Fn2D = std::function<std::array<double, 2>(double x, double y)>;

/// Forcing, magnetic source and initial data of one MHD problem. An empty
/// function means identically zero.
struct ProblemData {
  Vec2Fn forcing;
  Vec2Fn magnetic_source;
  Vec2Fn2D u0;
  Vec2Fn2D B0;
};

/// Copy of `data` whose forcing is multiplied by (1 + delta).
ProblemData scale_forcing(const ProblemData& data, double delta);

}  // namespace mhdpinn
