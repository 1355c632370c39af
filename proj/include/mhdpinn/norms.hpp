#pragma once

// Error norms between two field models and energy quantities of one.
//
// Space integrals use the tensor midpoint rule on a resolution x resolution
// grid. Sup-in-time norms take the max over an endpoint-inclusive grid of
// time_slices instants; integrals in time use the midpoint rule on
// time_slices intervals.

#include <limits>

#include "mhdpinn/model.hpp"
#include "mhdpinn/physics.hpp"

namespace mhdpinn {

struct NormOptions {
  int resolution = 32;   // >= 32
  int time_slices = 17;  // >= 17
  bool sobolev = false;  // also compute the space-time H1 error (one extra jet pass)

  /// Throws ConfigError below the minimums.
  void validate() const;
};

struct ErrorReport {
  // sup_t |e(t)|_{L2(Omega)}
  double u_sup_l2 = 0.0, B_sup_l2 = 0.0, p_sup_l2 = 0.0;
  // (int_0^T |e(t)|^4 dt)^{1/4}
  double u_l4l2 = 0.0, B_l4l2 = 0.0;
  // the same divided by the reference's norm (NaN if that is zero)
  double u_rel_sup_l2 = 0.0, B_rel_sup_l2 = 0.0;
  double u_rel_l4l2 = 0.0, B_rel_l4l2 = 0.0;
  // (int_0^T |e|^2 + |grad_x e|^2 + |d_t e|^2)^{1/2}; only with sobolev
  double u_h1 = std::numeric_limits<double>::quiet_NaN();
  double B_h1 = std::numeric_limits<double>::quiet_NaN();
};

/// Errors of `model` against `reference`. Pressure is compared after
/// subtracting each field's spatial mean per time slice.
ErrorReport error_norms(const FieldModel& model, const FieldModel& reference,
                        const PhysicsParams& phys, const NormOptions& opts = {});

/// L4([0,T]; L2) distance of u and of B between two models.
struct L4L2Distance {
  double u = 0.0, B = 0.0;
};
L4L2Distance l4l2_distance(const FieldModel& a, const FieldModel& b, const PhysicsParams& phys,
                           const NormOptions& opts = {});

/// |f|_{L2(0,T; L2(Omega))} of a time-dependent vector field (0 if empty).
double l2l2_norm(const Vec2Fn& f, const PhysicsParams& phys, const NormOptions& opts = {});

struct EnergyReport {
  double sup_u2 = 0.0;      // sup_t |u|^2
  double sup_B2 = 0.0;      // sup_t |B|^2
  double sup_total = 0.0;   // sup_t (|u|^2 + |B|^2)
  double int_grad_u2 = 0.0; // int_0^T |grad u|^2
  double int_grad_B2 = 0.0; // int_0^T |grad B|^2
  bool finite = true;
  bool within_ceiling = true;
};

EnergyReport energy_check(const FieldModel& model, const PhysicsParams& phys,
                          const NormOptions& opts = {},
                          double ceiling = std::numeric_limits<double>::infinity());

}  // namespace mhdpinn
