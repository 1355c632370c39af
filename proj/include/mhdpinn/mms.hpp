#pragma once

// Manufactured solution on the unit square:
//
//   u* = g(t) (sin^2(pi x) sin(2 pi y), -sin(2 pi x) sin^2(pi y))
//   B* = g(t) (sin(pi x) cos(pi y), -cos(pi x) sin(pi y))
//   p* = g(t) cos(pi x) cos(pi y),         g(t) = exp(-t)
//
// u* and B* are divergence free, u* vanishes on the boundary, B*.n = 0 and
// curl B* = 0 there. The forcing f and magnetic source sB make the triple an
// exact solution of the forced system.

#include <array>

#include "mhdpinn/model.hpp"
#include "mhdpinn/physics.hpp"

namespace mhdpinn {

class ManufacturedSolution {
 public:
  explicit ManufacturedSolution(const PhysicsParams& phys) : phys_(phys) {}

  const PhysicsParams& physics() const { return phys_; }

  double envelope(double t) const;

  /// Closed-form jets of u*, B*, p* with forcing and source filled in.
  FieldSample sample(double x, double y, double t) const;

  std::array<double, 2> forcing(double x, double y, double t) const;
  std::array<double, 2> magnetic_source(double x, double y, double t) const;
  std::array<double, 2> u0(double x, double y) const;
  std::array<double, 2> B0(double x, double y) const;

  ProblemData problem_data() const;
  JetFieldFn field() const;

 private:
  PhysicsParams phys_;
};

/// Throws ConfigError unless the domain is the unit square.
ManufacturedSolution mms_default(const PhysicsParams& phys);

}  // namespace mhdpinn
