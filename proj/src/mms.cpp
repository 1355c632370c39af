#include "mhdpinn/mms.hpp"

#include <cmath>
#include <numbers>

#include "mhdpinn/errors.hpp"

namespace mhdpinn {

namespace {

constexpr double pi = std::numbers::pi;

// f, f', f'' of a one-dimensional factor.
struct Factor {
  double v, d1, d2;
};

Factor sin_k(double k, double s) { return {std::sin(k * s), k * std::cos(k * s), -k * k * std::sin(k * s)}; }
Factor cos_k(double k, double s) { return {std::cos(k * s), -k * std::sin(k * s), -k * k * std::cos(k * s)}; }

// sin^2(pi s) = (1 - cos 2 pi s) / 2
Factor sin_sq(double s) {
  const double sp = std::sin(pi * s);
  return {sp * sp, pi * std::sin(2.0 * pi * s), 2.0 * pi * pi * std::cos(2.0 * pi * s)};
}

// k g(t) X(x) Y(y) with g = exp(-t).
Jet2 separable(double k, double g, const Factor& X, const Factor& Y) {
  const double a = k * g;
  return {a * X.v * Y.v, a * X.d1 * Y.v, a * X.v * Y.d1, -a * X.v * Y.v,
          a * X.d2 * Y.v, a * X.d1 * Y.d1, a * X.v * Y.d2};
}

}  // namespace

ManufacturedSolution mms_default(const PhysicsParams& phys) {
  phys.validate();
  if (!phys.domain.is_unit_square()) {
    throw ConfigError("the default manufactured solution requires the unit square domain");
  }
  return ManufacturedSolution(phys);
}

double ManufacturedSolution::envelope(double t) const { return std::exp(-t); }

FieldSample ManufacturedSolution::sample(double x, double y, double t) const {
  const double g = envelope(t);
  FieldSample s;
  s.ux = separable(1.0, g, sin_sq(x), sin_k(2.0 * pi, y));
  s.uy = separable(-1.0, g, sin_k(2.0 * pi, x), sin_sq(y));
  s.Bx = separable(1.0, g, sin_k(pi, x), cos_k(pi, y));
  s.By = separable(-1.0, g, cos_k(pi, x), sin_k(pi, y));
  s.p = separable(1.0, g, cos_k(pi, x), cos_k(pi, y));
  const auto f = forcing(x, y, t);
  const auto sb = magnetic_source(x, y, t);
  s.fx = f[0];
  s.fy = f[1];
  s.sBx = sb[0];
  s.sBy = sb[1];
  return s;
}

std::array<double, 2> ManufacturedSolution::forcing(double x, double y, double t) const {
  const double g = envelope(t);
  const double sx = std::sin(pi * x), cx = std::cos(pi * x);
  const double sy = std::sin(pi * y), cy = std::cos(pi * y);
  const double s2x = std::sin(2 * pi * x), c2x = std::cos(2 * pi * x);
  const double s2y = std::sin(2 * pi * y), c2y = std::cos(2 * pi * y);
  const double pi2 = pi * pi;

  const double ux = g * sx * sx * s2y;
  const double uy = -g * s2x * sy * sy;
  const double ux_x = g * pi * s2x * s2y;
  const double ux_y = 2 * pi * g * sx * sx * c2y;
  const double uy_x = -2 * pi * g * c2x * sy * sy;
  const double uy_y = -g * pi * s2x * s2y;
  const double lap_ux = g * (2 * pi2 * c2x * s2y - 4 * pi2 * sx * sx * s2y);
  const double lap_uy = -g * (-4 * pi2 * s2x * sy * sy + 2 * pi2 * s2x * c2y);

  const double Bx = g * sx * cy;
  const double By = -g * cx * sy;
  const double curlB = 2 * pi * g * sx * sy;
  const double px = -pi * g * sx * cy;
  const double py = -pi * g * cx * sy;

  const double fx = -ux - phys_.nu * lap_ux + ux * ux_x + uy * ux_y + phys_.S * curlB * By + px;
  const double fy = -uy - phys_.nu * lap_uy + ux * uy_x + uy * uy_y - phys_.S * curlB * Bx + py;
  return {fx, fy};
}

std::array<double, 2> ManufacturedSolution::magnetic_source(double x, double y, double t) const {
  // curl curl B* = 2 pi^2 B*, and u* x B* vanishes identically:
  // u_x B_y - u_y B_x = g^2 (-2 sx^2 cx sy^2 cy + 2 sx^2 cx sy^2 cy) = 0.
  const double g = envelope(t);
  const double k = 2.0 * pi * pi * phys_.mu - 1.0;
  return {k * g * std::sin(pi * x) * std::cos(pi * y), -k * g * std::cos(pi * x) * std::sin(pi * y)};
}

std::array<double, 2> ManufacturedSolution::u0(double x, double y) const {
  const double sx = std::sin(pi * x), sy = std::sin(pi * y);
  return {sx * sx * std::sin(2 * pi * y), -std::sin(2 * pi * x) * sy * sy};
}

std::array<double, 2> ManufacturedSolution::B0(double x, double y) const {
  return {std::sin(pi * x) * std::cos(pi * y), -std::cos(pi * x) * std::sin(pi * y)};
}

ProblemData ManufacturedSolution::problem_data() const {
  ProblemData d;
  const ManufacturedSolution self = *this;
  d.forcing = [self](double x, double y, double t) { return self.forcing(x, y, t); };
  d.magnetic_source = [self](double x, double y, double t) { return self.magnetic_source(x, y, t); };
  d.u0 = [self](double x, double y) { return self.u0(x, y); };
  d.B0 = [self](double x, double y) { return self.B0(x, y); };
  return d;
}

JetFieldFn ManufacturedSolution::field() const {
  const ManufacturedSolution self = *this;
  return [self](double x, double y, double t) { return self.sample(x, y, t); };
}

}  // namespace mhdpinn
