#pragma once

// 2D incompressible MHD operators.
//
// Conventions on the plane: the scalar curl of v is dx v_y - dy v_x; the
// curl of a scalar c is (dy c, -dx c); B x curl B = c (B_y, -B_x) with
// c = curl B; u x B is the scalar u_x B_y - u_y B_x.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>

#include <Eigen/Core>

#include "mhdpinn/jet.hpp"
#include "mhdpinn/network.hpp"

namespace mhdpinn {

struct Rect {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  double perimeter() const { return 2.0 * (width() + height()); }
  bool is_unit_square() const { return x0 == 0.0 && x1 == 1.0 && y0 == 0.0 && y1 == 1.0; }
};

struct PhysicsParams {
  double nu = 1.0;  // fluid viscous diffusivity
  double mu = 1.0;  // magnetic diffusivity
  double S = 1.0;   // coupling coefficient
  double T = 1.0;   // final time
  Rect domain;

  /// Throws ConfigError unless nu, mu, S, T > 0 and the rectangle is proper.
  void validate() const;
};

template <class J>
using Real = decltype(slot(std::declval<J>(), Slot::val));

template <class J>
using Vec2 = std::array<Real<J>, 2>;

/// Momentum residual dt u - nu lap u + (u.grad)u + S B x curl B + grad p - f.
template <class J>
Vec2<J> residual_f(const FieldSampleT<J>& s, const PhysicsParams& phys) {
  using S_ = Slot;
  auto ux = slot(s.ux, S_::val), uy = slot(s.uy, S_::val);
  auto Bx = slot(s.Bx, S_::val), By = slot(s.By, S_::val);
  auto curlB = slot(s.By, S_::dx) - slot(s.Bx, S_::dy);
  auto rx = slot(s.ux, S_::dt) - phys.nu * (slot(s.ux, S_::dxx) + slot(s.ux, S_::dyy)) +
            ux * slot(s.ux, S_::dx) + uy * slot(s.ux, S_::dy) + phys.S * (curlB * By) +
            slot(s.p, S_::dx) - s.fx;
  auto ry = slot(s.uy, S_::dt) - phys.nu * (slot(s.uy, S_::dxx) + slot(s.uy, S_::dyy)) +
            ux * slot(s.uy, S_::dx) + uy * slot(s.uy, S_::dy) - phys.S * (curlB * Bx) +
            slot(s.p, S_::dy) - s.fy;
  return {rx, ry};
}

/// Induction residual dt B + mu curl curl B - curl(u x B) - sB.
template <class J>
Vec2<J> residual_B(const FieldSampleT<J>& s, const PhysicsParams& phys) {
  using S_ = Slot;
  auto ux = slot(s.ux, S_::val), uy = slot(s.uy, S_::val);
  auto Bx = slot(s.Bx, S_::val), By = slot(s.By, S_::val);
  // curl curl B = (dy c, -dx c), c = dx B_y - dy B_x
  auto ccx = slot(s.By, S_::dxy) - slot(s.Bx, S_::dyy);
  auto ccy = slot(s.Bx, S_::dxy) - slot(s.By, S_::dxx);
  // w = u_x B_y - u_y B_x
  auto wy = slot(s.ux, S_::dy) * By + ux * slot(s.By, S_::dy) - slot(s.uy, S_::dy) * Bx -
            uy * slot(s.Bx, S_::dy);
  auto wx = slot(s.ux, S_::dx) * By + ux * slot(s.By, S_::dx) - slot(s.uy, S_::dx) * Bx -
            uy * slot(s.Bx, S_::dx);
  auto rx = slot(s.Bx, S_::dt) + phys.mu * ccx - wy - s.sBx;
  auto ry = slot(s.By, S_::dt) + phys.mu * ccy + wx - s.sBy;
  return {rx, ry};
}

template <class J>
Real<J> div2(const J& vx, const J& vy) {
  return slot(vx, Slot::dx) + slot(vy, Slot::dy);
}

template <class J>
Real<J> curl2(const J& vx, const J& vy) {
  return slot(vy, Slot::dx) - slot(vx, Slot::dy);
}

template <class J>
struct BoundaryTerms {
  Vec2<J> u_penalty;     // u on the boundary, target 0
  Real<J> Bn_penalty;    // B . n, target 0
  Real<J> curlB_penalty; // curl B, target 0 (curl B x n = 0 in 2D)
};

template <class J>
BoundaryTerms<J> boundary_terms(const FieldSampleT<J>& s, const std::array<double, 2>& normal) {
  auto Bn = normal[0] * slot(s.Bx, Slot::val) + normal[1] * slot(s.By, Slot::val);
  return {{slot(s.ux, Slot::val), slot(s.uy, Slot::val)}, Bn, curl2(s.Bx, s.By)};
}

// ---------------------------------------------------------------------------
// Batched forms over network output matrices (see BatchNetwork for layout).

/// Per-point interior residuals for P points.
struct InteriorResiduals {
  Eigen::ArrayXd fx, fy;  // momentum residual
  Eigen::ArrayXd Bx, By;  // induction residual
  Eigen::ArrayXd div_u, div_B;
};

/// Forcing and magnetic source values at the P interior points.
struct InteriorData {
  Eigen::ArrayXd fx, fy, sBx, sBy;
};

/// `out` is 5 x (7 P).
InteriorResiduals interior_residuals(const Eigen::Ref<const Eigen::MatrixXd>& out,
                                     const InteriorData& data, const PhysicsParams& phys);

/// Adds sum_j sum_r adj.r[j] * d r[j] / d out into `out_adj` (5 x 7P).
void interior_residuals_adjoint(const Eigen::Ref<const Eigen::MatrixXd>& out,
                                const InteriorResiduals& adj, const PhysicsParams& phys,
                                Eigen::Ref<Eigen::MatrixXd> out_adj);

// ---------------------------------------------------------------------------
// Variational forms, estimated by Monte-Carlo quadrature over Omega at a
// fixed time.

using VectorJetField = std::function<std::array<Jet2, 2>(double x, double y, double t)>;
using ScalarJetField = std::function<Jet2(double x, double y, double t)>;

enum class Form {
  b,             // 1/2 [(w.grad)u.v - (w.grad)v.u]
  b_convective,  // (w.grad)u.v + 1/2 (div w) u.v
  c_hat,         // S (H x curl B) . v, arguments (H, B, v)
  c_tilde,       // (u x B) curl H, arguments (u, B, H)
  a_f,           // nu grad u : grad v
  a_B,           // mu curl B curl H + mu div B div H
  d              // q div v
};

const char* form_name(Form f);

struct FormArgs {
  VectorJetField first, second, third;
  ScalarJetField q;  // only for Form::d
};

/// Integrand of `form` at one point.
double form_integrand(Form form, const FormArgs& args, double x, double y, double t,
                      const PhysicsParams& phys);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// measure * mean(samples) and its standard error measure * sd / sqrt(m).
/// Throws std::invalid_argument on an empty sample set.
McEstimate mc_estimate(std::span<const double> samples, double measure);

struct CollocationBatch;

/// Monte-Carlo estimate of the form over the interior (x, y) points of
/// `points`, evaluated at time t with measure |Omega|.
McEstimate forms_quadrature(Form form, const FormArgs& args, const CollocationBatch& points,
                            double t, const PhysicsParams& phys);

}  // namespace mhdpinn
