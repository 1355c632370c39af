#include "mhdpinn/norms.hpp"

#include <algorithm>
#include <cmath>

#include "mhdpinn/errors.hpp"

namespace mhdpinn {

void NormOptions::validate() const {
  if (resolution < 32) throw ConfigError("norm resolution must be >= 32");
  if (time_slices < 17) throw ConfigError("norm time_slices must be >= 17");
}

namespace {

// Midpoint grid of Omega at time t, x fastest.
Eigen::Matrix3Xd slice_points(const Rect& d, int n, double t) {
  Eigen::Matrix3Xd pts(3, n * n);
  const double hx = d.width() / n, hy = d.height() / n;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) pts.col(j * n + i) << d.x0 + (i + 0.5) * hx, d.y0 + (j + 0.5) * hy, t;
  return pts;
}

// max that keeps a NaN from either side, so a bad slice is not hidden
double sup(double a, double b) { return std::isnan(b) || b > a ? b : a; }

double cell_area(const Rect& d, int n) { return d.area() / (static_cast<double>(n) * n); }

double sup_time(const PhysicsParams& phys, int slices, int i) {
  return phys.T * i / (slices - 1);
}
double mid_time(const PhysicsParams& phys, int slices, int i) {
  return phys.T * (i + 0.5) / slices;
}

struct SliceSq {
  double u = 0.0, B = 0.0, p = 0.0;  // squared L2 norms of the difference
  double u_ref = 0.0, B_ref = 0.0;   // squared L2 norms of the reference
};

SliceSq slice_errors(const FieldModel& a, const FieldModel& b, const Rect& dom, int n, double t) {
  const Eigen::Matrix3Xd pts = slice_points(dom, n, t);
  const Eigen::MatrixXd va = a.evaluate(pts, 1), vb = b.evaluate(pts, 1);
  const Eigen::MatrixXd e = va - vb;
  const double w = cell_area(dom, n);
  SliceSq s;
  s.u = w * e.topRows(2).squaredNorm();
  s.B = w * e.middleRows(2, 2).squaredNorm();
  const Eigen::ArrayXd ep = e.row(kP).array() - e.row(kP).mean();
  s.p = w * ep.square().sum();
  s.u_ref = w * vb.topRows(2).squaredNorm();
  s.B_ref = w * vb.middleRows(2, 2).squaredNorm();
  return s;
}

double ratio(double num, double den) {
  return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

ErrorReport error_norms(const FieldModel& model, const FieldModel& reference,
                        const PhysicsParams& phys, const NormOptions& opts) {
  phys.validate();
  opts.validate();
  const int n = opts.resolution, S = opts.time_slices;
  ErrorReport r;
  double ref_u_sup = 0.0, ref_B_sup = 0.0;
  for (int i = 0; i < S; ++i) {
    const SliceSq s = slice_errors(model, reference, phys.domain, n, sup_time(phys, S, i));
    r.u_sup_l2 = sup(r.u_sup_l2, std::sqrt(s.u));
    r.B_sup_l2 = sup(r.B_sup_l2, std::sqrt(s.B));
    r.p_sup_l2 = sup(r.p_sup_l2, std::sqrt(s.p));
    ref_u_sup = sup(ref_u_sup, std::sqrt(s.u_ref));
    ref_B_sup = sup(ref_B_sup, std::sqrt(s.B_ref));
  }
  double u4 = 0.0, B4 = 0.0, ru4 = 0.0, rB4 = 0.0;
  const double dt = phys.T / S;
  for (int i = 0; i < S; ++i) {
    const SliceSq s = slice_errors(model, reference, phys.domain, n, mid_time(phys, S, i));
    u4 += dt * s.u * s.u;
    B4 += dt * s.B * s.B;
    ru4 += dt * s.u_ref * s.u_ref;
    rB4 += dt * s.B_ref * s.B_ref;
  }
  r.u_l4l2 = std::pow(u4, 0.25);
  r.B_l4l2 = std::pow(B4, 0.25);
  r.u_rel_sup_l2 = ratio(r.u_sup_l2, ref_u_sup);
  r.B_rel_sup_l2 = ratio(r.B_sup_l2, ref_B_sup);
  r.u_rel_l4l2 = ratio(r.u_l4l2, std::pow(ru4, 0.25));
  r.B_rel_l4l2 = ratio(r.B_l4l2, std::pow(rB4, 0.25));

  if (opts.sobolev) {
    // slots: val, dx, dy, dt
    double hu = 0.0, hB = 0.0;
    const double w = cell_area(phys.domain, n);
    for (int i = 0; i < S; ++i) {
      const Eigen::Matrix3Xd pts = slice_points(phys.domain, n, mid_time(phys, S, i));
      const Eigen::MatrixXd e = model.evaluate(pts, 4) - reference.evaluate(pts, 4);
      hu += dt * w * e.topRows(2).squaredNorm();
      hB += dt * w * e.middleRows(2, 2).squaredNorm();
    }
    r.u_h1 = std::sqrt(hu);
    r.B_h1 = std::sqrt(hB);
  }
  return r;
}

L4L2Distance l4l2_distance(const FieldModel& a, const FieldModel& b, const PhysicsParams& phys,
                           const NormOptions& opts) {
  phys.validate();
  opts.validate();
  const int S = opts.time_slices;
  const double dt = phys.T / S;
  double u4 = 0.0, B4 = 0.0;
  for (int i = 0; i < S; ++i) {
    const SliceSq s = slice_errors(a, b, phys.domain, opts.resolution, mid_time(phys, S, i));
    u4 += dt * s.u * s.u;
    B4 += dt * s.B * s.B;
  }
  return {std::pow(u4, 0.25), std::pow(B4, 0.25)};
}

double l2l2_norm(const Vec2Fn& f, const PhysicsParams& phys, const NormOptions& opts) {
  if (!f) return 0.0;
  phys.validate();
  opts.validate();
  const int n = opts.resolution, S = opts.time_slices;
  const double w = cell_area(phys.domain, n) * phys.T / S;
  double sum = 0.0;
  for (int i = 0; i < S; ++i) {
    const Eigen::Matrix3Xd pts = slice_points(phys.domain, n, mid_time(phys, S, i));
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      const auto v = f(pts(0, j), pts(1, j), pts(2, j));
      sum += v[0] * v[0] + v[1] * v[1];
    }
  }
  return std::sqrt(w * sum);
}

EnergyReport energy_check(const FieldModel& model, const PhysicsParams& phys,
                          const NormOptions& opts, double ceiling) {
  phys.validate();
  opts.validate();
  const int n = opts.resolution, S = opts.time_slices;
  const double w = cell_area(phys.domain, n);
  const Eigen::Index P = static_cast<Eigen::Index>(n) * n;
  EnergyReport r;
  for (int i = 0; i < S; ++i) {
    const Eigen::MatrixXd v = model.evaluate(slice_points(phys.domain, n, sup_time(phys, S, i)), 1);
    const double u2 = w * v.topRows(2).squaredNorm(), B2 = w * v.middleRows(2, 2).squaredNorm();
    r.sup_u2 = sup(r.sup_u2, u2);
    r.sup_B2 = sup(r.sup_B2, B2);
    r.sup_total = sup(r.sup_total, u2 + B2);
  }
  const double dt = phys.T / S;
  for (int i = 0; i < S; ++i) {
    const Eigen::MatrixXd v = model.evaluate(slice_points(phys.domain, n, mid_time(phys, S, i)), 3);
    // slot 1 (dx) and 2 (dy) blocks
    const auto gu = v.topRows(2).middleCols(P, 2 * P);
    const auto gB = v.middleRows(2, 2).middleCols(P, 2 * P);
    r.int_grad_u2 += dt * w * gu.squaredNorm();
    r.int_grad_B2 += dt * w * gB.squaredNorm();
  }
  const double vals[] = {r.sup_u2, r.sup_B2, r.sup_total, r.int_grad_u2, r.int_grad_B2};
  for (double x : vals) {
    if (!std::isfinite(x)) r.finite = false;
    if (!(x <= ceiling)) r.within_ceiling = false;
  }
  return r;
}

}  // namespace mhdpinn
