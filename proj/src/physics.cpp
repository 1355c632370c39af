#include "mhdpinn/physics.hpp"

#include <cmath>
#include <stdexcept>

#include "mhdpinn/errors.hpp"
#include "mhdpinn/sampling.hpp"

namespace mhdpinn {

void PhysicsParams::validate() const {
  if (!(nu > 0.0)) throw ConfigError("physics.nu must be positive");
  if (!(mu > 0.0)) throw ConfigError("physics.mu must be positive");
  if (!(S > 0.0)) throw ConfigError("physics.S must be positive");
  if (!(T > 0.0)) throw ConfigError("physics.T must be positive");
  if (!(domain.x1 > domain.x0) || !(domain.y1 > domain.y0)) {
    throw ConfigError("physics.domain must satisfy x1 > x0 and y1 > y0");
  }
}

InteriorResiduals interior_residuals(const Eigen::Ref<const Eigen::MatrixXd>& out,
                                     const InteriorData& data, const PhysicsParams& phys) {
  const Eigen::Index P = out.cols() / kNumSlots;
  auto J = [&](int field, Slot s) {
    return out.row(field).segment(static_cast<int>(s) * P, P).transpose().array();
  };
  using S_ = Slot;
  const Eigen::ArrayXd ux = J(kUx, S_::val), uy = J(kUy, S_::val);
  const Eigen::ArrayXd Bx = J(kBx, S_::val), By = J(kBy, S_::val);
  const Eigen::ArrayXd curlB = J(kBy, S_::dx) - J(kBx, S_::dy);

  InteriorResiduals r;
  r.fx = J(kUx, S_::dt) - phys.nu * (J(kUx, S_::dxx) + J(kUx, S_::dyy)) +
         ux * J(kUx, S_::dx) + uy * J(kUx, S_::dy) + phys.S * (curlB * By) +
         J(kP, S_::dx) - data.fx;
  r.fy = J(kUy, S_::dt) - phys.nu * (J(kUy, S_::dxx) + J(kUy, S_::dyy)) +
         ux * J(kUy, S_::dx) + uy * J(kUy, S_::dy) - phys.S * (curlB * Bx) +
         J(kP, S_::dy) - data.fy;

  const Eigen::ArrayXd wy = J(kUx, S_::dy) * By + ux * J(kBy, S_::dy) -
                            J(kUy, S_::dy) * Bx - uy * J(kBx, S_::dy);
  const Eigen::ArrayXd wx = J(kUx, S_::dx) * By + ux * J(kBy, S_::dx) -
                            J(kUy, S_::dx) * Bx - uy * J(kBx, S_::dx);
  r.Bx = J(kBx, S_::dt) + phys.mu * (J(kBy, S_::dxy) - J(kBx, S_::dyy)) - wy - data.sBx;
  r.By = J(kBy, S_::dt) + phys.mu * (J(kBx, S_::dxy) - J(kBy, S_::dxx)) + wx - data.sBy;

  r.div_u = J(kUx, S_::dx) + J(kUy, S_::dy);
  r.div_B = J(kBx, S_::dx) + J(kBy, S_::dy);
  return r;
}

void interior_residuals_adjoint(const Eigen::Ref<const Eigen::MatrixXd>& out,
                                const InteriorResiduals& adj, const PhysicsParams& phys,
                                Eigen::Ref<Eigen::MatrixXd> out_adj) {
  const Eigen::Index P = out.cols() / kNumSlots;
  auto J = [&](int field, Slot s) {
    return out.row(field).segment(static_cast<int>(s) * P, P).transpose().array();
  };
  auto G = [&](int field, Slot s) {
    return out_adj.row(field).segment(static_cast<int>(s) * P, P).transpose().array();
  };
  using S_ = Slot;
  const Eigen::ArrayXd ux = J(kUx, S_::val), uy = J(kUy, S_::val);
  const Eigen::ArrayXd Bx = J(kBx, S_::val), By = J(kBy, S_::val);
  const Eigen::ArrayXd curlB = J(kBy, S_::dx) - J(kBx, S_::dy);
  const double nu = phys.nu, mu = phys.mu, S = phys.S;
  const Eigen::ArrayXd& a = adj.fx;
  const Eigen::ArrayXd& b = adj.fy;
  const Eigen::ArrayXd& c = adj.Bx;
  const Eigen::ArrayXd& d = adj.By;

  // momentum, x component
  G(kUx, S_::dt) += a;
  G(kUx, S_::dxx) -= nu * a;
  G(kUx, S_::dyy) -= nu * a;
  G(kUx, S_::val) += a * J(kUx, S_::dx);
  G(kUx, S_::dx) += a * ux;
  G(kUy, S_::val) += a * J(kUx, S_::dy);
  G(kUx, S_::dy) += a * uy;
  G(kBy, S_::dx) += S * a * By;
  G(kBx, S_::dy) -= S * a * By;
  G(kBy, S_::val) += S * a * curlB;
  G(kP, S_::dx) += a;

  // momentum, y component
  G(kUy, S_::dt) += b;
  G(kUy, S_::dxx) -= nu * b;
  G(kUy, S_::dyy) -= nu * b;
  G(kUx, S_::val) += b * J(kUy, S_::dx);
  G(kUy, S_::dx) += b * ux;
  G(kUy, S_::val) += b * J(kUy, S_::dy);
  G(kUy, S_::dy) += b * uy;
  G(kBy, S_::dx) -= S * b * Bx;
  G(kBx, S_::dy) += S * b * Bx;
  G(kBx, S_::val) -= S * b * curlB;
  G(kP, S_::dy) += b;

  // induction, x component: dt Bx + mu (By_xy - Bx_yy) - dy w
  G(kBx, S_::dt) += c;
  G(kBy, S_::dxy) += mu * c;
  G(kBx, S_::dyy) -= mu * c;
  G(kUx, S_::dy) -= c * By;
  G(kBy, S_::val) -= c * J(kUx, S_::dy);
  G(kUx, S_::val) -= c * J(kBy, S_::dy);
  G(kBy, S_::dy) -= c * ux;
  G(kUy, S_::dy) += c * Bx;
  G(kBx, S_::val) += c * J(kUy, S_::dy);
  G(kUy, S_::val) += c * J(kBx, S_::dy);
  G(kBx, S_::dy) += c * uy;

  // induction, y component: dt By + mu (Bx_xy - By_xx) + dx w
  G(kBy, S_::dt) += d;
  G(kBx, S_::dxy) += mu * d;
  G(kBy, S_::dxx) -= mu * d;
  G(kUx, S_::dx) += d * By;
  G(kBy, S_::val) += d * J(kUx, S_::dx);
  G(kUx, S_::val) += d * J(kBy, S_::dx);
  G(kBy, S_::dx) += d * ux;
  G(kUy, S_::dx) -= d * Bx;
  G(kBx, S_::val) -= d * J(kUy, S_::dx);
  G(kUy, S_::val) -= d * J(kBx, S_::dx);
  G(kBx, S_::dx) -= d * uy;

  G(kUx, S_::dx) += adj.div_u;
  G(kUy, S_::dy) += adj.div_u;
  G(kBx, S_::dx) += adj.div_B;
  G(kBy, S_::dy) += adj.div_B;
}

const char* form_name(Form f) {
  switch (f) {
    case Form::b: return "b";
    case Form::b_convective: return "b_convective";
    case Form::c_hat: return "c_hat";
    case Form::c_tilde: return "c_tilde";
    case Form::a_f: return "a_f";
    case Form::a_B: return "a_B";
    case Form::d: return "d";
  }
  return "?";
}

namespace {

// (w . grad) v for jets w, v.
std::array<double, 2> convect(const std::array<Jet2, 2>& w, const std::array<Jet2, 2>& v) {
  return {w[0].val * v[0].dx + w[1].val * v[0].dy, w[0].val * v[1].dx + w[1].val * v[1].dy};
}

double dot(const std::array<double, 2>& a, const std::array<Jet2, 2>& b) {
  return a[0] * b[0].val + a[1] * b[1].val;
}

void require(const VectorJetField& f, const char* form, const char* which) {
  if (!f) throw std::invalid_argument(std::string("form ") + form + " needs its " + which + " field");
}

}  // namespace

double form_integrand(Form form, const FormArgs& args, double x, double y, double t,
                      const PhysicsParams& phys) {
  const char* name = form_name(form);
  require(args.first, name, "first");
  const auto f1 = args.first(x, y, t);
  if (form == Form::d) {
    if (!args.q) throw std::invalid_argument("form d needs a scalar field");
    return args.q(x, y, t).val * div2(f1[0], f1[1]);
  }
  require(args.second, name, "second");
  const auto f2 = args.second(x, y, t);
  switch (form) {
    case Form::a_f:
      return phys.nu * (f1[0].dx * f2[0].dx + f1[0].dy * f2[0].dy +
                        f1[1].dx * f2[1].dx + f1[1].dy * f2[1].dy);
    case Form::a_B:
      return phys.mu * (curl2(f1[0], f1[1]) * curl2(f2[0], f2[1]) +
                        div2(f1[0], f1[1]) * div2(f2[0], f2[1]));
    default:
      break;
  }
  require(args.third, name, "third");
  const auto f3 = args.third(x, y, t);
  switch (form) {
    case Form::b:  // b(w, u, v) with w = f1, u = f2, v = f3
      return 0.5 * (dot(convect(f1, f2), f3) - dot(convect(f1, f3), f2));
    case Form::b_convective:
      return dot(convect(f1, f2), f3) +
             0.5 * div2(f1[0], f1[1]) * (f2[0].val * f3[0].val + f2[1].val * f3[1].val);
    case Form::c_hat: {  // (H, B, v): S (H x curl B) . v, H x c = c (H_y, -H_x)
      const double c = curl2(f2[0], f2[1]);
      return phys.S * c * (f1[1].val * f3[0].val - f1[0].val * f3[1].val);
    }
    case Form::c_tilde: {  // (u, B, H): (u x B) curl H
      const double w = f1[0].val * f2[1].val - f1[1].val * f2[0].val;
      return w * curl2(f3[0], f3[1]);
    }
    default:
      break;
  }
  throw std::invalid_argument("unhandled form");
}

McEstimate mc_estimate(std::span<const double> samples, double measure) {
  if (samples.empty()) throw std::invalid_argument("Monte-Carlo estimate over an empty point set");
  const auto m = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= m;
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var = samples.size() > 1 ? var / (m - 1.0) : 0.0;
  return {measure * mean, measure * std::sqrt(var / m), samples.size()};
}

McEstimate forms_quadrature(Form form, const FormArgs& args, const CollocationBatch& points,
                            double t, const PhysicsParams& phys) {
  const Eigen::Index m = points.interior.cols();
  if (m == 0) throw std::invalid_argument("forms_quadrature needs a nonempty interior point set");
  std::vector<double> samples(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    samples[j] = form_integrand(form, args, points.interior(0, j), points.interior(1, j), t, phys);
  }
  return mc_estimate(samples, phys.domain.area());
}

}  // namespace mhdpinn
