#include "mhdpinn/hodge.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "mhdpinn/errors.hpp"

namespace mhdpinn {

void GridField::validate() const {
  if (N < 8) throw ShapeError("grid field needs N >= 8, got " + std::to_string(N));
  if (!(h > 0.0)) throw ShapeError("grid spacing must be positive");
  if (vx.rows() != N || vx.cols() != N || vy.rows() != N || vy.cols() != N) {
    throw ShapeError("grid field arrays must be N x N");
  }
  if (!vx.allFinite() || !vy.allFinite()) throw ShapeError("grid field has non-finite values");
}

GridField grid_sample(const std::function<std::array<double, 2>(double, double)>& f,
                      const Rect& domain, int N) {
  if (N < 8) throw ShapeError("grid field needs N >= 8, got " + std::to_string(N));
  if (domain.width() != domain.height()) throw ShapeError("grid fields live on square domains");
  GridField g;
  g.N = N;
  g.h = domain.width() / (N - 1);
  g.x0 = domain.x0;
  g.y0 = domain.y0;
  g.vx.resize(N, N);
  g.vy.resize(N, N);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) {
      const auto v = f(g.x(i), g.y(j));
      g.vx(i, j) = v[0];
      g.vy(i, j) = v[1];
    }
  return g;
}

namespace {

// Trapezoid weights: h^2 times 1/2 per boundary direction.
Eigen::MatrixXd weights(int N, double h) {
  Eigen::VectorXd m = Eigen::VectorXd::Ones(N);
  m(0) = m(N - 1) = 0.5;
  return (m * m.transpose()) * (h * h);
}

// 1D nodal derivative matrix.
Eigen::MatrixXd derivative(int N, double h) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N, N);
  const double c = 1.0 / (2.0 * h);
  D(0, 0) = -3.0 * c;
  D(0, 1) = 4.0 * c;
  D(0, 2) = -c;
  for (int i = 1; i + 1 < N; ++i) {
    D(i, i - 1) = -c;
    D(i, i + 1) = c;
  }
  D(N - 1, N - 3) = c;
  D(N - 1, N - 2) = -4.0 * c;
  D(N - 1, N - 1) = 3.0 * c;
  return D;
}

struct Operator {
  Eigen::MatrixXd D, Dt, M;

  // (G phi)_x = D phi, (G phi)_y = phi D^T   (i indexes x, j indexes y)
  void grad(const Eigen::MatrixXd& phi, Eigen::MatrixXd& gx, Eigen::MatrixXd& gy) const {
    gx.noalias() = D * phi;
    gy.noalias() = phi * Dt;
  }
  // G^T M (gx, gy)
  Eigen::MatrixXd adjoint(const Eigen::MatrixXd& gx, const Eigen::MatrixXd& gy) const {
    const Eigen::MatrixXd mx = M.cwiseProduct(gx), my = M.cwiseProduct(gy);
    Eigen::MatrixXd r = Dt * mx;
    r.noalias() += my * D;
    return r;
  }
};

}  // namespace

double grid_inner(const GridField& a, const GridField& b) {
  if (a.N != b.N) throw ShapeError("grid fields of different size");
  const Eigen::MatrixXd M = weights(a.N, a.h);
  return (M.cwiseProduct(a.vx).cwiseProduct(b.vx) + M.cwiseProduct(a.vy).cwiseProduct(b.vy)).sum();
}

double grid_norm(const GridField& a) { return std::sqrt(grid_inner(a, a)); }

HodgeResult hodge_decompose(const GridField& w, const CgOptions& opts) {
  w.validate();
  const int N = w.N;
  Operator op{derivative(N, w.h), {}, weights(N, w.h)};
  op.Dt = op.D.transpose();

  Eigen::MatrixXd rhs = op.adjoint(w.vx, w.vy);
  rhs.array() -= rhs.mean();  // constants are the null space; keep rhs orthogonal to them
  const double rhs_norm = rhs.norm();

  const int cap = opts.max_iterations > 0 ? opts.max_iterations
                                          : static_cast<int>(std::min(200000LL, 20LL * N * N));
  HodgeResult res;
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(N, N);
  if (rhs_norm > 0.0) {
    Eigen::MatrixXd r = rhs, p = r, Ap(N, N), gx(N, N), gy(N, N);
    double rr = r.squaredNorm();
    int it = 0;
    while (std::sqrt(rr) > opts.tol * rhs_norm) {
      if (it >= cap) {
        throw ConvergenceError("hodge CG did not reach relative residual " +
                               std::to_string(opts.tol) + " in " + std::to_string(cap) +
                               " iterations (at " + std::to_string(std::sqrt(rr) / rhs_norm) + ")");
      }
      op.grad(p, gx, gy);
      Ap = op.adjoint(gx, gy);
      const double alpha = rr / p.cwiseProduct(Ap).sum();
      phi += alpha * p;
      r -= alpha * Ap;
      const double rr_new = r.squaredNorm();
      p = r + (rr_new / rr) * p;
      rr = rr_new;
      ++it;
    }
    res.cg_iterations = it;
    res.cg_residual = std::sqrt(rr) / rhs_norm;
  }
  phi.array() -= phi.mean();

  res.w2 = w;
  op.grad(phi, res.w2.vx, res.w2.vy);
  res.w1 = w;
  res.w1.vx -= res.w2.vx;
  res.w1.vy -= res.w2.vy;
  // Exact line search along G phi. CG leaves (w1, G phi) = phi^T r, which
  // swamps the cosine when w1 or w2 is near rounding level; correcting w1
  // itself (not w - c G phi) keeps the leftover relative to |w1|.
  for (int pass = 0; pass < 2; ++pass) {
    const double w2w2 = grid_inner(res.w2, res.w2);
    if (!(w2w2 > 0.0)) break;
    const double c = grid_inner(res.w1, res.w2) / w2w2;
    phi *= 1.0 + c;
    res.w1.vx -= c * res.w2.vx;
    res.w1.vy -= c * res.w2.vy;
    res.w2.vx *= 1.0 + c;
    res.w2.vy *= 1.0 + c;
  }
  res.phi = std::move(phi);
  return res;
}

void save_grid_csv(const GridField& f, const std::string& path) {
  f.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[160];
  std::snprintf(buf, sizeof buf, "N,h\n%d,%.17g\nx,y,vx,vy\n", f.N, f.h);
  out << buf;
  for (int j = 0; j < f.N; ++j)
    for (int i = 0; i < f.N; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", f.x(i), f.y(j), f.vx(i, j),
                    f.vy(i, j));
      out << buf;
    }
}

}  // namespace mhdpinn
