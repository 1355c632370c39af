#pragma once

// Discrete Hodge decomposition w = w1 + w2 of a nodal vector field on a
// square, with w2 = G phi a discrete gradient and w1 orthogonal to every
// discrete gradient in the trapezoid-weighted inner product.
//
// G is the nodal gradient: central differences inside, second-order
// one-sided differences on the boundary. phi solves the normal equations
// G^T M G phi = G^T M w (a weak Neumann problem for lap phi = div w) by
// conjugate gradients, which makes (w1, w2) = 0 up to the CG residual.

#include <array>
#include <functional>
#include <string>

#include <Eigen/Core>

#include "mhdpinn/physics.hpp"

namespace mhdpinn {

struct GridField {
  int N = 0;    // nodes per side
  double h = 0;  // node spacing
  double x0 = 0.0, y0 = 0.0;
  Eigen::MatrixXd vx, vy;  // (i, j) = node (x0 + i h, y0 + j h)

  double x(int i) const { return x0 + i * h; }
  double y(int j) const { return y0 + j * h; }

  /// Throws ShapeError if N < 8, sizes disagree or values are not finite.
  void validate() const;
};

/// Samples f at the N x N nodes of a square domain. Throws ShapeError if
/// N < 8 or the domain is not square.
GridField grid_sample(const std::function<std::array<double, 2>(double, double)>& f,
                      const Rect& domain, int N);

/// Trapezoid-weighted inner product and norm.
double grid_inner(const GridField& a, const GridField& b);
double grid_norm(const GridField& a);

struct CgOptions {
  double tol = 1e-10;       // on |r| / |rhs|
  int max_iterations = 0;   // 0 means min(20 N^2, 200000)
};

struct HodgeResult {
  GridField w1;  // divergence-free part
  GridField w2;  // gradient part
  Eigen::MatrixXd phi;
  int cg_iterations = 0;
  double cg_residual = 0.0;  // relative
};

/// Throws ShapeError on an invalid field and ConvergenceError if CG misses
/// its tolerance within the iteration cap.
HodgeResult hodge_decompose(const GridField& w, const CgOptions& opts = {});

/// Writes "N,h" and its values, then a header x,y,vx,vy and one row per node.
void save_grid_csv(const GridField& f, const std::string& path);

}  // namespace mhdpinn
