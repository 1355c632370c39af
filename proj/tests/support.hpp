#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <quadmath.h>

#include "mhdpinn/jet.hpp"
#include "mhdpinn/network.hpp"
#include "mhdpinn/random.hpp"

namespace mhdpinn::testing {

// |a - b| / max(|a|, |b|), 0 when both are 0.
inline double rel_diff(double a, double b) {
  const double d = std::max(std::abs(a), std::abs(b));
  return d == 0.0 ? 0.0 : std::abs(a - b) / d;
}

// Central differences of a scalar function of (x, y, t) in the Jet2 slot
// layout: first derivatives, the two pure second derivatives and the
// four-point mixed one. R is the working precision of the differences.
template <class R = double>
Jet2 fd_jet(const std::function<R(R, R, R)>& f, R x, R y, R t, R h) {
  const R f0 = f(x, y, t);
  const R fxp = f(x + h, y, t), fxm = f(x - h, y, t);
  const R fyp = f(x, y + h, t), fym = f(x, y - h, t);
  Jet2 r;
  r.val = static_cast<double>(f0);
  r.dx = static_cast<double>((fxp - fxm) / (2 * h));
  r.dy = static_cast<double>((fyp - fym) / (2 * h));
  r.dt = static_cast<double>((f(x, y, t + h) - f(x, y, t - h)) / (2 * h));
  r.dxx = static_cast<double>((fxp - 2 * f0 + fxm) / (h * h));
  r.dyy = static_cast<double>((fyp - 2 * f0 + fym) / (h * h));
  r.dxy = static_cast<double>(
      (f(x + h, y + h, t) - f(x + h, y - h, t) - f(x - h, y + h, t) + f(x - h, y - h, t)) /
      (4 * h * h));
  return r;
}

// Quad precision for finite-difference oracles: a second difference at step
// 1e-4 then rounds near 1e-26, far below any tolerance used here.
using Quad = __float128;

namespace quad {
inline Quad tanh(Quad v) { return ::tanhq(v); }
inline Quad sin(Quad v) { return ::sinq(v); }
inline Quad cos(Quad v) { return ::cosq(v); }
inline Quad exp(Quad v) { return ::expq(v); }
inline Quad pow(Quad v, Quad p) { return ::powq(v, p); }
}  // namespace quad

using QuadFn = std::function<Quad(Quad, Quad, Quad)>;

// Independent plain forward pass in quad precision, output `o`.
inline Quad forward_value_quad(const NetworkParams& p, Quad x, Quad y, Quad t, int o) {
  std::vector<Quad> outs;
  for (const Mlp& m : p.heads) {
    std::vector<Quad> a{x, y, t};
    for (int k = 0; k < m.num_layers(); ++k) {
      std::vector<Quad> z(static_cast<std::size_t>(m.weights[k].rows()));
      for (std::size_t i = 0; i < z.size(); ++i) {
        Quad s = m.biases[k](i);
        for (std::size_t j = 0; j < a.size(); ++j) s += static_cast<Quad>(m.weights[k](i, j)) * a[j];
        const bool hidden = k + 1 < m.num_layers();
        z[i] = !hidden ? s : p.activation == Activation::tanh ? quad::tanh(s) : quad::sin(s);
      }
      a = std::move(z);
    }
    outs.insert(outs.end(), a.begin(), a.end());
  }
  return outs.at(static_cast<std::size_t>(o));
}

struct FdCompare {
  double worst = 0.0;  // relative difference, max over slots
  int slots = 0;
  int fail = 0;        // slots over `tol`
};

// Compares a jet with quad precision central differences at step 1e-4, with
// one Richardson step against step 2e-4 to cancel the O(h^2) truncation, which
// otherwise dominates slots that are small next to the function's higher
// derivatives.
inline Jet2 fd_jet_richardson(const QuadFn& f, double x, double y, double t) {
  const Jet2 a = fd_jet<Quad>(f, x, y, t, Quad(1e-4));
  const Jet2 b = fd_jet<Quad>(f, x, y, t, Quad(2e-4));
  Jet2 r;
  for (int k = 0; k < kNumSlots; ++k) r[k] = (4.0 * a[k] - b[k]) / 3.0;
  r.val = a.val;
  return r;
}

inline void compare_with_fd(const Jet2& jet, const QuadFn& f, double x, double y, double t, FdCompare& acc, double tol = 1e-6) {
  const Jet2 fd = fd_jet_richardson(f, x, y, t);
  for (int k = 0; k < kNumSlots; ++k) {
    const double r = rel_diff(jet[k], fd[k]);
    acc.worst = std::max(acc.worst, r);
    if (r > tol) ++acc.fail;
    ++acc.slots;
  }
}

// Random [3, hidden..., 5] sizes with 1..3 hidden layers of width 2..12.
inline std::vector<int> random_sizes(Rng& rng) {
  const int depth = 1 + static_cast<int>(rng.next() % 3);
  std::vector<int> s{3};
  for (int i = 0; i < depth; ++i) s.push_back(2 + static_cast<int>(rng.next() % 11));
  s.push_back(5);
  return s;
}

// Scratch directory under the build tree, emptied on construction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("mhdpinn_test_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& file = {}) const {
    return file.empty() ? path_.string() : (path_ / file).string();
  }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace mhdpinn::testing
