#pragma once

// Second-order space-time jets.
//
// A Jet2 carries a scalar together with the input derivatives the MHD
// residuals consume: first derivatives in x, y, t and the three spatial
// second derivatives. Time-time and space-time second derivatives are never
// needed and are not stored.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "mhdpinn/errors.hpp"

namespace mhdpinn {

enum class Slot : int { val = 0, dx, dy, dt, dxx, dxy, dyy };

inline constexpr int kNumSlots = 7;

struct Jet2 {
  double val = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double dt = 0.0;
  double dxx = 0.0;
  double dxy = 0.0;
  double dyy = 0.0;

  double& operator[](int s) { return (&val)[s]; }
  double operator[](int s) const { return (&val)[s]; }
  double operator[](Slot s) const { return (&val)[static_cast<int>(s)]; }

  bool finite() const;
  bool operator==(const Jet2&) const = default;
};

static_assert(sizeof(Jet2) == kNumSlots * sizeof(double));

/// Value and first three derivatives of a scalar function at one point.
struct Taylor3 {
  double f0, f1, f2, f3;
};

enum class Elementary { tanh, sin, cos, exp, recip, pow };

/// Derivatives of an elementary function at `x`. `exponent` is only read
/// for Elementary::pow. Throws DomainError outside the function's domain.
Taylor3 elementary_taylor(Elementary fn, double x, double exponent = 0.0);

const char* elementary_name(Elementary fn);

Jet2 jet_const(double c);

struct SeedJets {
  Jet2 x, y, t;
};

SeedJets jet_seed(double x, double y, double t);

// Chain rule for a scalar function with known derivatives at a.val.
inline Jet2 jet_compose(const Jet2& a, double f0, double f1, double f2) {
  Jet2 r;
  r.val = f0;
  r.dx = f1 * a.dx;
  r.dy = f1 * a.dy;
  r.dt = f1 * a.dt;
  r.dxx = f2 * a.dx * a.dx + f1 * a.dxx;
  r.dxy = f2 * a.dx * a.dy + f1 * a.dxy;
  r.dyy = f2 * a.dy * a.dy + f1 * a.dyy;
  return r;
}

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  return {a.val + b.val, a.dx + b.dx, a.dy + b.dy, a.dt + b.dt,
          a.dxx + b.dxx, a.dxy + b.dxy, a.dyy + b.dyy};
}

inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  return {a.val - b.val, a.dx - b.dx, a.dy - b.dy, a.dt - b.dt,
          a.dxx - b.dxx, a.dxy - b.dxy, a.dyy - b.dyy};
}

inline Jet2 operator-(const Jet2& a) {
  return {-a.val, -a.dx, -a.dy, -a.dt, -a.dxx, -a.dxy, -a.dyy};
}

inline Jet2 operator*(double k, const Jet2& a) {
  return {k * a.val, k * a.dx, k * a.dy, k * a.dt,
          k * a.dxx, k * a.dxy, k * a.dyy};
}

inline Jet2 operator*(const Jet2& a, double k) { return k * a; }

inline Jet2 operator+(const Jet2& a, double k) {
  Jet2 r = a;
  r.val += k;
  return r;
}

inline Jet2 operator+(double k, const Jet2& a) { return a + k; }
inline Jet2 operator-(const Jet2& a, double k) { return a + (-k); }
inline Jet2 operator-(double k, const Jet2& a) { return (-a) + k; }

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.val = a.val * b.val;
  r.dx = a.dx * b.val + a.val * b.dx;
  r.dy = a.dy * b.val + a.val * b.dy;
  r.dt = a.dt * b.val + a.val * b.dt;
  r.dxx = a.dxx * b.val + 2.0 * a.dx * b.dx + a.val * b.dxx;
  r.dxy = a.dxy * b.val + a.dx * b.dy + a.dy * b.dx + a.val * b.dxy;
  r.dyy = a.dyy * b.val + 2.0 * a.dy * b.dy + a.val * b.dyy;
  return r;
}

Jet2 operator/(const Jet2& a, const Jet2& b);
Jet2 operator/(const Jet2& a, double k);
Jet2 operator/(double k, const Jet2& b);

inline Jet2& operator+=(Jet2& a, const Jet2& b) { return a = a + b; }
inline Jet2& operator-=(Jet2& a, const Jet2& b) { return a = a - b; }
inline Jet2& operator*=(Jet2& a, const Jet2& b) { return a = a * b; }

Jet2 apply(Elementary fn, const Jet2& a, double exponent = 0.0);

inline Jet2 tanh(const Jet2& a) { return apply(Elementary::tanh, a); }
inline Jet2 sin(const Jet2& a) { return apply(Elementary::sin, a); }
inline Jet2 cos(const Jet2& a) { return apply(Elementary::cos, a); }
inline Jet2 exp(const Jet2& a) { return apply(Elementary::exp, a); }
inline Jet2 pow(const Jet2& a, double p) { return apply(Elementary::pow, a, p); }

// Uniform slot access used by code templated over plain jets and taped jets.
inline double slot(const Jet2& a, Slot s) { return a[s]; }

/// Throws NonFiniteError naming `what` if any slot is NaN or infinite.
void require_finite(const Jet2& a, const std::string& what);

std::string to_string(const Jet2& a);

}  // namespace mhdpinn
