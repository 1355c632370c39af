#include "mhdpinn/jet.hpp"

#include <cstdio>
#include <limits>

namespace mhdpinn {

bool Jet2::finite() const {
  for (int s = 0; s < kNumSlots; ++s) {
    if (!std::isfinite((*this)[s])) return false;
  }
  return true;
}

const char* elementary_name(Elementary fn) {
  switch (fn) {
    case Elementary::tanh: return "tanh";
    case Elementary::sin: return "sin";
    case Elementary::cos: return "cos";
    case Elementary::exp: return "exp";
    case Elementary::recip: return "recip";
    case Elementary::pow: return "pow";
  }
  return "?";
}

Taylor3 elementary_taylor(Elementary fn, double x, double exponent) {
  switch (fn) {
    case Elementary::tanh: {
      const double t = std::tanh(x);
      const double d1 = 1.0 - t * t;
      const double d2 = -2.0 * t * d1;
      const double d3 = -2.0 * d1 * d1 - 2.0 * t * d2;
      return {t, d1, d2, d3};
    }
    case Elementary::sin: {
      const double s = std::sin(x), c = std::cos(x);
      return {s, c, -s, -c};
    }
    case Elementary::cos: {
      const double s = std::sin(x), c = std::cos(x);
      return {c, -s, -c, s};
    }
    case Elementary::exp: {
      const double e = std::exp(x);
      return {e, e, e, e};
    }
    case Elementary::recip: {
      if (x == 0.0) throw DomainError("division by a jet with zero value");
      const double r = 1.0 / x;
      return {r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r};
    }
    case Elementary::pow: {
      const double p = exponent;
      const bool integral = p == std::floor(p);
      if (x < 0.0 && !integral) {
        throw DomainError("fractional power of a negative jet value");
      }
      if (x == 0.0 && !(integral && p >= 0.0)) {
        // Derivatives of x^p blow up at 0 unless p is a non-negative integer.
        throw DomainError("non-integral power of a jet with zero value");
      }
      auto pw = [&](double q) -> double {
        if (integral && x == 0.0) return q == 0.0 ? 1.0 : (q > 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        return std::pow(x, q);
      };
      const double f0 = pw(p);
      const double f1 = p == 0.0 ? 0.0 : p * pw(p - 1.0);
      const double f2 = (p == 0.0 || p == 1.0) ? 0.0 : p * (p - 1.0) * pw(p - 2.0);
      const double f3 = (p == 0.0 || p == 1.0 || p == 2.0) ? 0.0 : p * (p - 1.0) * (p - 2.0) * pw(p - 3.0);
      return {f0, f1, f2, f3};
    }
  }
  throw DomainError("unknown elementary function");
}

Jet2 jet_const(double c) {
  Jet2 r;
  r.val = c;
  return r;
}

SeedJets jet_seed(double x, double y, double t) {
  SeedJets s;
  s.x.val = x;
  s.x.dx = 1.0;
  s.y.val = y;
  s.y.dy = 1.0;
  s.t.val = t;
  s.t.dt = 1.0;
  return s;
}

Jet2 apply(Elementary fn, const Jet2& a, double exponent) {
  const Taylor3 d = elementary_taylor(fn, a.val, exponent);
  Jet2 r = jet_compose(a, d.f0, d.f1, d.f2);
  require_finite(r, elementary_name(fn));
  return r;
}

Jet2 operator/(const Jet2& a, const Jet2& b) {
  return a * apply(Elementary::recip, b);
}

Jet2 operator/(const Jet2& a, double k) {
  if (k == 0.0) throw DomainError("division of a jet by zero");
  return (1.0 / k) * a;
}

Jet2 operator/(double k, const Jet2& b) {
  return k * apply(Elementary::recip, b);
}

void require_finite(const Jet2& a, const std::string& what) {
  if (!a.finite()) {
    throw NonFiniteError("non-finite jet in " + what + ": " + to_string(a));
  }
}

std::string to_string(const Jet2& a) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "(%.17g; %.17g, %.17g, %.17g; %.17g, %.17g, %.17g)",
                a.val, a.dx, a.dy, a.dt, a.dxx, a.dxy, a.dyy);
  return buf;
}

}  // namespace mhdpinn
