#include "mhdpinn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>

#include "mhdpinn/errors.hpp"
#include "mhdpinn/log.hpp"

namespace mhdpinn {

void AdamHyper::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("adam learning rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("adam eps must be > 0");
}

OptimState OptimState::adam(std::size_t n, const AdamHyper& hyper) {
  hyper.validate();
  OptimState s;
  s.hyper = hyper;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  return s;
}

void adam_step(OptimState& state, std::span<double> theta, std::span<const double> grad) {
  const std::size_t n = theta.size();
  if (grad.size() != n || state.m.size() != n || state.v.size() != n) {
    std::ostringstream msg;
    msg << "adam_step: " << n << " parameters, " << grad.size() << " gradient entries, "
        << state.m.size() << " moment entries";
    throw ShapeError(msg.str());
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(grad[i])) {
      throw NonFiniteError("adam_step: non-finite gradient at parameter " + std::to_string(i));
    }
  }
  const AdamHyper& h = state.hyper;
  const double t = static_cast<double>(state.step + 1);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * grad[i];
    state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    theta[i] -= h.lr * mhat / (std::sqrt(vhat) + h.eps);
  }
  ++state.step;
}

void adam_step(OptimState& state, NetworkParams& params, std::span<const double> grad) {
  std::vector<double> flat = params.flatten();
  adam_step(state, std::span<double>(flat), grad);
  params.assign(flat);
}

// ---------------------------------------------------------------------------
// L-BFGS

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Trial {
  double alpha = 0.0;
  double f = 0.0;
  double d = 0.0;  // directional derivative
  std::vector<double> g;
};

class LineSearch {
 public:
  LineSearch(const Objective& f, const std::vector<double>& x, const std::vector<double>& p,
             const Trial& start, const LbfgsOptions& opts)
      : f_(f), x_(x), p_(p), start_(start), opts_(opts), xt_(x.size()) {}

  // Strong Wolfe search; returns false when no acceptable step was found.
  bool run(double alpha0, Trial& out) {
    Trial prev = start_;
    double alpha = alpha0;
    for (int i = 0; i < opts_.max_line_search; ++i) {
      Trial cur = eval(alpha);
      if (!armijo(cur) || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur, out);
      if (std::abs(cur.d) <= -opts_.c2 * start_.d) {
        out = std::move(cur);
        return true;
      }
      if (cur.d >= 0.0) return zoom(cur, prev, out);
      prev = std::move(cur);
      alpha *= 2.0;
    }
    // Ran out of expansions; the last trial still satisfies sufficient decrease.
    if (prev.alpha > 0.0) {
      out = std::move(prev);
      return true;
    }
    return false;
  }

 private:
  Trial eval(double alpha) {
    Trial t;
    t.alpha = alpha;
    t.g.assign(x_.size(), 0.0);
    for (std::size_t i = 0; i < x_.size(); ++i) xt_[i] = x_[i] + alpha * p_[i];
    try {
      t.f = f_(xt_, t.g);
    } catch (const NonFiniteError&) {
      t.f = std::numeric_limits<double>::infinity();
    }
    t.d = std::isfinite(t.f) ? dot(t.g, p_) : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(t.d)) t.f = std::numeric_limits<double>::infinity();
    return t;
  }

  bool armijo(const Trial& t) const {
    return std::isfinite(t.f) && t.f <= start_.f + opts_.c1 * t.alpha * start_.d;
  }

  // Minimizer of the cubic through (a, fa, da), (b, fb, db), or NaN.
  static double cubic_min(const Trial& a, const Trial& b) {
    if (!std::isfinite(a.f) || !std::isfinite(b.f)) return std::nan("");
    const double d1 = a.d + b.d - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    const double disc = d1 * d1 - a.d * b.d;
    if (disc < 0.0) return std::nan("");
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    return b.alpha - (b.alpha - a.alpha) * (b.d + d2 - d1) / (b.d - a.d + 2.0 * d2);
  }

  bool zoom(Trial lo, Trial hi, Trial& out) {
    for (int j = 0; j < opts_.max_line_search; ++j) {
      const double a = std::min(lo.alpha, hi.alpha), b = std::max(lo.alpha, hi.alpha);
      const double width = b - a;
      if (width <= 1e-16 * std::max(1.0, b)) break;
      double alpha = cubic_min(lo, hi);
      if (!std::isfinite(alpha) || alpha < a + 0.1 * width || alpha > b - 0.1 * width) {
        alpha = 0.5 * (a + b);
      }
      Trial cur = eval(alpha);
      if (!armijo(cur) || cur.f >= lo.f) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.d) <= -opts_.c2 * start_.d) {
          out = std::move(cur);
          return true;
        }
        if (cur.d * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
    }
    // lo always satisfies sufficient decrease once it moved off zero.
    if (lo.alpha > 0.0) {
      out = std::move(lo);
      return true;
    }
    return false;
  }

  const Objective& f_;
  const std::vector<double>& x_;
  const std::vector<double>& p_;
  const Trial& start_;
  const LbfgsOptions& opts_;
  std::vector<double> xt_;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double> x0, const LbfgsOptions& opts) {
  if (opts.history < 1 || opts.max_iterations < 0) {
    throw ConfigError("lbfgs: history must be >= 1 and max_iterations >= 0");
  }
  const std::size_t n = x0.size();
  LbfgsResult res;
  res.x = std::move(x0);
  std::vector<double> g(n);
  res.f = f(res.x, g);
  if (!std::isfinite(res.f)) throw NonFiniteError("lbfgs: objective is not finite at the start");

  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;
  std::vector<double> p(n), alpha_k(opts.history);

  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    const double gmax = std::accumulate(g.begin(), g.end(), 0.0,
                                        [](double m, double v) { return std::max(m, std::abs(v)); });
    if (gmax <= opts.grad_tol) {
      res.converged = true;
      break;
    }

    // Two-loop recursion.
    for (std::size_t i = 0; i < n; ++i) p[i] = -g[i];
    const int h = static_cast<int>(S.size());
    for (int i = h - 1; i >= 0; --i) {
      alpha_k[i] = rho[i] * dot(S[i], p);
      for (std::size_t j = 0; j < n; ++j) p[j] -= alpha_k[i] * Y[i][j];
    }
    if (h > 0) {
      const double gamma = dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
      for (double& v : p) v *= gamma;
    }
    for (int i = 0; i < h; ++i) {
      const double beta = rho[i] * dot(Y[i], p);
      for (std::size_t j = 0; j < n; ++j) p[j] += (alpha_k[i] - beta) * S[i][j];
    }

    Trial start;
    start.f = res.f;
    start.d = dot(g, p);
    if (!(start.d < 0.0)) {
      // Not a descent direction: drop the history and use steepest descent.
      S.clear();
      Y.clear();
      rho.clear();
      for (std::size_t i = 0; i < n; ++i) p[i] = -g[i];
      start.d = dot(g, p);
    }
    const double alpha0 = h == 0 ? std::min(1.0, 1.0 / std::sqrt(dot(g, g))) : 1.0;

    Trial acc;
    LineSearch ls(f, res.x, p, start, opts);
    if (!ls.run(alpha0, acc)) {
      res.line_search_failed = true;
      log_warning("lbfgs: line search failed at iteration " + std::to_string(res.iterations) +
                  "; keeping the last accepted parameters");
      break;
    }

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = acc.alpha * p[i];
      y[i] = acc.g[i] - g[i];
    }
    const double sy = dot(s, y);
    for (std::size_t i = 0; i < n; ++i) res.x[i] += s[i];
    res.f = acc.f;
    g = std::move(acc.g);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opts.history) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
  }
  if (!res.converged && !res.line_search_failed) {
    const double gmax = std::accumulate(g.begin(), g.end(), 0.0,
                                        [](double m, double v) { return std::max(m, std::abs(v)); });
    res.converged = gmax <= opts.grad_tol;
  }
  return res;
}

}  // namespace mhdpinn
