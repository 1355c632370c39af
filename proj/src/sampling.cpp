#include "mhdpinn/sampling.hpp"

#include <cstdio>
#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "mhdpinn/errors.hpp"
#include "mhdpinn/random.hpp"

namespace mhdpinn {

std::string to_string(SamplingStrategy s) {
  return s == SamplingStrategy::uniform ? "uniform" : "low-discrepancy";
}

SamplingStrategy parse_strategy(const std::string& name) {
  if (name == "uniform") return SamplingStrategy::uniform;
  if (name == "low-discrepancy") return SamplingStrategy::low_discrepancy;
  throw ConfigError("unknown sampling strategy '" + name + "' (expected uniform or low-discrepancy)");
}

std::uint64_t step_seed(std::uint64_t seed, std::uint64_t step) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (step + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double radical_inverse(std::uint64_t i, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

namespace {

// Source of points in (0,1)^d for one point set.
class UnitSource {
 public:
  UnitSource(SamplingStrategy strategy, Rng& rng, int dims) : strategy_(strategy), rng_(rng) {
    for (int d = 0; d < dims; ++d) shift_[d] = rng.uniform01();
  }

  // Coordinate d of the next point; call with d = 0, 1, ... then advance().
  double coord(int d) {
    static constexpr unsigned bases[3] = {2, 3, 5};
    double u;
    if (strategy_ == SamplingStrategy::uniform) {
      do { u = rng_.uniform01(); } while (u == 0.0);
    } else {
      u = radical_inverse(index_, bases[d]) + shift_[d];
      if (u >= 1.0) u -= 1.0;
      if (u == 0.0) u = 0.5 * 0x1.0p-53;
    }
    return u;
  }

  void advance() { ++index_; }

 private:
  SamplingStrategy strategy_;
  Rng& rng_;
  double shift_[3] = {0.0, 0.0, 0.0};
  std::uint64_t index_ = 1;
};

}  // namespace

void set_weights(CollocationBatch& batch, const Rect& domain, double T) {
  auto w = [](double measure, Eigen::Index count) {
    return count > 0 ? measure / static_cast<double>(count) : 0.0;
  };
  batch.w_interior = w(domain.area() * T, batch.m());
  batch.w_boundary = w(domain.perimeter() * T, batch.n());
  batch.w_initial = w(domain.area(), batch.k());
}

CollocationBatch sample_batch(const Rect& domain, double T, Eigen::Index m, Eigen::Index n,
                              Eigen::Index k, std::uint64_t seed, SamplingStrategy strategy) {
  if (m < 1 || n < 1 || k < 1) {
    throw std::invalid_argument("collocation counts m, n, k must all be at least 1");
  }
  Rng rng(seed);
  CollocationBatch b;
  const double W = domain.width(), H = domain.height();

  b.interior.resize(3, m);
  UnitSource in(strategy, rng, 3);
  for (Eigen::Index j = 0; j < m; ++j, in.advance()) {
    b.interior(0, j) = domain.x0 + W * in.coord(0);
    b.interior(1, j) = domain.y0 + H * in.coord(1);
    b.interior(2, j) = T * in.coord(2);  // in (0, T)
  }

  b.boundary.resize(3, n);
  b.boundary_normal.resize(2, n);
  UnitSource bd(strategy, rng, 2);
  const double perim = domain.perimeter();
  for (Eigen::Index j = 0; j < n; ++j, bd.advance()) {
    // Arc length along bottom, right, top, left edges.
    double s = perim * bd.coord(0);
    double x, y, nx, ny;
    if (s < W) {
      x = domain.x0 + s; y = domain.y0; nx = 0.0; ny = -1.0;
    } else if ((s -= W) < H) {
      x = domain.x1; y = domain.y0 + s; nx = 1.0; ny = 0.0;
    } else if ((s -= H) < W) {
      x = domain.x1 - s; y = domain.y1; nx = 0.0; ny = 1.0;
    } else {
      s -= W;
      x = domain.x0; y = domain.y1 - std::min(s, H); nx = -1.0; ny = 0.0;
    }
    b.boundary(0, j) = x;
    b.boundary(1, j) = y;
    b.boundary(2, j) = T * bd.coord(1);
    b.boundary_normal(0, j) = nx;
    b.boundary_normal(1, j) = ny;
  }

  b.initial.resize(3, k);
  UnitSource ic(strategy, rng, 2);
  for (Eigen::Index j = 0; j < k; ++j, ic.advance()) {
    b.initial(0, j) = domain.x0 + W * ic.coord(0);
    b.initial(1, j) = domain.y0 + H * ic.coord(1);
    b.initial(2, j) = 0.0;
  }

  set_weights(b, domain, T);
  return b;
}

void save_batch_csv(const CollocationBatch& batch, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "kind,x,y,t,nx,ny\n";
  char buf[256];
  auto row = [&](const char* kind, double x, double y, double t, double nx, double ny) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", kind, x, y, t, nx, ny);
    os << buf;
  };
  for (Eigen::Index j = 0; j < batch.m(); ++j) {
    row("interior", batch.interior(0, j), batch.interior(1, j), batch.interior(2, j), 0.0, 0.0);
  }
  for (Eigen::Index j = 0; j < batch.n(); ++j) {
    row("boundary", batch.boundary(0, j), batch.boundary(1, j), batch.boundary(2, j),
        batch.boundary_normal(0, j), batch.boundary_normal(1, j));
  }
  for (Eigen::Index j = 0; j < batch.k(); ++j) {
    row("initial", batch.initial(0, j), batch.initial(1, j), 0.0, 0.0, 0.0);
  }
}

CollocationBatch load_batch_csv(const std::string& path, const Rect& domain, double T) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open batch file " + path);
  std::string line;
  if (!std::getline(is, line) || line != "kind,x,y,t,nx,ny") {
    throw ConfigError(path + ":1: expected header kind,x,y,t,nx,ny");
  }
  std::vector<std::array<double, 5>> in, bd, ic;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind, field;
    std::getline(ls, kind, ',');
    std::array<double, 5> v{};
    for (double& x : v) {
      if (!std::getline(ls, field, ',')) {
        throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 6 columns");
      }
      try {
        x = std::stod(field);
      } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(lineno) + ": bad number '" + field + "'");
      }
    }
    if (kind == "interior") in.push_back(v);
    else if (kind == "boundary") bd.push_back(v);
    else if (kind == "initial") ic.push_back(v);
    else throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown kind '" + kind + "'");
  }
  CollocationBatch b;
  b.interior.resize(3, static_cast<Eigen::Index>(in.size()));
  for (std::size_t j = 0; j < in.size(); ++j) b.interior.col(j) << in[j][0], in[j][1], in[j][2];
  b.boundary.resize(3, static_cast<Eigen::Index>(bd.size()));
  b.boundary_normal.resize(2, static_cast<Eigen::Index>(bd.size()));
  for (std::size_t j = 0; j < bd.size(); ++j) {
    b.boundary.col(j) << bd[j][0], bd[j][1], bd[j][2];
    b.boundary_normal.col(j) << bd[j][3], bd[j][4];
  }
  b.initial.resize(3, static_cast<Eigen::Index>(ic.size()));
  for (std::size_t j = 0; j < ic.size(); ++j) b.initial.col(j) << ic[j][0], ic[j][1], 0.0;
  set_weights(b, domain, T);
  return b;
}

}  // namespace mhdpinn
