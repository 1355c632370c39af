#include <doctest.h>

#include <cmath>
#include <limits>
#include <algorithm>

#include "mhdpinn/errors.hpp"
#include "mhdpinn/loss.hpp"
#include "mhdpinn/mms.hpp"
#include "support.hpp"

using namespace mhdpinn;

namespace {

LossWeights all_on() {
  LossWeights w;
  w.a.fill(1.0);
  return w;
}

LossWeights only(int term) {
  LossWeights w;
  w.a.fill(0.0);
  w.a[term] = 1.0;
  return w;
}

PhysicsParams mms_physics(double T = 0.25) {
  PhysicsParams p;
  p.T = T;
  return p;
}

double weighted_sum(const LossBreakdown& b, const LossWeights& w) {
  double s = 0.0;
  for (int i = 0; i < kNumLossTerms; ++i) s += w.a[i] * b.components[i];
  return s;
}

// Reverses the point order inside each set.
CollocationBatch reversed(const CollocationBatch& b) {
  CollocationBatch r = b;
  r.interior = b.interior.rowwise().reverse();
  r.boundary = b.boundary.rowwise().reverse();
  r.boundary_normal = b.boundary_normal.rowwise().reverse();
  r.initial = b.initial.rowwise().reverse();
  return r;
}

}  // namespace

TEST_CASE("term names and CSV layout") {
  CHECK(std::string(loss_term_name(kResidualF)) == "residual_f");
  CHECK(std::string(loss_term_name(kBcCurlB)) == "bc_curlB");
  CHECK(std::string(loss_term_name(99)) == "?");
  CHECK(LossBreakdown::csv_header() ==
        "step,residual_f,residual_B,div_u,div_B,bc_u,bc_Bn,ic_u,ic_B,bc_curlB,total");
  LossBreakdown b;
  b.components[0] = 0.1;
  b.total = 0.1;
  const std::string row = b.csv_row(12);
  CHECK(row.rfind("12,0.10000000000000001,0,", 0) == 0);
  CHECK(std::count(row.begin(), row.end(), ',') == kNumLossTerms + 1);
}

TEST_CASE("default and paper-faithful weights") {
  const LossWeights d;
  for (int i = 0; i < 8; ++i) CHECK(d.a[i] == 1.0);
  CHECK(d.a[kBcCurlB] == 0.0);
  const LossWeights p = LossWeights::paper_faithful();
  CHECK(p.a[kIcU] == 0.0);
  CHECK(p.a[kIcB] == 0.0);
  CHECK(p.a[kBcBn] == 1.0);
}

TEST_CASE("weight validation") {
  CHECK_NOTHROW(LossWeights{}.validate());
  LossWeights w;
  w.a[3] = -0.1;
  CHECK_THROWS_AS(w.validate(), ConfigError);
  w.a[3] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(w.validate(), ConfigError);
  w.a.fill(0.0);
  CHECK_THROWS_AS(w.validate(), ConfigError);
}

TEST_CASE("zero weights give zero total and zero gradient") {
  const PhysicsParams phys = mms_physics();
  const NetworkParams p = init_params({3, 8, 5}, Activation::tanh, 1);
  const auto batch = sample_batch(phys.domain, phys.T, 20, 10, 10, 3);
  LossWeights w;
  w.a.fill(0.0);
  const auto r = loss_grad(p, phys, batch, w, ManufacturedSolution(phys).problem_data());
  CHECK(r.breakdown.total == 0.0);
  CHECK(r.breakdown.components[kResidualF] > 0.0);  // components are still reported
  for (double g : r.gradient) CHECK(g == 0.0);
}

TEST_CASE("manufactured oracle drives every component to zero") {
  for (double T : {0.25, 1.0}) {
    const PhysicsParams phys = mms_physics(T);
    const ManufacturedSolution ms(phys);
    const PointwiseModel model(ms.field());
    const auto batch = sample_batch(phys.domain, T, 500, 200, 200, 4);
    LossWeights w = all_on();
    const LossBreakdown b = loss_eval(model, phys, batch, w, ms.problem_data());
    for (int i = 0; i < kNumLossTerms; ++i) {
      INFO(loss_term_name(i));
      CHECK(b.components[i] <= 1e-10);
    }
  }
}

TEST_CASE("zero network with unit forcing has unit residual loss") {
  const PhysicsParams phys = mms_physics(1.0);
  const NetworkParams p = zero_params({3, 4, 5});
  ProblemData data;
  data.forcing = [](double, double, double) { return std::array<double, 2>{1.0, 0.0}; };
  const auto batch = sample_batch(phys.domain, phys.T, 1000, 10, 10, 5);
  const LossBreakdown b = loss_eval(p, phys, batch, only(kResidualF), data);
  // |L_f|^2 = 1 at every point, so the estimate has zero variance
  CHECK(b.total == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 1; i < kNumLossTerms; ++i) CHECK(b.components[i] == 0.0);
}

TEST_CASE("components are the quadratures of their squared norms") {
  const PhysicsParams phys = mms_physics(0.5);
  const ManufacturedSolution ms(phys);
  const NetworkParams p = init_params({3, 6, 5}, Activation::sin, 8);
  const ProblemData data = ms.problem_data();
  const auto batch = sample_batch(phys.domain, phys.T, 7, 5, 4, 6);
  const LossBreakdown b = loss_eval(p, phys, batch, all_on(), data);

  double rf = 0, rb = 0, du = 0, dB = 0, bu = 0, bn = 0, bc = 0, iu = 0, iB = 0;
  for (Eigen::Index j = 0; j < batch.m(); ++j) {
    const double x = batch.interior(0, j), y = batch.interior(1, j), t = batch.interior(2, j);
    FieldSample s = forward_jet(p, x, y, t);
    const auto f = data.forcing(x, y, t), q = data.magnetic_source(x, y, t);
    s.fx = f[0];
    s.fy = f[1];
    s.sBx = q[0];
    s.sBy = q[1];
    const auto a = residual_f(s, phys), c = residual_B(s, phys);
    rf += a[0] * a[0] + a[1] * a[1];
    rb += c[0] * c[0] + c[1] * c[1];
    du += std::pow(div2(s.ux, s.uy), 2);
    dB += std::pow(div2(s.Bx, s.By), 2);
  }
  for (Eigen::Index j = 0; j < batch.n(); ++j) {
    const FieldSample s = forward_jet(p, batch.boundary(0, j), batch.boundary(1, j), batch.boundary(2, j));
    const auto t = boundary_terms(s, {batch.boundary_normal(0, j), batch.boundary_normal(1, j)});
    bu += t.u_penalty[0] * t.u_penalty[0] + t.u_penalty[1] * t.u_penalty[1];
    bn += t.Bn_penalty * t.Bn_penalty;
    bc += t.curlB_penalty * t.curlB_penalty;
  }
  for (Eigen::Index j = 0; j < batch.k(); ++j) {
    const double x = batch.initial(0, j), y = batch.initial(1, j);
    const FieldSample s = forward_jet(p, x, y, 0.0);
    const auto u0 = data.u0(x, y), B0 = data.B0(x, y);
    iu += std::pow(s.ux.val - u0[0], 2) + std::pow(s.uy.val - u0[1], 2);
    iB += std::pow(s.Bx.val - B0[0], 2) + std::pow(s.By.val - B0[1], 2);
  }
  const double wi = 0.5 / 7, wb = 4 * 0.5 / 5, w0 = 1.0 / 4;
  const double expect[kNumLossTerms] = {wi * rf, wi * rb, wi * du, wi * dB, wb * bu,
                                        wb * bn, w0 * iu, w0 * iB, wb * bc};
  for (int i = 0; i < kNumLossTerms; ++i) {
    INFO(loss_term_name(i));
    CHECK(b.components[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  }
}

TEST_CASE("total is the weighted sum of components") {
  const PhysicsParams phys = mms_physics();
  const NetworkParams p = init_params({3, 10, 10, 5}, Activation::tanh, 2);
  const auto batch = sample_batch(phys.domain, phys.T, 64, 32, 32, 7);
  const ProblemData data = ManufacturedSolution(phys).problem_data();
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    LossWeights w;
    for (double& a : w.a) a = rng.uniform(0, 3);
    const LossBreakdown b = loss_eval(p, phys, batch, w, data);
    CHECK(std::abs(b.total - weighted_sum(b, w)) <= 1e-12 * b.total);
  }
}

TEST_CASE("raising one weight never lowers its weighted contribution") {
  const PhysicsParams phys = mms_physics();
  const NetworkParams p = init_params({3, 8, 5}, Activation::tanh, 2);
  const auto batch = sample_batch(phys.domain, phys.T, 32, 16, 16, 8);
  const ProblemData data = ManufacturedSolution(phys).problem_data();
  for (int i = 0; i < kNumLossTerms; ++i) {
    LossWeights lo = all_on(), hi = all_on();
    hi.a[i] = 2.5;
    const auto a = loss_eval(p, phys, batch, lo, data), b = loss_eval(p, phys, batch, hi, data);
    CHECK(hi.a[i] * b.components[i] >= lo.a[i] * a.components[i]);
    CHECK(b.total >= a.total);
  }
}

TEST_CASE("loss is invariant under permutation of points") {
  const PhysicsParams phys = mms_physics();
  const NetworkParams p = init_params({3, 12, 12, 5}, Activation::tanh, 9);
  const auto batch = sample_batch(phys.domain, phys.T, 100, 60, 40, 10);
  const ProblemData data = ManufacturedSolution(phys).problem_data();
  const auto a = loss_grad(p, phys, batch, all_on(), data);
  const auto b = loss_grad(p, phys, reversed(batch), all_on(), data);
  CHECK(b.breakdown.total == doctest::Approx(a.breakdown.total).epsilon(1e-13));
  for (int i = 0; i < kNumLossTerms; ++i)
    CHECK(b.breakdown.components[i] == doctest::Approx(a.breakdown.components[i]).epsilon(1e-13));
  double worst = 0.0, gmax = 0.0;
  for (std::size_t i = 0; i < a.gradient.size(); ++i) {
    worst = std::max(worst, std::abs(a.gradient[i] - b.gradient[i]));
    gmax = std::max(gmax, std::abs(a.gradient[i]));
  }
  CHECK(worst <= 1e-12 * gmax);
}

TEST_CASE("oracle scores lower than a random network") {
  const PhysicsParams phys = mms_physics();
  const ManufacturedSolution ms(phys);
  const auto batch = sample_batch(phys.domain, phys.T, 200, 100, 100, 11);
  const auto oracle = loss_eval(PointwiseModel(ms.field()), phys, batch, all_on(), ms.problem_data());
  const auto random = loss_eval(init_params({3, 16, 5}, Activation::tanh, 3), phys, batch, all_on(),
                                ms.problem_data());
  CHECK(oracle.total < random.total);
}

TEST_CASE("network loss equals the same network wrapped as a model") {
  const PhysicsParams phys = mms_physics();
  const NetworkParams p = init_params({3, 8, 8, 5}, Activation::sin, 12);
  const auto batch = sample_batch(phys.domain, phys.T, 50, 20, 20, 12);
  const ProblemData data = ManufacturedSolution(phys).problem_data();
  const auto a = loss_eval(p, phys, batch, all_on(), data);
  const auto b = loss_eval(NetworkModel(p), phys, batch, all_on(), data);
  CHECK(b.total == doctest::Approx(a.total).epsilon(1e-12));
}

TEST_CASE("loss_grad reports the same breakdown as loss_eval") {
  const PhysicsParams phys = mms_physics();
  const NetworkParams p = init_params({3, 8, 8, 5}, Activation::tanh, 13);
  const auto batch = sample_batch(phys.domain, phys.T, 70, 30, 30, 13);
  const ProblemData data = ManufacturedSolution(phys).problem_data();
  const auto e = loss_eval(p, phys, batch, all_on(), data);
  const auto g = loss_grad(p, phys, batch, all_on(), data);
  CHECK(e.total == g.breakdown.total);
  CHECK(e.components == g.breakdown.components);
  CHECK(g.gradient.size() == p.num_params());
}

TEST_CASE("gradient matches finite differences with 16 points") {
  const PhysicsParams phys = mms_physics();
  const ProblemData data = ManufacturedSolution(phys).problem_data();
  const auto batch = sample_batch(phys.domain, phys.T, 16, 16, 16, 14);
  const LossWeights w = all_on();
  for (const std::vector<int>& sizes : {std::vector<int>{3, 8, 5}, std::vector<int>{3, 8, 8, 5}}) {
    NetworkParams p = init_params(sizes, Activation::tanh, 5);
    INFO(p.shape_string());
    const auto g = loss_grad(p, phys, batch, w, data).gradient;
    std::vector<double> th = p.flatten();
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < th.size(); ++i) {
      const double keep = th[i];
      th[i] = keep + h;
      p.assign(th);
      const double fp = loss_eval(p, phys, batch, w, data).total;
      th[i] = keep - h;
      p.assign(th);
      const double fm = loss_eval(p, phys, batch, w, data).total;
      th[i] = keep;
      p.assign(th);
      worst = std::max(worst, testing::rel_diff(g[i], (fp - fm) / (2 * h)));
    }
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("batched gradient agrees with the taped gradient") {
  const PhysicsParams phys = mms_physics();
  const ProblemData data = ManufacturedSolution(phys).problem_data();
  for (auto layout : {NetworkLayout::shared, NetworkLayout::split}) {
    const NetworkParams p = init_params({3, 7, 6, 5}, Activation::tanh, 15, layout);
    const auto batch = sample_batch(phys.domain, phys.T, 12, 9, 7, 15);
    const auto a = loss_grad(p, phys, batch, all_on(), data);
    const auto b = loss_grad_taped(p, phys, batch, all_on(), data);
    CHECK(a.breakdown.total == doctest::Approx(b.breakdown.total).epsilon(1e-12));
    double worst = 0.0, gmax = 0.0;
    for (std::size_t i = 0; i < a.gradient.size(); ++i) {
      worst = std::max(worst, std::abs(a.gradient[i] - b.gradient[i]));
      gmax = std::max(gmax, std::abs(b.gradient[i]));
    }
    CHECK(worst <= 1e-11 * gmax);
  }
}

TEST_CASE("doubling every weight doubles the gradient exactly") {
  const PhysicsParams phys = mms_physics();
  const ProblemData data = ManufacturedSolution(phys).problem_data();
  const NetworkParams p = init_params({3, 8, 5}, Activation::tanh, 16);
  const auto batch = sample_batch(phys.domain, phys.T, 30, 20, 10, 16);
  LossWeights w = all_on(), w2;
  for (int i = 0; i < kNumLossTerms; ++i) w2.a[i] = 2 * w.a[i];
  const auto a = loss_grad(p, phys, batch, w, data), b = loss_grad(p, phys, batch, w2, data);
  CHECK(b.breakdown.total == 2 * a.breakdown.total);
  for (std::size_t i = 0; i < a.gradient.size(); ++i) CHECK(b.gradient[i] == 2 * a.gradient[i]);
}

TEST_CASE("threaded evaluation agrees with the deterministic mode") {
  const PhysicsParams phys = mms_physics();
  const ProblemData data = ManufacturedSolution(phys).problem_data();
  const NetworkParams p = init_params({3, 16, 16, 5}, Activation::tanh, 17);
  const auto batch = sample_batch(phys.domain, phys.T, 500, 200, 200, 17);
  EvalOptions one;
  EvalOptions many;
  many.threads = 4;
  many.chunk = 32;
  const auto a = loss_grad(p, phys, batch, all_on(), data, one);
  const auto a2 = loss_grad(p, phys, batch, all_on(), data, one);
  const auto b = loss_grad(p, phys, batch, all_on(), data, many);
  CHECK(a.breakdown.total == a2.breakdown.total);
  CHECK(a.gradient == a2.gradient);
  CHECK(std::abs(a.breakdown.total - b.breakdown.total) <= 1e-12 * a.breakdown.total);
  double worst = 0.0, gmax = 0.0;
  for (std::size_t i = 0; i < a.gradient.size(); ++i) {
    worst = std::max(worst, std::abs(a.gradient[i] - b.gradient[i]));
    gmax = std::max(gmax, std::abs(a.gradient[i]));
  }
  CHECK(worst <= 1e-12 * gmax);
}

TEST_CASE("errors: empty batch, bad chunk and non-finite values") {
  const PhysicsParams phys = mms_physics();
  const NetworkParams p = init_params({3, 4, 5}, Activation::tanh, 18);
  CollocationBatch empty;
  CHECK_THROWS_AS(loss_eval(p, phys, empty, all_on(), ProblemData{}), std::invalid_argument);
  const auto batch = sample_batch(phys.domain, phys.T, 10, 5, 5, 18);
  EvalOptions bad;
  bad.chunk = 0;
  CHECK_THROWS_AS(loss_eval(p, phys, batch, all_on(), ProblemData{}, bad), std::invalid_argument);

  ProblemData nan_force;
  nan_force.forcing = [](double x, double, double) {
    return std::array<double, 2>{x > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 0.0, 0.0};
  };
  const auto many = sample_batch(phys.domain, phys.T, 50, 5, 5, 19);
  try {
    loss_grad(p, phys, many, all_on(), nan_force);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("interior") != std::string::npos);
    CHECK(msg.find("x=") != std::string::npos);
  }
}
