#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include "mhdpinn/checkpoint.hpp"
#include "mhdpinn/config.hpp"
#include "mhdpinn/errors.hpp"
#include "mhdpinn/optim.hpp"
#include "mhdpinn/training.hpp"
#include "support.hpp"

using namespace mhdpinn;
namespace fs = std::filesystem;

namespace {

// Small, fast MMS run.
RunConfig tiny_run() {
  RunConfig c;
  c.seed = 3;
  c.physics.T = 0.25;
  c.network.layer_sizes = {3, 8, 8, 5};
  c.sampling.interior = 64;
  c.sampling.boundary = 32;
  c.sampling.initial = 32;
  c.optimizer.adam.lr = 1e-2;
  c.optimizer.steps = 20;
  c.logging.eval_every = 5;
  c.logging.error_norms = false;
  return c;
}

// f(x) = sum_i d_i (x_i - c_i)^2
struct Quadratic {
  std::vector<double> d, c;

  double operator()(std::span<const double> x, std::span<double> g) const {
    double f = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      f += d[i] * (x[i] - c[i]) * (x[i] - c[i]);
      g[i] = 2 * d[i] * (x[i] - c[i]);
    }
    return f;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Adam

TEST_CASE("adam leaves parameters alone for a zero gradient") {
  std::vector<double> th{0.5, -1.0, 2.0};
  const auto keep = th;
  OptimState s = OptimState::adam(3);
  const std::vector<double> zero(3, 0.0);
  adam_step(s, std::span<double>(th), zero);
  CHECK(th == keep);
  CHECK(s.step == 1);
}

TEST_CASE("adam with learning rate zero leaves parameters alone") {
  std::vector<double> th{0.5, -1.0, 2.0};
  const auto keep = th;
  AdamHyper h;
  h.lr = 0.0;
  OptimState s = OptimState::adam(3, h);
  const std::vector<double> g{1.0, -3.0, 0.2};
  for (int i = 0; i < 5; ++i) adam_step(s, std::span<double>(th), g);
  CHECK(th == keep);
}

TEST_CASE("adam minimizes a one-parameter quadratic") {
  AdamHyper h;
  h.lr = 0.1;
  OptimState s = OptimState::adam(1, h);
  std::vector<double> th{0.0};
  for (int i = 0; i < 500; ++i) {
    const std::vector<double> g{2 * (th[0] - 3)};
    adam_step(s, std::span<double>(th), g);
  }
  CHECK(std::abs(th[0] - 3) <= 1e-3);
  CHECK(s.step == 500);
}

TEST_CASE("first adam step moves each parameter by the learning rate") {
  // bias correction makes mhat / sqrt(vhat) = sign(g) on step one
  AdamHyper h;
  h.lr = 0.01;
  OptimState s = OptimState::adam(2, h);
  std::vector<double> th{1.0, 1.0};
  const std::vector<double> g{4.0, -0.25};
  adam_step(s, std::span<double>(th), g);
  CHECK(th[0] == doctest::Approx(0.99).epsilon(1e-9));
  CHECK(th[1] == doctest::Approx(1.01).epsilon(1e-9));
}

TEST_CASE("adam rejects bad shapes, non-finite gradients and bad hyperparameters") {
  OptimState s = OptimState::adam(2);
  std::vector<double> th{1.0, 2.0};
  const std::vector<double> three(3, 0.0);
  CHECK_THROWS_AS(adam_step(s, std::span<double>(th), three), ShapeError);
  const std::vector<double> bad{0.1, std::numeric_limits<double>::quiet_NaN()};
  const OptimState before = s;
  CHECK_THROWS_AS(adam_step(s, std::span<double>(th), bad), NonFiniteError);
  CHECK(th == std::vector<double>{1.0, 2.0});
  CHECK(s.step == before.step);
  CHECK(s.m == before.m);

  AdamHyper h;
  h.lr = -1;
  CHECK_THROWS_AS(h.validate(), ConfigError);
  h = {};
  h.beta1 = 1.0;
  CHECK_THROWS_AS(h.validate(), ConfigError);
  h = {};
  h.eps = 0.0;
  CHECK_THROWS_AS(OptimState::adam(1, h), ConfigError);
}

TEST_CASE("adam on network parameters matches the flat update") {
  NetworkParams p = init_params({3, 4, 5}, Activation::tanh, 2);
  std::vector<double> flat = p.flatten();
  std::vector<double> g(flat.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::sin(static_cast<double>(i));
  OptimState a = OptimState::adam(flat.size()), b = a;
  adam_step(a, p, g);
  adam_step(b, std::span<double>(flat), g);
  CHECK(p.flatten() == flat);
}

// ---------------------------------------------------------------------------
// L-BFGS

TEST_CASE("lbfgs leaves a stationary point unchanged") {
  const Quadratic q{{1.0, 2.0, 3.0}, {0.5, -1.0, 2.0}};
  const LbfgsResult r = lbfgs_minimize(q, q.c);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(r.x[i] - q.c[i]) <= 1e-10);
  CHECK(r.converged);
  CHECK(r.iterations == 0);
}

TEST_CASE("lbfgs finds the minimum of a 10-parameter convex quadratic") {
  Quadratic q;
  for (int i = 0; i < 10; ++i) {
    q.d.push_back(1.0 + i);  // condition number 10
    q.c.push_back(0.3 * i - 1.0);
  }
  LbfgsOptions o;
  o.max_iterations = 20;
  o.grad_tol = 1e-12;
  const LbfgsResult r = lbfgs_minimize(q, std::vector<double>(10, 0.0), o);
  CHECK(r.iterations <= 20);
  for (int i = 0; i < 10; ++i) CHECK(std::abs(r.x[i] - q.c[i]) <= 1e-8);
}

TEST_CASE("lbfgs on an ill-conditioned quadratic") {
  // condition number about 70: the inexact line search needs more iterations
  Quadratic q;
  for (int i = 0; i < 10; ++i) {
    q.d.push_back(std::pow(1.6, i));
    q.c.push_back(0.3 * i - 1.0);
  }
  LbfgsOptions o;
  o.max_iterations = 60;
  o.grad_tol = 1e-12;
  const LbfgsResult r = lbfgs_minimize(q, std::vector<double>(10, 0.0), o);
  for (int i = 0; i < 10; ++i) CHECK(std::abs(r.x[i] - q.c[i]) <= 1e-8);
}

TEST_CASE("lbfgs on a coupled quadratic and on Rosenbrock") {
  // f = 1/2 x^T A x - b^T x with A = tridiag(-1, 4, -1)
  const int n = 10;
  const Objective f = [n](std::span<const double> x, std::span<double> g) {
    double v = 0.0;
    for (int i = 0; i < n; ++i) {
      double ax = 4 * x[i];
      if (i > 0) ax -= x[i - 1];
      if (i + 1 < n) ax -= x[i + 1];
      g[i] = ax - 1.0;
      v += 0.5 * x[i] * ax - x[i];
    }
    return v;
  };
  LbfgsOptions o;
  o.max_iterations = 20;
  o.grad_tol = 1e-11;
  const LbfgsResult r = lbfgs_minimize(f, std::vector<double>(n, 0.0), o);
  std::vector<double> g(n);
  f(r.x, g);
  for (double v : g) CHECK(std::abs(v) <= 1e-8);

  const Objective rosen = [](std::span<const double> x, std::span<double> gr) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    gr[0] = -2 * a - 400 * x[0] * b;
    gr[1] = 200 * b;
    return a * a + 100 * b * b;
  };
  LbfgsOptions ro;
  ro.max_iterations = 200;
  ro.grad_tol = 1e-9;
  // one iteration at a time: accepted iterates never increase f
  std::vector<double> x{-1.2, 1.0};
  double last = std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (int it = 0; it < 60; ++it) {
    LbfgsOptions one = ro;
    one.max_iterations = 1;
    const LbfgsResult step = lbfgs_minimize(rosen, x, one);
    monotone = monotone && step.f <= last;
    last = step.f;
    x = step.x;
  }
  CHECK(monotone);
  const LbfgsResult full = lbfgs_minimize(rosen, {-1.2, 1.0}, ro);
  CHECK(full.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(full.x[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("lbfgs errors") {
  const Objective nan = [](std::span<const double>, std::span<double> g) {
    g[0] = 0.0;
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_AS(lbfgs_minimize(nan, {1.0}), NonFiniteError);
  LbfgsOptions o;
  o.history = 0;
  const Quadratic q{{1.0}, {0.0}};
  CHECK_THROWS_AS(lbfgs_minimize(q, {1.0}, o), ConfigError);
}

TEST_CASE("lbfgs keeps the start point when no step decreases the objective") {
  // the reported gradient points the wrong way, so every trial step goes uphill
  const Objective liar = [](std::span<const double> x, std::span<double> g) {
    g[0] = -2 * x[0];
    return x[0] * x[0];
  };
  LbfgsOptions o;
  o.max_line_search = 5;
  const LbfgsResult r = lbfgs_minimize(liar, {1.0}, o);
  CHECK(r.line_search_failed);
  CHECK(r.x[0] == 1.0);
  CHECK(r.f == 1.0);
}

// ---------------------------------------------------------------------------
// Checkpoints

TEST_CASE("base64 encoding of doubles round-trips") {
  const std::vector<double> v{0.0, -0.0, 1.5, std::numeric_limits<double>::denorm_min(),
                              std::numeric_limits<double>::max(), -3.25e-300};
  const auto back = decode_doubles(encode_doubles(v));
  REQUIRE(back.size() == v.size());
  CHECK(std::memcmp(back.data(), v.data(), v.size() * sizeof(double)) == 0);
  CHECK(encode_doubles(std::vector<double>{}).empty());
  CHECK(decode_doubles("").empty());
  CHECK_THROWS_AS(decode_doubles("abc"), ConfigError);
  CHECK_THROWS_AS(decode_doubles("AAAA"), ConfigError);  // 3 bytes
  CHECK_THROWS_AS(decode_doubles("A*AAAAAAAAA="), ConfigError);
}

TEST_CASE("checkpoints round-trip parameters and optimizer state bit-exactly") {
  testing::TempDir dir("ckpt_roundtrip");
  Checkpoint c;
  c.params = init_params({3, 6, 4, 5}, Activation::sin, 11, NetworkLayout::split);
  c.step = 1234;
  OptimState s = OptimState::adam(c.params.num_params());
  std::vector<double> g(c.params.num_params(), 0.1);
  adam_step(s, c.params, g);
  c.optim = s;
  c.best = init_params({3, 6, 4, 5}, Activation::sin, 12, NetworkLayout::split);
  c.best_loss = 0.1 + 0.2;
  c.best_step = 77;
  save_checkpoint(c, dir.str("c.json"));
  CHECK_FALSE(fs::exists(dir.str("c.json.tmp")));
  const Checkpoint d = load_checkpoint(dir.str("c.json"));
  CHECK(d.params.flatten() == c.params.flatten());
  CHECK(d.params.same_shape(c.params));
  CHECK(d.params.activation == Activation::sin);
  CHECK(d.step == 1234);
  REQUIRE(d.optim);
  CHECK(d.optim->step == 1);
  CHECK(d.optim->m == s.m);
  CHECK(d.optim->v == s.v);
  REQUIRE(d.best);
  CHECK(d.best->flatten() == c.best->flatten());
  CHECK(d.best_loss == c.best_loss);
  CHECK(d.best_step == 77);
}

TEST_CASE("checkpoint load errors") {
  testing::TempDir dir("ckpt_errors");
  CHECK_THROWS_AS(load_checkpoint(dir.str("none.json")), ConfigError);
  testing::write_file(dir.str("a.json"), "{ not json");
  CHECK_THROWS_AS(load_checkpoint(dir.str("a.json")), ConfigError);
  testing::write_file(dir.str("b.json"), "{\"format\": \"other\"}");
  CHECK_THROWS_AS(load_checkpoint(dir.str("b.json")), ConfigError);

  Checkpoint c;
  c.params = init_params({3, 4, 5}, Activation::tanh, 1);
  save_checkpoint(c, dir.str("c.json"));
  std::string text = testing::read_file(dir.str("c.json"));
  const auto pos = text.find("\"version\": 1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 12, "\"version\": 9");
  testing::write_file(dir.str("d.json"), text);
  try {
    load_checkpoint(dir.str("d.json"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("version 9") != std::string::npos);
  }
}

// ---------------------------------------------------------------------------
// Training loop

TEST_CASE("zero steps return the initial parameters and one log row") {
  RunConfig c = tiny_run();
  c.optimizer.steps = 0;
  const TrainResult r = train(c);
  CHECK(r.final_params.flatten() == initial_params(c).flatten());
  CHECK(r.log.size() == 1);
  CHECK(r.log[0].step == 0);
  CHECK(r.steps_done == 0);
}

TEST_CASE("rows at step 0, every eval interval and the last step") {
  RunConfig c = tiny_run();
  c.optimizer.steps = 12;
  const TrainResult r = train(c);
  std::vector<std::uint64_t> steps;
  for (const auto& row : r.log) steps.push_back(row.step);
  CHECK(steps == std::vector<std::uint64_t>{0, 5, 10, 12});
}

TEST_CASE("training lowers the loss and tracks the best parameters") {
  RunConfig c = tiny_run();
  c.optimizer.steps = 100;
  c.sampling.resample = false;
  const TrainResult r = train(c);
  CHECK(r.log.back().loss.total < 0.5 * r.log.front().loss.total);
  for (const auto& row : r.log) CHECK(r.best_loss <= row.loss.total);
  const CollocationBatch b = batch_for_step(c, 0);
  const double best = loss_eval(r.best_params, c.physics, b, c.weights, make_problem_data(c)).total;
  CHECK(best == doctest::Approx(r.best_loss).epsilon(1e-12));
}

TEST_CASE("deterministic runs are bit-identical") {
  RunConfig c = tiny_run();
  c.logging.eval_every = 1;
  testing::TempDir a("train_det_a"), b("train_det_b");
  train(c, {a.str(), {}, {}});
  train(c, {b.str(), {}, {}});
  const std::string ma = testing::read_file(a.str("metrics.csv"));
  CHECK(ma == testing::read_file(b.str("metrics.csv")));
  CHECK(std::count(ma.begin(), ma.end(), '\n') == 1 + 21);
  CHECK(testing::read_file(a.str("final.json")) == testing::read_file(b.str("final.json")));
}

TEST_CASE("output files and metrics header") {
  RunConfig c = tiny_run();
  c.logging.error_norms = true;
  c.logging.norms.resolution = 32;
  c.logging.norms.time_slices = 17;
  c.logging.checkpoint_every = 10;
  c.logging.checkpoint_steps = {3};
  testing::TempDir d("train_files");
  train(c, {d.str(), {}, {}});
  for (const char* f : {"metrics.csv", "timing.csv", "final.json", "best.json",
                        "checkpoints/step_0.json", "checkpoints/step_3.json",
                        "checkpoints/step_10.json", "checkpoints/step_20.json"}) {
    INFO(f);
    CHECK(fs::exists(d.str(f)));
  }
  const std::string m = testing::read_file(d.str("metrics.csv"));
  CHECK(m.rfind(MetricRow::csv_header(true) + "\n", 0) == 0);
  CHECK(m.find("wall_time_s") == std::string::npos);
  CHECK(testing::read_file(d.str("timing.csv")).rfind("step,wall_time_s\n", 0) == 0);
  CHECK(load_checkpoint(d.str("checkpoints/step_10.json")).step == 10);
}

TEST_CASE("resuming from a checkpoint reproduces the uninterrupted run") {
  RunConfig c = tiny_run();
  c.sampling.resample = false;
  c.optimizer.steps = 20;
  testing::TempDir full("resume_full"), part("resume_part");
  const TrainResult whole = train(c, {full.str(), {}, {}});

  RunConfig first = c;
  first.optimizer.steps = 10;
  train(first, {part.str(), {}, {}});
  const TrainResult rest = train(c, {part.str(), part.str("final.json"), {}});
  CHECK(rest.final_params.flatten() == whole.final_params.flatten());
  CHECK(rest.best_loss == whole.best_loss);
  CHECK(testing::read_file(part.str("metrics.csv")) == testing::read_file(full.str("metrics.csv")));
}

TEST_CASE("resuming with a different network shape is rejected") {
  RunConfig c = tiny_run();
  c.optimizer.steps = 2;
  testing::TempDir d("resume_shape");
  train(c, {d.str(), {}, {}});
  RunConfig other = c;
  other.network.layer_sizes = {3, 6, 5};
  try {
    train(other, {d.str("other"), d.str("final.json"), {}});
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[3,8,8,5]") != std::string::npos);
    CHECK(msg.find("[3,6,5]") != std::string::npos);
  }
}

TEST_CASE("a diverging run stops and keeps its last checkpoint") {
  RunConfig c = tiny_run();
  c.optimizer.adam.lr = 1e300;
  c.optimizer.steps = 5;
  c.logging.checkpoint_every = 1;
  testing::TempDir d("diverge");
  try {
    train(c, {d.str(), {}, {}});
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("training aborted at step") != std::string::npos);
    CHECK(msg.find("last good checkpoint") != std::string::npos);
  }
  CHECK(fs::exists(d.str("checkpoints/step_1.json")));
  CHECK_FALSE(fs::exists(d.str("final.json")));
}

TEST_CASE("gradient clipping is counted") {
  RunConfig c = tiny_run();
  c.optimizer.clip_norm = 1e-6;
  c.optimizer.steps = 3;
  CHECK(train(c).clipped_steps == 3);
  c.optimizer.clip_norm = 0.0;
  CHECK(train(c).clipped_steps == 0);
}

TEST_CASE("lbfgs refinement never raises the frozen-batch loss") {
  RunConfig c = tiny_run();
  c.optimizer.steps = 50;
  const TrainResult adam = train(c);
  const double before = frozen_batch_loss(adam.final_params, c);
  c.optimizer.lbfgs_iterations = 15;
  const NetworkParams refined = lbfgs_refine(adam.final_params, c);
  CHECK(frozen_batch_loss(refined, c) <= before);

  const TrainResult both = train(c);
  CHECK(both.log.back().step == 50 + 15);
  CHECK(frozen_batch_loss(both.final_params, c) <= before);
}

TEST_CASE("zero problem has the zero field as its exact solution") {
  RunConfig c = tiny_run();
  c.problem.kind = ProblemKind::zero;
  const ProblemData d = make_problem_data(c);
  CHECK_FALSE(d.forcing);
  const auto ref = make_reference(c);
  REQUIRE(ref);
  CHECK((*ref)(0.3, 0.4, 0.1).ux.val == 0.0);

  const NetworkParams z = zero_params(c.network.layer_sizes);
  const LossBreakdown b = loss_eval(z, c.physics, batch_for_step(c, 0), c.weights, d);
  CHECK(b.total == 0.0);
}

TEST_CASE("problem perturbations scale the data") {
  RunConfig c = tiny_run();
  const ProblemData base = make_problem_data(c);
  c.problem.forcing = 0.5;
  c.problem.u0 = 0.1;
  c.problem.B0 = -0.2;
  const ProblemData p = make_problem_data(c);
  CHECK(p.forcing(0.3, 0.6, 0.1)[0] == doctest::Approx(1.5 * base.forcing(0.3, 0.6, 0.1)[0]));
  CHECK(p.u0(0.3, 0.6)[1] == doctest::Approx(1.1 * base.u0(0.3, 0.6)[1]));
  CHECK(p.B0(0.3, 0.6)[0] == doctest::Approx(0.8 * base.B0(0.3, 0.6)[0]));
  CHECK(p.magnetic_source(0.3, 0.6, 0.1) == base.magnetic_source(0.3, 0.6, 0.1));
}

TEST_CASE("fixed and resampled batches") {
  RunConfig c = tiny_run();
  CHECK(batch_for_step(c, 1).interior != batch_for_step(c, 2).interior);
  c.sampling.resample = false;
  CHECK(batch_for_step(c, 1).interior == batch_for_step(c, 2).interior);
}

TEST_CASE("run config validation") {
  CHECK_NOTHROW(tiny_run().validate());
  RunConfig c = tiny_run();
  c.network.layer_sizes = {2, 5};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_run();
  c.logging.eval_every = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_run();
  c.weights.a[2] = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_run();
  c.runtime.threads = 8;
  CHECK(c.eval_options().threads == 1);  // deterministic by default
  c.runtime.deterministic = false;
  CHECK(c.eval_options().threads == 8);
  CHECK(parse_problem("zero") == ProblemKind::zero);
  CHECK_THROWS_AS(parse_problem("vortex"), ConfigError);
}

// ---------------------------------------------------------------------------
// Configuration files

TEST_CASE("default configuration round-trips") {
  ConfigFile c;
  const std::string text = write_config(c);
  const ConfigFile back = parse_config(text);
  CHECK(write_config(back) == text);
  CHECK(back.run.network.layer_sizes == std::vector<int>{3, 64, 64, 64, 5});
}

TEST_CASE("non-default configuration round-trips losslessly") {
  ConfigFile c;
  c.run.seed = 99;
  c.run.physics.nu = 0.1 + 0.2;  // not a short decimal
  c.run.physics.T = 0.25;
  c.run.physics.domain = {-1.0, 2.0, 0.0, 0.5};
  c.run.problem.kind = ProblemKind::zero;
  c.run.problem.forcing = 0.2;
  c.run.network.layer_sizes = {3, 7, 5};
  c.run.network.activation = Activation::sin;
  c.run.network.layout = NetworkLayout::split;
  c.run.weights = LossWeights::paper_faithful();
  c.run.weights.a[kBcCurlB] = 1.0 / 3.0;
  c.run.sampling.strategy = SamplingStrategy::low_discrepancy;
  c.run.sampling.resample = false;
  c.run.optimizer.steps = 7;
  c.run.optimizer.lbfgs_iterations = 4;
  c.run.logging.checkpoint_steps = {1, 5};
  c.run.runtime.deterministic = false;
  c.run.runtime.threads = 3;
  c.study.checkpoints = {"a.json", "b.json"};
  c.study.deltas = {0.0, 0.05};
  c.study.target = StabilityTarget::B0;
  const std::string text = write_config(c);
  const ConfigFile back = parse_config(text);
  CHECK(write_config(back) == text);
  CHECK(back.run.physics.nu == c.run.physics.nu);
  CHECK(back.run.weights.a[kBcCurlB] == c.run.weights.a[kBcCurlB]);
  CHECK(back.study.target == StabilityTarget::B0);
  CHECK(back.run.network.layout == NetworkLayout::split);
}

TEST_CASE("partial configuration keeps defaults") {
  const ConfigFile c = parse_config(R"({"schema_version": 1, "optimizer": {"steps": 10}})");
  CHECK(c.run.optimizer.steps == 10);
  CHECK(c.run.optimizer.adam.lr == 1e-3);
  CHECK(c.run.sampling.interior == 5000);
}

TEST_CASE("unknown keys are rejected with their line") {
  const std::string text =
      "{\n"
      "  \"schema_version\": 1,\n"
      "  \"optimizer\": {\n"
      "    \"steps\": 10,\n"
      "    \"momentum\": 0.9\n"
      "  }\n"
      "}\n";
  try {
    parse_config(text, "run.json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("run.json:5:") != std::string::npos);
    CHECK(msg.find("momentum") != std::string::npos);
    CHECK(msg.find("unknown key") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "colour": 1})"), ConfigError);
}

TEST_CASE("type and range errors name their line") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text, "c.json");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("{\"schema_version\": 1,\n\"physics\": {\"nu\": \"one\"}}").find("c.json:2:") !=
        std::string::npos);
  CHECK(message("{\"schema_version\": 1,\n\n\"physics\": {\"mu\": -1}}").find("c.json:3:") !=
        std::string::npos);
  CHECK(message("{\"schema_version\": 1,\n\"network\": {\"layer_sizes\": [2, 5]}}").find("c.json:2:") !=
        std::string::npos);
  CHECK(message("{\"schema_version\": 1,\n\"sampling\": {\"interior\": 0}}").find(">= 1") !=
        std::string::npos);
  CHECK(message("{\"schema_version\": 1,\n\"network\": {\"activation\": \"relu\"}}").find("relu") !=
        std::string::npos);
  CHECK(message("{\"schema_version\": 1,\n\"optimizer\": {\"steps\": 1.5}}").find("integer") !=
        std::string::npos);
  CHECK(message("{\"schema_version\": 2}").find("unsupported version 2") != std::string::npos);
  CHECK(message("{\"optimizer\": {}}").find("schema_version") != std::string::npos);
  CHECK(message("{\n\"schema_version\": 1,\n}").find("c.json:3:") != std::string::npos);
  CHECK(message("{\"schema_version\": 1, \"study\": {\"deltas\": [0, -0.1]}}").find("deltas") !=
        std::string::npos);
}

TEST_CASE("missing config file names the path") {
  try {
    load_config("/nonexistent/dir/run.json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/dir/run.json") != std::string::npos);
  }
}

TEST_CASE("stability target names") {
  CHECK(to_string(StabilityTarget::u0) == "u0");
  CHECK(parse_stability_target("forcing") == StabilityTarget::forcing);
  CHECK_THROWS_AS(parse_stability_target("S"), ConfigError);
}
