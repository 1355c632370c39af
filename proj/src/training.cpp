#include "mhdpinn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "mhdpinn/checkpoint.hpp"
#include "mhdpinn/errors.hpp"
#include "mhdpinn/log.hpp"
#include "mhdpinn/mms.hpp"

namespace mhdpinn {

namespace fs = std::filesystem;

std::string to_string(ProblemKind k) { return k == ProblemKind::mms ? "mms" : "zero"; }

ProblemKind parse_problem(const std::string& name) {
  if (name == "mms") return ProblemKind::mms;
  if (name == "zero") return ProblemKind::zero;
  throw ConfigError("unknown problem '" + name + "' (expected mms or zero)");
}

void RunConfig::validate() const {
  physics.validate();
  if (problem.kind == ProblemKind::mms) mms_default(physics);
  for (double d : {problem.forcing, problem.u0, problem.B0}) {
    if (!std::isfinite(d)) throw ConfigError("problem perturbations must be finite");
  }
  try {
    zero_params(network.layer_sizes, network.activation, network.layout);
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("network.layer_sizes: ") + e.what());
  }
  weights.validate();
  if (sampling.interior < 1 || sampling.boundary < 1 || sampling.initial < 1) {
    throw ConfigError("sampling counts must all be >= 1");
  }
  optimizer.adam.validate();
  if (!(optimizer.clip_norm >= 0.0)) throw ConfigError("optimizer.clip_norm must be >= 0");
  if (optimizer.lbfgs_iterations < 0) throw ConfigError("optimizer.lbfgs_iterations must be >= 0");
  if (optimizer.lbfgs_history < 1) throw ConfigError("optimizer.lbfgs_history must be >= 1");
  if (logging.eval_every < 1) throw ConfigError("logging.eval_every must be >= 1");
  logging.norms.validate();
  if (runtime.threads < 1) throw ConfigError("runtime.threads must be >= 1");
  if (runtime.chunk < 1) throw ConfigError("runtime.chunk must be >= 1");
}

EvalOptions RunConfig::eval_options() const {
  EvalOptions o;
  o.threads = runtime.deterministic ? 1 : runtime.threads;
  o.chunk = runtime.chunk;
  return o;
}

namespace {

Vec2Fn2D scale2d(const Vec2Fn2D& f, double k) {
  if (!f) return f;
  return [f, k](double x, double y) {
    auto v = f(x, y);
    return std::array<double, 2>{k * v[0], k * v[1]};
  };
}

}  // namespace

ProblemData make_problem_data(const RunConfig& cfg) {
  ProblemData d;
  if (cfg.problem.kind == ProblemKind::mms) d = mms_default(cfg.physics).problem_data();
  if (cfg.problem.forcing != 0.0) d = scale_forcing(d, cfg.problem.forcing);
  if (cfg.problem.u0 != 0.0) d.u0 = scale2d(d.u0, 1.0 + cfg.problem.u0);
  if (cfg.problem.B0 != 0.0) d.B0 = scale2d(d.B0, 1.0 + cfg.problem.B0);
  return d;
}

std::optional<JetFieldFn> make_reference(const RunConfig& cfg) {
  if (cfg.problem.kind == ProblemKind::mms) return mms_default(cfg.physics).field();
  // zero data: the zero field is the exact solution
  return JetFieldFn([](double, double, double) { return FieldSample{}; });
}

CollocationBatch batch_for_step(const RunConfig& cfg, std::uint64_t step) {
  const SamplingConfig& s = cfg.sampling;
  return sample_batch(cfg.physics.domain, cfg.physics.T, s.interior, s.boundary, s.initial,
                      step_seed(cfg.seed, s.resample ? step : 0), s.strategy);
}

NetworkParams initial_params(const RunConfig& cfg) {
  return init_params(cfg.network.layer_sizes, cfg.network.activation, cfg.seed,
                     cfg.network.layout);
}

std::string MetricRow::csv_header(bool with_errors) {
  std::string h = "step";
  for (int i = 0; i < kNumLossTerms; ++i) h += std::string(",") + loss_term_name(i);
  h += ",total,grad_norm";
  if (with_errors) h += ",u_sup_l2,B_sup_l2,u_rel_sup_l2,B_rel_sup_l2,u_l4l2,B_l4l2";
  return h;
}

std::string MetricRow::csv_row(bool with_errors) const {
  std::ostringstream os;
  char buf[40];
  os << step;
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    os << buf;
  };
  for (double c : loss.components) put(c);
  put(loss.total);
  put(grad_norm);
  if (with_errors) {
    const ErrorReport e = errors.value_or(ErrorReport{});
    for (double v : {e.u_sup_l2, e.B_sup_l2, e.u_rel_sup_l2, e.B_rel_sup_l2, e.u_l4l2, e.B_l4l2})
      put(v);
  }
  return os.str();
}

namespace {

double norm2(const std::vector<double>& g) {
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

class Run {
 public:
  Run(const RunConfig& cfg, const TrainIO& io)
      : cfg_(cfg), io_(io), data_(make_problem_data(cfg)), opts_(cfg.eval_options()),
        with_errors_(cfg.logging.error_norms) {
    if (with_errors_) {
      if (auto ref = make_reference(cfg)) reference_.emplace(std::move(*ref));
      with_errors_ = reference_.has_value();
    }
  }

  TrainResult run() {
    NetworkParams params = initial_params(cfg_);
    OptimState state = OptimState::adam(params.num_params(), cfg_.optimizer.adam);
    std::uint64_t start = 0;
    TrainResult res;
    res.best_loss = std::numeric_limits<double>::infinity();
    if (io_.resume) {
      Checkpoint c = load_checkpoint(*io_.resume);
      if (!c.params.same_shape(params)) {
        throw ShapeError("checkpoint shape " + c.params.shape_string() +
                         " does not match configured shape " + params.shape_string());
      }
      params = std::move(c.params);
      if (c.optim) {
        state.step = c.optim->step;
        state.m = std::move(c.optim->m);
        state.v = std::move(c.optim->v);
      }
      start = c.step;
      if (c.best) {
        res.best_params = std::move(*c.best);
        res.best_loss = c.best_loss;
        res.best_step = c.best_step;
      }
    }
    if (res.best_params.heads.empty()) res.best_params = params;
    open_files(start > 0);
    t0_ = std::chrono::steady_clock::now();

    auto save = [&](std::uint64_t step, const std::string& name) {
      if (io_.out_dir.empty()) return;
      Checkpoint c;
      c.params = params;
      c.step = step;
      c.optim = state;
      c.best = res.best_params;
      c.best_loss = res.best_loss;
      c.best_step = res.best_step;
      const std::string path = (fs::path(io_.out_dir) / name).string();
      save_checkpoint(c, path);
      last_checkpoint_ = path;
    };
    auto wants_checkpoint = [&](std::uint64_t step) {
      const auto& lc = cfg_.logging;
      return (lc.checkpoint_every > 0 && step % lc.checkpoint_every == 0) ||
             std::find(lc.checkpoint_steps.begin(), lc.checkpoint_steps.end(), step) !=
                 lc.checkpoint_steps.end();
    };
    auto checkpoint_name = [](std::uint64_t step) {
      return "checkpoints/step_" + std::to_string(step) + ".json";
    };
    if (start == 0 && wants_checkpoint(0)) save(0, checkpoint_name(0));

    const std::uint64_t steps = cfg_.optimizer.steps;
    std::optional<CollocationBatch> fixed;
    if (!cfg_.sampling.resample) fixed = batch_for_step(cfg_, 0);

    for (std::uint64_t s = start; s < steps; ++s) {
      const CollocationBatch batch = fixed ? *fixed : batch_for_step(cfg_, s);
      LossAndGradient lg = evaluate(params, batch, s);
      const double gnorm = norm2(lg.gradient);
      if (!std::isfinite(gnorm)) abort(s, "gradient norm is not finite");
      track_best(res, params, lg.breakdown.total, s);
      // a resumed run's first step was already logged as the last row before
      const bool logged = io_.resume && s == start;
      if (s % cfg_.logging.eval_every == 0 && !logged) log_row(res, s, lg.breakdown, gnorm, params);

      if (cfg_.optimizer.clip_norm > 0.0 && gnorm > cfg_.optimizer.clip_norm) {
        const double k = cfg_.optimizer.clip_norm / gnorm;
        for (double& g : lg.gradient) g *= k;
        ++res.clipped_steps;
        log_info("step " + std::to_string(s) + ": gradient norm " + std::to_string(gnorm) +
                 " clipped to " + std::to_string(cfg_.optimizer.clip_norm));
      }
      adam_step(state, params, lg.gradient);
      if (wants_checkpoint(s + 1)) save(s + 1, checkpoint_name(s + 1));
    }

    const std::uint64_t last = std::max(start, steps);
    {
      const CollocationBatch batch = fixed ? *fixed : batch_for_step(cfg_, last);
      const LossAndGradient lg = evaluate(params, batch, last);
      const double gnorm = norm2(lg.gradient);
      track_best(res, params, lg.breakdown.total, last);
      log_row(res, last, lg.breakdown, gnorm, params);
    }

    if (cfg_.optimizer.lbfgs_iterations > 0) {
      params = lbfgs_refine(params, cfg_);
      const CollocationBatch batch = batch_for_step(cfg_, last);
      const LossAndGradient lg = evaluate(params, batch, last);
      track_best(res, params, lg.breakdown.total, last + cfg_.optimizer.lbfgs_iterations);
      log_row(res, last + cfg_.optimizer.lbfgs_iterations, lg.breakdown, norm2(lg.gradient),
              params);
    }

    res.steps_done = last;
    res.final_params = params;
    save(last, "final.json");
    if (!io_.out_dir.empty()) {
      Checkpoint b;
      b.params = res.best_params;
      b.step = res.best_step;
      save_checkpoint(b, (fs::path(io_.out_dir) / "best.json").string());
    }
    return res;
  }

 private:
  LossAndGradient evaluate(const NetworkParams& params, const CollocationBatch& batch,
                           std::uint64_t step) {
    try {
      LossAndGradient lg = loss_grad(params, cfg_.physics, batch, cfg_.weights, data_, opts_);
      if (!std::isfinite(lg.breakdown.total)) abort(step, "total loss is not finite");
      return lg;
    } catch (const NonFiniteError& e) {
      abort(step, e.what());
    }
  }

  [[noreturn]] void abort(std::uint64_t step, const std::string& why) {
    std::string msg = "training aborted at step " + std::to_string(step) + ": " + why;
    msg += last_checkpoint_.empty() ? " (no checkpoint written)"
                                    : " (last good checkpoint: " + last_checkpoint_ + ")";
    log_warning(msg);
    throw NonFiniteError(msg);
  }

  static void track_best(TrainResult& res, const NetworkParams& params, double loss,
                         std::uint64_t step) {
    if (loss < res.best_loss) {
      res.best_loss = loss;
      res.best_step = step;
      res.best_params = params;
    }
  }

  void log_row(TrainResult& res, std::uint64_t step, const LossBreakdown& b, double gnorm,
               const NetworkParams& params) {
    MetricRow row;
    row.step = step;
    row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    row.loss = b;
    row.grad_norm = gnorm;
    if (with_errors_) {
      const NetworkModel model(params, 1024);
      const PointwiseModel ref(*reference_);
      row.errors = error_norms(model, ref, cfg_.physics, cfg_.logging.norms);
    }
    if (metrics_) {
      *metrics_ << row.csv_row(with_errors_) << '\n';
      metrics_->flush();
      char buf[64];
      std::snprintf(buf, sizeof buf, "%llu,%.6f\n", static_cast<unsigned long long>(step), row.wall_time_s);
      *timing_ << buf;
      timing_->flush();
    }
    if (io_.on_row) io_.on_row(row);
    res.log.push_back(std::move(row));
  }

  void open_files(bool append) {
    if (io_.out_dir.empty()) return;
    fs::create_directories(fs::path(io_.out_dir) / "checkpoints");
    const fs::path path = fs::path(io_.out_dir) / "metrics.csv";
    const bool keep = append && fs::exists(path);
    metrics_.emplace(path, keep ? std::ios::app : std::ios::trunc);
    if (!*metrics_) throw std::runtime_error("cannot write " + path.string());
    if (!keep) *metrics_ << MetricRow::csv_header(with_errors_) << '\n';
    // wall time lives apart so metrics.csv is a pure function of the config
    const fs::path tpath = fs::path(io_.out_dir) / "timing.csv";
    const bool tkeep = append && fs::exists(tpath);
    timing_.emplace(tpath, tkeep ? std::ios::app : std::ios::trunc);
    if (!*timing_) throw std::runtime_error("cannot write " + tpath.string());
    if (!tkeep) *timing_ << "step,wall_time_s\n";
  }

  const RunConfig& cfg_;
  const TrainIO& io_;
  ProblemData data_;
  EvalOptions opts_;
  bool with_errors_;
  std::optional<JetFieldFn> reference_;
  std::optional<std::ofstream> metrics_, timing_;
  std::string last_checkpoint_;
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace

TrainResult train(const RunConfig& cfg, const TrainIO& io) {
  cfg.validate();
  return Run(cfg, io).run();
}

double frozen_batch_loss(const NetworkParams& params, const RunConfig& cfg) {
  const CollocationBatch batch = batch_for_step(cfg, cfg.optimizer.steps);
  return loss_eval(params, cfg.physics, batch, cfg.weights, make_problem_data(cfg),
                   cfg.eval_options())
      .total;
}

NetworkParams lbfgs_refine(const NetworkParams& params, const RunConfig& cfg) {
  if (cfg.optimizer.lbfgs_iterations <= 0) return params;
  const CollocationBatch batch = batch_for_step(cfg, cfg.optimizer.steps);
  const ProblemData data = make_problem_data(cfg);
  const EvalOptions opts = cfg.eval_options();
  NetworkParams work = params;
  const Objective f = [&](std::span<const double> x, std::span<double> g) {
    work.assign(x);
    LossAndGradient lg = loss_grad(work, cfg.physics, batch, cfg.weights, data, opts);
    std::copy(lg.gradient.begin(), lg.gradient.end(), g.begin());
    return lg.breakdown.total;
  };
  LbfgsOptions lo;
  lo.max_iterations = cfg.optimizer.lbfgs_iterations;
  lo.history = cfg.optimizer.lbfgs_history;
  lo.grad_tol = 0.0;
  const LbfgsResult r = lbfgs_minimize(f, params.flatten(), lo);
  NetworkParams out = params;
  out.assign(r.x);
  return out;
}

}  // namespace mhdpinn
