#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>

#include "mhdpinn/checkpoint.hpp"
#include "mhdpinn/config.hpp"
#include "mhdpinn/errors.hpp"
#include "mhdpinn/mms.hpp"
#include "mhdpinn/norms.hpp"
#include "mhdpinn/studies.hpp"
#include "mhdpinn/training.hpp"

namespace mhdpinn {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, Common& c, bool out_required) {
  cmd->add_option("--config", c.config, "JSON config file")->required();
  auto* o = cmd->add_option("--out", c.out, "output directory");
  if (out_required) o->required();
  cmd->add_option("--seed", c.seed, "override the config seed");
  cmd->add_flag("--deterministic", c.deterministic, "single-threaded, bit-reproducible mode");
  cmd->add_option("--threads", c.threads, "worker threads for loss evaluation")
      ->check(CLI::PositiveNumber);
}

ConfigFile resolve(const Common& c) {
  ConfigFile cfg = load_config(c.config);
  if (c.seed) cfg.run.seed = *c.seed;
  if (c.threads) {
    cfg.run.runtime.threads = *c.threads;
    cfg.run.runtime.deterministic = *c.threads == 1;
  }
  if (c.deterministic) cfg.run.runtime.deterministic = true;
  cfg.run.validate();
  return cfg;
}

void write_resolved(const ConfigFile& cfg, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream out(fs::path(dir) / "resolved_config.json");
  if (!out) throw std::runtime_error("cannot write resolved config into " + dir);
  out << write_config(cfg);
}

std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

int cmd_train(const Common& c, const std::string& resume, std::ostream& out) {
  const ConfigFile cfg = resolve(c);
  write_resolved(cfg, c.out);
  TrainIO io;
  io.out_dir = c.out;
  if (!resume.empty()) io.resume = resume;
  io.on_row = [&](const MetricRow& r) {
    out << "step " << r.step << "  loss " << g(r.loss.total) << "  |grad| " << g(r.grad_norm);
    if (r.errors) out << "  rel sup L2 u " << g(r.errors->u_rel_sup_l2) << " B " << g(r.errors->B_rel_sup_l2);
    out << '\n';
  };
  const TrainResult res = train(cfg.run, io);
  out << "done: " << res.steps_done << " steps, best loss " << g(res.best_loss) << " at step "
      << res.best_step << ", " << res.clipped_steps << " clipped steps\n";
  return kExitOk;
}

int cmd_evaluate(const Common& c, const std::string& ckpt_path, std::ostream& out) {
  const ConfigFile cfg = resolve(c);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const NetworkParams expected = zero_params(cfg.run.network.layer_sizes,
                                             cfg.run.network.activation, cfg.run.network.layout);
  if (!ckpt.params.same_shape(expected)) {
    throw ConfigError("checkpoint shape " + ckpt.params.shape_string() +
                      " does not match config shape " + expected.shape_string());
  }
  const RunConfig& run = cfg.run;
  const CollocationBatch batch = batch_for_step(run, 0);
  const LossBreakdown b = loss_eval(ckpt.params, run.physics, batch, run.weights,
                                    make_problem_data(run), run.eval_options());
  out << "loss components:\n";
  for (int i = 0; i < kNumLossTerms; ++i) out << "  " << loss_term_name(i) << ' ' << g(b.components[i]) << '\n';
  out << "  total " << g(b.total) << '\n';

  const NetworkModel model(ckpt.params, 1024);
  std::optional<ErrorReport> err;
  if (const auto ref = make_reference(run)) {
    const PointwiseModel reference(*ref);
    NormOptions no = run.logging.norms;
    no.sobolev = true;
    err = error_norms(model, reference, run.physics, no);
    out << "error norms:\n"
        << "  sup-t L2      u " << g(err->u_sup_l2) << "  B " << g(err->B_sup_l2) << "  p " << g(err->p_sup_l2) << '\n'
        << "  relative L2   u " << g(err->u_rel_sup_l2) << "  B " << g(err->B_rel_sup_l2) << '\n'
        << "  L4-L2         u " << g(err->u_l4l2) << "  B " << g(err->B_l4l2) << '\n'
        << "  relative L4L2 u " << g(err->u_rel_l4l2) << "  B " << g(err->B_rel_l4l2) << '\n'
        << "  space-time H1 u " << g(err->u_h1) << "  B " << g(err->B_h1) << '\n';
  }
  const EnergyReport e = energy_check(model, run.physics, run.logging.norms);
  out << "energy:\n"
      << "  sup |u|^2 " << g(e.sup_u2) << "  sup |B|^2 " << g(e.sup_B2) << "  sup (|u|^2+|B|^2) " << g(e.sup_total) << '\n'
      << "  int |grad u|^2 " << g(e.int_grad_u2) << "  int |grad B|^2 " << g(e.int_grad_B2) << '\n'
      << "  finite " << (e.finite ? "yes" : "no") << '\n';

  if (!c.out.empty()) {
    fs::create_directories(c.out);
    std::ofstream csv(fs::path(c.out) / "evaluation.csv");
    csv << "quantity,value\n";
    for (int i = 0; i < kNumLossTerms; ++i) csv << loss_term_name(i) << ',' << g(b.components[i]) << '\n';
    csv << "total," << g(b.total) << '\n';
    if (err) {
      csv << "u_sup_l2," << g(err->u_sup_l2) << "\nB_sup_l2," << g(err->B_sup_l2) << '\n'
          << "p_sup_l2," << g(err->p_sup_l2) << "\nu_rel_sup_l2," << g(err->u_rel_sup_l2) << '\n'
          << "B_rel_sup_l2," << g(err->B_rel_sup_l2) << "\nu_l4l2," << g(err->u_l4l2) << '\n'
          << "B_l4l2," << g(err->B_l4l2) << "\nu_h1," << g(err->u_h1) << "\nB_h1," << g(err->B_h1) << '\n';
    }
    csv << "sup_u2," << g(e.sup_u2) << "\nsup_B2," << g(e.sup_B2) << "\nint_grad_u2," << g(e.int_grad_u2)
        << "\nint_grad_B2," << g(e.int_grad_B2) << '\n';
    write_resolved(cfg, c.out);
  }
  return kExitOk;
}

int cmd_study(const Common& c, const std::string& kind, std::ostream& out) {
  const ConfigFile cfg = resolve(c);
  write_resolved(cfg, c.out);
  if (kind == "loss-error") {
    std::vector<std::pair<std::string, NetworkParams>> nets;
    for (const auto& path : cfg.study.checkpoints) nets.emplace_back(path, load_checkpoint(path).params);
    const LossErrorTable t = loss_error_study(nets, cfg.run, cfg.study);
    write_loss_error_csv(t, (fs::path(c.out) / "loss_error.csv").string());
    out << "spearman(loss, sup-t L2 error): u " << t.spearman_u << "  B " << t.spearman_B
        << "  (div/bc loss vs |w2|: " << t.spearman_w2 << ")  -> "
        << (t.passes() ? "monotone" : "not monotone") << '\n';
  } else if (kind == "stability") {
    const StabilityTable t = stability_study(cfg.run, cfg.study);
    write_stability_csv(t, (fs::path(c.out) / "stability.csv").string());
    out << "distance non-decreasing in delta: u " << (t.monotone_u ? "yes" : "no") << "  B "
        << (t.monotone_B ? "yes" : "no") << '\n';
  } else {
    const auto rows = hodge_study(cfg.run.physics, cfg.study.hodge_N);
    write_hodge_csv(rows, (fs::path(c.out) / "hodge.csv").string());
    for (const auto& r : rows) {
      out << r.field << ": |w1|/|w| " << g(r.w1_ratio) << "  |w2|/|w| " << g(r.w2_ratio)
          << "  orthogonality " << g(r.orthogonality) << '\n';
    }
  }
  return kExitOk;
}

int cmd_sample_dump(const Common& c, std::uint64_t step, std::ostream& out) {
  const ConfigFile cfg = resolve(c);
  fs::create_directories(c.out);
  const std::string path = (fs::path(c.out) / ("batch_" + std::to_string(step) + ".csv")).string();
  save_batch_csv(batch_for_step(cfg.run, step), path);
  write_resolved(cfg, c.out);
  out << "wrote " << path << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"PINN solver and verification harness for 2D incompressible MHD", "mhdpinn"};
  app.require_subcommand(1);

  Common train_c, eval_c, study_c, dump_c;
  std::string resume, ckpt, kind;
  std::uint64_t dump_step = 0;

  auto* train_cmd = app.add_subcommand("train", "train a network from a config");
  add_common(train_cmd, train_c, true);
  train_cmd->add_option("--resume", resume, "checkpoint to resume from");

  auto* eval_cmd = app.add_subcommand("evaluate", "loss, error norms and energy of a checkpoint");
  add_common(eval_cmd, eval_c, false);
  eval_cmd->add_option("--checkpoint", ckpt, "checkpoint file")->required();

  auto* study_cmd = app.add_subcommand("study", "run a verification study");
  study_cmd->add_option("kind", kind, "loss-error | stability | hodge")
      ->required()
      ->check(CLI::IsMember({"loss-error", "stability", "hodge"}));
  add_common(study_cmd, study_c, true);

  auto* dump_cmd = app.add_subcommand("sample-dump", "write the collocation batch of one step");
  add_common(dump_cmd, dump_c, true);
  dump_cmd->add_option("--step", dump_step, "optimizer step");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_c, resume, out);
    if (*eval_cmd) return cmd_evaluate(eval_c, ckpt, out);
    if (*study_cmd) return cmd_study(study_c, kind, out);
    return cmd_sample_dump(dump_c, dump_step, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ShapeError& e) {
    err << "shape error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace mhdpinn
