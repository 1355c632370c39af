#include "mhdpinn/studies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "mhdpinn/errors.hpp"
#include "mhdpinn/log.hpp"
#include "mhdpinn/mms.hpp"

namespace mhdpinn {

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * (i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: size mismatch");
  if (a.size() < 2) throw std::invalid_argument("spearman: need at least two samples");
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

LossErrorTable loss_error_study(const std::vector<std::pair<std::string, NetworkParams>>& nets,
                                const RunConfig& cfg, const StudyConfig& study) {
  if (nets.size() < 2) throw ConfigError("loss-error study needs at least two checkpoints");
  cfg.validate();
  const auto ref = make_reference(cfg);
  if (!ref) throw ConfigError("loss-error study needs a problem with a reference solution");
  const PointwiseModel reference(*ref);
  const ProblemData data = make_problem_data(cfg);
  const CollocationBatch batch =
      sample_batch(cfg.physics.domain, cfg.physics.T, study.eval_interior, study.eval_boundary,
                   study.eval_initial, step_seed(cfg.seed, 0x5EED5EEDull), cfg.sampling.strategy);
  const double t_mid = 0.5 * cfg.physics.T;

  LossErrorTable table;
  for (const auto& [label, params] : nets) {
    LossErrorRow row;
    row.label = label;
    row.loss = loss_eval(params, cfg.physics, batch, cfg.weights, data, cfg.eval_options());
    const NetworkModel model(params, 1024);
    row.errors = error_norms(model, reference, cfg.physics, cfg.logging.norms);
    row.div_bc = row.loss.components[kDivU] + row.loss.components[kBcU];

    const GridField u = grid_sample(
        [&](double x, double y) {
          const FieldValues v = forward_value(params, x, y, t_mid);
          return std::array<double, 2>{v[kUx], v[kUy]};
        },
        cfg.physics.domain, study.hodge_resolution);
    const HodgeResult h = hodge_decompose(u);
    row.w2_norm = grid_norm(h.w2);
    const double un = grid_norm(u);
    row.w2_ratio = un > 0.0 ? row.w2_norm / un : 0.0;
    table.rows.push_back(std::move(row));
  }

  std::vector<double> loss, eu, eB, dbc, w2;
  for (const auto& r : table.rows) {
    loss.push_back(r.loss.total);
    eu.push_back(r.errors.u_sup_l2);
    eB.push_back(r.errors.B_sup_l2);
    dbc.push_back(r.div_bc);
    w2.push_back(r.w2_norm);
  }
  table.spearman_u = spearman(loss, eu);
  table.spearman_B = spearman(loss, eB);
  table.spearman_w2 = spearman(dbc, w2);
  const auto [lo, hi] = std::minmax_element(loss.begin(), loss.end());
  table.loss_decades = *lo > 0.0 ? std::log10(*hi / *lo) : std::numeric_limits<double>::infinity();
  if (nets.size() < 4 || table.loss_decades < 2.0) {
    log_warning("loss-error study: " + std::to_string(nets.size()) + " checkpoints spanning " +
                fmt(table.loss_decades) + " loss decades (want >= 4 and >= 2)");
  }
  return table;
}

void write_loss_error_csv(const LossErrorTable& t, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "label,total_loss,u_sup_l2,B_sup_l2,u_l4l2,B_l4l2,div_bc_loss,w2_norm,w2_ratio\n";
  for (const auto& r : t.rows) {
    out << r.label << ',' << fmt(r.loss.total) << ',' << fmt(r.errors.u_sup_l2) << ','
        << fmt(r.errors.B_sup_l2) << ',' << fmt(r.errors.u_l4l2) << ',' << fmt(r.errors.B_l4l2)
        << ',' << fmt(r.div_bc) << ',' << fmt(r.w2_norm) << ',' << fmt(r.w2_ratio) << '\n';
  }
  // error columns hold the rank correlation with the total loss; w2_norm the
  // correlation with div_bc_loss
  out << "spearman,," << fmt(t.spearman_u) << ',' << fmt(t.spearman_B) << ",,,,"
      << fmt(t.spearman_w2) << ",\n";
}

StabilityTable stability_study(const RunConfig& base, const StudyConfig& study) {
  const auto& d = study.deltas;
  if (d.size() < 3 || std::find(d.begin(), d.end(), 0.0) == d.end()) {
    throw ConfigError("stability study needs at least three deltas including 0");
  }
  if (base.problem.forcing != 0.0 || base.problem.u0 != 0.0 || base.problem.B0 != 0.0) {
    throw ConfigError("stability study base config must be unperturbed");
  }
  StabilityTable table;
  table.target = study.target;
  const TrainResult ref_run = train(base);
  const NetworkModel ref_model(ref_run.final_params, 1024);
  const ProblemData data0 = make_problem_data(base);
  const NormOptions& norms = base.logging.norms;

  auto datum_norm = [&](const ProblemData& a, const ProblemData& b) {
    // norm of a - b in the target's natural space
    if (study.target == StabilityTarget::forcing) {
      const Vec2Fn fa = a.forcing, fb = b.forcing;
      return l2l2_norm(
          [&](double x, double y, double t) {
            const auto va = fa ? fa(x, y, t) : std::array<double, 2>{0, 0};
            const auto vb = fb ? fb(x, y, t) : std::array<double, 2>{0, 0};
            return std::array<double, 2>{va[0] - vb[0], va[1] - vb[1]};
          },
          base.physics, norms);
    }
    const Vec2Fn2D fa = study.target == StabilityTarget::u0 ? a.u0 : a.B0;
    const Vec2Fn2D fb = study.target == StabilityTarget::u0 ? b.u0 : b.B0;
    // L2(Omega): one time slice of the space-time norm rescaled by T
    PhysicsParams p = base.physics;
    const double T = p.T;
    return l2l2_norm(
               [&](double x, double y, double) {
                 const auto va = fa ? fa(x, y) : std::array<double, 2>{0, 0};
                 const auto vb = fb ? fb(x, y) : std::array<double, 2>{0, 0};
                 return std::array<double, 2>{va[0] - vb[0], va[1] - vb[1]};
               },
               p, norms) /
           std::sqrt(T);
  };
  table.data_norm = datum_norm(data0, ProblemData{});

  for (double delta : d) {
    RunConfig cfg = base;
    switch (study.target) {
      case StabilityTarget::forcing: cfg.problem.forcing = delta; break;
      case StabilityTarget::u0: cfg.problem.u0 = delta; break;
      case StabilityTarget::B0: cfg.problem.B0 = delta; break;
    }
    const TrainResult run = train(cfg);
    const NetworkModel model(run.final_params, 1024);
    const L4L2Distance dist = l4l2_distance(model, ref_model, base.physics, norms);
    StabilityRow row;
    row.delta = delta;
    row.data_diff = datum_norm(make_problem_data(cfg), data0);
    row.dist_u = dist.u;
    row.dist_B = dist.B;
    table.rows.push_back(row);
    log_info("stability: delta " + fmt(delta) + " distance u " + fmt(dist.u) + " B " + fmt(dist.B));
  }

  std::vector<StabilityRow> sorted = table.rows;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.delta < b.delta; });
  table.monotone_u = table.monotone_B = true;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].dist_u < sorted[i - 1].dist_u) table.monotone_u = false;
    if (sorted[i].dist_B < sorted[i - 1].dist_B) table.monotone_B = false;
  }
  return table;
}

void write_stability_csv(const StabilityTable& t, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "target,delta,data_diff,dist_u_l4l2,dist_B_l4l2\n";
  for (const auto& r : t.rows) {
    out << to_string(t.target) << ',' << fmt(r.delta) << ',' << fmt(r.data_diff) << ','
        << fmt(r.dist_u) << ',' << fmt(r.dist_B) << '\n';
  }
  out << "monotone,,," << (t.monotone_u ? "yes" : "no") << ',' << (t.monotone_B ? "yes" : "no")
      << '\n';
}

HodgeRow hodge_row(const std::string& name, const GridField& w) {
  const HodgeResult h = hodge_decompose(w);
  HodgeRow r;
  r.field = name;
  r.N = w.N;
  const double n = grid_norm(w), n1 = grid_norm(h.w1), n2 = grid_norm(h.w2);
  r.w1_ratio = n > 0.0 ? n1 / n : 0.0;
  r.w2_ratio = n > 0.0 ? n2 / n : 0.0;
  r.orthogonality = std::abs(grid_inner(h.w1, h.w2)) / (n1 * n2 + 1e-300);
  r.cg_iterations = h.cg_iterations;
  return r;
}

std::vector<HodgeRow> hodge_study(const PhysicsParams& phys, int N) {
  const ManufacturedSolution mms = mms_default(phys);
  std::vector<HodgeRow> rows;
  rows.push_back(hodge_row(
      "grad(x^2+y^2)",
      grid_sample([](double x, double y) { return std::array<double, 2>{2 * x, 2 * y}; },
                  phys.domain, N)));
  rows.push_back(hodge_row(
      "u*(t=0)", grid_sample([&](double x, double y) { return mms.u0(x, y); }, phys.domain, N)));
  rows.push_back(hodge_row(
      "B*(t=0)", grid_sample([&](double x, double y) { return mms.B0(x, y); }, phys.domain, N)));
  return rows;
}

void write_hodge_csv(const std::vector<HodgeRow>& rows, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "field,N,w1_ratio,w2_ratio,orthogonality,cg_iterations\n";
  for (const auto& r : rows) {
    out << r.field << ',' << r.N << ',' << fmt(r.w1_ratio) << ',' << fmt(r.w2_ratio) << ','
        << fmt(r.orthogonality) << ',' << r.cg_iterations << '\n';
  }
}

}  // namespace mhdpinn
