#include "mhdpinn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <thread>

#include "mhdpinn/errors.hpp"
#include "mhdpinn/tape.hpp"

namespace mhdpinn {

const char* loss_term_name(int term) {
  static constexpr const char* names[kNumLossTerms] = {
      "residual_f", "residual_B", "div_u", "div_B", "bc_u", "bc_Bn", "ic_u", "ic_B", "bc_curlB"};
  return (term >= 0 && term < kNumLossTerms) ? names[term] : "?";
}

LossWeights LossWeights::paper_faithful() {
  LossWeights w;
  w.a = {1, 1, 1, 1, 1, 1, 0, 0, 0};
  return w;
}

void LossWeights::validate() const {
  bool any = false;
  for (int i = 0; i < kNumLossTerms; ++i) {
    if (!(a[i] >= 0.0) || !std::isfinite(a[i])) {
      throw ConfigError(std::string("loss weight for ") + loss_term_name(i) + " must be a finite nonnegative number");
    }
    any = any || a[i] > 0.0;
  }
  if (!any) throw ConfigError("at least one loss weight must be positive");
}

std::string LossBreakdown::csv_header() {
  std::string h = "step";
  for (int i = 0; i < kNumLossTerms; ++i) h += std::string(",") + loss_term_name(i);
  return h + ",total";
}

std::string LossBreakdown::csv_row(std::uint64_t step) const {
  std::ostringstream os;
  os << step;
  char buf[32];
  for (double c : components) {
    std::snprintf(buf, sizeof buf, ",%.17g", c);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, ",%.17g", total);
  os << buf;
  return os.str();
}

namespace {

enum class Set { interior, boundary, initial };

struct WorkItem {
  Set set;
  Eigen::Index begin, len;
};

// Produces output jets for a chunk of points, optionally differentiable.
class ChunkSource {
 public:
  virtual ~ChunkSource() = default;
  virtual const Eigen::MatrixXd& forward(const Eigen::Ref<const Eigen::Matrix3Xd>& pts, int slots) = 0;
  virtual void backward(const Eigen::MatrixXd&, std::span<double>) {}
};

class NetworkSource final : public ChunkSource {
 public:
  explicit NetworkSource(const NetworkParams& p) : net_(p) {}
  const Eigen::MatrixXd& forward(const Eigen::Ref<const Eigen::Matrix3Xd>& pts, int slots) override {
    return net_.forward(pts, slots);
  }
  void backward(const Eigen::MatrixXd& adj, std::span<double> grad) override { net_.backward(adj, grad); }

 private:
  BatchNetwork net_;
};

class ModelSource final : public ChunkSource {
 public:
  explicit ModelSource(const FieldModel& m) : model_(m) {}
  const Eigen::MatrixXd& forward(const Eigen::Ref<const Eigen::Matrix3Xd>& pts, int slots) override {
    out_ = model_.evaluate(pts, slots);
    return out_;
  }

 private:
  const FieldModel& model_;
  Eigen::MatrixXd out_;
};

struct Partial {
  std::array<double, kNumLossTerms> sums{};
  std::vector<double> grad;
};

struct Context {
  const PhysicsParams& phys;
  const CollocationBatch& batch;
  const LossWeights& w;
  const ProblemData& data;
};

[[noreturn]] void report_non_finite(const char* what, const Eigen::Ref<const Eigen::Matrix3Xd>& pts,
                                    Eigen::Index j, const char* set) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "non-finite %s at %s point (x=%.17g, y=%.17g, t=%.17g)", what, set,
                pts(0, j), pts(1, j), pts(2, j));
  throw NonFiniteError(buf);
}

void check_finite(const Eigen::ArrayXd& v, const char* what,
                  const Eigen::Ref<const Eigen::Matrix3Xd>& pts, const char* set) {
  if (v.allFinite()) return;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (!std::isfinite(v[j])) report_non_finite(what, pts, j, set);
  }
}

void interior_chunk(ChunkSource& src, const Context& c, const WorkItem& it, Partial& part, bool want_grad) {
  const auto pts = c.batch.interior.middleCols(it.begin, it.len);
  const Eigen::Index P = it.len;
  const Eigen::MatrixXd& out = src.forward(pts, kNumSlots);

  InteriorData d;
  d.fx.setZero(P); d.fy.setZero(P); d.sBx.setZero(P); d.sBy.setZero(P);
  for (Eigen::Index j = 0; j < P; ++j) {
    if (c.data.forcing) {
      const auto f = c.data.forcing(pts(0, j), pts(1, j), pts(2, j));
      d.fx[j] = f[0]; d.fy[j] = f[1];
    }
    if (c.data.magnetic_source) {
      const auto s = c.data.magnetic_source(pts(0, j), pts(1, j), pts(2, j));
      d.sBx[j] = s[0]; d.sBy[j] = s[1];
    }
  }

  const InteriorResiduals r = interior_residuals(out, d, c.phys);
  check_finite(r.fx, "residual_f", pts, "interior");
  check_finite(r.fy, "residual_f", pts, "interior");
  check_finite(r.Bx, "residual_B", pts, "interior");
  check_finite(r.By, "residual_B", pts, "interior");
  check_finite(r.div_u, "div_u", pts, "interior");
  check_finite(r.div_B, "div_B", pts, "interior");

  auto& s = part.sums;
  for (Eigen::Index j = 0; j < P; ++j) {
    s[kResidualF] += r.fx[j] * r.fx[j] + r.fy[j] * r.fy[j];
    s[kResidualB] += r.Bx[j] * r.Bx[j] + r.By[j] * r.By[j];
    s[kDivU] += r.div_u[j] * r.div_u[j];
    s[kDivB] += r.div_B[j] * r.div_B[j];
  }

  const auto& a = c.w.a;
  if (!want_grad || (a[kResidualF] == 0 && a[kResidualB] == 0 && a[kDivU] == 0 && a[kDivB] == 0)) return;
  const double k = 2.0 * c.batch.w_interior;
  InteriorResiduals adj;
  adj.fx = k * a[kResidualF] * r.fx;
  adj.fy = k * a[kResidualF] * r.fy;
  adj.Bx = k * a[kResidualB] * r.Bx;
  adj.By = k * a[kResidualB] * r.By;
  adj.div_u = k * a[kDivU] * r.div_u;
  adj.div_B = k * a[kDivB] * r.div_B;
  Eigen::MatrixXd out_adj = Eigen::MatrixXd::Zero(kNumOutputs, kNumSlots * P);
  interior_residuals_adjoint(out, adj, c.phys, out_adj);
  src.backward(out_adj, part.grad);
}

void boundary_chunk(ChunkSource& src, const Context& c, const WorkItem& it, Partial& part, bool want_grad) {
  constexpr int slots = 3;  // value and spatial gradient, for curl B
  const auto pts = c.batch.boundary.middleCols(it.begin, it.len);
  const auto nrm = c.batch.boundary_normal.middleCols(it.begin, it.len);
  const Eigen::Index P = it.len;
  const Eigen::MatrixXd& out = src.forward(pts, slots);
  auto J = [&](int f, Slot s) { return out.row(f).segment(static_cast<int>(s) * P, P).transpose().array(); };

  const Eigen::ArrayXd ux = J(kUx, Slot::val), uy = J(kUy, Slot::val);
  const Eigen::ArrayXd Bn = nrm.row(0).transpose().array() * J(kBx, Slot::val) +
                            nrm.row(1).transpose().array() * J(kBy, Slot::val);
  const Eigen::ArrayXd curl = J(kBy, Slot::dx) - J(kBx, Slot::dy);
  check_finite(ux, "boundary u", pts, "boundary");
  check_finite(uy, "boundary u", pts, "boundary");
  check_finite(Bn, "boundary B.n", pts, "boundary");
  check_finite(curl, "boundary curl B", pts, "boundary");

  auto& s = part.sums;
  for (Eigen::Index j = 0; j < P; ++j) {
    s[kBcU] += ux[j] * ux[j] + uy[j] * uy[j];
    s[kBcBn] += Bn[j] * Bn[j];
    s[kBcCurlB] += curl[j] * curl[j];
  }

  const auto& a = c.w.a;
  if (!want_grad || (a[kBcU] == 0 && a[kBcBn] == 0 && a[kBcCurlB] == 0)) return;
  const double k = 2.0 * c.batch.w_boundary;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(kNumOutputs, slots * P);
  auto G = [&](int f, Slot s) { return g.row(f).segment(static_cast<int>(s) * P, P).transpose().array(); };
  G(kUx, Slot::val) = k * a[kBcU] * ux;
  G(kUy, Slot::val) = k * a[kBcU] * uy;
  G(kBx, Slot::val) = k * a[kBcBn] * Bn * nrm.row(0).transpose().array();
  G(kBy, Slot::val) = k * a[kBcBn] * Bn * nrm.row(1).transpose().array();
  G(kBy, Slot::dx) = k * a[kBcCurlB] * curl;
  G(kBx, Slot::dy) = -k * a[kBcCurlB] * curl;
  src.backward(g, part.grad);
}

void initial_chunk(ChunkSource& src, const Context& c, const WorkItem& it, Partial& part, bool want_grad) {
  const auto pts = c.batch.initial.middleCols(it.begin, it.len);
  const Eigen::Index P = it.len;
  const Eigen::MatrixXd& out = src.forward(pts, 1);

  Eigen::ArrayXXd diff(4, P);
  for (Eigen::Index j = 0; j < P; ++j) {
    std::array<double, 2> u0{0.0, 0.0}, B0{0.0, 0.0};
    if (c.data.u0) u0 = c.data.u0(pts(0, j), pts(1, j));
    if (c.data.B0) B0 = c.data.B0(pts(0, j), pts(1, j));
    diff(0, j) = out(kUx, j) - u0[0];
    diff(1, j) = out(kUy, j) - u0[1];
    diff(2, j) = out(kBx, j) - B0[0];
    diff(3, j) = out(kBy, j) - B0[1];
  }
  for (int r = 0; r < 4; ++r) check_finite(diff.row(r).transpose(), "initial mismatch", pts, "initial");

  auto& s = part.sums;
  for (Eigen::Index j = 0; j < P; ++j) {
    s[kIcU] += diff(0, j) * diff(0, j) + diff(1, j) * diff(1, j);
    s[kIcB] += diff(2, j) * diff(2, j) + diff(3, j) * diff(3, j);
  }

  const auto& a = c.w.a;
  if (!want_grad || (a[kIcU] == 0 && a[kIcB] == 0)) return;
  const double k = 2.0 * c.batch.w_initial;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(kNumOutputs, P);
  g.row(kUx) = k * a[kIcU] * diff.row(0);
  g.row(kUy) = k * a[kIcU] * diff.row(1);
  g.row(kBx) = k * a[kIcB] * diff.row(2);
  g.row(kBy) = k * a[kIcB] * diff.row(3);
  src.backward(g, part.grad);
}

std::vector<WorkItem> work_items(const CollocationBatch& b, Eigen::Index chunk) {
  if (chunk < 1) throw std::invalid_argument("chunk size must be positive");
  std::vector<WorkItem> items;
  auto add = [&](Set s, Eigen::Index count) {
    for (Eigen::Index i = 0; i < count; i += chunk) items.push_back({s, i, std::min(chunk, count - i)});
  };
  add(Set::interior, b.m());
  add(Set::boundary, b.n());
  add(Set::initial, b.k());
  return items;
}

void run_items(ChunkSource& src, const Context& c, std::span<const WorkItem> items, Partial& part,
               bool want_grad) {
  for (const WorkItem& it : items) {
    switch (it.set) {
      case Set::interior: interior_chunk(src, c, it, part, want_grad); break;
      case Set::boundary: boundary_chunk(src, c, it, part, want_grad); break;
      case Set::initial: initial_chunk(src, c, it, part, want_grad); break;
    }
  }
}

template <class MakeSource>
LossAndGradient evaluate(MakeSource make_source, const Context& c, const EvalOptions& opts,
                         std::size_t num_params, bool want_grad) {
  if (c.batch.m() + c.batch.n() + c.batch.k() == 0) {
    throw std::invalid_argument("loss evaluation needs a nonempty collocation batch");
  }
  const std::vector<WorkItem> items = work_items(c.batch, opts.chunk);
  const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(items.size())));

  std::vector<Partial> parts(threads);
  for (Partial& p : parts) p.grad.assign(want_grad ? num_params : 0, 0.0);

  if (threads == 1) {
    auto src = make_source();
    run_items(*src, c, items, parts[0], want_grad);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t per = (items.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t lo = std::min(items.size(), t * per);
      const std::size_t hi = std::min(items.size(), lo + per);
      pool.emplace_back([&, t, lo, hi] {
        try {
          auto src = make_source();
          run_items(*src, c, std::span<const WorkItem>(items).subspan(lo, hi - lo), parts[t], want_grad);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    // Pairwise tree reduction into parts[0].
    for (int stride = 1; stride < threads; stride *= 2) {
      for (int i = 0; i + stride < threads; i += 2 * stride) {
        for (int k = 0; k < kNumLossTerms; ++k) parts[i].sums[k] += parts[i + stride].sums[k];
        for (std::size_t k = 0; k < parts[i].grad.size(); ++k) parts[i].grad[k] += parts[i + stride].grad[k];
      }
    }
  }

  LossAndGradient r;
  const auto& s = parts[0].sums;
  auto& comp = r.breakdown.components;
  for (int i : {kResidualF, kResidualB, kDivU, kDivB}) comp[i] = c.batch.w_interior * s[i];
  for (int i : {kBcU, kBcBn, kBcCurlB}) comp[i] = c.batch.w_boundary * s[i];
  for (int i : {kIcU, kIcB}) comp[i] = c.batch.w_initial * s[i];
  double total = 0.0;
  for (int i = 0; i < kNumLossTerms; ++i) total += c.w.a[i] * comp[i];
  r.breakdown.total = total;
  if (!std::isfinite(total)) throw NonFiniteError("non-finite total loss");
  r.gradient = std::move(parts[0].grad);
  return r;
}

}  // namespace

LossBreakdown loss_eval(const FieldModel& model, const PhysicsParams& phys,
                        const CollocationBatch& batch, const LossWeights& w,
                        const ProblemData& data, const EvalOptions& opts) {
  const Context c{phys, batch, w, data};
  auto make = [&] { return std::make_unique<ModelSource>(model); };
  return evaluate(make, c, opts, 0, false).breakdown;
}

LossBreakdown loss_eval(const NetworkParams& params, const PhysicsParams& phys,
                        const CollocationBatch& batch, const LossWeights& w,
                        const ProblemData& data, const EvalOptions& opts) {
  const Context c{phys, batch, w, data};
  auto make = [&] { return std::make_unique<NetworkSource>(params); };
  return evaluate(make, c, opts, params.num_params(), false).breakdown;
}

LossAndGradient loss_grad(const NetworkParams& params, const PhysicsParams& phys,
                          const CollocationBatch& batch, const LossWeights& w,
                          const ProblemData& data, const EvalOptions& opts) {
  const Context c{phys, batch, w, data};
  auto make = [&] { return std::make_unique<NetworkSource>(params); };
  LossAndGradient r = evaluate(make, c, opts, params.num_params(), true);
  for (double g : r.gradient) {
    if (!std::isfinite(g)) throw NonFiniteError("non-finite loss gradient");
  }
  return r;
}

LossAndGradient loss_grad_taped(const NetworkParams& params, const PhysicsParams& phys,
                                const CollocationBatch& batch, const LossWeights& w,
                                const ProblemData& data) {
  Tape tape;
  const std::vector<TapeJet> leaves = record_params(tape, params);
  std::array<std::optional<TapeJet>, kNumLossTerms> sums;
  auto acc = [&](int term, TapeJet v) { sums[term] = sums[term] ? *sums[term] + v : v; };

  for (Eigen::Index j = 0; j < batch.m(); ++j) {
    const double x = batch.interior(0, j), y = batch.interior(1, j), t = batch.interior(2, j);
    FieldSampleT<TapeJet> s = record_forward(tape, params, leaves, x, y, t);
    if (data.forcing) { auto f = data.forcing(x, y, t); s.fx = f[0]; s.fy = f[1]; }
    if (data.magnetic_source) { auto q = data.magnetic_source(x, y, t); s.sBx = q[0]; s.sBy = q[1]; }
    const auto rf = residual_f(s, phys);
    const auto rb = residual_B(s, phys);
    const TapeJet du = div2(s.ux, s.uy), dB = div2(s.Bx, s.By);
    acc(kResidualF, rf[0] * rf[0] + rf[1] * rf[1]);
    acc(kResidualB, rb[0] * rb[0] + rb[1] * rb[1]);
    acc(kDivU, du * du);
    acc(kDivB, dB * dB);
  }
  for (Eigen::Index j = 0; j < batch.n(); ++j) {
    const auto s = record_forward(tape, params, leaves, batch.boundary(0, j), batch.boundary(1, j),
                                  batch.boundary(2, j));
    const auto bt = boundary_terms(s, {batch.boundary_normal(0, j), batch.boundary_normal(1, j)});
    acc(kBcU, bt.u_penalty[0] * bt.u_penalty[0] + bt.u_penalty[1] * bt.u_penalty[1]);
    acc(kBcBn, bt.Bn_penalty * bt.Bn_penalty);
    acc(kBcCurlB, bt.curlB_penalty * bt.curlB_penalty);
  }
  for (Eigen::Index j = 0; j < batch.k(); ++j) {
    const double x = batch.initial(0, j), y = batch.initial(1, j);
    const auto s = record_forward(tape, params, leaves, x, y, 0.0);
    const auto u0 = data.u0 ? data.u0(x, y) : std::array<double, 2>{0, 0};
    const auto B0 = data.B0 ? data.B0(x, y) : std::array<double, 2>{0, 0};
    const TapeJet eux = slot(s.ux, Slot::val) - u0[0], euy = slot(s.uy, Slot::val) - u0[1];
    const TapeJet eBx = slot(s.Bx, Slot::val) - B0[0], eBy = slot(s.By, Slot::val) - B0[1];
    acc(kIcU, eux * eux + euy * euy);
    acc(kIcB, eBx * eBx + eBy * eBy);
  }

  LossAndGradient r;
  std::optional<TapeJet> total;
  for (int i = 0; i < kNumLossTerms; ++i) {
    if (!sums[i]) continue;
    const double qw = i <= kDivB ? batch.w_interior
                      : (i == kIcU || i == kIcB) ? batch.w_initial
                                                 : batch.w_boundary;
    const TapeJet comp = qw * *sums[i];
    r.breakdown.components[i] = comp.value().val;
    const TapeJet term = w.a[i] * comp;
    total = total ? *total + term : term;
  }
  if (!total) throw std::invalid_argument("loss evaluation needs a nonempty collocation batch");
  r.breakdown.total = total->value().val;
  r.gradient = tape.gradient(*total, params.num_params());
  return r;
}

}  // namespace mhdpinn
