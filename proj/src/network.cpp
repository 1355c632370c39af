#include "mhdpinn/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mhdpinn/errors.hpp"
#include "mhdpinn/random.hpp"

namespace mhdpinn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::sin: return "sin";
  }
  return "?";
}

std::string to_string(NetworkLayout l) {
  return l == NetworkLayout::shared ? "shared" : "split";
}

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "sin") return Activation::sin;
  throw ConfigError("unknown activation '" + name + "' (expected tanh or sin)");
}

NetworkLayout parse_layout(const std::string& name) {
  if (name == "shared") return NetworkLayout::shared;
  if (name == "split") return NetworkLayout::split;
  throw ConfigError("unknown network layout '" + name + "' (expected shared or split)");
}

Elementary elementary_of(Activation a) {
  return a == Activation::tanh ? Elementary::tanh : Elementary::sin;
}

std::size_t Mlp::num_params() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    n += static_cast<std::size_t>(sizes[k + 1]) * (sizes[k] + 1);
  }
  return n;
}

std::size_t NetworkParams::num_params() const {
  std::size_t n = 0;
  for (const Mlp& h : heads) n += h.num_params();
  return n;
}

std::vector<double> NetworkParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(num_params());
  for (const Mlp& h : heads) {
    for (int k = 0; k < h.num_layers(); ++k) {
      const Eigen::MatrixXd& W = h.weights[k];
      flat.insert(flat.end(), W.data(), W.data() + W.size());
      const Eigen::VectorXd& b = h.biases[k];
      flat.insert(flat.end(), b.data(), b.data() + b.size());
    }
  }
  return flat;
}

void NetworkParams::assign(std::span<const double> flat) {
  if (flat.size() != num_params()) {
    throw ShapeError("parameter vector has " + std::to_string(flat.size()) +
                     " entries, network " + shape_string() + " needs " +
                     std::to_string(num_params()));
  }
  std::size_t pos = 0;
  for (Mlp& h : heads) {
    for (int k = 0; k < h.num_layers(); ++k) {
      Eigen::MatrixXd& W = h.weights[k];
      std::copy_n(flat.data() + pos, W.size(), W.data());
      pos += W.size();
      Eigen::VectorXd& b = h.biases[k];
      std::copy_n(flat.data() + pos, b.size(), b.data());
      pos += b.size();
    }
  }
}

std::string NetworkParams::shape_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
    os << (i ? "," : "") << layer_sizes[i];
  }
  os << "] " << to_string(activation) << ' ' << to_string(layout);
  return os.str();
}

bool NetworkParams::same_shape(const NetworkParams& other) const {
  return layer_sizes == other.layer_sizes && layout == other.layout &&
         activation == other.activation;
}

namespace {

void validate_sizes(const std::vector<int>& sizes) {
  auto describe = [&] {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < sizes.size(); ++i) os << (i ? "," : "") << sizes[i];
    os << ']';
    return os.str();
  };
  if (sizes.size() < 2) throw ShapeError("layer sizes " + describe() + " need at least input and output");
  if (sizes.front() != kNumInputs) throw ShapeError("layer sizes " + describe() + ": input width must be 3 (x, y, t)");
  if (sizes.back() != kNumOutputs) throw ShapeError("layer sizes " + describe() + ": output width must be 5 (u, B, p)");
  for (int s : sizes) {
    if (s <= 0) throw ShapeError("layer sizes " + describe() + ": widths must be positive");
  }
}

Mlp make_mlp(std::vector<int> sizes) {
  Mlp m;
  m.sizes = std::move(sizes);
  for (std::size_t k = 0; k + 1 < m.sizes.size(); ++k) {
    m.weights.emplace_back(Eigen::MatrixXd::Zero(m.sizes[k + 1], m.sizes[k]));
    m.biases.emplace_back(Eigen::VectorXd::Zero(m.sizes[k + 1]));
  }
  return m;
}

}  // namespace

NetworkParams zero_params(const std::vector<int>& layer_sizes, Activation activation,
                          NetworkLayout layout) {
  validate_sizes(layer_sizes);
  NetworkParams p;
  p.layer_sizes = layer_sizes;
  p.activation = activation;
  p.layout = layout;
  if (layout == NetworkLayout::shared) {
    p.heads.push_back(make_mlp(layer_sizes));
  } else {
    for (int out : {2, 2, 1}) {
      std::vector<int> s = layer_sizes;
      s.back() = out;
      p.heads.push_back(make_mlp(std::move(s)));
    }
  }
  return p;
}

NetworkParams init_params(const std::vector<int>& layer_sizes, Activation activation,
                          std::uint64_t seed, NetworkLayout layout) {
  NetworkParams p = zero_params(layer_sizes, activation, layout);
  Rng rng(seed);
  for (Mlp& h : p.heads) {
    for (int k = 0; k < h.num_layers(); ++k) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(h.sizes[k]));
      Eigen::MatrixXd& W = h.weights[k];
      for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = rng.uniform(-bound, bound);
    }
  }
  return p;
}

namespace {

// Plain-number counterpart of the jet apply(), so forward_value shares
// mlp_point with forward_jet and matches its values bit for bit.
double apply(Elementary fn, double z) { return elementary_taylor(fn, z).f0; }

// One point through one head. `coef(i)` returns parameter i of the flat
// vector either as a double or as a tape leaf.
template <class J, class Coef>
void mlp_point(const Mlp& mlp, Activation act, std::size_t offset, const std::array<J, 3>& in,
               Coef coef, std::vector<J>& out) {
  std::vector<J> a(in.begin(), in.end());
  std::vector<J> next;
  const Elementary fn = elementary_of(act);
  std::size_t pos = offset;
  for (int k = 0; k < mlp.num_layers(); ++k) {
    const int rows = mlp.sizes[k + 1];
    const int cols = mlp.sizes[k];
    const std::size_t bias_pos = pos + static_cast<std::size_t>(rows) * cols;
    next.clear();
    for (int i = 0; i < rows; ++i) {
      J z = coef(pos + i) * a[0] + coef(bias_pos + i);
      for (int j = 1; j < cols; ++j) z = z + coef(pos + static_cast<std::size_t>(j) * rows + i) * a[j];
      if (k + 1 < mlp.num_layers()) z = apply(fn, z);
      next.push_back(z);
    }
    a.swap(next);
    pos = bias_pos + rows;
  }
  out.insert(out.end(), a.begin(), a.end());
}

template <class J>
FieldSampleT<J> to_sample(const std::vector<J>& v) {
  FieldSampleT<J> s{v[kUx], v[kUy], v[kBx], v[kBy], v[kP]};
  return s;
}

}  // namespace

FieldSample forward_jet(const NetworkParams& params, double x, double y, double t) {
  const SeedJets seed = jet_seed(x, y, t);
  const std::array<Jet2, 3> in{seed.x, seed.y, seed.t};
  const std::vector<double> flat = params.flatten();
  auto coef = [&](std::size_t i) { return flat[i]; };
  std::vector<Jet2> out;
  std::size_t offset = 0;
  for (const Mlp& h : params.heads) {
    mlp_point(h, params.activation, offset, in, coef, out);
    offset += h.num_params();
  }
  for (const Jet2& j : out) require_finite(j, "network forward pass");
  return to_sample(out);
}

FieldValues forward_value(const NetworkParams& params, double x, double y, double t) {
  const std::array<double, 3> in{x, y, t};
  const std::vector<double> flat = params.flatten();
  auto coef = [&](std::size_t i) { return flat[i]; };
  std::vector<double> out;
  std::size_t offset = 0;
  for (const Mlp& h : params.heads) {
    mlp_point(h, params.activation, offset, in, coef, out);
    offset += h.num_params();
  }
  FieldValues r;
  for (int i = 0; i < kNumOutputs; ++i) {
    if (!std::isfinite(out[i])) throw NonFiniteError("non-finite network output in forward pass");
    r[i] = out[i];
  }
  return r;
}

std::vector<TapeJet> record_params(Tape& tape, const NetworkParams& params) {
  const std::vector<double> flat = params.flatten();
  std::vector<TapeJet> leaves;
  leaves.reserve(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) leaves.push_back(tape.param(i, flat[i]));
  return leaves;
}

FieldSampleT<TapeJet> record_forward(Tape& tape, const NetworkParams& params,
                                     std::span<const TapeJet> leaves,
                                     double x, double y, double t) {
  if (leaves.size() != params.num_params()) throw ShapeError("parameter leaves do not match network");
  const SeedJets seed = jet_seed(x, y, t);
  const std::array<TapeJet, 3> in{tape.leaf(seed.x), tape.leaf(seed.y), tape.leaf(seed.t)};
  auto coef = [&](std::size_t i) { return leaves[i]; };
  std::vector<TapeJet> out;
  std::size_t offset = 0;
  for (const Mlp& h : params.heads) {
    mlp_point(h, params.activation, offset, in, coef, out);
    offset += h.num_params();
  }
  return to_sample(out);
}

// ---------------------------------------------------------------------------
// Batched jets

namespace {

// Vectorized tanh: odd Taylor polynomial for |z| < 0.35 (14 terms, relative
// error below 1e-17 there) and 1 - 2 / (exp(2|z|) + 1) elsewhere. Eigen's
// double tanh falls back to the scalar libm call.
void tanh_array(const Eigen::ArrayXXd& z, Eigen::ArrayXXd& out) {
  static constexpr double c[14] = {
      1.0, -0.33333333333333333333, 0.13333333333333333333, -0.053968253968253968254,
      0.021869488536155202822, -0.0088632355299021965689, 0.0035921280365724810169,
      -0.0014558343870513182682, 0.00059002744094558598138, -0.00023912911424355248149,
      0.000096915379569294503256, -0.000039278323883316834053, 0.000015918905069328964741,
      -6.4516892156554307632e-6};
  const Eigen::Index n = z.size();
  out.resize(z.rows(), z.cols());
  // exp part vectorized by Eigen, the rest in one pass
  out = (2.0 * z.abs().cwiseMin(40.0)).exp();
  const double* __restrict zp = z.data();
  double* __restrict op = out.data();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = zp[i], x2 = x * x;
    // written out so the loop vectorizes
    const double poly =
        c[0] + x2 * (c[1] + x2 * (c[2] + x2 * (c[3] + x2 * (c[4] + x2 * (c[5] + x2 * (c[6] +
        x2 * (c[7] + x2 * (c[8] + x2 * (c[9] + x2 * (c[10] + x2 * (c[11] + x2 * (c[12] +
        x2 * c[13]))))))))))));
    const double big = std::copysign(1.0 - 2.0 / (op[i] + 1.0), x);
    op[i] = std::abs(x) < 0.35 ? poly * x : big;
  }
}

void activation_derivatives(Activation act, const Eigen::ArrayXXd& z, Eigen::ArrayXXd& f0,
                            Eigen::ArrayXXd& d1, Eigen::ArrayXXd& d2, Eigen::ArrayXXd& d3) {
  if (act == Activation::tanh) {
    tanh_array(z, f0);
    d1.resize(z.rows(), z.cols());
    d2.resize(z.rows(), z.cols());
    d3.resize(z.rows(), z.cols());
    const double* __restrict f = f0.data();
    double* __restrict p1 = d1.data();
    double* __restrict p2 = d2.data();
    double* __restrict p3 = d3.data();
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double s1 = 1.0 - f[i] * f[i], s2 = -2.0 * f[i] * s1;
      p1[i] = s1;
      p2[i] = s2;
      p3[i] = -2.0 * s1 * s1 - 2.0 * f[i] * s2;
    }
  } else {
    f0 = z.sin();
    d1 = z.cos();
    d2 = -f0;
    d3 = -d1;
  }
}

// Derivative slots of a = sigma(z). Slot s of a jet matrix with n = rows * P
// entries per slot starts at offset s * n.
void activation_jets(const double* __restrict z, const double* __restrict d1,
                     const double* __restrict d2, double* __restrict a, Eigen::Index n,
                     int slots) {
  if (slots >= 7) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double zx = z[n + i], zy = z[2 * n + i];
      a[n + i] = d1[i] * zx;
      a[2 * n + i] = d1[i] * zy;
      a[3 * n + i] = d1[i] * z[3 * n + i];
      a[4 * n + i] = d2[i] * zx * zx + d1[i] * z[4 * n + i];
      a[5 * n + i] = d2[i] * zx * zy + d1[i] * z[5 * n + i];
      a[6 * n + i] = d2[i] * zy * zy + d1[i] * z[6 * n + i];
    }
    return;
  }
  for (int s = 1; s <= 3 && s < slots; ++s)
    for (Eigen::Index i = 0; i < n; ++i) a[s * n + i] = d1[i] * z[s * n + i];
  if (slots > 4)
    for (Eigen::Index i = 0; i < n; ++i)
      a[4 * n + i] = d2[i] * z[n + i] * z[n + i] + d1[i] * z[4 * n + i];
  if (slots > 5)
    for (Eigen::Index i = 0; i < n; ++i)
      a[5 * n + i] = d2[i] * z[n + i] * z[2 * n + i] + d1[i] * z[5 * n + i];
}

// Pullback of activation_jets (plus the value slot) from ab to zb.
void activation_jets_adjoint(const double* __restrict z, const double* __restrict d1,
                             const double* __restrict d2, const double* __restrict d3,
                             const double* __restrict ab, double* __restrict zb,
                             Eigen::Index n, int slots) {
  if (slots >= 7) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double zx = z[n + i], zy = z[2 * n + i];
      const double a4 = ab[4 * n + i], a5 = ab[5 * n + i], a6 = ab[6 * n + i];
      zb[i] = ab[i] * d1[i] +
              d2[i] * (ab[n + i] * zx + ab[2 * n + i] * zy + ab[3 * n + i] * z[3 * n + i] +
                       a4 * z[4 * n + i] + a5 * z[5 * n + i] + a6 * z[6 * n + i]) +
              d3[i] * (a4 * zx * zx + a5 * zx * zy + a6 * zy * zy);
      zb[n + i] = ab[n + i] * d1[i] + d2[i] * (2.0 * a4 * zx + a5 * zy);
      zb[2 * n + i] = ab[2 * n + i] * d1[i] + d2[i] * (a5 * zx + 2.0 * a6 * zy);
      zb[3 * n + i] = ab[3 * n + i] * d1[i];
      zb[4 * n + i] = a4 * d1[i];
      zb[5 * n + i] = a5 * d1[i];
      zb[6 * n + i] = a6 * d1[i];
    }
    return;
  }
  for (Eigen::Index i = 0; i < n; ++i) zb[i] = ab[i] * d1[i];
  for (int s = 1; s <= 3 && s < slots; ++s)
    for (Eigen::Index i = 0; i < n; ++i) {
      zb[i] += ab[s * n + i] * d2[i] * z[s * n + i];
      zb[s * n + i] = ab[s * n + i] * d1[i];
    }
  if (slots > 4)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a4 = ab[4 * n + i], zx = z[n + i];
      zb[i] += a4 * (d3[i] * zx * zx + d2[i] * z[4 * n + i]);
      zb[n + i] += 2.0 * a4 * d2[i] * zx;
      zb[4 * n + i] = a4 * d1[i];
    }
  if (slots > 5)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a5 = ab[5 * n + i], zx = z[n + i], zy = z[2 * n + i];
      zb[i] += a5 * (d3[i] * zx * zy + d2[i] * z[5 * n + i]);
      zb[n + i] += a5 * d2[i] * zy;
      zb[2 * n + i] += a5 * d2[i] * zx;
      zb[5 * n + i] = a5 * d1[i];
    }
}

}  // namespace

BatchNetwork::BatchNetwork(const NetworkParams& params) : params_(&params) {
  std::size_t offset = 0;
  int row = 0;
  for (const Mlp& h : params.heads) {
    HeadCache hc;
    hc.layers.resize(h.num_layers());
    hc.param_offset = offset;
    hc.out_row = row;
    offset += h.num_params();
    row += h.sizes.back();
    heads_.push_back(std::move(hc));
  }
}

const Eigen::MatrixXd& BatchNetwork::forward(const Eigen::Ref<const Eigen::Matrix3Xd>& points,
                                             int slots) {
  if (slots < 1 || slots > kNumSlots) throw ShapeError("jet slot count must be in 1..7");
  const Eigen::Index P = points.cols();
  slots_ = slots;
  points_ = P;
  output_.resize(kNumOutputs, slots * P);
  Eigen::ArrayXXd f0;

  for (std::size_t h = 0; h < heads_.size(); ++h) {
    const Mlp& mlp = params_->heads[h];
    HeadCache& hc = heads_[h];
    // The input jet is (x, y, t) with unit derivative slots, so the first
    // layer only needs the point values.
    hc.layers[0].input = points;

    for (int k = 0; k < mlp.num_layers(); ++k) {
      LayerCache& lc = hc.layers[k];
      const bool hidden = k + 1 < mlp.num_layers();
      Eigen::MatrixXd& z = hidden ? lc.pre : hc.output;
      if (k == 0) {
        z.resize(mlp.weights[0].rows(), slots * P);
        z.leftCols(P).noalias() = mlp.weights[0] * points;
        for (int s = 1; s < slots; ++s) {
          if (s <= 3) {
            z.middleCols(s * P, P).colwise() = mlp.weights[0].col(s - 1);
          } else {
            z.middleCols(s * P, P).setZero();
          }
        }
      } else {
        z.noalias() = mlp.weights[k] * lc.input;
      }
      z.leftCols(P).colwise() += mlp.biases[k];
      if (!hidden) break;

      activation_derivatives(params_->activation, z.leftCols(P).array(), f0, lc.d1, lc.d2, lc.d3);
      Eigen::MatrixXd& a = hc.layers[k + 1].input;
      a.resize(z.rows(), slots * P);
      a.leftCols(P) = f0.matrix();
      activation_jets(z.data(), lc.d1.data(), lc.d2.data(), a.data(), z.rows() * P, slots);
    }
    output_.middleRows(hc.out_row, mlp.sizes.back()) = hc.output;
  }
  if (!output_.allFinite()) throw NonFiniteError("non-finite network output in batched forward pass");
  return output_;
}

void BatchNetwork::backward(const Eigen::Ref<const Eigen::MatrixXd>& output_adjoint,
                            std::span<double> grad) {
  const Eigen::Index P = points_;
  const int slots = slots_;
  if (output_adjoint.rows() != kNumOutputs || output_adjoint.cols() != slots * P) {
    throw ShapeError("output adjoint does not match the last forward pass");
  }
  if (grad.size() < params_->num_params()) throw ShapeError("gradient buffer too small");
  // Products go into an Eigen-owned buffer: their summation order depends on
  // the destination's alignment, and the caller's span can sit anywhere.
  gbuf_.setZero(static_cast<Eigen::Index>(params_->num_params()));

  for (std::size_t h = 0; h < heads_.size(); ++h) {
    const Mlp& mlp = params_->heads[h];
    HeadCache& hc = heads_[h];
    adj_z_ = output_adjoint.middleRows(hc.out_row, mlp.sizes.back());

    // Flat offsets of each layer inside this head.
    std::vector<std::size_t> offsets(mlp.num_layers());
    std::size_t pos = hc.param_offset;
    for (int k = 0; k < mlp.num_layers(); ++k) {
      offsets[k] = pos;
      pos += mlp.weights[k].size() + mlp.biases[k].size();
    }

    for (int k = mlp.num_layers() - 1; k >= 0; --k) {
      LayerCache& lc = hc.layers[k];
      const Eigen::MatrixXd& W = mlp.weights[k];
      if (k + 1 < mlp.num_layers()) {
        // adj_a_ holds the adjoint of this layer's activation output.
        adj_z_.resize(W.rows(), slots * P);
        activation_jets_adjoint(lc.pre.data(), lc.d1.data(), lc.d2.data(), lc.d3.data(),
                                adj_a_.data(), adj_z_.data(), W.rows() * P, slots);
      }

      Eigen::Map<Eigen::MatrixXd> gW(gbuf_.data() + offsets[k], W.rows(), W.cols());
      if (k == 0) {
        gW.noalias() += adj_z_.leftCols(P) * lc.input.transpose();
        for (int s = 1; s <= 3 && s < slots; ++s)
          gW.col(s - 1) += adj_z_.middleCols(s * P, P).rowwise().sum();
      } else {
        // Eigen picks poor blocking for a long inner dimension; split it.
        for (Eigen::Index c = 0; c < adj_z_.cols(); c += 64) {
          const Eigen::Index w = std::min<Eigen::Index>(64, adj_z_.cols() - c);
          gW.noalias() += adj_z_.middleCols(c, w) * lc.input.middleCols(c, w).transpose();
        }
      }
      Eigen::Map<Eigen::VectorXd> gb(gbuf_.data() + offsets[k] + W.size(), W.rows());
      gb.noalias() += adj_z_.leftCols(P).rowwise().sum();
      if (k > 0) adj_a_.noalias() = W.transpose() * adj_z_;
    }
  }
  for (Eigen::Index i = 0; i < gbuf_.size(); ++i) grad[i] += gbuf_[i];
}

Eigen::MatrixXd forward_values(const NetworkParams& params,
                               const Eigen::Ref<const Eigen::Matrix3Xd>& points) {
  BatchNetwork net(params);
  return net.forward(points, 1);
}

}  // namespace mhdpinn
