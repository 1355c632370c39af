#pragma once

// Fully connected ansatz (x, y, t) -> (u_x, u_y, B_x, B_y, p).
//
// Hidden layers apply a twice differentiable activation; the last layer is
// affine. In the shared layout one trunk emits all five outputs; in the split
// layout three independent networks emit u (2), B (2) and p (1) and share the
// hidden sizes.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mhdpinn/jet.hpp"
#include "mhdpinn/tape.hpp"

namespace mhdpinn {

enum class Activation { tanh, sin };
enum class NetworkLayout { shared, split };

std::string to_string(Activation a);
std::string to_string(NetworkLayout l);
Activation parse_activation(const std::string& name);
NetworkLayout parse_layout(const std::string& name);
Elementary elementary_of(Activation a);

inline constexpr int kNumInputs = 3;
inline constexpr int kNumOutputs = 5;

// Output rows.
enum Field : int { kUx = 0, kUy = 1, kBx = 2, kBy = 3, kP = 4 };

struct Mlp {
  std::vector<int> sizes;
  std::vector<Eigen::MatrixXd> weights;  // weights[k]: sizes[k+1] x sizes[k]
  std::vector<Eigen::VectorXd> biases;   // biases[k]: sizes[k+1]

  std::size_t num_params() const;
  int num_layers() const { return static_cast<int>(weights.size()); }
};

struct NetworkParams {
  std::vector<int> layer_sizes;  // [3, hidden..., 5]
  Activation activation = Activation::tanh;
  NetworkLayout layout = NetworkLayout::shared;
  std::vector<Mlp> heads;

  std::size_t num_params() const;

  // Flat order: head by head, layer by layer, W_k column-major then b_k.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  std::string shape_string() const;
  bool same_shape(const NetworkParams& other) const;
};

/// Plain five outputs at one point.
using FieldValues = std::array<double, kNumOutputs>;

template <class J>
struct FieldSampleT {
  J ux, uy, Bx, By, p;
  double fx = 0.0, fy = 0.0;    // momentum forcing
  double sBx = 0.0, sBy = 0.0;  // magnetic source, zero for the source-free model
};

using FieldSample = FieldSampleT<Jet2>;

/// Scaled-uniform initialization: W_k ~ U(-1/sqrt(l_{k-1}), 1/sqrt(l_{k-1})),
/// b_k = 0, drawn from a 64-bit Mersenne twister seeded with `seed`.
/// Throws ShapeError unless layer_sizes = [3, ..., 5] with positive entries.
NetworkParams init_params(const std::vector<int>& layer_sizes, Activation activation,
                          std::uint64_t seed, NetworkLayout layout = NetworkLayout::shared);

/// All weights and biases zero.
NetworkParams zero_params(const std::vector<int>& layer_sizes,
                          Activation activation = Activation::tanh,
                          NetworkLayout layout = NetworkLayout::shared);

/// Single-point forward pass in Jet2 arithmetic. Forcing/source fields of the
/// returned sample are left zero.
FieldSample forward_jet(const NetworkParams& params, double x, double y, double t);

/// Single-point plain forward pass.
FieldValues forward_value(const NetworkParams& params, double x, double y, double t);

/// Records every parameter as a leaf on `tape` (index = flat position).
std::vector<TapeJet> record_params(Tape& tape, const NetworkParams& params);

/// Records one forward pass at (x, y, t) against previously recorded leaves.
FieldSampleT<TapeJet> record_forward(Tape& tape, const NetworkParams& params,
                                     std::span<const TapeJet> leaves,
                                     double x, double y, double t);

/// Batched forward/backward over jets for many points at once.
///
/// Jets are stored slot-major: a batch of P points evaluated with `slots`
/// leading jet slots (1 = values, 3 = values and spatial gradient, 7 = all)
/// is a matrix with `slots * P` columns where columns [s*P, (s+1)*P) hold
/// slot s. forward() keeps what backward() needs, so a call to backward()
/// refers to the most recent forward().
class BatchNetwork {
 public:
  explicit BatchNetwork(const NetworkParams& params);

  /// `points` is 3 x P (x, y, t rows). Returns 5 x (slots * P).
  const Eigen::MatrixXd& forward(const Eigen::Ref<const Eigen::Matrix3Xd>& points, int slots);

  /// Adds d(loss)/d(theta) into `grad` given d(loss)/d(outputs) laid out like
  /// the last forward() result.
  void backward(const Eigen::Ref<const Eigen::MatrixXd>& output_adjoint, std::span<double> grad);

  const NetworkParams& params() const { return *params_; }

 private:
  struct LayerCache {
    Eigen::MatrixXd input;  // activations entering the layer, all slots
    Eigen::MatrixXd pre;    // pre-activations, all slots
    Eigen::ArrayXXd d1, d2, d3;  // activation derivatives at pre-activation values
  };
  struct HeadCache {
    std::vector<LayerCache> layers;
    Eigen::MatrixXd output;
    std::size_t param_offset = 0;
    int out_row = 0;
  };

  const NetworkParams* params_;
  std::vector<HeadCache> heads_;
  Eigen::MatrixXd output_;
  Eigen::MatrixXd adj_a_, adj_z_;
  Eigen::VectorXd gbuf_;
  int slots_ = 0;
  Eigen::Index points_ = 0;
};

/// Values only, for many points; returns 5 x P.
Eigen::MatrixXd forward_values(const NetworkParams& params,
                               const Eigen::Ref<const Eigen::Matrix3Xd>& points);

}  // namespace mhdpinn
