#pragma once

// Reverse-mode recording over Jet2 values.
//
// Every node stores its Jet2 value; the reverse sweep propagates an adjoint
// per jet slot, so a scalar loss assembled from derivative slots (residuals
// that contain u_xx, B_xy, ...) can be differentiated with respect to the
// parameter leaves. This is reverse-over-forward with the forward part
// carried in the jet arithmetic itself.
//
// A Tape is single-writer. Use one tape per worker thread.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mhdpinn/jet.hpp"

namespace mhdpinn {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape
/// that created it is alive and has not been cleared.
class TapeJet {
 public:
  TapeJet() = default;

  const Jet2& value() const;
  int id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  TapeJet(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  enum class Op : std::uint8_t {
    leaf, param, add, sub, neg, mul, scale, shift, unary, slot
  };

  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double k = 0.0;        // scale factor, shift, slot index or param index
    Taylor3 partials{};    // unary ops: f, f', f'', f''' at the operand value
    Jet2 value{};
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf carrying a fixed jet (an input seed or a constant). Its adjoint
  /// can be read back after the sweep.
  TapeJet leaf(const Jet2& value);

  /// Parameter leaf: a jet constant in (x, y, t) whose value slot is the
  /// parameter `index`.
  TapeJet param(std::size_t index, double value);

  TapeJet add(TapeJet a, TapeJet b);
  TapeJet sub(TapeJet a, TapeJet b);
  TapeJet neg(TapeJet a);
  TapeJet mul(TapeJet a, TapeJet b);
  TapeJet scale(TapeJet a, double k);
  TapeJet shift(TapeJet a, double k);
  TapeJet unary(Elementary fn, TapeJet a, double exponent = 0.0);

  /// The jet constant whose value is slot `s` of `a`.
  TapeJet slot(TapeJet a, Slot s);

  const Jet2& value(TapeJet a) const { return nodes_[a.id_].value; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

  /// Adjoints d(output.val)/d(node slot) for every node recorded up to and
  /// including `output`. Nodes after `output` get zero adjoints.
  std::vector<Jet2> reverse(TapeJet output) const;

  /// d(loss.val)/d(theta_i) for i in [0, num_params). Parameters that were
  /// never recorded on this tape get gradient 0.
  std::vector<double> gradient(TapeJet loss, std::size_t num_params) const;

  /// Adds the gradient into `grad` (which must be large enough).
  void accumulate_gradient(TapeJet loss, double weight, std::span<double> grad) const;

 private:
  TapeJet push(Node node);
  void check_owner(TapeJet a) const;

  std::vector<Node> nodes_;
};

inline const Jet2& TapeJet::value() const { return tape_->value(*this); }

inline TapeJet operator+(TapeJet a, TapeJet b) { return a.tape()->add(a, b); }
inline TapeJet operator-(TapeJet a, TapeJet b) { return a.tape()->sub(a, b); }
inline TapeJet operator-(TapeJet a) { return a.tape()->neg(a); }
inline TapeJet operator*(TapeJet a, TapeJet b) { return a.tape()->mul(a, b); }
inline TapeJet operator*(double k, TapeJet a) { return a.tape()->scale(a, k); }
inline TapeJet operator*(TapeJet a, double k) { return a.tape()->scale(a, k); }
inline TapeJet operator+(TapeJet a, double k) { return a.tape()->shift(a, k); }
inline TapeJet operator+(double k, TapeJet a) { return a.tape()->shift(a, k); }
inline TapeJet operator-(TapeJet a, double k) { return a.tape()->shift(a, -k); }
inline TapeJet operator-(double k, TapeJet a) { return a.tape()->shift(a.tape()->neg(a), k); }
inline TapeJet operator/(TapeJet a, TapeJet b) {
  return a.tape()->mul(a, b.tape()->unary(Elementary::recip, b));
}
inline TapeJet operator/(TapeJet a, double k) {
  if (k == 0.0) throw DomainError("division of a jet by zero");
  return a.tape()->scale(a, 1.0 / k);
}
inline TapeJet& operator+=(TapeJet& a, TapeJet b) { return a = a + b; }

inline TapeJet tanh(TapeJet a) { return a.tape()->unary(Elementary::tanh, a); }
inline TapeJet sin(TapeJet a) { return a.tape()->unary(Elementary::sin, a); }
inline TapeJet cos(TapeJet a) { return a.tape()->unary(Elementary::cos, a); }
inline TapeJet exp(TapeJet a) { return a.tape()->unary(Elementary::exp, a); }
inline TapeJet pow(TapeJet a, double p) { return a.tape()->unary(Elementary::pow, a, p); }
inline TapeJet apply(Elementary fn, TapeJet a, double exponent = 0.0) {
  return a.tape()->unary(fn, a, exponent);
}

inline TapeJet slot(TapeJet a, Slot s) { return a.tape()->slot(a, s); }

}  // namespace mhdpinn
