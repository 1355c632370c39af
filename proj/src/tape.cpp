#include "mhdpinn/tape.hpp"

#include <cassert>
#include <stdexcept>

namespace mhdpinn {

namespace {

// Adjoint of c = a * b for all seven slots.
void mul_adjoint(const Jet2& a, const Jet2& b, const Jet2& cb, Jet2& ab, Jet2& bb) {
  ab.val += cb.val * b.val;
  bb.val += cb.val * a.val;

  ab.dx += cb.dx * b.val;  ab.val += cb.dx * b.dx;
  bb.dx += cb.dx * a.val;  bb.val += cb.dx * a.dx;
  ab.dy += cb.dy * b.val;  ab.val += cb.dy * b.dy;
  bb.dy += cb.dy * a.val;  bb.val += cb.dy * a.dy;
  ab.dt += cb.dt * b.val;  ab.val += cb.dt * b.dt;
  bb.dt += cb.dt * a.val;  bb.val += cb.dt * a.dt;

  // dxx = a.dxx b + 2 a.dx b.dx + a b.dxx
  ab.dxx += cb.dxx * b.val;  bb.val += cb.dxx * a.dxx;
  ab.dx += 2.0 * cb.dxx * b.dx;  bb.dx += 2.0 * cb.dxx * a.dx;
  ab.val += cb.dxx * b.dxx;  bb.dxx += cb.dxx * a.val;

  // dxy = a.dxy b + a.dx b.dy + a.dy b.dx + a b.dxy
  ab.dxy += cb.dxy * b.val;  bb.val += cb.dxy * a.dxy;
  ab.dx += cb.dxy * b.dy;  bb.dy += cb.dxy * a.dx;
  ab.dy += cb.dxy * b.dx;  bb.dx += cb.dxy * a.dy;
  ab.val += cb.dxy * b.dxy;  bb.dxy += cb.dxy * a.val;

  ab.dyy += cb.dyy * b.val;  bb.val += cb.dyy * a.dyy;
  ab.dy += 2.0 * cb.dyy * b.dy;  bb.dy += 2.0 * cb.dyy * a.dy;
  ab.val += cb.dyy * b.dyy;  bb.dyy += cb.dyy * a.val;
}

// Adjoint of c = f(a) where c follows jet_compose.
void unary_adjoint(const Jet2& a, const Taylor3& d, const Jet2& cb, Jet2& ab) {
  ab.val += cb.val * d.f1;

  ab.dx += cb.dx * d.f1;  ab.val += cb.dx * d.f2 * a.dx;
  ab.dy += cb.dy * d.f1;  ab.val += cb.dy * d.f2 * a.dy;
  ab.dt += cb.dt * d.f1;  ab.val += cb.dt * d.f2 * a.dt;

  ab.val += cb.dxx * (d.f3 * a.dx * a.dx + d.f2 * a.dxx);
  ab.dx += cb.dxx * 2.0 * d.f2 * a.dx;
  ab.dxx += cb.dxx * d.f1;

  ab.val += cb.dxy * (d.f3 * a.dx * a.dy + d.f2 * a.dxy);
  ab.dx += cb.dxy * d.f2 * a.dy;
  ab.dy += cb.dxy * d.f2 * a.dx;
  ab.dxy += cb.dxy * d.f1;

  ab.val += cb.dyy * (d.f3 * a.dy * a.dy + d.f2 * a.dyy);
  ab.dy += cb.dyy * 2.0 * d.f2 * a.dy;
  ab.dyy += cb.dyy * d.f1;
}

void axpy(double k, const Jet2& x, Jet2& y) {
  for (int s = 0; s < kNumSlots; ++s) y[s] += k * x[s];
}

}  // namespace

TapeJet Tape::push(Node node) {
  nodes_.push_back(node);
  return TapeJet(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::check_owner(TapeJet a) const {
  if (a.tape_ != this || a.id_ < 0 || static_cast<std::size_t>(a.id_) >= nodes_.size()) {
    throw std::logic_error("TapeJet does not belong to this tape");
  }
}

TapeJet Tape::leaf(const Jet2& value) {
  Node n{Op::leaf};
  n.value = value;
  return push(n);
}

TapeJet Tape::param(std::size_t index, double value) {
  Node n{Op::param};
  n.k = static_cast<double>(index);
  n.value = jet_const(value);
  return push(n);
}

TapeJet Tape::add(TapeJet a, TapeJet b) {
  check_owner(a);
  check_owner(b);
  Node n{Op::add, a.id_, b.id_};
  n.value = nodes_[a.id_].value + nodes_[b.id_].value;
  return push(n);
}

TapeJet Tape::sub(TapeJet a, TapeJet b) {
  check_owner(a);
  check_owner(b);
  Node n{Op::sub, a.id_, b.id_};
  n.value = nodes_[a.id_].value - nodes_[b.id_].value;
  return push(n);
}

TapeJet Tape::neg(TapeJet a) {
  check_owner(a);
  Node n{Op::neg, a.id_};
  n.value = -nodes_[a.id_].value;
  return push(n);
}

TapeJet Tape::mul(TapeJet a, TapeJet b) {
  check_owner(a);
  check_owner(b);
  Node n{Op::mul, a.id_, b.id_};
  n.value = nodes_[a.id_].value * nodes_[b.id_].value;
  return push(n);
}

TapeJet Tape::scale(TapeJet a, double k) {
  check_owner(a);
  Node n{Op::scale, a.id_};
  n.k = k;
  n.value = k * nodes_[a.id_].value;
  return push(n);
}

TapeJet Tape::shift(TapeJet a, double k) {
  check_owner(a);
  Node n{Op::shift, a.id_};
  n.k = k;
  n.value = nodes_[a.id_].value + k;
  return push(n);
}

TapeJet Tape::unary(Elementary fn, TapeJet a, double exponent) {
  check_owner(a);
  const Jet2& x = nodes_[a.id_].value;
  Node n{Op::unary, a.id_};
  n.partials = elementary_taylor(fn, x.val, exponent);
  n.value = jet_compose(x, n.partials.f0, n.partials.f1, n.partials.f2);
  require_finite(n.value, elementary_name(fn));
  return push(n);
}

TapeJet Tape::slot(TapeJet a, Slot s) {
  check_owner(a);
  Node n{Op::slot, a.id_};
  n.k = static_cast<double>(static_cast<int>(s));
  n.value = jet_const(nodes_[a.id_].value[s]);
  return push(n);
}

std::vector<Jet2> Tape::reverse(TapeJet output) const {
  check_owner(output);
  std::vector<Jet2> adj(nodes_.size());
  adj[output.id_].val = 1.0;
  for (int i = output.id_; i >= 0; --i) {
    const Node& n = nodes_[i];
    const Jet2& cb = adj[i];
    switch (n.op) {
      case Op::leaf:
      case Op::param:
        break;
      case Op::add:
        axpy(1.0, cb, adj[n.a]);
        axpy(1.0, cb, adj[n.b]);
        break;
      case Op::sub:
        axpy(1.0, cb, adj[n.a]);
        axpy(-1.0, cb, adj[n.b]);
        break;
      case Op::neg:
        axpy(-1.0, cb, adj[n.a]);
        break;
      case Op::scale:
        axpy(n.k, cb, adj[n.a]);
        break;
      case Op::shift:
        axpy(1.0, cb, adj[n.a]);
        break;
      case Op::mul:
        // Accumulations only, so a == b aliasing is fine.
        mul_adjoint(nodes_[n.a].value, nodes_[n.b].value, cb, adj[n.a], adj[n.b]);
        break;
      case Op::unary:
        unary_adjoint(nodes_[n.a].value, n.partials, cb, adj[n.a]);
        break;
      case Op::slot:
        adj[n.a][static_cast<int>(n.k)] += cb.val;
        break;
    }
  }
  return adj;
}

void Tape::accumulate_gradient(TapeJet loss, double weight, std::span<double> grad) const {
  const std::vector<Jet2> adj = reverse(loss);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].op != Op::param) continue;
    const auto index = static_cast<std::size_t>(nodes_[i].k);
    if (index >= grad.size()) throw ShapeError("gradient buffer smaller than parameter index");
    grad[index] += weight * adj[i].val;
  }
}

std::vector<double> Tape::gradient(TapeJet loss, std::size_t num_params) const {
  std::vector<double> grad(num_params, 0.0);
  accumulate_gradient(loss, 1.0, grad);
  return grad;
}

}  // namespace mhdpinn
