#include "mhdpinn/model.hpp"

#include <algorithm>

namespace mhdpinn {

Eigen::MatrixXd NetworkModel::evaluate(const Eigen::Ref<const Eigen::Matrix3Xd>& points,
                                       int slots) const {
  const Eigen::Index P = points.cols();
  Eigen::MatrixXd out(kNumOutputs, slots * P);
  BatchNetwork net(params_);
  for (Eigen::Index begin = 0; begin < P; begin += chunk_) {
    const Eigen::Index len = std::min(chunk_, P - begin);
    const Eigen::MatrixXd& o = net.forward(points.middleCols(begin, len), slots);
    for (int s = 0; s < slots; ++s) {
      out.middleCols(s * P + begin, len) = o.middleCols(s * len, len);
    }
  }
  return out;
}

Eigen::MatrixXd PointwiseModel::evaluate(const Eigen::Ref<const Eigen::Matrix3Xd>& points,
                                         int slots) const {
  const Eigen::Index P = points.cols();
  Eigen::MatrixXd out(kNumOutputs, slots * P);
  for (Eigen::Index j = 0; j < P; ++j) {
    const FieldSample s = fn_(points(0, j), points(1, j), points(2, j));
    const Jet2* jets[kNumOutputs] = {&s.ux, &s.uy, &s.Bx, &s.By, &s.p};
    for (int f = 0; f < kNumOutputs; ++f) {
      for (int k = 0; k < slots; ++k) out(f, k * P + j) = (*jets[f])[k];
    }
  }
  return out;
}

FieldSample sample_at(const Eigen::Ref<const Eigen::MatrixXd>& out, Eigen::Index P, int slots,
                      Eigen::Index j) {
  FieldSample s;
  Jet2* jets[kNumOutputs] = {&s.ux, &s.uy, &s.Bx, &s.By, &s.p};
  for (int f = 0; f < kNumOutputs; ++f) {
    for (int k = 0; k < slots; ++k) (*jets[f])[k] = out(f, k * P + j);
  }
  return s;
}

ProblemData scale_forcing(const ProblemData& data, double delta) {
  ProblemData r = data;
  if (data.forcing) {
    Vec2Fn f = data.forcing;
    const double k = 1.0 + delta;
    r.forcing = [f, k](double x, double y, double t) {
      auto v = f(x, y, t);
      return std::array<double, 2>{k * v[0], k * v[1]};
    };
  }
  return r;
}

}  // namespace mhdpinn
