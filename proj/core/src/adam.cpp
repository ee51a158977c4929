#include "fluxcube/adam.hpp"

#include <cmath>

#include "fluxcube/error.hpp"

namespace fluxcube {

void adam_step(std::span<const ParamBlock> params, std::span<const Eigen::MatrixXd> grads, AdamState& state) {
  if (params.size() != grads.size()) throw InputError("adam: parameter and gradient counts differ");
  for (std::size_t b = 0; b < params.size(); ++b) {
    const Eigen::MatrixXd& p = *params[b].value;
    if (grads[b].rows() != p.rows() || grads[b].cols() != p.cols()) {
      throw InputError("adam: gradient shape mismatch for '" + params[b].name + "'");
    }
    if (!grads[b].allFinite()) throw NumericError("non-finite gradient in parameter block '" + params[b].name + "'");
  }
  if (state.first_moment.size() != params.size()) {
    state.first_moment.clear();
    state.second_moment.clear();
    for (const auto& p : params) {
      state.first_moment.push_back(Eigen::MatrixXd::Zero(p.value->rows(), p.value->cols()));
      state.second_moment.push_back(Eigen::MatrixXd::Zero(p.value->rows(), p.value->cols()));
    }
  }
  ++state.step;
  const auto& o = state.options;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = state.first_moment[b];
    auto& v = state.second_moment[b];
    m = o.beta1 * m + (1.0 - o.beta1) * grads[b];
    v = o.beta2 * v + (1.0 - o.beta2) * grads[b].cwiseAbs2();
    params[b].value->array() -= o.learning_rate * params[b].learning_rate_scale * (m.array() / c1) / ((v.array() / c2).sqrt() + o.epsilon);
  }
}

double clip_global_norm(std::span<Eigen::MatrixXd> grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& g : grads) g *= s;
  }
  return norm;
}

}  // namespace fluxcube
