#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fluxcube {

/// A named, externally owned parameter matrix.
struct ParamBlock {
  std::string name;
  Eigen::MatrixXd* value = nullptr;
  double learning_rate_scale = 1.0;  // multiplies AdamOptions::learning_rate for this block
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::size_t step = 0;
  std::vector<Eigen::MatrixXd> first_moment;
  std::vector<Eigen::MatrixXd> second_moment;
};

// Bias-corrected Adam update applied in place. Moments are created on the
// first call. Throws NumericError naming the block if a gradient is not finite.
void adam_step(std::span<const ParamBlock> params, std::span<const Eigen::MatrixXd> grads, AdamState& state);

// Rescales grads so their joint L2 norm is at most max_norm. Returns the norm before clipping.
double clip_global_norm(std::span<Eigen::MatrixXd> grads, double max_norm);

}  // namespace fluxcube
