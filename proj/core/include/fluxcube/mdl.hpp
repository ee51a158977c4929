#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fluxcube/model.hpp"

namespace fluxcube {

inline constexpr double kFloatCostBits = 32.0;
inline constexpr double kNonzeroThreshold = 1e-6;
inline constexpr double kSigmaFloor = 1e-6;

// Universal integer code length in bits: log2(2.865) plus every positive
// iterated log2 term. log_star(0) is 0.
double log_star(std::size_t n);

struct DataCost {
  double bits = 0.0;
  double mean = 0.0;
  double sigma = 0.0;
  std::size_t count = 0;
};

// Gaussian code length of the residuals under their maximum-likelihood mean and
// standard deviation (sigma floored at 1e-6), in bits.
DataCost data_cost(std::span<const double> residuals);

// log*(d_l) + |D| (log2 t_c + 2 log2 d_l + log2 K + c_F) + log*(|D|)
double model_cost(std::size_t groups, std::size_t nonzero, std::size_t modeling_steps, std::size_t keywords);

// Entries of D^0 .. D^{t_c - 1} above the nonzero threshold.
std::size_t count_nonzero_diffusion(const DiffusionNet& net, std::size_t modeling_steps);

// Teacher-forced one-step errors x_{t+1} - prediction over the whole window.
std::vector<double> one_step_residuals(const Dynamics& dyn, const ActivityTensor& window);

MdlCost description_cost(const Dynamics& dyn, const ActivityTensor& window);

struct SelectionResult {
  FluxCubeModel model;
  std::vector<MdlCost> trace;
  std::vector<std::string> warnings;
};

/// Group-count search: start from one group, and while the total description
/// cost keeps dropping, cluster locations on the last accepted model's reaction
/// parameters into one more group and retrain. Returns the last accepted model.
SelectionResult select(const ActivityTensor& window, const TrainConfig& config);

/// Full pipeline on raw data: min-max normalize over the whole window (unless
/// config.normalize is false), run select(), and attach the normalization.
SelectionResult fit_tensor(const ActivityTensor& data, const TrainConfig& config);

}  // namespace fluxcube
