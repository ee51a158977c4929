#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fluxcube/dynamics.hpp"
#include "fluxcube/tensor_data.hpp"

namespace fluxcube {

struct TrainConfig {
  double alpha = 0.1;  // weight of the diffusion penalty
  double beta = 0.1;   // weight of the seasonality penalty
  std::size_t max_epochs = 2000;
  std::size_t patience = 100;
  std::size_t min_epochs = 500;  // early stopping is not checked before this epoch
  double val_fraction = 0.1;
  std::vector<std::size_t> hidden_candidates{16, 32, 64};
  std::uint64_t seed = 0;
  std::size_t period = 52;

  double learning_rate = 0.03;
  double diffusion_learning_rate = 1e-3;  // Adam step size for the diffusion network's blocks
  double clip_norm = 10.0;
  DiffusionMode diffusion = DiffusionMode::recurrent;
  bool seasonality = true;
  bool normalize = true;
  std::size_t max_groups = 12;
  std::size_t threads = 0;  // 0: hardware concurrency
  // Leading epochs that train only the reaction and seasonality terms (diffusion switched off); at most max_epochs / 2.
  std::size_t diffusion_warmup = 300;

  // Throws InputError when a field is out of range.
  void validate() const;
};

struct CandidateReport {
  std::size_t hidden = 0;
  double best_validation_mse = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs = 0;
  bool failed = false;
  std::string failure;
};

struct FitReport {
  double final_training_loss = 0.0;
  double best_validation_mse = 0.0;
  std::size_t epochs_run = 0;
  std::size_t selected_hidden = 0;
  double wall_seconds = 0.0;
  // Regularizers are divided by their element counts so alpha and beta do not depend on tensor size.
  std::string regularizer_scaling = "mean";
  std::vector<CandidateReport> candidates;
  std::vector<std::string> warnings;
};

/// One evaluated candidate of the group-count search.
struct MdlCost {
  std::size_t groups = 1;
  double data_cost = 0.0;   // bits
  double model_cost = 0.0;  // bits
  double total = 0.0;
  std::size_t nonzero_diffusion = 0;
  double residual_mean = 0.0;
  double residual_sigma = 0.0;
  bool accepted = false;
};

/// A fitted model with everything needed to forecast and explain it.
struct FluxCubeModel {
  Dynamics dynamics;

  std::vector<Date> time_labels;  // modeling window
  std::vector<std::string> location_labels;
  std::vector<std::string> keyword_labels;
  NormStats norm;
  Eigen::MatrixXd last_observation;  // normalized L x K state at t_c - 1

  TrainConfig config;
  FitReport report;
  std::vector<MdlCost> selection_trace;
  // 2-D location embedding that produced `dynamics.groups` (empty for d_l = 1).
  Eigen::MatrixXd embedding;
  std::string reducer = "pca";

  std::size_t modeling_steps() const { return time_labels.size(); }
  std::size_t groups() const { return dynamics.groups.count; }
  int cadence_days() const;
};

}  // namespace fluxcube
