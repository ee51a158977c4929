#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fluxcube/adam.hpp"
#include "fluxcube/autodiff.hpp"
#include "fluxcube/model.hpp"

namespace fluxcube {

struct LossValue {
  double total = 0.0;
  double mse = 0.0;                 // training transitions
  double diffusion_penalty = 0.0;   // alpha-weighted
  double seasonal_penalty = 0.0;    // beta-weighted
  double validation_mse = 0.0;      // held-out tail; equals mse when there is no tail
  std::size_t train_steps = 0;
  std::size_t validation_steps = 0;
};

// Trainable blocks of `dyn` in a fixed order: reaction, seasonality (if enabled), diffusion (if not inert).
std::vector<ParamBlock> parameter_blocks(Dynamics& dyn);

/// Teacher-forced one-step loss over a modeling window.
///
/// Transition t maps the observed slice x_t to a prediction of x_{t+1}, for
/// t = 0 .. T-2. The first `train_steps` transitions enter the loss; the rest
/// only contribute to the validation MSE. Shapes, groups and the diffusion
/// mode are fixed at construction; parameter values are read per call.
class LossFunction {
 public:
  LossFunction(const ActivityTensor& window, const Dynamics& structure, double alpha, double beta,
               std::size_t train_steps);

  LossValue evaluate(const Dynamics& dyn) const;
  // Also fills grads in parameter_blocks() order.
  LossValue evaluate(const Dynamics& dyn, std::vector<Eigen::MatrixXd>& grads) const;

  std::size_t transitions() const { return transitions_; }

 private:
  LossValue run(const Dynamics& dyn, std::vector<Eigen::MatrixXd>* grads) const;

  std::size_t locations_, keywords_, groups_, transitions_, train_steps_;
  double alpha_, beta_;
  std::vector<Eigen::MatrixXd> inputs_;   // per location, transitions x K
  std::vector<Eigen::MatrixXd> targets_;  // per location, transitions x K
  std::vector<Eigen::MatrixXd> means_;    // per group, transitions x K
  std::vector<std::size_t> group_of_;
  Eigen::MatrixXd features_;              // transitions x 3
  std::vector<Eigen::Index> phases_;
  mutable autodiff::Tape tape_;
};

// Loss of `model` over the whole window (no validation tail).
LossValue loss(const Dynamics& dyn, const ActivityTensor& window, double alpha, double beta);

// Seeded initial parameters for the given structure.
Dynamics initialize_dynamics(std::size_t locations, std::size_t keywords, const GroupAssignment& groups,
                             std::size_t hidden, std::size_t modeling_steps, const TrainConfig& config,
                             std::uint64_t seed);

struct CandidateResult {
  CandidateReport report;
  Dynamics dynamics;
  double training_loss = 0.0;
};

// Lowest validation MSE among non-failed candidates; earlier entries win ties.
// Throws NumericError when every candidate failed.
std::size_t pick_candidate(std::span<const CandidateResult> candidates);

struct FitResult {
  FluxCubeModel model;
  FitReport report;
};

/// Fit every hidden-size candidate with Adam and early stopping and keep the
/// best-validation snapshot. `window` should be normalized; its labels are
/// copied into the model with identity normalization stats.
FitResult fit(const ActivityTensor& window, const GroupAssignment& groups, const TrainConfig& config);

// Mixes a base seed with a stream id (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace fluxcube
