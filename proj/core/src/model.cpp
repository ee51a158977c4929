#include "fluxcube/model.hpp"

#include "fluxcube/error.hpp"

namespace fluxcube {

void TrainConfig::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw InputError("alpha and beta must be non-negative");
  if (!(val_fraction >= 0.0 && val_fraction < 0.5)) throw InputError("val_fraction must lie in [0, 0.5)");
  if (hidden_candidates.empty()) throw InputError("hidden_candidates must not be empty");
  for (std::size_t h : hidden_candidates)
    if (h == 0) throw InputError("hidden sizes must be positive");
  if (max_epochs == 0) throw InputError("max_epochs must be positive");
  if (patience == 0) throw InputError("patience must be positive");
  if (period == 0) throw InputError("period must be at least 1");
  if (!(learning_rate > 0.0)) throw InputError("learning_rate must be positive");
  if (!(diffusion_learning_rate > 0.0)) throw InputError("diffusion_learning_rate must be positive");
  if (!(clip_norm > 0.0)) throw InputError("clip_norm must be positive");
  if (max_groups == 0) throw InputError("max_groups must be at least 1");
}

int FluxCubeModel::cadence_days() const {
  if (time_labels.size() < 2) return 7;
  return static_cast<int>((time_labels[1] - time_labels[0]).count());
}

}  // namespace fluxcube
