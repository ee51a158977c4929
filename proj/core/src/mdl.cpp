#include "fluxcube/mdl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fluxcube/clustering.hpp"
#include "fluxcube/error.hpp"
#include "fluxcube/training.hpp"

namespace fluxcube {

double log_star(std::size_t n) {
  if (n == 0) return 0.0;
  double bits = std::log2(2.865);
  double term = std::log2(static_cast<double>(n));
  while (term > 0.0) {
    bits += term;
    term = std::log2(term);
  }
  return bits;
}

DataCost data_cost(std::span<const double> residuals) {
  if (residuals.empty()) throw InputError("data cost needs at least one residual");
  DataCost c;
  c.count = residuals.size();
  const double n = static_cast<double>(residuals.size());
  double sum = 0.0;
  for (double r : residuals) sum += r;
  c.mean = sum / n;
  double ss = 0.0;
  for (double r : residuals) ss += (r - c.mean) * (r - c.mean);
  c.sigma = std::max(std::sqrt(ss / n), kSigmaFloor);
  const double var = c.sigma * c.sigma;
  const double norm_bits = 0.5 * std::log2(2.0 * std::numbers::pi * var);
  double bits = 0.0;
  for (double r : residuals) bits += norm_bits + (r - c.mean) * (r - c.mean) / (2.0 * var) * std::numbers::log2e;
  c.bits = bits;
  return c;
}

double model_cost(std::size_t groups, std::size_t nonzero, std::size_t modeling_steps, std::size_t keywords) {
  const double per_entry = std::log2(static_cast<double>(modeling_steps)) + 2.0 * std::log2(static_cast<double>(groups)) +
                           std::log2(static_cast<double>(keywords)) + kFloatCostBits;
  return log_star(groups) + static_cast<double>(nonzero) * per_entry + log_star(nonzero);
}

std::size_t count_nonzero_diffusion(const DiffusionNet& net, std::size_t modeling_steps) {
  if (net.inert()) return 0;
  std::size_t count = 0;
  for (const auto& d : net.materialize(modeling_steps))
    for (double v : d.values)
      if (v > kNonzeroThreshold) ++count;
  return count;
}

std::vector<double> one_step_residuals(const Dynamics& dyn, const ActivityTensor& window) {
  const std::size_t T = window.steps(), L = window.locations(), K = window.keywords();
  if (T < 2) throw InputError("residuals need at least two time steps");
  std::vector<double> out;
  out.reserve((T - 1) * L * K);
  Simulator sim(dyn, 0);
  for (std::size_t t = 0; t + 1 < T; ++t) {
    const Eigen::MatrixXd pred = sim.step(window.slice(t));
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t j = 0; j < K; ++j) out.push_back(window(t + 1, i, j) - pred(i, j));
  }
  return out;
}

MdlCost description_cost(const Dynamics& dyn, const ActivityTensor& window) {
  const auto residuals = one_step_residuals(dyn, window);
  const DataCost dc = data_cost(residuals);
  MdlCost c;
  c.groups = dyn.groups.count;
  c.data_cost = dc.bits;
  c.residual_mean = dc.mean;
  c.residual_sigma = dc.sigma;
  c.nonzero_diffusion = count_nonzero_diffusion(dyn.diffusion, window.steps());
  c.model_cost = model_cost(c.groups, c.nonzero_diffusion, window.steps(), window.keywords());
  c.total = c.data_cost + c.model_cost;
  if (!std::isfinite(c.total)) throw NumericError("description cost is not finite");
  return c;
}

SelectionResult select(const ActivityTensor& window, const TrainConfig& config) {
  config.validate();
  const std::size_t L = window.locations();
  const std::size_t cap = std::min(L, config.max_groups);
  SelectionResult out;
  bool have_model = false;
  double min_cost = std::numeric_limits<double>::infinity();
  GroupAssignment groups = GroupAssignment::single(L);
  Eigen::MatrixXd embedding;

  for (std::size_t d = 1; d <= cap; ++d) {
    if (d > 1) {
      try {
        const Embedding e = embed(out.model.dynamics.reaction);
        groups = cluster(e, d, derive_seed(config.seed, 0x5EED0000ULL + d));
        embedding = e.coords;
      } catch (const std::exception& e) {
        out.warnings.push_back("clustering into " + std::to_string(d) + " groups failed: " + e.what());
        break;
      }
    }
    FitResult fitted;
    try {
      fitted = fit(window, groups, config);
    } catch (const NumericError& e) {
      if (!have_model) throw;
      out.warnings.push_back("training with " + std::to_string(d) + " groups failed: " + e.what());
      break;
    }
    MdlCost cost = description_cost(fitted.model.dynamics, window);
    if (cost.total < min_cost) {
      cost.accepted = true;
      min_cost = cost.total;
      out.trace.push_back(cost);
      out.model = std::move(fitted.model);
      out.model.embedding = embedding;
      have_model = true;
    } else {
      out.trace.push_back(cost);
      break;
    }
  }
  out.model.selection_trace = out.trace;
  return out;
}

SelectionResult fit_tensor(const ActivityTensor& data, const TrainConfig& config) {
  if (!config.normalize) {
    SelectionResult out = select(data, config);
    out.model.norm = NormStats::identity(data.locations(), data.keywords());
    return out;
  }
  auto [window, stats] = normalize(data, data.steps());
  SelectionResult out = select(window, config);
  out.model.norm = std::move(stats);
  return out;
}

}  // namespace fluxcube
