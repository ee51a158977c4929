#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fluxcube/model.hpp"

namespace fluxcube {

struct ForecastResult {
  ActivityTensor normalized;    // l_f x L x K, future dates continuing the cadence
  ActivityTensor denormalized;  // same, mapped back through NormStats
  std::size_t start = 0;        // t_c: global index of the first forecast step
  std::size_t length = 0;       // l_f
};

/// Warm the recurrent state with a teacher-forced pass over `history`, then
/// roll out `steps` predictions autoregressively from its last slice.
ForecastResult forecast(const FluxCubeModel& model, const ActivityTensor& history, std::size_t steps);
// Same, starting from the model's stored last observation.
ForecastResult forecast(const FluxCubeModel& model, std::size_t steps);

// Repeat the last observed seasonal cycle: step m copies x[t_c - p + (m mod p)].
std::vector<Eigen::MatrixXd> seasonal_naive(const ActivityTensor& history, std::size_t steps, std::size_t period);

struct HorizonMetrics {
  std::size_t horizon = 0;
  bool available = false;
  double rmse = 0.0;
  double mae = 0.0;
};

struct MetricTable {
  std::vector<HorizonMetrics> horizons;
  std::vector<HorizonMetrics> per_step;  // horizon field = step number (1-based), errors of that step only
};

/// Cumulative RMSE/MAE over the first n steps for each horizon n. Horizons
/// longer than the shorter of the two sequences are reported unavailable.
MetricTable evaluate(const std::vector<Eigen::MatrixXd>& predictions, const std::vector<Eigen::MatrixXd>& truth,
                     const std::vector<std::size_t>& horizons = {13, 26, 52});

std::vector<Eigen::MatrixXd> slices(const ActivityTensor& tensor);

struct NamedMetrics {
  std::string model;
  MetricTable table;
};

// `horizon,metric,value` rows; metric is "<model>_rmse" / "<model>_mae"; unavailable values are "NA".
std::string metrics_csv(const std::vector<NamedMetrics>& tables);
std::string metrics_json(const std::vector<NamedMetrics>& tables);

}  // namespace fluxcube
