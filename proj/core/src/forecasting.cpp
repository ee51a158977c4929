#include "fluxcube/forecasting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "fluxcube/error.hpp"

namespace fluxcube {

namespace {

void require_axes(const FluxCubeModel& model, const ActivityTensor& tensor) {
  if (tensor.location_labels() != model.location_labels) throw InputError("location labels do not match the model");
  if (tensor.keyword_labels() != model.keyword_labels) throw InputError("keyword labels do not match the model");
}

ForecastResult package(const FluxCubeModel& model, std::vector<Eigen::MatrixXd> preds, Date last, std::size_t start) {
  const std::size_t L = model.location_labels.size(), K = model.keyword_labels.size();
  const std::size_t n = preds.size();
  std::vector<Date> dates;
  std::vector<double> norm(n * L * K), raw(n * L * K);
  const int cadence = model.cadence_days();
  for (std::size_t m = 0; m < n; ++m) {
    dates.push_back(last + std::chrono::days(static_cast<long>(cadence) * static_cast<long>(m + 1)));
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < K; ++j) {
        const double v = preds[m](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        norm[(m * L + i) * K + j] = v;
        raw[(m * L + i) * K + j] = denormalize_value(v, model.norm, i, j);
      }
    }
  }
  ForecastResult r;
  r.normalized = ActivityTensor(dates, model.location_labels, model.keyword_labels, std::move(norm), false);
  r.denormalized = ActivityTensor(std::move(dates), model.location_labels, model.keyword_labels, std::move(raw), false);
  r.start = start;
  r.length = n;
  return r;
}

std::vector<Eigen::MatrixXd> roll_forward(Simulator& sim, Eigen::MatrixXd x, std::size_t steps) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(steps);
  for (std::size_t m = 0; m < steps; ++m) {
    Eigen::MatrixXd next = sim.step(x).cwiseMax(0.0).cwiseMin(kStateClamp);
    if (!next.allFinite()) throw NumericError("forecast produced non-finite values at step " + std::to_string(m + 1));
    out.push_back(next);
    x = std::move(next);
  }
  return out;
}

}  // namespace

ForecastResult forecast(const FluxCubeModel& model, const ActivityTensor& history, std::size_t steps) {
  require_axes(model, history);
  if (history.steps() == 0) throw InputError("forecast needs a non-empty history");
  if (steps == 0) throw InputError("forecast horizon must be at least 1");
  Simulator sim(model.dynamics, 0);
  const std::size_t T = history.steps();
  for (std::size_t t = 0; t + 1 < T; ++t) sim.step(history.slice(t));
  auto preds = roll_forward(sim, history.slice(T - 1), steps);
  return package(model, std::move(preds), history.time_labels().back(), T);
}

ForecastResult forecast(const FluxCubeModel& model, std::size_t steps) {
  if (steps == 0) throw InputError("forecast horizon must be at least 1");
  const std::size_t T = model.modeling_steps();
  if (T == 0 || model.last_observation.size() == 0) throw InputError("model has no stored history");
  // The recurrent state depends on time only, so advancing it needs no observations.
  Simulator sim(model.dynamics, 0);
  for (std::size_t t = 0; t + 1 < T; ++t) sim.step(model.last_observation);
  auto preds = roll_forward(sim, model.last_observation, steps);
  return package(model, std::move(preds), model.time_labels.back(), T);
}

std::vector<Eigen::MatrixXd> seasonal_naive(const ActivityTensor& history, std::size_t steps, std::size_t period) {
  const std::size_t T = history.steps();
  if (period == 0 || T < period) throw InputError("seasonal-naive baseline needs at least one full period of history");
  std::vector<Eigen::MatrixXd> out;
  out.reserve(steps);
  for (std::size_t m = 0; m < steps; ++m) out.push_back(history.slice(T - period + (m % period)));
  return out;
}

std::vector<Eigen::MatrixXd> slices(const ActivityTensor& tensor) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(tensor.steps());
  for (std::size_t t = 0; t < tensor.steps(); ++t) out.push_back(tensor.slice(t));
  return out;
}

MetricTable evaluate(const std::vector<Eigen::MatrixXd>& predictions, const std::vector<Eigen::MatrixXd>& truth,
                     const std::vector<std::size_t>& horizons) {
  const std::size_t n = std::min(predictions.size(), truth.size());
  MetricTable table;
  std::vector<double> sq(n), ab(n), cells(n);
  for (std::size_t s = 0; s < n; ++s) {
    if (predictions[s].rows() != truth[s].rows() || predictions[s].cols() != truth[s].cols()) {
      throw InputError("prediction and truth shapes differ at step " + std::to_string(s + 1));
    }
    const Eigen::ArrayXXd e = predictions[s].array() - truth[s].array();
    sq[s] = e.square().sum();
    ab[s] = e.abs().sum();
    cells[s] = static_cast<double>(e.size());
    table.per_step.push_back({s + 1, true, std::sqrt(sq[s] / cells[s]), ab[s] / cells[s]});
  }
  for (std::size_t h : horizons) {
    HorizonMetrics m;
    m.horizon = h;
    if (h == 0 || h > n) {
      table.horizons.push_back(m);
      continue;
    }
    double s2 = 0.0, s1 = 0.0, c = 0.0;
    for (std::size_t s = 0; s < h; ++s) {
      s2 += sq[s];
      s1 += ab[s];
      c += cells[s];
    }
    m.available = true;
    m.rmse = std::sqrt(s2 / c);
    m.mae = s1 / c;
    table.horizons.push_back(m);
  }
  return table;
}

std::string metrics_csv(const std::vector<NamedMetrics>& tables) {
  std::string out = "horizon,metric,value\n";
  char buf[64];
  for (const auto& t : tables) {
    for (const auto& h : t.table.horizons) {
      for (const char* which : {"rmse", "mae"}) {
        out += std::to_string(h.horizon) + "," + t.model + "_" + which + ",";
        if (h.available) {
          std::snprintf(buf, sizeof(buf), "%.10g", which[0] == 'r' ? h.rmse : h.mae);
          out += buf;
        } else {
          out += "NA";
        }
        out += "\n";
      }
    }
  }
  return out;
}

std::string metrics_json(const std::vector<NamedMetrics>& tables) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& t : tables) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& h : t.table.horizons) {
      nlohmann::json row{{"horizon", h.horizon}, {"available", h.available}};
      row["rmse"] = h.available ? nlohmann::json(h.rmse) : nlohmann::json(nullptr);
      row["mae"] = h.available ? nlohmann::json(h.mae) : nlohmann::json(nullptr);
      rows.push_back(row);
    }
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : t.table.per_step) steps.push_back({{"step", s.horizon}, {"rmse", s.rmse}, {"mae", s.mae}});
    doc[t.model] = {{"horizons", rows}, {"per_step", steps}};
  }
  return doc.dump(2) + "\n";
}

}  // namespace fluxcube
