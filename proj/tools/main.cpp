// fluxcube: fit, forecast, evaluate, explain and synth from the command line.
//
// Exit codes: 0 success, 1 input error, 2 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fluxcube/error.hpp"
#include "fluxcube/forecasting.hpp"
#include "fluxcube/interpret.hpp"
#include "fluxcube/mdl.hpp"
#include "fluxcube/model_io.hpp"
#include "fluxcube/synth.hpp"

namespace fs = std::filesystem;
using namespace fluxcube;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  f << body;
  if (!f) throw InputError("failed writing " + path.string());
}

struct FitArgs {
  std::string input, config, out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t threads = 0;
  bool interpolate = false;
};

int cmd_fit(const FitArgs& a) {
  TrainConfig config = a.config.empty() ? TrainConfig{} : config_from_json(read_file(a.config));
  if (a.seed_set) config.seed = a.seed;
  config.threads = a.threads;
  const ActivityTensor data = load_csv(a.input, a.interpolate);
  const SelectionResult r = fit_tensor(data, config);
  save_model(a.out, r.model);

  std::printf("%-6s %14s %14s %14s %10s %s\n", "groups", "data_bits", "model_bits", "total_bits", "nonzero_D", "accepted");
  for (const auto& c : r.trace) {
    std::printf("%-6zu %14.3f %14.3f %14.3f %10zu %s\n", c.groups, c.data_cost, c.model_cost, c.total,
                c.nonzero_diffusion, c.accepted ? "yes" : "no");
  }
  std::printf("selected %zu group(s), hidden %zu, validation mse %.6g, %zu epochs, %.1f s\n", r.model.groups(),
              r.model.report.selected_hidden, r.model.report.best_validation_mse, r.model.report.epochs_run,
              r.model.report.wall_seconds);
  for (const auto& w : r.warnings) std::printf("warning: %s\n", w.c_str());
  for (const auto& w : r.model.report.warnings) std::printf("warning: %s\n", w.c_str());
  return 0;
}

int cmd_forecast(const std::string& model_path, long horizon, const std::string& out) {
  if (horizon <= 0) throw InputError("--horizon must be positive");
  const FluxCubeModel model = load_model(model_path);
  const ForecastResult f = forecast(model, static_cast<std::size_t>(horizon));
  write_csv(out, f.denormalized);
  std::printf("wrote %zu steps x %zu locations x %zu keywords to %s\n", f.length, model.location_labels.size(),
              model.keyword_labels.size(), out.c_str());
  return 0;
}

std::vector<std::size_t> parse_horizons(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v <= 0) throw InputError("invalid horizon '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw InputError("--horizons must list at least one step count");
  return out;
}

void require_axes(const FluxCubeModel& model, const ActivityTensor& t, const std::string& what) {
  if (t.location_labels() != model.location_labels) throw InputError(what + " locations do not match the model");
  if (t.keyword_labels() != model.keyword_labels) throw InputError(what + " keywords do not match the model");
  if (t.cadence_days() != 0 && t.cadence_days() != model.cadence_days()) {
    throw InputError(what + " cadence of " + std::to_string(t.cadence_days()) + " days does not match the model's " +
                     std::to_string(model.cadence_days()));
  }
}

std::vector<Eigen::MatrixXd> denormalize_slices(std::vector<Eigen::MatrixXd> xs, const NormStats& stats) {
  for (auto& m : xs)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        m(i, j) = denormalize_value(m(i, j), stats, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  return xs;
}

struct EvalArgs {
  std::string model, truth, history, horizons = "13,26,52", out;
  bool denormalized = false;
};

int cmd_evaluate(const EvalArgs& a) {
  const FluxCubeModel model = load_model(a.model);
  const ActivityTensor truth_raw = load_csv(a.truth);
  require_axes(model, truth_raw, "truth");
  const ActivityTensor history_raw = a.history.empty() ? truth_raw : load_csv(a.history);
  require_axes(model, history_raw, "history");
  const Date last = model.time_labels.back();

  // Future part of the truth file: everything after the last modeling date.
  std::size_t first = truth_raw.steps();
  for (std::size_t t = 0; t < truth_raw.steps(); ++t) {
    if (truth_raw.time_labels()[t] > last) {
      first = t;
      break;
    }
  }
  if (first == truth_raw.steps()) throw InputError("truth has no dates after the model's last date " + format_date(last));
  if (truth_raw.time_labels()[first] != last + std::chrono::days(model.cadence_days())) {
    throw InputError("truth does not continue directly after the model's last date " + format_date(last));
  }
  const auto hist_end = history_raw.find_time(last);
  const std::size_t period = model.dynamics.seasonality.period;
  if (!hist_end || *hist_end + 1 < period) {
    throw InputError("seasonal-naive baseline needs the " + std::to_string(period) +
                     " steps up to the model's last date in the history (or truth) file");
  }
  const std::vector<std::size_t> horizons = parse_horizons(a.horizons);
  std::size_t longest = 0;
  for (std::size_t h : horizons) longest = std::max(longest, h);

  NormStats stats = model.norm;
  const ActivityTensor truth = apply_normalization(truth_raw.time_range(first, truth_raw.steps()), stats);
  const ActivityTensor history = apply_normalization(history_raw.time_range(*hist_end + 1 - period, *hist_end + 1), stats);
  const ForecastResult f = forecast(model, longest);

  std::vector<Eigen::MatrixXd> pred = slices(f.normalized), naive = seasonal_naive(history, longest, period);
  std::vector<Eigen::MatrixXd> actual = slices(truth);
  if (a.denormalized) {
    pred = slices(f.denormalized);
    naive = denormalize_slices(naive, model.norm);
    actual = slices(truth_raw.time_range(first, truth_raw.steps()));
  }
  const std::vector<NamedMetrics> tables{{"fluxcube", evaluate(pred, actual, horizons)},
                                         {"seasonal_naive", evaluate(naive, actual, horizons)}};
  write_file(a.out, metrics_csv(tables));
  fs::path json_path = a.out;
  json_path.replace_extension(".json");
  write_file(json_path, metrics_json(tables));

  std::printf("%-8s %12s %12s %12s %12s\n", "horizon", "fluxcube_rmse", "fluxcube_mae", "naive_rmse", "naive_mae");
  for (std::size_t n = 0; n < horizons.size(); ++n) {
    const auto& m = tables[0].table.horizons[n];
    const auto& b = tables[1].table.horizons[n];
    if (!m.available) {
      std::printf("%-8zu %12s %12s %12s %12s\n", m.horizon, "NA", "NA", "NA", "NA");
    } else {
      std::printf("%-8zu %12.6f %12.6f %12.6f %12.6f\n", m.horizon, m.rmse, m.mae, b.rmse, b.mae);
    }
  }
  return 0;
}

int cmd_explain(const std::string& model_path, const std::string& dir, double eps, std::size_t top) {
  const FluxCubeModel model = load_model(model_path);
  ExplainOptions options;
  options.zero_threshold = eps;
  options.flows.top_series = top;
  explain(model, dir, options);
  std::printf("wrote interactions.json, flows.json, seasonality.csv, groups.json to %s\n", dir.c_str());
  return 0;
}

struct SynthArgs {
  std::string scenario, spec, out, truth;
  std::uint64_t seed = 0;
  std::size_t steps = 416;
};

int cmd_synth(const SynthArgs& a) {
  if (a.scenario.empty() == a.spec.empty()) throw InputError("give exactly one of --scenario or --spec");
  const SynthSpec spec = a.spec.empty() ? scenario(a.scenario, a.seed, a.steps) : spec_from_json(read_file(a.spec));
  const ActivityTensor data = generate(spec);
  write_csv(a.out, data);
  fs::path truth = a.truth;
  if (truth.empty()) {
    truth = a.out;
    truth.replace_extension(".truth.json");
  }
  write_file(truth, truth_json(spec, data));
  std::printf("%s: %zu steps x %zu locations x %zu keywords -> %s (truth: %s)\n", spec.name.c_str(), data.steps(),
              data.locations(), data.keywords(), a.out.c_str(), truth.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FluxCube reaction-diffusion forecasting for time x location x keyword activity tensors"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Normalize, select the number of area groups and train");
  fit_cmd->add_option("--input", fit.input, "Long-format CSV (date,location,keyword,value)")->required();
  fit_cmd->add_option("--config", fit.config, "Training config JSON");
  fit_cmd->add_option("--out", fit.out, "Model file to write")->required();
  auto* seed_opt = fit_cmd->add_option("--seed", fit.seed, "Random seed (default 0 or the config's)");
  fit_cmd->add_option("--threads", fit.threads, "Worker threads (0: all cores)");
  fit_cmd->add_flag("--interpolate", fit.interpolate, "Linearly fill interior missing cells");

  std::string fc_model, fc_out;
  long horizon = 0;
  auto* fc_cmd = app.add_subcommand("forecast", "Roll a fitted model forward");
  fc_cmd->add_option("--model", fc_model)->required();
  fc_cmd->add_option("--horizon", horizon, "Steps to forecast")->required();
  fc_cmd->add_option("--out", fc_out, "Forecast CSV")->required();

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Score forecasts against held-out truth and the seasonal-naive baseline");
  ev_cmd->add_option("--model", ev.model)->required();
  ev_cmd->add_option("--truth", ev.truth, "CSV covering dates after the model's window")->required();
  ev_cmd->add_option("--history", ev.history, "CSV with the modeling window (default: the truth file)");
  ev_cmd->add_option("--horizons", ev.horizons, "Comma-separated step counts");
  ev_cmd->add_option("--out", ev.out, "Metric CSV; a .json twin is written next to it")->required();
  ev_cmd->add_flag("--denormalized", ev.denormalized, "Compute metrics in original units");

  std::string ex_model, ex_dir;
  double eps = kDefaultZeroThreshold;
  std::size_t top = 6;
  auto* ex_cmd = app.add_subcommand("explain", "Export interaction graphs, flows, seasonality and groups");
  ex_cmd->add_option("--model", ex_model)->required();
  ex_cmd->add_option("--out-dir", ex_dir)->required();
  ex_cmd->add_option("--zero-threshold", eps, "Coefficients with |c| <= this count as zero");
  ex_cmd->add_option("--top-series", top, "Number of per-step flow series to export");

  SynthArgs sy;
  auto* sy_cmd = app.add_subcommand("synth", "Generate a synthetic tensor from known parameters");
  sy_cmd->add_option("--scenario", sy.scenario, "One of: logistic-solo, two-group-flow, seasonal-spike, competition-pair");
  sy_cmd->add_option("--spec", sy.spec, "Spec JSON (as in a truth file's \"spec\")");
  sy_cmd->add_option("--out", sy.out, "Data CSV")->required();
  sy_cmd->add_option("--truth", sy.truth, "Truth JSON (default: <out>.truth.json)");
  sy_cmd->add_option("--seed", sy.seed, "Noise seed");
  sy_cmd->add_option("--steps", sy.steps, "Number of time steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*fit_cmd) {
      fit.seed_set = seed_opt->count() > 0;
      return cmd_fit(fit);
    }
    if (*fc_cmd) return cmd_forecast(fc_model, horizon, fc_out);
    if (*ev_cmd) return cmd_evaluate(ev);
    if (*ex_cmd) return cmd_explain(ex_model, ex_dir, eps, top);
    if (*sy_cmd) return cmd_synth(sy);
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
