#include "fluxcube/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fluxcube/error.hpp"

namespace fluxcube {

using nlohmann::json;

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from(const json& j, const char* what) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw InputError(std::string("model field '") + what + "' has inconsistent dimensions");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t n = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[n++];
  return m;
}

void require_shape(const Eigen::MatrixXd& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows() != static_cast<Eigen::Index>(rows) || m.cols() != static_cast<Eigen::Index>(cols)) {
    throw InputError(std::string("model field '") + what + "' must be " + std::to_string(rows) + " x " +
                     std::to_string(cols));
  }
}

json config_doc(const TrainConfig& c) {
  return {{"alpha", c.alpha},
          {"beta", c.beta},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"min_epochs", c.min_epochs},
          {"val_fraction", c.val_fraction},
          {"hidden_candidates", c.hidden_candidates},
          {"seed", c.seed},
          {"period", c.period},
          {"learning_rate", c.learning_rate},
          {"diffusion_learning_rate", c.diffusion_learning_rate},
          {"clip_norm", c.clip_norm},
          {"diffusion", to_string(c.diffusion)},
          {"seasonality", c.seasonality},
          {"normalize", c.normalize},
          {"max_groups", c.max_groups},
          {"threads", c.threads},
          {"diffusion_warmup", c.diffusion_warmup}};
}

TrainConfig config_from_doc(const json& doc) {
  if (!doc.is_object()) throw InputError("training config must be a JSON object");
  TrainConfig c;
  for (const auto& [key, value] : doc.items()) {
    if (key == "alpha") c.alpha = value.get<double>();
    else if (key == "beta") c.beta = value.get<double>();
    else if (key == "max_epochs") c.max_epochs = value.get<std::size_t>();
    else if (key == "patience") c.patience = value.get<std::size_t>();
    else if (key == "min_epochs") c.min_epochs = value.get<std::size_t>();
    else if (key == "val_fraction") c.val_fraction = value.get<double>();
    else if (key == "hidden_candidates") c.hidden_candidates = value.get<std::vector<std::size_t>>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "period") c.period = value.get<std::size_t>();
    else if (key == "learning_rate") c.learning_rate = value.get<double>();
    else if (key == "diffusion_learning_rate") c.diffusion_learning_rate = value.get<double>();
    else if (key == "clip_norm") c.clip_norm = value.get<double>();
    else if (key == "diffusion") c.diffusion = diffusion_mode_from_string(value.get<std::string>());
    else if (key == "seasonality") c.seasonality = value.get<bool>();
    else if (key == "normalize") c.normalize = value.get<bool>();
    else if (key == "max_groups") c.max_groups = value.get<std::size_t>();
    else if (key == "threads") c.threads = value.get<std::size_t>();
    else if (key == "diffusion_warmup") c.diffusion_warmup = value.get<std::size_t>();
    else throw InputError("unknown training config key '" + key + "'");
  }
  c.validate();
  return c;
}

json report_doc(const FitReport& r) {
  json candidates = json::array();
  for (const auto& c : r.candidates) {
    candidates.push_back({{"hidden", c.hidden},
                          {"best_validation_mse", c.best_validation_mse},
                          {"best_epoch", c.best_epoch},
                          {"epochs", c.epochs},
                          {"failed", c.failed},
                          {"failure", c.failure}});
  }
  return {{"final_training_loss", r.final_training_loss},
          {"best_validation_mse", r.best_validation_mse},
          {"epochs_run", r.epochs_run},
          {"selected_hidden", r.selected_hidden},
          {"wall_seconds", r.wall_seconds},
          {"regularizer_scaling", r.regularizer_scaling},
          {"candidates", candidates},
          {"warnings", r.warnings}};
}

FitReport report_from(const json& j) {
  FitReport r;
  r.final_training_loss = j.at("final_training_loss").get<double>();
  r.best_validation_mse = j.at("best_validation_mse").get<double>();
  r.epochs_run = j.at("epochs_run").get<std::size_t>();
  r.selected_hidden = j.at("selected_hidden").get<std::size_t>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.regularizer_scaling = j.at("regularizer_scaling").get<std::string>();
  for (const auto& c : j.at("candidates")) {
    r.candidates.push_back({c.at("hidden").get<std::size_t>(), c.at("best_validation_mse").get<double>(),
                            c.at("best_epoch").get<std::size_t>(), c.at("epochs").get<std::size_t>(),
                            c.at("failed").get<bool>(), c.at("failure").get<std::string>()});
  }
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

json trace_doc(const std::vector<MdlCost>& trace) {
  json out = json::array();
  for (const auto& c : trace) {
    out.push_back({{"d_l", c.groups},
                   {"data_cost", c.data_cost},
                   {"model_cost", c.model_cost},
                   {"total", c.total},
                   {"nonzero_diffusion", c.nonzero_diffusion},
                   {"residual_mean", c.residual_mean},
                   {"residual_sigma", c.residual_sigma},
                   {"accepted", c.accepted}});
  }
  return out;
}

std::vector<MdlCost> trace_from(const json& j) {
  std::vector<MdlCost> out;
  for (const auto& c : j) {
    MdlCost m;
    m.groups = c.at("d_l").get<std::size_t>();
    m.data_cost = c.at("data_cost").get<double>();
    m.model_cost = c.at("model_cost").get<double>();
    m.total = c.at("total").get<double>();
    m.nonzero_diffusion = c.at("nonzero_diffusion").get<std::size_t>();
    m.residual_mean = c.at("residual_mean").get<double>();
    m.residual_sigma = c.at("residual_sigma").get<double>();
    m.accepted = c.at("accepted").get<bool>();
    out.push_back(m);
  }
  return out;
}

}  // namespace

std::string config_to_json(const TrainConfig& config) { return config_doc(config).dump(2) + "\n"; }

TrainConfig config_from_json(const std::string& text) {
  try {
    return config_from_doc(json::parse(text));
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid training config: ") + e.what());
  }
}

std::string model_to_json(const FluxCubeModel& model) {
  const Dynamics& d = model.dynamics;
  std::vector<std::string> dates;
  for (Date t : model.time_labels) dates.push_back(format_date(t));
  std::vector<int> constant(model.norm.constant.begin(), model.norm.constant.end());
  json doc{
      {"schema_version", kModelSchemaVersion},
      {"locations", model.location_labels},
      {"keywords", model.keyword_labels},
      {"time_labels", dates},
      {"normalization",
       {{"min", model.norm.min},
        {"max", model.norm.max},
        {"constant", constant},
        {"window_end", model.norm.window_end},
        {"clamp_limit", model.norm.clamp_limit},
        {"clamped", model.norm.clamped}}},
      {"groups", {{"count", d.groups.count}, {"assignment", d.groups.group}}},
      {"reaction",
       {{"log_growth", matrix_json(d.reaction.log_growth)},
        {"log_capacity", matrix_json(d.reaction.log_capacity)},
        {"interaction", matrix_json(d.reaction.interaction)}}},
      {"diffusion",
       {{"mode", to_string(d.diffusion.mode)},
        {"hidden", d.diffusion.hidden},
        {"time_scale", d.diffusion.time_scale},
        {"period", d.diffusion.period},
        {"recurrent", matrix_json(d.diffusion.recurrent)},
        {"input", matrix_json(d.diffusion.input)},
        {"bias", matrix_json(d.diffusion.bias)},
        {"output", matrix_json(d.diffusion.output)},
        {"output_bias", matrix_json(d.diffusion.output_bias)},
        {"constant_raw", matrix_json(d.diffusion.constant_raw)}}},
      {"seasonality",
       {{"period", d.seasonality.period}, {"enabled", d.seasonality.enabled}, {"raw", matrix_json(d.seasonality.raw)}}},
      {"last_observation", matrix_json(model.last_observation)},
      {"config", config_doc(model.config)},
      {"report", report_doc(model.report)},
      {"selection_trace", trace_doc(model.selection_trace)},
      {"embedding", matrix_json(model.embedding)},
      {"reducer", model.reducer}};
  return doc.dump(2) + "\n";
}

FluxCubeModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kModelSchemaVersion) {
      throw InputError("model schema version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kModelSchemaVersion) + ")");
    }
    FluxCubeModel m;
    m.location_labels = doc.at("locations").get<std::vector<std::string>>();
    m.keyword_labels = doc.at("keywords").get<std::vector<std::string>>();
    for (const auto& s : doc.at("time_labels")) m.time_labels.push_back(parse_date(s.get<std::string>()));
    const std::size_t L = m.location_labels.size(), K = m.keyword_labels.size();
    if (L == 0 || K == 0) throw InputError("model has empty axes");

    const json& n = doc.at("normalization");
    m.norm.locations = L;
    m.norm.keywords = K;
    m.norm.min = n.at("min").get<std::vector<double>>();
    m.norm.max = n.at("max").get<std::vector<double>>();
    for (int c : n.at("constant").get<std::vector<int>>()) m.norm.constant.push_back(c != 0);
    m.norm.window_end = n.at("window_end").get<std::size_t>();
    m.norm.clamp_limit = n.at("clamp_limit").get<double>();
    m.norm.clamped = n.at("clamped").get<std::size_t>();
    if (m.norm.min.size() != L * K || m.norm.max.size() != L * K || m.norm.constant.size() != L * K) {
      throw InputError("normalization statistics must have L * K entries");
    }

    Dynamics& d = m.dynamics;
    d.groups.count = doc.at("groups").at("count").get<std::size_t>();
    d.groups.group = doc.at("groups").at("assignment").get<std::vector<std::size_t>>();
    d.groups.validate(L);

    const json& r = doc.at("reaction");
    d.reaction = ReactionParams(L, K);
    d.reaction.log_growth = matrix_from(r.at("log_growth"), "log_growth");
    d.reaction.log_capacity = matrix_from(r.at("log_capacity"), "log_capacity");
    d.reaction.interaction = matrix_from(r.at("interaction"), "interaction");
    require_shape(d.reaction.log_growth, L, K, "log_growth");
    require_shape(d.reaction.log_capacity, L, K, "log_capacity");
    require_shape(d.reaction.interaction, L * K, K, "interaction");

    const json& f = doc.at("diffusion");
    d.diffusion = DiffusionNet(f.at("hidden").get<std::size_t>(), d.groups.count, K, f.at("time_scale").get<double>(),
                               f.at("period").get<double>(), diffusion_mode_from_string(f.at("mode").get<std::string>()));
    const std::size_t h = d.diffusion.hidden, out = d.diffusion.outputs();
    d.diffusion.recurrent = matrix_from(f.at("recurrent"), "recurrent");
    d.diffusion.input = matrix_from(f.at("input"), "input");
    d.diffusion.bias = matrix_from(f.at("bias"), "bias");
    d.diffusion.output = matrix_from(f.at("output"), "output");
    d.diffusion.output_bias = matrix_from(f.at("output_bias"), "output_bias");
    d.diffusion.constant_raw = matrix_from(f.at("constant_raw"), "constant_raw");
    require_shape(d.diffusion.recurrent, h, h, "recurrent");
    require_shape(d.diffusion.input, DiffusionNet::kFeatures, h, "input");
    require_shape(d.diffusion.bias, 1, h, "bias");
    require_shape(d.diffusion.output, h, out, "output");
    require_shape(d.diffusion.output_bias, 1, out, "output_bias");
    require_shape(d.diffusion.constant_raw, 1, out, "constant_raw");

    const json& s = doc.at("seasonality");
    d.seasonality.period = s.at("period").get<std::size_t>();
    d.seasonality.locations = L;
    d.seasonality.keywords = K;
    d.seasonality.enabled = s.at("enabled").get<bool>();
    d.seasonality.raw = matrix_from(s.at("raw"), "seasonality");
    require_shape(d.seasonality.raw, d.seasonality.period, L * K, "seasonality");
    d.validate();

    m.last_observation = matrix_from(doc.at("last_observation"), "last_observation");
    require_shape(m.last_observation, L, K, "last_observation");
    m.config = config_from_doc(doc.at("config"));
    m.report = report_from(doc.at("report"));
    m.selection_trace = trace_from(doc.at("selection_trace"));
    m.embedding = matrix_from(doc.at("embedding"), "embedding");
    m.reducer = doc.at("reducer").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const FluxCubeModel& model) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write model file " + path.string());
  f << model_to_json(model);
  if (!f) throw InputError("failed writing model file " + path.string());
}

FluxCubeModel load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read model file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace fluxcube
