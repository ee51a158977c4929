#include <filesystem>
#include <random>

#include <json.hpp>

#include "doctest.h"
#include "fluxcube/error.hpp"
#include "fluxcube/forecasting.hpp"
#include "fluxcube/model_io.hpp"
#include "fluxcube/training.hpp"
#include "helpers.hpp"

using namespace fluxcube;

namespace {

void scramble(Eigen::MatrixXd& m, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 0.3);
  for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = n(rng) / 3.0;
}

FluxCubeModel sample_model() {
  const std::size_t L = 3, K = 2, T = 40;
  TrainConfig config;
  config.alpha = 0.25;
  config.hidden_candidates = {8};
  const GroupAssignment g{{0, 1, 1}, 2};
  FluxCubeModel m;
  m.dynamics = initialize_dynamics(L, K, g, 8, T, config, 77);
  std::mt19937_64 rng(3);
  auto& net = m.dynamics.diffusion;
  for (Eigen::MatrixXd* p : {&net.recurrent, &net.input, &net.bias, &net.output, &net.output_bias})
    scramble(*p, rng);
  scramble(m.dynamics.seasonality.raw, rng);
  scramble(m.dynamics.reaction.interaction, rng);
  m.dynamics.reaction.reset_diagonal();
  m.time_labels = test::weekly(T);
  m.location_labels = {"a", "b", "c"};
  m.keyword_labels = {"x", "y"};
  m.norm = NormStats::identity(L, K);
  m.norm.max[1] = 1.0 / 3.0;
  m.last_observation = Eigen::MatrixXd::Constant(L, K, 0.1 + 1e-17);
  m.config = config;
  m.embedding = Eigen::MatrixXd::Random(L, 2);
  m.selection_trace.push_back({2, 100.5, 20.25, 120.75, 4, 0.0, 0.01, true});
  return m;
}

}  // namespace

TEST_SUITE("model_io") {
  TEST_CASE("round trip is bit-identical") {
    const FluxCubeModel m = sample_model();
    const auto path = std::filesystem::temp_directory_path() / "fluxcube_model_io_test.json";
    save_model(path, m);
    const FluxCubeModel back = load_model(path);
    std::filesystem::remove(path);

    CHECK(back.dynamics.reaction.log_growth == m.dynamics.reaction.log_growth);
    CHECK(back.dynamics.reaction.interaction == m.dynamics.reaction.interaction);
    CHECK(back.dynamics.diffusion.recurrent == m.dynamics.diffusion.recurrent);
    CHECK(back.dynamics.diffusion.output == m.dynamics.diffusion.output);
    CHECK(back.dynamics.seasonality.raw == m.dynamics.seasonality.raw);
    CHECK(back.dynamics.groups.group == m.dynamics.groups.group);
    CHECK(back.last_observation == m.last_observation);
    CHECK(back.norm.max == m.norm.max);
    CHECK(back.time_labels == m.time_labels);
    CHECK(back.embedding == m.embedding);
    CHECK(back.config.alpha == 0.25);
    CHECK(model_to_json(back) == model_to_json(m));

    const auto f1 = slices(forecast(m, 20).normalized);
    const auto f2 = slices(forecast(back, 20).normalized);
    CHECK(f1 == f2);
  }

  TEST_CASE("schema version mismatch is rejected") {
    auto doc = nlohmann::json::parse(model_to_json(sample_model()));
    doc["schema_version"] = kModelSchemaVersion + 1;
    CHECK_THROWS_AS(model_from_json(doc.dump()), InputError);
    CHECK_THROWS_AS(model_from_json("{}"), InputError);
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), InputError);
  }

  TEST_CASE("config json") {
    TrainConfig c;
    c.hidden_candidates = {5, 7};
    c.diffusion = DiffusionMode::constant;
    c.seasonality = false;
    const TrainConfig back = config_from_json(config_to_json(c));
    CHECK(back.hidden_candidates == c.hidden_candidates);
    CHECK(back.diffusion == DiffusionMode::constant);
    CHECK_FALSE(back.seasonality);
    CHECK(config_to_json(back) == config_to_json(c));

    const TrainConfig partial = config_from_json(R"({"alpha": 0.3})");
    CHECK(partial.alpha == 0.3);
    CHECK(partial.beta == TrainConfig{}.beta);
    CHECK_THROWS_AS(config_from_json(R"({"alhpa": 0.3})"), InputError);
    CHECK_THROWS_AS(config_from_json(R"({"alpha": -1})"), InputError);
  }
}
