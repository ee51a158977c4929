#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "doctest.h"
#include "fluxcube/error.hpp"
#include "fluxcube/interpret.hpp"
#include "helpers.hpp"

using namespace fluxcube;

namespace {

FluxCubeModel model_with(std::size_t L, std::size_t K, const GroupAssignment& groups, std::size_t T) {
  FluxCubeModel m;
  m.dynamics.reaction = ReactionParams(L, K);
  m.dynamics.groups = groups;
  m.dynamics.diffusion = DiffusionNet(4, groups.count, K, static_cast<double>(T), 52.0, DiffusionMode::constant);
  m.dynamics.seasonality = SeasonalityMatrix(52, L, K, -800.0);
  m.time_labels = test::weekly(T, "2015-01-04");
  m.location_labels = test::labels("loc", L);
  m.keyword_labels = test::labels("kw", K);
  m.norm = NormStats::identity(L, K);
  return m;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("interpret") {
  TEST_CASE("sign grid") {
    using R = Relationship;
    // Positive coupling suppresses the partner's growth.
    CHECK(classify_pair(0.5, 0.4) == R::competitive);
    CHECK(classify_pair(-0.5, -0.4) == R::mutualistic);
    CHECK(classify_pair(0.5, -0.4) == R::parasitic);
    CHECK(classify_pair(-0.5, 0.4) == R::parasitic);
    CHECK(classify_pair(-0.5, 0.01) == R::commensal);
    CHECK(classify_pair(0.0, -0.3) == R::commensal);
    CHECK(classify_pair(0.02, -0.03) == R::none);
    CHECK(classify_pair(0.5, 0.0) == R::unclassified);
    CHECK(classify_pair(0.0, 0.5) == R::unclassified);
    CHECK(classify_pair(0.05, 0.05) == R::none);  // threshold is inclusive
    CHECK(classify_pair(0.06, 0.06, 0.1) == R::none);
    CHECK(std::string(to_string(R::parasitic)) == "parasitic");
  }

  TEST_CASE("relationship graph lists both directions") {
    Eigen::MatrixXd c(3, 3);
    c << 1, 0.4, 0, 0.3, 1, -0.2, 0, 0.2, 1;
    const RelationshipGraph g = classify_relationships(c);
    REQUIRE(g.edges.size() == 6);
    CHECK(g.edges[0].target == 0);
    CHECK(g.edges[0].source == 1);
    CHECK(g.edges[0].type == Relationship::competitive);
    CHECK(g.edges[0].intensity == doctest::Approx(0.4));
    CHECK(g.edges[3].target == 1);
    CHECK(g.edges[3].source == 2);
    CHECK(g.edges[3].type == Relationship::parasitic);
    CHECK(g.edges[3].sign == -1);
  }

  TEST_CASE("flows") {
    SUBCASE("one group has no flows") {
      const FluxCubeModel m = model_with(3, 2, GroupAssignment::single(3), 104);
      const FlowSummary s = summarize_flows(m);
      CHECK(s.flows.empty());
      CHECK(s.buckets.size() == 2);
    }
    SUBCASE("constant diffusion averages to itself") {
      FluxCubeModel m = model_with(2, 1, GroupAssignment::singletons(2), 104);
      m.dynamics.diffusion.constant_raw << 0.0, 0.5, 0.0, 0.0;  // D(0, 1, 0)
      const FlowSummary s = summarize_flows(m);
      REQUIRE(s.buckets.size() == 2);
      CHECK(s.buckets[1].label == "2016-01-03");
      REQUIRE(s.flows.size() == 4);
      for (const auto& f : s.flows) {
        if (f.source == 1 && f.destination == 0) CHECK(f.mean == doctest::Approx(0.5));
        else CHECK(f.mean == 0.0);
      }
      REQUIRE_FALSE(s.series.empty());
      CHECK(s.series[0].source == 1);
      CHECK(s.series[0].values.size() == 104);

      FlowOptions full;
      full.aggregation = FlowAggregation::full;
      CHECK(summarize_flows(m, full).buckets.size() == 1);
      CHECK_THROWS_AS(summarize_flows(m, 0, 120), InputError);
      full.allow_forecast_period = true;
      CHECK(summarize_flows(m, 100, 120, full).flows.size() == 2);
    }
  }

  TEST_CASE("seasonal profile labels") {
    FluxCubeModel m = model_with(1, 1, GroupAssignment::single(1), 60);
    m.dynamics.seasonality.raw(9, 0) = std::log(std::expm1(0.5));
    const SeasonalProfile p = seasonal_profile(m, "loc0", "kw0");
    REQUIRE(p.values.size() == 52);
    CHECK(p.labels[0] == "W01");
    CHECK(p.labels[9] == "W10");
    CHECK(p.values[9] == doctest::Approx(0.5));
    CHECK(p.values[0] == 0.0);
    CHECK_THROWS_AS(seasonal_profile(m, "nowhere", "kw0"), InputError);
  }

  TEST_CASE("explain writes its four artifacts") {
    FluxCubeModel m = model_with(2, 2, GroupAssignment::singletons(2), 60);
    Eigen::MatrixXd c(2, 2);
    c << 1.0, 0.4, -0.3, 1.0;
    m.dynamics.reaction.set_coupling_matrix(1, c);
    const auto dir = std::filesystem::temp_directory_path() / "fluxcube_explain_test";
    std::filesystem::remove_all(dir);
    explain(m, dir);
    for (const char* f : {"interactions.json", "flows.json", "seasonality.csv", "groups.json"})
      CHECK(std::filesystem::exists(dir / f));
    const auto doc = nlohmann::json::parse(slurp(dir / "interactions.json"));
    CHECK(doc["locations"].size() == 2);
    CHECK(slurp(dir / "interactions.json").find("parasitic") != std::string::npos);
    std::filesystem::remove_all(dir);
  }
}
