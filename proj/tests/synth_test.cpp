#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "doctest.h"
#include "fluxcube/clustering.hpp"
#include "fluxcube/error.hpp"
#include "fluxcube/synth.hpp"

using namespace fluxcube;

TEST_SUITE("synth") {
  TEST_CASE("generation is deterministic per seed") {
    const ActivityTensor a = generate(scenario("competition-pair", 4));
    const ActivityTensor b = generate(scenario("competition-pair", 4));
    const ActivityTensor c = generate(scenario("competition-pair", 5));
    CHECK(std::ranges::equal(a.values(), b.values()));
    CHECK(trajectory_hash(a) == trajectory_hash(b));
    CHECK(trajectory_hash(a) != trajectory_hash(c));
    CHECK(trajectory_hash(a).size() == 16);
  }

  TEST_CASE("spec json round trip") {
    for (const auto& name : scenario_names()) {
      INFO(name);
      const SynthSpec s = scenario(name, 9, 120);
      const std::string text = spec_to_json(s);
      const SynthSpec back = spec_from_json(text);
      CHECK(spec_to_json(back) == text);
      CHECK(trajectory_hash(generate(back)) == trajectory_hash(generate(s)));
    }
    CHECK_THROWS_AS(spec_from_json("{\"name\": 3"), InputError);
  }

  TEST_CASE("logistic matches a scalar integrator") {
    SynthSpec s = scenario("logistic-solo", 0, 200);
    s.noise = 0.0;
    const auto xs = simulate(s);
    double x = 0.05;
    for (std::size_t t = 0; t < xs.size(); ++t) {
      CHECK(std::abs(xs[t](0, 0) - x) < 1e-12);
      x = x + 0.1 * x * (1.0 - x / 0.8);
    }
    CHECK(xs.back()(0, 0) == doctest::Approx(0.8).epsilon(1e-3));
  }

  TEST_CASE("constant inflow shifts the equilibrium") {
    SynthSpec s;
    s.name = "inflow";
    s.steps = 400;
    s.location_labels = {"src", "dst"};
    s.keyword_labels = {"k"};
    s.groups = GroupAssignment::singletons(2);
    s.reaction = ReactionParams(2, 1);
    s.reaction.set_growth(0, 0, 0.3);
    s.reaction.set_capacity(0, 0, 0.5);
    s.reaction.set_growth(1, 0, 0.3);
    s.reaction.set_capacity(1, 0, 0.5);
    DiffusionTensor d(2, 1);
    d(1, 0, 0) = 0.05;
    s.diffusion.push_back({0, d});
    s.initial = Eigen::MatrixXd::Constant(2, 1, 0.1);
    const auto xs = simulate(s);
    // a x (1 - x / b) + D b_src = 0
    const double a = 0.3, b = 0.5, inflow = 0.05 * 0.5;
    const double expected = b / 2.0 * (1.0 + std::sqrt(1.0 + 4.0 * inflow / (a * b)));
    CHECK(xs.back()(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(xs.back()(1, 0) == doctest::Approx(expected).epsilon(1e-9));
  }

  TEST_CASE("standard scenarios generate in range") {
    for (const auto& s : standard_scenarios(2)) {
      INFO(s.name);
      const ActivityTensor t = generate(s);
      CHECK(t.steps() == 416);
      CHECK(t.locations() == s.locations());
      for (double v : t.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.5);
      }
    }
    try {
      scenario("nope");
      FAIL("expected InputError");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("two-group-flow") != std::string::npos);
    }
  }

  TEST_CASE("clustering the true parameters recovers the groups") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const SynthSpec s = scenario("two-group-flow", seed);
      CHECK(cluster(embed(s.reaction), 2, seed).group == s.groups.group);
    }
  }

  TEST_CASE("validation") {
    SynthSpec s = scenario("seasonal-spike");
    s.noise = -1.0;
    CHECK_THROWS_AS(s.validate(), InputError);
    s = scenario("seasonal-spike");
    s.initial(0, 0) = -0.1;
    CHECK_THROWS_AS(s.validate(), InputError);
    s = scenario("two-group-flow");
    s.diffusion.push_back(s.diffusion.front());
    CHECK_THROWS_AS(s.validate(), InputError);
  }

  TEST_CASE("truth document") {
    const SynthSpec s = scenario("logistic-solo", 1, 30);
    const ActivityTensor t = generate(s);
    const auto doc = nlohmann::json::parse(truth_json(s, t));
    CHECK(doc["trajectory_hash"] == trajectory_hash(t));
    CHECK(doc["spec"]["name"] == "logistic-solo");
  }
}
