#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fluxcube/error.hpp"
#include "fluxcube/mdl.hpp"
#include "fluxcube/training.hpp"
#include "helpers.hpp"

using namespace fluxcube;

TEST_SUITE("mdl") {
  TEST_CASE("log star") {
    const double c = std::log2(2.865);
    CHECK(log_star(0) == 0.0);
    CHECK(log_star(1) == doctest::Approx(c));
    CHECK(log_star(2) == doctest::Approx(c + 1.0));
    CHECK(log_star(4) == doctest::Approx(c + 2.0 + 1.0));
    CHECK(log_star(16) == doctest::Approx(c + 4.0 + 2.0 + 1.0));
    for (std::size_t n = 1; n < 200; ++n) CHECK(log_star(n + 1) >= log_star(n));
  }

  TEST_CASE("gaussian code length") {
    const std::vector<double> r{-1.0, 1.0};
    const DataCost d = data_cost(r);
    CHECK(d.mean == 0.0);
    CHECK(d.sigma == doctest::Approx(1.0));
    CHECK(d.bits == doctest::Approx(std::log2(2.0 * std::numbers::pi) + std::numbers::log2e));
    CHECK(d.bits == doctest::Approx(4.094).epsilon(1e-3));

    const std::vector<double> x{0.3, -0.1, 0.25, 0.05, -0.2};
    std::vector<double> doubled;
    for (double v : x) doubled.push_back(2.0 * v);
    CHECK(data_cost(doubled).bits - data_cost(x).bits == doctest::Approx(5.0));

    const std::vector<double> flat(4, 0.5);
    CHECK(data_cost(flat).sigma == kSigmaFloor);
    CHECK(std::isfinite(data_cost(flat).bits));
    CHECK_THROWS_AS(data_cost(std::vector<double>{}), InputError);
  }

  TEST_CASE("model cost") {
    // t_c = 256, d_l = 4, K = 8, ten nonzero entries
    const double expected = 10.0 * (8.0 + 4.0 + 3.0 + 32.0) + log_star(10) + log_star(4);
    CHECK(model_cost(4, 10, 256, 8) == doctest::Approx(expected));
    CHECK(model_cost(1, 0, 256, 8) == doctest::Approx(log_star(1)));
    for (std::size_t d = 2; d < 10; ++d) CHECK(model_cost(d, 5, 100, 3) > model_cost(d - 1, 5, 100, 3));
  }

  TEST_CASE("nonzero count") {
    DiffusionNet net(4, 2, 1, 10.0, 52.0, DiffusionMode::constant);
    net.constant_raw << 0.0, 0.3, 5e-7, 0.0;
    CHECK(count_nonzero_diffusion(net, 20) == 20);
    net.mode = DiffusionMode::disabled;
    CHECK(count_nonzero_diffusion(net, 20) == 0);
  }

  TEST_CASE("description cost of the identity model") {
    TrainConfig config;
    config.seasonality = false;
    config.diffusion = DiffusionMode::disabled;
    Dynamics d = initialize_dynamics(1, 1, GroupAssignment::single(1), 4, 5, config, 1);
    d.reaction.log_growth.setConstant(-800.0);
    const ActivityTensor w = test::tensor(5, 1, 1, {0.1, 0.2, 0.4, 0.3, 0.5}, true);
    const auto r = one_step_residuals(d, w);
    REQUIRE(r.size() == 4);
    const double expected[] = {0.1, 0.2, -0.1, 0.2};
    for (std::size_t t = 0; t < 4; ++t) CHECK(r[t] == doctest::Approx(expected[t]));
    const MdlCost c = description_cost(d, w);
    CHECK(c.model_cost == doctest::Approx(log_star(1)));
    CHECK(c.data_cost == doctest::Approx(data_cost(r).bits));
    CHECK(c.total == doctest::Approx(c.model_cost + c.data_cost));
    CHECK(c.nonzero_diffusion == 0);
  }
}
