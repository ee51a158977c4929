#include <cmath>

#include "doctest.h"
#include "fluxcube/error.hpp"
#include "fluxcube/synth.hpp"
#include "fluxcube/training.hpp"
#include "helpers.hpp"

using namespace fluxcube;

namespace {

// a underflows to 0 and the seasonal and diffusion terms are off, so x_{t+1} = x_t.
Dynamics identity(std::size_t L, std::size_t K) {
  TrainConfig config;
  config.seasonality = false;
  config.diffusion = DiffusionMode::disabled;
  Dynamics d = initialize_dynamics(L, K, GroupAssignment::single(L), 4, 10, config, 1);
  d.reaction.log_growth.setConstant(-800.0);
  return d;
}

TrainConfig quick() {
  TrainConfig c;
  c.hidden_candidates = {8};
  c.max_epochs = 1500;
  c.period = 52;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_SUITE("training") {
  TEST_CASE("loss of a perfect model is zero") {
    const ActivityTensor flat = test::tensor(6, 2, 1, std::vector<double>(12, 0.4), true);
    const LossValue v = loss(identity(2, 1), flat, 0.1, 0.1);
    CHECK(v.mse == 0.0);
    CHECK(v.total == 0.0);
  }

  TEST_CASE("constant offset of 0.1 gives mse 0.01") {
    std::vector<double> ramp(8);
    for (std::size_t t = 0; t < 8; ++t) ramp[t] = 0.1 * static_cast<double>(t);
    const ActivityTensor w = test::tensor(8, 1, 1, ramp, true);
    CHECK(loss(identity(1, 1), w, 0.0, 0.0).mse == doctest::Approx(0.01));
    CHECK(loss(identity(1, 1), w, 0.5, 0.5).total == doctest::Approx(0.01));
  }

  TEST_CASE("penalties scale with alpha and beta") {
    TrainConfig config;
    Dynamics d = initialize_dynamics(2, 1, GroupAssignment::singletons(2), 4, 10, config, 3);
    d.seasonality.raw.setConstant(0.0);
    const ActivityTensor w = test::tensor(10, 2, 1, std::vector<double>(20, 0.5), true);
    const LossValue none = loss(d, w, 0.0, 0.0);
    const LossValue some = loss(d, w, 0.0, 1.0);
    const LossValue more = loss(d, w, 0.0, 2.0);
    CHECK(none.seasonal_penalty == 0.0);
    CHECK(some.seasonal_penalty > 0.0);
    CHECK(more.seasonal_penalty == doctest::Approx(2.0 * some.seasonal_penalty));
    CHECK(some.mse == none.mse);
  }

  TEST_CASE("validation tail is excluded from the training mse") {
    std::vector<double> v{0.5, 0.5, 0.5, 0.5, 0.9};
    const ActivityTensor w = test::tensor(5, 1, 1, v, true);
    const Dynamics d = identity(1, 1);
    const LossValue r = LossFunction(w, d, 0.0, 0.0, 3).evaluate(d);
    CHECK(r.train_steps == 3);
    CHECK(r.validation_steps == 1);
    CHECK(r.mse == 0.0);
    CHECK(r.validation_mse == doctest::Approx(0.16));
  }

  TEST_CASE("mismatched shapes are rejected") {
    const ActivityTensor w = test::tensor(5, 2, 1, std::vector<double>(10, 0.1), true);
    CHECK_THROWS_AS(LossFunction(w, identity(1, 1), 0.1, 0.1, 2), InputError);
    CHECK_THROWS_AS(LossFunction(w, identity(2, 1), 0.1, 0.1, 9), InputError);
  }

  TEST_CASE("initialization is seeded") {
    TrainConfig config;
    const auto g = GroupAssignment::singletons(3);
    const Dynamics a = initialize_dynamics(3, 2, g, 8, 20, config, 42);
    const Dynamics b = initialize_dynamics(3, 2, g, 8, 20, config, 42);
    const Dynamics c = initialize_dynamics(3, 2, g, 8, 20, config, 43);
    CHECK(a.diffusion.recurrent == b.diffusion.recurrent);
    CHECK(a.reaction.interaction == b.reaction.interaction);
    CHECK_FALSE(a.diffusion.recurrent == c.diffusion.recurrent);
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
  }

  TEST_CASE("pick candidate") {
    std::vector<CandidateResult> r(3);
    r[0].report.best_validation_mse = 0.2;
    r[1].report.best_validation_mse = 0.1;
    r[2].report.best_validation_mse = 0.1;
    CHECK(pick_candidate(r) == 1);
    r[1].report.failed = true;
    CHECK(pick_candidate(r) == 2);
    r[0].report.failed = r[2].report.failed = true;
    CHECK_THROWS_AS(pick_candidate(r), NumericError);
  }

  TEST_CASE("fit recovers a noiseless logistic curve") {
    // 60 steps keep the validation tail on the rising part of the curve; a tail sitting on the
    // plateau only constrains b and would freeze the snapshot early.
    SynthSpec spec = scenario("logistic-solo", 0, 60);
    spec.noise = 0.0;
    spec.seasonal = {};
    const ActivityTensor data = generate(spec);
    const ActivityTensor w(data.time_labels(), data.location_labels(), data.keyword_labels(),
                          std::vector<double>(data.values().begin(), data.values().end()), true);
    TrainConfig config = quick();
    config.seasonality = false;
    config.period = 4;
    const FitResult r = fit(w, GroupAssignment::single(1), config);
    const LossValue v = loss(r.model.dynamics, w, 0.0, 0.0);
    CHECK(v.mse < 1e-10);
    CHECK(r.report.selected_hidden == 8);
    CHECK(r.report.epochs_run > 0);
    CHECK(r.model.dynamics.reaction.growth(0, 0) == doctest::Approx(0.1).epsilon(1e-3));
    CHECK(r.model.dynamics.reaction.capacity(0, 0) == doctest::Approx(0.8).epsilon(1e-3));
  }

  TEST_CASE("all-zero tensor trains without numeric failure") {
    const ActivityTensor w = test::tensor(60, 2, 1, std::vector<double>(120, 0.0), true);
    TrainConfig config = quick();
    config.max_epochs = 600;
    const FitResult r = fit(w, GroupAssignment::singletons(2), config);
    CHECK(std::isfinite(r.report.final_training_loss));
    CHECK(loss(r.model.dynamics, w, 0.0, 0.0).mse < 1e-8);
  }

  TEST_CASE("config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.hidden_candidates.clear();
    CHECK_THROWS_AS(c.validate(), InputError);
    c = TrainConfig{};
    c.alpha = -1.0;
    CHECK_THROWS_AS(c.validate(), InputError);
  }
}
