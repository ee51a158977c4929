#include <string>

#include "doctest.h"
#include "fluxcube/error.hpp"
#include "fluxcube/tensor_data.hpp"
#include "helpers.hpp"

using namespace fluxcube;

namespace {

const char* kGrid =
    "date,location,keyword,value\n"
    "2020-01-05,us,flu,1\n2020-01-05,us,cold,2\n2020-01-05,jp,flu,3\n2020-01-05,jp,cold,4\n"
    "2020-01-12,us,flu,5\n2020-01-12,us,cold,6\n2020-01-12,jp,flu,7\n2020-01-12,jp,cold,8\n"
    "2020-01-19,us,flu,9\n2020-01-19,us,cold,10\n2020-01-19,jp,flu,11\n2020-01-19,jp,cold,12\n";

std::string without(const std::string& text, const std::string& row) {
  std::string out = text;
  out.erase(out.find(row), row.size() + 1);
  return out;
}

}  // namespace

TEST_SUITE("tensor_data") {
  TEST_CASE("dense grid loads with lexicographic axes") {
    const ActivityTensor t = parse_csv(kGrid);
    CHECK(t.steps() == 3);
    CHECK(t.locations() == 2);
    CHECK(t.keywords() == 2);
    CHECK(t.location_labels() == std::vector<std::string>{"jp", "us"});
    CHECK(t.keyword_labels() == std::vector<std::string>{"cold", "flu"});
    CHECK(t(1, 0, 1) == 7.0);
    CHECK(t(2, 1, 0) == 10.0);
    CHECK(t.cadence_days() == 7);
  }

  TEST_CASE("missing cell names the triple unless interpolating") {
    const std::string text = without(kGrid, "2020-01-12,jp,flu,7");
    try {
      parse_csv(text);
      FAIL("expected InputError");
    } catch (const InputError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("2020-01-12") != std::string::npos);
      CHECK(msg.find("jp") != std::string::npos);
      CHECK(msg.find("flu") != std::string::npos);
    }
    const ActivityTensor t = parse_csv(text, true);
    CHECK(t(1, 0, 1) == doctest::Approx((3.0 + 11.0) / 2.0));
  }

  TEST_CASE("missing boundary cell cannot be interpolated") {
    CHECK_THROWS_AS(parse_csv(without(kGrid, "2020-01-19,us,cold,10"), true), InputError);
  }

  TEST_CASE("malformed rows cite their line") {
    std::string bad = kGrid;
    bad.replace(bad.find("2020-01-12,us,cold,6"), 20, "2020-01-12,us,cold,x");
    try {
      parse_csv(bad);
      FAIL("expected InputError");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("line 7") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_csv("date,location,keyword,value\n2020-01-05,us,flu,-1\n2020-01-12,us,flu,1\n"), InputError);
    CHECK_THROWS_AS(parse_csv("when,where,what,value\n"), InputError);
    CHECK_THROWS_AS(parse_csv("date,location,keyword,value\n2020-13-05,us,flu,1\n"), InputError);
  }

  TEST_CASE("non-uniform cadence is rejected") {
    CHECK_THROWS_AS(parse_csv("date,location,keyword,value\n2020-01-05,a,k,1\n2020-01-12,a,k,1\n2020-01-26,a,k,1\n"),
                    InputError);
  }

  TEST_CASE("csv round trip is lossless") {
    const ActivityTensor t = test::tensor(3, 2, 1, {0.1, 1.0 / 3.0, 2.5e-9, 7.0, 0.125, 1e6});
    const ActivityTensor back = parse_csv(to_csv(t));
    CHECK(back.values().size() == t.values().size());
    for (std::size_t n = 0; n < t.values().size(); ++n) CHECK(back.values()[n] == t.values()[n]);
    CHECK(back.time_labels() == t.time_labels());
  }

  TEST_CASE("iso weeks") {
    CHECK(iso_week(parse_date("2015-01-04")) == 1);
    CHECK(iso_week(parse_date("2020-12-31")) == 53);
    CHECK(iso_week(parse_date("2021-01-04")) == 1);
    CHECK(format_date(parse_date("2019-02-28") + std::chrono::days{1}) == "2019-03-01");
  }

  TEST_CASE("min-max scaling") {
    SUBCASE("linear series") {
      auto [n, stats] = normalize(test::tensor(3, 1, 1, {0.0, 5.0, 10.0}), 3);
      CHECK(n(0, 0, 0) == 0.0);
      CHECK(n(1, 0, 0) == 0.5);
      CHECK(n(2, 0, 0) == 1.0);
      CHECK(n.normalized());
      CHECK(denormalize(n, stats)(1, 0, 0) == doctest::Approx(5.0));
    }
    SUBCASE("constant series maps to zero and is flagged") {
      auto [n, stats] = normalize(test::tensor(3, 1, 1, {7.0, 7.0, 7.0}), 3);
      CHECK(n(0, 0, 0) == 0.0);
      CHECK(n(2, 0, 0) == 0.0);
      CHECK(stats.constant[0]);
    }
    SUBCASE("values past the stats window are clamped and counted") {
      auto [n, stats] = normalize(test::tensor(3, 1, 1, {0.0, 10.0, 20.0}), 2);
      CHECK(n(2, 0, 0) == 1.5);
      CHECK(stats.clamped == 1);
    }
  }

  TEST_CASE("split") {
    std::vector<double> v(10);
    for (std::size_t t = 0; t < 10; ++t) v[t] = static_cast<double>(t);
    const ActivityTensor t = test::tensor(10, 1, 1, v);
    SUBCASE("exact") {
      const SplitResult r = split(t, {7, 3});
      CHECK(r.modeling.steps() == 7);
      CHECK(r.truth.steps() == 3);
      CHECK_FALSE(r.truncated);
      CHECK(r.truth(0, 0, 0) == 7.0);
    }
    SUBCASE("truncated") {
      const SplitResult r = split(t, {7, 5});
      CHECK(r.truth_length == 3);
      CHECK(r.truncated);
    }
    SUBCASE("pure forecasting") {
      const SplitResult r = split(t, {10, 2});
      CHECK(r.truth_length == 0);
      CHECK(r.modeling.steps() == 10);
    }
    CHECK_THROWS_AS(split(t, {0, 1}), InputError);
    CHECK_THROWS_AS(split(t, {5, 0}), InputError);
  }
}
