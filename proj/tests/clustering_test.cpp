#include "doctest.h"
#include "fluxcube/clustering.hpp"
#include "fluxcube/error.hpp"

using namespace fluxcube;

TEST_SUITE("clustering") {
  TEST_CASE("k = 1 puts everything in one group") {
    Eigen::MatrixXd pts(4, 2);
    pts << 0, 0, 1, 1, 5, 5, 9, 1;
    const KMeansResult r = kmeans(pts, 1, 3);
    CHECK(r.groups.count == 1);
    for (std::size_t g : r.groups.group) CHECK(g == 0);
    CHECK(r.centers(0, 0) == doctest::Approx(3.75));
  }

  TEST_CASE("k = L gives singletons with zero inertia") {
    Eigen::MatrixXd pts(3, 2);
    pts << 0, 0, 4, 0, 0, 4;
    const KMeansResult r = kmeans(pts, 3, 3);
    CHECK(r.groups.group == std::vector<std::size_t>{0, 1, 2});
    CHECK(r.inertia == doctest::Approx(0.0));
  }

  TEST_CASE("two tight pairs") {
    Eigen::MatrixXd pts(4, 2);
    pts << 10.0, 10.0, 0.0, 0.1, 10.1, 10.0, 0.1, 0.0;
    const KMeansResult r = kmeans(pts, 2, 9);
    CHECK(r.groups.group == std::vector<std::size_t>{0, 1, 0, 1});
    CHECK(r.inertia == doctest::Approx(0.015));
  }

  TEST_CASE("seed independence on well-separated data") {
    Eigen::MatrixXd pts(6, 2);
    pts << 0, 0, 0.1, 0, 5, 5, 5.1, 5, 0, 0.1, 5, 5.1;
    const auto a = kmeans(pts, 2, 1).groups.group;
    for (std::uint64_t s = 2; s < 8; ++s) CHECK(kmeans(pts, 2, s).groups.group == a);
  }

  TEST_CASE("duplicate points with k above the distinct count") {
    Eigen::MatrixXd pts(3, 2);
    pts << 1, 1, 1, 1, 2, 2;
    CHECK_THROWS_AS(kmeans(pts, 3, 5), InputError);  // fewer distinct points than clusters
    CHECK(kmeans(pts, 2, 5).groups.group == std::vector<std::size_t>{0, 0, 1});
  }

  TEST_CASE("k out of range") {
    Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(kmeans(pts, 0, 1), InputError);
    CHECK_THROWS_AS(kmeans(pts, 3, 1), InputError);
  }

  TEST_CASE("canonical labels") {
    const GroupAssignment g = canonicalize({2, 2, 0, 1, 0}, 3);
    CHECK(g.group == std::vector<std::size_t>{0, 0, 1, 2, 1});
  }

  TEST_CASE("embedding of identical locations collapses") {
    ReactionParams p(3, 2);
    p.set_growth(0, 0, 0.3);
    p.set_growth(1, 0, 0.3);
    p.set_growth(2, 0, 0.9);
    const Embedding e = embed(p);
    CHECK(e.coords.rows() == 3);
    CHECK(e.coords.cols() == 2);
    CHECK((e.coords.row(0) - e.coords.row(1)).norm() == doctest::Approx(0.0));
    CHECK((e.coords.row(0) - e.coords.row(2)).norm() > 0.5);
    const GroupAssignment g = cluster(e, 2, 1);
    CHECK(g.group == std::vector<std::size_t>{0, 0, 1});
  }

  TEST_CASE("reaction features layout") {
    ReactionParams p(2, 2);
    p.set_growth(1, 1, 0.7);
    p.set_capacity(1, 0, 0.4);
    const Eigen::MatrixXd f = reaction_features(p);
    CHECK(f.cols() == 8);
    CHECK(f(1, 1) == doctest::Approx(0.7));
    CHECK(f(1, 2) == doctest::Approx(0.4));
  }
}
