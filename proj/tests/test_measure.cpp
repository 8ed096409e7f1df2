#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sotlab/measure.hpp"
#include "sotlab/random_measures.hpp"
#include "sotlab/rng.hpp"

using namespace sotlab;

TEST_CASE("periodic distance on the torus") {
  CHECK(periodic_distance(TorusPoint{1, {0.0, 0.0}}, TorusPoint{1, {0.0, 0.0}}) == 0.0);
  CHECK(periodic_distance(TorusPoint{1, {0.0, 0.0}}, TorusPoint{1, {0.9, 0.0}}) ==
        doctest::Approx(0.1).epsilon(1e-14));
  CHECK(periodic_distance(TorusPoint{2, {0.0, 0.0}}, TorusPoint{2, {0.5, 0.5}}) ==
        doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));
  CHECK_THROWS_AS(periodic_distance(TorusPoint{1, {0.0, 0.0}}, TorusPoint{2, {0.0, 0.0}}),
                  std::invalid_argument);
}

TEST_CASE("periodic distance properties") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    int dim = trial % 2 + 1;
    Vec a{rng.uniform01(), dim == 2 ? rng.uniform01() : 0.0};
    Vec b{rng.uniform01(), dim == 2 ? rng.uniform01() : 0.0};
    Vec c{rng.uniform01(), dim == 2 ? rng.uniform01() : 0.0};
    double ab = periodic_distance(a, b, dim);
    CHECK(ab == doctest::Approx(periodic_distance(b, a, dim)).epsilon(1e-15));
    CHECK(ab <= std::sqrt(dim) / 2.0 + 1e-15);
    CHECK(ab <= periodic_distance(a, c, dim) + periodic_distance(c, b, dim) + 1e-12);
  }
}

TEST_CASE("minimal image ties resolve to +1/2") {
  CHECK(minimal_image(0.5) == 0.5);
  CHECK(minimal_image(-0.5) == 0.5);
  CHECK(minimal_image(1.2) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(minimal_image(-0.2) == doctest::Approx(-0.2).epsilon(1e-14));
}

TEST_CASE("dirac and uniform") {
  TorusGrid g4(1, 4);
  GridMeasure d = dirac(g4, 2);
  CHECK(d.weights() == std::vector<double>{0.0, 0.0, 1.0, 0.0});
  CHECK(dirac(TorusGrid(1, 2), 0).weights() == std::vector<double>{1.0, 0.0});
  CHECK_THROWS_AS(dirac(g4, 4), std::out_of_range);

  GridMeasure u = uniform(g4);
  for (double w : u.weights()) CHECK(w == 0.25);
  GridMeasure u2 = uniform(TorusGrid(2, 2));
  CHECK(u2.site_count() == 4);
  for (double w : u2.weights()) CHECK(w == 0.25);
}

TEST_CASE("measure validation") {
  TorusGrid g(1, 4);
  CHECK_THROWS_AS(GridMeasure(g, {0.5, 0.5, 0.5, -0.5}), std::invalid_argument);
  CHECK_THROWS_AS(GridMeasure(g, {0.5, 0.5, 0.5, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(GridMeasure(g, {1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("pushforward translation is an exact permutation") {
  TorusGrid g(1, 4);
  GridMeasure m = dirac(g, 0);
  TorusDisplacement quarter{1, {0.25, 0.0}};
  GridMeasure shifted = pushforward_translate(m, quarter);
  CHECK(shifted.weights() == std::vector<double>{0.0, 1.0, 0.0, 0.0});

  GridMeasure same = pushforward_translate(m, TorusDisplacement{1, {0.0, 0.0}});
  CHECK(same == m);

  GridMeasure cycled = m;
  for (int i = 0; i < 4; ++i) cycled = pushforward_translate(cycled, quarter);
  CHECK(cycled == m);

  CHECK_THROWS_AS(pushforward_translate(m, TorusDisplacement{1, {0.3, 0.0}}),
                  std::invalid_argument);

  // Permutation test: every individual weight value survives.
  Rng rng(11);
  GridMeasure random = random_measure(g, rng);
  GridMeasure moved = pushforward_translate(random, quarter);
  auto sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  CHECK(sorted(moved.weights()) == sorted(random.weights()));
}

TEST_CASE("snapping ties pick the lexicographically smaller site") {
  TorusGrid g(1, 4);
  CHECK(g.nearest_site(Vec{0.125, 0.0}) == 0);   // halfway between sites 0 and 1
  CHECK(g.nearest_site(Vec{0.6, 0.0}) == 2);
  CHECK(g.nearest_site(Vec{0.875, 0.0}) == 0);   // halfway between 3 and 0 wraps to 0
  TorusGrid g2(2, 4);
  CHECK(g2.nearest_site(Vec{0.125, 0.125}) == g2.site_index(0, 0));
}

TEST_CASE("translate with snapping preserves mass") {
  TorusGrid g(1, 8);
  Rng rng(3);
  GridMeasure m = random_measure(g, rng);
  GridMeasure moved = translate_snap(m, Vec{0.137, 0.0});
  double total = 0.0;
  for (double w : moved.weights()) total += w;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("json round trip") {
  TorusGrid g(2, 4);
  Rng rng(5);
  GridMeasure m = random_measure(g, rng);
  GridMeasure back = GridMeasure::from_json_string(m.to_json_string());
  CHECK(back == m);
}
