#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <set>

#include "mscale/lattice.hpp"
#include "oracles.hpp"

using namespace mscale;

TEST_CASE("four-corner Cantor generation 3 has 64 equal atoms of total mass 1") {
  const auto mu = generate(GeneratorSpec::parse("cantor_four_corner:gen=3"));
  CHECK(mu.size() == 64);
  CHECK(mu.dim() == 2);
  CHECK(mu.s() == doctest::Approx(1.0));
  CHECK(mu.total_mass() == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t i = 0; i < mu.size(); ++i) CHECK(mu.weight(i) == doctest::Approx(1.0 / 64));
}

TEST_CASE("self-similar Cantor dimension follows the ratio") {
  const auto mu = generate(GeneratorSpec::cantor_self_similar(2, 0.3, 3));
  CHECK(mu.size() == 64);
  CHECK(mu.s() == doctest::Approx(std::log(4.0) / std::log(1.0 / 0.3)));
}

TEST_CASE("generator spec parsing") {
  const auto g = GeneratorSpec::parse("lipschitz_graph:d=2,n=1,lip=0.3,extent=1,step=0.125");
  CHECK(g.family == "lipschitz_graph");
  CHECK(g.lip_const == doctest::Approx(0.3));
  CHECK(g.grid_step == doctest::Approx(0.125));
  CHECK_THROWS(GeneratorSpec::parse("no_such_family:gen=1"));
  const auto p = GeneratorSpec::parse("phi_symmetric_example:k=1,t=0;0|0;0.5,f=1|2,extent=1,step=0.1");
  CHECK(p.translate_set.size() == 2);
  CHECK(p.density.size() == 2);
}

TEST_CASE("measure JSON round trip is exact") {
  const auto mu = random_cloud(3, 1.3, 25, 2.0, 11);
  const auto back = measure_from_json(to_json(mu));
  CHECK(back.coords() == mu.coords());
  CHECK(back.weights() == mu.weights());
  CHECK(back.s() == mu.s());
  const std::string path = "mscale_roundtrip_test.json";
  save_measure(mu, path);
  const auto loaded = load_measure(path);
  std::remove(path.c_str());
  CHECK(loaded.coords() == mu.coords());
  CHECK(loaded.weights() == mu.weights());
}

TEST_CASE("measure validation") {
  CHECK_THROWS(DiscreteMeasure(2, 1.0, {0.0, 0.0}, {-1.0}));
  CHECK_THROWS(DiscreteMeasure(2, 1.0, {0.0, 0.0, 1.0}, {1.0}));
}

TEST_CASE("ball mass uses the open ball") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto mu = random_cloud(2, 1.0, 50, 1.0, seed);
    Rng rng(seed);
    for (int k = 0; k < 50; ++k) {
      std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const double r = rng.uniform(0.01, 1.0);
      CHECK(ball_mass(mu, x.data(), r) == doctest::Approx(oracle::ball_mass(mu, x, r)));
    }
    // a radius equal to an atom distance excludes that atom
    const std::vector<double> x0(mu.point(0), mu.point(0) + 2);
    const double r1 = dist(mu.point(0), mu.point(1), 2);
    CHECK(ball_mass(mu, x0.data(), r1) == doctest::Approx(oracle::ball_mass(mu, x0, r1)));
  }
}

TEST_CASE("bump profile") {
  CHECK(bump(0.0) == 1.0);
  CHECK(bump(1.0) == 1.0);
  CHECK(bump(2.0) == 0.0);
  CHECK(bump(3.0) == 0.0);
  double prev = 1.0;
  for (double t = 1.0; t <= 2.0; t += 1.0 / 128) {
    CHECK(bump(t) <= prev);
    prev = bump(t);
  }
  // finite differences stay below the sup of the derivative
  const double h = 1e-6;
  for (double t = 1.0 + h; t < 2.0 - h; t += 1.0 / 256)
    CHECK(std::fabs(bump(t + h) - bump(t - h)) / (2 * h) <= bump_deriv_sup() * (1 + 1e-4));
}

TEST_CASE("charged cubes agree with a brute-force window") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const int d = 2 + static_cast<int>(seed % 2);
    const auto mu = random_cloud(d, 1.0, 12, 1.0, seed);
    const auto lat = DyadicLattice::standard(d);
    for (int k = -2; k <= 0; ++k) {
      std::set<DyadicCube> want;
      const double l = std::ldexp(1.0, k);
      const double reach = 4.0 * std::sqrt(double(d)) * l;
      for (std::size_t i = 0; i < mu.size(); ++i) {
        std::vector<std::int64_t> lo(d), hi(d);
        for (int j = 0; j < d; ++j) {
          lo[j] = static_cast<std::int64_t>(std::floor((mu.point(i)[j] - lat.origin[j] - reach) / l)) - 1;
          hi[j] = static_cast<std::int64_t>(std::floor((mu.point(i)[j] - lat.origin[j] + reach) / l)) + 1;
        }
        std::vector<std::int64_t> m = lo;
        for (;;) {
          DyadicCube q{k, m};
          Vec c(d);
          for (int j = 0; j < d; ++j) c[j] = lat.origin[j] + l * (m[j] + 0.5);
          // charged where the bump is numerically positive; its tail underflows just inside t = 2
          if (bump(dist(c.data(), mu.point(i), d) / (2.0 * std::sqrt(double(d)) * l)) > 0.0) want.insert(q);
          int j = 0;
          while (j < d && ++m[j] > hi[j]) m[j] = lo[j], ++j;
          if (j == d) break;
        }
      }
      const auto got = charged_cubes(mu, lat, k, k);
      CHECK(std::set<DyadicCube>(got.begin(), got.end()) == want);
      CHECK(std::is_sorted(got.begin(), got.end()));
    }
  }
}

TEST_CASE("containing cube and half-open faces") {
  const auto lat = DyadicLattice::standard(2);
  const double x[2] = {-0.5, 0.25};
  const auto q = containing_cube(lat, 0, x);
  CHECK(q.index == std::vector<std::int64_t>{0, 0});
  const double y[2] = {0.5, 0.0};
  CHECK(containing_cube(lat, 0, y).index == std::vector<std::int64_t>{1, 0});
  CHECK(cube_contains(lat, q, x));
  CHECK_FALSE(cube_contains(lat, q, y));
  const auto q2 = containing_cube(lat, -3, x);
  CHECK(cube_contains(lat, q2, x));
}

TEST_CASE("smoothed mass bounds the cube mass and the ball mass bounds it") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto mu = random_cloud(2, 1.0, 40, 1.0, seed);
    const auto lat = DyadicLattice::standard(2);
    for (const auto& q : charged_cubes(mu, lat, -2, 0)) {
      const double I = smoothed_cube_mass(mu, lat, q);
      const Vec c = centre(lat, q);
      CHECK(cube_mass(mu, lat, q) <= I);
      CHECK(I <= ball_mass(mu, c.data(), ball_radius(q, 2)));
    }
  }
}

TEST_CASE("ball containment tests are exact at ties") {
  // equal cubes: a ball sits inside itself
  const DyadicCube a{0, {0, 0}};
  CHECK(ball_within(a, 3, a, 3));
  CHECK_FALSE(ball_within(a, 4, a, 3));
  // 3B balls of unit cubes two apart overlap
  const DyadicCube b{0, {2, 0}};
  CHECK_FALSE(balls_disjoint(a, 3, b, 3));
  const DyadicCube far{0, {100, 0}};
  CHECK(balls_disjoint(a, 3, far, 3));
}
