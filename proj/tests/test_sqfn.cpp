#include <doctest.h>

#include <cmath>

#include "mscale/sqfn.hpp"

using namespace mscale;

namespace {

std::size_t brute_overlap(const DyadicLattice& lat, int level, double A, const double* x) {
  const int d = lat.dim();
  const double l = std::ldexp(1.0, level);
  const double R = A * 4.0 * std::sqrt(double(d)) * l;
  std::vector<std::int64_t> lo(d), hi(d);
  for (int j = 0; j < d; ++j) {
    lo[j] = static_cast<std::int64_t>(std::floor((x[j] - lat.origin[j] - R) / l)) - 1;
    hi[j] = static_cast<std::int64_t>(std::floor((x[j] - lat.origin[j] + R) / l)) + 1;
  }
  std::size_t count = 0;
  std::vector<std::int64_t> m = lo;
  for (;;) {
    double q = 0.0;
    for (int j = 0; j < d; ++j) {
      const double t = lat.origin[j] + l * (m[j] + 0.5) - x[j];
      q += t * t;
    }
    if (std::sqrt(q) < R) ++count;
    int j = 0;
    while (j < d && ++m[j] > hi[j]) m[j] = lo[j], ++j;
    if (j == d) break;
  }
  return count;
}

}  // namespace

TEST_CASE("field matches the direct sum") {
  const auto mu = random_cloud(2, 1.0, 30, 1.0, 5);
  Rng rng(9);
  std::vector<double> f(mu.size());
  for (auto& v : f) v = rng.uniform(-1, 1);
  for (int k = 0; k < 20; ++k) {
    const double x[2] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double t = rng.uniform(0.05, 0.8);
    Vec want = Vec::Zero(2);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double r = dist(x, mu.point(i), 2);
      for (int j = 0; j < 2; ++j)
        want[j] += mu.weight(i) * f[i] * (x[j] - mu.point(i)[j]) / std::pow(t, mu.s() + 1) * bump(r / t);
    }
    const Vec got = field(mu, x, t, f);
    CHECK((got - want).norm() <= 1e-12 * std::max(1.0, want.norm()));
    FieldCache cache(mu, t);
    CHECK((cache.field(x, f) - got).norm() <= 1e-12 * std::max(1.0, got.norm()));
  }
}

TEST_CASE("overlap census equals brute count and respects the bound") {
  Rng rng(3);
  for (int d : {2, 3}) {
    const auto lat = DyadicLattice::standard(d);
    for (double A : {1.0, 2.0, 4.0}) {
      std::vector<double> probes;
      for (int k = 0; k < 20; ++k)
        for (int j = 0; j < d; ++j) probes.push_back(rng.uniform(-2, 2));
      const auto c = overlap_census(lat, -1, A, probes);
      std::size_t want = 0;
      for (int k = 0; k < 20; ++k) want = std::max(want, brute_overlap(lat, -1, A, &probes[k * d]));
      CHECK(c.max_count == want);
      CHECK(double(c.max_count) <= overlap_bound(d, A));
      CHECK(overlap_bound(d, A) == doctest::Approx(std::pow(8.0 * std::sqrt(double(d)) * A + 2.0, d)));
    }
  }
}

TEST_CASE("log grid covers the range with midpoint nodes") {
  const auto g = log_grid(0.25, 4.0, 8);
  CHECK(g.t.size() == 32);
  CHECK(g.h == doctest::Approx(std::log(2.0) / 8));
  CHECK(g.t.front() > 0.25);
  CHECK(g.t.back() < 4.0);
}

TEST_CASE("sign decomposition identity") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto mu = random_cloud(2, 1.0, 20, 1.0, seed);
    Rng rng(seed);
    std::vector<double> f(mu.size());
    for (auto& v : f) v = rng.uniform(-1, 1);
    const int k0 = static_cast<int>(seed % 4);
    const auto r = randomized_decomposition_check(mu, f, 1.3, k0);
    CHECK(r.patterns == (std::size_t{1} << (2 * k0 + 1)));
    CHECK(r.defect <= 1e-12 * std::max(1.0, r.diagonal));
  }
}

TEST_CASE("multiplicative convolution bound") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto mu = random_cloud(2, 1.0, 20, 1.0, seed);
    std::vector<double> f(mu.size(), 1.0);
    for (const auto& g : {ScaleMixture::point_mass(1.5), ScaleMixture::smooth_bump(0.5, 2.0)}) {
      const auto c = conv_bump_compare(mu, f, g);
      CHECK(c.holds);
      CHECK(c.slack >= 0.0);
    }
  }
  const auto pm = ScaleMixture::point_mass(2.0, 3.0);
  CHECK(pm.factor(1.0) == doctest::Approx(3.0 * 4.0));
}

TEST_CASE("constituent is nonnegative and keeps its aperture") {
  const auto mu = generate(GeneratorSpec::plane_patch(2, 1, 1.0, 1.0 / 32));
  const auto lat = DyadicLattice::standard(2);
  const DyadicCube q{-2, {0, 0}};
  const auto c = constituent(mu, lat, q, 2.0);
  CHECK(c.value >= 0.0);
  CHECK(c.A == 2.0);
}
