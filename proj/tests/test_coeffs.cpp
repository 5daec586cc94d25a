#include <doctest.h>

#include <cmath>

#include "mscale/coeffs.hpp"
#include "oracles.hpp"

using namespace mscale;

namespace {

TransportLP random_lp(Rng& rng, int d, std::size_t n) {
  TransportLP lp;
  lp.dim = d;
  lp.scale = rng.uniform(0.5, 2.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) lp.coords.push_back(rng.uniform(-1.0, 1.0));
    lp.coeff.push_back(rng.uniform(-1.0, 1.0));
    lp.bound.push_back(rng.uniform() < 0.2 ? 0.0 : rng.uniform(0.0, 1.5));
  }
  return lp;
}

AffinePlane random_plane(Rng& rng, int d, int n, const Vec& near) {
  AffinePlane p;
  p.base = near;
  for (int j = 0; j < d; ++j) p.base[j] += 0.2 * rng.normal();
  Mat M(d, n);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < n; ++b) M(a, b) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(M);
  p.basis = qr.householderQ() * Mat::Identity(d, n);
  return p;
}

}  // namespace

TEST_CASE("transport LP agrees with the simplex oracle on random instances") {
  Rng rng(4242);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 2 + trial % 2;
    const auto lp = random_lp(rng, d, 2 + trial % 11);
    const double got = solve_transport_lp(lp).value;
    const double want = oracle::lp_simplex(lp);
    CHECK(std::fabs(got - want) <= 1e-4 * std::max(1.0, std::fabs(want)));
  }
}

TEST_CASE("alpha inner LP agrees with the simplex oracle on small instances") {
  int tested = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto mu = random_cloud(2, 1.0, 4, 1.0, seed);
    const auto lat = DyadicLattice::standard(2);
    const DyadicCube q{0, {0, 0}};
    const auto fit = beta_cube(mu, lat, q, 1);
    const auto vt = vartheta(mu, lat, q, fit.plane, 1.0 / 64);
    const auto lp = alpha_inner_lp(mu, lat, q, fit.plane, vt.theta, 2.0);
    if (lp.coeff.size() > 12) continue;
    ++tested;
    const double got = solve_transport_lp(lp).value;
    const double want = oracle::lp_simplex(lp);
    CHECK(std::fabs(got - want) <= 1e-4 * std::max(1.0, std::fabs(want)));
  }
  CHECK(tested >= 10);
}

TEST_CASE("least-squares plane matches an independent eigen solve and beats sampled planes") {
  Rng rng(7);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const int d = 2 + static_cast<int>(seed % 2);
    const int n = 1 + static_cast<int>(seed % (d - 1));
    const auto mu = random_cloud(d, 1.0, 30, 1.0, seed);
    WeightedPoints pts{d, mu.coords(), mu.weights()};
    const auto best = optimal_plane(pts, n);
    const double res = plane_residual(pts, best);
    const double want = oracle::plane_residual(mu.coords(), mu.weights(), d, n);
    CHECK(std::fabs(res - want) <= 1e-10 * std::max(1.0, want));
    Vec c = Vec::Zero(d);
    for (std::size_t i = 0; i < mu.size(); ++i) c += mu.weight(i) * mu.pt(i);
    c /= mu.total_mass();
    CHECK(best.distance(c.data()) <= 1e-10);
    for (int k = 0; k < 100; ++k)
      CHECK(plane_residual(pts, random_plane(rng, d, n, c)) >= res * (1.0 - 1e-12));
  }
}

TEST_CASE("beta of a ball uses the open ball and its mass") {
  // three collinear atoms and one off the line at height h
  const double h = 0.1;
  DiscreteMeasure mu(2, 1.0, {-0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, h, 5.0, 5.0},
                     {1.0, 1.0, 1.0, 1.0, 9.0});
  const double x[2] = {0.0, 0.0};
  const double r = 1.0;
  const auto b = beta_ball(mu, x, r, 1);
  std::vector<double> c{-0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, h};
  const double S = oracle::plane_residual(c, {1, 1, 1, 1}, 2, 1);
  CHECK(b.normalizer == doctest::Approx(4.0));
  CHECK(b.value * b.value == doctest::Approx(S / (4.0 * r * r)).epsilon(1e-12));
  // a plane-supported measure has zero beta
  const auto line = generate(GeneratorSpec::plane_patch(2, 1, 1.0, 0.125));
  CHECK(beta_ball(line, x, 0.7, 1).value < 1e-12);
}

TEST_CASE("beta squared is controlled by the transport coefficient") {
  const double Cw = witness_lipschitz_constant(2);
  AlphaOptions opts;
  opts.refine_iters = 4;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto mu = random_cloud(2, 1.0, 25, 1.0, seed);
    const auto lat = DyadicLattice::standard(2);
    const DyadicCube q{0, {0, 0}};
    const auto a = alpha_cube(mu, lat, q, 1, opts);
    const auto b = beta_cube(mu, lat, q, 1);
    CHECK(a.upper >= a.lower);
    CHECK(a.witness_at_best >= a.lower - 1e-12);
    CHECK(b.value * b.value * a.mass <= Cw * a.upper);
  }
}
