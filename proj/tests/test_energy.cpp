#include <doctest.h>

#include <cmath>

#include "mscale/energy.hpp"
#include "oracles.hpp"

using namespace mscale;

namespace {

double rel(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); }

oracle::Cell cell_of(const DyadicLattice& lat, const DyadicCube& q) {
  oracle::Cell c;
  c.side = side(q);
  for (int j = 0; j < lat.dim(); ++j) c.lo.push_back(lat.origin[j] + c.side * q.index[j]);
  return c;
}

}  // namespace

TEST_CASE("wolff single atom closed form") {
  DiscreteMeasure mu(2, 1.0, {0.3, -0.2}, {2.5});
  const double a = 0.1, b = 3.0, w = 2.5, s = 1.0;
  const double hand = w * w * w * (std::pow(a, -2 * s) - std::pow(b, -2 * s)) / (2 * s);
  const auto r = wolff_exact(mu, std::nullopt, a, b);
  CHECK(rel(r.total, hand) < 1e-14);
  // tail to infinity
  const auto inf = wolff_exact(mu, std::nullopt, a, std::numeric_limits<double>::infinity());
  CHECK(rel(inf.total, w * w * w * std::pow(a, -2 * s) / (2 * s)) < 1e-14);
}

TEST_CASE("wolff matches quadrature on random clouds") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const int d = 2 + static_cast<int>(seed % 2);
    const auto mu = random_cloud(d, 1.0 + 0.37 * seed / 6.0, 50, 1.0, seed);
    const double a = default_r_min(mu), b = 2.0 * mu.diam();
    const double got = wolff_exact(mu, std::nullopt, a, b).total;
    const double want = oracle::energy_quadrature(mu, EnergyKind::wolff, std::nullopt, a, b);
    CHECK(rel(got, want) < 1e-6);
  }
}

TEST_CASE("jones matches quadrature on four-corner Cantor generation 3") {
  const auto mu = generate(GeneratorSpec::cantor_four_corner(3));
  REQUIRE(mu.size() == 64);
  const double a = 1e-3, b = 4.0;
  const double got = jones_exact(mu, std::nullopt, a, b).total;
  const double want = oracle::energy_quadrature(mu, EnergyKind::jones, std::nullopt, a, b);
  CHECK(want > 0.0);
  CHECK(rel(got, want) < 1e-5);
}

TEST_CASE("energies restricted to a cube match quadrature") {
  const auto mu = random_cloud(2, 1.0, 60, 2.0, 77);
  const auto lat = DyadicLattice::standard(2);
  const DyadicCube q{0, {0, 0}};
  const CubeRef ref{lat, q};
  const double a = default_r_min(mu), b = 3.0;
  for (auto kind : {EnergyKind::wolff, EnergyKind::jones}) {
    const double got = energy_exact(mu, kind, ref, a, b).total;
    const double want = oracle::energy_quadrature(mu, kind, cell_of(lat, q), a, b);
    CHECK(rel(got, want) < 1e-5);
  }
}

TEST_CASE("jones vanishes on a plane and rejects non-integer s") {
  const auto plane = generate(GeneratorSpec::plane_patch(3, 2, 1.0, 0.25));
  CHECK(jones_exact(plane, std::nullopt, 0.01, 10.0).total < 1e-20);
  const auto mu = random_cloud(2, 1.5, 10, 1.0, 3);
  CHECK_THROWS(jones_exact(mu, std::nullopt, 0.01, 1.0));
  CHECK_THROWS(wolff_exact(mu, std::nullopt, 0.0, 1.0));
}

TEST_CASE("energy invariants: per-atom sum, truncation and restriction monotonicity") {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const auto mu = random_cloud(2, 1.0, 40, 1.0, seed);
    const auto lat = DyadicLattice::standard(2);
    const double a = default_r_min(mu);
    for (auto kind : {EnergyKind::wolff, EnergyKind::jones}) {
      const auto r = energy_exact(mu, kind, std::nullopt, a, 1.0);
      double sum = 0.0;
      for (double v : r.per_atom) sum += v;
      CHECK(rel(sum, r.total) < 1e-12);
      CHECK(energy_exact(mu, kind, std::nullopt, a / 2, 1.0).total >= r.total);
      CHECK(energy_exact(mu, kind, std::nullopt, a, 2.0).total >= r.total);
      // restriction of the measure to Q can only lower the energy over Q
      const DyadicCube q{-1, {0, 0}};
      const auto idx = atoms_in_cube(mu, lat, q);
      if (idx.empty()) continue;
      const auto sub = mu.subset(idx);
      const double restricted = energy_exact(sub, kind, CubeRef{lat, q}, a, 1.0).total;
      double full = 0.0;
      for (std::size_t j = 0; j < r.atoms.size(); ++j)
        if (cube_contains(lat, q, mu.point(r.atoms[j]))) full += r.per_atom[j];
      CHECK(restricted <= full * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("dyadic sum for a single atom at one level") {
  const double w = 1.7;
  DiscreteMeasure mu(2, 1.0, {0.1, 0.2}, {w});
  const auto lat = DyadicLattice::standard(2);
  for (int k = -2; k <= 1; ++k) {
    const auto sum = dyadic_energy_sum(mu, lat, EnergyKind::wolff, k, k);
    double hand = 0.0;
    for (const auto& q : charged_cubes(mu, lat, k, k)) {
      const double I = w * phi_cube(lat, q, mu.point(0));
      const double D = I / std::pow(2.0, k);
      hand += D * D * I;
    }
    CHECK(rel(sum.total, hand) < 1e-12);
  }
}

TEST_CASE("dyadic domination ratio stays below the pinned constant") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const auto mu = random_cloud(2, 1.0, 30, 1.0, seed);
    const auto lat = DyadicLattice::standard(2);
    const auto lv = default_levels(mu);
    for (auto kind : {EnergyKind::wolff, EnergyKind::jones}) {
      const auto rep = verify_dyadic_domination(mu, lat, kind, lv.lo, lv.hi);
      CHECK(rep.violations == 0);
      CHECK(rep.max_ratio <= dyadic_domination_constant(kind, 1.0));
    }
  }
}

TEST_CASE("carleson sweep is zero on a line in the plane") {
  const auto line = generate(GeneratorSpec::plane_patch(2, 1, 1.0, 1.0 / 16));
  const auto lat = DyadicLattice::standard(2);
  const auto lv = default_levels(line);
  const auto res = carleson_sweep(line, lat, EnergyKind::jones, lv.lo, lv.hi,
                                  default_r_min(line), std::numeric_limits<double>::infinity());
  CHECK(res.sup < 1e-20);
}
