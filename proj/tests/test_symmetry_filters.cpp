#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mscale/filters.hpp"
#include "mscale/symmetry.hpp"
#include "oracles.hpp"

using namespace mscale;

TEST_CASE("growth identity holds on random clouds") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const int d = 2 + static_cast<int>(seed % 2);
    const auto mu = random_cloud(d, 1.0, 30, 1.0, seed);
    const Vec o = Vec::Zero(d);
    for (double r : {0.2, 0.5, 1.0}) {
      const auto g = growth_identity_check(mu, o.data(), r);
      CHECK(g.defect <= 1e-12 * std::max(1.0, mu.total_mass()));
    }
  }
}

TEST_CASE("symmetry defect vanishes at the centre of a symmetric configuration") {
  // a centred square of equal atoms
  DiscreteMeasure mu(2, 1.0, {0, 0, 1, 0, -1, 0, 0, 1, 0, -1}, {1, 1, 1, 1, 1});
  const double x[2] = {0.0, 0.0};
  for (double t : {0.6, 1.0, 1.5}) CHECK(symmetry_defect_at(mu, x, t) < 1e-15);
  // breaking the symmetry is detected
  DiscreteMeasure nu(2, 1.0, {0, 0, 1, 0, -1, 0, 0, 1}, {1, 1, 1, 1});
  CHECK(symmetry_defect_at(nu, x, 1.0) > 0.01);
}

TEST_CASE("Mattila-Preiss residual vanishes at the origin") {
  const auto line = generate(GeneratorSpec::plane_patch(2, 1, 40.0, 0.25));
  auto cfg = SymmetryConfig::make(2, geometric_grid(1.0, 2.0, 5), {}, 1.0, 16.0, 4.0);
  const double o[2] = {0.0, 0.0};
  const auto mp = mattila_preiss_residual(line, o, o, 2.0, 16, cfg);
  CHECK(mp.residual == 0.0);
}

TEST_CASE("doubling scales satisfy their definition") {
  const auto mu = generate(GeneratorSpec::plane_patch(2, 1, 40.0, 0.25));
  auto cfg = SymmetryConfig::make(2, geometric_grid(0.5, 2.0, 6), {}, 1.0, 16.0, 4.0);
  const double o[2] = {0.0, 0.0};
  for (double R : doubling_scales(mu, o, cfg)) {
    CHECK(smoothed_mass(mu, o, cfg.tau * R) <= cfg.C_tau * smoothed_mass(mu, o, R));
  }
  CHECK_THROWS(SymmetryConfig::make(2, {1.0}, {}, 2.0, 1.0, 4.0).validate());
}

TEST_CASE("exact selection equals brute-force enumeration; greedy never exceeds it") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.next() % 18;
    SelectionProblem p;
    p.gain.resize(n);
    p.conflicts.assign(n, {});
    std::vector<double> size(n);
    for (std::size_t i = 0; i < n; ++i) {
      p.gain[i] = rng.uniform(0.0, 1.0);
      size[i] = rng.uniform(0.5, 2.0);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng.uniform() < 0.3) {
          p.conflicts[i].push_back(j);
          p.conflicts[j].push_back(i);
        }
    const double want = oracle::best_selection(p.gain, p.conflicts);
    const auto ex = select_exact(p);
    CHECK(ex.gain == doctest::Approx(want).epsilon(1e-12));
    const auto gr = select_greedy(p, size);
    CHECK(gr.gain <= ex.gain * (1 + 1e-12));
    // chosen sets are independent
    for (auto a : gr.chosen)
      for (auto b : p.conflicts[a]) CHECK(std::find(gr.chosen.begin(), gr.chosen.end(), b) == gr.chosen.end());
  }
}

TEST_CASE("filter constants") {
  const double eps = 0.05;
  CHECK(down_inner_constant(2, eps) ==
        doctest::Approx(std::pow(std::floor(24 * std::sqrt(2.0)) + 1, 2) / (1 - std::pow(2.0, -2 * eps))));
  CHECK(up_constant(3, eps) ==
        doctest::Approx(std::pow(8 * std::sqrt(3.0) + 2, 3) / (std::pow(2.0, 2 * eps) - 1)));
  CHECK(pruning_constant(1.0) == doctest::Approx(64 * std::pow(4.0, 4) / std::log(4.0 / 3.0)));
  const auto cfg = FilterConfig::make(1.5);
  CHECK(cfg.n == 1);
  CHECK(cfg.delta == doctest::Approx(0.4 * (1.5 - 1 - 0.05)));
  CHECK(cfg.upsilon == Upsilon::density);
  CHECK(FilterConfig::make(1.0).upsilon == Upsilon::beta_times_density);
}

TEST_CASE("bunches found by the down filter re-verify from scratch") {
  const auto mu = generate(GeneratorSpec::cantor_four_corner(3));
  const auto lat = DyadicLattice::standard(2);
  const auto cfg = FilterConfig::make(mu.s());
  const int lo = -5, hi = 0;
  const auto idx = CubeIndex::build(mu, lat, lo, hi);
  const auto G = charged_cubes(mu, lat, lo, hi);
  const auto gd = g_down(mu, lat, idx, G, G, cfg);
  CHECK(gd.reverify_failures == 0);
  for (const auto& [q, b] : gd.bunches) {
    const auto c = check_bunch(mu, lat, q, b.cubes, cfg.eps);
    CHECK(c.all());
  }
  const auto rep = verify_down_lemmas(mu, lat, G, G, cfg, lo, hi);
  CHECK(rep.chain_holds);
  CHECK(rep.ratio >= rep.c_eps);
}

TEST_CASE("up filter lemma on a graph") {
  const auto mu = generate(GeneratorSpec::lipschitz_graph(2, 1, 0.3, 1.0, 1.0 / 16));
  const auto lat = DyadicLattice::standard(2);
  const auto cfg = FilterConfig::make(mu.s());
  const auto up = up_filter(mu, lat, cfg, -3, 0);
  const auto rep = verify_up_lemma(mu, lat, up, cfg);
  CHECK(rep.chain_holds);
  CHECK(rep.ratio >= rep.c_eps);
  for (std::size_t i = 0; i < up.cubes.size(); ++i) CHECK((up.dominator[i] < 0) == bool(up.in_up[i]));
}

TEST_CASE("squash divides normal components") {
  DiscreteMeasure mu(2, 1.0, {0.5, 0.2, -1.0, -0.4}, {1, 1});
  AffinePlane L;
  L.base = Vec::Zero(2);
  L.basis = Mat(2, 1);
  L.basis << 1, 0;
  const auto sq = squash(mu, L, 0.1);
  CHECK(sq.point(0)[0] == doctest::Approx(0.5));
  CHECK(sq.point(0)[1] == doctest::Approx(2.0));
  CHECK(sq.point(1)[1] == doctest::Approx(-4.0));
}
