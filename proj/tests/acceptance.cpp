// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// A criterion passes when all of its checks pass and it finishes within its budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mscale/verify.hpp"
#include "oracles.hpp"

using namespace mscale;

namespace {

struct Outcome {
  bool ok = true;
  std::vector<std::string> notes;
  void fail(const std::string& why) {
    ok = false;
    notes.push_back(why);
  }
};

char buf[512];

void absorb(Outcome& out, const SuiteResult& r) {
  std::snprintf(buf, sizeof buf, "%s: %zu checks, %zu failed, %zu vacuous", r.name.c_str(),
                r.rows.size(), r.failures(), r.vacuous());
  out.notes.push_back(buf);
  for (const auto& row : r.rows)
    if (row.status == CheckStatus::fail) {
      std::snprintf(buf, sizeof buf, "  failed %s: measured %.6g %s %.6g [%s] %s", row.name.c_str(),
                    row.measured, row.relation.c_str(), row.threshold, row.tag.c_str(),
                    row.detail.c_str());
      out.fail(buf);
    }
}

Outcome suites(std::initializer_list<const char*> names) {
  Outcome out;
  for (const char* n : names) absorb(out, run_suite(n));
  return out;
}

// LP inner optimum against the simplex oracle on instances with at most 12 nodes.
Outcome lp_oracle() {
  Outcome out;
  std::size_t tested = 0;
  double worst = 0.0;
  auto compare = [&](const TransportLP& lp) {
    const double got = solve_transport_lp(lp).value;
    const double want = oracle::lp_simplex(lp);
    const double err = std::fabs(got - want) / std::max(1.0, std::fabs(want));
    worst = std::max(worst, err);
    ++tested;
  };
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const int d = 2 + static_cast<int>(seed % 2);
    const auto mu = random_cloud(d, d - 1.0, 3 + seed % 3, 1.0, seed);
    const auto lat = DyadicLattice::standard(d);
    const DyadicCube q{0, std::vector<std::int64_t>(d, 0)};
    const auto fit = beta_cube(mu, lat, q, d - 1);
    try {
      const auto vt = vartheta(mu, lat, q, fit.plane, 1.0 / 32);
      const auto lp = alpha_inner_lp(mu, lat, q, fit.plane, vt.theta, d == 2 ? 2.0 : 4.0);
      if (lp.coeff.size() <= 12) compare(lp);
    } catch (const DomainError&) {
    }
  }
  Rng rng(2024);
  for (int k = 0; k < 100; ++k) {
    TransportLP lp;
    lp.dim = 2 + k % 2;
    lp.scale = rng.uniform(0.5, 2.0);
    const std::size_t n = 2 + k % 11;
    for (std::size_t i = 0; i < n; ++i) {
      for (int j = 0; j < lp.dim; ++j) lp.coords.push_back(rng.uniform(-1, 1));
      lp.coeff.push_back(rng.uniform(-1, 1));
      lp.bound.push_back(rng.uniform(0, 1.5));
    }
    compare(lp);
  }
  std::snprintf(buf, sizeof buf, "LP oracle: %zu instances, max relative error %.3g", tested, worst);
  out.notes.push_back(buf);
  if (worst > 1e-4) out.fail("LP optimum differs from the simplex oracle by more than 1e-4");
  if (tested < 50) out.fail("too few LP instances with at most 12 nodes");
  return out;
}

Outcome energy_oracle() {
  Outcome out;
  struct Fixture {
    std::string name;
    DiscreteMeasure mu;
  };
  std::vector<Fixture> fx;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const int d = 2 + static_cast<int>(seed % 2);
    const double s = seed % 4 == 0 ? 1.5 : static_cast<double>(1 + seed % (d - 1));
    fx.push_back({"random_cloud seed " + std::to_string(seed),
                  random_cloud(d, s, 20 + 10 * seed, 1.0, seed)});
  }
  for (int g = 1; g <= 3; ++g)
    fx.push_back({"cantor_four_corner gen " + std::to_string(g),
                  generate(GeneratorSpec::cantor_four_corner(g))});
  for (int g = 1; g <= 3; ++g)
    fx.push_back({"cantor_self_similar gen " + std::to_string(g),
                  generate(GeneratorSpec::cantor_self_similar(2, 0.3, g))});
  fx.push_back({"lipschitz_graph", generate(GeneratorSpec::lipschitz_graph(2, 1, 0.3, 1.0, 1.0 / 32))});
  fx.push_back({"plane_patch", generate(GeneratorSpec::plane_patch(3, 2, 1.0, 0.25))});
  fx.push_back({"phi_symmetric_example",
                generate(GeneratorSpec::phi_symmetric_example(1, {{0.0, 0.0}, {0.0, 0.5}}, {1.0, 2.0},
                                                              1.0, 0.1))});
  double worst = 0.0;
  std::size_t compared = 0;
  for (const auto& f : fx) {
    if (f.mu.size() > 100) {
      out.notes.push_back("skipped " + f.name + " (more than 100 atoms)");
      continue;
    }
    const double a = default_r_min(f.mu), b = 2.0 * f.mu.diam() + 1.0;
    const bool integer = is_integer(f.mu.s());
    for (auto kind : {EnergyKind::wolff, EnergyKind::jones}) {
      if (kind == EnergyKind::jones && !integer) continue;
      const double got = energy_exact(f.mu, kind, std::nullopt, a, b).total;
      const double want = oracle::energy_quadrature(f.mu, kind, std::nullopt, a, b);
      // Jones energies of flat fixtures vanish; compare on the Wolff scale there
      const double floor = 1e-12 * oracle::energy_quadrature(f.mu, EnergyKind::wolff, std::nullopt, a, b);
      const double err = std::fabs(got - want) / std::max(std::fabs(want), floor);
      worst = std::max(worst, err);
      ++compared;
      if (err > 1e-5) {
        std::snprintf(buf, sizeof buf, "%s %s: exact %.12g, quadrature %.12g", f.name.c_str(),
                      to_string(kind).c_str(), got, want);
        out.fail(buf);
      }
    }
  }
  std::snprintf(buf, sizeof buf, "%zu comparisons on %zu fixtures, max relative error %.3g", compared,
                fx.size(), worst);
  out.notes.push_back(buf);
  return out;
}

struct Criterion {
  int id;
  const char* name;
  double budget;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> all = {
      {1, "sandwich and inclusion chains", 10, [] { return suites({"sandwich"}); }},
      {2, "least-squares plane optimality and centroid", 30, [] { return suites({"eigen_plane"}); }},
      {3, "beta squared below C_w alpha; LP oracle", 120,
       [] {
         auto o = suites({"beta_alpha"});
         auto l = lp_oracle();
         o.ok = o.ok && l.ok;
         o.notes.insert(o.notes.end(), l.notes.begin(), l.notes.end());
         return o;
       }},
      {4, "exact energies against quadrature", 120, energy_oracle},
      {5, "dyadic domination", 60, [] { return suites({"dyadic_domination"}); }},
      {6, "overlap census", 10, [] { return suites({"overlap"}); }},
      {7, "sign decomposition identity", 10, [] { return suites({"sign_decomposition"}); }},
      {8, "multiplicative convolution bound", 30, [] { return suites({"conv_bound"}); }},
      {9, "symmetry diagnostics", 120, [] { return suites({"growth_identity", "symmetry"}); }},
      {10, "filter lemmas", 180, [] { return suites({"filters"}); }},
      {11, "pruning lemma and alternative", 60, [] { return suites({"pruning"}); }},
      {12, "energy trends", 300, [] { return suites({"trends"}); }},
  };
  int failed = 0;
  std::vector<std::string> lines;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (sec > c.budget) {
      std::snprintf(buf, sizeof buf, "runtime %.1f s over budget %.0f s", sec, c.budget);
      o.fail(buf);
    }
    for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
    std::snprintf(buf, sizeof buf, "criterion %2d: %s  %s (%.1f s, budget %.0f s)", c.id,
                  o.ok ? "PASS" : "FAIL", c.name, sec, c.budget);
    std::printf("%s\n", buf);
    std::fflush(stdout);
    lines.push_back(buf);
    if (!o.ok) ++failed;
  }
  std::printf("\nsummary\n");
  for (const auto& l : lines) std::printf("%s\n", l.c_str());
  std::printf("%d of %zu criteria failed\n", failed, all.size());
  return failed == 0 ? 0 : 1;
}
