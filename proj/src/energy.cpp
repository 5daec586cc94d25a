#include "mscale/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace mscale {

std::string to_string(EnergyKind k) { return k == EnergyKind::wolff ? "wolff" : "jones"; }

EnergyKind energy_kind_from_string(const std::string& s) {
  if (s == "wolff") return EnergyKind::wolff;
  if (s == "jones") return EnergyKind::jones;
  throw ValidationError("unknown energy kind '" + s + "'");
}

namespace {

// sum of the k smallest eigenvalues of a symmetric matrix, clamped at 0
double smallest_sum(const Mat& c, int k) {
  if (k <= 0) return 0.0;
  const int d = static_cast<int>(c.rows());
  if (d == 2 && k == 1) {
    const double a = c(0, 0), b = c(0, 1), e = c(1, 1);
    const double h = 0.5 * (a - e);
    const double lam = 0.5 * (a + e) - std::hypot(h, b);
    return std::max(0.0, lam);
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(c, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (int j = 0; j < k; ++j) s += es.eigenvalues()[j];
  return std::max(0.0, s);
}

}  // namespace

AtomProfile atom_profile(const DiscreteMeasure& mu, std::size_t i,
                         const std::vector<std::size_t>& members, bool with_residual) {
  const int d = mu.dim();
  const double* x = mu.point(i);
  std::vector<std::size_t> idx = members;
  if (idx.empty()) {
    idx.resize(mu.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  }
  std::vector<double> dd(idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a) dd[a] = dist(x, mu.point(idx[a]), d);
  std::vector<std::size_t> order(idx.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dd[a] < dd[b]; });

  const int k = with_residual ? d - static_cast<int>(std::lround(mu.s())) : 0;
  AtomProfile p;
  CompensatedSum mass;
  // weighted centroid and scatter, updated in the stable rank-one form
  double W = 0.0;
  Vec c = Vec::Zero(d);
  Mat C = Mat::Zero(d, d);
  Vec delta(d);
  std::size_t a = 0;
  while (a < order.size()) {
    const double r = dd[order[a]];
    while (a < order.size() && dd[order[a]] == r) {
      const std::size_t j = idx[order[a]];
      const double w = mu.weight(j);
      mass += w;
      if (with_residual) {
        const double Wn = W + w;
        for (int t = 0; t < d; ++t) delta[t] = (mu.point(j)[t] - x[t]) - c[t];
        c += (w / Wn) * delta;
        C += (w * W / Wn) * (delta * delta.transpose());
        W = Wn;
      }
      ++a;
    }
    p.radius.push_back(r);
    p.mass.push_back(mass.value());
    if (with_residual) p.residual.push_back(smallest_sum(C, k));
  }
  return p;
}

double integrate_profile(const AtomProfile& p, EnergyKind kind, double s, double a, double b) {
  const double inf = std::numeric_limits<double>::infinity();
  CompensatedSum acc;
  const double e = kind == EnergyKind::wolff ? 2.0 * s : 2.0 * s + 2.0;
  for (std::size_t j = 0; j < p.radius.size(); ++j) {
    const double lo = std::max(p.radius[j], a);
    const double hi = std::min(j + 1 < p.radius.size() ? p.radius[j + 1] : inf, b);
    if (!(hi > lo)) continue;
    const double span = std::pow(lo, -e) - (std::isinf(hi) ? 0.0 : std::pow(hi, -e));
    const double m = p.mass[j];
    if (kind == EnergyKind::wolff) {
      acc += m * m * span / e;
    } else {
      const double S = p.residual[j];
      if (S > 0.0) acc += S * m * span / e;
    }
  }
  return acc.value();
}

namespace {

void check_range(double r_min, double r_max) {
  if (!(r_min > 0.0)) throw DomainError("energy: r_min must be positive");
  if (!(r_max > r_min)) throw DomainError("energy: need r_min < r_max");
}

EnergyReport energy_on_members(const DiscreteMeasure& mu, EnergyKind kind,
                               const std::vector<std::size_t>& members, double r_min,
                               double r_max) {
  check_range(r_min, r_max);
  if (kind == EnergyKind::jones && !is_integer(mu.s()))
    throw DomainError("jones energy needs integer s; use the Wolff energy instead");
  EnergyReport rep;
  rep.kind = kind;
  rep.r_min = r_min;
  rep.r_max = r_max;
  rep.atoms = members;
  rep.per_atom.assign(members.size(), 0.0);
  std::vector<std::size_t> bps(members.size(), 0);
  const bool jones = kind == EnergyKind::jones;
  parallel_for(members.size(), [&](std::size_t a) {
    const AtomProfile p = atom_profile(mu, members[a], members, jones);
    rep.per_atom[a] = integrate_profile(p, kind, mu.s(), r_min, r_max);
    bps[a] = p.radius.size();
  });
  CompensatedSum tot;
  for (std::size_t a = 0; a < members.size(); ++a) {
    tot += mu.weight(members[a]) * rep.per_atom[a];
    rep.per_atom[a] *= mu.weight(members[a]);
    rep.breakpoint_count += bps[a];
  }
  rep.total = tot.value();
  return rep;
}

std::vector<std::size_t> region_members(const DiscreteMeasure& mu,
                                        const std::optional<CubeRef>& region) {
  std::vector<std::size_t> m;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (!region || cube_contains(region->lattice, region->cube, mu.point(i))) m.push_back(i);
  return m;
}

}  // namespace

EnergyReport energy_exact(const DiscreteMeasure& mu, EnergyKind kind,
                          const std::optional<CubeRef>& region, double r_min, double r_max) {
  return energy_on_members(mu, kind, region_members(mu, region), r_min, r_max);
}

EnergyReport wolff_exact(const DiscreteMeasure& mu, const std::optional<CubeRef>& region,
                         double r_min, double r_max) {
  return energy_exact(mu, EnergyKind::wolff, region, r_min, r_max);
}

EnergyReport jones_exact(const DiscreteMeasure& mu, const std::optional<CubeRef>& region,
                         double r_min, double r_max) {
  return energy_exact(mu, EnergyKind::jones, region, r_min, r_max);
}

double default_r_min(const DiscreteMeasure& mu) {
  const double m = mu.min_sep();
  if (std::isfinite(m) && m > 0.0) return 2.0 * m;
  return mu.diam() > 0.0 ? 0.5 * mu.diam() : 1.0;
}

DyadicSum dyadic_energy_sum(const DiscreteMeasure& mu, const DyadicLattice& lat, EnergyKind kind,
                            int level_min, int level_max) {
  if (kind == EnergyKind::jones && !is_integer(mu.s()))
    throw DomainError("jones energy needs integer s");
  const CubeTable t = charged_cube_table(mu, lat, level_min, level_max);
  DyadicSum out;
  out.terms.resize(t.size());
  parallel_for(t.size(), [&](std::size_t c) {
    DyadicTerm& row = out.terms[c];
    row.cube = t.cubes[c];
    row.mass = t.mass[c];
    row.density = row.mass / std::pow(side(row.cube), mu.s());
    row.term = row.density * row.density * row.mass;
    if (kind == EnergyKind::jones) {
      row.beta = beta_cube(mu, lat, row.cube).value;
      row.term *= row.beta * row.beta;
    }
  });
  CompensatedSum acc;
  for (const auto& r : out.terms) acc += r.term;
  out.total = acc.value();
  return out;
}

double dyadic_domination_constant(EnergyKind kind, double s) {
  // octave length ln 2, density ratio (l/r)^s <= 2^s; Jones adds (l/r)^2 <= 4
  const double e = kind == EnergyKind::wolff ? 2.0 * s : 2.0 * s + 2.0;
  return std::pow(2.0, e) * std::log(2.0);
}

DominationReport verify_dyadic_domination(const DiscreteMeasure& mu, const DyadicLattice& lat,
                                          EnergyKind kind, int level_min, int level_max) {
  if (level_min >= level_max) throw DomainError("dyadic domination: need level_min < level_max");
  const DyadicSum sum = dyadic_energy_sum(mu, lat, kind, level_min + 1, level_max);
  std::unordered_map<DyadicCube, double, CubeHash> term;
  for (const auto& r : sum.terms) term.emplace(r.cube, r.term);
  DominationReport rep;
  rep.constant = dyadic_domination_constant(kind, mu.s());
  const bool jones = kind == EnergyKind::jones;
  const int levels = level_max - level_min;
  std::vector<double> best(mu.size(), 0.0);
  std::vector<int> best_level(mu.size(), level_min);
  std::vector<std::size_t> viol(mu.size(), 0);
  parallel_for(mu.size(), [&](std::size_t i) {
    const AtomProfile p = atom_profile(mu, i, {}, jones);
    for (int k = level_min; k < level_max; ++k) {
      const double a = std::ldexp(1.0, k);
      const double integral = integrate_profile(p, kind, mu.s(), a, 2.0 * a);
      CompensatedSum maj;
      for (const auto& [q, phi] : cubes_charged_by(lat, k + 1, mu.point(i))) {
        const auto it = term.find(q);
        if (it != term.end()) maj += it->second * phi;
      }
      const double m = maj.value();
      double ratio = 0.0;
      if (integral > 0.0) {
        if (!(m > 0.0)) {
          ++viol[i];
          ratio = std::numeric_limits<double>::infinity();
        } else {
          ratio = integral / m;
        }
      }
      if (ratio > rep.constant * (1.0 + 1e-12)) ++viol[i];
      if (ratio > best[i]) {
        best[i] = ratio;
        best_level[i] = k;
      }
    }
  });
  for (std::size_t i = 0; i < mu.size(); ++i) {
    rep.violations += viol[i];
    if (best[i] > rep.max_ratio) {
      rep.max_ratio = best[i];
      rep.argmax_atom = i;
      rep.argmax_level = best_level[i];
    }
  }
  rep.checked = mu.size() * static_cast<std::size_t>(levels);
  return rep;
}

CarlesonResult carleson_sweep(const DiscreteMeasure& mu, const DyadicLattice& lat, EnergyKind kind,
                              int level_min, int level_max, double r_min, double r_max) {
  if (level_min > level_max) throw DomainError("carleson_sweep: empty level range");
  CarlesonResult out;
  out.r_min = r_min;
  out.r_max = r_max;
  std::map<DyadicCube, std::vector<std::size_t>> cells;
  for (int k = level_min; k <= level_max; ++k)
    for (std::size_t i = 0; i < mu.size(); ++i)
      cells[containing_cube(lat, k, mu.point(i))].push_back(i);
  for (const auto& [q, members] : cells) {
    const EnergyReport rep = energy_on_members(mu, kind, members, r_min, r_max);
    CompensatedSum m;
    for (auto i : members) m += mu.weight(i);
    CarlesonRow row{q, rep.total, m.value(), rep.total / m.value()};
    if (out.rows.empty() || row.ratio > out.sup) {
      out.sup = row.ratio;
      out.argmax = q;
    }
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace mscale
