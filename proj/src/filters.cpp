#include "mscale/filters.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>

namespace mscale {

FilterConfig FilterConfig::make(double s, std::optional<double> eps, std::optional<double> delta,
                                std::optional<int> M) {
  FilterConfig c;
  const double cs = is_integer(s) ? std::round(s) : std::ceil(s);
  c.n = static_cast<int>(cs) - 1;
  if (eps) c.eps = *eps;
  c.delta = delta ? *delta : 0.4 * (s - c.n - c.eps);
  if (M) c.M = *M;
  c.upsilon = is_integer(s) ? Upsilon::beta_times_density : Upsilon::density;
  c.validate(s);
  return c;
}

void FilterConfig::validate(double s) const {
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("filter config: eps must lie in (0,1)");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("filter config: delta must lie in (0,1)");
  if (M < 1) throw ValidationError("filter config: M must be positive");
  if (!(n + 2.0 * delta + eps < s)) throw ValidationError("filter config: need n + 2 delta + eps < s");
  const double fl = is_integer(s) ? std::round(s) : std::floor(s);
  if (!(s + 2.0 * eps < fl + 1.0)) throw ValidationError("filter config: need s + 2 eps < floor(s) + 1");
  if (upsilon == Upsilon::beta_times_density && !is_integer(s))
    throw ValidationError("filter config: beta flavor of Upsilon needs integer s");
}

double cube_density(const DiscreteMeasure& mu, const DyadicLattice& lat, const DyadicCube& q) {
  return smoothed_cube_mass(mu, lat, q) / std::pow(side(q), mu.s());
}

namespace {

constexpr double kRel = 1e-12;
constexpr std::size_t kSwapLimit = 512;

// Cubes at `level` whose centre lies within `radius` of the centre of `ref`
// (superset; callers apply the exact predicate).
template <class Fn>
void for_cubes_near(const DyadicCube& ref, int level, double radius, Fn&& fn) {
  const int d = static_cast<int>(ref.index.size());
  const double l = std::ldexp(1.0, level);
  const double scale = std::ldexp(1.0, ref.level - level);
  const double rho = radius / l;
  std::vector<std::int64_t> lo(d), hi(d);
  for (int j = 0; j < d; ++j) {
    const double c = (static_cast<double>(ref.index[j]) + 0.5) * scale;
    lo[j] = static_cast<std::int64_t>(std::floor(c - 0.5 - rho)) - 1;
    hi[j] = static_cast<std::int64_t>(std::ceil(c - 0.5 + rho)) + 1;
  }
  DyadicCube q;
  q.level = level;
  q.index = lo;
  for (;;) {
    fn(q);
    int j = d - 1;
    while (j >= 0 && q.index[j] == hi[j]) {
      q.index[j] = lo[j];
      --j;
    }
    if (j < 0) break;
    ++q.index[j];
  }
}

int gap(const DyadicCube& a, const DyadicCube& b) { return std::abs(a.level - b.level); }

// Pairs with intersecting open 3B balls; centres are computed once.
std::vector<std::vector<std::size_t>> triple_conflicts(const DyadicLattice& lat,
                                                       const std::vector<DyadicCube>& cubes) {
  const int d = lat.dim();
  const double rd = std::sqrt(static_cast<double>(d));
  const std::size_t n = cubes.size();
  std::vector<double> c(n * d), r(n);
  for (std::size_t a = 0; a < n; ++a) {
    const Vec x = centre(lat, cubes[a]);
    for (int j = 0; j < d; ++j) c[a * d + j] = x[j];
    r[a] = 12.0 * rd * side(cubes[a]);
  }
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const double dd = dist(c.data() + a * d, c.data() + b * d, d);
      const double sum = r[a] + r[b];
      bool hit;
      if (dd > sum * (1.0 + 1e-9)) hit = false;
      else if (dd < sum * (1.0 - 1e-9)) hit = true;
      else hit = !balls_disjoint(cubes[a], 12, cubes[b], 12);
      if (hit) {
        out[a].push_back(b);
        out[b].push_back(a);
      }
    }
  return out;
}

// Greedy fill by gain per volume without a conflict graph: each item is tested
// only against the items already chosen.
Selection greedy_lazy(const DyadicLattice& lat, const std::vector<DyadicCube>& cubes,
                      const std::vector<double>& gain, const std::vector<double>& size) {
  const int d = lat.dim();
  const double rd = std::sqrt(static_cast<double>(d));
  const std::size_t n = cubes.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return gain[a] / size[a] > gain[b] / size[b];
  });
  std::vector<double> c(n * d), r(n);
  for (std::size_t a = 0; a < n; ++a) {
    const Vec x = centre(lat, cubes[a]);
    for (int j = 0; j < d; ++j) c[a * d + j] = x[j];
    r[a] = 12.0 * rd * side(cubes[a]);
  }
  Selection s;
  for (auto i : order) {
    bool free = true;
    for (auto k : s.chosen) {
      const double dd = dist(c.data() + i * d, c.data() + k * d, d);
      const double sum = r[i] + r[k];
      if (dd < sum * (1.0 - 1e-9) ||
          (!(dd > sum * (1.0 + 1e-9)) && !balls_disjoint(cubes[i], 12, cubes[k], 12))) {
        free = false;
        break;
      }
    }
    if (free) s.chosen.push_back(i);
  }
  std::sort(s.chosen.begin(), s.chosen.end());
  CompensatedSum g;
  for (auto i : s.chosen) g += gain[i];
  s.gain = g.value();
  return s;
}

}  // namespace

BunchConditions check_bunch(const DiscreteMeasure& mu, const DyadicLattice& lat, const DyadicCube& q,
                            const std::vector<DyadicCube>& bunch, double eps) {
  BunchConditions c;
  const double Iq = smoothed_cube_mass(mu, lat, q);
  const double Dq = Iq / std::pow(side(q), mu.s());
  c.target = Dq * Dq * Iq;
  c.nontrivial = !bunch.empty() && !(bunch.size() == 1 && bunch[0] == q);
  c.density_growth = c.disjoint = c.contained = true;
  CompensatedSum gain;
  for (std::size_t a = 0; a < bunch.size(); ++a) {
    const DyadicCube& p = bunch[a];
    const double Ip = smoothed_cube_mass(mu, lat, p);
    const double Dp = Ip / std::pow(side(p), mu.s());
    const int m = gap(q, p);
    if (!(Dp > std::pow(2.0, eps * m) * Dq)) c.density_growth = false;
    if (!ball_within(p, 12, q, 12)) c.contained = false;
    for (std::size_t b = a + 1; b < bunch.size(); ++b)
      if (!balls_disjoint(p, 12, bunch[b], 12)) c.disjoint = false;
    gain += Dp * Dp * std::pow(2.0, -2.0 * eps * m) * Ip;
  }
  c.gain = gain.value();
  c.gain_exceeds = c.gain > c.target;
  return c;
}

Selection select_exact(const SelectionProblem& p) {
  const std::size_t n = p.gain.size();
  if (n > 64) throw DomainError("select_exact: at most 64 items");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p.gain[a] > p.gain[b]; });
  std::vector<std::size_t> pos(n);
  for (std::size_t k = 0; k < n; ++k) pos[order[k]] = k;
  std::vector<std::uint64_t> conf(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (auto j : p.conflicts[i]) conf[pos[i]] |= std::uint64_t{1} << pos[j];
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t k = n; k-- > 0;) suffix[k] = suffix[k + 1] + p.gain[order[k]];
  double best = 0.0;
  std::uint64_t best_set = 0;
  // depth-first search with the remaining-gain bound
  auto rec = [&](auto&& self, std::size_t k, std::uint64_t chosen, std::uint64_t banned,
                 double cur) -> void {
    if (cur > best) {
      best = cur;
      best_set = chosen;
    }
    if (k == n || cur + suffix[k] <= best) return;
    if (!((banned >> k) & 1U))
      self(self, k + 1, chosen | (std::uint64_t{1} << k), banned | conf[k], cur + p.gain[order[k]]);
    self(self, k + 1, chosen, banned, cur);
  };
  rec(rec, 0, 0, 0, 0.0);
  Selection s;
  for (std::size_t k = 0; k < n; ++k)
    if ((best_set >> k) & 1U) s.chosen.push_back(order[k]);
  std::sort(s.chosen.begin(), s.chosen.end());
  CompensatedSum g;
  for (auto i : s.chosen) g += p.gain[i];
  s.gain = g.value();
  return s;
}

Selection select_greedy(const SelectionProblem& p, const std::vector<double>& size, double stop_at) {
  const std::size_t n = p.gain.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p.gain[a] / size[a] > p.gain[b] / size[b];
  });
  std::vector<int> blocked(n, 0);
  std::vector<char> in(n, 0);
  auto add = [&](std::size_t i) {
    in[i] = 1;
    for (auto j : p.conflicts[i]) ++blocked[j];
  };
  auto remove = [&](std::size_t i) {
    in[i] = 0;
    for (auto j : p.conflicts[i]) --blocked[j];
  };
  auto fill = [&] {
    for (auto i : order)
      if (!in[i] && blocked[i] == 0) add(i);
  };
  auto total = [&] {
    double g = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (in[i]) g += p.gain[i];
    return g;
  };
  fill();
  double cur = total();
  // swap moves: force an item in, evict its conflicts, refill greedily
  const int passes = n <= kSwapLimit ? 4 : 0;
  for (int pass = 0; pass < passes && !(cur > stop_at); ++pass) {
    bool improved = false;
    for (auto j : order) {
      if (in[j]) continue;
      const std::vector<char> save_in = in;
      const std::vector<int> save_blocked = blocked;
      for (auto k : p.conflicts[j])
        if (in[k]) remove(k);
      add(j);
      fill();
      const double g = total();
      if (g > cur * (1.0 + 1e-15)) {
        cur = g;
        improved = true;
        if (cur > stop_at) break;
      } else {
        in = save_in;
        blocked = save_blocked;
      }
    }
    if (!improved) break;
  }
  Selection s;
  for (std::size_t i = 0; i < n; ++i)
    if (in[i]) s.chosen.push_back(i);
  CompensatedSum g;
  for (auto i : s.chosen) g += p.gain[i];
  s.gain = g.value();
  return s;
}

CubeIndex CubeIndex::build(const DiscreteMeasure& mu, const DyadicLattice& lat, int level_min,
                           int level_max) {
  CubeIndex ix;
  ix.s = mu.s();
  ix.table = charged_cube_table(mu, lat, level_min, level_max);
  ix.density.resize(ix.table.size());
  for (std::size_t c = 0; c < ix.table.size(); ++c)
    ix.density[c] = ix.table.mass[c] / std::pow(side(ix.table.cubes[c]), mu.s());
  return ix;
}

namespace {

struct MassDensity {
  double I = 0.0;
  double D = 0.0;
};

MassDensity lookup(const DiscreteMeasure& mu, const DyadicLattice& lat, const CubeIndex& ix,
                   const DyadicCube& q) {
  if (auto k = ix.table.find(q)) return {ix.table.mass[*k], ix.density[*k]};
  const double I = smoothed_cube_mass(mu, lat, q);
  return {I, I / std::pow(side(q), mu.s())};
}

}  // namespace

namespace {

struct PoolEntry {
  DyadicCube cube;
  double I = 0.0;
  double D = 0.0;
};

// Candidates grouped by level and sorted by first index coordinate.
struct CandidatePool {
  std::map<int, std::vector<PoolEntry>> by_level;
  double supD = 0.0;
};

CandidatePool make_pool(const DiscreteMeasure& mu, const DyadicLattice& lat, const CubeIndex& index,
                        const std::vector<DyadicCube>& candidates) {
  CandidatePool pool;
  for (const auto& c : candidates) {
    const MassDensity m = lookup(mu, lat, index, c);
    pool.supD = std::max(pool.supD, m.D);
    pool.by_level[c.level].push_back({c, m.I, m.D});
  }
  for (auto& [k, v] : pool.by_level)
    std::stable_sort(v.begin(), v.end(), [](const PoolEntry& a, const PoolEntry& b) {
      return a.cube.index[0] < b.cube.index[0];
    });
  return pool;
}

BunchSearch search_pool(const DiscreteMeasure& mu, const DyadicLattice& lat, const CubeIndex& index,
                        const DyadicCube& q, const CandidatePool& pool, const FilterConfig& cfg,
                        std::size_t exact_limit) {
  BunchSearch out;
  const MassDensity mq = lookup(mu, lat, index, q);
  const double target = mq.D * mq.D * mq.I;
  const double rd = std::sqrt(static_cast<double>(mu.dim()));
  std::vector<DyadicCube> surv;
  std::vector<double> gains, sizes;
  for (const auto& [level, entries] : pool.by_level) {
    if (level >= q.level) break;
    const int m = q.level - level;
    const double grow = std::pow(2.0, cfg.eps * m) * mq.D;
    // strip of first indices whose 3B can sit inside 3B_Q
    const double f = std::ldexp(1.0, m);
    const double c0 = (static_cast<double>(q.index[0]) + 0.5) * f - 0.5;
    const double R = 12.0 * rd * (f - 1.0) + 1.0;
    const auto lo = static_cast<std::int64_t>(std::floor(c0 - R));
    const auto hi = static_cast<std::int64_t>(std::ceil(c0 + R));
    auto it = std::lower_bound(entries.begin(), entries.end(), lo,
                               [](const PoolEntry& e, std::int64_t v) { return e.cube.index[0] < v; });
    for (; it != entries.end() && it->cube.index[0] <= hi; ++it) {
      if (!(it->D > grow)) continue;
      if (!ball_within(it->cube, 12, q, 12)) continue;
      surv.push_back(it->cube);
      gains.push_back(it->D * it->D * std::pow(2.0, -2.0 * cfg.eps * m) * it->I);
      sizes.push_back(std::pow(side(it->cube), mu.dim()));
      out.max_gap = std::max(out.max_gap, m);
    }
  }
  out.gap_bound = mq.D > 0.0 ? std::log2(pool.supD / mq.D) / cfg.eps
                             : std::numeric_limits<double>::infinity();
  out.candidates = surv.size();
  double all = 0.0;
  for (double g : gains) all += g;
  if (!(all > target)) {
    out.best_gain = all;
    return out;  // even the full candidate set cannot beat the target
  }
  Selection sel;
  if (surv.size() > kSwapLimit) {
    sel = greedy_lazy(lat, surv, gains, sizes);
    out.exact = false;
  } else {
    SelectionProblem prob;
    prob.gain = gains;
    prob.conflicts = triple_conflicts(lat, surv);
    if (surv.size() <= exact_limit) {
      sel = select_exact(prob);
    } else {
      sel = select_greedy(prob, sizes, target);
      out.exact = false;
    }
  }
  out.best_gain = sel.gain;
  if (sel.gain > target) {
    DominationBunch b;
    for (auto i : sel.chosen) b.cubes.push_back(surv[i]);
    b.gain = sel.gain;
    b.target = target;
    out.bunch = std::move(b);
  }
  return out;
}

}  // namespace

BunchSearch find_bunch_below(const DiscreteMeasure& mu, const DyadicLattice& lat,
                             const CubeIndex& index, const DyadicCube& q,
                             const std::vector<DyadicCube>& candidates, const FilterConfig& cfg,
                             std::size_t exact_limit) {
  return search_pool(mu, lat, index, q, make_pool(mu, lat, index, candidates), cfg, exact_limit);
}

GDown g_down(const DiscreteMeasure& mu, const DyadicLattice& lat, const CubeIndex& index,
             const std::vector<DyadicCube>& G, const std::vector<DyadicCube>& G_prime,
             const FilterConfig& cfg) {
  std::vector<BunchSearch> res(G.size());
  std::vector<char> bad(G.size(), 0);
  const CandidatePool pool = make_pool(mu, lat, index, G_prime);
  parallel_for(G.size(), [&](std::size_t i) {
    res[i] = search_pool(mu, lat, index, G[i], pool, cfg, 24);
    if (res[i].bunch && !check_bunch(mu, lat, G[i], res[i].bunch->cubes, cfg.eps).all()) bad[i] = 1;
  });
  GDown out;
  for (std::size_t i = 0; i < G.size(); ++i) {
    if (!res[i].exact) out.certified = false;
    if (bad[i]) {
      ++out.reverify_failures;
      res[i].bunch.reset();
    }
    if (res[i].bunch) out.bunches.emplace(G[i], *res[i].bunch);
    else out.members.push_back(G[i]);
  }
  return out;
}

double down_inner_constant(int d, double eps) {
  const double per_axis = std::floor(24.0 * std::sqrt(static_cast<double>(d))) + 1.0;
  return std::pow(per_axis, d) / (1.0 - std::pow(2.0, -2.0 * eps));
}

namespace {

std::vector<DyadicCube> containment_set(const DyadicCube& P, int level, int d) {
  std::vector<DyadicCube> out;
  const double rd = std::sqrt(static_cast<double>(d));
  const double radius = 12.0 * rd * (std::ldexp(1.0, level) - side(P));
  for_cubes_near(P, level, radius, [&](const DyadicCube& q) {
    if (ball_within(P, 12, q, 12)) out.push_back(q);
  });
  return out;
}

}  // namespace

double down_inner_sum(const DyadicCube& P, int level_max, double eps) {
  const int d = static_cast<int>(P.index.size());
  CompensatedSum acc;
  for (int k = P.level; k <= level_max; ++k) {
    const auto set = containment_set(P, k, d);
    acc += std::pow(2.0, -2.0 * eps * (k - P.level)) * static_cast<double>(set.size());
  }
  return acc.value();
}

std::vector<DyadicCube> splice_bunch(const std::vector<DyadicCube>& outer, const DyadicCube& member,
                                     const std::vector<DyadicCube>& inner) {
  std::vector<DyadicCube> out;
  for (const auto& c : outer)
    if (!(c == member)) out.push_back(c);
  out.insert(out.end(), inner.begin(), inner.end());
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

struct ChainResult {
  bool ok = true;
  double bunch_total = 0.0;
  double usage_total = 0.0;
  double majorant = 0.0;
  double max_inner = 0.0;
  bool usage_within = true;
  std::size_t failures = 0;
};

// Given a bunch for each Q (members P with gap), checks
//   D(Q)^2 I(Q) <= sum_j term(P_j) 2^{-2 eps [Q:P_j]}
//   sum over Q of the right side = sum_P D(P)^2 I(P) usage(P)
//   usage(P) <= inner(P) <= C_inner, with Q using P inside the containment set of P
ChainResult run_chain(const DiscreteMeasure& mu, const DyadicLattice& lat, const CubeIndex& ix,
                      const std::vector<std::pair<DyadicCube, std::vector<DyadicCube>>>& bunches,
                      const FilterConfig& cfg, int level_max) {
  ChainResult r;
  const int d = mu.dim();
  const double C = down_inner_constant(d, cfg.eps);
  std::map<DyadicCube, double> usage;
  std::map<DyadicCube, std::vector<DyadicCube>> users;
  CompensatedSum bunch_total;
  for (const auto& [q, bunch] : bunches) {
    const MassDensity mq = lookup(mu, lat, ix, q);
    CompensatedSum rhs;
    for (const auto& p : bunch) {
      const MassDensity mp = lookup(mu, lat, ix, p);
      const double w = std::pow(2.0, -2.0 * cfg.eps * gap(q, p));
      rhs += mp.D * mp.D * mp.I * w;
      usage[p] += w;
      users[p].push_back(q);
    }
    if (mq.D * mq.D * mq.I > rhs.value() * (1.0 + kRel)) {
      r.ok = false;
      ++r.failures;
    }
    bunch_total += rhs.value();
  }
  r.bunch_total = bunch_total.value();
  CompensatedSum usage_total, majorant;
  // the inner sum depends on P only through its level and its index modulo 2^{level_max - level}
  std::map<DyadicCube, double> inner_cache;
  for (const auto& [p, u] : usage) {
    const MassDensity mp = lookup(mu, lat, ix, p);
    DyadicCube key{p.level, p.index};
    const std::int64_t period = std::int64_t{1} << std::max(0, std::min(level_max - p.level, 40));
    for (auto& v : key.index) v = ((v % period) + period) % period;
    auto [slot, fresh] = inner_cache.try_emplace(key, 0.0);
    if (fresh) {
      DyadicCube rep{p.level, key.index};
      slot->second = down_inner_sum(rep, level_max, cfg.eps);
    }
    const double inner = slot->second;
    r.max_inner = std::max(r.max_inner, inner);
    usage_total += mp.D * mp.D * mp.I * u;
    majorant += mp.D * mp.D * mp.I * inner;
    if (u > inner * (1.0 + kRel) || inner > C) {
      r.ok = false;
      ++r.failures;
    }
    for (const auto& q : users[p])
      if (!ball_within(p, 12, q, 12) || q.level > level_max) {
        r.usage_within = false;
        r.ok = false;
      }
  }
  r.usage_total = usage_total.value();
  r.majorant = majorant.value();
  if (std::fabs(r.bunch_total - r.usage_total) > kRel * std::max(1.0, r.bunch_total)) r.ok = false;
  return r;
}

}  // namespace

DownLemmaReport verify_down_lemmas(const DiscreteMeasure& mu, const DyadicLattice& lat,
                                   const std::vector<DyadicCube>& G,
                                   const std::vector<DyadicCube>& G_prime, const FilterConfig& cfg,
                                   int level_min, int level_max) {
  DownLemmaReport rep;
  const int d = mu.dim();
  rep.C_inner = down_inner_constant(d, cfg.eps);
  rep.c_eps = 1.0 / rep.C_inner;
  const CubeIndex ix = CubeIndex::build(mu, lat, level_min, level_max);
  auto term = [&](const DyadicCube& q) {
    const MassDensity m = lookup(mu, lat, ix, q);
    return m.D * m.D * m.I;
  };

  // lemma with G' = G: splice bunches until every member lies in G_down
  const GDown gd = g_down(mu, lat, ix, G, G, cfg);
  rep.certified = gd.certified;
  rep.bunch_failures = gd.reverify_failures;
  const std::set<DyadicCube> down(gd.members.begin(), gd.members.end());
  std::vector<std::pair<DyadicCube, std::vector<DyadicCube>>> final_bunches;
  CompensatedSum sG, sGd;
  for (const auto& q : G) {
    sG += term(q);
    if (down.count(q)) {
      sGd += term(q);
      final_bunches.push_back({q, {q}});
      continue;
    }
    std::vector<DyadicCube> b = gd.bunches.at(q).cubes;
    for (;;) {
      auto it = std::find_if(b.begin(), b.end(), [&](const DyadicCube& c) { return !down.count(c); });
      if (it == b.end()) break;
      const DyadicCube member = *it;
      b = splice_bunch(b, member, gd.bunches.at(member).cubes);
    }
    if (!check_bunch(mu, lat, q, b, cfg.eps).all()) ++rep.bunch_failures;
    final_bunches.push_back({q, b});
  }
  rep.sum_G = sG.value();
  rep.sum_G_down = sGd.value();
  rep.ratio = rep.sum_G > 0.0 ? rep.sum_G_down / rep.sum_G : 1.0;
  const ChainResult c1 = run_chain(mu, lat, ix, final_bunches, cfg, level_max);
  rep.max_inner_sum = c1.max_inner;
  rep.usage_within_containment = c1.usage_within;
  rep.chain_holds = c1.ok && rep.sum_G <= c1.bunch_total * (1.0 + kRel) &&
                    c1.majorant <= rep.C_inner * rep.sum_G_down * (1.0 + kRel) &&
                    rep.sum_G <= c1.majorant * (1.0 + kRel) && rep.bunch_failures == 0;
  if (!gd.certified) rep.notes.push_back("G_down membership heuristic for some cubes");

  // lemma with general G'
  const GDown gd2 = g_down(mu, lat, ix, G, G_prime, cfg);
  rep.certified = rep.certified && gd2.certified;
  rep.bunch_failures += gd2.reverify_failures;
  std::vector<std::pair<DyadicCube, std::vector<DyadicCube>>> b2;
  CompensatedSum sminus, sprime;
  for (const auto& [q, b] : gd2.bunches) {
    sminus += term(q);
    b2.push_back({q, b.cubes});
  }
  for (const auto& p : G_prime) sprime += term(p);
  rep.sum_G_minus = sminus.value();
  rep.sum_G_prime = sprime.value();
  const ChainResult c2 = run_chain(mu, lat, ix, b2, cfg, level_max);
  rep.chain2_majorant = c2.majorant;
  rep.max_inner_sum = std::max(rep.max_inner_sum, c2.max_inner);
  rep.usage_within_containment = rep.usage_within_containment && c2.usage_within;
  rep.chain2_holds = c2.ok && rep.sum_G_minus <= c2.bunch_total * (1.0 + kRel) &&
                     rep.sum_G_minus <= c2.majorant * (1.0 + kRel) &&
                     c2.majorant <= rep.C_inner * rep.sum_G_prime * (1.0 + kRel);
  return rep;
}

// ------------------------------------------------------------ D_M

std::vector<DyadicCube> d_M_set(const DiscreteMeasure& mu, const DyadicLattice& lat,
                                const FilterConfig& cfg, int level_min, int level_max) {
  const CubeTable t = charged_cube_table(mu, lat, level_min, level_max + cfg.M);
  const double e = cfg.n + cfg.delta;
  const double rd = std::sqrt(static_cast<double>(mu.dim()));
  std::vector<char> keep(t.size(), 0);
  parallel_for(t.size(), [&](std::size_t c) {
    const DyadicCube& q = t.cubes[c];
    if (q.level > level_max) return;
    const double Dq = t.mass[c] / std::pow(side(q), e);
    bool ok = true;
    for (int m = 1; m <= cfg.M && ok; ++m) {
      const int k = q.level + m;
      const double radius = 4.0 * rd * (std::ldexp(1.0, k) - side(q));
      for_cubes_near(q, k, radius, [&](const DyadicCube& a) {
        if (!ok || !ball_within(q, 4, a, 4)) return;
        const auto idx = t.find(a);
        if (!idx) return;
        if (t.mass[*idx] / std::pow(side(a), e) > Dq) ok = false;
      });
    }
    keep[c] = ok;
  });
  std::vector<DyadicCube> out;
  for (std::size_t c = 0; c < t.size(); ++c)
    if (keep[c]) out.push_back(t.cubes[c]);
  return out;
}

// ------------------------------------------------------------ domination from above

UpFilter up_filter(const DiscreteMeasure& mu, const DyadicLattice& lat, const FilterConfig& cfg,
                   int level_min, int level_max) {
  cfg.validate(mu.s());
  const CubeTable t = charged_cube_table(mu, lat, level_min, level_max);
  UpFilter up;
  up.cubes = t.cubes;
  up.mass = t.mass;
  up.upsilon.assign(t.size(), 0.0);
  parallel_for(t.size(), [&](std::size_t c) {
    const double D = t.mass[c] / std::pow(side(t.cubes[c]), mu.s());
    double u = D;
    if (cfg.upsilon == Upsilon::beta_times_density)
      u *= beta_cube(mu, lat, t.cubes[c], static_cast<int>(std::lround(mu.s()))).value;
    up.upsilon[c] = u;
  });
  up.in_up.assign(t.size(), true);
  up.dominator.assign(t.size(), -1);
  const double rd = std::sqrt(static_cast<double>(mu.dim()));
  parallel_for(t.size(), [&](std::size_t c) {
    const DyadicCube& q = t.cubes[c];
    for (int k = level_max; k > q.level; --k) {
      const int m = k - q.level;
      const double radius = 2.0 * rd * std::ldexp(1.0, k) - 4.0 * rd * side(q);
      if (radius < 0.0) continue;
      long best = -1;
      for_cubes_near(q, k, radius, [&](const DyadicCube& a) {
        const auto idx = t.find(a);
        if (!idx || !ball_within(q, 4, a, 2)) return;
        if (up.upsilon[*idx] > std::pow(2.0, cfg.eps * m) * up.upsilon[c]) {
          if (best < 0 || t.cubes[*idx] < t.cubes[static_cast<std::size_t>(best)])
            best = static_cast<long>(*idx);
        }
      });
      if (best >= 0) {
        up.in_up[c] = false;
        up.dominator[c] = best;
        break;
      }
    }
  });
  return up;
}

double up_constant(int d, double eps) {
  return std::pow(8.0 * std::sqrt(static_cast<double>(d)) + 2.0, d) / (std::pow(2.0, 2.0 * eps) - 1.0);
}

UpLemmaReport verify_up_lemma(const DiscreteMeasure& mu, const DyadicLattice& /*lat*/,
                              const UpFilter& up, const FilterConfig& cfg) {
  UpLemmaReport rep;
  const int d = mu.dim();
  const double Cup = up_constant(d, cfg.eps);
  const double overlap = std::pow(8.0 * std::sqrt(static_cast<double>(d)) + 2.0, d);
  rep.c_eps = 1.0 / (1.0 + Cup);
  std::unordered_map<DyadicCube, std::size_t, CubeHash> where;
  for (std::size_t c = 0; c < up.cubes.size(); ++c) where.emplace(up.cubes[c], c);
  CompensatedSum all, inside;
  // group[P][m] = sum of I(Q) over Q with dominator P at gap m
  std::map<std::pair<std::size_t, int>, double> group;
  for (std::size_t c = 0; c < up.cubes.size(); ++c) {
    const double t = up.upsilon[c] * up.upsilon[c] * up.mass[c];
    all += t;
    if (up.in_up[c]) {
      inside += t;
      continue;
    }
    if (!(up.upsilon[c] > 0.0)) continue;
    const std::size_t p = static_cast<std::size_t>(up.dominator[c]);
    const int m = up.cubes[p].level - up.cubes[c].level;
    bool ok = up.in_up[p];
    ok = ok && ball_within(up.cubes[c], 4, up.cubes[p], 2);
    ok = ok && up.upsilon[c] * up.upsilon[c] <=
                   std::pow(2.0, -2.0 * cfg.eps * m) * up.upsilon[p] * up.upsilon[p];
    if (!ok) ++rep.chain_failures;
    group[{p, m}] += up.mass[c];
  }
  rep.sum_all = all.value();
  rep.sum_up = inside.value();
  rep.ratio = rep.sum_all > 0.0 ? rep.sum_up / rep.sum_all : 1.0;
  CompensatedSum maj;
  const double rd = std::sqrt(static_cast<double>(d));
  for (const auto& [key, gsum] : group) {
    const auto [p, m] = key;
    const DyadicCube& P = up.cubes[p];
    CompensatedSum bracket;
    const int k = P.level - m;
    for_cubes_near(P, k, 2.0 * rd * side(P), [&](const DyadicCube& q) {
      const auto it = where.find(q);
      if (it != where.end() && ball_within(q, 4, P, 2)) bracket += up.mass[it->second];
    });
    if (gsum > bracket.value() * (1.0 + kRel) || bracket.value() > overlap * up.mass[p] * (1.0 + kRel))
      ++rep.chain_failures;
    maj += std::pow(2.0, -2.0 * cfg.eps * m) * up.upsilon[p] * up.upsilon[p] * bracket.value();
  }
  rep.majorant = maj.value();
  const double outside = rep.sum_all - rep.sum_up;
  rep.chain_holds = rep.chain_failures == 0 && outside <= rep.majorant * (1.0 + kRel) + 1e-300 &&
                    rep.majorant <= Cup * rep.sum_up * (1.0 + kRel);
  return rep;
}

DensBetaReport densbetadoub_check(const DiscreteMeasure& mu, const DyadicLattice& lat,
                                  const DyadicCube& q, const FilterConfig& cfg, int level_max) {
  DensBetaReport rep;
  const double s = mu.s();
  const double Iq = smoothed_cube_mass(mu, lat, q);
  if (!(Iq > 0.0)) throw DomainError("densbetadoub_check: I_mu(Q) = 0");
  const double Dq = Iq / std::pow(side(q), s);
  const bool use_beta = cfg.upsilon == Upsilon::beta_times_density;
  double bq = 0.0;
  if (use_beta) {
    bq = beta_cube(mu, lat, q, static_cast<int>(std::lround(s))).value;
    rep.beta_skipped = !(bq > 0.0);
  }
  const double rd = std::sqrt(static_cast<double>(mu.dim()));
  auto check = [&](const DyadicCube& a) {
    DensBetaRow row;
    row.ancestor = a;
    const double I = smoothed_cube_mass(mu, lat, a);
    const double D = I / std::pow(side(a), s);
    const double ratio = side(a) / side(q);
    row.side_ratio = ratio;
    row.density_ratio = D / Dq;
    row.mass_monotone = I >= Iq * (1.0 - kRel);
    row.density_lower = std::pow(1.0 / ratio, s) * Dq <= D * (1.0 + kRel);
    if (use_beta) {
      row.density_upper = D <= std::pow(ratio, s + 2.0 * cfg.eps) * Dq * (1.0 + kRel);
      row.density_upper_corrected = D <= std::pow(ratio, s + 2.0 + 2.0 * cfg.eps) * Dq * (1.0 + kRel);
      if (!rep.beta_skipped) {
        row.beta_checked = true;
        const double b = beta_cube(mu, lat, a, static_cast<int>(std::lround(s))).value;
        row.beta_upper = b <= std::pow(ratio, s + cfg.eps) * bq * (1.0 + kRel);
      }
    } else {
      row.density_upper = D <= std::pow(ratio, cfg.eps) * Dq * (1.0 + kRel);
      row.density_upper_corrected = row.density_upper;
    }
    rep.rows.push_back(row);
  };
  check(q);
  for (int k = q.level + 1; k <= level_max; ++k) {
    const double radius = 2.0 * rd * std::ldexp(1.0, k) - 4.0 * rd * side(q);
    if (radius < 0.0) continue;
    for_cubes_near(q, k, radius, [&](const DyadicCube& a) {
      if (ball_within(q, 4, a, 2)) check(a);
    });
  }
  rep.all_pass_corrected = rep.all_pass_stated = true;
  for (const auto& r : rep.rows) {
    const bool base = r.mass_monotone && r.density_lower && (!r.beta_checked || r.beta_upper);
    rep.all_pass_corrected = rep.all_pass_corrected && base && r.density_upper_corrected;
    rep.all_pass_stated = rep.all_pass_stated && base && r.density_upper;
  }
  return rep;
}

// ------------------------------------------------------------ pruning

double pruning_constant(double s) {
  return 64.0 * std::pow(4.0, 2.0 * s + 2.0) / std::log(4.0 / 3.0);
}

PruningReport pruning_check(const DiscreteMeasure& mu, const AffinePlane& plane, double R,
                            double beta, double Delta, const double* centre, int t_nodes) {
  if (!(R > 0.0 && beta > 0.0 && Delta > 0.0))
    throw DomainError("pruning_check: R, beta and Delta must be positive");
  const int d = mu.dim();
  const double s = mu.s();
  std::vector<double> zero(d, 0.0);
  const double* o = centre ? centre : zero.data();
  PruningReport rep;
  rep.ball_mass = ball_mass(mu, o, R);
  if (!(rep.ball_mass > 0.0)) throw DomainError("pruning_check: mu(B(0,R)) = 0");
  const double mB = rep.ball_mass;
  const std::size_t N = mu.size();
  std::vector<double> r0(N), dL(N);
  CompensatedSum hyp;
  for (std::size_t i = 0; i < N; ++i) {
    r0[i] = dist(mu.point(i), o, d);
    dL[i] = plane.distance(mu.point(i));
    if (r0[i] < 10.0 * R) hyp += mu.weight(i) * (dL[i] / R) * (dL[i] / R);
  }
  rep.hypothesis = hyp.value() / mB;
  if (rep.hypothesis > beta * beta)
    throw DomainError("pruning_check: hypothesis violated, measured " +
                      std::to_string(rep.hypothesis) + " > beta^2 = " + std::to_string(beta * beta));
  const Mat normals = plane.normals();
  rep.codim = static_cast<int>(normals.cols());
  rep.C_prune = pruning_constant(s);
  rep.corollary_constant = std::pow(rep.codim, 3) * rep.C_prune;

  // right side: midpoint rule in log t on (3R, 4R)
  const LogGrid g = [&] {
    LogGrid lg;
    lg.h = std::log(4.0 / 3.0) / t_nodes;
    for (int j = 0; j < t_nodes; ++j) lg.t.push_back(3.0 * R * std::exp((j + 0.5) * lg.h));
    return lg;
  }();
  // raw field numerators sum w (x - y) phi(|x - y|/t) at the atoms of B(0,2R)
  std::vector<std::size_t> inner;
  for (std::size_t i = 0; i < N; ++i)
    if (r0[i] < 2.0 * R) inner.push_back(i);
  std::vector<std::vector<Vec>> num(inner.size(), std::vector<Vec>(g.t.size()));
  parallel_for(inner.size(), [&](std::size_t a) {
    const double* x = mu.point(inner[a]);
    for (std::size_t j = 0; j < g.t.size(); ++j) {
      Vec acc = Vec::Zero(d);
      for (std::size_t k = 0; k < N; ++k) {
        const double p = bump(dist(x, mu.point(k), d) / g.t[j]);
        if (p > 0.0)
          for (int c = 0; c < d; ++c) acc[c] += mu.weight(k) * p * (x[c] - mu.point(k)[c]);
      }
      num[a][j] = acc;
    }
  });
  CompensatedSum rhs;
  for (std::size_t a = 0; a < inner.size(); ++a) {
    CompensatedSum tint;
    for (std::size_t j = 0; j < g.t.size(); ++j)
      tint += num[a][j].squaredNorm() * std::pow(g.t[j], -2.0 * s - 2.0) * g.h;
    rhs += mu.weight(inner[a]) * tint.value();
  }
  rep.rhs = rhs.value();

  rep.min_pointwise_ratio = std::numeric_limits<double>::infinity();
  const double dens = mB / std::pow(R, s);
  for (int h = 0; h < rep.codim; ++h) {
    const Vec e = normals.col(h);
    std::vector<double> z(N);
    for (std::size_t i = 0; i < N; ++i) {
      double v = 0.0;
      for (int c = 0; c < d; ++c) v += (mu.point(i)[c] - plane.base[c]) * e[c];
      z[i] = v;
    }
    CompensatedSum lhs;
    for (std::size_t a = 0; a < inner.size(); ++a) {
      const std::size_t i = inner[a];
      if (!(std::fabs(z[i]) > 3.0 * beta * R)) continue;
      lhs += mu.weight(i) * (z[i] / R) * (z[i] / R);
      const double sg = z[i] > 0.0 ? 1.0 : -1.0;
      CompensatedSum high, tail;
      for (std::size_t k = 0; k < N; ++k) {
        const double zk = sg * z[k];
        if (r0[k] < R && zk >= 2.0 * beta * R) high += mu.weight(k);
        if (r0[k] < 10.0 * R && zk > 3.0 * beta * R) tail += mu.weight(k) * std::fabs(z[k]);
      }
      if (high.value() > 0.25 * mB || tail.value() > beta * R * mB / 3.0) {
        ++rep.conditions_failed;
        continue;
      }
      const double bound = std::fabs(z[i]) * mB / 8.0;
      for (std::size_t j = 0; j < g.t.size(); ++j) {
        ++rep.pointwise_checked;
        const double comp = std::fabs(num[a][j].dot(e));
        rep.min_pointwise_ratio = std::min(rep.min_pointwise_ratio, comp / bound);
        if (comp < bound) ++rep.pointwise_failures;
      }
    }
    rep.lhs_max = std::max(rep.lhs_max, dens * dens * lhs.value());
  }
  if (rep.pointwise_checked == 0) rep.min_pointwise_ratio = 0.0;
  rep.lemma_holds = rep.lhs_max <= rep.C_prune * rep.rhs * (1.0 + kRel);
  CompensatedSum strip;
  for (std::size_t i = 0; i < N; ++i)
    if (r0[i] < 2.0 * R && dL[i] > 3.0 * beta * rep.codim * R)
      strip += mu.weight(i) * (dL[i] / R) * (dL[i] / R);
  rep.strip_mass = strip.value();
  rep.branch_one = rep.rhs >= Delta * beta * beta * dens * dens * mB;
  rep.branch_two = rep.strip_mass <= rep.corollary_constant * Delta * beta * beta * mB;
  return rep;
}

DiscreteMeasure squash(const DiscreteMeasure& mu, const AffinePlane& plane, double beta) {
  if (!(beta > 0.0)) throw DomainError("squash: beta must be positive");
  const int d = mu.dim();
  std::vector<double> coords(mu.coords());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const Vec p = plane.project(mu.point(i));
    for (int c = 0; c < d; ++c) coords[i * d + c] = p[c] + (mu.point(i)[c] - p[c]) / beta;
  }
  return DiscreteMeasure(d, mu.s(), std::move(coords), mu.weights(), mu.metadata());
}

}  // namespace mscale
