#include "mscale/lattice.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace mscale {

DyadicLattice DyadicLattice::standard(int dim) { return {Vec::Constant(dim, -0.5)}; }

std::size_t CubeHash::operator()(const DyadicCube& q) const {
  std::size_t h = std::hash<int>()(q.level) * 0x9E3779B97F4A7C15ULL;
  for (auto m : q.index) h = (h ^ std::hash<std::int64_t>()(m)) * 0x100000001B3ULL;
  return h;
}

Vec centre(const DyadicLattice& lat, const DyadicCube& q) {
  const double l = side(q);
  Vec c(lat.dim());
  for (int j = 0; j < lat.dim(); ++j) c[j] = lat.origin[j] + l * (static_cast<double>(q.index[j]) + 0.5);
  return c;
}

double phi_cube(const DyadicLattice& lat, const DyadicCube& q, const double* x) {
  const int d = lat.dim();
  const double l = side(q);
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    const double c = lat.origin[j] + l * (static_cast<double>(q.index[j]) + 0.5);
    s += (x[j] - c) * (x[j] - c);
  }
  return bump(std::sqrt(s) / (2.0 * std::sqrt(static_cast<double>(d)) * l));
}

DyadicCube containing_cube(const DyadicLattice& lat, int level, const double* x) {
  DyadicCube q;
  q.level = level;
  q.index.resize(lat.dim());
  for (int j = 0; j < lat.dim(); ++j)
    q.index[j] = static_cast<std::int64_t>(std::floor(std::ldexp(x[j] - lat.origin[j], -level)));
  return q;
}

bool cube_contains(const DyadicLattice& lat, const DyadicCube& q, const double* x) {
  return containing_cube(lat, q.level, x) == q;
}

double face_distance(const DyadicLattice& lat, const DyadicCube& q, const double* x) {
  const double l = side(q);
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < lat.dim(); ++j) {
    const double lo = lat.origin[j] + l * static_cast<double>(q.index[j]);
    best = std::min({best, std::fabs(x[j] - lo), std::fabs(lo + l - x[j])});
  }
  return best;
}

double cube_ratio(const DyadicCube& a, const DyadicCube& b) {
  return std::fabs(static_cast<double>(a.level - b.level));
}

double smoothed_cube_mass(const DiscreteMeasure& mu, const DyadicLattice& lat,
                          const DyadicCube& q) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double p = phi_cube(lat, q, mu.point(i));
    if (p > 0.0) acc += mu.weight(i) * p;
  }
  return acc.value();
}

double density(const DiscreteMeasure& mu, const DyadicLattice& lat, const DyadicCube& q,
               double n) {
  if (!(n > 0.0)) throw DomainError("density: n must be positive");
  return smoothed_cube_mass(mu, lat, q) / std::pow(side(q), n);
}

double cube_mass(const DiscreteMeasure& mu, const DyadicLattice& lat, const DyadicCube& q) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (cube_contains(lat, q, mu.point(i))) acc += mu.weight(i);
  return acc.value();
}

std::vector<std::size_t> atoms_in_cube(const DiscreteMeasure& mu, const DyadicLattice& lat,
                                       const DyadicCube& q) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (cube_contains(lat, q, mu.point(i))) out.push_back(i);
  return out;
}

LevelRange default_levels(const DiscreteMeasure& mu) {
  if (mu.size() < 2 || !(mu.min_sep() > 0.0)) {
    const int top = mu.diam() > 0 ? static_cast<int>(std::ceil(std::log2(mu.diam()))) + 1 : 1;
    return {top - 1, top};
  }
  return {static_cast<int>(std::ceil(std::log2(mu.min_sep()))),
          static_cast<int>(std::ceil(std::log2(mu.diam()))) + 1};
}

namespace {

// Calls fn(i, cube, phi_Q(x_i)) for every point i and every cube at level k
// with phi_Q(x_i) > 0, points in index order.
template <class Fn>
void visit_level(const DiscreteMeasure& mu, const DyadicLattice& lat, int k, Fn&& fn) {
  const int d = mu.dim();
  const double reach = 4.0 * std::sqrt(static_cast<double>(d));
  const double l = std::ldexp(1.0, k);
  std::vector<std::int64_t> lo(d), hi(d);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double* x = mu.point(i);
    // candidate index window: |u_j - m_j - 1/2| < reach with u = (x - origin)/l
    for (int j = 0; j < d; ++j) {
      const double u = (x[j] - lat.origin[j]) / l;
      lo[j] = static_cast<std::int64_t>(std::floor(u - 0.5 - reach)) - 1;
      hi[j] = static_cast<std::int64_t>(std::ceil(u - 0.5 + reach)) + 1;
    }
    DyadicCube q;
    q.level = k;
    q.index = lo;
    for (;;) {
      const double p = phi_cube(lat, q, x);
      if (p > 0.0) fn(i, q, p);
      int j = d - 1;
      while (j >= 0 && q.index[j] == hi[j]) {
        q.index[j] = lo[j];
        --j;
      }
      if (j < 0) break;
      ++q.index[j];
    }
  }
}

void check_range(const DiscreteMeasure& mu, const DyadicLattice& lat, int level_min,
                 int level_max) {
  if (level_min > level_max) throw DomainError("charged_cubes: empty level range");
  if (lat.dim() != mu.dim()) throw DomainError("charged_cubes: lattice dimension mismatch");
}

}  // namespace

std::vector<std::pair<DyadicCube, double>> cubes_charged_by(const DyadicLattice& lat, int level,
                                                            const double* x) {
  DiscreteMeasure one(lat.dim(), 0.5, std::vector<double>(x, x + lat.dim()), {1.0});
  std::vector<std::pair<DyadicCube, double>> out;
  visit_level(one, lat, level,
              [&](std::size_t, const DyadicCube& q, double p) { out.emplace_back(q, p); });
  return out;
}

std::vector<DyadicCube> charged_cubes(const DiscreteMeasure& mu, const DyadicLattice& lat,
                                      int level_min, int level_max) {
  check_range(mu, lat, level_min, level_max);
  std::set<DyadicCube> out;
  for (int k = level_min; k <= level_max; ++k) {
    std::unordered_set<DyadicCube, CubeHash> seen;
    visit_level(mu, lat, k, [&](std::size_t, const DyadicCube& q, double) { seen.insert(q); });
    out.insert(seen.begin(), seen.end());
  }
  return {out.begin(), out.end()};
}

CubeTable charged_cube_table(const DiscreteMeasure& mu, const DyadicLattice& lat, int level_min,
                             int level_max) {
  check_range(mu, lat, level_min, level_max);
  std::unordered_map<DyadicCube, CompensatedSum, CubeHash> acc;
  for (int k = level_min; k <= level_max; ++k)
    visit_level(mu, lat, k, [&](std::size_t i, const DyadicCube& q, double p) {
      acc[q] += mu.weight(i) * p;
    });
  std::vector<std::pair<DyadicCube, double>> rows;
  rows.reserve(acc.size());
  for (const auto& [q, s] : acc) rows.emplace_back(q, s.value());
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  CubeTable t;
  for (auto& [q, m] : rows) {
    t.index.emplace(q, t.cubes.size());
    t.cubes.push_back(q);
    t.mass.push_back(m);
  }
  return t;
}

std::optional<std::size_t> CubeTable::find(const DyadicCube& q) const {
  const auto it = index.find(q);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

namespace {

using boost::multiprecision::cpp_int;

// Integer coordinates of x_Q in units of 2^(kmin - 1) relative to the lattice
// origin, and side lengths in the same units.
struct ExactPair {
  std::vector<cpp_int> delta;
  cpp_int l1, l2;
};

template <class Int>
bool within_impl(const std::vector<Int>& delta, const Int& r_big, const Int& r_small, int d) {
  const Int rr = r_big - r_small;
  if (rr < 0) return false;
  Int s = 0;
  for (const auto& v : delta) s += v * v;
  return s <= Int(d) * rr * rr;
}

template <class Int>
bool disjoint_impl(const std::vector<Int>& delta, const Int& r1, const Int& r2, int d) {
  const Int rr = r1 + r2;
  Int s = 0;
  for (const auto& v : delta) s += v * v;
  return s >= Int(d) * rr * rr;
}

template <class Pred>
bool exact_compare(const DyadicCube& a, int ca, const DyadicCube& b, int cb, Pred pred) {
  if (a.index.size() != b.index.size()) throw DomainError("cube dimension mismatch");
  const int d = static_cast<int>(a.index.size());
  const int kmin = std::min(a.level, b.level);
  const int sa = a.level - kmin;
  const int sb = b.level - kmin;
  bool small = sa < 56 && sb < 56;
  for (int j = 0; j < d && small; ++j)
    small = std::llabs(a.index[j]) < (1LL << 40) && std::llabs(b.index[j]) < (1LL << 40);
  // fast path when every intermediate fits comfortably in 128 bits
  if (small && sa + 42 < 60 && sb + 42 < 60) {
    std::vector<__int128> delta(d);
    for (int j = 0; j < d; ++j)
      delta[j] = (static_cast<__int128>(2 * b.index[j] + 1) << sb) -
                 (static_cast<__int128>(2 * a.index[j] + 1) << sa);
    const __int128 ra = static_cast<__int128>(ca) << (sa + 1);
    const __int128 rb = static_cast<__int128>(cb) << (sb + 1);
    return pred(delta, ra, rb, d);
  }
  std::vector<cpp_int> delta(d);
  for (int j = 0; j < d; ++j)
    delta[j] = (cpp_int(2 * b.index[j] + 1) << sb) - (cpp_int(2 * a.index[j] + 1) << sa);
  const cpp_int ra = cpp_int(ca) << (sa + 1);
  const cpp_int rb = cpp_int(cb) << (sb + 1);
  return pred(delta, ra, rb, d);
}

}  // namespace

bool ball_within(const DyadicCube& q_small, int a_small, const DyadicCube& q_big, int a_big) {
  return exact_compare(q_small, a_small, q_big, a_big,
                       [](const auto& delta, const auto& rs, const auto& rb, int d) {
                         return within_impl(delta, rb, rs, d);
                       });
}

bool balls_disjoint(const DyadicCube& q1, int a1, const DyadicCube& q2, int a2) {
  return exact_compare(q1, a1, q2, a2, [](const auto& delta, const auto& r1, const auto& r2, int d) {
    return disjoint_impl(delta, r1, r2, d);
  });
}

bool ball_containments(const DyadicCube& q_small, const DyadicCube& q_big, Containment mode) {
  switch (mode) {
    case Containment::half_contains:
      // B_small (radius 4 sqrt(d) l) inside 1/2 B_big (radius 2 sqrt(d) l')
      return ball_within(q_small, 4, q_big, 2);
    case Containment::triple_in_triple:
      return ball_within(q_small, 12, q_big, 12);
  }
  return false;
}

}  // namespace mscale
