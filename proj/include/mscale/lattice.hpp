#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "mscale/measure.hpp"

namespace mscale {

// Cubes at level k are origin + 2^k [m, m + 1) for m in Z^d.
struct DyadicLattice {
  Vec origin;

  // origin at -1/2 so that the level-0 cube with index 0 is (-1/2, 1/2)^d
  static DyadicLattice standard(int dim);
  int dim() const { return static_cast<int>(origin.size()); }
};

struct DyadicCube {
  int level = 0;
  std::vector<std::int64_t> index;

  auto operator<=>(const DyadicCube&) const = default;
  bool operator==(const DyadicCube&) const = default;
};

struct CubeHash {
  std::size_t operator()(const DyadicCube& q) const;
};

inline double side(const DyadicCube& q) { return std::ldexp(1.0, q.level); }
Vec centre(const DyadicLattice& lat, const DyadicCube& q);
// radius of B_Q
inline double ball_radius(const DyadicCube& q, int d) {
  return 4.0 * std::sqrt(static_cast<double>(d)) * side(q);
}
// phi_Q(x) = phi(|x - x_Q| / (2 sqrt(d) l(Q)))
double phi_cube(const DyadicLattice& lat, const DyadicCube& q, const double* x);
// cube of the given level containing x
DyadicCube containing_cube(const DyadicLattice& lat, int level, const double* x);
bool cube_contains(const DyadicLattice& lat, const DyadicCube& q, const double* x);
// distance from x to the nearest face of q
double face_distance(const DyadicLattice& lat, const DyadicCube& q, const double* x);

double cube_ratio(const DyadicCube& a, const DyadicCube& b);

double smoothed_cube_mass(const DiscreteMeasure& mu, const DyadicLattice& lat,
                          const DyadicCube& q);
double density(const DiscreteMeasure& mu, const DyadicLattice& lat, const DyadicCube& q,
               double n);
// mu(Q) over the half-open cube
double cube_mass(const DiscreteMeasure& mu, const DyadicLattice& lat, const DyadicCube& q);
std::vector<std::size_t> atoms_in_cube(const DiscreteMeasure& mu, const DyadicLattice& lat,
                                       const DyadicCube& q);

struct LevelRange {
  int lo = 0;
  int hi = 0;
};
LevelRange default_levels(const DiscreteMeasure& mu);

// All cubes with level in [level_min, level_max] and I_mu(Q) > 0, ordered
// lexicographically by (level, index).
std::vector<DyadicCube> charged_cubes(const DiscreteMeasure& mu, const DyadicLattice& lat,
                                      int level_min, int level_max);

// Cubes of the given level with phi_Q(x) > 0, paired with phi_Q(x).
std::vector<std::pair<DyadicCube, double>> cubes_charged_by(const DyadicLattice& lat, int level,
                                                            const double* x);

// Charged cubes together with I_mu(Q); masses agree bitwise with
// smoothed_cube_mass because terms are added in point order.
struct CubeTable {
  std::vector<DyadicCube> cubes;
  std::vector<double> mass;
  std::unordered_map<DyadicCube, std::size_t, CubeHash> index;

  std::optional<std::size_t> find(const DyadicCube& q) const;
  std::size_t size() const { return cubes.size(); }
};
CubeTable charged_cube_table(const DiscreteMeasure& mu, const DyadicLattice& lat, int level_min,
                             int level_max);

enum class Containment { half_contains, triple_in_triple };
bool ball_containments(const DyadicCube& q_small, const DyadicCube& q_big, Containment mode);

// Exact test of B(x_small, a_small sqrt(d) l_small) within
// B(x_big, a_big sqrt(d) l_big), as |dx| + r_small <= r_big.
bool ball_within(const DyadicCube& q_small, int a_small, const DyadicCube& q_big, int a_big);
// Exact test that the open balls B(x_1, a_1 sqrt(d) l_1), B(x_2, a_2 sqrt(d) l_2)
// are disjoint, as |dx| >= r_1 + r_2.
bool balls_disjoint(const DyadicCube& q1, int a1, const DyadicCube& q2, int a2);

}  // namespace mscale
