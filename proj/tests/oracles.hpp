#pragma once

// Reference computations used by the unit and acceptance tests. Nothing here
// calls into the closed forms or solvers under test; only data accessors of
// DiscreteMeasure and plain geometry are shared.

#include <optional>
#include <vector>

#include "mscale/coeffs.hpp"
#include "mscale/energy.hpp"

namespace oracle {

using mscale::DiscreteMeasure;

struct Cell {
  std::vector<double> lo;
  double side = 0.0;
};

// Energy over the atoms of mu lying in `region` (all atoms when empty), with
// ball masses taken from the same atoms, integrated by adaptive Gauss-Kronrod
// over each interval between consecutive atom distances.
double energy_quadrature(const DiscreteMeasure& mu, mscale::EnergyKind kind,
                         const std::optional<Cell>& region, double r_min, double r_max);

// inf over n-planes of the weighted squared distance, from a fresh eigen solve.
double plane_residual(const std::vector<double>& coords, const std::vector<double>& w, int d,
                      int n);

// Maximum of sum c_i f_i over |f_i - f_j| <= |p_i - p_j| / scale, |f_i| <= bound_i,
// by a dense tableau simplex with Bland's rule.
double lp_simplex(const mscale::TransportLP& lp);

// Count of atoms with |x - y| < r, directly.
double ball_mass(const DiscreteMeasure& mu, const std::vector<double>& x, double r);

// Brute-force maximum-weight family of pairwise compatible items.
double best_selection(const std::vector<double>& gain,
                      const std::vector<std::vector<std::size_t>>& conflicts);

}  // namespace oracle
