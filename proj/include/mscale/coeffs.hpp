#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mscale/lattice.hpp"

namespace mscale {

// n-plane: base point plus orthonormal columns.
struct AffinePlane {
  Vec base;
  Mat basis;  // d x n

  int dim() const { return static_cast<int>(base.size()); }
  int n() const { return static_cast<int>(basis.cols()); }
  double dist2(const double* x) const;
  double distance(const double* x) const { return std::sqrt(dist2(x)); }
  Vec project(const double* x) const;
  // unit normals completing the basis, d x (d - n)
  Mat normals() const;
};

class UndefinedBeta : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlaneFit {
  AffinePlane plane;
  Vec centroid;
  Vec eigenvalues;  // ascending
  double total_weight = 0.0;
  double residual = 0.0;  // sum of the d - n smallest eigenvalues
};

// Weighted least-squares n-plane through the weighted centroid.
PlaneFit fit_plane(const std::vector<double>& coords, const std::vector<double>& weights, int d,
                   int n);

struct WeightedPoints {
  int dim = 0;
  std::vector<double> coords;
  std::vector<double> weights;
};
AffinePlane optimal_plane(const WeightedPoints& pts, int n);
double plane_residual(const WeightedPoints& pts, const AffinePlane& plane);

struct BetaResult {
  double value = 0.0;
  AffinePlane plane;
  double normalizer = 0.0;  // mu(B) or I_mu(Q)
  double scale = 0.0;       // r or l(Q)
  double residual = 0.0;    // weighted sum of squared distances to plane
};

struct CubeRef {
  DyadicLattice lattice;
  DyadicCube cube;
};

BetaResult beta_ball(const DiscreteMeasure& mu, const double* x, double r, int n,
                     const std::optional<CubeRef>& restrict_to = std::nullopt);
BetaResult beta_cube(const DiscreteMeasure& mu, const DyadicLattice& lat, const DyadicCube& q,
                     std::optional<int> n = std::nullopt);

struct VarthetaResult {
  double theta = 0.0;
  double plane_mass = 0.0;  // I_{H^n|L}(Q)
  double quad_step = 0.0;
};
// Throws DomainError if the plane misses supp(phi_Q).
VarthetaResult vartheta(const DiscreteMeasure& mu, const DyadicLattice& lat, const DyadicCube& q,
                        const AffinePlane& plane, double quad_step = 0.0);
// I_{H^n|L}(Q) by grid quadrature on L.
double plane_cube_mass(const DyadicLattice& lat, const DyadicCube& q, const AffinePlane& plane,
                       double quad_step);

struct AlphaOptions {
  double quad_step_factor = 1.0 / 64.0;  // spacing for the vartheta denominator, in units of l(Q)
  double lp_step_factor = 1.0 / 16.0;    // spacing of plane nodes in the transport LP
  int plane_candidates = 1;              // seeds besides the least-squares plane
  int refine_iters = 12;
  std::uint64_t seed = 12345;
};

struct AlphaResult {
  double upper = 0.0;
  double lower = 0.0;
  double witness_at_best = 0.0;
  AffinePlane plane;
  double theta = 0.0;
  double quad_step = 0.0;
  double lp_step = 0.0;
  double quad_error_bound = 0.0;
  double lp_value = 0.0;
  double mass = 0.0;  // I_mu(Q)
  bool search_converged = true;
  std::size_t nodes = 0;
};

// Lipschitz constant (times l(Q)) of the witness (dist(., L)/l)^2 phi_3Q.
double witness_lipschitz_constant(int d);

// Transport form of the Lipschitz LP: max sum_i c_i f_i subject to
// |f_i - f_j| <= |p_i - p_j| / scale and |f_i| <= bound_i.
struct TransportLP {
  int dim = 0;
  std::vector<double> coords;
  std::vector<double> coeff;
  std::vector<double> bound;
  double scale = 1.0;
};
struct TransportSolution {
  double value = 0.0;
  std::size_t iterations = 0;
};
TransportSolution solve_transport_lp(const TransportLP& lp);

// Inner sup for a fixed plane: LP value, theta and the node count.
struct InnerSup {
  double lp_value = 0.0;
  double theta = 0.0;
  double quad_error_bound = 0.0;
  std::size_t nodes = 0;
};
InnerSup alpha_inner_sup(const DiscreteMeasure& mu, const DyadicLattice& lat, const DyadicCube& q,
                         const AffinePlane& plane, const AlphaOptions& opts);
TransportLP alpha_inner_lp(const DiscreteMeasure& mu, const DyadicLattice& lat,
                           const DyadicCube& q, const AffinePlane& plane, double theta,
                           double lp_step);

AlphaResult alpha_cube(const DiscreteMeasure& mu, const DyadicLattice& lat, const DyadicCube& q,
                       int n, const AlphaOptions& opts = {});

}  // namespace mscale
