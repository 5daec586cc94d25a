#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include "mscale/lattice.hpp"

namespace mscale {

// sum_i w_i f_i (x - x_i) / t^{s+1} phi(|x - x_i| / t); f empty means f = 1.
Vec field(const DiscreteMeasure& mu, const double* x, double t,
          const std::vector<double>& f = {});

// Spatial hash with cells of side 2t for one fixed scale t.
class FieldCache {
 public:
  FieldCache(const DiscreteMeasure& mu, double t);
  double scale() const { return t_; }
  // atom indices within distance < 2t of x, ascending
  std::vector<std::size_t> neighbours(const double* x) const;
  Vec field(const double* x, const std::vector<double>& f = {}) const;

 private:
  const DiscreteMeasure* mu_;
  double t_;
  double cell_;
  std::unordered_map<std::vector<std::int64_t>, std::vector<std::size_t>,
                     std::function<std::size_t(const std::vector<std::int64_t>&)>>
      grid_;
  std::vector<std::int64_t> key(const double* x) const;
};

// Log-uniform midpoint nodes covering [t_min, t_max], nodes_per_octave per octave.
struct LogGrid {
  std::vector<double> t;
  double h = 0.0;  // spacing in log t
};
LogGrid log_grid(double t_min, double t_max, int nodes_per_octave);

struct SqfnValue {
  double value = 0.0;
  bool quad_flag = false;  // doubling the nodes moved the result by more than 1e-3 relative
};
SqfnValue sqfn_apply(const DiscreteMeasure& mu, const std::vector<double>& f, const double* x,
                     double t_min, double t_max, int nodes_per_octave);

struct ConstituentRecord {
  DyadicCube cube;
  double A = 0.0;
  double value = 0.0;
  int t_nodes = 0;  // per octave
  bool quad_flag = false;
};
// S^A_mu(Q): atoms in the open ball A B_Q, scales [l/A, A l].
ConstituentRecord constituent(const DiscreteMeasure& mu, const DyadicLattice& lat,
                              const DyadicCube& q, double A, int nodes_per_octave = 16,
                              bool check_refinement = true);

// Bound (8 sqrt(d) A + 2)^d on the number of balls A B_Q at one level containing a point.
double overlap_bound(int d, double A);
struct OverlapCensus {
  std::size_t max_count = 0;
  std::size_t argmax_probe = 0;
  double bound = 0.0;
};
OverlapCensus overlap_census(const DyadicLattice& lat, int level, double A,
                             const std::vector<double>& probes);

struct SignDecomposition {
  double expectation = 0.0;  // E ||T_{t,k0,omega} f||^2 over all sign patterns
  double diagonal = 0.0;     // sum_k ||single-scale term||^2
  double defect = 0.0;       // |expectation - diagonal|
  std::size_t patterns = 0;
};
SignDecomposition randomized_decomposition_check(const DiscreteMeasure& mu,
                                                 const std::vector<double>& f, double t, int k0);

// Nonnegative g represented as a discrete measure on (0, inf): psi_g(r) = sum_j c_j psi(r/u_j),
// so sum_j c_j stands for int g(u) du/u.
struct ScaleMixture {
  std::vector<double> u;
  std::vector<double> c;

  static ScaleMixture point_mass(double u0, double weight = 1.0);
  // g(u) = sin^2(pi (u - a)/(b - a)) on [a,b], discretized by 40-point Gauss-Legendre
  static ScaleMixture smooth_bump(double a, double b);
  static ScaleMixture parse(const std::string& text);
  // int u^{s+1} g(u) du/u
  double factor(double s) const;
  double eval(double r) const;  // psi_g(r) with psi = phi
};

struct ConvCompare {
  double lhs = 0.0;       // ||S_{mu,psi_g} f||
  double rhs = 0.0;       // ||S_{mu,psi} f||
  double factor = 0.0;
  double tolerance = 0.0;  // quadrature slack from node doubling
  double slack = 0.0;      // factor * rhs + tolerance - lhs
  bool holds = false;
};
ConvCompare conv_bump_compare(const DiscreteMeasure& mu, const std::vector<double>& f,
                              const ScaleMixture& g, int nodes_per_octave = 32);

struct IndicatorLevel {
  int level = 0;
  double value = 0.0;  // sum of constituents at this level / mu(P)
};
struct IndicatorNorm {
  double total = 0.0;
  std::vector<IndicatorLevel> levels;
};
IndicatorNorm indicator_norm(const DiscreteMeasure& mu, const DyadicLattice& lat,
                             const DyadicCube& P, double A, int level_min, int level_max,
                             int nodes_per_octave = 16);

}  // namespace mscale
