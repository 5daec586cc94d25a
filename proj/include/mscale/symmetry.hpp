#pragma once

#include <optional>
#include <vector>

#include "mscale/coeffs.hpp"

namespace mscale {

struct SymmetryConfig {
  double tau = 0.0;      // defaults to 1000 sqrt(d)
  double C_tau = 0.0;    // doubling threshold, must exceed tau^lambda
  double lambda = 0.0;   // declared growth exponent
  std::vector<double> scale_grid;
  std::vector<std::size_t> samples;

  // tau = 1000 sqrt(d), lambda = d, C_tau = 2 tau^d unless overridden.
  static SymmetryConfig make(int d, std::vector<double> scale_grid,
                             std::vector<std::size_t> samples,
                             std::optional<double> lambda = std::nullopt,
                             std::optional<double> C_tau = std::nullopt,
                             std::optional<double> tau = std::nullopt);
  void validate() const;
};

// r0 * ratio^j for j = 0..count-1.
std::vector<double> geometric_grid(double r0, double ratio, int count);

struct DefectRow {
  std::size_t sample = 0;
  double t = 0.0;
  double defect = 0.0;
  bool qualifies = false;
};
struct SymmetryDefect {
  double max_defect = 0.0;
  std::size_t argmax_sample = 0;
  double argmax_t = 0.0;
  std::size_t qualifying = 0;
  std::size_t skipped = 0;
  std::vector<DefectRow> rows;
};
// |sum w (x - y) phi(|x - y|/t)| / (t I_mu(B(x,t))) over sample atoms and grid scales with
// boundary distance >= 2t. Throws DomainError when no pair qualifies.
SymmetryDefect symmetry_defect(const DiscreteMeasure& mu, const SymmetryConfig& cfg);
double symmetry_defect_at(const DiscreteMeasure& mu, const double* x, double t);

// Grid radii R with I(x, tau R) <= C_tau I(x, R).
std::vector<double> doubling_scales(const DiscreteMeasure& mu, const double* x,
                                    const SymmetryConfig& cfg);
bool is_doubling(const DiscreteMeasure& mu, const double* x, double R, const SymmetryConfig& cfg);

struct MattilaPreiss {
  double residual = 0.0;  // sup over the r grid in [R, 2R]
  double argmax_r = 0.0;
  double comparison = 0.0;  // C_tau * C * |x|^2 / R
};
// Coordinates are taken relative to `origin`. Throws DomainError when R is not a
// doubling radius at the origin or R <= |x - origin|.
MattilaPreiss mattila_preiss_residual(const DiscreteMeasure& mu, const double* origin,
                                      const double* x, double R, int r_nodes,
                                      const SymmetryConfig& cfg, double calibrated_C = 1.0);
// Value of the displayed vector x + (1/I) sum w (y/r) phi'(|y|/r) <y/|y|, x> at one r.
Vec mattila_preiss_vector(const DiscreteMeasure& mu, const double* origin, const double* x,
                          double r);

struct GrowthIdentity {
  double basis_sum = 0.0;   // sum_j int <y,v_j>/r phi'(|y|/r) <y/|y|, v_j>
  double radial = 0.0;      // int |y|/r phi'(|y|/r)
  double derivative = 0.0;  // -r d/dr I_mu(B(0,r))
  double defect = 0.0;
  int rank = 0;
};
GrowthIdentity growth_identity_check(const DiscreteMeasure& mu, const double* origin, double r);

struct Nonflatness {
  double value = 0.0;
  double threshold = 0.0;  // 1 / (4 C_tau ||phi'||^2)
  AffinePlane plane;
};
Nonflatness nonflatness_functional(const DiscreteMeasure& mu, const double* origin, double R,
                                   int n, double C_tau);

}  // namespace mscale
