#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mscale/coeffs.hpp"

namespace mscale {

enum class EnergyKind { wolff, jones };
std::string to_string(EnergyKind k);
EnergyKind energy_kind_from_string(const std::string& s);

// Piecewise-constant description of r -> mu(B(x,r)) around one atom. On
// (radius[j], radius[j+1]] the open ball holds mass[j]; the last interval is
// unbounded. residual[j] is inf_L sum w dist(y,L)^2 over the ball (Jones only).
struct AtomProfile {
  std::vector<double> radius;
  std::vector<double> mass;
  std::vector<double> residual;
};

// Profile of atom i against the atoms listed in `members` (all atoms when empty).
AtomProfile atom_profile(const DiscreteMeasure& mu, std::size_t i,
                         const std::vector<std::size_t>& members, bool with_residual);

// Closed-form integral of the profile over (a, b]; b may be +inf.
double integrate_profile(const AtomProfile& p, EnergyKind kind, double s, double a, double b);

struct EnergyReport {
  EnergyKind kind = EnergyKind::wolff;
  double total = 0.0;
  std::vector<std::size_t> atoms;
  std::vector<double> per_atom;
  double r_min = 0.0;
  double r_max = 0.0;
  std::size_t breakpoint_count = 0;
};

// W(mu, Q) and J(mu, Q) truncated to [r_min, r_max]; region nullopt means all of R^d.
EnergyReport wolff_exact(const DiscreteMeasure& mu, const std::optional<CubeRef>& region,
                         double r_min, double r_max);
EnergyReport jones_exact(const DiscreteMeasure& mu, const std::optional<CubeRef>& region,
                         double r_min, double r_max);
EnergyReport energy_exact(const DiscreteMeasure& mu, EnergyKind kind,
                          const std::optional<CubeRef>& region, double r_min, double r_max);

// 2 * min_sep, or diam / 2 for a single atom cluster.
double default_r_min(const DiscreteMeasure& mu);

struct DyadicTerm {
  DyadicCube cube;
  double mass = 0.0;     // I_mu(Q)
  double density = 0.0;  // D_mu(Q)
  double beta = 0.0;     // beta_mu(Q), Jones only
  double term = 0.0;
};
struct DyadicSum {
  double total = 0.0;
  std::vector<DyadicTerm> terms;
};
DyadicSum dyadic_energy_sum(const DiscreteMeasure& mu, const DyadicLattice& lat, EnergyKind kind,
                            int level_min, int level_max);

// Constant in octave_integral <= C * sum_{l(Q) = 2^{k+1}} term(Q) phi_Q(x).
double dyadic_domination_constant(EnergyKind kind, double s);

struct DominationReport {
  double max_ratio = 0.0;
  std::size_t argmax_atom = 0;
  int argmax_level = 0;
  double constant = 0.0;
  std::size_t checked = 0;
  std::size_t violations = 0;  // ratio above constant or zero majorant with positive integral
};
DominationReport verify_dyadic_domination(const DiscreteMeasure& mu, const DyadicLattice& lat,
                                          EnergyKind kind, int level_min, int level_max);

struct CarlesonRow {
  DyadicCube cube;
  double energy = 0.0;
  double mass = 0.0;  // mu(P)
  double ratio = 0.0;
};
struct CarlesonResult {
  double sup = 0.0;
  DyadicCube argmax;
  double r_min = 0.0;
  double r_max = 0.0;
  std::vector<CarlesonRow> rows;
};
// sup over cubes P with mu(P) > 0 of energy(mu|P, P) / mu(P).
CarlesonResult carleson_sweep(const DiscreteMeasure& mu, const DyadicLattice& lat, EnergyKind kind,
                              int level_min, int level_max, double r_min, double r_max);

}  // namespace mscale
