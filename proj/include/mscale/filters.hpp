#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mscale/coeffs.hpp"
#include "mscale/sqfn.hpp"

namespace mscale {

enum class Upsilon { beta_times_density, density };

struct FilterConfig {
  double eps = 0.05;
  double delta = 0.0;
  int M = 6;
  int n = 0;  // ceil(s) - 1
  Upsilon upsilon = Upsilon::density;

  // delta = 0.4 (s - n - eps); Upsilon is beta * D for integer s, D otherwise.
  static FilterConfig make(double s, std::optional<double> eps = std::nullopt,
                           std::optional<double> delta = std::nullopt,
                           std::optional<int> M = std::nullopt);
  void validate(double s) const;
};

// D_mu(Q) = I_mu(Q) / l(Q)^s
double cube_density(const DiscreteMeasure& mu, const DyadicLattice& lat, const DyadicCube& q);

// ------------------------------------------------------------ domination from below

struct BunchConditions {
  bool density_growth = false;  // D(Q_j) > 2^{eps [Q:Q_j]} D(Q)
  bool disjoint = false;        // 3B_{Q_j} pairwise disjoint
  bool contained = false;       // 3B_{Q_j} inside 3B_Q
  bool gain_exceeds = false;    // sum_j D(Q_j)^2 2^{-2 eps [Q:Q_j]} I(Q_j) > D(Q)^2 I(Q)
  bool nontrivial = false;
  double gain = 0.0;
  double target = 0.0;
  bool all() const { return density_growth && disjoint && contained && gain_exceeds && nontrivial; }
};
// Recomputes every mass from scratch; shares nothing with the search.
BunchConditions check_bunch(const DiscreteMeasure& mu, const DyadicLattice& lat, const DyadicCube& q,
                            const std::vector<DyadicCube>& bunch, double eps);

struct DominationBunch {
  std::vector<DyadicCube> cubes;
  double gain = 0.0;
  double target = 0.0;
};

// Weighted items for the disjoint-ball selection; conflicts[i] lists j with
// intersecting 3B balls.
struct SelectionProblem {
  std::vector<double> gain;
  std::vector<std::vector<std::size_t>> conflicts;
};
struct Selection {
  std::vector<std::size_t> chosen;
  double gain = 0.0;
};
Selection select_exact(const SelectionProblem& p);
// Stops improving once the gain exceeds stop_at; swap passes only for at most 512 items.
Selection select_greedy(const SelectionProblem& p, const std::vector<double>& size,
                        double stop_at = std::numeric_limits<double>::infinity());

// Masses and densities shared across queries.
struct CubeIndex {
  CubeTable table;
  std::vector<double> density;
  double s = 0.0;
  static CubeIndex build(const DiscreteMeasure& mu, const DyadicLattice& lat, int level_min,
                         int level_max);
};

struct BunchSearch {
  std::optional<DominationBunch> bunch;
  bool exact = true;
  std::size_t candidates = 0;
  double best_gain = 0.0;
  int max_gap = 0;     // largest [Q:Q'] among surviving candidates
  double gap_bound = 0.0;  // (1/eps) log2(sup D / D(Q))
};
BunchSearch find_bunch_below(const DiscreteMeasure& mu, const DyadicLattice& lat,
                             const CubeIndex& index, const DyadicCube& q,
                             const std::vector<DyadicCube>& candidates, const FilterConfig& cfg,
                             std::size_t exact_limit = 24);

struct GDown {
  std::vector<DyadicCube> members;
  std::map<DyadicCube, DominationBunch> bunches;  // for cubes outside G_down
  bool certified = true;                          // every search was exact
  std::size_t reverify_failures = 0;
};
GDown g_down(const DiscreteMeasure& mu, const DyadicLattice& lat, const CubeIndex& index,
             const std::vector<DyadicCube>& G, const std::vector<DyadicCube>& G_prime,
             const FilterConfig& cfg);

// (floor(24 sqrt d) + 1)^d / (1 - 2^{-2 eps})
double down_inner_constant(int d, double eps);
// sum over Q with 3B_Q containing 3B_P and level(P) <= level(Q) <= level_max of 2^{-2 eps [Q:P]}
double down_inner_sum(const DyadicCube& P, int level_max, double eps);

struct DownLemmaReport {
  // Lemma with G' = G
  double sum_G = 0.0;
  double sum_G_down = 0.0;
  double ratio = 0.0;        // sum_G_down / sum_G (1 when vacuous)
  double c_eps = 0.0;        // 1 / C_inner
  bool chain_holds = false;  // every step of the majorant chain
  // Lemma with general G'
  double sum_G_minus = 0.0;
  double sum_G_prime = 0.0;
  double chain2_majorant = 0.0;
  bool chain2_holds = false;
  double C_inner = 0.0;
  double max_inner_sum = 0.0;
  bool usage_within_containment = false;
  std::size_t bunch_failures = 0;
  bool certified = true;
  std::vector<std::string> notes;
};
DownLemmaReport verify_down_lemmas(const DiscreteMeasure& mu, const DyadicLattice& lat,
                                   const std::vector<DyadicCube>& G,
                                   const std::vector<DyadicCube>& G_prime, const FilterConfig& cfg,
                                   int level_min, int level_max);

// Splices the bunch of `inner` into `outer` in place of `member`.
std::vector<DyadicCube> splice_bunch(const std::vector<DyadicCube>& outer, const DyadicCube& member,
                                     const std::vector<DyadicCube>& inner);

// ------------------------------------------------------------ D_M

std::vector<DyadicCube> d_M_set(const DiscreteMeasure& mu, const DyadicLattice& lat,
                                const FilterConfig& cfg, int level_min, int level_max);

// ------------------------------------------------------------ domination from above

struct UpFilter {
  std::vector<DyadicCube> cubes;  // all charged cubes in range, canonical order
  std::vector<double> upsilon;
  std::vector<double> mass;
  std::vector<bool> in_up;
  std::vector<long> dominator;  // index of the largest dominating cube, -1 for members
};
UpFilter up_filter(const DiscreteMeasure& mu, const DyadicLattice& lat, const FilterConfig& cfg,
                   int level_min, int level_max);

// (8 sqrt d + 2)^d / (2^{2 eps} - 1)
double up_constant(int d, double eps);
struct UpLemmaReport {
  double sum_all = 0.0;
  double sum_up = 0.0;
  double ratio = 0.0;
  double c_eps = 0.0;  // 1 / (1 + C_up)
  double majorant = 0.0;
  bool chain_holds = false;
  std::size_t chain_failures = 0;
};
UpLemmaReport verify_up_lemma(const DiscreteMeasure& mu, const DyadicLattice& lat,
                              const UpFilter& up, const FilterConfig& cfg);

struct DensBetaRow {
  DyadicCube ancestor;
  bool mass_monotone = false;
  bool density_lower = false;
  bool density_upper = false;            // exponent s + 2 eps as stated
  bool density_upper_corrected = false;  // exponent s + 2 + 2 eps
  bool beta_upper = false;
  bool beta_checked = false;
  double density_ratio = 0.0;  // D(Q') / D(Q)
  double side_ratio = 0.0;     // l(Q') / l(Q)
};
struct DensBetaReport {
  std::vector<DensBetaRow> rows;
  bool beta_skipped = false;
  bool all_pass_corrected = false;
  bool all_pass_stated = false;
};
DensBetaReport densbetadoub_check(const DiscreteMeasure& mu, const DyadicLattice& lat,
                                  const DyadicCube& q, const FilterConfig& cfg, int level_max);

// ------------------------------------------------------------ pruning

// 64 * 4^{2s+2} / ln(4/3)
double pruning_constant(double s);

struct PruningReport {
  double hypothesis = 0.0;  // (1/mu(B)) int_{B(0,10R)} (dist/R)^2
  double ball_mass = 0.0;
  int codim = 0;
  double lhs_max = 0.0;  // max over hyperplanes of the lemma's left side
  double rhs = 0.0;
  double C_prune = 0.0;
  bool lemma_holds = false;
  std::size_t pointwise_checked = 0;
  std::size_t pointwise_failures = 0;
  std::size_t conditions_failed = 0;
  double min_pointwise_ratio = 0.0;  // min |<F, e>| / (|z| mu(B)/8)
  double corollary_constant = 0.0;   // codim^3 C_prune
  double strip_mass = 0.0;           // int_{B(0,2R) \ L_{3 beta k R}} (dist/R)^2
  bool branch_one = false;
  bool branch_two = false;
};
PruningReport pruning_check(const DiscreteMeasure& mu, const AffinePlane& plane, double R,
                            double beta, double Delta, const double* centre = nullptr,
                            int t_nodes = 64);

// Normal components relative to the plane are divided by beta.
DiscreteMeasure squash(const DiscreteMeasure& mu, const AffinePlane& plane, double beta);

}  // namespace mscale
