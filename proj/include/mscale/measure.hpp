#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mscale/core.hpp"

namespace mscale {

// Radial bump: 1 on [0,1], 0 on [2,inf), exponential glue in between.
double bump(double t);
double bump_deriv(double t);
double bump_deriv_sup();

// Weighted point cloud standing in for a locally finite measure.
class DiscreteMeasure {
 public:
  DiscreteMeasure(int dim, double s, std::vector<double> coords,
                  std::vector<double> weights,
                  nlohmann::json metadata = nlohmann::json::object());

  int dim() const { return dim_; }
  double s() const { return s_; }
  std::size_t size() const { return weights_.size(); }

  const double* point(std::size_t i) const { return coords_.data() + i * dim_; }
  Eigen::Map<const Vec> pt(std::size_t i) const {
    return Eigen::Map<const Vec>(point(i), dim_);
  }
  double weight(std::size_t i) const { return weights_[i]; }

  const std::vector<double>& coords() const { return coords_; }
  const std::vector<double>& weights() const { return weights_; }
  const nlohmann::json& metadata() const { return metadata_; }

  // +inf when N == 1.
  double min_sep() const { return min_sep_; }
  double diam() const { return diam_; }
  double total_mass() const { return total_mass_; }

  DiscreteMeasure subset(const std::vector<std::size_t>& idx) const;
  DiscreteMeasure with_metadata(nlohmann::json metadata) const;

 private:
  int dim_;
  double s_;
  std::vector<double> coords_;
  std::vector<double> weights_;
  nlohmann::json metadata_;
  double min_sep_ = 0.0;
  double diam_ = 0.0;
  double total_mass_ = 0.0;
};

// I_mu(B(x,r)) = sum_i w_i phi(|x - x_i| / r).
double smoothed_mass(const DiscreteMeasure& mu, const double* x, double r);
// mu(B(x,r)) on the open ball.
double ball_mass(const DiscreteMeasure& mu, const double* x, double r);

inline double smoothed_mass(const DiscreteMeasure& mu, const Vec& x, double r) {
  return smoothed_mass(mu, x.data(), r);
}
inline double ball_mass(const DiscreteMeasure& mu, const Vec& x, double r) {
  return ball_mass(mu, x.data(), r);
}

// Generator families. Parameters not used by a family are ignored.
struct GeneratorSpec {
  std::string family;
  int dim = 2;
  int n = 1;          // plane / graph dimension, or k for phi_symmetric_example
  double extent = 1.0;
  double grid_step = 0.1;
  double lip_const = 0.0;
  int generation = 1;
  double contraction_ratio = 0.25;
  std::vector<std::vector<double>> translate_set;  // phi_symmetric_example
  std::vector<double> density;                     // f on translate_set

  static GeneratorSpec plane_patch(int dim, int n, double extent, double step);
  static GeneratorSpec lipschitz_graph(int dim, int n, double lip, double extent,
                                       double step);
  static GeneratorSpec cantor_four_corner(int generation);
  static GeneratorSpec cantor_self_similar(int dim, double ratio, int generation);
  static GeneratorSpec phi_symmetric_example(int k,
                                             std::vector<std::vector<double>> translates,
                                             std::vector<double> density,
                                             double extent, double step);

  // "family:key=value,key=value" with translates as "t=x;y|x;y" and
  // density as "f=a|b".
  static GeneratorSpec parse(const std::string& text);
  nlohmann::json to_json() const;
};

DiscreteMeasure generate(const GeneratorSpec& spec, std::uint64_t seed = 0);

DiscreteMeasure perturb(const DiscreteMeasure& mu, double magnitude,
                        std::uint64_t seed);

// Deterministic random cloud used by tests and verification suites.
DiscreteMeasure random_cloud(int dim, double s, std::size_t n, double extent,
                             std::uint64_t seed, double w_lo = 0.5,
                             double w_hi = 1.5);

nlohmann::json to_json(const DiscreteMeasure& mu);
DiscreteMeasure measure_from_json(const nlohmann::json& j);
void save_measure(const DiscreteMeasure& mu, const std::string& path);
DiscreteMeasure load_measure(const std::string& path);

// Distance from x to the boundary of the declared support box stored in the
// metadata under "support_box" (null bounds are unbounded). +inf if absent.
double boundary_distance(const DiscreteMeasure& mu, const double* x);

// Splitmix-style deterministic generator; stable across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ^ 0x9E3779B97F4A7C15ULL) {}
  std::uint64_t next();
  double uniform();  // [0,1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mscale
