#include "mscale/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mscale {

SymmetryConfig SymmetryConfig::make(int d, std::vector<double> scale_grid,
                                    std::vector<std::size_t> samples,
                                    std::optional<double> lambda, std::optional<double> C_tau,
                                    std::optional<double> tau) {
  SymmetryConfig c;
  c.tau = tau ? *tau : 1000.0 * std::sqrt(static_cast<double>(d));
  c.lambda = lambda ? *lambda : static_cast<double>(d);
  c.C_tau = C_tau ? *C_tau : 2.0 * std::pow(c.tau, c.lambda);
  c.scale_grid = std::move(scale_grid);
  c.samples = std::move(samples);
  c.validate();
  return c;
}

void SymmetryConfig::validate() const {
  if (!(tau > 1.0)) throw ValidationError("symmetry config: tau must exceed 1");
  if (!(lambda > 0.0)) throw ValidationError("symmetry config: lambda must be positive");
  if (!(C_tau > std::pow(tau, lambda)))
    throw ValidationError("symmetry config: C_tau must exceed tau^lambda");
  for (double t : scale_grid)
    if (!(t > 0.0)) throw ValidationError("symmetry config: scales must be positive");
}

std::vector<double> geometric_grid(double r0, double ratio, int count) {
  std::vector<double> g;
  for (int j = 0; j < count; ++j) g.push_back(r0 * std::pow(ratio, j));
  return g;
}

double symmetry_defect_at(const DiscreteMeasure& mu, const double* x, double t) {
  const int d = mu.dim();
  std::vector<CompensatedSum> acc(d);
  CompensatedSum mass;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double* y = mu.point(i);
    const double p = bump(dist(x, y, d) / t);
    if (!(p > 0.0)) continue;
    mass += mu.weight(i) * p;
    for (int j = 0; j < d; ++j) acc[j] += mu.weight(i) * p * (x[j] - y[j]);
  }
  double n2 = 0.0;
  for (int j = 0; j < d; ++j) n2 += acc[j].value() * acc[j].value();
  return std::sqrt(n2) / (t * mass.value());
}

SymmetryDefect symmetry_defect(const DiscreteMeasure& mu, const SymmetryConfig& cfg) {
  cfg.validate();
  SymmetryDefect out;
  for (std::size_t si = 0; si < cfg.samples.size(); ++si) {
    const std::size_t idx = cfg.samples[si];
    if (idx >= mu.size()) throw DomainError("symmetry_defect: sample index out of range");
    const double* x = mu.point(idx);
    const double bd = boundary_distance(mu, x);
    for (double t : cfg.scale_grid) {
      DefectRow row{idx, t, 0.0, bd >= 2.0 * t};
      if (!row.qualifies) {
        ++out.skipped;
        out.rows.push_back(row);
        continue;
      }
      row.defect = symmetry_defect_at(mu, x, t);
      ++out.qualifying;
      if (row.defect > out.max_defect || out.qualifying == 1) {
        out.max_defect = row.defect;
        out.argmax_sample = idx;
        out.argmax_t = t;
      }
      out.rows.push_back(row);
    }
  }
  if (out.qualifying == 0) throw DomainError("symmetry_defect: no qualifying (x, t) pairs");
  return out;
}

bool is_doubling(const DiscreteMeasure& mu, const double* x, double R, const SymmetryConfig& cfg) {
  return smoothed_mass(mu, x, cfg.tau * R) <= cfg.C_tau * smoothed_mass(mu, x, R);
}

std::vector<double> doubling_scales(const DiscreteMeasure& mu, const double* x,
                                    const SymmetryConfig& cfg) {
  cfg.validate();
  std::vector<double> out;
  for (double R : cfg.scale_grid)
    if (is_doubling(mu, x, R, cfg)) out.push_back(R);
  return out;
}

Vec mattila_preiss_vector(const DiscreteMeasure& mu, const double* origin, const double* x,
                          double r) {
  const int d = mu.dim();
  Vec xv(d);
  for (int j = 0; j < d; ++j) xv[j] = x[j] - origin[j];
  std::vector<CompensatedSum> acc(d);
  CompensatedSum mass;
  Vec y(d);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (int j = 0; j < d; ++j) y[j] = mu.point(i)[j] - origin[j];
    const double ny = y.norm();
    const double p = bump(ny / r);
    if (p > 0.0) mass += mu.weight(i) * p;
    if (ny == 0.0) continue;
    const double dp = bump_deriv(ny / r);
    if (dp == 0.0) continue;
    const double c = mu.weight(i) * dp * y.dot(xv) / (ny * r);
    for (int j = 0; j < d; ++j) acc[j] += c * y[j];
  }
  Vec out(d);
  for (int j = 0; j < d; ++j) out[j] = xv[j] + acc[j].value() / mass.value();
  return out;
}

MattilaPreiss mattila_preiss_residual(const DiscreteMeasure& mu, const double* origin,
                                      const double* x, double R, int r_nodes,
                                      const SymmetryConfig& cfg, double calibrated_C) {
  cfg.validate();
  const int d = mu.dim();
  const double nx = dist(x, origin, d);
  if (!(R > nx)) throw DomainError("mattila_preiss_residual: need R > |x|");
  if (!is_doubling(mu, origin, R, cfg))
    throw DomainError("mattila_preiss_residual: R is not a doubling radius at the origin");
  if (r_nodes < 2) throw DomainError("mattila_preiss_residual: need at least 2 r nodes");
  MattilaPreiss out;
  out.argmax_r = R;
  for (int j = 0; j < r_nodes; ++j) {
    const double r = R * (1.0 + static_cast<double>(j) / (r_nodes - 1));
    const double v = mattila_preiss_vector(mu, origin, x, r).norm();
    if (v > out.residual) {
      out.residual = v;
      out.argmax_r = r;
    }
  }
  out.comparison = cfg.C_tau * calibrated_C * nx * nx / R;
  return out;
}

GrowthIdentity growth_identity_check(const DiscreteMeasure& mu, const double* origin, double r) {
  if (!(r > 0.0)) throw DomainError("growth_identity_check: r must be positive");
  const int d = mu.dim();
  const std::size_t N = mu.size();
  Mat Y(N, d);
  for (std::size_t i = 0; i < N; ++i)
    for (int j = 0; j < d; ++j) Y(i, j) = mu.point(i)[j] - origin[j];
  GrowthIdentity out;
  Eigen::JacobiSVD<Mat> svd(Y, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  if (!(smax > 0.0)) return out;
  for (int j = 0; j < sv.size(); ++j)
    if (sv[j] > 1e-10 * smax) ++out.rank;
  const Mat V = svd.matrixV().leftCols(out.rank);
  CompensatedSum basis, radial, deriv;
  for (std::size_t i = 0; i < N; ++i) {
    const Vec y = Y.row(i).transpose();
    const double ny = y.norm();
    if (ny == 0.0) continue;
    const double dp = bump_deriv(ny / r);
    if (dp == 0.0) continue;
    const double w = mu.weight(i);
    for (int j = 0; j < out.rank; ++j) {
      const double c = y.dot(V.col(j));
      basis += w * (c / r) * dp * (c / ny);
    }
    radial += w * (ny / r) * dp;
    deriv += -w * (ny / (r * r)) * dp;
  }
  out.basis_sum = basis.value();
  out.radial = radial.value();
  out.derivative = -r * deriv.value();
  out.defect = std::max({std::fabs(out.basis_sum - out.radial),
                         std::fabs(out.basis_sum - out.derivative),
                         std::fabs(out.radial - out.derivative)});
  return out;
}

Nonflatness nonflatness_functional(const DiscreteMeasure& mu, const double* origin, double R,
                                   int n, double C_tau) {
  if (!(R > 0.0)) throw DomainError("nonflatness_functional: R must be positive");
  const int d = mu.dim();
  const double I = smoothed_mass(mu, origin, R);
  if (!(I > 0.0)) throw DomainError("nonflatness_functional: I_mu(B(0,R)) = 0");
  std::vector<double> coords, weights;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double p = bump(dist(mu.point(i), origin, d) / (2.0 * R));
    if (!(p > 0.0)) continue;
    coords.insert(coords.end(), mu.point(i), mu.point(i) + d);
    weights.push_back(mu.weight(i) * p);
  }
  if (weights.empty()) throw DomainError("nonflatness_functional: empty weighted support");
  const PlaneFit fit = fit_plane(coords, weights, d, n);
  Nonflatness out;
  out.plane = fit.plane;
  out.value = fit.residual / (I * R * R);
  const double g = bump_deriv_sup();
  out.threshold = 1.0 / (4.0 * C_tau * g * g);
  return out;
}

}  // namespace mscale
