#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

namespace {

bool in_cell(const Cell& c, const double* x) {
  for (std::size_t j = 0; j < c.lo.size(); ++j)
    if (!(x[j] >= c.lo[j] && x[j] < c.lo[j] + c.side)) return false;
  return true;
}

}  // namespace

double plane_residual(const std::vector<double>& coords, const std::vector<double>& w, int d,
                      int n) {
  const std::size_t N = w.size();
  double W = 0.0;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < N; ++i) {
    W += w[i];
    for (int j = 0; j < d; ++j) m[j] += w[i] * coords[i * d + j];
  }
  if (W <= 0.0) return 0.0;
  m /= W;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < N; ++i) {
    Eigen::VectorXd y(d);
    for (int j = 0; j < d; ++j) y[j] = coords[i * d + j] - m[j];
    C += w[i] * y * y.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (int j = 0; j < d - n; ++j) s += std::max(0.0, es.eigenvalues()[j]);
  return s;
}

double ball_mass(const DiscreteMeasure& mu, const std::vector<double>& x, double r) {
  double m = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double s = 0.0;
    for (int j = 0; j < mu.dim(); ++j) {
      const double t = mu.point(i)[j] - x[j];
      s += t * t;
    }
    if (std::sqrt(s) < r) m += mu.weight(i);
  }
  return m;
}

double energy_quadrature(const DiscreteMeasure& mu, mscale::EnergyKind kind,
                         const std::optional<Cell>& region, double r_min, double r_max) {
  const int d = mu.dim();
  const double s = mu.s();
  const int n = static_cast<int>(std::lround(s));
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (!region || in_cell(*region, mu.point(i))) idx.push_back(i);

  double total = 0.0;
  for (auto i : idx) {
    std::vector<double> dist;
    for (auto k : idx) {
      double q = 0.0;
      for (int j = 0; j < d; ++j) {
        const double t = mu.point(k)[j] - mu.point(i)[j];
        q += t * t;
      }
      dist.push_back(std::sqrt(q));
    }
    // integrand at radius r, evaluated from the ball contents directly
    auto f = [&](double r) {
      double m = 0.0;
      std::vector<double> c, w;
      for (std::size_t a = 0; a < idx.size(); ++a)
        if (dist[a] < r) {
          m += mu.weight(idx[a]);
          if (kind == mscale::EnergyKind::jones) {
            c.insert(c.end(), mu.point(idx[a]), mu.point(idx[a]) + d);
            w.push_back(mu.weight(idx[a]));
          }
        }
      const double dens = m / std::pow(r, s);
      if (kind == mscale::EnergyKind::wolff) return dens * dens / r;
      if (m <= 0.0) return 0.0;
      const double beta2 = plane_residual(c, w, d, n) / (m * r * r);
      return beta2 * dens * dens / r;
    };
    std::vector<double> cuts{r_min};
    for (double t : dist)
      if (t > r_min && t < r_max) cuts.push_back(t);
    cuts.push_back(r_max);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double a = cuts[k], b = cuts[k + 1];
      // the ball contents are constant on (a, b]; integrate in log r
      const double la = std::log(a), lb = std::log(b);
      auto g = [&](double u) {
        const double r = std::exp(u);
        return r * f(r);
      };
      acc += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, la, lb, 6, 1e-10);
    }
    total += mu.weight(i) * acc;
  }
  return total;
}

double lp_simplex(const mscale::TransportLP& lp) {
  const std::size_t N = lp.coeff.size();
  const int d = lp.dim;
  if (N == 0) return 0.0;
  auto D = [&](std::size_t i, std::size_t j) {
    double q = 0.0;
    for (int k = 0; k < d; ++k) {
      const double t = lp.coords[i * d + k] - lp.coords[j * d + k];
      q += t * t;
    }
    return std::sqrt(q) / lp.scale;
  };
  // effective bounds; the shift f = g - b puts the origin inside the polytope
  std::vector<double> b(N);
  for (std::size_t i = 0; i < N; ++i) {
    b[i] = lp.bound[i];
    for (std::size_t j = 0; j < N; ++j) b[i] = std::min(b[i], lp.bound[j] + D(i, j));
  }
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  for (std::size_t i = 0; i < N; ++i) {
    std::vector<double> r(N, 0.0);
    r[i] = 1.0;
    rows.push_back(r);
    rhs.push_back(2.0 * b[i]);
  }
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      if (i == j) continue;
      std::vector<double> r(N, 0.0);
      r[i] = 1.0;
      r[j] = -1.0;
      rows.push_back(r);
      rhs.push_back(std::max(0.0, D(i, j) + b[i] - b[j]));
    }
  const std::size_t m = rows.size();
  const std::size_t cols = N + m;
  // tableau: m constraint rows, then objective row; last column is the rhs
  std::vector<std::vector<double>> T(m + 1, std::vector<double>(cols + 1, 0.0));
  std::vector<std::size_t> basis(m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < N; ++c) T[r][c] = rows[r][c];
    T[r][N + r] = 1.0;
    T[r][cols] = rhs[r];
    basis[r] = N + r;
  }
  for (std::size_t c = 0; c < N; ++c) T[m][c] = -lp.coeff[c];
  for (int it = 0; it < 100000; ++it) {
    std::size_t enter = cols;
    for (std::size_t c = 0; c < cols; ++c)
      if (T[m][c] < -1e-13) {
        enter = c;
        break;
      }
    if (enter == cols) break;
    std::size_t leave = m;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < m; ++r)
      if (T[r][enter] > 1e-13) {
        const double ratio = T[r][cols] / T[r][enter];
        if (ratio < best - 1e-15 || (ratio <= best + 1e-15 && leave < m && basis[r] < basis[leave])) {
          best = ratio;
          leave = r;
        }
      }
    if (leave == m) throw std::runtime_error("lp_simplex: unbounded");
    const double p = T[leave][enter];
    for (auto& v : T[leave]) v /= p;
    for (std::size_t r = 0; r <= m; ++r) {
      if (r == leave) continue;
      const double f = T[r][enter];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= cols; ++c) T[r][c] -= f * T[leave][c];
    }
    basis[leave] = enter;
  }
  double shift = 0.0;
  for (std::size_t i = 0; i < N; ++i) shift += lp.coeff[i] * b[i];
  return T[m][cols] - shift;
}

double best_selection(const std::vector<double>& gain,
                      const std::vector<std::vector<std::size_t>>& conflicts) {
  const std::size_t n = gain.size();
  if (n > 24) throw std::invalid_argument("best_selection: too many items");
  std::vector<std::uint32_t> mask(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (auto j : conflicts[i]) mask[i] |= 1u << j;
  double best = 0.0;
  for (std::uint32_t set = 0; set < (1u << n); ++set) {
    double g = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i)
      if (set >> i & 1u) {
        ok = (mask[i] & set) == 0;
        g += gain[i];
      }
    if (ok) best = std::max(best, g);
  }
  return best;
}

}  // namespace oracle
