#include "mscale/sqfn.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace mscale {

namespace {

// Canonical accumulation shared by direct and hashed evaluation: atoms are
// visited in ascending index order and only nonzero terms are added.
template <class Indices>
Vec accumulate_field(const DiscreteMeasure& mu, const double* x, double t,
                     const std::vector<double>& f, const Indices& indices) {
  const int d = mu.dim();
  const double norm = std::pow(t, mu.s() + 1.0);
  std::vector<CompensatedSum> acc(d);
  for (std::size_t i : indices) {
    const double* y = mu.point(i);
    const double r = dist(x, y, d);
    if (!(r < 2.0 * t)) continue;
    const double p = bump(r / t);
    if (!(p > 0.0)) continue;
    const double c = mu.weight(i) * (f.empty() ? 1.0 : f[i]) * p / norm;
    if (c == 0.0) continue;
    for (int j = 0; j < d; ++j) acc[j] += c * (x[j] - y[j]);
  }
  Vec out(d);
  for (int j = 0; j < d; ++j) out[j] = acc[j].value();
  return out;
}

struct IndexRange {
  std::size_t n;
  struct It {
    std::size_t i;
    std::size_t operator*() const { return i; }
    It& operator++() {
      ++i;
      return *this;
    }
    bool operator!=(const It& o) const { return i != o.i; }
  };
  It begin() const { return {0}; }
  It end() const { return {n}; }
};

void check_f(const DiscreteMeasure& mu, const std::vector<double>& f) {
  if (!f.empty() && f.size() != mu.size())
    throw DomainError("square function: f must have one value per atom");
}

}  // namespace

Vec field(const DiscreteMeasure& mu, const double* x, double t, const std::vector<double>& f) {
  if (!(t > 0.0)) throw DomainError("field: t must be positive");
  check_f(mu, f);
  return accumulate_field(mu, x, t, f, IndexRange{mu.size()});
}

FieldCache::FieldCache(const DiscreteMeasure& mu, double t)
    : mu_(&mu),
      t_(t),
      cell_(2.0 * t),
      grid_(64, [](const std::vector<std::int64_t>& k) {
        std::size_t h = 1469598103934665603ULL;
        for (auto v : k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ULL;
        return h;
      }) {
  if (!(t > 0.0)) throw DomainError("FieldCache: t must be positive");
  for (std::size_t i = 0; i < mu.size(); ++i) grid_[key(mu.point(i))].push_back(i);
}

std::vector<std::int64_t> FieldCache::key(const double* x) const {
  std::vector<std::int64_t> k(mu_->dim());
  for (int j = 0; j < mu_->dim(); ++j) k[j] = static_cast<std::int64_t>(std::floor(x[j] / cell_));
  return k;
}

std::vector<std::size_t> FieldCache::neighbours(const double* x) const {
  const int d = mu_->dim();
  const auto base = key(x);
  std::vector<std::size_t> out;
  std::vector<int> off(d, -1);
  std::vector<std::int64_t> k(d);
  for (;;) {
    for (int j = 0; j < d; ++j) k[j] = base[j] + off[j];
    const auto it = grid_.find(k);
    if (it != grid_.end())
      for (auto i : it->second)
        if (dist(x, mu_->point(i), d) < cell_) out.push_back(i);
    int j = d - 1;
    while (j >= 0 && off[j] == 1) {
      off[j] = -1;
      --j;
    }
    if (j < 0) break;
    ++off[j];
  }
  std::sort(out.begin(), out.end());
  return out;
}

Vec FieldCache::field(const double* x, const std::vector<double>& f) const {
  check_f(*mu_, f);
  return accumulate_field(*mu_, x, t_, f, neighbours(x));
}

LogGrid log_grid(double t_min, double t_max, int nodes_per_octave) {
  if (!(t_min > 0.0 && t_max > t_min)) throw DomainError("log grid: need 0 < t_min < t_max");
  if (nodes_per_octave < 1) throw DomainError("log grid: nodes_per_octave must be positive");
  const double L = std::log(t_max / t_min);
  const int n = std::max(1, static_cast<int>(std::ceil(L / std::log(2.0) * nodes_per_octave - 1e-9)));
  LogGrid g;
  g.h = L / n;
  g.t.resize(n);
  for (int j = 0; j < n; ++j) g.t[j] = t_min * std::exp((j + 0.5) * g.h);
  return g;
}

namespace {

double sqfn_sq(const DiscreteMeasure& mu, const std::vector<double>& f, const double* x,
               double t_min, double t_max, int npo) {
  const LogGrid g = log_grid(t_min, t_max, npo);
  CompensatedSum acc;
  for (double t : g.t) acc += field(mu, x, t, f).squaredNorm() * g.h;
  return acc.value();
}

bool moved(double a, double b) {
  const double scale = std::max(std::fabs(a), std::fabs(b));
  return scale > 0.0 && std::fabs(a - b) > 1e-3 * scale;
}

}  // namespace

SqfnValue sqfn_apply(const DiscreteMeasure& mu, const std::vector<double>& f, const double* x,
                     double t_min, double t_max, int nodes_per_octave) {
  if (nodes_per_octave < 4) throw DomainError("sqfn_apply: nodes_per_octave must be >= 4");
  check_f(mu, f);
  SqfnValue v;
  const double a = sqfn_sq(mu, f, x, t_min, t_max, nodes_per_octave);
  const double b = sqfn_sq(mu, f, x, t_min, t_max, 2 * nodes_per_octave);
  v.value = std::sqrt(a);
  v.quad_flag = moved(a, b);
  return v;
}

namespace {

double constituent_value(const DiscreteMeasure& mu, const std::vector<std::size_t>& members,
                         double t_lo, double t_hi, int npo) {
  const LogGrid g = log_grid(t_lo, t_hi, npo);
  std::vector<double> per_t(g.t.size(), 0.0);
  parallel_for(g.t.size(), [&](std::size_t j) {
    const FieldCache cache(mu, g.t[j]);
    CompensatedSum acc;
    for (auto i : members) acc += mu.weight(i) * cache.field(mu.point(i)).squaredNorm();
    per_t[j] = acc.value();
  });
  CompensatedSum tot;
  for (double v : per_t) tot += v * g.h;
  return tot.value();
}

}  // namespace

ConstituentRecord constituent(const DiscreteMeasure& mu, const DyadicLattice& lat,
                              const DyadicCube& q, double A, int nodes_per_octave,
                              bool check_refinement) {
  if (!(A > 1.0)) throw DomainError("constituent: A must exceed 1");
  const int d = mu.dim();
  const Vec xq = centre(lat, q);
  const double R = A * ball_radius(q, d);
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (dist(mu.point(i), xq.data(), d) < R) members.push_back(i);
  ConstituentRecord rec;
  rec.cube = q;
  rec.A = A;
  rec.t_nodes = nodes_per_octave;
  if (members.empty()) return rec;
  const double l = side(q);
  rec.value = constituent_value(mu, members, l / A, A * l, nodes_per_octave);
  if (check_refinement) {
    const double fine = constituent_value(mu, members, l / A, A * l, 2 * nodes_per_octave);
    rec.quad_flag = moved(rec.value, fine);
  }
  return rec;
}

double overlap_bound(int d, double A) {
  return std::pow(8.0 * std::sqrt(static_cast<double>(d)) * A + 2.0, d);
}

OverlapCensus overlap_census(const DyadicLattice& lat, int level, double A,
                             const std::vector<double>& probes) {
  if (!(A >= 1.0)) throw DomainError("overlap_census: A must be >= 1");
  const int d = lat.dim();
  if (probes.size() % d != 0) throw DomainError("overlap_census: probe coordinates");
  OverlapCensus out;
  out.bound = overlap_bound(d, A);
  const double l = std::ldexp(1.0, level);
  const double R = A * 4.0 * std::sqrt(static_cast<double>(d));  // in units of l
  const std::size_t np = probes.size() / d;
  std::vector<std::int64_t> lo(d), hi(d), m(d);
  for (std::size_t p = 0; p < np; ++p) {
    const double* x = probes.data() + p * d;
    std::vector<double> u(d);
    for (int j = 0; j < d; ++j) {
      u[j] = (x[j] - lat.origin[j]) / l;
      lo[j] = static_cast<std::int64_t>(std::floor(u[j] - 0.5 - R)) - 1;
      hi[j] = static_cast<std::int64_t>(std::ceil(u[j] - 0.5 + R)) + 1;
    }
    m = lo;
    std::size_t count = 0;
    for (;;) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += (u[j] - m[j] - 0.5) * (u[j] - m[j] - 0.5);
      if (std::sqrt(s) < R) ++count;
      int j = d - 1;
      while (j >= 0 && m[j] == hi[j]) {
        m[j] = lo[j];
        --j;
      }
      if (j < 0) break;
      ++m[j];
    }
    if (count > out.max_count) {
      out.max_count = count;
      out.argmax_probe = p;
    }
  }
  return out;
}

SignDecomposition randomized_decomposition_check(const DiscreteMeasure& mu,
                                                 const std::vector<double>& f, double t, int k0) {
  if (k0 < 0 || k0 > 4) throw DomainError("sign decomposition: k0 must lie in [0, 4]");
  if (!(t >= 1.0 && t < 2.0)) throw DomainError("sign decomposition: t must lie in [1, 2)");
  check_f(mu, f);
  const int d = mu.dim();
  const int K = 2 * k0 + 1;
  const std::size_t N = mu.size();
  // v[(i * K + k) * d + j]: single-scale field at atom i, scale 2^{k - k0} t
  std::vector<double> v(N * K * d);
  for (int k = 0; k < K; ++k) {
    const double tk = std::ldexp(t, k - k0);
    for (std::size_t i = 0; i < N; ++i) {
      const Vec F = field(mu, mu.point(i), tk, f);
      for (int j = 0; j < d; ++j) v[(i * K + k) * d + j] = F[j];
    }
  }
  SignDecomposition out;
  out.patterns = std::size_t{1} << K;
  CompensatedSum expect;
  std::vector<double> comb(d);
  for (std::size_t pat = 0; pat < out.patterns; ++pat) {
    CompensatedSum norm;
    for (std::size_t i = 0; i < N; ++i) {
      for (int j = 0; j < d; ++j) {
        CompensatedSum c;
        for (int k = 0; k < K; ++k) {
          const double e = ((pat >> k) & 1U) ? 1.0 : -1.0;
          c += e * v[(i * K + k) * d + j];
        }
        comb[j] = c.value();
      }
      double sq = 0.0;
      for (int j = 0; j < d; ++j) sq += comb[j] * comb[j];
      norm += mu.weight(i) * sq;
    }
    expect += norm.value();
  }
  out.expectation = expect.value() / static_cast<double>(out.patterns);
  CompensatedSum diag;
  for (int k = 0; k < K; ++k)
    for (std::size_t i = 0; i < N; ++i) {
      double sq = 0.0;
      for (int j = 0; j < d; ++j) sq += v[(i * K + k) * d + j] * v[(i * K + k) * d + j];
      diag += mu.weight(i) * sq;
    }
  out.diagonal = diag.value();
  out.defect = std::fabs(out.expectation - out.diagonal);
  return out;
}

ScaleMixture ScaleMixture::point_mass(double u0, double weight) {
  if (!(u0 > 0.0 && weight > 0.0)) throw DomainError("point mass: need u0 > 0, weight > 0");
  return {{u0}, {weight}};
}

ScaleMixture ScaleMixture::smooth_bump(double a, double b) {
  if (!(a > 0.0 && b > a)) throw DomainError("smooth bump: need 0 < a < b");
  using Rule = boost::math::quadrature::gauss<double, 40>;
  ScaleMixture m;
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  auto add = [&](double xi, double wi) {
    const double u = mid + half * xi;
    const double s = std::sin(M_PI * (u - a) / (b - a));
    m.u.push_back(u);
    m.c.push_back(half * wi * s * s / u);
  };
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      add(0.0, w[i]);
    } else {
      add(-x[i], w[i]);
      add(x[i], w[i]);
    }
  }
  return m;
}

ScaleMixture ScaleMixture::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  std::map<std::string, double> kv;
  if (colon != std::string::npos) {
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ValidationError("scale mixture: expected key=value");
      kv[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    }
  }
  auto get = [&](const char* k, double def) { return kv.count(k) ? kv[k] : def; };
  if (kind == "point") return point_mass(get("u", 1.0), get("w", 1.0));
  if (kind == "bump") return smooth_bump(get("a", 1.0), get("b", 2.0));
  throw ValidationError("scale mixture: unknown kind '" + kind + "'");
}

double ScaleMixture::factor(double s) const {
  CompensatedSum acc;
  for (std::size_t j = 0; j < u.size(); ++j) acc += c[j] * std::pow(u[j], s + 1.0);
  return acc.value();
}

double ScaleMixture::eval(double r) const {
  CompensatedSum acc;
  for (std::size_t j = 0; j < u.size(); ++j) acc += c[j] * bump(r / u[j]);
  return acc.value();
}

namespace {

// ||S_{mu,psi} f||^2 with psi given as a radial profile; tail handled in closed form.
double sqfn_norm_sq(const DiscreteMeasure& mu, const std::vector<double>& f,
                    const std::function<double(double)>& psi, double psi_zero, double t_lo,
                    double T, int npo) {
  const int d = mu.dim();
  const double s = mu.s();
  const LogGrid g = log_grid(t_lo, T, npo);
  const std::size_t N = mu.size();
  std::vector<double> per_atom(N, 0.0);
  parallel_for(N, [&](std::size_t i) {
    const double* x = mu.point(i);
    CompensatedSum acc;
    std::vector<double> F(d);
    for (double t : g.t) {
      const double norm = std::pow(t, s + 1.0);
      std::fill(F.begin(), F.end(), 0.0);
      for (std::size_t k = 0; k < N; ++k) {
        if (k == i) continue;
        const double* y = mu.point(k);
        const double p = psi(dist(x, y, d) / t);
        if (p == 0.0) continue;
        const double c = mu.weight(k) * (f.empty() ? 1.0 : f[k]) * p / norm;
        for (int j = 0; j < d; ++j) F[j] += c * (x[j] - y[j]);
      }
      double sq = 0.0;
      for (int j = 0; j < d; ++j) sq += F[j] * F[j];
      acc += sq * g.h;
    }
    // beyond T the profile is constant psi_zero on all pair distances
    double V2 = 0.0;
    for (int j = 0; j < d; ++j) {
      double vj = 0.0;
      for (std::size_t k = 0; k < N; ++k)
        vj += mu.weight(k) * (f.empty() ? 1.0 : f[k]) * (x[j] - mu.point(k)[j]);
      V2 += vj * vj;
    }
    acc += psi_zero * psi_zero * V2 * std::pow(T, -2.0 * s - 2.0) / (2.0 * s + 2.0);
    per_atom[i] = acc.value();
  });
  CompensatedSum tot;
  for (std::size_t i = 0; i < N; ++i) tot += mu.weight(i) * per_atom[i];
  return tot.value();
}

}  // namespace

ConvCompare conv_bump_compare(const DiscreteMeasure& mu, const std::vector<double>& f,
                              const ScaleMixture& g, int nodes_per_octave) {
  check_f(mu, f);
  if (g.u.empty()) throw DomainError("conv_bump_compare: empty scale mixture");
  ConvCompare out;
  out.factor = g.factor(mu.s());
  if (mu.size() < 2) return out;
  const double umin = *std::min_element(g.u.begin(), g.u.end());
  const double umax = *std::max_element(g.u.begin(), g.u.end());
  const double t_lo = mu.min_sep() / (2.0 * std::max(1.0, umax));
  const double T = mu.diam() / std::min(1.0, umin);
  const double g0 = std::accumulate(g.c.begin(), g.c.end(), 0.0);
  auto psi = [](double r) { return bump(r); };
  auto psig = [&](double r) { return g.eval(r); };
  const double r1 = sqfn_norm_sq(mu, f, psi, 1.0, t_lo, T, nodes_per_octave);
  const double r2 = sqfn_norm_sq(mu, f, psi, 1.0, t_lo, T, 2 * nodes_per_octave);
  const double l1 = sqfn_norm_sq(mu, f, psig, g0, t_lo, T, nodes_per_octave);
  const double l2 = sqfn_norm_sq(mu, f, psig, g0, t_lo, T, 2 * nodes_per_octave);
  out.lhs = std::sqrt(l2);
  out.rhs = std::sqrt(r2);
  out.tolerance = std::fabs(std::sqrt(l2) - std::sqrt(l1)) +
                  out.factor * std::fabs(std::sqrt(r2) - std::sqrt(r1));
  out.slack = out.factor * out.rhs + out.tolerance - out.lhs;
  out.holds = out.slack >= 0.0;
  return out;
}

IndicatorNorm indicator_norm(const DiscreteMeasure& mu, const DyadicLattice& lat,
                             const DyadicCube& P, double A, int level_min, int level_max,
                             int nodes_per_octave) {
  const auto idx = atoms_in_cube(mu, lat, P);
  if (idx.empty()) throw DomainError("indicator_norm: mu(P) = 0");
  const DiscreteMeasure sub = mu.subset(idx);
  IndicatorNorm out;
  const double mass = sub.total_mass();
  CompensatedSum tot;
  for (int k = level_min; k <= level_max; ++k) {
    CompensatedSum lv;
    if (sub.size() > 1)
      for (const auto& q : charged_cubes(sub, lat, k, k))
        lv += constituent(sub, lat, q, A, nodes_per_octave, false).value;
    out.levels.push_back({k, lv.value() / mass});
    tot += lv.value() / mass;
  }
  out.total = tot.value();
  return out;
}

}  // namespace mscale
