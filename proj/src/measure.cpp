#include "mscale/measure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace mscale {

namespace {

// exponent of the glue: phi(t) = 1 / (1 + exp(g(t))) on (1,2)
inline double glue_exponent(double t) { return 1.0 / (2.0 - t) - 1.0 / (t - 1.0); }

double compute_deriv_sup() {
  // |phi'| is symmetric about 1.5; scan then golden-section refine.
  double best_t = 1.5;
  double best = std::fabs(bump_deriv(1.5));
  const int m = 20000;
  for (int i = 1; i < m; ++i) {
    const double t = 1.0 + static_cast<double>(i) / m;
    const double v = std::fabs(bump_deriv(t));
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  double a = std::max(1.0 + 1e-9, best_t - 1.0 / m);
  double b = std::min(2.0 - 1e-9, best_t + 1.0 / m);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double c = b - g * (b - a);
    const double d = a + g * (b - a);
    if (std::fabs(bump_deriv(c)) > std::fabs(bump_deriv(d))) {
      b = d;
    } else {
      a = c;
    }
  }
  return std::max(best, std::fabs(bump_deriv(0.5 * (a + b))));
}

}  // namespace

double bump(double t) {
  if (!(t >= 0.0)) throw DomainError("bump: negative argument");
  if (t <= 1.0) return 1.0;
  if (t >= 2.0) return 0.0;
  return 1.0 / (1.0 + std::exp(glue_exponent(t)));
}

double bump_deriv(double t) {
  if (!(t >= 0.0)) throw DomainError("bump_deriv: negative argument");
  if (t <= 1.0 || t >= 2.0) return 0.0;
  const double g = glue_exponent(t);
  const double e = std::exp(-std::fabs(g));
  const double p1mp = e / ((1.0 + e) * (1.0 + e));  // phi (1 - phi)
  const double a = 2.0 - t;
  const double b = t - 1.0;
  const double gp = 1.0 / (a * a) + 1.0 / (b * b);
  return -p1mp * gp;
}

double bump_deriv_sup() {
  static const double v = compute_deriv_sup();
  return v;
}

DiscreteMeasure::DiscreteMeasure(int dim, double s, std::vector<double> coords,
                                 std::vector<double> weights, nlohmann::json metadata)
    : dim_(dim),
      s_(s),
      coords_(std::move(coords)),
      weights_(std::move(weights)),
      metadata_(std::move(metadata)) {
  if (dim_ < 1) throw ValidationError("measure: dim must be positive");
  if (!(s_ > 0.0 && s_ < dim_)) throw ValidationError("measure: need 0 < s < dim");
  if (weights_.empty()) throw ValidationError("measure: need at least one atom");
  if (coords_.size() != weights_.size() * static_cast<std::size_t>(dim_))
    throw ValidationError("measure: coordinate count does not match weights");
  CompensatedSum mass;
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w))
      throw ValidationError("measure: weights must be finite and positive");
    mass += w;
  }
  for (double c : coords_)
    if (!std::isfinite(c)) throw ValidationError("measure: non-finite coordinate");
  total_mass_ = mass.value();

  const std::size_t n = weights_.size();
  if (n == 1) {
    min_sep_ = std::numeric_limits<double>::infinity();
    diam_ = 0.0;
    return;
  }
  // min_sep by a sweep along the first coordinate
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double xa = coords_[a * dim_], xb = coords_[b * dim_];
    return xa < xb || (xa == xb && a < b);
  });
  double best2 = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < n; ++a) {
    const double* pa = point(order[a]);
    for (std::size_t b = a + 1; b < n; ++b) {
      const double* pb = point(order[b]);
      const double dx = pb[0] - pa[0];
      if (dx * dx >= best2) break;
      best2 = std::min(best2, dist2(pa, pb, dim_));
    }
  }
  min_sep_ = std::sqrt(best2);
  double d2 = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) d2 = std::max(d2, dist2(point(a), point(b), dim_));
  diam_ = std::sqrt(d2);
}

DiscreteMeasure DiscreteMeasure::subset(const std::vector<std::size_t>& idx) const {
  std::vector<double> c;
  std::vector<double> w;
  c.reserve(idx.size() * dim_);
  w.reserve(idx.size());
  for (std::size_t i : idx) {
    c.insert(c.end(), point(i), point(i) + dim_);
    w.push_back(weights_[i]);
  }
  return DiscreteMeasure(dim_, s_, std::move(c), std::move(w), metadata_);
}

DiscreteMeasure DiscreteMeasure::with_metadata(nlohmann::json metadata) const {
  DiscreteMeasure out = *this;
  out.metadata_ = std::move(metadata);
  return out;
}

double smoothed_mass(const DiscreteMeasure& mu, const double* x, double r) {
  if (!(r > 0.0)) throw DomainError("smoothed_mass: radius must be positive");
  CompensatedSum acc;
  const int d = mu.dim();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double t = dist(x, mu.point(i), d) / r;
    if (t < 2.0) acc += mu.weight(i) * bump(t);
  }
  return acc.value();
}

double ball_mass(const DiscreteMeasure& mu, const double* x, double r) {
  if (!(r > 0.0)) throw DomainError("ball_mass: radius must be positive");
  CompensatedSum acc;
  const int d = mu.dim();
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (dist(x, mu.point(i), d) < r) acc += mu.weight(i);
  return acc.value();
}

// ---------------------------------------------------------------- Rng

std::uint64_t Rng::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * M_PI * u2;
  spare_ = rad * std::sin(ang);
  has_spare_ = true;
  return rad * std::cos(ang);
}

// ---------------------------------------------------------------- generators

GeneratorSpec GeneratorSpec::plane_patch(int dim, int n, double extent, double step) {
  GeneratorSpec g;
  g.family = "plane_patch";
  g.dim = dim;
  g.n = n;
  g.extent = extent;
  g.grid_step = step;
  return g;
}

GeneratorSpec GeneratorSpec::lipschitz_graph(int dim, int n, double lip, double extent,
                                             double step) {
  GeneratorSpec g = plane_patch(dim, n, extent, step);
  g.family = "lipschitz_graph";
  g.lip_const = lip;
  return g;
}

GeneratorSpec GeneratorSpec::cantor_four_corner(int generation) {
  GeneratorSpec g;
  g.family = "cantor_four_corner";
  g.dim = 2;
  g.generation = generation;
  g.contraction_ratio = 0.25;
  return g;
}

GeneratorSpec GeneratorSpec::cantor_self_similar(int dim, double ratio, int generation) {
  GeneratorSpec g;
  g.family = "cantor_self_similar";
  g.dim = dim;
  g.contraction_ratio = ratio;
  g.generation = generation;
  return g;
}

GeneratorSpec GeneratorSpec::phi_symmetric_example(
    int k, std::vector<std::vector<double>> translates, std::vector<double> density,
    double extent, double step) {
  GeneratorSpec g;
  g.family = "phi_symmetric_example";
  g.n = k;
  g.dim = translates.empty() ? k + 1 : static_cast<int>(translates.front().size());
  g.translate_set = std::move(translates);
  g.density = std::move(density);
  g.extent = extent;
  g.grid_step = step;
  return g;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ValidationError("generator spec: bad number for '" + key + "': " + v);
  }
}

int to_int(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != std::floor(x)) throw ValidationError("generator spec: '" + key + "' must be an integer");
  return static_cast<int>(x);
}

}  // namespace

GeneratorSpec GeneratorSpec::parse(const std::string& text) {
  GeneratorSpec g;
  const auto colon = text.find(':');
  g.family = text.substr(0, colon);
  static const char* const families[] = {"plane_patch", "lipschitz_graph", "cantor_four_corner",
                                         "cantor_self_similar", "phi_symmetric_example"};
  if (std::find(std::begin(families), std::end(families), g.family) == std::end(families))
    throw ValidationError("generator spec: unknown family '" + g.family + "'");
  bool dim_set = false;
  if (colon != std::string::npos) {
    for (const auto& kv : split(text.substr(colon + 1), ',')) {
      if (kv.empty()) continue;
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ValidationError("generator spec: expected key=value: " + kv);
      const std::string key = kv.substr(0, eq);
      const std::string val = kv.substr(eq + 1);
      if (key == "dim" || key == "d") {
        g.dim = to_int(key, val);
        dim_set = true;
      } else if (key == "n" || key == "k") {
        g.n = to_int(key, val);
      } else if (key == "extent") {
        g.extent = to_double(key, val);
      } else if (key == "step" || key == "grid_step") {
        g.grid_step = to_double(key, val);
      } else if (key == "lip" || key == "lip_const") {
        g.lip_const = to_double(key, val);
      } else if (key == "gen" || key == "generation") {
        g.generation = to_int(key, val);
      } else if (key == "ratio" || key == "contraction_ratio") {
        g.contraction_ratio = to_double(key, val);
      } else if (key == "t" || key == "translates") {
        for (const auto& p : split(val, '|')) {
          std::vector<double> v;
          for (const auto& c : split(p, ';')) v.push_back(to_double(key, c));
          g.translate_set.push_back(v);
        }
      } else if (key == "f" || key == "density") {
        for (const auto& c : split(val, '|')) g.density.push_back(to_double(key, c));
      } else {
        throw ValidationError("generator spec: unknown key '" + key + "'");
      }
    }
  }
  if (g.family == "cantor_four_corner") {
    g.dim = 2;
    g.contraction_ratio = 0.25;
  }
  if (g.family == "phi_symmetric_example" && !g.translate_set.empty() && !dim_set)
    g.dim = static_cast<int>(g.translate_set.front().size());
  if (!dim_set && (g.family == "plane_patch" || g.family == "lipschitz_graph"))
    g.dim = g.n + 1;
  return g;
}

nlohmann::json GeneratorSpec::to_json() const {
  nlohmann::json j;
  j["family"] = family;
  j["dim"] = dim;
  if (family == "plane_patch" || family == "lipschitz_graph" || family == "phi_symmetric_example") {
    j["n"] = n;
    j["extent"] = extent;
    j["grid_step"] = grid_step;
  }
  if (family == "lipschitz_graph") j["lip_const"] = lip_const;
  if (family == "cantor_four_corner" || family == "cantor_self_similar") {
    j["generation"] = generation;
    j["contraction_ratio"] = contraction_ratio;
  }
  if (family == "phi_symmetric_example") {
    j["translate_set"] = translate_set;
    j["density"] = density;
  }
  return j;
}

namespace {

// grid of points in [-extent/2, extent/2]^n with spacing step
std::vector<std::vector<double>> centered_grid(int n, double extent, double step) {
  const long m = std::lround(std::floor(extent / step + 1e-9));
  std::vector<double> axis;
  for (long i = 0; i <= m; ++i) axis.push_back(-0.5 * m * step + i * step);
  std::vector<std::vector<double>> out{{}};
  for (int j = 0; j < n; ++j) {
    std::vector<std::vector<double>> next;
    next.reserve(out.size() * axis.size());
    for (const auto& p : out)
      for (double a : axis) {
        auto q = p;
        q.push_back(a);
        next.push_back(std::move(q));
      }
    out = std::move(next);
  }
  return out;
}

nlohmann::json box_json(const std::vector<double>& lo, const std::vector<double>& hi) {
  nlohmann::json l = nlohmann::json::array(), h = nlohmann::json::array();
  for (double v : lo) l.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json());
  for (double v : hi) h.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json());
  return {{"lo", l}, {"hi", h}};
}

void check_positive(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError("generator: " + msg);
}

DiscreteMeasure gen_patch_or_graph(const GeneratorSpec& g, bool graph) {
  check_positive(g.n >= 1, "n must be >= 1");
  check_positive(g.dim > g.n, "dim must exceed n");
  check_positive(g.extent > 0 && g.grid_step > 0, "extent and grid_step must be positive");
  check_positive(!graph || g.lip_const >= 0, "lip_const must be nonnegative");
  const auto grid = centered_grid(g.n, g.extent, g.grid_step);
  const double w = std::pow(g.grid_step, g.n);
  const double omega = 2.0 * M_PI / g.extent;
  std::vector<double> coords;
  std::vector<double> weights;
  coords.reserve(grid.size() * g.dim);
  for (const auto& u : grid) {
    double h = 0.0;
    if (graph && g.lip_const > 0) {
      for (double uj : u) h += std::sin(omega * uj);
      h *= g.lip_const / (omega * std::sqrt(static_cast<double>(g.n)));
    }
    for (int j = 0; j < g.dim; ++j) {
      if (j < g.n) {
        coords.push_back(u[j]);
      } else if (j == g.n) {
        coords.push_back(h);
      } else {
        coords.push_back(0.0);
      }
    }
    weights.push_back(w);
  }
  std::vector<double> lo(g.dim, -std::numeric_limits<double>::infinity());
  std::vector<double> hi(g.dim, std::numeric_limits<double>::infinity());
  for (int j = 0; j < g.n; ++j) {
    lo[j] = grid.front()[j];
    hi[j] = grid.back()[j];
  }
  nlohmann::json meta = {{"generator", g.to_json()}, {"support_box", box_json(lo, hi)}};
  return DiscreteMeasure(g.dim, g.n, std::move(coords), std::move(weights), meta);
}

DiscreteMeasure gen_cantor(const GeneratorSpec& g) {
  check_positive(g.dim >= 1, "dim must be positive");
  check_positive(g.generation >= 0, "generation must be nonnegative");
  check_positive(g.contraction_ratio > 0 && g.contraction_ratio < 0.5,
                 "contraction_ratio must lie in (0, 1/2)");
  const int d = g.dim;
  const double r = g.contraction_ratio;
  const std::size_t kids = std::size_t{1} << d;
  std::vector<double> centres(d, 0.5);
  double side = 1.0;
  for (int gen = 0; gen < g.generation; ++gen) {
    const double off = 0.5 * (1.0 - r) * side;
    std::vector<double> next;
    next.reserve(centres.size() * kids);
    const std::size_t count = centres.size() / d;
    for (std::size_t p = 0; p < count; ++p)
      for (std::size_t c = 0; c < kids; ++c)
        for (int j = 0; j < d; ++j) {
          const double sgn = ((c >> (d - 1 - j)) & 1U) ? 1.0 : -1.0;
          next.push_back(centres[p * d + j] + sgn * off);
        }
    centres = std::move(next);
    side *= r;
  }
  const std::size_t n = centres.size() / d;
  const double w = std::pow(static_cast<double>(kids), -g.generation);
  const double s = d * std::log(2.0) / std::log(1.0 / r);
  if (!(s < d)) throw ValidationError("generator: dimension must be below ambient dimension");
  nlohmann::json meta = {{"generator", g.to_json()}};
  return DiscreteMeasure(d, s, std::move(centres), std::vector<double>(n, w), meta);
}

DiscreteMeasure gen_phi_symmetric(const GeneratorSpec& g) {
  const int k = g.n;
  check_positive(!g.translate_set.empty(), "translate_set must be nonempty");
  const int d = static_cast<int>(g.translate_set.front().size());
  check_positive(k >= 1 && k < d, "need 1 <= k < dim");
  check_positive(g.extent > 0 && g.grid_step > 0, "extent and grid_step must be positive");
  if (g.density.size() != g.translate_set.size())
    throw ValidationError("generator: density must have one value per translate");
  const double tol = 1e-9;
  std::vector<std::vector<double>> E;
  for (const auto& x : g.translate_set) {
    if (static_cast<int>(x.size()) != d) throw ValidationError("generator: inconsistent translate dimension");
    auto y = x;
    for (int j = 0; j < k; ++j) y[j] = 0.0;  // the plane V is spanned by the first k axes
    E.push_back(y);
  }
  for (double f : g.density)
    if (!(f > 0)) throw ValidationError("generator: density values must be positive");
  bool has_zero = false;
  for (const auto& x : E) {
    double n2 = 0;
    for (double v : x) n2 += v * v;
    if (std::sqrt(n2) < tol) has_zero = true;
  }
  if (!has_zero) throw ValidationError("generator: translate_set must contain the origin");
  // declared extent in the normal directions: bounding box of E
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (const auto& x : E)
    for (int j = k; j < d; ++j) {
      lo[j] = std::min(lo[j], x[j]);
      hi[j] = std::max(hi[j], x[j]);
    }
  for (std::size_t a = 0; a < E.size(); ++a)
    for (std::size_t b = 0; b < E.size(); ++b) {
      std::vector<double> z(d);
      bool inside = true;
      for (int j = 0; j < d; ++j) {
        z[j] = 2.0 * E[b][j] - E[a][j];
        if (j >= k && (z[j] < lo[j] - tol || z[j] > hi[j] + tol)) inside = false;
      }
      if (!inside) continue;
      bool found = false;
      for (std::size_t c = 0; c < E.size(); ++c) {
        double n2 = 0;
        for (int j = 0; j < d; ++j) n2 += (E[c][j] - z[j]) * (E[c][j] - z[j]);
        if (std::sqrt(n2) < tol) {
          found = true;
          if (std::fabs(g.density[c] - g.density[a]) > 1e-12 * std::fabs(g.density[a]))
            throw ValidationError("generator: density is not symmetric on the translate set");
        }
      }
      if (!found) throw ValidationError("generator: translate_set is not symmetric about its points");
    }
  const auto grid = centered_grid(k, g.extent, g.grid_step);
  const double cell = std::pow(g.grid_step, k);
  std::vector<double> coords;
  std::vector<double> weights;
  for (std::size_t e = 0; e < E.size(); ++e)
    for (const auto& u : grid) {
      for (int j = 0; j < d; ++j) coords.push_back(j < k ? u[j] : E[e][j]);
      weights.push_back(g.density[e] * cell);
    }
  std::vector<double> blo(d, -std::numeric_limits<double>::infinity());
  std::vector<double> bhi(d, std::numeric_limits<double>::infinity());
  for (int j = 0; j < k; ++j) {
    blo[j] = grid.front()[j];
    bhi[j] = grid.back()[j];
  }
  nlohmann::json meta = {{"generator", g.to_json()}, {"support_box", box_json(blo, bhi)}};
  return DiscreteMeasure(d, k, std::move(coords), std::move(weights), meta);
}

}  // namespace

DiscreteMeasure generate(const GeneratorSpec& spec, std::uint64_t /*seed*/) {
  if (spec.family == "plane_patch") return gen_patch_or_graph(spec, false);
  if (spec.family == "lipschitz_graph") return gen_patch_or_graph(spec, true);
  if (spec.family == "cantor_four_corner") {
    GeneratorSpec g = spec;
    g.dim = 2;
    g.contraction_ratio = 0.25;
    return gen_cantor(g);
  }
  if (spec.family == "cantor_self_similar") return gen_cantor(spec);
  if (spec.family == "phi_symmetric_example") return gen_phi_symmetric(spec);
  throw ValidationError("generator: unknown family '" + spec.family + "'");
}

DiscreteMeasure perturb(const DiscreteMeasure& mu, double magnitude, std::uint64_t seed) {
  if (!(magnitude >= 0.0)) throw DomainError("perturb: magnitude must be nonnegative");
  if (magnitude == 0.0) return mu;
  Rng rng(seed);
  const int d = mu.dim();
  std::vector<double> coords = mu.coords();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    std::vector<double> dir(d);
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (int j = 0; j < d; ++j) {
        dir[j] = rng.normal();
        n2 += dir[j] * dir[j];
      }
    } while (n2 == 0.0);
    const double rad = magnitude * std::pow(rng.uniform(), 1.0 / d) / std::sqrt(n2);
    for (int j = 0; j < d; ++j) coords[i * d + j] += rad * dir[j];
  }
  nlohmann::json meta = mu.metadata();
  meta["perturbation"] = {{"magnitude", magnitude}, {"seed", seed}};
  return DiscreteMeasure(d, mu.s(), std::move(coords), mu.weights(), meta);
}

DiscreteMeasure random_cloud(int dim, double s, std::size_t n, double extent,
                             std::uint64_t seed, double w_lo, double w_hi) {
  Rng rng(seed);
  std::vector<double> coords(n * dim);
  std::vector<double> w(n);
  for (auto& c : coords) c = rng.uniform(-0.5 * extent, 0.5 * extent);
  for (auto& x : w) x = rng.uniform(w_lo, w_hi);
  nlohmann::json meta = {{"generator", {{"family", "random_cloud"}, {"seed", seed}}}};
  return DiscreteMeasure(dim, s, std::move(coords), std::move(w), meta);
}

// ---------------------------------------------------------------- IO

nlohmann::json to_json(const DiscreteMeasure& mu) {
  nlohmann::json pts = nlohmann::json::array();
  for (std::size_t i = 0; i < mu.size(); ++i)
    pts.push_back(std::vector<double>(mu.point(i), mu.point(i) + mu.dim()));
  return {{"dim", mu.dim()},
          {"s", mu.s()},
          {"points", pts},
          {"weights", mu.weights()},
          {"metadata", mu.metadata()}};
}

DiscreteMeasure measure_from_json(const nlohmann::json& j) {
  try {
    const int d = j.at("dim").get<int>();
    const double s = j.at("s").get<double>();
    std::vector<double> coords;
    for (const auto& p : j.at("points")) {
      if (static_cast<int>(p.size()) != d) throw ValidationError("measure file: point dimension mismatch");
      for (const auto& c : p) coords.push_back(c.get<double>());
    }
    auto w = j.at("weights").get<std::vector<double>>();
    nlohmann::json meta = j.contains("metadata") ? j["metadata"] : nlohmann::json::object();
    return DiscreteMeasure(d, s, std::move(coords), std::move(w), meta);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("measure file: ") + e.what());
  }
}

void save_measure(const DiscreteMeasure& mu, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json(mu).dump(1) << '\n';
}

DiscreteMeasure load_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("measure file: ") + e.what());
  }
  return measure_from_json(j);
}

double boundary_distance(const DiscreteMeasure& mu, const double* x) {
  const auto& meta = mu.metadata();
  if (!meta.is_object() || !meta.contains("support_box")) return std::numeric_limits<double>::infinity();
  const auto& box = meta["support_box"];
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < mu.dim(); ++j) {
    const auto& lo = box["lo"][j];
    const auto& hi = box["hi"][j];
    if (!lo.is_null()) best = std::min(best, x[j] - lo.get<double>());
    if (!hi.is_null()) best = std::min(best, hi.get<double>() - x[j]);
  }
  return best;
}

}  // namespace mscale
