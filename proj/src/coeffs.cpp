#include "mscale/coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mscale {

double AffinePlane::dist2(const double* x) const {
  const int d = dim();
  Vec v(d);
  for (int j = 0; j < d; ++j) v[j] = x[j] - base[j];
  if (n() == 0) return v.squaredNorm();
  // subtract the in-plane part rather than |v|^2 - |c|^2, which cancels badly
  const Vec perp = v - basis * (basis.transpose() * v);
  return perp.squaredNorm();
}

Vec AffinePlane::project(const double* x) const {
  const int d = dim();
  Vec v(d);
  for (int j = 0; j < d; ++j) v[j] = x[j] - base[j];
  if (n() == 0) return base;
  return base + basis * (basis.transpose() * v);
}

Mat AffinePlane::normals() const {
  const int d = dim();
  const int k = n();
  Mat full = Mat::Identity(d, d);
  if (k == 0) return full;
  // complete the basis by Householder QR of [basis | I]
  Mat m(d, k + d);
  m << basis, Mat::Identity(d, d);
  Eigen::HouseholderQR<Mat> qr(m);
  const Mat q = qr.householderQ() * Mat::Identity(d, d);
  return q.rightCols(d - k);
}

PlaneFit fit_plane(const std::vector<double>& coords, const std::vector<double>& weights, int d,
                   int n) {
  if (n < 0 || n > d) throw DomainError("fit_plane: plane dimension out of range");
  const std::size_t N = weights.size();
  CompensatedSum tw;
  std::vector<CompensatedSum> m1(d);
  for (std::size_t i = 0; i < N; ++i) {
    tw += weights[i];
    for (int j = 0; j < d; ++j) m1[j] += weights[i] * coords[i * d + j];
  }
  const double W = tw.value();
  if (!(W > 0.0)) throw UndefinedBeta("fit_plane: zero total weight");
  PlaneFit out;
  out.total_weight = W;
  out.centroid.resize(d);
  for (int j = 0; j < d; ++j) out.centroid[j] = m1[j].value() / W;
  std::vector<CompensatedSum> m2(static_cast<std::size_t>(d) * d);
  std::vector<double> v(d);
  for (std::size_t i = 0; i < N; ++i) {
    for (int j = 0; j < d; ++j) v[j] = coords[i * d + j] - out.centroid[j];
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b) m2[a * d + b] += weights[i] * v[a] * v[b];
  }
  Mat C(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) C(a, b) = C(b, a) = m2[a * d + b].value();
  Eigen::SelfAdjointEigenSolver<Mat> es(C);
  out.eigenvalues = es.eigenvalues();
  double res = 0.0;
  for (int j = 0; j < d - n; ++j) res += std::max(0.0, out.eigenvalues[j]);
  out.residual = res;
  out.plane.base = out.centroid;
  out.plane.basis = es.eigenvectors().rightCols(n);
  return out;
}

AffinePlane optimal_plane(const WeightedPoints& pts, int n) {
  return fit_plane(pts.coords, pts.weights, pts.dim, n).plane;
}

double plane_residual(const WeightedPoints& pts, const AffinePlane& plane) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < pts.weights.size(); ++i)
    acc += pts.weights[i] * plane.dist2(pts.coords.data() + i * pts.dim);
  return acc.value();
}

namespace {

BetaResult finish_beta(const std::vector<double>& coords, const std::vector<double>& weights,
                       int d, int n, double normalizer, double scale) {
  const PlaneFit fit = fit_plane(coords, weights, d, n);
  BetaResult out;
  out.plane = fit.plane;
  out.normalizer = normalizer;
  out.scale = scale;
  out.value = std::sqrt(fit.residual / (normalizer * scale * scale));
  WeightedPoints pts{d, coords, weights};
  out.residual = plane_residual(pts, fit.plane);
  return out;
}

}  // namespace

BetaResult beta_ball(const DiscreteMeasure& mu, const double* x, double r, int n,
                     const std::optional<CubeRef>& restrict_to) {
  if (!(r > 0.0)) throw DomainError("beta_ball: radius must be positive");
  const int d = mu.dim();
  if (n < 0 || n > d) throw DomainError("beta_ball: plane dimension out of range");
  std::vector<double> coords;
  std::vector<double> weights;
  CompensatedSum mass;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!(dist(x, mu.point(i), d) < r)) continue;
    if (restrict_to && !cube_contains(restrict_to->lattice, restrict_to->cube, mu.point(i)))
      continue;
    coords.insert(coords.end(), mu.point(i), mu.point(i) + d);
    weights.push_back(mu.weight(i));
    mass += mu.weight(i);
  }
  if (weights.empty()) throw UndefinedBeta("beta_ball: empty ball");
  return finish_beta(coords, weights, d, n, mass.value(), r);
}

BetaResult beta_cube(const DiscreteMeasure& mu, const DyadicLattice& lat, const DyadicCube& q,
                     std::optional<int> n) {
  const int d = mu.dim();
  const int nn = n ? *n : static_cast<int>(std::floor(mu.s() + 1e-12));
  std::vector<double> coords;
  std::vector<double> weights;
  CompensatedSum mass;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double p = phi_cube(lat, q, mu.point(i));
    if (!(p > 0.0)) continue;
    coords.insert(coords.end(), mu.point(i), mu.point(i) + d);
    weights.push_back(mu.weight(i) * p);
    mass += mu.weight(i) * p;
  }
  if (weights.empty()) throw UndefinedBeta("beta_cube: I_mu(Q) = 0");
  return finish_beta(coords, weights, d, nn, mass.value(), side(q));
}

// ---------------------------------------------------------------- plane quadrature

namespace {

// Visits the grid foot + h * sum_j i_j u_j on the plane for nodes with
// |node - centre| < radius. fn(node pointer).
template <class Fn>
void for_plane_nodes(const AffinePlane& plane, const Vec& centre, double radius, double h,
                     Fn&& fn) {
  const int d = plane.dim();
  const int n = plane.n();
  const Vec foot = plane.project(centre.data());
  const double perp2 = (foot - centre).squaredNorm();
  const double r2 = radius * radius;
  if (perp2 >= r2) return;
  const double span = std::sqrt(r2 - perp2);
  const long M = static_cast<long>(std::ceil(span / h)) + 1;
  if (n == 0) {
    fn(foot.data());
    return;
  }
  std::vector<long> idx(n, -M);
  Vec node(d);
  for (;;) {
    double u2 = 0.0;
    for (int j = 0; j < n; ++j) u2 += (idx[j] * h) * (idx[j] * h);
    if (perp2 + u2 < r2) {
      node = foot;
      for (int j = 0; j < n; ++j) node += (idx[j] * h) * plane.basis.col(j);
      fn(node.data());
    }
    int j = n - 1;
    while (j >= 0 && idx[j] == M) {
      idx[j] = -M;
      --j;
    }
    if (j < 0) break;
    ++idx[j];
  }
}

}  // namespace

double plane_cube_mass(const DyadicLattice& lat, const DyadicCube& q, const AffinePlane& plane,
                       double quad_step) {
  const int d = lat.dim();
  const Vec xq = centre(lat, q);
  const double h = quad_step;
  const double cell = std::pow(h, plane.n());
  CompensatedSum acc;
  for_plane_nodes(plane, xq, ball_radius(q, d), h, [&](const double* p) {
    const double v = phi_cube(lat, q, p);
    if (v > 0.0) acc += v * cell;
  });
  return acc.value();
}

VarthetaResult vartheta(const DiscreteMeasure& mu, const DyadicLattice& lat, const DyadicCube& q,
                        const AffinePlane& plane, double quad_step) {
  const double h = quad_step > 0.0 ? quad_step : side(q) / 64.0;
  VarthetaResult out;
  out.quad_step = h;
  out.plane_mass = plane_cube_mass(lat, q, plane, h);
  if (!(out.plane_mass > 0.0)) throw DomainError("vartheta: plane misses the support of phi_Q");
  out.theta = smoothed_cube_mass(mu, lat, q) / out.plane_mass;
  return out;
}

double witness_lipschitz_constant(int d) {
  const double rd = std::sqrt(static_cast<double>(d));
  return rd * (26.0 + 169.0 * bump_deriv_sup() / 6.0);
}

// ---------------------------------------------------------------- transport LP

TransportSolution solve_transport_lp(const TransportLP& lp) {
  const int d = lp.dim;
  const std::size_t N = lp.coeff.size();
  TransportSolution sol;
  // sources carry positive coefficients, sinks negative; ground index N
  std::vector<std::size_t> src, snk;
  std::vector<double> supply, demand;
  CompensatedSum net;
  double scale_mass = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    net += lp.coeff[i];
    scale_mass += std::fabs(lp.coeff[i]);
    if (lp.coeff[i] > 0.0) {
      src.push_back(i);
      supply.push_back(lp.coeff[i]);
    } else if (lp.coeff[i] < 0.0) {
      snk.push_back(i);
      demand.push_back(-lp.coeff[i]);
    }
  }
  if (scale_mass == 0.0) return sol;
  const double total = net.value();
  if (total > 0.0) {
    snk.push_back(N);
    demand.push_back(total);
  } else if (total < 0.0) {
    src.push_back(N);
    supply.push_back(-total);
  }
  const std::size_t A = src.size(), B = snk.size();
  if (A == 0 || B == 0) return sol;
  // effective bounds min_k (bound_k + e_ik): shortest paths to the ground, so the
  // bipartite costs below form a metric and the transportation form is exact
  auto edge = [&](std::size_t i, std::size_t j) {
    return dist(lp.coords.data() + i * d, lp.coords.data() + j * d, d) / lp.scale;
  };
  std::vector<double> bound(lp.bound.begin(), lp.bound.end());
  for (std::size_t i = 0; i < N; ++i) {
    if (lp.coeff[i] == 0.0) continue;
    for (std::size_t k = 0; k < N; ++k) bound[i] = std::min(bound[i], lp.bound[k] + edge(i, k));
  }
  std::vector<double> cost(A * B);
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t i = src[a], j = snk[b];
      double c;
      if (i == N) {
        c = bound[j];
      } else if (j == N) {
        c = bound[i];
      } else {
        c = std::min(edge(i, j), bound[i] + bound[j]);
      }
      cost[a * B + b] = c;
    }
  const double eps = 1e-14 * scale_mass;
  std::vector<double> flow(A * B, 0.0);
  std::vector<double> pa(A, 0.0), pb(B, std::numeric_limits<double>::infinity());
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t b = 0; b < B; ++b) pb[b] = std::min(pb[b], cost[a * B + b]);
  auto rc = [&](std::size_t a, std::size_t b) { return cost[a * B + b] + pa[a] - pb[b]; };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> da(A), db(B);
  std::vector<char> va(A), vb(B);
  std::vector<long> prev_a(A), prev_b(B);
  for (;;) {
    bool any = false;
    for (std::size_t a = 0; a < A; ++a) {
      da[a] = supply[a] > eps ? 0.0 : inf;
      prev_a[a] = -1;
      va[a] = 0;
      any = any || supply[a] > eps;
    }
    if (!any) break;
    for (std::size_t b = 0; b < B; ++b) {
      db[b] = inf;
      prev_b[b] = -1;
      vb[b] = 0;
    }
    long target = -1;
    double D = inf;
    for (;;) {
      double best = inf;
      long bi = -1;
      bool is_a = false;
      for (std::size_t a = 0; a < A; ++a)
        if (!va[a] && da[a] < best) {
          best = da[a];
          bi = static_cast<long>(a);
          is_a = true;
        }
      for (std::size_t b = 0; b < B; ++b)
        if (!vb[b] && db[b] < best) {
          best = db[b];
          bi = static_cast<long>(b);
          is_a = false;
        }
      if (bi < 0) break;
      if (is_a) {
        const std::size_t a = static_cast<std::size_t>(bi);
        va[a] = 1;
        for (std::size_t b = 0; b < B; ++b) {
          if (vb[b]) continue;
          const double nd = da[a] + std::max(0.0, rc(a, b));
          if (nd < db[b]) {
            db[b] = nd;
            prev_b[b] = static_cast<long>(a);
          }
        }
      } else {
        const std::size_t b = static_cast<std::size_t>(bi);
        vb[b] = 1;
        if (demand[b] > eps) {
          target = bi;
          D = db[b];
          break;
        }
        for (std::size_t a = 0; a < A; ++a) {
          if (va[a] || !(flow[a * B + b] > 0.0)) continue;
          const double nd = db[b] + std::max(0.0, -rc(a, b));
          if (nd < da[a]) {
            da[a] = nd;
            prev_a[a] = static_cast<long>(b);
          }
        }
      }
    }
    if (target < 0) break;  // cannot happen for a balanced problem
    for (std::size_t a = 0; a < A; ++a) pa[a] += std::min(da[a], D);
    for (std::size_t b = 0; b < B; ++b) pb[b] += std::min(db[b], D);
    // bottleneck along the path
    double amount = demand[static_cast<std::size_t>(target)];
    std::size_t b = static_cast<std::size_t>(target);
    std::size_t start = 0;
    for (;;) {
      const std::size_t a = static_cast<std::size_t>(prev_b[b]);
      if (prev_a[a] < 0) {
        start = a;
        amount = std::min(amount, supply[a]);
        break;
      }
      const std::size_t b2 = static_cast<std::size_t>(prev_a[a]);
      amount = std::min(amount, flow[a * B + b2]);
      b = b2;
    }
    b = static_cast<std::size_t>(target);
    for (;;) {
      const std::size_t a = static_cast<std::size_t>(prev_b[b]);
      flow[a * B + b] += amount;
      if (prev_a[a] < 0) break;
      const std::size_t b2 = static_cast<std::size_t>(prev_a[a]);
      flow[a * B + b2] -= amount;
      if (flow[a * B + b2] < eps) flow[a * B + b2] = 0.0;
      b = b2;
    }
    supply[start] -= amount;
    demand[static_cast<std::size_t>(target)] -= amount;
    ++sol.iterations;
    if (sol.iterations > 50 * (A + B) + 1000) throw std::runtime_error("transport LP: no convergence");
  }
  CompensatedSum value;
  for (std::size_t k = 0; k < A * B; ++k)
    if (flow[k] > 0.0) value += flow[k] * cost[k];
  sol.value = value.value();
  return sol;
}

// ---------------------------------------------------------------- alpha

TransportLP alpha_inner_lp(const DiscreteMeasure& mu, const DyadicLattice& lat,
                           const DyadicCube& q, const AffinePlane& plane, double theta,
                           double lp_step) {
  const int d = mu.dim();
  const double l = side(q);
  const Vec xq = centre(lat, q);
  const double r3 = 3.0 * ball_radius(q, d);
  TransportLP lp;
  lp.dim = d;
  lp.scale = l;
  auto add = [&](const double* p, double c) {
    lp.coords.insert(lp.coords.end(), p, p + d);
    lp.coeff.push_back(c);
    lp.bound.push_back(std::max(0.0, (r3 - dist(p, xq.data(), d)) / l));
  };
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double v = phi_cube(lat, q, mu.point(i));
    if (v > 0.0) add(mu.point(i), mu.weight(i) * v);
  }
  const double cell = std::pow(lp_step, plane.n());
  for_plane_nodes(plane, xq, ball_radius(q, d), lp_step, [&](const double* p) {
    const double v = phi_cube(lat, q, p);
    if (v > 0.0) add(p, -theta * cell * v);
  });
  return lp;
}

InnerSup alpha_inner_sup(const DiscreteMeasure& mu, const DyadicLattice& lat, const DyadicCube& q,
                         const AffinePlane& plane, const AlphaOptions& opts) {
  const int d = mu.dim();
  const int n = plane.n();
  const double l = side(q);
  const double h = opts.quad_step_factor * l;
  const double hl = opts.lp_step_factor * l;
  const VarthetaResult vt = vartheta(mu, lat, q, plane, h);
  const VarthetaResult vt2 = vartheta(mu, lat, q, plane, 2.0 * h);
  const TransportLP lp = alpha_inner_lp(mu, lat, q, plane, vt.theta, hl);
  InnerSup out;
  out.theta = vt.theta;
  out.nodes = lp.coeff.size();
  out.lp_value = solve_transport_lp(lp).value;
  // cells of the LP grid that can meet supp(phi_Q)
  const Vec xq = centre(lat, q);
  const double half_diag = 0.5 * std::sqrt(static_cast<double>(n)) * hl;
  std::size_t cells = 0;
  for_plane_nodes(plane, xq, ball_radius(q, d) + half_diag, hl, [&](const double*) { ++cells; });
  const double h_mass = static_cast<double>(cells) * std::pow(hl, n);
  const double lip = (6.0 * bump_deriv_sup() + 1.0) / l;
  const double sup_f = 12.0 * std::sqrt(static_cast<double>(d));
  out.quad_error_bound = lip * vt.theta * h_mass * half_diag +
                         std::fabs(vt.theta - vt2.theta) * sup_f * vt.plane_mass;
  return out;
}

namespace {

// keep the foot of x_Q on the plane inside the open ball 1/4 B_Q
AffinePlane clamp_to_quarter_ball(AffinePlane plane, const Vec& xq, double radius) {
  const Vec foot = plane.project(xq.data());
  const Vec off = foot - xq;
  const double r = off.norm();
  const double lim = 0.999 * radius;
  if (r > lim) plane.base = xq + off * (lim / r);
  else plane.base = foot;
  return plane;
}

Mat orthonormalize(const Mat& m) {
  Eigen::HouseholderQR<Mat> qr(m);
  Mat q = qr.householderQ() * Mat::Identity(m.rows(), m.cols());
  return q;
}

}  // namespace

AlphaResult alpha_cube(const DiscreteMeasure& mu, const DyadicLattice& lat, const DyadicCube& q,
                       int n, const AlphaOptions& opts) {
  const int d = mu.dim();
  if (n < 1 || n >= d) throw DomainError("alpha_cube: plane dimension must lie in [1, d)");
  const double l = side(q);
  const Vec xq = centre(lat, q);
  const double quarter = std::sqrt(static_cast<double>(d)) * l;
  const BetaResult beta = beta_cube(mu, lat, q, n);
  const double mass = beta.normalizer;

  std::vector<AffinePlane> seeds;
  seeds.push_back(clamp_to_quarter_ball(beta.plane, xq, quarter));
  if (opts.plane_candidates >= 1) {
    AffinePlane through = beta.plane;
    through.base = xq;
    seeds.push_back(through);
  }
  Rng rng(opts.seed);
  for (int c = 1; c < opts.plane_candidates; ++c) {
    AffinePlane p = beta.plane;
    Mat g(d, n);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
    p.basis = orthonormalize(p.basis + 0.5 * g);
    seeds.push_back(clamp_to_quarter_ball(p, xq, quarter));
  }

  AffinePlane best_plane = seeds.front();
  InnerSup best = alpha_inner_sup(mu, lat, q, best_plane, opts);
  for (std::size_t s = 1; s < seeds.size(); ++s) {
    const InnerSup v = alpha_inner_sup(mu, lat, q, seeds[s], opts);
    if (v.lp_value + v.quad_error_bound < best.lp_value + best.quad_error_bound) {
      best = v;
      best_plane = seeds[s];
    }
  }
  double ang = 0.3, shift = 0.3 * quarter;
  int since_improve = 0;
  for (int it = 0; it < opts.refine_iters; ++it) {
    AffinePlane trial = best_plane;
    Mat g(d, n);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
    trial.basis = orthonormalize(best_plane.basis + ang * g);
    Vec dv(d);
    for (int j = 0; j < d; ++j) dv[j] = rng.normal();
    trial.base = best_plane.project(xq.data()) + shift * dv / std::max(1e-300, dv.norm());
    trial = clamp_to_quarter_ball(trial, xq, quarter);
    InnerSup v;
    try {
      v = alpha_inner_sup(mu, lat, q, trial, opts);
    } catch (const DomainError&) {
      ang *= 0.5;
      shift *= 0.5;
      ++since_improve;
      continue;
    }
    const double cur = best.lp_value + best.quad_error_bound;
    const double nxt = v.lp_value + v.quad_error_bound;
    if (nxt < cur) {
      since_improve = (cur - nxt > 0.01 * cur) ? 0 : since_improve + 1;
      best = v;
      best_plane = trial;
    } else {
      ang *= 0.5;
      shift *= 0.5;
      ++since_improve;
    }
  }

  AlphaResult out;
  out.plane = best_plane;
  out.theta = best.theta;
  out.quad_step = opts.quad_step_factor * l;
  out.lp_step = opts.lp_step_factor * l;
  out.lp_value = best.lp_value;
  out.quad_error_bound = best.quad_error_bound;
  out.upper = best.lp_value + best.quad_error_bound;
  out.mass = mass;
  out.nodes = best.nodes;
  out.search_converged = opts.refine_iters < 3 || since_improve >= 3;
  const double K = witness_lipschitz_constant(d);
  out.lower = beta.value * beta.value * mass / K;
  CompensatedSum w;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double v = phi_cube(lat, q, mu.point(i));
    if (v > 0.0) w += mu.weight(i) * v * best_plane.dist2(mu.point(i)) / (l * l);
  }
  out.witness_at_best = w.value() / K;
  return out;
}

}  // namespace mscale
