#include "rnormlab/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rnormlab/harness.hpp"
#include "rnormlab/rng.hpp"
#include "rnormlab/simplex.hpp"

namespace rnormlab {

void PiecewiseLinearFn::validate() const {
  if (z.size() != val.size()) throw std::invalid_argument("pwl: size mismatch");
  for (size_t i = 1; i < z.size(); ++i)
    if (!(z[i] - z[i - 1] > 1e-12)) throw std::invalid_argument("pwl: knots not increasing");
}

double PiecewiseLinearFn::slope(int i) const {
  int last = int(z.size()) - 1;
  if (i < 0) return left_slope;
  if (i >= last) return right_slope;
  return (val[size_t(i + 1)] - val[size_t(i)]) / (z[size_t(i + 1)] - z[size_t(i)]);
}

double PiecewiseLinearFn::eval(double x) const {
  if (z.empty()) return 0.0;
  if (x <= z.front()) return val.front() + left_slope * (x - z.front());
  if (x >= z.back()) return val.back() + right_slope * (x - z.back());
  auto it = std::upper_bound(z.begin(), z.end(), x);
  size_t i = size_t(it - z.begin()) - 1;
  double t = (x - z[i]) / (z[i + 1] - z[i]);
  return val[i] + t * (val[i + 1] - val[i]);
}

double tv_prime(const PiecewiseLinearFn& p, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("tv_prime: empty domain");
  double s = 0.0;
  for (int i = 0; i < int(p.z.size()); ++i) {
    double zi = p.z[size_t(i)];
    if (zi <= lo || zi >= hi) continue;
    s += std::abs(p.slope(i) - p.slope(i - 1));
  }
  return s;
}

double ridge_rnorm(const RidgeFn& r) {
  double sd = std::sqrt(double(r.direction.size()));
  return tv_prime(r.profile, -sd, sd);
}

TwoLayerNet pwl_to_net(const RidgeFn& r) {
  int d = int(r.direction.size());
  if (std::abs(r.direction.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("pwl_to_net: direction not unit");
  TwoLayerNet net(d);
  if (r.profile.z.empty()) return net;
  // left tail: value + slope * z, then hinge corrections at each knot.
  // Knots beyond the bias range are absorbed/dropped exactly on Omega by
  // add_neuron.
  net.v = r.profile.left_slope * r.direction;
  net.c = r.profile.val.front() - r.profile.left_slope * r.profile.z.front();
  for (int i = 0; i < int(r.profile.z.size()); ++i) {
    double dslope = r.profile.slope(i) - r.profile.slope(i - 1);
    net.add_neuron(dslope, r.direction, -r.profile.z[size_t(i)]);
  }
  return net;
}

Sawtooth sawtooth(const Eigen::VectorXd& w, int t) {
  int d = int(w.size());
  for (int i = 0; i < d; ++i)
    if (std::abs(std::abs(w[i]) - 1.0) > 1e-12)
      throw std::invalid_argument("sawtooth: w must be in {+-1}^d");
  if (t < 0 || t > d || (t % 2) != (d % 2))
    throw std::invalid_argument("sawtooth: t must match parity of d, 0 <= t <= d");
  double chi_w = 1.0;
  for (int i = 0; i < d; ++i) chi_w *= w[i] > 0 ? 1.0 : -1.0;
  // sign chosen so that s(x) = chi(x) 1{|w.x| <= t} on the cube: a point with
  // w.x = t - 2 tau disagrees with w in (d-t)/2 + tau coordinates, so
  // chi(x) = chi(w) (-1)^{(d-t)/2} (-1)^tau while phi_t contributes (-1)^tau
  double sgn = chi_w * (((d - t) / 2) % 2 != 0 ? -1.0 : 1.0);
  double sd = std::sqrt(double(d));
  PiecewiseLinearFn p;
  p.z.push_back((-t - 1) / sd);
  p.val.push_back(0.0);
  for (int tau = t; tau >= 0; --tau) {  // abscissae t-2tau ascending
    p.z.push_back((t - 2 * tau) / sd);
    p.val.push_back(sgn * ((tau % 2 == 0) ? 1.0 : -1.0));
  }
  p.z.push_back((t + 1) / sd);
  p.val.push_back(0.0);
  Sawtooth s;
  s.ridge = RidgeFn{std::move(p), w / sd};
  s.net = pwl_to_net(s.ridge);
  return s;
}

PiecewiseLinearFn truncate_profile(const std::function<double(double)>& phi, double L, double t,
                                   double delta) {
  auto clip = [](double u) { return std::min(1.0, std::max(-1.0, u)); };
  // ceil(2tL/delta) grid points give spacing h with Lh/2 <= delta since
  // tL/delta >= 1; width stays within the ceil(2tL/delta) + 2 budget
  int npts = std::max(2, int(std::ceil(2.0 * t * L / delta)));
  PiecewiseLinearFn p;
  double fl = clip(phi(-t)), fr = clip(phi(t));
  if (std::abs(fl) > 1e-12) {
    p.z.push_back(-t - std::abs(fl) / L);
    p.val.push_back(0.0);
  }
  double h = 2.0 * t / (npts - 1);
  for (int i = 0; i < npts; ++i) {
    p.z.push_back(-t + h * i);
    p.val.push_back(clip(phi(-t + h * i)));
  }
  if (std::abs(fr) > 1e-12) {
    p.z.push_back(t + std::abs(fr) / L);
    p.val.push_back(0.0);
  }
  p.validate();
  return p;
}

TwoLayerNet truncate_lipschitz(const std::function<double(double)>& phi, double L, double t,
                               double delta, const Eigen::VectorXd& v) {
  int d = int(v.size());
  double sd = std::sqrt(double(d));
  if (L < 1.0 - 1e-12) throw std::invalid_argument("truncate_lipschitz: L must be >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("truncate_lipschitz: delta must be in (0,1)");
  if (t < 1.0 - 1e-12 || t > sd + 1e-12)
    throw std::invalid_argument("truncate_lipschitz: t outside [1, sqrt(d)]");
  PiecewiseLinearFn p = truncate_profile(phi, L, t, delta);
  bool all_zero = true;
  for (double u : p.val)
    if (std::abs(u) > 1e-12) all_zero = false;
  if (all_zero) return TwoLayerNet(d);
  return pwl_to_net(RidgeFn{std::move(p), v});
}

namespace {
struct MergedKnot {
  double z;
  double ylo, yhi;  // admissible value interval
};

// sort projections, merge coincident points; returns false when infeasible
bool merge_projected(const Dataset& data, const Eigen::VectorXd& u, double eps,
                     std::vector<MergedKnot>& out) {
  const int n = data.n();
  Eigen::VectorXd p = data.X * u;
  std::vector<int> idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) idx[size_t(i)] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (p[a] != p[b]) return p[a] < p[b];
    return data.y[a] < data.y[b];
  });
  out.clear();
  for (int ii = 0; ii < n;) {
    int jj = ii;
    double zlo = p[idx[size_t(ii)]];
    double ymin = data.y[idx[size_t(ii)]], ymax = ymin;
    while (jj + 1 < n && p[idx[size_t(jj + 1)]] - zlo <= 1e-9) {
      ++jj;
      ymin = std::min(ymin, data.y[idx[size_t(jj)]]);
      ymax = std::max(ymax, data.y[idx[size_t(jj)]]);
    }
    if (ymax - ymin > 2.0 * eps + 1e-12) return false;
    out.push_back(MergedKnot{zlo, ymax - eps, ymin + eps});
    ii = jj + 1;
  }
  return true;
}
}  // namespace

RidgeVpResult solve_ridge_vp(const Dataset& data, const Eigen::VectorXd& u, double eps) {
  if (eps < 0.0) throw std::invalid_argument("solve_ridge_vp: eps must be >= 0");
  if (std::abs(u.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("solve_ridge_vp: direction not unit");
  RidgeVpResult res;
  std::vector<MergedKnot> ks;
  if (!merge_projected(data, u, eps, ks)) return res;  // infeasible
  res.feasible = true;
  res.fn.direction = u;
  const int m = int(ks.size());
  if (m <= 2) {
    // an affine profile through (at most two) tube midpoints is free
    res.value = 0.0;
    for (const auto& k : ks) {
      res.fn.profile.z.push_back(k.z);
      res.fn.profile.val.push_back(0.5 * (k.ylo + k.yhi));
    }
    if (m == 2) {
      double s = (res.fn.profile.val[1] - res.fn.profile.val[0]) / (ks[1].z - ks[0].z);
      res.fn.profile.left_slope = res.fn.profile.right_slope = s;
    }
    return res;
  }
  if (eps == 0.0) {
    // connect-the-dots is optimal (mean value theorem on secant slopes)
    double total = 0.0, prev_s = 0.0;
    for (int i = 0; i + 1 < m; ++i) {
      double s = (ks[size_t(i + 1)].ylo - ks[size_t(i)].ylo) / (ks[size_t(i + 1)].z - ks[size_t(i)].z);
      if (i > 0) total += std::abs(s - prev_s);
      prev_s = s;
    }
    res.value = total;
    for (const auto& k : ks) {
      res.fn.profile.z.push_back(k.z);
      res.fn.profile.val.push_back(k.ylo);  // ylo == yhi == y here
    }
    res.fn.profile.left_slope = res.fn.profile.slope(0);
    res.fn.profile.right_slope = res.fn.profile.slope(m - 2);
    return res;
  }
  // eps > 0: LP with knots at projected data; upper bound on the ridge optimum
  // variables: g_0..g_{m-1} (values, bounded by the tube), t_0..t_{m-3} >= 0
  // rows: t_i -+ (s_{i+1} - s_i) >= 0 with s_i the local secant slopes
  int nv = m + (m - 2);
  int nr = 2 * (m - 2);
  DenseColumns A;
  A.A = Eigen::MatrixXd::Zero(nr, nv);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nv), cl(nv), cu(nv);
  Eigen::VectorXd rl = Eigen::VectorXd::Zero(nr),
                  ru = Eigen::VectorXd::Constant(nr, std::numeric_limits<double>::infinity());
  for (int i = 0; i < m; ++i) {
    cl[i] = ks[size_t(i)].ylo;
    cu[i] = ks[size_t(i)].yhi;
  }
  for (int i = 0; i < m - 2; ++i) {
    c[m + i] = 1.0;
    cl[m + i] = 0.0;
    cu[m + i] = std::numeric_limits<double>::infinity();
    double h0 = ks[size_t(i + 1)].z - ks[size_t(i)].z;
    double h1 = ks[size_t(i + 2)].z - ks[size_t(i + 1)].z;
    // D_i = (g_{i+2}-g_{i+1})/h1 - (g_{i+1}-g_i)/h0
    int r0 = 2 * i, r1 = 2 * i + 1;
    A.A(r0, m + i) = 1.0;  // t_i - D_i >= 0
    A.A(r0, i) += -1.0 / h0;
    A.A(r0, i + 1) += 1.0 / h0 + 1.0 / h1;
    A.A(r0, i + 2) += -1.0 / h1;
    A.A(r1, m + i) = 1.0;  // t_i + D_i >= 0
    A.A(r1, i) += 1.0 / h0;
    A.A(r1, i + 1) += -1.0 / h0 - 1.0 / h1;
    A.A(r1, i + 2) += 1.0 / h1;
  }
  LpResult lp = solve_bounded_lp(A, c, cl, cu, rl, ru);
  if (lp.status != LpStatus::Optimal) {
    res.feasible = false;
    return res;
  }
  res.value = lp.objective;
  res.upper_bound_only = true;
  for (int i = 0; i < m; ++i) {
    res.fn.profile.z.push_back(ks[size_t(i)].z);
    res.fn.profile.val.push_back(lp.x[i]);
  }
  res.fn.profile.left_slope = res.fn.profile.slope(0);
  res.fn.profile.right_slope = res.fn.profile.slope(m - 2);
  return res;
}

double ridge_direction_bound(const Eigen::VectorXd& w) {
  double nw = w.norm();
  if (nw < 1e-14) return std::numeric_limits<double>::infinity();
  Eigen::VectorXd u = w / nw;
  double d = double(w.size());
  for (int i = 0; i < int(w.size()); ++i)
    if (std::abs(u[i]) < 1e-12) return std::numeric_limits<double>::infinity();
  return d * d / (4.0 * u.lpNorm<1>());
}

RidgeSearchResult search_ridge_vp(const Dataset& data, double eps, const DirectionPoolSpec& pool,
                                  uint64_t seed) {
  int d = data.d;
  std::vector<Eigen::VectorXd> dirs;
  if (pool.signed_dirs) {
    if (d > 20) throw std::invalid_argument("search_ridge_vp: signed pool too large");
    double sd = std::sqrt(double(d));
    uint64_t half = uint64_t(1) << (d - 1);
    for (uint64_t bits = 0; bits < half; ++bits) {
      Eigen::VectorXd w(d);
      w[0] = 1.0;
      for (int i = 1; i < d; ++i) w[i] = (bits >> (i - 1)) & 1 ? 1.0 : -1.0;
      dirs.push_back(w / sd);
    }
  }
  for (const auto& e : pool.extra) {
    if (std::abs(e.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("search_ridge_vp: extra direction not unit");
    dirs.push_back(e);
  }
  if (pool.n_signed_random > 0) {
    Rng r = Rng(seed).sub(11);
    double sd = std::sqrt(double(d));
    for (int k = 0; k < pool.n_signed_random; ++k) {
      Eigen::VectorXd w(d);
      r.signs(w);
      dirs.push_back(w / sd);
    }
  }
  if (pool.data_diffs) {
    int added = 0;
    for (int i = 0; i < data.n() && added < pool.max_diffs; ++i) {
      for (int j = i + 1; j < data.n() && added < pool.max_diffs; ++j) {
        Eigen::VectorXd v = data.X.row(i) - data.X.row(j);
        double nv = v.norm();
        if (nv < 1e-9) continue;
        dirs.push_back(v / nv);
        ++added;
      }
    }
  }
  if (pool.n_random > 0) {
    Rng rng(seed);
    for (int r = 0; r < pool.n_random; ++r) {
      Eigen::VectorXd v(d);
      double nv = 0.0;
      do {
        for (int i = 0; i < d; ++i) v[i] = rng.normal();
        nv = v.norm();
      } while (nv < 1e-9);
      dirs.push_back(v / nv);
    }
  }
  if (dirs.empty()) throw std::invalid_argument("search_ridge_vp: empty pool");

  RidgeSearchResult out;
  out.value = std::numeric_limits<double>::infinity();
  for (int id = 0; id < int(dirs.size()); ++id) {
    RidgeVpResult r = solve_ridge_vp(data, dirs[size_t(id)], eps);
    RidgeSearchRow row;
    row.direction_id = id;
    row.feasible = r.feasible;
    row.value = r.feasible ? r.value : std::numeric_limits<double>::quiet_NaN();
    row.certificate_bound = ridge_direction_bound(dirs[size_t(id)]);
    out.table.push_back(row);
    if (r.feasible && r.value < out.value) {
      out.value = r.value;
      out.best = r.fn;
      out.any_feasible = true;
    }
  }
  if (!out.any_feasible) throw std::runtime_error("search_ridge_vp: all directions infeasible");
  return out;
}

}  // namespace rnormlab
