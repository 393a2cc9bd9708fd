#include "rnormlab/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "rnormlab/harness.hpp"
#include "rnormlab/rng.hpp"

namespace rnormlab {

namespace {
// exact binomial coefficients, d <= 62 fits in double exactly up to 2^53 for
// the sizes used here (d <= 20 in practice)
double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  long double r = 1.0L;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return double(r);
}
}  // namespace

double parity_q(int d, int t) {
  if (d % 2 != 0 || t % 2 != 0 || t < 0 || t > d)
    throw std::invalid_argument("parity_q: need even d, even t in [0,d]");
  long double s = 0.0L;
  for (int tau = -t / 2; tau <= t / 2; ++tau) s += (long double)binom(d, d / 2 + tau);
  return double(s / std::pow(2.0L, d));
}

TwoLayerNet parity_full_average(int d, int cap) {
  if (d % 2 != 0 || d < 2) throw std::invalid_argument("parity_full_average: d must be even >= 2");
  if (d > cap) throw std::invalid_argument("parity_full_average: d over cap");
  double q = parity_q(d, 0);
  double coef = 1.0 / (q * std::pow(2.0, d));
  TwoLayerNet net(d);
  uint64_t total = uint64_t(1) << d;
  Eigen::VectorXd w(d);
  for (uint64_t i = 0; i < total; ++i) {
    uint64_t g = i ^ (i >> 1);  // Gray order, matching cube_points
    for (int j = 0; j < d; ++j) w[j] = (g >> j) & 1 ? 1.0 : -1.0;
    Sawtooth s = sawtooth(w, 0);
    for (const auto& nr : s.net.neurons)
      net.neurons.push_back(Neuron{coef * nr.a, nr.w, nr.b});
    net.v += coef * s.net.v;
    net.c += coef * s.net.c;
  }
  return net;
}

RandomAverageResult parity_random_average(int d, int t, double eps, int k, uint64_t seed) {
  if (d % 2 != 0 || t % 2 != d % 2 || t < 0 || t > d)
    throw std::invalid_argument("parity_random_average: parity mismatch");
  if (!(eps > 0.0 && eps < 0.5))
    throw std::invalid_argument("parity_random_average: eps in (0, 1/2)");
  RandomAverageResult res;
  res.d = d;
  res.t = t;
  res.eps = eps;
  res.seed = seed;
  res.q = parity_q(d, t);
  res.T = 2 * int(std::ceil(std::sqrt(0.5 * d * std::log(8.0 / eps))));
  res.regime = t < res.T ? 1 : 2;
  bool auto_k = (k <= 0);
  if (auto_k) {
    double k0 = res.regime == 1
                    ? std::pow(double(d), 1.5) * std::sqrt(std::log(1.0 / eps)) /
                          (eps * eps * (t + 1))
                    : double(d) * d / (eps * double(t) * t);
    k = std::max(1, int(std::ceil(k0)));
  }
  const long width_cap = 1L << 20;
  const int atoms_per = t + 3;

  Rng rng(seed);
  std::vector<Eigen::VectorXd> ws;
  Eigen::MatrixXd X;  // cube, for exhaustive error (d <= 16)
  const bool exhaustive = d <= 16;
  Eigen::VectorXi count;
  int mc_n = 1000000;
  Eigen::MatrixXd Xmc;
  if (exhaustive) {
    X = cube_points(d);
    count = Eigen::VectorXi::Zero(X.rows());
  } else {
    Rng mc = rng.sub(999);
    Xmc.resize(mc_n, d);
    for (int i = 0; i < mc_n; ++i) {
      mc.signs(Xmc.row(i));
    }
    count = Eigen::VectorXi::Zero(mc_n);
  }
  const Eigen::MatrixXd& P = exhaustive ? X : Xmc;

  auto add_dirs = [&](int howmany) {
    Eigen::MatrixXd W(howmany, d);
    for (int r = 0; r < howmany; ++r) {
      Eigen::VectorXd w(d);
      rng.signs(w);
      ws.push_back(w);
      W.row(r) = w.transpose();
    }
    // on the cube s_{w,t}(x) = chi(x) 1{|w.x| <= t}; count active sawtooths
    Eigen::MatrixXd D = P * W.transpose();
    for (Eigen::Index i = 0; i < D.rows(); ++i)
      for (int r = 0; r < howmany; ++r)
        if (std::abs(D(i, r)) <= t + 0.5) ++count[i];
  };
  auto sup_err = [&]() {
    double kq = double(ws.size()) * res.q;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < count.size(); ++i)
      worst = std::max(worst, std::abs(double(count[i]) / kq - 1.0));
    return worst;
  };

  add_dirs(k);
  res.sup_error = sup_err();
  while (auto_k && res.sup_error > eps) {
    if (2L * long(ws.size()) * atoms_per > width_cap) {
      res.cap_exceeded = true;
      break;
    }
    add_dirs(int(ws.size()));
    res.sup_error = sup_err();
  }
  res.k = int(ws.size());
  res.width = long(ws.size()) * atoms_per;
  res.rnorm_upper = (2.0 * t + 4.0) * std::sqrt(double(d)) / res.q;

  double coef = 1.0 / (double(res.k) * res.q);
  res.net = TwoLayerNet(d);
  for (const auto& w : ws) {
    Sawtooth s = sawtooth(w, t);
    for (const auto& nr : s.net.neurons)
      res.net.neurons.push_back(Neuron{coef * nr.a, nr.w, nr.b});
    res.net.v += coef * s.net.v;
    res.net.c += coef * s.net.c;
  }
  return res;
}

std::string RandomAverageResult::report_json() const {
  nlohmann::json j;
  j["params"] = {{"d", d}, {"t", t}, {"eps", eps}};
  j["seed"] = seed;
  j["q"] = q;
  j["k"] = k;
  j["T"] = T;
  j["regime"] = regime;
  j["width"] = width;
  j["sup_error"] = sup_error;
  j["rnorm_upper"] = rnorm_upper;
  j["checks"] = {{"cap_exceeded", cap_exceeded}, {"meets_eps", sup_error <= eps}};
  return j.dump(2);
}

namespace {
struct Group {
  std::vector<int> idx;
  double z = 0.0;
  Eigen::VectorXd what;
  double norm = 0.0;
  bool rank_ok = true;
};

void fit_group(Group& g, const Dataset& data) {
  int s = int(g.idx.size()), d = data.d;
  Eigen::MatrixXd A(s, d);
  for (int r = 0; r < s; ++r) A.row(r) = data.X.row(g.idx[size_t(r)]);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  g.rank_ok = svd.singularValues().minCoeff() > 1e-8;
  // minimum-norm least squares: A^+ (z 1)
  g.what = svd.solve(Eigen::VectorXd::Constant(s, g.z));
  g.norm = g.what.norm();
}

std::vector<Group> make_groups(const std::vector<int>& pool, double z, int s, Rng& rng) {
  std::vector<int> ids = pool;
  for (int i = int(ids.size()) - 1; i > 0; --i)
    std::swap(ids[size_t(i)], ids[size_t(rng.below(uint64_t(i + 1)))]);
  std::vector<Group> gs;
  for (size_t at = 0; at < ids.size(); at += size_t(s)) {
    Group g;
    g.z = z;
    for (size_t j = at; j < std::min(ids.size(), at + size_t(s)); ++j) g.idx.push_back(ids[j]);
    gs.push_back(std::move(g));
  }
  // fold a short trailing group into its predecessor (size stays <= 2s)
  if (gs.size() >= 2 && int(gs.back().idx.size()) < s) {
    auto tail = gs.back().idx;
    gs.pop_back();
    for (int i : tail) gs.back().idx.push_back(i);
  }
  return gs;
}
}  // namespace

CapResult cap_construction(const Dataset& data, double c1, uint64_t seed) {
  const int d = data.d, n = data.n();
  CapResult res;
  res.seed = seed;
  res.c1 = c1;
  const double logd = std::log(double(d));
  const double s_lo = c1 * d / logd;
  if (s_lo < 1.0) throw std::invalid_argument("cap_construction: c1 d / ln d < 1");
  int s = int(std::floor(s_lo));
  std::vector<int> pos, neg;
  for (int i = 0; i < n; ++i) {
    if (std::abs(data.y[i] - 1.0) < 1e-9) pos.push_back(i);
    else if (std::abs(data.y[i] + 1.0) < 1e-9) neg.push_back(i);
    else throw std::invalid_argument("cap_construction: labels must be +-1");
  }
  if (int(pos.size()) < s || int(neg.size()) < s)
    throw std::invalid_argument("cap_construction: both labels must occur >= c1 d / ln d times");

  Rng rng(seed);
  std::vector<Group> gs;
  {
    auto gp = make_groups(pos, 1.0, s, rng);
    auto gn = make_groups(neg, -1.0, s, rng);
    gs.insert(gs.end(), gp.begin(), gp.end());
    gs.insert(gs.end(), gn.begin(), gn.end());
  }
  for (auto& g : gs) fit_group(g, data);

  const double act_thresh = 0.5;
  auto violating_groups = [&](std::vector<char>& bad) {
    // group membership of each point
    std::vector<int> owner(size_t(n), -1);
    for (int gi = 0; gi < int(gs.size()); ++gi)
      for (int i : gs[size_t(gi)].idx) owner[size_t(i)] = gi;
    bad.assign(gs.size(), 0);
    int nviol = 0;
    for (int gi = 0; gi < int(gs.size()); ++gi) {
      const Group& g = gs[size_t(gi)];
      Eigen::VectorXd act = data.X * g.what;
      for (int i = 0; i < n; ++i) {
        if (owner[size_t(i)] == gi) continue;
        if (g.z * act[i] > act_thresh) {
          bad[size_t(gi)] = 1;
          bad[size_t(owner[size_t(i)])] = 1;
          ++nviol;
        }
      }
      if (!g.rank_ok) bad[size_t(gi)] = 1;
    }
    return nviol;
  };

  std::vector<char> bad;
  int rounds = 0;
  while (violating_groups(bad) > 0 && rounds < 30) {
    ++rounds;
    // re-pair the members of violating groups, per label
    std::vector<int> rp, rn;
    std::vector<Group> keep;
    for (size_t gi = 0; gi < gs.size(); ++gi) {
      if (!bad[gi]) {
        keep.push_back(gs[gi]);
        continue;
      }
      auto& dst = gs[gi].z > 0 ? rp : rn;
      for (int i : gs[gi].idx) dst.push_back(i);
    }
    gs = std::move(keep);
    if (!rp.empty())
      for (auto& g : make_groups(rp, 1.0, s, rng)) { fit_group(g, data); gs.push_back(g); }
    if (!rn.empty())
      for (auto& g : make_groups(rn, -1.0, s, rng)) { fit_group(g, data); gs.push_back(g); }
  }
  res.repair_rounds = rounds;
  res.groups = int(gs.size());

  // property checks and net assembly
  res.p1 = res.p2 = res.p3 = true;
  res.min_group = n;
  res.max_group = 0;
  res.net = TwoLayerNet(d);
  double mass = 0.0;
  for (const auto& g : gs) {
    int sj = int(g.idx.size());
    res.min_group = std::min(res.min_group, sj);
    res.max_group = std::max(res.max_group, sj);
    for (int i : g.idx)
      if (std::abs(g.what.dot(data.X.row(i)) - g.z) > 1e-6) { res.p1 = false; ++res.p1_violations; }
    if (g.norm > 2.0 * std::sqrt(double(sj) / d) + 1e-12) { res.p2 = false; ++res.p2_violations; }
    mass += 2.0 * g.norm;
    // z relu(2 z w.x - 1) = 2 z |w| relu((z w/|w|).x - 1/(2|w|))
    res.net.add_neuron(2.0 * g.z * g.norm, g.z * g.what / g.norm, -1.0 / (2.0 * g.norm));
  }
  for (size_t gi = 0; gi < gs.size(); ++gi) {
    const Group& g = gs[gi];
    Eigen::VectorXd act = data.X * g.what;
    std::vector<char> mine(size_t(n), 0);
    for (int i : g.idx) mine[size_t(i)] = 1;
    double capv = 4.0 * g.norm * std::sqrt(logd);
    for (int i = 0; i < n; ++i)
      if (!mine[size_t(i)] && std::abs(act[i]) > capv + 1e-12) { res.p3 = false; ++res.p3_violations; }
  }
  res.rnorm = mass;
  Eigen::VectorXd pred = eval_batch(res.net, data.X);
  res.interpolates = (pred - data.y).cwiseAbs().maxCoeff() <= 1e-6;
  res.success = res.interpolates;
  return res;
}

std::string CapResult::report_json() const {
  nlohmann::json j;
  j["params"] = {{"c1", c1}, {"groups", groups}, {"min_group", min_group}, {"max_group", max_group}};
  j["seed"] = seed;
  j["rnorm_upper"] = rnorm;
  j["checks"] = {{"P1", p1}, {"P2", p2}, {"P3", p3}, {"P1_violations", p1_violations},
                 {"P2_violations", p2_violations}, {"P3_violations", p3_violations},
                 {"interpolates", interpolates}, {"repair_rounds", repair_rounds},
                 {"success", success}};
  return j.dump(2);
}

PeriodicResult periodic_average(const PeriodicRidgeTarget& target, double eps, int k,
                                uint64_t seed) {
  const int d = int(target.v.size());
  const double sd = std::sqrt(double(d));
  if (std::abs(target.v.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("periodic_average: v must be unit");
  if (target.rho < target.v.cwiseAbs().maxCoeff() - 1e-12)
    throw std::invalid_argument("periodic_average: rho < |v|_inf");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("periodic_average: eps in (0,1)");
  // assert rho-periodicity and |phi| <= 1 on a sample grid
  for (int i = 0; i < 64; ++i) {
    double z = -sd + 2.0 * sd * i / 63.0;
    if (std::abs(target.phi(z + target.rho) - target.phi(z)) > 1e-9)
      throw std::invalid_argument("periodic_average: phi not rho-periodic");
    if (std::abs(target.phi(z)) > 1.0 + 1e-9)
      throw std::invalid_argument("periodic_average: |phi| must be <= 1");
  }
  PeriodicResult res;
  res.seed = seed;
  res.eps = eps;
  res.sigma = std::sqrt(2.0 * target.rho * target.v.lpNorm<1>() - 1.0);
  double l6 = std::log(6.0 / eps);
  res.tau = res.sigma * std::sqrt(2.0 * l6) + 2.0 * target.rho * l6 / 3.0;
  if (k <= 0) k = int(std::floor(9.0 * (d + 1) * std::log(2.0) / eps)) + 1;
  res.k = k;

  Rng rng(seed);
  res.net = TwoLayerNet(d);
  double worst_exact = 0.0;
  Rng xr = rng.sub(7);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd u(d);
    double nu = 0.0;
    do {
      for (int i = 0; i < d; ++i) {
        double w = (std::abs(target.v[i]) > 1e-15 &&
                    rng.uniform() < std::abs(target.v[i]) / (2.0 * target.rho))
                       ? -2.0 * (target.v[i] > 0 ? 1.0 : -1.0)
                       : 0.0;
        u[i] = target.v[i] + target.rho * w;
      }
      nu = u.norm();
    } while (nu < 1e-9);
    res.max_blade_norm = std::max(res.max_blade_norm, nu);
    double tj = std::min(sd, std::max(1.0, res.tau / nu));
    auto blade_phi = [&target, nu](double z) { return target.phi(nu * z); };
    PiecewiseLinearFn prof = truncate_profile(blade_phi, target.L * nu, tj, eps / 3.0);
    RidgeFn rf{prof, u / nu};
    TwoLayerNet bn = pwl_to_net(rf);
    for (const auto& nr : bn.neurons)
      res.net.neurons.push_back(Neuron{nr.a / k, nr.w, nr.b});
    res.net.v += bn.v / k;
    res.net.c += bn.c / k;
    res.blades.push_back(std::move(rf));
    // intermediate exactness h_w = f on sampled cube points (periodicity)
    if (j < 16) {
      for (int rsmp = 0; rsmp < 64; ++rsmp) {
        Eigen::VectorXd x(d);
        xr.signs(x);
        worst_exact = std::max(worst_exact,
                               std::abs(target.phi(u.dot(x)) - target.phi(target.v.dot(x))));
      }
    }
  }
  res.intermediate_exactness = worst_exact;
  for (const auto& nr : res.net.neurons) res.mass += std::abs(nr.a);

  // exhaustive sup error via blade profiles (== net on Omega) for d <= 16
  if (d <= 16) {
    Eigen::MatrixXd X = cube_points(d);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(X.rows());
    for (const auto& b : res.blades) {
      Eigen::VectorXd z = X * b.direction;
      for (Eigen::Index i = 0; i < z.size(); ++i) g[i] += b.profile.eval(z[i]);
    }
    g /= double(k);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      worst = std::max(worst, std::abs(g[i] - target.phi(target.v.dot(X.row(i)))));
    res.sup_error = worst;
  }
  return res;
}

Eigen::VectorXd periodic_eval(const PeriodicResult& res, const Eigen::MatrixXd& X) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(X.rows());
  for (const auto& b : res.blades) {
    Eigen::VectorXd z = X * b.direction;
    for (Eigen::Index i = 0; i < z.size(); ++i) g[i] += b.profile.eval(z[i]);
  }
  return g / double(std::max<size_t>(1, res.blades.size()));
}

std::string PeriodicResult::report_json() const {
  nlohmann::json j;
  j["params"] = {{"eps", eps}};
  j["seed"] = seed;
  j["k"] = k;
  j["sigma"] = sigma;
  j["tau"] = tau;
  j["sup_error"] = sup_error;
  j["rnorm_upper"] = mass;
  j["max_blade_norm"] = max_blade_norm;
  j["checks"] = {{"intermediate_exactness", intermediate_exactness},
                 {"meets_eps", sup_error <= eps}};
  return j.dump(2);
}

}  // namespace rnormlab
