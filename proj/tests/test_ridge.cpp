#include <cmath>

#include "doctest.h"
#include "rnormlab/harness.hpp"
#include "rnormlab/ridge.hpp"
#include "rnormlab/rng.hpp"

using namespace rnormlab;

namespace {
PiecewiseLinearFn raw_sawtooth_profile(int t) {
  PiecewiseLinearFn p;
  p.z.push_back(-t - 1);
  p.val.push_back(0.0);
  for (int tau = t; tau >= 0; --tau) {
    p.z.push_back(t - 2 * tau);
    p.val.push_back(tau % 2 == 0 ? 1.0 : -1.0);
  }
  p.z.push_back(t + 1);
  p.val.push_back(0.0);
  return p;
}

Eigen::VectorXd omega_point(int d, Rng& rng) {
  Eigen::VectorXd x(d);
  double nx = 0.0;
  do {
    for (int i = 0; i < d; ++i) x[i] = rng.normal();
    nx = x.norm();
  } while (nx < 1e-12);
  return x * (std::sqrt(double(d)) * std::pow(rng.uniform(), 1.0 / d) / nx);
}

Dataset make_1d(std::initializer_list<std::pair<double, double>> pts) {
  Dataset ds;
  ds.d = 1;
  ds.X.resize(Eigen::Index(pts.size()), 1);
  ds.y.resize(Eigen::Index(pts.size()));
  int i = 0;
  for (auto& p : pts) {
    ds.X(i, 0) = p.first;
    ds.y[i] = p.second;
    ++i;
  }
  return ds;
}
}  // namespace

TEST_CASE("pwl eval and validate") {
  PiecewiseLinearFn p;
  p.z = {0.0, 1.0};
  p.val = {0.0, 1.0};
  p.left_slope = 0.0;
  p.right_slope = -1.0;
  p.validate();
  CHECK(p.eval(-2.0) == doctest::Approx(0.0));
  CHECK(p.eval(0.5) == doctest::Approx(0.5));
  CHECK(p.eval(2.0) == doctest::Approx(0.0));

  PiecewiseLinearFn bad;
  bad.z = {1.0, 1.0};
  bad.val = {0.0, 0.0};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("tv_prime examples") {
  // single hinge: slope 0 -> a
  PiecewiseLinearFn hinge;
  hinge.z = {0.0};
  hinge.val = {0.0};
  hinge.left_slope = 0.0;
  hinge.right_slope = -2.5;
  CHECK(tv_prime(hinge, -1.0, 1.0) == doctest::Approx(2.5));

  // triangular bump over [-1, 1]: changes (1, -2, 1)
  PiecewiseLinearFn tri;
  tri.z = {-1.0, 0.0, 1.0};
  tri.val = {0.0, 1.0, 0.0};
  CHECK(tv_prime(tri, -2.0, 2.0) == doctest::Approx(4.0));

  // raw phi_d (t = d = 4) over [-sqrt(d)-2, sqrt(d)+2] -- all knots inside
  CHECK(tv_prime(raw_sawtooth_profile(4), -6.0, 6.0) == doctest::Approx(12.0));

  // invariant under adding an affine function
  PiecewiseLinearFn tilted = tri;
  for (size_t i = 0; i < tilted.z.size(); ++i) tilted.val[i] += 3.0 * tilted.z[i] - 0.7;
  tilted.left_slope += 3.0;
  tilted.right_slope += 3.0;
  CHECK(tv_prime(tilted, -2.0, 2.0) == doctest::Approx(4.0));

  // knots outside the domain do not contribute
  CHECK(tv_prime(tri, -0.5, 0.5) == doctest::Approx(2.0));
  CHECK_THROWS(tv_prime(tri, 1.0, 1.0));
}

TEST_CASE("ridge_rnorm examples") {
  Sawtooth s0 = sawtooth(Eigen::VectorXd::Ones(4), 0);
  CHECK(ridge_rnorm(s0.ridge) == doctest::Approx(8.0));
  // t = d: the peak knots of phi_d land exactly on the domain boundary
  // +-sqrt(d) and the zero ramps lie outside, so only the d - 1 interior
  // knots contribute: 12 here, matching the connect-the-dots value of the
  // full parity dataset (the whole-line TV would be sqrt(d)(2d+4) = 24)
  Sawtooth sd = sawtooth(Eigen::VectorXd::Ones(4), 4);
  CHECK(ridge_rnorm(sd.ridge) == doctest::Approx(12.0));
  CHECK(tv_prime(sd.ridge.profile, -2.5 - 1e-9, 2.5 + 1e-9) == doctest::Approx(24.0));

  RidgeFn aff;
  aff.direction = Eigen::Vector2d(1.0, 0.0);
  aff.profile.z = {-1.0, 1.0};
  aff.profile.val = {0.0, 2.0};
  aff.profile.left_slope = aff.profile.right_slope = 1.0;
  CHECK(ridge_rnorm(aff) == doctest::Approx(0.0));
}

TEST_CASE("pwl_to_net: hinge, sawtooth coefficients, rnorm identity, pointwise") {
  PiecewiseLinearFn hinge;
  hinge.z = {0.25};
  hinge.val = {0.0};
  hinge.right_slope = 2.0;
  TwoLayerNet hnet = pwl_to_net(RidgeFn{hinge, Eigen::Vector2d(0.0, 1.0)});
  CHECK(hnet.neurons.size() == 1);
  CHECK(hnet.neurons[0].a == doctest::Approx(2.0));
  CHECK(hnet.neurons[0].b == doctest::Approx(-0.25));

  // s_{1,0} in d=2: three neurons with |a| = (sqrt2, 2 sqrt2, sqrt2); signs
  // follow from the cube identity (the peak at 1.x = 0 has chi = -1 in d=2)
  Sawtooth s = sawtooth(Eigen::Vector2d(1.0, 1.0), 0);
  REQUIRE(s.net.neurons.size() == 3);
  double r2 = std::sqrt(2.0);
  CHECK(std::abs(s.net.neurons[0].a) == doctest::Approx(r2));
  CHECK(std::abs(s.net.neurons[1].a) == doctest::Approx(2.0 * r2));
  CHECK(std::abs(s.net.neurons[2].a) == doctest::Approx(r2));
  CHECK(eval(s.net, Eigen::Vector2d(1.0, -1.0)) == doctest::Approx(-1.0));

  // rnorm(pwl_to_net(r)) == ridge_rnorm(r) on random profiles
  Rng rng(23);
  for (int rep = 0; rep < 100; ++rep) {
    int d = 2 + int(rng.below(5));
    double sd = std::sqrt(double(d));
    int m = 2 + int(rng.below(8));
    PiecewiseLinearFn p;
    double z = rng.uniform(-0.9 * sd, -0.3 * sd);
    for (int i = 0; i < m; ++i) {
      p.z.push_back(z);
      p.val.push_back(rng.uniform(-1.0, 1.0));
      z += rng.uniform(0.05, (1.8 * sd) / m);
    }
    p.left_slope = rng.uniform(-2.0, 2.0);
    p.right_slope = rng.uniform(-2.0, 2.0);
    Eigen::VectorXd u(d);
    for (int i = 0; i < d; ++i) u[i] = rng.normal();
    u.normalize();
    RidgeFn rf{p, u};
    TwoLayerNet net = pwl_to_net(rf);
    CHECK(rnorm(net) == doctest::Approx(ridge_rnorm(rf)).epsilon(1e-9));
    for (int sidx = 0; sidx < 20; ++sidx) {
      Eigen::VectorXd x = omega_point(d, rng);
      CHECK(eval(net, x) == doctest::Approx(p.eval(u.dot(x))).epsilon(1e-9));
    }
  }
}

TEST_CASE("sawtooth cube identity, exhaustive small d") {
  Rng rng(29);
  for (int d : {2, 4, 6}) {
    Eigen::MatrixXd X = cube_points(d);
    for (int t = d % 2; t <= d; t += 2) {
      for (int wrep = 0; wrep < 8; ++wrep) {
        Eigen::VectorXd w(d);
        uint64_t bits = rng.next();
        for (int i = 0; i < d; ++i) w[i] = (bits >> i) & 1 ? 1.0 : -1.0;
        Sawtooth s = sawtooth(w, t);
        CHECK(int(s.net.neurons.size()) <= t + 3);
        Eigen::VectorXd g = eval_batch(s.net, X);
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
          double want =
              std::abs(w.dot(X.row(i))) <= t ? parity_label_full(X.row(i)) : 0.0;
          CHECK(g[i] == doctest::Approx(want).epsilon(1e-10));
        }
      }
    }
  }
  CHECK_THROWS(sawtooth(Eigen::VectorXd::Ones(4), 1));
  CHECK_THROWS(sawtooth(Eigen::Vector2d(1.0, 0.5), 0));
}

TEST_CASE("sawtooth identity spot check d=12") {
  Rng rng(31);
  Eigen::VectorXd w(12);
  uint64_t bits = rng.next();
  for (int i = 0; i < 12; ++i) w[i] = (bits >> i) & 1 ? 1.0 : -1.0;
  Sawtooth s = sawtooth(w, 2);
  for (int rep = 0; rep < 300; ++rep) {
    Eigen::VectorXd x(12);
    uint64_t b2 = rng.next();
    for (int i = 0; i < 12; ++i) x[i] = (b2 >> i) & 1 ? 1.0 : -1.0;
    double want = std::abs(w.dot(x)) <= 2.0 ? parity_label_full(x) : 0.0;
    CHECK(eval(s.net, x) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("truncate_lipschitz properties") {
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(4);
  e1[0] = 1.0;

  TwoLayerNet zero = truncate_lipschitz([](double) { return 0.0; }, 1.0, 1.0, 0.1, e1);
  CHECK(zero.neurons.empty());
  CHECK(zero.v.norm() == 0.0);

  double L = 2.0 * M_PI, t = 1.0, delta = 0.1;
  auto phi = [](double z) { return std::cos(2.0 * M_PI * z); };
  TwoLayerNet net = truncate_lipschitz(phi, L, t, delta, e1);
  CHECK(int(net.neurons.size()) <= int(std::ceil(2.0 * t * L / delta)) + 2);
  double band_err = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double z = -t + 2.0 * t * i / 9999.0;
    Eigen::VectorXd x = z * e1;
    band_err = std::max(band_err, std::abs(eval(net, x) - phi(z)));
  }
  CHECK(band_err <= delta + 1e-9);
  // zero outside the widened band (property 4)
  CHECK(eval(net, (t + 1.0 / L + 0.5) * e1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eval(net, -(t + 1.0 / L + 0.5) * e1) == doctest::Approx(0.0).epsilon(1e-12));
  // R-norm within a small multiple of t L^2 / delta
  CHECK(rnorm(net) <= 4.0 * t * L * L / delta);

  CHECK_THROWS(truncate_lipschitz(phi, L, 0.5, delta, e1));
  CHECK_THROWS(truncate_lipschitz(phi, L, 5.0, delta, e1));
  CHECK_THROWS(truncate_lipschitz(phi, L, t, 1.5, e1));
  CHECK_THROWS(truncate_lipschitz(phi, 0.5, t, delta, e1));
}

TEST_CASE("solve_ridge_vp eps=0 oracle") {
  Eigen::VectorXd u1(1);
  u1[0] = 1.0;

  Dataset peak = make_1d({{0.0, 0.0}, {1.0, 1.0}, {-0.5, 0.5}});
  // sorted: (-0.5, 0.5), (0, 0), (1, 1): slopes (-1, 1) -> value 2
  RidgeVpResult r = solve_ridge_vp(peak, u1, 0.0);
  REQUIRE(r.feasible);
  CHECK(r.value == doctest::Approx(2.0));
  CHECK_FALSE(r.upper_bound_only);

  Dataset coll = make_1d({{-1.0, -2.0}, {0.0, 0.0}, {0.5, 1.0}});
  RidgeVpResult rc = solve_ridge_vp(coll, u1, 0.0);
  REQUIRE(rc.feasible);
  CHECK(rc.value == doctest::Approx(0.0));

  // coincident projections with conflicting labels: infeasible at eps = 0
  Dataset conf = make_1d({{0.5, 1.0}, {0.5, -1.0}, {-0.5, 0.0}});
  CHECK_FALSE(solve_ridge_vp(conf, u1, 0.0).feasible);
  // ...but feasible inside a wide enough tube
  CHECK(solve_ridge_vp(conf, u1, 1.0).feasible);

  Dataset parity4 = gen_full_parity(4);
  Eigen::VectorXd u = Eigen::VectorXd::Ones(4) / 2.0;
  RidgeVpResult rp = solve_ridge_vp(parity4, u, 0.0);
  REQUIRE(rp.feasible);
  CHECK(rp.value == doctest::Approx(12.0).epsilon(1e-9));

  CHECK_THROWS(solve_ridge_vp(parity4, Eigen::VectorXd::Ones(4), 0.0));
}

TEST_CASE("solve_ridge_vp eps>0 LP") {
  Eigen::VectorXd u1(1);
  u1[0] = 1.0;
  Dataset peak = make_1d({{0.0, 0.0}, {1.0, 1.0}, {2.0, 0.0}});
  // the line g = 1/2 sits inside the 1/2-tube of every point
  RidgeVpResult r = solve_ridge_vp(peak, u1, 0.5);
  REQUIRE(r.feasible);
  CHECK(r.value == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(r.upper_bound_only);

  // shrinking the tube interpolates between 0 and the exact value 2
  RidgeVpResult rq = solve_ridge_vp(peak, u1, 0.25);
  REQUIRE(rq.feasible);
  CHECK(rq.value == doctest::Approx(1.0).epsilon(1e-6));
  RidgeVpResult r0 = solve_ridge_vp(peak, u1, 0.0);
  CHECK(rq.value <= r0.value + 1e-9);
}

TEST_CASE("ridge_direction_bound") {
  Eigen::VectorXd u = Eigen::VectorXd::Ones(4) / 2.0;
  CHECK(ridge_direction_bound(u) == doctest::Approx(2.0));
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(4);
  e1[0] = 1.0;
  CHECK(std::isinf(ridge_direction_bound(e1)));
  Rng rng(37);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd w(4);
    for (int i = 0; i < 4; ++i) w[i] = rng.normal();
    w.normalize();
    CHECK(ridge_direction_bound(w) >= std::pow(4.0, 1.5) / 4.0 - 1e-9);
  }
}

TEST_CASE("search_ridge_vp") {
  Dataset parity4 = gen_full_parity(4);

  // singleton pool equals solve_ridge_vp on it
  DirectionPoolSpec single;
  single.signed_dirs = false;
  single.extra.push_back(Eigen::VectorXd::Ones(4) / 2.0);
  RidgeSearchResult rs1 = search_ridge_vp(parity4, 0.0, single, 1);
  CHECK(rs1.value == doctest::Approx(12.0).epsilon(1e-9));
  CHECK(rs1.table.size() == 1);

  // full signed pool, eps = 1/2: the paper-constant lower bound holds and the
  // search value never undercuts any certificate in the pool
  DirectionPoolSpec pool;
  RidgeSearchResult rs = search_ridge_vp(parity4, 0.5, pool, 1);
  double cert = 0.0;
  for (const auto& row : rs.table) {
    CHECK(row.value >= std::pow(4.0, 1.5) / (2.0 * std::sqrt(2.0)) - 1e-9);
    if (std::isfinite(row.certificate_bound)) cert = std::max(cert, row.certificate_bound);
  }
  CHECK(rs.value >= cert - 1e-9);

  // dataset generated by a ridge function whose direction is in the pool
  Eigen::VectorXd u = Eigen::VectorXd::Ones(4) / 2.0;
  Sawtooth gen = sawtooth(Eigen::VectorXd::Ones(4), 2);
  Dataset rd;
  rd.d = 4;
  rd.X = cube_points(4);
  rd.y = eval_batch(gen.net, rd.X);
  RidgeSearchResult rg = search_ridge_vp(rd, 0.0, pool, 1);
  CHECK(rg.value <= ridge_rnorm(gen.ridge) + 1e-9);

  DirectionPoolSpec empty;
  empty.signed_dirs = false;
  CHECK_THROWS(search_ridge_vp(parity4, 0.0, empty, 1));
}
