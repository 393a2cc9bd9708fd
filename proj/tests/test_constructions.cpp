#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "rnormlab/constructions.hpp"
#include "rnormlab/harness.hpp"
#include "rnormlab/rng.hpp"

using namespace rnormlab;

TEST_CASE("parity_q") {
  CHECK(parity_q(2, 0) == doctest::Approx(0.5));
  CHECK(parity_q(4, 0) == doctest::Approx(0.375));
  CHECK(parity_q(12, 2) == doctest::Approx((792.0 + 924.0 + 792.0) / 4096.0));
  CHECK(parity_q(4, 4) == doctest::Approx(1.0));
  CHECK_THROWS(parity_q(5, 0));
  CHECK_THROWS(parity_q(4, 1));
  CHECK_THROWS(parity_q(4, 6));
}

TEST_CASE("parity_full_average fits exactly with the accounting R-norm") {
  for (int d : {2, 4, 6, 8}) {
    TwoLayerNet g = parity_full_average(d);
    Dataset data = gen_full_parity(d);
    CHECK(sup_error(g, data) <= 1e-9);
    double q = parity_q(d, 0);
    CHECK(rnorm(g) == doctest::Approx(4.0 * std::sqrt(double(d)) / q).epsilon(1e-9));
  }
  CHECK_THROWS(parity_full_average(3));
  CHECK_THROWS(parity_full_average(16));
}

TEST_CASE("parity_random_average t=d is exact for any k") {
  RandomAverageResult r = parity_random_average(4, 4, 0.25, 3, 99);
  CHECK(r.sup_error <= 1e-9);
  CHECK(r.k == 3);
  CHECK(sup_error(r.net, gen_full_parity(4)) <= 1e-9);
}

TEST_CASE("parity_random_average AUTO meets the target") {
  RandomAverageResult r = parity_random_average(8, 0, 0.25, 0, 4242);
  CHECK_FALSE(r.cap_exceeded);
  CHECK(r.sup_error <= 0.25);
  CHECK(r.width <= (1L << 20));
  CHECK(r.width == long(r.k) * 3);
  CHECK(r.q == doctest::Approx(parity_q(8, 0)));
  // the reported sup error is the exhaustive one
  Dataset data = gen_full_parity(8);
  CHECK(sup_error(r.net, data) == doctest::Approx(r.sup_error).epsilon(1e-9));
  // g / chi >= 0 on every cube point (count identity)
  Eigen::VectorXd g = eval_batch(r.net, data.X);
  for (Eigen::Index i = 0; i < g.size(); ++i) CHECK(g[i] * data.y[i] >= -1e-12);

  auto j = nlohmann::json::parse(r.report_json());
  CHECK(j["k"] == r.k);
  CHECK(j["checks"]["meets_eps"] == true);
  CHECK((j["regime"] == 1 || j["regime"] == 2));

  CHECK_THROWS(parity_random_average(8, 1, 0.25, 0, 1));
  CHECK_THROWS(parity_random_average(8, 0, 0.9, 0, 1));
}

TEST_CASE("parity_random_average is reproducible from the seed") {
  RandomAverageResult a = parity_random_average(6, 2, 0.25, 16, 7);
  RandomAverageResult b = parity_random_average(6, 2, 0.25, 16, 7);
  CHECK(a.sup_error == b.sup_error);
  REQUIRE(a.net.neurons.size() == b.net.neurons.size());
  for (size_t i = 0; i < a.net.neurons.size(); ++i) {
    CHECK(a.net.neurons[i].a == b.net.neurons[i].a);
    CHECK((a.net.neurons[i].w - b.net.neurons[i].w).norm() == 0.0);
  }
}

TEST_CASE("cap_construction on a small sample") {
  const int d = 32, n = 32;
  // c1 chosen so the group size floor(c1 d / ln d) is 2
  const double c1 = 2.5 * std::log(double(d)) / d;
  bool any_success = false;
  for (uint64_t seed : {11ULL, 12ULL, 13ULL, 14ULL, 15ULL}) {
    Dataset data = gen_sampled_parity(d, n, seed);
    int pos = 0;
    for (int i = 0; i < n; ++i) pos += data.y[i] > 0 ? 1 : 0;
    if (pos < 4 || n - pos < 4) continue;
    CapResult r = cap_construction(data, c1, seed);
    CHECK(r.min_group >= 2);
    CHECK(r.max_group <= 4);
    CHECK(r.rnorm > 0.0);
    if (r.success) {
      any_success = true;
      CHECK(sup_error(r.net, data) <= 1e-6);
      if (r.p2) {
        double m = double(r.groups);
        CHECK(r.rnorm <= 4.0 * std::sqrt(m * n / d) + 1e-9);
      }
      auto j = nlohmann::json::parse(r.report_json());
      CHECK(j["checks"]["interpolates"] == true);
    }
  }
  CHECK(any_success);

  Dataset badlab;
  badlab.d = 4;
  badlab.X = cube_points(4);
  badlab.y = Eigen::VectorXd::Constant(16, 0.5);
  CHECK_THROWS(cap_construction(badlab, 1.0, 1));
  CHECK_THROWS(cap_construction(gen_full_parity(4), 0.1, 1));  // group size < 1
}

TEST_CASE("periodic_average sigma/tau accounting") {
  const int d = 4;
  PeriodicRidgeTarget tgt;
  tgt.v = Eigen::VectorXd::Ones(d) / 2.0;
  tgt.rho = 8.0 / std::sqrt(double(d));  // = 4
  tgt.phi = [&](double z) { return std::cos(2.0 * M_PI * z / 4.0); };
  tgt.L = 2.0 * M_PI / 4.0;
  PeriodicResult r = periodic_average(tgt, 0.5, 2, 5);
  CHECK(r.sigma == doctest::Approx(std::sqrt(15.0)));
  double l6 = std::log(6.0 / 0.5);
  CHECK(r.tau == doctest::Approx(r.sigma * std::sqrt(2.0 * l6) + 2.0 * tgt.rho * l6 / 3.0));
}

TEST_CASE("periodic_average small run: identity, blades == net, target match") {
  const int d = 4;
  const double sd = 2.0;
  PeriodicRidgeTarget tgt;
  tgt.v = Eigen::VectorXd::Ones(d) / sd;
  tgt.rho = 4.0 / sd;  // q = 1: the target equals chi on the cube
  tgt.phi = [&](double z) { return std::cos(2.0 * M_PI * z / tgt.rho); };
  tgt.L = 2.0 * M_PI / tgt.rho;
  Dataset data = gen_cosine_dataset(d, 1.0);
  for (int i = 0; i < data.n(); ++i)
    CHECK(data.y[i] == doctest::Approx(parity_label_full(data.X.row(i))).epsilon(1e-12));

  PeriodicResult r = periodic_average(tgt, 0.4, 0, 31);
  CHECK(r.k == int(std::floor(9.0 * (d + 1) * std::log(2.0) / 0.4)) + 1);
  CHECK(r.intermediate_exactness <= 1e-6);
  CHECK(r.mass > 0.0);
  CHECK(r.max_blade_norm >= 1.0 - 1e-9);
  // blade-profile evaluation is the same function as the assembled net
  Eigen::VectorXd by_blades = periodic_eval(r, data.X);
  Eigen::VectorXd by_net = eval_batch(r.net, data.X);
  CHECK((by_blades - by_net).cwiseAbs().maxCoeff() <= 1e-9);
  // the reported sup error matches a direct computation against the target
  double worst = 0.0;
  for (int i = 0; i < data.n(); ++i) worst = std::max(worst, std::abs(by_net[i] - data.y[i]));
  CHECK(worst == doctest::Approx(r.sup_error).epsilon(1e-9));
  CHECK(r.sup_error <= 0.4);

  auto j = nlohmann::json::parse(r.report_json());
  CHECK(j["k"] == r.k);
  CHECK(j["checks"].contains("intermediate_exactness"));
}

TEST_CASE("periodic_average input validation") {
  PeriodicRidgeTarget tgt;
  tgt.v = Eigen::VectorXd::Ones(4);  // not unit
  tgt.rho = 1.0;
  tgt.phi = [](double) { return 0.0; };
  CHECK_THROWS(periodic_average(tgt, 0.3, 1, 1));
  tgt.v = Eigen::VectorXd::Ones(4) / 2.0;
  tgt.rho = 0.1;  // below |v|_inf
  CHECK_THROWS(periodic_average(tgt, 0.3, 1, 1));
  tgt.rho = 1.0;
  tgt.phi = [](double z) { return z / 10.0; };  // not periodic
  CHECK_THROWS(periodic_average(tgt, 0.3, 1, 1));
}
