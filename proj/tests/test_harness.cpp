#include <cmath>
#include <map>
#include <sstream>

#include "doctest.h"
#include "rnormlab/constructions.hpp"
#include "rnormlab/harness.hpp"
#include "rnormlab/rng.hpp"

using namespace rnormlab;

TEST_CASE("cube_points and parity labels") {
  Eigen::MatrixXd X = cube_points(2);
  CHECK(X.rows() == 4);
  // every corner appears exactly once
  int seen[4] = {0, 0, 0, 0};
  for (int i = 0; i < 4; ++i) {
    int code = (X(i, 0) > 0 ? 1 : 0) | (X(i, 1) > 0 ? 2 : 0);
    ++seen[code];
  }
  for (int s : seen) CHECK(s == 1);

  Dataset ds = gen_full_parity(2, {2});
  for (int i = 0; i < ds.n(); ++i) CHECK(ds.y[i] == doctest::Approx(ds.X(i, 1)));

  Dataset d1 = gen_full_parity(1, {1});
  REQUIRE(d1.n() == 2);
  for (int i = 0; i < 2; ++i) CHECK(d1.y[i] == doctest::Approx(d1.X(i, 0)));

  // S = {} is the empty product: all labels 1
  Dataset d3 = gen_full_parity(3, {});
  for (int i = 0; i < d3.n(); ++i) CHECK(d3.y[i] == 1.0);

  // default S = [d] is the full parity
  Dataset full = gen_full_parity(3);
  for (int i = 0; i < full.n(); ++i)
    CHECK(full.y[i] == doctest::Approx(parity_label_full(full.X.row(i))));

  CHECK_THROWS(gen_full_parity(21));
}

TEST_CASE("gen_sampled_parity") {
  Dataset e = gen_sampled_parity(4, 0, 1);
  CHECK(e.n() == 0);
  Dataset a = gen_sampled_parity(10, 256, 42);
  Dataset b = gen_sampled_parity(10, 256, 42);
  CHECK((a.X - b.X).norm() == 0.0);
  CHECK((a.y - b.y).norm() == 0.0);
  for (int i = 0; i < a.n(); ++i)
    CHECK(a.y[i] == doctest::Approx(parity_label_full(a.X.row(i))));
  Dataset big = gen_sampled_parity(10, 10000, 7);
  CHECK(std::abs(big.y.mean()) <= 0.05);
}

TEST_CASE("gen_cosine_dataset") {
  // q = 1 -> rho = 4/sqrt(d): labels equal chi
  Dataset c = gen_cosine_dataset(4, 1.0);
  for (int i = 0; i < c.n(); ++i) {
    CHECK(c.y[i] == doctest::Approx(parity_label_full(c.X.row(i))).epsilon(1e-12));
    if (c.X.row(i).sum() == 0.0) CHECK(c.y[i] == doctest::Approx(1.0));
  }
  // labels depend only on the level 1.x
  Dataset c2 = gen_cosine_dataset(4, 2.0);
  std::map<int, double> by_level;
  for (int i = 0; i < c2.n(); ++i) {
    int lv = int(std::lround(c2.X.row(i).sum()));
    if (by_level.count(lv)) CHECK(c2.y[i] == doctest::Approx(by_level[lv]));
    else by_level[lv] = c2.y[i];
  }
  CHECK_THROWS(gen_cosine_dataset(5, 1.0));
}

TEST_CASE("error metrics") {
  Dataset parity = gen_full_parity(4);
  TwoLayerNet zero(4);
  CHECK(sup_error(zero, parity) == doctest::Approx(1.0));
  CHECK(l2_error(zero, parity) == doctest::Approx(1.0));

  TwoLayerNet five(4);
  five.c = 5.0;
  CHECK(mse_clip(five, parity) == doctest::Approx(2.0));

  TwoLayerNet g = parity_full_average(4);
  CHECK(sup_error(g, parity) <= 1e-9);
  CHECK(l2_error(g, parity) <= 1e-9);
  CHECK(mse_clip(g, parity) <= 1e-12);

  // clipping never increases the MSE against labels in [-1, 1]
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    TwoLayerNet net(4);
    for (int j = 0; j < 10; ++j) {
      Eigen::VectorXd w(4);
      for (int i = 0; i < 4; ++i) w[i] = rng.normal();
      net.add_neuron(rng.uniform(-2.0, 2.0), w.normalized(), rng.uniform(-2.0, 2.0));
    }
    Eigen::VectorXd p = eval_batch(net, parity.X);
    double mse_plain = (p - parity.y).squaredNorm() / parity.n();
    CHECK(mse_clip(net, parity) <= mse_plain + 1e-12);
  }
}

TEST_CASE("MC metrics bounded by exhaustive metrics") {
  Dataset parity = gen_full_parity(8);
  TwoLayerNet g = parity_full_average(8);
  g.c += 0.125;  // introduce a constant error
  auto chi = [](const Eigen::VectorXd& x) { return parity_label_full(x); };
  double ex = sup_error(g, parity);
  CHECK(sup_error_mc(g, chi, 8, 2000, 5) <= ex + 1e-12);
  CHECK(std::abs(l2_error_mc(g, chi, 8, 2000, 5) - l2_error(g, parity)) <= 0.05);
}

TEST_CASE("neuron_parity_correlation") {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(8) / std::sqrt(8.0);
  CHECK(neuron_parity_correlation(w, -2.0 * std::sqrt(8.0)) == doctest::Approx(0.0));
  CHECK(neuron_parity_correlation(w, 0.0) ==
        doctest::Approx(-40.0 / (256.0 * std::sqrt(8.0))).epsilon(1e-12));
  Rng rng(9);
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::VectorXd v(8);
    for (int i = 0; i < 8; ++i) v[i] = rng.normal();
    v *= rng.uniform() / v.norm();
    double b = rng.uniform(-2.0 * std::sqrt(8.0), 2.0 * std::sqrt(8.0));
    CHECK(std::abs(neuron_parity_correlation(v, b)) <= 1.0 + 1e-12);
  }
}

TEST_CASE("experiment record CSV formatting") {
  ExperimentRecord r;
  r.experiment = "demo";
  r.d = 4;
  r.n = -1;  // empty field
  r.seed = 7;
  r.method = "m";
  r.rnorm_upper = 1.5;
  std::string line = record_to_csv(r);
  CHECK(line == "demo,4,,,,,7,m,1.5,,,,,,");
  std::string csv = records_to_csv({r});
  CHECK(csv.substr(0, std::string(kCsvHeader).size()) == kCsvHeader);
  CHECK(std::string(kCsvHeader) ==
        "experiment,d,n,t,eps,rho,seed,method,rnorm_upper,lp_objective,lower_bound,"
        "sup_error,l2_error,mse_clip,wall_time_ms");
}

TEST_CASE("dataset CSV round trip") {
  Dataset ds = gen_sampled_parity(3, 10, 21);
  Dataset back = dataset_from_csv(dataset_to_csv(ds));
  CHECK(back.d == 3);
  CHECK((back.X - ds.X).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((back.y - ds.y).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS(dataset_from_csv("x_1,y\n5.0,1.0\n"));  // outside Omega
  CHECK_THROWS(dataset_from_csv(""));
}

TEST_CASE("run_experiment dispatch and reproducibility") {
  std::string cfg = R"({"ds":[8],"samples":2000})";
  ExperimentResult a = run_experiment("correlation", cfg, 5);
  ExperimentResult b = run_experiment("correlation", cfg, 5);
  REQUIRE(a.records.size() == 1);
  CHECK(a.records[0].sup_error <= 1.0);
  CHECK(a.records[0].rnorm_upper == doctest::Approx(1.0));
  CHECK(a.records[0].sup_error == b.records[0].sup_error);
  CHECK_THROWS(run_experiment("nope", "", 1));

  ExperimentResult sc = run_experiment("scaling", R"({"ds":[4],"with_lp":false})", 3);
  REQUIRE(sc.records.size() == 3);
  CHECK(sc.records[0].method == "full_average");
  CHECK(sc.records[0].sup_error <= 1e-9);
  CHECK(sc.records[0].rnorm_upper == doctest::Approx(4.0 * 2.0 / 0.375).epsilon(1e-9));
  CHECK(sc.records[2].method == "ridge_best");
  CHECK(sc.records[2].rnorm_upper == doctest::Approx(12.0).epsilon(1e-9));
}
