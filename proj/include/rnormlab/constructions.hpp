#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>

#include "rnormlab/nets.hpp"
#include "rnormlab/ridge.hpp"

namespace rnormlab {

struct Dataset;

// exact binomial-tail probability q used by the averaging constructions
double parity_q(int d, int t);

// g = (1/(q 2^d)) sum_w s_{w,0}; exact full-parity interpolant, R <= 4 sqrt(d)/q
TwoLayerNet parity_full_average(int d, int cap = 14);

struct RandomAverageResult {
  TwoLayerNet net;
  double q = 0.0;
  int k = 0;
  int T = 0;           // regime threshold from the tail bound
  int regime = 0;      // 1: small t, 2: large t
  long width = 0;
  double sup_error = 0.0;
  double rnorm_upper = 0.0;  // (2t+4) sqrt(d) / q accounting
  bool cap_exceeded = false;
  std::string report_json() const;
  uint64_t seed = 0;
  int d = 0, t = 0;
  double eps = 0.0;
};
// k = 0 requests AUTO (start at the theorem formula with C = 1, double until
// sup error <= eps or width would exceed 2^20 atoms)
RandomAverageResult parity_random_average(int d, int t, double eps, int k, uint64_t seed);

struct CapResult {
  TwoLayerNet net;
  int groups = 0;
  int min_group = 0, max_group = 0;
  bool p1 = false, p2 = false, p3 = false;
  int p1_violations = 0, p2_violations = 0, p3_violations = 0;
  bool interpolates = false;
  double rnorm = 0.0;  // 2 sum_j |w_j|
  int repair_rounds = 0;
  bool success = false;
  std::string report_json() const;
  uint64_t seed = 0;
  double c1 = 0.0;
};
CapResult cap_construction(const Dataset& data, double c1, uint64_t seed);

struct PeriodicRidgeTarget {
  Eigen::VectorXd v;  // unit
  double rho = 1.0;   // >= |v|_inf (theorem states rho <= 1; identity needs only the lower end)
  std::function<double(double)> phi;  // rho-periodic, into [-1,1]
  double L = 1.0;
};

struct PeriodicResult {
  TwoLayerNet net;
  std::vector<RidgeFn> blades;  // profile form of each averaged blade (weight 1/k)
  double sigma = 0.0, tau = 0.0;
  int k = 0;
  double sup_error = 0.0;
  double mass = 0.0;  // sum |a| of the averaged net
  double max_blade_norm = 0.0;
  double intermediate_exactness = 0.0;  // max |phi(u_j.x) - phi(v.x)| on samples
  std::string report_json() const;
  uint64_t seed = 0;
  double eps = 0.0;
};
// evaluates blades by ridge profiles (identical to the net on Omega)
Eigen::VectorXd periodic_eval(const PeriodicResult& res, const Eigen::MatrixXd& X);
PeriodicResult periodic_average(const PeriodicRidgeTarget& target, double eps, int k,
                                uint64_t seed);

}  // namespace rnormlab
