#pragma once
#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "rnormlab/nets.hpp"

namespace rnormlab {

struct Dataset;  // harness.hpp

// Continuous piecewise-linear function: values at strictly increasing knots,
// affine tails with the given slopes.
struct PiecewiseLinearFn {
  std::vector<double> z;    // knot abscissae, strictly increasing
  std::vector<double> val;  // values at knots
  double left_slope = 0.0;
  double right_slope = 0.0;

  double eval(double x) const;
  // slope on segment i (between knots i and i+1); -1 = left tail, n-1 = right
  double slope(int i) const;
  void validate() const;  // throws on non-increasing knots
};

struct RidgeFn {
  PiecewiseLinearFn profile;
  Eigen::VectorXd direction;  // unit
};

double tv_prime(const PiecewiseLinearFn& p, double lo, double hi);
double ridge_rnorm(const RidgeFn& r);
TwoLayerNet pwl_to_net(const RidgeFn& r);

// s_{w,t}(x) = chi(x) 1{|w.x| <= t} on the cube, w in {+-1}^d, t == d mod 2
struct Sawtooth {
  RidgeFn ridge;
  TwoLayerNet net;
};
Sawtooth sawtooth(const Eigen::VectorXd& w, int t);

// profile of the truncation: uniform grid on [-t,t] plus linear ramps to zero
PiecewiseLinearFn truncate_profile(const std::function<double(double)>& phi, double L, double t,
                                   double delta);
// Truncated Lipschitz ridge approximator (profile phi on [-t,t], |phi|<=1,
// L-Lipschitz): ramp to zero at slope L outside the band, uniform knots.
TwoLayerNet truncate_lipschitz(const std::function<double(double)>& phi, double L,
                               double t, double delta, const Eigen::VectorXd& v);

struct RidgeVpResult {
  bool feasible = false;
  RidgeFn fn;
  double value = 0.0;
  bool upper_bound_only = false;  // eps > 0 knot restriction
};
RidgeVpResult solve_ridge_vp(const Dataset& data, const Eigen::VectorXd& u, double eps);

struct DirectionPoolSpec {
  bool signed_dirs = true;    // all 2^{d-1} sign patterns (d <= 12)
  int n_signed_random = 0;    // sampled signed directions (for d > 12)
  int n_random = 0;           // seeded random unit directions
  bool data_diffs = false;    // normalized pairwise differences (capped)
  int max_diffs = 1000;
  std::vector<Eigen::VectorXd> extra;  // explicit unit directions
};

struct RidgeSearchRow {
  int direction_id = 0;
  bool feasible = false;
  double value = 0.0;
  double certificate_bound = 0.0;
};

struct RidgeSearchResult {
  bool any_feasible = false;
  RidgeFn best;
  double value = 0.0;
  std::vector<RidgeSearchRow> table;
};
RidgeSearchResult search_ridge_vp(const Dataset& data, double eps,
                                  const DirectionPoolSpec& pool, uint64_t seed);

// d^2 / (4 |w|_1) for normalized w; +inf when some coordinate vanishes
double ridge_direction_bound(const Eigen::VectorXd& w);

}  // namespace rnormlab
