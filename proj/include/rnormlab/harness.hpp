#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rnormlab/nets.hpp"

namespace rnormlab {

struct Dataset {
  int d = 0;
  Eigen::MatrixXd X;  // n x d, rows are points, |x|_2 <= sqrt(d)
  Eigen::VectorXd y;
  std::string provenance;
  int n() const { return int(X.rows()); }
};

// all 2^d cube points in Gray-code order, labeled chi_S; the overloads
// without S use the full parity S = [d] (S = {} means the empty product)
Dataset gen_full_parity(int d);
Dataset gen_full_parity(int d, const std::vector<int>& S);
Dataset gen_sampled_parity(int d, int n, uint64_t seed);
Dataset gen_sampled_parity(int d, int n, const std::vector<int>& S, uint64_t seed);
// all cube points labeled cos((2 pi /(rho sqrt(d))) 1.x), rho = 4q/sqrt(d)
Dataset gen_cosine_dataset(int d, double q);

// Gray-code cube matrix (2^d x d entries +-1), shared enumeration order
Eigen::MatrixXd cube_points(int d);
double parity_label_full(const Eigen::VectorXd& x);
// literal chi_S: empty S is the empty product (identically 1)
double parity_label(const Eigen::VectorXd& x, const std::vector<int>& S);

double sup_error(const TwoLayerNet& net, const Dataset& target);
double l2_error(const TwoLayerNet& net, const Dataset& target);
double mse_clip(const TwoLayerNet& net, const Dataset& target);
// Monte Carlo variants over uniform cube points against a callable target
double sup_error_mc(const TwoLayerNet& net, const std::function<double(const Eigen::VectorXd&)>& f,
                    int d, int nsamples, uint64_t seed);
double l2_error_mc(const TwoLayerNet& net, const std::function<double(const Eigen::VectorXd&)>& f,
                   int d, int nsamples, uint64_t seed);

// exact <relu(w.x+b), chi> under uniform cube measure, exhaustive (d <= 14)
double neuron_parity_correlation(const Eigen::VectorXd& w, double b);

struct ExperimentRecord {
  std::string experiment;
  int d = -1;  // negative ints render as empty CSV fields
  long n = -1;
  int t = -1;
  double eps = nan_();
  double rho = nan_();
  uint64_t seed = 0;
  std::string method;
  double rnorm_upper = nan_();
  double lp_objective = nan_();
  double lower_bound = nan_();
  double sup_error = nan_();
  double l2_error = nan_();
  double mse_clip = nan_();
  double wall_time_ms = nan_();
  static double nan_();
};

extern const char* kCsvHeader;
std::string record_to_csv(const ExperimentRecord& r);
std::string records_to_csv(const std::vector<ExperimentRecord>& rs);

struct ExperimentResult {
  std::vector<ExperimentRecord> records;
  std::string csv;
};
// name in {scaling, generalization, correlation, v2check, periodic}
ExperimentResult run_experiment(const std::string& name, const std::string& config_json,
                                uint64_t seed);

std::string dataset_to_csv(const Dataset& ds);
Dataset dataset_from_csv(const std::string& text);

}  // namespace rnormlab
