#pragma once
#include <Eigen/Dense>
#include <string>
#include <vector>

namespace rnormlab {

enum class Regime { R, V2 };

struct Neuron {
  double a = 0.0;
  Eigen::VectorXd w;  // unit norm
  double b = 0.0;
};

// g(x) = sum_j a_j relu(w_j.x + b_j) + v.x + c
struct TwoLayerNet {
  int d = 0;
  Regime regime = Regime::R;
  std::vector<Neuron> neurons;
  Eigen::VectorXd v;
  double c = 0.0;

  explicit TwoLayerNet(int dim = 0, Regime r = Regime::R)
      : d(dim), regime(r), v(Eigen::VectorXd::Zero(dim)) {}

  // Normalizes w, absorbs b > bias_cap neurons into (v,c) (affine on Omega)
  // and drops b < -bias_cap ones (zero on Omega). Zero-coefficient and
  // zero-direction atoms are dropped.
  void add_neuron(double a, Eigen::VectorXd w, double b);

  double bias_cap() const;  // sqrt(d) in R regime, 2 sqrt(d) in V2
};

double eval(const TwoLayerNet& net, const Eigen::VectorXd& x);
// rows of X are points; deterministic fixed-block reduction
Eigen::VectorXd eval_batch(const TwoLayerNet& net, const Eigen::MatrixXd& X);

TwoLayerNet canonicalize(const TwoLayerNet& net);
double rnorm(const TwoLayerNet& net);

struct V2Conversion {
  double mass = 0.0;
  TwoLayerNet net;
};
// K: caller-supplied bound on sup_{|x|<=1} |g|
V2Conversion v2norm_upper(const TwoLayerNet& net, double K);

std::string serialize(const TwoLayerNet& net);
TwoLayerNet deserialize(const std::string& text);

}  // namespace rnormlab
