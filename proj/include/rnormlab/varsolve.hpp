#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rnormlab/nets.hpp"
#include "rnormlab/simplex.hpp"

namespace rnormlab {

struct Dataset;

struct DictionaryAtom {
  Eigen::VectorXd w;  // unit
  double b = 0.0;     // in [-sqrt(d), sqrt(d)]
};

struct DictionarySpec {
  bool data_diffs = false;
  int n_signed = 0;       // random signed hypercube directions (all when d<=12 and all_signed)
  bool all_signed = false;
  int n_random = 0;       // random unit directions
  std::vector<DictionaryAtom> injected;  // e.g. atoms of a construction net
  bool kink_at_data = true;              // biases -u.x_i per direction
  int bias_grid = 0;                     // optional uniform bias grid points
  int max_diffs = 200;
  uint64_t seed = 0;
};

std::vector<DictionaryAtom> build_dictionary(const Dataset& data, const DictionarySpec& spec);
std::vector<DictionaryAtom> atoms_of(const TwoLayerNet& net);

struct VPInstance {
  const Dataset* data = nullptr;
  double eps = 0.0;
  std::vector<DictionaryAtom> atoms;
  bool affine_free = true;
};

enum class VPStatus { Optimal, Infeasible, IterationLimit };

struct VPSolution {
  TwoLayerNet net;
  double objective = 0.0;
  VPStatus status = VPStatus::IterationLimit;
  int support_size = 0;
  double residual = 0.0;  // max over points of tube violation
  long iterations = 0;
};

VPSolution solve_vp(const VPInstance& inst, const LpOptions& opt = LpOptions());

struct ParityLowerBound {
  double value = 0.0;
  bool valid = false;  // false when d < 8 (theorem hypothesis)
};
ParityLowerBound parity_lower_bound(int d, double l2_err);

}  // namespace rnormlab
