#include "rnormlab/varsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rnormlab/harness.hpp"
#include "rnormlab/rng.hpp"

namespace rnormlab {

std::vector<DictionaryAtom> atoms_of(const TwoLayerNet& net) {
  std::vector<DictionaryAtom> out;
  out.reserve(net.neurons.size());
  for (const auto& nr : net.neurons) out.push_back(DictionaryAtom{nr.w, nr.b});
  return out;
}

namespace {
bool atom_less(const DictionaryAtom& a, const DictionaryAtom& b) {
  for (Eigen::Index i = 0; i < a.w.size(); ++i)
    if (a.w[i] != b.w[i]) return a.w[i] < b.w[i];
  return a.b < b.b;
}
bool atom_close(const DictionaryAtom& a, const DictionaryAtom& b, double sd) {
  return (a.w - b.w).norm() + std::abs(a.b - b.b) / sd <= 1e-9;
}
}  // namespace

std::vector<DictionaryAtom> build_dictionary(const Dataset& data, const DictionarySpec& spec) {
  const int d = data.d;
  const double sd = std::sqrt(double(d));
  if (!spec.data_diffs && spec.n_signed == 0 && !spec.all_signed && spec.n_random == 0 &&
      spec.injected.empty())
    throw std::invalid_argument("build_dictionary: empty spec");

  std::vector<Eigen::VectorXd> dirs;
  Rng rng(spec.seed);
  if (spec.data_diffs) {
    Rng r = rng.sub(1);
    int tries = 0;
    while (int(dirs.size()) < spec.max_diffs && tries < 20 * spec.max_diffs) {
      ++tries;
      int i = int(r.below(uint64_t(data.n()))), j = int(r.below(uint64_t(data.n())));
      Eigen::VectorXd v = data.X.row(i) - data.X.row(j);
      double nv = v.norm();
      if (nv < 1e-9) continue;
      dirs.push_back(v / nv);
    }
  }
  if (spec.all_signed) {
    if (d > 12) throw std::invalid_argument("build_dictionary: all_signed needs d <= 12");
    // in d = 1 the half-space trick leaves a single direction; emit both signs
    uint64_t half = d == 1 ? 2 : uint64_t(1) << (d - 1);
    for (uint64_t bits = 0; bits < half; ++bits) {
      Eigen::VectorXd w(d);
      w[0] = (d == 1 && bits == 1) ? -1.0 : 1.0;
      for (int i = 1; i < d; ++i) w[i] = (bits >> (i - 1)) & 1 ? 1.0 : -1.0;
      dirs.push_back(w / sd);
    }
  } else if (spec.n_signed > 0) {
    Rng r = rng.sub(2);
    for (int k = 0; k < spec.n_signed; ++k) {
      Eigen::VectorXd w(d);
      r.signs(w);
      dirs.push_back(w / sd);
    }
  }
  if (spec.n_random > 0) {
    Rng r = rng.sub(3);
    for (int k = 0; k < spec.n_random; ++k) {
      Eigen::VectorXd v(d);
      double nv = 0.0;
      do {
        for (int i = 0; i < d; ++i) v[i] = r.normal();
        nv = v.norm();
      } while (nv < 1e-9);
      dirs.push_back(v / nv);
    }
  }

  std::vector<DictionaryAtom> atoms = spec.injected;
  for (const auto& u : dirs) {
    if (spec.kink_at_data) {
      Eigen::VectorXd p = data.X * u;
      std::vector<double> bs(p.data(), p.data() + p.size());
      std::sort(bs.begin(), bs.end());
      double prev = std::numeric_limits<double>::quiet_NaN();
      for (double pb : bs) {
        double b = -pb;
        if (std::abs(b) > sd + 1e-12) continue;
        if (!std::isnan(prev) && std::abs(-prev - b) <= 1e-9) continue;
        atoms.push_back(DictionaryAtom{u, b});
        prev = pb;
      }
    }
    for (int g = 0; g < spec.bias_grid; ++g) {
      double b = -sd + (2.0 * sd) * (g + 0.5) / spec.bias_grid;
      atoms.push_back(DictionaryAtom{u, b});
    }
  }
  // dedupe with the shared (w,b) tolerance
  std::sort(atoms.begin(), atoms.end(), atom_less);
  std::vector<DictionaryAtom> out;
  for (auto& a : atoms) {
    if (!out.empty() && atom_close(out.back(), a, sd)) continue;
    out.push_back(std::move(a));
  }
  return out;
}

namespace {
// structural columns: [ +atoms | -atoms | v_1..v_d, c ] (affine only when free)
struct VpColumns final : LpColumns {
  Eigen::MatrixXd Phi;   // n x M, row-scaled relu features
  Eigen::MatrixXd Xaff;  // n x (d+1), row-scaled, empty when affine disabled
  int M = 0, naff = 0;
  int ncols() const override { return 2 * M + naff; }
  void column(int j, Eigen::VectorXd& out) const override {
    if (j < M) out = Phi.col(j);
    else if (j < 2 * M) out = -Phi.col(j - M);
    else out = Xaff.col(j - 2 * M);
  }
  void price(const Eigen::VectorXd& lambda, Eigen::VectorXd& out) const override {
    out.resize(ncols());
    Eigen::VectorXd t = Phi.transpose() * lambda;
    out.head(M) = t;
    out.segment(M, M) = -t;
    if (naff > 0) out.tail(naff) = Xaff.transpose() * lambda;
  }
};
}  // namespace

VPSolution solve_vp(const VPInstance& inst, const LpOptions& opt) {
  if (!inst.data) throw std::invalid_argument("solve_vp: missing dataset");
  if (inst.atoms.empty()) throw std::invalid_argument("solve_vp: empty dictionary");
  const Dataset& data = *inst.data;
  const int n = data.n(), d = data.d, M = int(inst.atoms.size());
  const double tube = inst.eps + 1e-9;

  VpColumns cols;
  cols.M = M;
  cols.naff = inst.affine_free ? d + 1 : 0;
  cols.Phi.resize(n, M);
  for (int j = 0; j < M; ++j)
    cols.Phi.col(j) = ((data.X * inst.atoms[size_t(j)].w).array() + inst.atoms[size_t(j)].b)
                          .cwiseMax(0.0);
  Eigen::VectorXd scale(n), rl(n), ru(n);
  for (int i = 0; i < n; ++i) {
    scale[i] = std::max(1.0, std::abs(data.y[i]));
    rl[i] = (data.y[i] - tube) / scale[i];
    ru[i] = (data.y[i] + tube) / scale[i];
    cols.Phi.row(i) /= scale[i];
  }
  if (inst.affine_free) {
    cols.Xaff.resize(n, d + 1);
    cols.Xaff.leftCols(d) = data.X;
    cols.Xaff.col(d).setOnes();
    for (int i = 0; i < n; ++i) cols.Xaff.row(i) /= scale[i];
  }

  const double inf = std::numeric_limits<double>::infinity();
  int nv = cols.ncols();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nv), cl = Eigen::VectorXd::Zero(nv),
                  cu = Eigen::VectorXd::Constant(nv, inf);
  c.head(2 * M).setOnes();
  if (cols.naff > 0) cl.tail(cols.naff).setConstant(-inf);

  LpResult lp = solve_bounded_lp(cols, c, cl, cu, rl, ru, opt);
  VPSolution sol;
  sol.iterations = lp.iterations;
  sol.status = lp.status == LpStatus::Optimal      ? VPStatus::Optimal
               : lp.status == LpStatus::Infeasible ? VPStatus::Infeasible
                                                   : VPStatus::IterationLimit;
  if (sol.status != VPStatus::Optimal) return sol;  // lp.x is only filled at optimality

  sol.net = TwoLayerNet(d);
  for (int j = 0; j < M; ++j) {
    double a = lp.x[j] - lp.x[M + j];
    if (std::abs(a) < 1e-9) continue;
    sol.net.neurons.push_back(Neuron{a, inst.atoms[size_t(j)].w, inst.atoms[size_t(j)].b});
    sol.objective += std::abs(a);
    ++sol.support_size;
  }
  if (inst.affine_free) {
    sol.net.v = lp.x.segment(2 * M, d);
    sol.net.c = lp.x[2 * M + d];
  }
  Eigen::VectorXd g = eval_batch(sol.net, data.X);
  sol.residual = ((g - data.y).cwiseAbs().array() - inst.eps).cwiseMax(0.0).maxCoeff();
  return sol;
}

ParityLowerBound parity_lower_bound(int d, double l2_err) {
  if (l2_err < 0.0 || l2_err >= 1.0)
    throw std::invalid_argument("parity_lower_bound: l2_err in [0,1) required");
  ParityLowerBound out;
  if (d < 8) return out;  // bound not claimed below d = 8
  out.valid = true;
  out.value = (1.0 - l2_err) * double(d) / 8.0;
  return out;
}

}  // namespace rnormlab
