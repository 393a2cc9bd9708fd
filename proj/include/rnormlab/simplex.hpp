#pragma once
#include <Eigen/Dense>
#include <vector>

namespace rnormlab {

// Column oracle for min c.x s.t. rl <= Ax <= ru, cl <= x <= cu.
// Structural columns only; slacks are handled inside the solver.
struct LpColumns {
  virtual ~LpColumns() = default;
  virtual int ncols() const = 0;
  virtual void column(int j, Eigen::VectorXd& out) const = 0;
  // out[j] = A_j . lambda for every structural column j
  virtual void price(const Eigen::VectorXd& lambda, Eigen::VectorXd& out) const = 0;
};

struct DenseColumns final : LpColumns {
  Eigen::MatrixXd A;  // m x n
  int ncols() const override { return int(A.cols()); }
  void column(int j, Eigen::VectorXd& out) const override { out = A.col(j); }
  void price(const Eigen::VectorXd& lambda, Eigen::VectorXd& out) const override {
    out.noalias() = A.transpose() * lambda;
  }
};

enum class LpStatus { Optimal, Infeasible, IterationLimit, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::IterationLimit;
  double objective = 0.0;
  Eigen::VectorXd x;             // structural variables
  Eigen::VectorXd row_activity;  // Ax
  long iterations = 0;
};

struct LpOptions {
  long max_iterations = 400000;
  int refactor_every = 6000;  // refinement keeps the basis accurate between refactors
  double feas_tol = 1e-7;
  double dual_tol = 1e-7;
  double pivot_tol = 1e-9;
  // deterministic anti-degeneracy perturbations (0 disables): multiplicative
  // cost jitter and outward row-bound jitter, internal to the solver; the
  // reported objective and activities use the true data
  double cost_jitter = 1e-9;
  double row_bound_jitter = 1e-11;
};

// Bounded-variable revised simplex with explicit basis inverse, product-form
// updates, periodic refactorization, devex pricing, deterministic
// anti-degeneracy perturbations and a Bland fallback. Deterministic for
// fixed inputs.
LpResult solve_bounded_lp(const LpColumns& A, const Eigen::VectorXd& c,
                          const Eigen::VectorXd& col_lo, const Eigen::VectorXd& col_hi,
                          const Eigen::VectorXd& row_lo, const Eigen::VectorXd& row_hi,
                          const LpOptions& opt = LpOptions());

}  // namespace rnormlab
