#include "rnormlab/simplex.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace rnormlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VStat : unsigned char { Lower, Upper, Free, Basic };

// deterministic jitter: splitmix64 of the index mapped to (0,1)
double jit01(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return double((z ^ (z >> 31)) >> 11) * 0x1.0p-53;
}

struct Solver {
  const LpColumns& A;
  const Eigen::VectorXd& c;
  int n, m, N;
  Eigen::VectorXd lo, hi;    // size N (structural then slack)
  Eigen::VectorXd lo0, hi0;  // bounds before any stall perturbation
  bool perturbed = false;
  LpOptions opt;

  std::vector<VStat> stat;
  Eigen::VectorXd xval;    // size N
  std::vector<int> basis;  // size m
  Eigen::MatrixXd Binv, Bmat;  // Bmat mirrors the basis columns for refinement
  long pivots_since_refactor = 0;
  long iterations = 0;
  long bland_until = -1;
  long iter_cap = std::numeric_limits<long>::max();
  int tiny_step_streak = 0;

  Eigen::VectorXd colbuf, w, lambda, cB, red_struct;
  Eigen::VectorXd devex, rho, alpha_struct;  // devex reference weights + pivot row
  Eigen::VectorXd cpert;  // jittered phase-2 costs (degeneracy tie-break)

  Solver(const LpColumns& A_, const Eigen::VectorXd& c_, const Eigen::VectorXd& cl,
         const Eigen::VectorXd& cu, const Eigen::VectorXd& rl, const Eigen::VectorXd& ru,
         const LpOptions& o)
      : A(A_), c(c_), n(A_.ncols()), m(int(rl.size())), N(n + m), opt(o) {
    lo.resize(N);
    hi.resize(N);
    lo.head(n) = cl;
    hi.head(n) = cu;
    lo.tail(m) = rl;
    hi.tail(m) = ru;
    cpert = c;
    if (opt.cost_jitter > 0)
      for (int j = 0; j < n; ++j) cpert[j] *= 1.0 + opt.cost_jitter * jit01(uint64_t(j));
    if (opt.row_bound_jitter > 0)
      for (int i = 0; i < m; ++i) {
        int k = n + i;
        if (std::isfinite(lo[k]))
          lo[k] -= opt.row_bound_jitter * (1.0 + std::abs(lo[k])) * jit01(uint64_t(2 * i) + 7);
        if (std::isfinite(hi[k]))
          hi[k] += opt.row_bound_jitter * (1.0 + std::abs(hi[k])) * jit01(uint64_t(2 * i) + 8);
      }
    lo0 = lo;
    hi0 = hi;
    stat.assign(size_t(N), VStat::Lower);
    xval = Eigen::VectorXd::Zero(N);
    basis.resize(size_t(m));
    for (int i = 0; i < m; ++i) {
      basis[size_t(i)] = n + i;
      stat[size_t(n + i)] = VStat::Basic;
    }
    for (int j = 0; j < n; ++j) {
      bool lf = std::isfinite(lo[j]), uf = std::isfinite(hi[j]);
      if (lf && uf) {
        if (std::abs(lo[j]) <= std::abs(hi[j])) {
          stat[size_t(j)] = VStat::Lower;
          xval[j] = lo[j];
        } else {
          stat[size_t(j)] = VStat::Upper;
          xval[j] = hi[j];
        }
      } else if (lf) {
        stat[size_t(j)] = VStat::Lower;
        xval[j] = lo[j];
      } else if (uf) {
        stat[size_t(j)] = VStat::Upper;
        xval[j] = hi[j];
      } else {
        stat[size_t(j)] = VStat::Free;
        xval[j] = 0.0;
      }
    }
    Binv = -Eigen::MatrixXd::Identity(m, m);
    Bmat = -Eigen::MatrixXd::Identity(m, m);
    colbuf.resize(m);
    w.resize(m);
    lambda.resize(m);
    cB.resize(m);
    red_struct.resize(n);
    devex = Eigen::VectorXd::Ones(N);
    rho.resize(m);
    alpha_struct.resize(n);
    compute_xB();
  }

  void getcol(int j, Eigen::VectorXd& out) const {
    if (j < n) {
      A.column(j, out);
    } else {
      out.setZero();
      out[j - n] = -1.0;
    }
  }

  void compute_xB() {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < N; ++j) {
      if (stat[size_t(j)] == VStat::Basic || xval[j] == 0.0) continue;
      getcol(j, colbuf);
      r.noalias() += colbuf * xval[j];
    }
    Eigen::VectorXd xB = Binv * (-r);
    // two iterative-refinement sweeps rescue moderately ill-conditioned bases
    for (int sweep = 0; sweep < 2; ++sweep) {
      Eigen::VectorXd resid = -r - Bmat * xB;
      xB.noalias() += Binv * resid;
    }
    for (int i = 0; i < m; ++i) xval[basis[size_t(i)]] = xB[i];
  }

  // max residual of the basic solve, for detecting a poisoned basis
  double basic_residual() const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd cb(m);
    Eigen::VectorXd xB(m);
    for (int j = 0; j < N; ++j) {
      if (stat[size_t(j)] == VStat::Basic || xval[j] == 0.0) continue;
      const_cast<Solver*>(this)->getcol(j, const_cast<Eigen::VectorXd&>(colbuf));
      r.noalias() += colbuf * xval[j];
    }
    for (int i = 0; i < m; ++i) xB[i] = xval[basis[size_t(i)]];
    return (Bmat * xB + r).cwiseAbs().maxCoeff() / std::max(1.0, r.cwiseAbs().maxCoeff());
  }

  void refactor() {
    for (int i = 0; i < m; ++i) {
      getcol(basis[size_t(i)], colbuf);
      Bmat.col(i) = colbuf;
    }
    Binv = Bmat.partialPivLu().inverse();
    if (!Binv.allFinite() || Binv.cwiseAbs().maxCoeff() > 1e10) repair_basis(Bmat);
    pivots_since_refactor = 0;
    compute_xB();
    if (basic_residual() > 1e-8) {
      repair_basis(Bmat);
      compute_xB();
    }
  }

  // the basis drifted (near-)singular: keep a maximal independent column set
  // and fill the remaining slots with currently nonbasic slack columns
  void repair_basis(Eigen::MatrixXd& B) {
    for (int attempt = 0; attempt < 3; ++attempt) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
      qr.setThreshold(1e-8);
      int r = int(qr.rank());
      if (r == m && Binv.allFinite() && Binv.cwiseAbs().maxCoeff() <= 1e10) return;
      std::vector<char> keep(size_t(m), 0);
      for (int j = 0; j < r; ++j) keep[size_t(qr.colsPermutation().indices()[j])] = 1;
      std::vector<char> slack_basic(size_t(m), 0);
      for (int i = 0; i < m; ++i)
        if (basis[size_t(i)] >= n) slack_basic[size_t(basis[size_t(i)] - n)] = 1;
      int next_row = 0;
      for (int i = 0; i < m; ++i) {
        if (keep[size_t(i)]) continue;
        while (next_row < m && slack_basic[size_t(next_row)]) ++next_row;
        if (next_row >= m) break;
        int kout = basis[size_t(i)];
        if (std::isfinite(lo[kout])) { stat[size_t(kout)] = VStat::Lower; xval[kout] = lo[kout]; }
        else if (std::isfinite(hi[kout])) { stat[size_t(kout)] = VStat::Upper; xval[kout] = hi[kout]; }
        else { stat[size_t(kout)] = VStat::Free; xval[kout] = 0.0; }
        int snew = n + next_row;
        basis[size_t(i)] = snew;
        stat[size_t(snew)] = VStat::Basic;
        slack_basic[size_t(next_row)] = 1;
        getcol(snew, colbuf);
        B.col(i) = colbuf;
      }
      Binv = B.partialPivLu().inverse();
      if (Binv.allFinite() && Binv.cwiseAbs().maxCoeff() <= 1e10) return;
    }
  }

  // Degenerate stall escape: many equality rows are encoded as slacks with
  // ~1e-9-wide ranges, so phase 1 can grind through zero-length steps forever.
  // Shifting every finite bound outward by an independent ~scale amount turns
  // those steps into real progress; scale stays below feas_tol so restoring
  // the exact bounds afterwards leaves the point feasible within tolerance.
  void perturb_bounds(double scale) {
    for (int k = 0; k < N; ++k) {
      if (std::isfinite(lo0[k])) lo[k] = lo0[k] - scale * (0.5 + jit01(uint64_t(2 * k) + 101));
      if (std::isfinite(hi0[k])) hi[k] = hi0[k] + scale * (0.5 + jit01(uint64_t(2 * k) + 102));
    }
    perturbed = true;
    snap_nonbasic();
  }

  void restore_bounds() {
    lo = lo0;
    hi = hi0;
    perturbed = false;
    snap_nonbasic();
  }

  void snap_nonbasic() {
    for (int k = 0; k < N; ++k) {
      if (stat[size_t(k)] == VStat::Lower) xval[k] = lo[k];
      else if (stat[size_t(k)] == VStat::Upper) xval[k] = hi[k];
    }
    compute_xB();
  }

  // total bound violation beyond the feasibility tolerance; sub-tolerance
  // drift is invisible to phase-1 costing, so it must not count here either
  double infeasibility() const {
    double s = 0.0;
    for (int i = 0; i < m; ++i) {
      int k = basis[size_t(i)];
      if (xval[k] < lo[k] - opt.feas_tol) s += lo[k] - opt.feas_tol - xval[k];
      if (xval[k] > hi[k] + opt.feas_tol) s += xval[k] - hi[k] - opt.feas_tol;
    }
    return s;
  }

  // phase: 1 or 2. Returns true when the phase finished cleanly (no entering
  // candidate), false on iteration limit.
  bool run_phase(int phase, LpStatus& status_out) {
    const double ftol = opt.feas_tol, dtol = opt.dual_tol;
    devex.setOnes();  // fresh reference framework per phase
    std::vector<char> banned(size_t(N), 0);  // columns refused as pivots this pass
    bool any_banned = false;
    while (iterations < opt.max_iterations && iterations < iter_cap) {
      // numerical drift in phase 2 can silently leave the polytope; catch it
      // early and hand control back so the driver can repair feasibility
      if (phase == 2 && iterations % 256 == 0 && infeasibility() > 1e-3) {
        refactor();
        if (infeasibility() > 1e-3) return true;
      }
      if (phase == 1 && infeasibility() <= ftol) return true;
      // basic costs
      for (int i = 0; i < m; ++i) {
        int k = basis[size_t(i)];
        if (phase == 1) {
          cB[i] = (xval[k] > hi[k] + ftol) ? 1.0 : (xval[k] < lo[k] - ftol ? -1.0 : 0.0);
        } else {
          cB[i] = k < n ? cpert[k] : 0.0;
        }
      }
      lambda.noalias() = Binv.transpose() * cB;
      A.price(lambda, red_struct);
      // reduced cost of structural j: c_j - lambda.A_j ; slack i: lambda_i
      bool bland = iterations <= bland_until;
      int q = -1, sigma = 0;
      double best = 0.0;  // devex score; eligibility is still gated by dtol
      auto consider = [&](int j, double dj) {
        VStat s = stat[size_t(j)];
        if (s == VStat::Basic || banned[size_t(j)]) return;
        int sg = 0;
        if ((s == VStat::Lower || s == VStat::Free) && dj < -dtol) sg = 1;
        else if ((s == VStat::Upper || s == VStat::Free) && dj > dtol) sg = -1;
        if (sg == 0) return;
        if (bland) {
          if (q < 0) { q = j; sigma = sg; }
          return;
        }
        // devex: steepest-edge approximation dj^2 / weight
        double mag = dj * dj / devex[j];
        if (mag > best + 1e-15) { best = mag; q = j; sigma = sg; }
      };
      for (int j = 0; j < n; ++j) {
        double dj = (phase == 2 ? cpert[j] : 0.0) - red_struct[j];
        consider(j, dj);
        if (bland && q >= 0) break;
      }
      if (!(bland && q >= 0)) {
        for (int i = 0; i < m; ++i) {
          consider(n + i, lambda[i]);
          if (bland && q >= 0) break;
        }
      }
      if (q < 0) {
        if (phase == 1) return true;  // caller checks residual infeasibility
        status_out = LpStatus::Optimal;
        return true;
      }
      ++iterations;
      if (iterations % 2000 == 0 && getenv("LP_DEBUG")) {
        double ob = 0.0;
        for (int j = 0; j < n; ++j) ob += c[j] * xval[j];
        fprintf(stderr, "  it %ld phase %d infeas %.3e obj %.6f bland %d\n", iterations, phase,
                infeasibility(), ob, int(iterations <= bland_until));
      }
      getcol(q, colbuf);
      w.noalias() = Binv * colbuf;
      w.noalias() += Binv * (colbuf - Bmat * w);  // one refinement sweep

      // two-pass (Harris) ratio test: pass 1 finds the largest step the
      // ftol-relaxed bounds allow; pass 2 picks the largest |w_i| among
      // blockers within that step, trading a bounded bound violation for a
      // well-conditioned pivot
      double range_q = hi[q] - lo[q];  // inf when a bound is infinite
      auto strict_th = [&](int i, double relax, int& tgt) {
        double rate = -double(sigma) * w[i];
        if (std::abs(rate) <= opt.pivot_tol) return kInf;
        int k = basis[size_t(i)];
        double th = kInf;
        if (phase == 1 && xval[k] < lo[k] - ftol) {
          if (rate > 0.0) { th = (lo[k] + relax - xval[k]) / rate; tgt = 0; }
        } else if (phase == 1 && xval[k] > hi[k] + ftol) {
          if (rate < 0.0) { th = (xval[k] - hi[k] + relax) / (-rate); tgt = 1; }
        } else if (rate > 0.0) {
          if (std::isfinite(hi[k])) { th = (hi[k] + relax - xval[k]) / rate; tgt = 1; }
        } else {
          if (std::isfinite(lo[k])) { th = (xval[k] - lo[k] + relax) / (-rate); tgt = 0; }
        }
        return th;
      };
      double theta_rel = std::isfinite(range_q) ? range_q : kInf;
      auto relax_of = [&](int i) {
        int k = basis[size_t(i)];
        double range = hi[k] - lo[k];
        return std::isfinite(range) ? std::min(ftol, 0.25 * range) : ftol;
      };
      for (int i = 0; i < m; ++i) {
        int tgt = 0;
        double th = strict_th(i, relax_of(i), tgt);
        if (std::isfinite(th)) theta_rel = std::min(theta_rel, std::max(th, 0.0));
      }
      double theta = std::isfinite(range_q) ? range_q : kInf;
      int p = -1;
      double pbest = -1.0;  // |w[p]| of the chosen blocker
      int leave_to = 0;     // 0 lower, 1 upper
      for (int i = 0; i < m; ++i) {
        int tgt = 0;
        double th = strict_th(i, 0.0, tgt);
        if (!std::isfinite(th)) continue;
        if (th < 0.0) th = 0.0;  // drift guard
        if (th > theta_rel) continue;
        double aw = std::abs(w[i]);
        if (aw > pbest) {
          theta = th;
          p = i;
          pbest = aw;
          leave_to = tgt;
        }
      }
      if (!std::isfinite(theta)) {
        if (pivots_since_refactor > 0) {
          refactor();  // rule out a drifted inverse before declaring unbounded
          continue;
        }
        status_out = phase == 2 ? LpStatus::Unbounded : LpStatus::IterationLimit;
        return true;
      }
      if (theta <= 1e-11) {
        if (++tiny_step_streak > 60 && iterations > bland_until)
          bland_until = iterations + 2000;
      } else {
        tiny_step_streak = 0;
      }

      if (p < 0) {  // bound flip of entering variable
        double old = xval[q];
        xval[q] = sigma > 0 ? hi[q] : lo[q];
        double step = xval[q] - old;
        for (int i = 0; i < m; ++i) xval[basis[size_t(i)]] -= w[i] * step;
        stat[size_t(q)] = sigma > 0 ? VStat::Upper : VStat::Lower;
        continue;
      }
      if (theta > 1e8 && pivots_since_refactor > 0) {
        refactor();  // implausibly long step: recheck with a fresh inverse
        continue;
      }
      if (std::abs(w[p]) < 1e-9) {
        if (pivots_since_refactor > 0) {
          refactor();  // suspicious pivot, retry from fresh inverse
          continue;
        }
        // fresh inverse and still tiny: pivoting here would wreck the basis;
        // retry the pricing pass without this column
        banned[size_t(q)] = 1;
        any_banned = true;
        continue;
      }
      // devex weight update from the pivot row: alpha_j = (Binv row p) . A_j
      double aq = w[p];
      double gq = std::max(devex[q], 1.0);
      rho = Binv.row(p).transpose();
      A.price(rho, alpha_struct);
      double ratio_base = gq / (aq * aq);
      for (int j = 0; j < n; ++j) {
        if (stat[size_t(j)] == VStat::Basic || j == q) continue;
        double al = alpha_struct[j];
        if (al != 0.0) devex[j] = std::max(devex[j], al * al * ratio_base);
      }
      for (int i = 0; i < m; ++i) {
        int j = n + i;
        if (stat[size_t(j)] == VStat::Basic || j == q) continue;
        double al = -rho[i];
        if (al != 0.0) devex[j] = std::max(devex[j], al * al * ratio_base);
      }
      if (devex.maxCoeff() > 1e12) devex.setOnes();

      // pivot
      int kout = basis[size_t(p)];
      for (int i = 0; i < m; ++i)
        if (i != p) xval[basis[size_t(i)]] += -double(sigma) * w[i] * theta;
      xval[q] += double(sigma) * theta;
      xval[kout] = leave_to == 0 ? lo[kout] : hi[kout];
      stat[size_t(kout)] = leave_to == 0 ? VStat::Lower : VStat::Upper;
      basis[size_t(p)] = q;
      stat[size_t(q)] = VStat::Basic;
      Bmat.col(p) = colbuf;
      devex[kout] = std::max(ratio_base, 1.0);
      if (any_banned) {
        std::fill(banned.begin(), banned.end(), 0);
        any_banned = false;
      }
      double piv = w[p];
      Eigen::RowVectorXd prow = Binv.row(p) / piv;
      Eigen::VectorXd wc = w;
      wc[p] = 0.0;
      Binv.row(p) = prow;
      Binv.noalias() -= wc * prow;
      if (++pivots_since_refactor >= opt.refactor_every) refactor();
    }
    status_out = LpStatus::IterationLimit;
    return false;
  }
};
}  // namespace

LpResult solve_bounded_lp(const LpColumns& A, const Eigen::VectorXd& c,
                          const Eigen::VectorXd& col_lo, const Eigen::VectorXd& col_hi,
                          const Eigen::VectorXd& row_lo, const Eigen::VectorXd& row_hi,
                          const LpOptions& opt) {
  if (c.size() != A.ncols() || col_lo.size() != c.size() || col_hi.size() != c.size() ||
      row_lo.size() != row_hi.size())
    throw std::invalid_argument("solve_bounded_lp: inconsistent sizes");
  Solver s(A, c, col_lo, col_hi, row_lo, row_hi, opt);
  LpResult res;
  res.status = LpStatus::IterationLimit;

  // alternate budgeted phase-1 (feasibility) and phase-2 (optimality) runs,
  // re-verifying both against a freshly refactorized basis; accept optimality
  // only when a verification pass makes no pivots
  const double ftol10 = 10.0 * opt.feas_tol;
  const double stall_shift = 5e-8;  // outward bound shift used to escape stalls
  const long budget = 6000;
  int stall_infeas = 0, stuck_rounds = 0;
  while (true) {
    if (s.iterations >= opt.max_iterations) break;  // IterationLimit
    if (s.infeasibility() > ftol10) {
      double before = s.infeasibility();
      LpStatus st1 = LpStatus::IterationLimit;
      s.iter_cap = s.iterations + budget;
      bool clean = s.run_phase(1, st1);
      s.refactor();
      if (getenv("LP_DEBUG"))
        fprintf(stderr, "p1 iters %ld infeas %.3e\n", s.iterations, s.infeasibility());
      if (s.infeasibility() <= ftol10) {
        stall_infeas = 0;
        stuck_rounds = 0;
      } else if (s.infeasibility() >= before - std::max(opt.feas_tol, 1e-3 * before)) {
        // a whole budget of pivots bought (almost) nothing: degenerate stall
        if (!s.perturbed && ++stuck_rounds >= 1) {
          s.perturb_bounds(stall_shift);
          stuck_rounds = 0;
          continue;
        }
        if (clean && ++stall_infeas >= 3) {
          res.status = LpStatus::Infeasible;
          break;
        }
      }
      continue;
    }
    long it0 = s.iterations;
    LpStatus st2 = LpStatus::IterationLimit;
    s.iter_cap = s.iterations + budget;
    bool clean = s.run_phase(2, st2);
    if (getenv("LP_DEBUG"))
      fprintf(stderr, "p2 iters %ld st %d infeas %.3e\n", s.iterations, int(st2),
              s.infeasibility());
    if (!clean) {
      // repeated exhausted phase-2 budgets without optimality: same stall cure
      if (!s.perturbed && ++stuck_rounds >= 4) {
        s.perturb_bounds(stall_shift);
        stuck_rounds = 0;
      }
      continue;  // loop re-checks feasibility
    }
    if (st2 == LpStatus::Unbounded) {
      res.status = LpStatus::Unbounded;
      break;
    }
    if (st2 == LpStatus::Optimal) {
      s.refactor();
      if (s.infeasibility() > ftol10) continue;  // drift: repair, reoptimize
      if (s.perturbed) {
        // optimal for the shifted bounds; re-verify against the exact ones
        // (duals are unchanged, so this normally pivots little or not at all)
        s.restore_bounds();
        s.refactor();
        continue;
      }
      if (s.iterations == it0) {
        res.status = LpStatus::Optimal;
        break;
      }
    }
  }
  if (res.status != LpStatus::Optimal) {
    res.iterations = s.iterations;
    return res;
  }

  res.iterations = s.iterations;
  res.x = s.xval.head(A.ncols());
  res.objective = c.dot(res.x);
  Eigen::VectorXd act = Eigen::VectorXd::Zero(row_lo.size());
  Eigen::VectorXd col(row_lo.size());
  for (int j = 0; j < A.ncols(); ++j) {
    if (res.x[j] == 0.0) continue;
    A.column(j, col);
    act.noalias() += col * res.x[j];
  }
  res.row_activity = act;
  return res;
}

}  // namespace rnormlab
