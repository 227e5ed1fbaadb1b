// Copyright 2026 The qmetro Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Small dense semidefinite programming solver.
//
// Solves linear-matrix-inequality problems of the form
//
//     minimize    c . y
//     subject to  F0_b + sum_i y_i F_{i,b}  >= 0   for every block b
//                 E y = f
//
// with a primal-dual interior point method (HKM search direction,
// Mehrotra predictor-corrector, infeasible start). The coefficient matrices
// are sparse and real symmetric; complex Hermitian LMIs are passed in through
// the usual real embedding [[Re, -Im], [Im, Re]] (see HermitianLmi below).
//
// The iteration order is fixed, so results are bit-for-bit reproducible.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qmetro/numkernel.hpp"

namespace qmetro::sdp {

struct Entry {
  int block;
  int row;
  int col;
  double value;
};

struct LmiProblem {
  std::vector<int> block_sizes;
  std::vector<RMatrix> constant;           // F0, one dense block each
  std::vector<std::vector<Entry>> coeffs;  // F_i; symmetric, both triangles stored
  std::vector<double> cost;
  std::vector<std::vector<double>> eq_rows;  // rows of E, each of length num_variables()
  std::vector<double> eq_rhs;

  int add_block(int size) {
    block_sizes.push_back(size);
    constant.push_back(RMatrix::Zero(size, size));
    return static_cast<int>(block_sizes.size()) - 1;
  }

  int add_variable(double c = 0.0) {
    coeffs.emplace_back();
    cost.push_back(c);
    return static_cast<int>(coeffs.size()) - 1;
  }

  int num_variables() const { return static_cast<int>(coeffs.size()); }

  void add_equality(const std::vector<std::pair<int, double>> &terms, double rhs) {
    std::vector<double> row(coeffs.size(), 0.0);
    for (auto [var, v] : terms) row[var] += v;
    eq_rows.push_back(std::move(row));
    eq_rhs.push_back(rhs);
  }
};

struct Options {
  int max_iterations = 120;
  double feasibility_tol = 1e-9;
  double gap_tol = 1e-9;
  // A run that stalls is still accepted if every residual is below this.
  double accept_tol = 1e-7;
  double step_fraction = 0.97;
  // Give up after this many iterations without a new best residual.
  int stall_iterations = 8;
};

struct Solution {
  RVector y;
  std::vector<RMatrix> slack;  // F(y), per block
  std::vector<RMatrix> dual;   // Lagrange multiplier matrix, per block
  double objective = 0.0;      // c . y
  double dual_objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double relative_gap = 0.0;
  bool converged = false;

  double max_residual() const {
    return std::max({primal_residual, dual_residual, relative_gap});
  }
};

namespace detail {

using Blocks = std::vector<RMatrix>;

inline double block_dot(const Blocks &a, const Blocks &b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k].array() * b[k].array()).sum();
  return s;
}

inline double block_norm(const Blocks &a) { return std::sqrt(block_dot(a, a)); }

// Largest alpha with x + alpha dx still positive semidefinite (capped at 1e30).
inline double max_step(const Blocks &x, const Blocks &dx) {
  double alpha = 1e30;
  for (std::size_t k = 0; k < x.size(); ++k) {
    Eigen::LLT<RMatrix> llt(x[k]);
    if (llt.info() != Eigen::Success) return 0.0;
    RMatrix linv = llt.matrixL().solve(RMatrix::Identity(x[k].rows(), x[k].cols()));
    RMatrix scaled = linv * dx[k] * linv.transpose();
    scaled = 0.5 * (scaled + scaled.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<RMatrix> es(scaled, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()(0);
    if (lo < 0) alpha = std::min(alpha, -1.0 / lo);
  }
  return alpha;
}

}  // namespace detail

/// Primal-dual interior point solve. Never throws on non-convergence; the
/// caller inspects `converged` and the residuals.
inline Solution solve(const LmiProblem &prob, const Options &opt = {}) {
  using detail::Blocks;
  const int nb = static_cast<int>(prob.block_sizes.size());
  const int nv = prob.num_variables();
  const int ne = static_cast<int>(prob.eq_rows.size());

  // Internal form: max b.y  s.t.  S = C - sum y_i A_i >= 0 with A_i = -F_i,
  // C = F0, b = -c. Lagrange dual: min <C, X> + f.lambda  s.t.
  // <A_i, X> + (E^T lambda)_i = b_i, X >= 0.
  RVector b(nv);
  for (int i = 0; i < nv; ++i) b(i) = -prob.cost[i];
  RMatrix E(ne, nv);
  RVector f(ne);
  for (int r = 0; r < ne; ++r) {
    for (int i = 0; i < nv; ++i) E(r, i) = prob.eq_rows[r][i];
    f(r) = prob.eq_rhs[r];
  }

  // A_i entries grouped by block (sign flipped relative to F_i).
  std::vector<std::vector<std::vector<Entry>>> by_block(nv, std::vector<std::vector<Entry>>(nb));
  for (int i = 0; i < nv; ++i)
    for (const Entry &e : prob.coeffs[i])
      by_block[i][e.block].push_back({e.block, e.row, e.col, -e.value});

  auto apply_A = [&](const Blocks &y) {
    RVector out = RVector::Zero(nv);
    for (int i = 0; i < nv; ++i) {
      double s = 0.0;
      for (int k = 0; k < nb; ++k)
        for (const Entry &e : by_block[i][k]) s += e.value * y[k](e.col, e.row);
      out(i) = s;
    }
    return out;
  };
  auto apply_At = [&](const RVector &y) {
    Blocks out;
    for (int k = 0; k < nb; ++k) out.push_back(RMatrix::Zero(prob.block_sizes[k], prob.block_sizes[k]));
    for (int i = 0; i < nv; ++i) {
      if (y(i) == 0.0) continue;
      for (int k = 0; k < nb; ++k)
        for (const Entry &e : by_block[i][k]) out[k](e.row, e.col) += y(i) * e.value;
    }
    return out;
  };

  const Blocks &C = prob.constant;
  int n_total = 0;
  for (int s : prob.block_sizes) n_total += s;

  // CSDP-style starting point.
  double norm_c = detail::block_norm(C);
  double alpha0 = 0.0, beta0 = (1.0 + norm_c);
  for (int i = 0; i < nv; ++i) {
    double an = 0.0;
    for (const Entry &e : prob.coeffs[i]) an += e.value * e.value;
    an = std::sqrt(an);
    alpha0 = std::max(alpha0, (1.0 + std::abs(b(i))) / (1.0 + an));
    beta0 = std::max(beta0, 1.0 + an);
  }
  alpha0 *= n_total;
  beta0 /= std::sqrt(static_cast<double>(n_total));
  const double x0 = 10.0 * std::max(1.0, alpha0);
  const double s0 = 10.0 * std::max(1.0, beta0);

  Blocks X, S;
  for (int k = 0; k < nb; ++k) {
    X.push_back(x0 * RMatrix::Identity(prob.block_sizes[k], prob.block_sizes[k]));
    S.push_back(s0 * RMatrix::Identity(prob.block_sizes[k], prob.block_sizes[k]));
  }
  RVector y = RVector::Zero(nv);
  RVector lambda = RVector::Zero(ne);

  const double norm_b = b.norm();
  Solution sol;

  // Best iterate seen so far; near the optimum the Newton system becomes
  // ill-conditioned and later iterates can be worse.
  struct Snapshot {
    RVector y, lambda;
    Blocks X;
    double p = 0, d = 0, g = 0, worst = std::numeric_limits<double>::infinity();
    int iter = 0;
  } best;
  int since_best = 0;

  for (int iter = 0; iter <= opt.max_iterations; ++iter) {
    // Residuals.
    const RVector rp = b - apply_A(X) - E.transpose() * lambda;
    Blocks Rd = C;
    {
      const Blocks aty = apply_At(y);
      for (int k = 0; k < nb; ++k) Rd[k] -= S[k] + aty[k];
    }
    const RVector re = f - E * y;
    const double pobj = detail::block_dot(C, X) + f.dot(lambda);
    const double dobj = b.dot(y);
    const double mu = detail::block_dot(X, S) / n_total;

    sol.primal_residual = std::max(rp.norm() / (1.0 + norm_b), re.norm() / (1.0 + f.norm()));
    sol.dual_residual = detail::block_norm(Rd) / (1.0 + norm_c);
    sol.relative_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    sol.iterations = iter;
    if (sol.primal_residual < opt.feasibility_tol && sol.dual_residual < opt.feasibility_tol &&
        sol.relative_gap < opt.gap_tol) {
      sol.converged = true;
      break;
    }
    const double worst = sol.max_residual();
    if (!(worst >= 0.0)) break;  // NaN: numerical breakdown, fall back to the best iterate
    if (worst < best.worst) {
      best = {y, lambda, X, sol.primal_residual, sol.dual_residual, sol.relative_gap, worst, iter};
      since_best = 0;
    } else if (++since_best > opt.stall_iterations) {
      break;
    }
    if (iter == opt.max_iterations) break;

    // Schur complement M_ij = <A_i, X A_j S^-1>.
    Blocks Sinv;
    for (int k = 0; k < nb; ++k) {
      RMatrix inv = S[k].llt().solve(RMatrix::Identity(S[k].rows(), S[k].cols()));
      Sinv.push_back(0.5 * (inv + inv.transpose()));
    }
    RMatrix M = RMatrix::Zero(nv, nv);
    for (int i = 0; i < nv; ++i) {
      for (int j = i; j < nv; ++j) {
        double s = 0.0;
        for (int k = 0; k < nb; ++k) {
          const auto &ai = by_block[i][k];
          const auto &aj = by_block[j][k];
          if (ai.empty() || aj.empty()) continue;
          const RMatrix &xk = X[k];
          const RMatrix &sk = Sinv[k];
          for (const Entry &p : ai)
            for (const Entry &q : aj) s += p.value * q.value * xk(p.col, q.row) * sk(q.col, p.row);
        }
        M(i, j) = s;
        M(j, i) = s;
      }
    }
    RMatrix K = RMatrix::Zero(nv + ne, nv + ne);
    K.topLeftCorner(nv, nv) = M;
    K.topRightCorner(nv, ne) = E.transpose();
    K.bottomLeftCorner(ne, nv) = E;
    Eigen::PartialPivLU<RMatrix> kkt(K);

    // Solve for a direction given the complementarity target `target`
    // (the matrix T in  dX S + X dS = T).
    auto direction = [&](const Blocks &target, RVector &dy, RVector &dl, Blocks &dX, Blocks &dS) {
      Blocks G;  // T S^-1 - X Rd S^-1
      for (int k = 0; k < nb; ++k) G.push_back((target[k] - X[k] * Rd[k]) * Sinv[k]);
      RVector rhs(nv + ne);
      rhs.head(nv) = rp - apply_A(G);
      rhs.tail(ne) = re;
      RVector sol_vec = kkt.solve(rhs);
      for (int refine = 0; refine < 2; ++refine) sol_vec += kkt.solve(rhs - K * sol_vec);
      dy = sol_vec.head(nv);
      dl = sol_vec.tail(ne);
      const Blocks atdy = apply_At(dy);
      dS.clear();
      dX.clear();
      for (int k = 0; k < nb; ++k) {
        dS.push_back(Rd[k] - atdy[k]);
        RMatrix dx = G[k] + X[k] * atdy[k] * Sinv[k];
        dX.push_back(0.5 * (dx + dx.transpose()));
      }
    };

    // Predictor.
    Blocks target;
    for (int k = 0; k < nb; ++k) target.push_back(-X[k] * S[k]);
    RVector dy, dl;
    Blocks dX, dS;
    direction(target, dy, dl, dX, dS);
    double ap = std::min(1.0, opt.step_fraction * detail::max_step(X, dX));
    double ad = std::min(1.0, opt.step_fraction * detail::max_step(S, dS));
    double mu_aff = 0.0;
    for (int k = 0; k < nb; ++k)
      mu_aff += ((X[k] + ap * dX[k]).array() * (S[k] + ad * dS[k]).array()).sum();
    mu_aff /= n_total;
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

    // Corrector.
    for (int k = 0; k < nb; ++k)
      target[k] = sigma * mu * RMatrix::Identity(X[k].rows(), X[k].cols()) - X[k] * S[k] -
                  dX[k] * dS[k];
    direction(target, dy, dl, dX, dS);
    ap = std::min(1.0, opt.step_fraction * detail::max_step(X, dX));
    ad = std::min(1.0, opt.step_fraction * detail::max_step(S, dS));

    for (int k = 0; k < nb; ++k) {
      X[k] += ap * dX[k];
      X[k] = 0.5 * (X[k] + X[k].transpose()).eval();
      S[k] += ad * dS[k];
      S[k] = 0.5 * (S[k] + S[k].transpose()).eval();
    }
    lambda += ap * dl;
    y += ad * dy;
  }

  if (!sol.converged && best.worst < std::numeric_limits<double>::infinity()) {
    y = best.y;
    lambda = best.lambda;
    X = best.X;
    sol.primal_residual = best.p;
    sol.dual_residual = best.d;
    sol.relative_gap = best.g;
    sol.iterations = best.iter;
    sol.converged = best.worst < opt.accept_tol;
  }

  sol.y = y;
  sol.objective = -b.dot(y);
  sol.dual_objective = -(detail::block_dot(C, X) + f.dot(lambda));
  sol.dual = X;
  sol.slack.clear();
  for (int k = 0; k < nb; ++k) {
    RMatrix fk = C[k];
    for (int i = 0; i < nv; ++i)
      for (const Entry &e : by_block[i][k]) fk(e.row, e.col) -= y(i) * e.value;
    sol.slack.push_back(fk);
  }
  return sol;
}

/// Builds a complex Hermitian LMI and lowers it into LmiProblem blocks.
///
/// Hermitian matrix variables are parameterised by their d^2 real degrees of
/// freedom: diagonal entries first, then (re, im) of each upper-triangular
/// entry in row-major order.
class HermitianLmi {
 public:
  explicit HermitianLmi(LmiProblem &prob) : prob_(prob) {}

  struct Block {
    int id;
    int size;  // complex size
  };

  Block add_block(int complex_size) { return {prob_.add_block(2 * complex_size), complex_size}; }

  /// Adds z * E_var at complex position (r, c); the caller supplies both
  /// (r, c) and (c, r) for off-diagonal Hermitian contributions.
  void add_entry(int var, Block blk, int r, int c, cplx z) {
    const int n = blk.size;
    auto push = [&](int rr, int cc, double v) {
      if (v != 0.0) prob_.coeffs[var].push_back({blk.id, rr, cc, v});
    };
    push(r, c, z.real());
    push(r + n, c + n, z.real());
    push(r, c + n, -z.imag());
    push(r + n, c, z.imag());
  }

  void add_constant(Block blk, int r, int c, cplx z) {
    const int n = blk.size;
    RMatrix &m = prob_.constant[blk.id];
    m(r, c) += z.real();
    m(r + n, c + n) += z.real();
    m(r, c + n) += -z.imag();
    m(r + n, c) += z.imag();
  }

  /// Number of real parameters of a d x d Hermitian matrix.
  static int hermitian_params(int d) { return d * d; }

  /// The Hermitian basis element for parameter k.
  static CMatrix basis(int d, int k) {
    CMatrix m = CMatrix::Zero(d, d);
    if (k < d) {
      m(k, k) = 1.0;
      return m;
    }
    int idx = d;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) {
        if (idx == k) {
          m(p, q) = 1.0;
          m(q, p) = 1.0;
          return m;
        }
        if (idx + 1 == k) {
          m(p, q) = cplx(0, 1);
          m(q, p) = cplx(0, -1);
          return m;
        }
        idx += 2;
      }
    return m;
  }

  /// Coefficients g with Re Tr[A V] = g . params(V) for Hermitian V.
  static RVector trace_functional(const CMatrix &a) {
    const int d = static_cast<int>(a.rows());
    RVector g(d * d);
    for (int p = 0; p < d; ++p) g(p) = a(p, p).real();
    int idx = d;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) {
        g(idx) = 2.0 * a(q, p).real();
        g(idx + 1) = -2.0 * a(q, p).imag();
        idx += 2;
      }
    return g;
  }

  static CMatrix assemble(const RVector &y, const std::vector<int> &vars, int d) {
    CMatrix m = CMatrix::Zero(d, d);
    for (int k = 0; k < d * d; ++k) m += y(vars[k]) * basis(d, k);
    return m;
  }

  /// Allocates a d x d Hermitian variable; returns its parameter indices.
  std::vector<int> add_hermitian_variable(int d) {
    std::vector<int> vars;
    for (int k = 0; k < d * d; ++k) vars.push_back(prob_.add_variable());
    return vars;
  }

  /// Places the Hermitian variable at block offset (row0, col0); if the offsets
  /// differ its adjoint is mirrored at (col0, row0).
  void place(const std::vector<int> &vars, int d, Block blk, int row0, int col0) {
    for (int k = 0; k < d * d; ++k) {
      const CMatrix bk = basis(d, k);
      for (int a = 0; a < d; ++a)
        for (int c = 0; c < d; ++c) {
          if (bk(a, c) == cplx(0.0)) continue;
          add_entry(vars[k], blk, row0 + a, col0 + c, bk(a, c));
          if (row0 != col0) add_entry(vars[k], blk, col0 + c, row0 + a, std::conj(bk(a, c)));
        }
    }
  }

 private:
  LmiProblem &prob_;
};

}  // namespace qmetro::sdp
