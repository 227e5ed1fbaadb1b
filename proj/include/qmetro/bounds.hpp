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

// Precision bounds for the two-angle probe: closed forms, SLD quantum Fisher
// information, and the Holevo and Nagaoka-Hayashi bounds as semidefinite
// programs.
//
// Bound values are weighted variance sums Tr[W Cov] for one measurement of the
// m-copy block. Multiply by m for the per-copy figure.

#include <bit>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmetro/numkernel.hpp"
#include "qmetro/probe.hpp"
#include "qmetro/sdp.hpp"

namespace qmetro {

enum class BoundKind { SLD, NagaokaHayashi, Holevo, ClosedForm };

inline std::string to_string(BoundKind k) {
  switch (k) {
    case BoundKind::SLD: return "SLD";
    case BoundKind::NagaokaHayashi: return "NagaokaHayashi";
    case BoundKind::Holevo: return "Holevo";
    case BoundKind::ClosedForm: return "ClosedForm";
  }
  return "?";
}

struct BoundResult {
  double value = 0.0;
  BoundKind kind = BoundKind::ClosedForm;
  int copies = 1;
  Mat2 weight = Mat2::Identity();
  // Attaining observables on the full 2^m space (direct route only).
  std::optional<std::pair<CMatrix, CMatrix>> observables;
  // Diagonal of the attaining covariance, per m-copy measurement.
  Eigen::Vector2d variances = Eigen::Vector2d::Zero();
  int iterations = 0;
  double residual = 0.0;
};

struct ClosedForms {
  double n1;
  double n2;
  double holevo;
  double sld_sum;
};

inline ClosedForms closed_form(double epsilon) {
  check_epsilon(epsilon);
  const double s = (1.0 - epsilon) * (1.0 - epsilon);
  return {4.0 / s, (4.0 - 2.0 * epsilon + epsilon * epsilon) / (2.0 * s), (4.0 - 2.0 * epsilon) / s,
          2.0 / s};
}

inline double lw_margin(double v_x, double v_y, double epsilon) {
  return (1.0 / v_x + 1.0 / v_y) - (1.0 - epsilon) * (1.0 - epsilon);
}

/// SLD quantum Fisher information at the reference point.
inline Mat2 qfi_matrix(const ModelDerivatives &d) {
  const HermitianEig e = herm_eig(d.state);
  const Eigen::Index n = e.eigenvalues.size();
  std::vector<CMatrix> sld;
  for (int i = 0; i < 2; ++i) {
    const CMatrix dr = e.eigenvectors.adjoint() * d.derivative(i) * e.eigenvectors;
    CMatrix l = CMatrix::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) {
        const double s = e.eigenvalues(a) + e.eigenvalues(b);
        if (s > 1e-12) {
          l(a, b) = 2.0 * dr(a, b) / s;
        } else if (std::abs(dr(a, b)) > 1e-9) {
          throw Error(ErrorKind::SingularState, "derivative has support on the kernel of rho");
        }
      }
    sld.push_back(l);
  }
  Mat2 f;
  const CMatrix rho_diag = e.eigenvalues.cast<cplx>().asDiagonal();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) f(i, j) = re_trace_prod(rho_diag, sld[i] * sld[j]);
  return 0.5 * (f + f.transpose());
}

inline Mat2 qfi_matrix(const ProbeModel &model) { return qfi_matrix(derivatives_at_origin(model)); }

inline BoundResult sld_bound(const ProbeModel &model, const Mat2 &weight) {
  const Mat2 f = qfi_matrix(model);
  BoundResult r;
  r.kind = BoundKind::SLD;
  r.copies = model.copies;
  r.weight = weight;
  const Mat2 finv = f.inverse();
  r.value = (weight * finv).trace();
  r.variances = finv.diagonal();
  return r;
}

// ---------------------------------------------------------------------------
// Permutation-symmetric reduction.
//
// rho^{(x)m} and its derivatives commute with qubit permutations, so every
// operator in these SDPs may be taken block diagonal over the collective-spin
// sectors J = m/2, m/2 - 1, ..., each block repeated mult_J times.

struct SpinSector {
  int dim;          // 2J + 1
  int multiplicity;
  CMatrix isometry;  // 2^m x dim, one copy of the sector
};

inline std::vector<SpinSector> spin_sectors(int m) {
  check_copies(m);
  const Eigen::Index d = Eigen::Index{1} << m;
  // Collective raising operator; qubit 0 is the most significant bit and
  // |0> carries +1/2, so raising maps |1> -> |0>.
  CMatrix jp = CMatrix::Zero(d, d);
  CMatrix jm = CMatrix::Zero(d, d);
  for (Eigen::Index s = 0; s < d; ++s)
    for (int q = 0; q < m; ++q) {
      const Eigen::Index bit = Eigen::Index{1} << (m - 1 - q);
      if (s & bit) jp(s ^ bit, s) += 1.0;
      else jm(s ^ bit, s) += 1.0;
    }
  auto weight_of = [](Eigen::Index s) { return std::popcount(static_cast<unsigned long long>(s)); };

  std::vector<SpinSector> out;
  for (int ones = 0; 2 * ones <= m; ++ones) {
    // Highest weight vectors have `ones` excitations: J = m/2 - ones.
    std::vector<Eigen::Index> basis;
    for (Eigen::Index s = 0; s < d; ++s)
      if (weight_of(s) == ones) basis.push_back(s);
    CMatrix restricted = CMatrix::Zero(d, static_cast<Eigen::Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k) restricted.col(k) = jp.col(basis[k]);
    // Kernel of J+ restricted to this weight space.
    const HermitianEig e = herm_eig(hermitian_part(restricted.adjoint() * restricted));
    int mult = 0;
    for (Eigen::Index k = 0; k < e.eigenvalues.size(); ++k)
      if (e.eigenvalues(k) < 1e-9) ++mult;
    if (mult == 0) continue;
    CVector hw = CVector::Zero(d);
    for (std::size_t k = 0; k < basis.size(); ++k) hw(basis[k]) = e.eigenvectors(k, 0);
    const int dim = m - 2 * ones + 1;
    CMatrix iso(d, dim);
    iso.col(0) = hw / hw.norm();
    for (int k = 1; k < dim; ++k) {
      CVector next = jm * iso.col(k - 1);
      iso.col(k) = next / next.norm();
    }
    out.push_back({dim, mult, iso});
  }
  return out;
}

enum class BoundRoute { Auto, Direct, Symmetric };

struct BoundOptions {
  BoundRoute route = BoundRoute::Auto;
  sdp::Options solver{};
  // Above this many copies the Auto route switches to the symmetric reduction.
  int direct_max_copies = 3;
  // Optional spectrum padding for a pure probe. Zero by default: variables
  // living only on the kernel of rho are pruned before the solve instead.
  double pure_state_padding = 0.0;
};

namespace detail {

struct ReducedBlock {
  CMatrix rho;
  CMatrix d[2];
  double mult;
};

inline std::vector<ReducedBlock> reduce(const ModelDerivatives &md, int m, bool symmetric) {
  if (!symmetric) return {{md.state, {md.d_theta_x, md.d_theta_y}, 1.0}};
  std::vector<ReducedBlock> out;
  for (const SpinSector &s : spin_sectors(m)) {
    const CMatrix &v = s.isometry;
    out.push_back({hermitian_part(v.adjoint() * md.state * v),
                   {hermitian_part(v.adjoint() * md.d_theta_x * v),
                    hermitian_part(v.adjoint() * md.d_theta_y * v)},
                   static_cast<double>(s.multiplicity)});
  }
  return out;
}

inline void check_weight(const Mat2 &w) {
  if ((w - w.transpose()).norm() > 1e-12)
    throw Error(ErrorKind::NotHermitian, "weight matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat2> es(w);
  if (es.eigenvalues()(0) < -1e-12) throw Error(ErrorKind::NotPsd, "weight matrix must be PSD");
}

inline bool use_symmetric(int m, const BoundOptions &opt) {
  switch (opt.route) {
    case BoundRoute::Direct:
      if (m > 4) throw Error(ErrorKind::DimensionTooLarge, "direct route limited to 4 copies");
      return false;
    case BoundRoute::Symmetric: return true;
    case BoundRoute::Auto: return m > opt.direct_max_copies;
  }
  return false;
}

inline ModelDerivatives prepared(const ProbeModel &model, const BoundOptions &opt) {
  ModelDerivatives md = derivatives_at_origin(model);
  if (model.epsilon == 0.0 && opt.pure_state_padding > 0.0) {
    const auto d = md.state.rows();
    md.state = (md.state + opt.pure_state_padding * CMatrix::Identity(d, d)) /
               (1.0 + opt.pure_state_padding * static_cast<double>(d));
  }
  return md;
}

inline void require_converged(const sdp::Solution &s, const char *what) {
  if (!s.converged)
    throw Error(ErrorKind::SolverNotConverged,
                std::string(what) + " SDP stalled, residual " + std::to_string(s.max_residual()));
}

// Local unbiasedness: sum_J mult_J Tr[rho_J X_j] = 0 and
// sum_J mult_J Tr[d_i rho_J X_j] = delta_ij.
inline void add_unbiasedness(sdp::LmiProblem &prob, const std::vector<ReducedBlock> &blocks,
                             const std::vector<std::vector<int>> x_vars[2]) {
  for (int j = 0; j < 2; ++j) {
    for (int row = 0; row < 3; ++row) {
      std::vector<std::pair<int, double>> terms;
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        const CMatrix &a = row == 0 ? blocks[b].rho : blocks[b].d[row - 1];
        const RVector g = sdp::HermitianLmi::trace_functional(a);
        for (Eigen::Index k = 0; k < g.size(); ++k)
          if (g(k) != 0.0) terms.emplace_back(x_vars[j][b][k], blocks[b].mult * g(k));
      }
      const double rhs = (row == 0) ? 0.0 : (row - 1 == j ? 1.0 : 0.0);
      prob.add_equality(terms, rhs);
    }
  }
}

// Drops variables that touch nothing (zero LMI column, zero cost, absent from
// every equality), which otherwise make the Newton system singular. Returns
// the mapping old -> new (-1 for dropped).
inline std::vector<int> prune(sdp::LmiProblem &prob) {
  const int nv = prob.num_variables();
  std::vector<int> map(nv, -1);
  sdp::LmiProblem out;
  out.block_sizes = prob.block_sizes;
  out.constant = prob.constant;
  for (int i = 0; i < nv; ++i) {
    bool used = !prob.coeffs[i].empty() || prob.cost[i] != 0.0;
    for (const auto &row : prob.eq_rows) used = used || row[i] != 0.0;
    if (!used) continue;
    map[i] = out.add_variable(prob.cost[i]);
    out.coeffs[map[i]] = prob.coeffs[i];
  }
  for (std::size_t r = 0; r < prob.eq_rows.size(); ++r) {
    std::vector<std::pair<int, double>> terms;
    for (int i = 0; i < nv; ++i)
      if (map[i] >= 0 && prob.eq_rows[r][i] != 0.0) terms.emplace_back(map[i], prob.eq_rows[r][i]);
    out.add_equality(terms, prob.eq_rhs[r]);
  }
  prob = std::move(out);
  return map;
}

inline RVector expand(const RVector &y, const std::vector<int> &map) {
  RVector out = RVector::Zero(static_cast<Eigen::Index>(map.size()));
  for (std::size_t i = 0; i < map.size(); ++i)
    if (map[i] >= 0) out(static_cast<Eigen::Index>(i)) = y(map[i]);
  return out;
}

}  // namespace detail

/// Nagaoka-Hayashi bound on the m-copy block: minimise
/// sum_ab W_ab Re Tr[rho L_ab] subject to [[L, X], [X^T, 1]] >= 0 with L a
/// 2x2 block matrix of Hermitian operators (L_12 = L_21) and X locally
/// unbiased.
inline BoundResult nagaoka_hayashi_sdp(const ProbeModel &model, const Mat2 &weight,
                                       const BoundOptions &opt = {}) {
  detail::check_weight(weight);
  check_epsilon(model.epsilon);
  check_copies(model.copies);
  const bool symmetric = detail::use_symmetric(model.copies, opt);
  const ModelDerivatives md = detail::prepared(model, opt);
  const auto blocks = detail::reduce(md, model.copies, symmetric);

  sdp::LmiProblem prob;
  sdp::HermitianLmi lmi(prob);
  std::vector<std::vector<int>> l_vars[3];  // L11, L22, L12
  std::vector<std::vector<int>> x_vars[2];
  for (const auto &blk : blocks) {
    const int n = static_cast<int>(blk.rho.rows());
    const auto b = lmi.add_block(3 * n);
    for (int k = 0; k < 3; ++k) l_vars[k].push_back(lmi.add_hermitian_variable(n));
    for (int k = 0; k < 2; ++k) x_vars[k].push_back(lmi.add_hermitian_variable(n));
    lmi.place(l_vars[0].back(), n, b, 0, 0);
    lmi.place(l_vars[1].back(), n, b, n, n);
    lmi.place(l_vars[2].back(), n, b, 0, n);
    lmi.place(x_vars[0].back(), n, b, 0, 2 * n);
    lmi.place(x_vars[1].back(), n, b, n, 2 * n);
    for (int k = 0; k < n; ++k) lmi.add_constant(b, 2 * n + k, 2 * n + k, 1.0);

    const RVector g = sdp::HermitianLmi::trace_functional(blk.rho);
    const double coef[3] = {weight(0, 0), weight(1, 1), 2.0 * weight(0, 1)};
    for (int k = 0; k < 3; ++k)
      for (Eigen::Index p = 0; p < g.size(); ++p)
        prob.cost[l_vars[k].back()[p]] += blk.mult * coef[k] * g(p);
  }
  detail::add_unbiasedness(prob, blocks, x_vars);
  const std::vector<int> map = detail::prune(prob);
  const sdp::Solution s = sdp::solve(prob, opt.solver);
  detail::require_converged(s, "Nagaoka-Hayashi");
  const RVector y = detail::expand(s.y, map);

  BoundResult r;
  r.kind = BoundKind::NagaokaHayashi;
  r.copies = model.copies;
  r.weight = weight;
  r.value = s.objective;
  r.iterations = s.iterations;
  r.residual = s.max_residual();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const int n = static_cast<int>(blocks[b].rho.rows());
    for (int j = 0; j < 2; ++j)
      r.variances(j) += blocks[b].mult *
                        re_trace_prod(blocks[b].rho, sdp::HermitianLmi::assemble(y, l_vars[j][b], n));
  }
  if (!symmetric) {
    const int n = static_cast<int>(md.state.rows());
    r.observables = std::make_pair(sdp::HermitianLmi::assemble(y, x_vars[0][0], n),
                                   sdp::HermitianLmi::assemble(y, x_vars[1][0], n));
  }
  return r;
}

/// Holevo bound on the m-copy block: minimise Tr[W V] subject to
/// [[V, R^dag], [R, 1]] >= 0, where column j of R stacks vec(X_j sqrt(rho)),
/// so that V >= Z with Z_ij = Tr[rho X_i X_j].
///
/// For diagonal W the optimal V splits the incompatibility term evenly in the
/// weighted sense: W_jj (V - Re Z)_jj = sqrt(W_11 W_22) |Im Z_12| for j = 1, 2.
inline BoundResult holevo_sdp(const ProbeModel &model, const Mat2 &weight,
                              const BoundOptions &opt = {}) {
  detail::check_weight(weight);
  check_epsilon(model.epsilon);
  check_copies(model.copies);
  const bool symmetric = detail::use_symmetric(model.copies, opt);
  const ModelDerivatives md = detail::prepared(model, opt);
  const auto blocks = detail::reduce(md, model.copies, symmetric);

  int rows = 0;
  for (const auto &blk : blocks) rows += static_cast<int>(blk.rho.rows() * blk.rho.rows());

  sdp::LmiProblem prob;
  sdp::HermitianLmi lmi(prob);
  const auto b = lmi.add_block(2 + rows);
  const int v11 = prob.add_variable(weight(0, 0));
  const int v22 = prob.add_variable(weight(1, 1));
  const int v12 = prob.add_variable(2.0 * weight(0, 1));
  lmi.add_entry(v11, b, 0, 0, 1.0);
  lmi.add_entry(v22, b, 1, 1, 1.0);
  lmi.add_entry(v12, b, 0, 1, 1.0);
  lmi.add_entry(v12, b, 1, 0, 1.0);
  for (int k = 0; k < rows; ++k) lmi.add_constant(b, 2 + k, 2 + k, 1.0);

  std::vector<std::vector<int>> x_vars[2];
  int offset = 2;
  for (const auto &blk : blocks) {
    const int n = static_cast<int>(blk.rho.rows());
    const CMatrix sq = sqrtm_psd(blk.rho);
    const double scale = std::sqrt(blk.mult);
    for (int j = 0; j < 2; ++j) {
      x_vars[j].push_back(lmi.add_hermitian_variable(n));
      for (int k = 0; k < n * n; ++k) {
        const CMatrix col = scale * sdp::HermitianLmi::basis(n, k) * sq;
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q) {
            const cplx z = col(p, q);
            if (std::abs(z) < 1e-15) continue;
            const int row = offset + p * n + q;
            lmi.add_entry(x_vars[j].back()[k], b, row, j, z);
            lmi.add_entry(x_vars[j].back()[k], b, j, row, std::conj(z));
          }
      }
    }
    offset += n * n;
  }
  detail::add_unbiasedness(prob, blocks, x_vars);
  const std::vector<int> map = detail::prune(prob);
  const sdp::Solution s = sdp::solve(prob, opt.solver);
  detail::require_converged(s, "Holevo");
  const RVector y = detail::expand(s.y, map);

  BoundResult r;
  r.kind = BoundKind::Holevo;
  r.copies = model.copies;
  r.weight = weight;
  r.value = s.objective;
  r.iterations = s.iterations;
  r.residual = s.max_residual();
  r.variances << y(v11), y(v22);
  if (!symmetric) {
    const int n = static_cast<int>(md.state.rows());
    r.observables = std::make_pair(sdp::HermitianLmi::assemble(y, x_vars[0][0], n),
                                   sdp::HermitianLmi::assemble(y, x_vars[1][0], n));
  }
  return r;
}

/// The Holevo function evaluated at given observables:
/// Tr[W Re Z] + TrAbs[sqrt(W) Im Z sqrt(W)], Z_ij = Tr[rho X_i X_j].
inline double holevo_function(const CMatrix &rho, const CMatrix &x1, const CMatrix &x2,
                              const Mat2 &weight) {
  const CMatrix xs[2] = {x1, x2};
  Eigen::Matrix2cd z;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) z(i, j) = (rho * xs[i] * xs[j]).trace();
  Eigen::SelfAdjointEigenSolver<Mat2> es(weight);
  const Mat2 sw = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                  es.eigenvectors().transpose();
  const CMatrix im = (sw * z.imag() * sw).cast<cplx>() * cplx(0, 1);
  return (weight * z.real()).trace() + trace_abs(hermitian_part(im));
}

/// Residual of the local unbiasedness conditions for a pair of observables.
inline double unbiasedness_defect(const ModelDerivatives &md, const CMatrix &x1, const CMatrix &x2) {
  const CMatrix xs[2] = {x1, x2};
  double worst = 0.0;
  for (int j = 0; j < 2; ++j) {
    worst = std::max(worst, std::abs((md.state * xs[j]).trace()));
    for (int i = 0; i < 2; ++i)
      worst = std::max(worst, std::abs((md.derivative(i) * xs[j]).trace() - (i == j ? 1.0 : 0.0)));
  }
  return worst;
}

struct TradeoffPoint {
  double v_x;  // per copy
  double v_y;
  double weight_w;
  BoundKind kind;
};

enum class Extraction { Diagonal, SupportFunction };

namespace detail {

inline BoundResult solve_kind(const ProbeModel &model, BoundKind kind, double w,
                              const BoundOptions &opt) {
  Mat2 weight = Mat2::Zero();
  weight(0, 0) = w;
  weight(1, 1) = 1.0 - w;
  if (kind == BoundKind::Holevo) return holevo_sdp(model, weight, opt);
  if (kind == BoundKind::NagaokaHayashi) return nagaoka_hayashi_sdp(model, weight, opt);
  throw Error(ErrorKind::ConfigError, "trade-off curves need a Holevo or NagaokaHayashi kind");
}

}  // namespace detail

/// Boundary point of the achievable (v_x, v_y) region for weight diag(w, 1-w).
///
/// Diagonal reads the attaining solution's covariance diagonal. SupportFunction
/// differentiates f(w) = min w v_x + (1-w) v_y numerically, which is well
/// defined even when the optimiser is degenerate: v_x = f + (1-w) f',
/// v_y = f - w f'.
inline TradeoffPoint tradeoff_point(const ProbeModel &model, BoundKind kind, double w,
                                    Extraction how = Extraction::Diagonal,
                                    const BoundOptions &opt = {}) {
  if (!(w > 0.0 && w < 1.0)) throw Error(ErrorKind::ConfigError, "weight must lie in (0, 1)");
  const double m = model.copies;
  if (how == Extraction::Diagonal) {
    const BoundResult r = detail::solve_kind(model, kind, w, opt);
    return {m * r.variances(0), m * r.variances(1), w, kind};
  }
  const double h = std::min({1e-4, w / 2, (1 - w) / 2});
  const double f = detail::solve_kind(model, kind, w, opt).value;
  const double fp = detail::solve_kind(model, kind, w + h, opt).value;
  const double fm = detail::solve_kind(model, kind, w - h, opt).value;
  const double slope = (fp - fm) / (2 * h);
  return {m * (f + (1 - w) * slope), m * (f - w * slope), w, kind};
}

inline std::vector<TradeoffPoint> tradeoff_curve(double epsilon, int m, BoundKind kind,
                                                 const std::vector<double> &weights,
                                                 Extraction how = Extraction::Diagonal,
                                                 const BoundOptions &opt = {}) {
  ProbeModel model{epsilon, m};
  std::vector<TradeoffPoint> out;
  for (double w : weights) out.push_back(tradeoff_point(model, kind, w, how, opt));
  return out;
}

}  // namespace qmetro
