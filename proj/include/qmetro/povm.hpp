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

// Measurements on the m-copy probe: POVM container, classical Fisher
// information, the analytic single-copy scheme and a numerical search for
// collective projective measurements.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qmetro/bounds.hpp"
#include "qmetro/numkernel.hpp"
#include "qmetro/probe.hpp"

namespace qmetro {

struct Povm {
  int dimension = 0;
  int copies = 1;
  double epsilon = 0.0;
  double weight_w = 0.5;
  double achieved_value = 0.0;
  std::vector<CMatrix> outcomes;

  // Optional provenance for POVMs built from orthonormal bases: outcome block
  // c is mixing[c] times the projectors onto the columns of bases[c].
  std::vector<CMatrix> bases;
  std::vector<double> mixing;

  std::size_t size() const { return outcomes.size(); }
};

/// Rank-1 projective POVM from the columns of an orthonormal basis.
inline Povm povm_from_basis(const CMatrix &basis) {
  Povm p;
  p.dimension = static_cast<int>(basis.rows());
  int m = 0;
  while ((1 << m) < p.dimension) ++m;
  p.copies = m;
  for (Eigen::Index k = 0; k < basis.cols(); ++k) p.outcomes.push_back(basis.col(k) * basis.col(k).adjoint());
  p.bases = {basis};
  p.mixing = {1.0};
  return p;
}

/// Mixture of projective measurements: with probability mixing[c] measure in
/// bases[c]. Outcomes are ordered component by component.
inline Povm povm_from_mixture(const std::vector<CMatrix> &bases, const std::vector<double> &mixing) {
  Povm p;
  p.dimension = static_cast<int>(bases.at(0).rows());
  int m = 0;
  while ((1 << m) < p.dimension) ++m;
  p.copies = m;
  for (std::size_t c = 0; c < bases.size(); ++c)
    for (Eigen::Index k = 0; k < bases[c].cols(); ++k)
      p.outcomes.push_back(mixing[c] * bases[c].col(k) * bases[c].col(k).adjoint());
  p.bases = bases;
  p.mixing = mixing;
  return p;
}

struct ValidationIssue {
  std::string what;
  double magnitude;
};

struct ValidationReport {
  bool ok = true;
  bool projective = false;
  std::vector<ValidationIssue> issues;
};

inline ValidationReport validate(const Povm &povm) {
  ValidationReport r;
  if (povm.outcomes.empty()) {
    r.ok = false;
    r.issues.push_back({"no outcomes", 0.0});
    return r;
  }
  const Eigen::Index d = povm.outcomes.front().rows();
  CMatrix sum = CMatrix::Zero(d, d);
  bool projective = true;
  for (std::size_t k = 0; k < povm.outcomes.size(); ++k) {
    const CMatrix &e = povm.outcomes[k];
    if (e.rows() != d || e.cols() != d) {
      r.ok = false;
      r.issues.push_back({"outcome " + std::to_string(k) + " has the wrong shape", 0.0});
      return r;
    }
    const double herm = hermiticity_defect(e);
    if (herm > 1e-9) {
      r.ok = false;
      r.issues.push_back({"outcome " + std::to_string(k) + " not Hermitian", herm});
      projective = false;
      continue;
    }
    const RVector ev = herm_eig(hermitian_part(e)).eigenvalues;
    if (ev.minCoeff() < -1e-9) {
      r.ok = false;
      r.issues.push_back({"outcome " + std::to_string(k) + " not PSD", -ev.minCoeff()});
    }
    // Rank-1 projector: eigenvalues (0, ..., 0, 1).
    double proj_err = std::abs(ev(d - 1) - 1.0);
    for (Eigen::Index i = 0; i + 1 < d; ++i) proj_err = std::max(proj_err, std::abs(ev(i)));
    if (proj_err > 1e-8) projective = false;
    sum += e;
  }
  const double completeness = (sum - CMatrix::Identity(d, d)).norm();
  if (completeness > 1e-9) {
    r.ok = false;
    r.issues.push_back({"outcomes do not sum to identity", completeness});
  }
  r.projective = r.ok && projective && static_cast<Eigen::Index>(povm.outcomes.size()) == d;
  return r;
}

struct FisherInfo {
  Mat2 matrix = Mat2::Zero();
  double theta_x = 0.0;
  double theta_y = 0.0;
  // Outcomes with vanishing probability but a non-vanishing derivative. They
  // are left out of the sum and flagged here.
  int degenerate_outcomes = 0;
};

/// J_ij = sum_k d_i p_k d_j p_k / p_k from probabilities and their derivatives.
inline FisherInfo fisher_from_probabilities(const RVector &p, const RVector &dpx, const RVector &dpy) {
  FisherInfo f;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const Eigen::Vector2d a(dpx(k), dpy(k));
    if (p(k) < 1e-12) {
      if (a.cwiseAbs().maxCoeff() >= 1e-9) ++f.degenerate_outcomes;
      continue;
    }
    f.matrix += a * a.transpose() / p(k);
  }
  f.matrix = 0.5 * (f.matrix + f.matrix.transpose()).eval();
  return f;
}

struct OutcomeModel {
  RVector p;
  RVector dp[2];
};

inline OutcomeModel outcome_model(const Povm &povm, const ModelDerivatives &md) {
  const auto n = static_cast<Eigen::Index>(povm.size());
  OutcomeModel o{RVector(n), {RVector(n), RVector(n)}};
  for (Eigen::Index k = 0; k < n; ++k) {
    const CMatrix &e = povm.outcomes[k];
    if (e.rows() != md.state.rows())
      throw Error(ErrorKind::DimensionMismatch, "POVM dimension does not match the probe");
    o.p(k) = re_trace_prod(e, md.state);
    o.dp[0](k) = re_trace_prod(e, md.d_theta_x);
    o.dp[1](k) = re_trace_prod(e, md.d_theta_y);
  }
  return o;
}

inline FisherInfo classical_fisher(const Povm &povm, const ProbeModel &model) {
  if (povm.outcomes.empty()) throw Error(ErrorKind::EmptyInput, "POVM has no outcomes");
  if (povm.outcomes.front().rows() != model.dimension())
    throw Error(ErrorKind::DimensionMismatch, "POVM dimension does not match the probe");
  const OutcomeModel o = outcome_model(povm, derivatives_at_origin(model));
  return fisher_from_probabilities(o.p, o.dp[0], o.dp[1]);
}

/// w (J^-1)_xx + (1 - w) (J^-1)_yy; infinity for singular J.
inline double weighted_crb(const Mat2 &j, double w) {
  const double det = j.determinant();
  if (!(det > 1e-14 * std::max(1.0, j.squaredNorm()))) return std::numeric_limits<double>::infinity();
  const Mat2 inv = j.inverse();
  return w * inv(0, 0) + (1.0 - w) * inv(1, 1);
}

/// Orthonormal vectors of a rank-1 projective POVM, outcome k -> column k.
/// Each vector follows the numkernel phase convention.
inline CMatrix basis_of(const Povm &povm) {
  const ValidationReport v = validate(povm);
  if (!v.projective) throw Error(ErrorKind::NotProjective, "POVM is not rank-1 projective");
  const Eigen::Index d = povm.outcomes.front().rows();
  CMatrix basis(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const HermitianEig e = herm_eig(hermitian_part(povm.outcomes[k]));
    CVector vec = e.eigenvectors.col(d - 1);
    detail::fix_phase(vec);
    basis.col(k) = vec;
  }
  return basis;
}

// ---------------------------------------------------------------------------
// Single-copy scheme.

struct SingleCopyScheme {
  Povm povm_x;  // sigma_y eigenbasis, informative about theta_x
  Povm povm_y;  // sigma_x eigenbasis, informative about theta_y
  double allocation = 0.5;
  Eigen::Vector2d coeff_x;  // estimator value of theta_x per outcome of povm_x
  Eigen::Vector2d coeff_y;
  double variance_sum = 0.0;  // resource normalised
};

inline CMatrix sigma_y_basis() {
  const double s = 1.0 / std::sqrt(2.0);
  CMatrix b(2, 2);
  b << s, s, cplx(0, s), cplx(0, -s);
  return b;
}

inline CMatrix sigma_x_basis() {
  const double s = 1.0 / std::sqrt(2.0);
  CMatrix b(2, 2);
  b << s, s, s, -s;
  return b;
}

inline SingleCopyScheme optimal_single_copy(double epsilon) {
  check_epsilon(epsilon);
  SingleCopyScheme s;
  s.povm_x = povm_from_basis(sigma_y_basis());
  s.povm_y = povm_from_basis(sigma_x_basis());
  for (Povm *p : {&s.povm_x, &s.povm_y}) {
    p->epsilon = epsilon;
    p->copies = 1;
  }
  const double c = 1.0 / (1.0 - epsilon);
  // <sigma_y> = -(1 - eps) sin(theta_x), <sigma_x> = +(1 - eps) sin(theta_y)
  s.coeff_x << -c, c;
  s.coeff_y << c, -c;
  // Each parameter gets half the probes, per-probe variance 1 / (1 - eps)^2.
  s.variance_sum = 2.0 * (c * c) / s.allocation;
  return s;
}

// ---------------------------------------------------------------------------
// Collective measurement search.

struct OptimizeOptions {
  int restarts = 20;
  std::uint64_t seed = 1;
  int max_iters = 5000;
  // Relative gap to the certificate that counts as success.
  double tolerance = 0.005;
  // Restarts stop early once this close to the certificate.
  double early_stop = 1e-7;
  // Projective bases mixed per measurement; 0 picks 2 for one copy and 1
  // otherwise (a single qubit basis cannot see both angles).
  int components = 0;
  // Certificate override; computed with nagaoka_hayashi_sdp when negative.
  double target = -1.0;
};

/// Thrown when the best measurement misses the certificate. Carries it.
class TargetNotReachedError : public Error {
 public:
  TargetNotReachedError(Povm best, double target)
      : Error(ErrorKind::TargetNotReached, describe(best.achieved_value, target)),
        best_(std::move(best)),
        target_(target) {}

  const Povm &best() const { return best_; }
  double target() const { return target_; }
  double gap() const { return best_.achieved_value / target_ - 1.0; }

 private:
  static std::string describe(double v, double t) {
    std::ostringstream os;
    os.precision(10);
    os << "best value " << v << " vs certificate " << t << " (relative gap " << (v / t - 1.0) << ")";
    return os.str();
  }
  Povm best_;
  double target_;
};

namespace detail {

// Orthonormal coordinates on d x d Hermitian matrices.
inline CMatrix herm_from_coords(const double *x, int d) {
  CMatrix h = CMatrix::Zero(d, d);
  const double s = 1.0 / std::sqrt(2.0);
  int idx = 0;
  for (int p = 0; p < d; ++p) h(p, p) = x[idx++];
  for (int p = 0; p < d; ++p)
    for (int q = p + 1; q < d; ++q) {
      const cplx z(s * x[idx], s * x[idx + 1]);
      h(p, q) = z;
      h(q, p) = std::conj(z);
      idx += 2;
    }
  return h;
}

inline void coords_from_herm(const CMatrix &h, double *x, int d) {
  const double s = std::sqrt(2.0);
  int idx = 0;
  for (int p = 0; p < d; ++p) x[idx++] = h(p, p).real();
  for (int p = 0; p < d; ++p)
    for (int q = p + 1; q < d; ++q) {
      x[idx] = s * h(p, q).real();
      x[idx + 1] = s * h(p, q).imag();
      idx += 2;
    }
}

// Weighted CRB of a mixture of projective measurements and its gradient with
// respect to (H_c, logits) at the current bases, where basis c moves as
// U_c exp(i H_c) and the mixing weights are softmax(logits).
class MixtureObjective {
 public:
  MixtureObjective(const ModelDerivatives &md, double w, int components)
      : md_(md), w_(w), k_(components), d_(static_cast<int>(md.state.rows())) {}

  int num_params() const { return k_ * d_ * d_ + (k_ > 1 ? k_ : 0); }

  struct Eval {
    double value;
    RVector grad;
  };

  Eval evaluate(const std::vector<CMatrix> &bases, const RVector &logits, bool want_grad,
                double reg = 1e-9) const {
    const std::vector<double> mix = softmax(logits);
    std::vector<RVector> pk(k_);
    std::vector<RMatrix> ak(k_);  // 2 x d
    std::vector<CMatrix> rho_t(k_), d_t[2];
    d_t[0].resize(k_);
    d_t[1].resize(k_);
    std::vector<Mat2> jc(k_);
    Mat2 j = reg * Mat2::Identity();
    for (int c = 0; c < k_; ++c) {
      const CMatrix &u = bases[c];
      rho_t[c] = u.adjoint() * md_.state * u;
      d_t[0][c] = u.adjoint() * md_.d_theta_x * u;
      d_t[1][c] = u.adjoint() * md_.d_theta_y * u;
      pk[c] = rho_t[c].diagonal().real().cwiseMax(1e-300);
      ak[c].resize(2, d_);
      ak[c].row(0) = d_t[0][c].diagonal().real().transpose();
      ak[c].row(1) = d_t[1][c].diagonal().real().transpose();
      jc[c] = ak[c] * pk[c].cwiseInverse().asDiagonal() * ak[c].transpose();
      j += mix[c] * jc[c];
    }
    Mat2 wm = Mat2::Zero();
    wm(0, 0) = w_;
    wm(1, 1) = 1.0 - w_;
    const Mat2 jinv = j.inverse();
    Eval out{(wm * jinv).trace(), RVector()};
    if (!want_grad) return out;

    out.grad = RVector::Zero(num_params());
    const Mat2 g = jinv * wm * jinv;  // df/dJ = -G
    for (int c = 0; c < k_; ++c) {
      // Component c contributes mix_c J_c.
      CMatrix b = CMatrix::Zero(d_, d_);
      for (int k = 0; k < d_; ++k) {
        const Eigen::Vector2d a = ak[c].col(k);
        const double p = pk[c](k);
        const Eigen::Vector2d ga = g * a;
        const double ck = mix[c] * a.dot(ga) / (p * p);
        const double g0 = -2.0 * mix[c] * ga(0) / p;
        const double g1 = -2.0 * mix[c] * ga(1) / p;
        b.row(k) = ck * rho_t[c].row(k) + g0 * d_t[0][c].row(k) + g1 * d_t[1][c].row(k);
      }
      const CMatrix a_herm = (b - b.adjoint()) / cplx(0, 2);
      coords_from_herm(-2.0 * a_herm, out.grad.data() + c * d_ * d_, d_);
    }
    if (k_ > 1) {
      // df/dmix_c = -Tr[G J_c]; chain through the softmax.
      std::vector<double> dmix(k_);
      double avg = 0.0;
      for (int c = 0; c < k_; ++c) {
        dmix[c] = -(g * jc[c]).trace();
        avg += mix[c] * dmix[c];
      }
      for (int c = 0; c < k_; ++c) out.grad(k_ * d_ * d_ + c) = mix[c] * (dmix[c] - avg);
    }
    return out;
  }

  static std::vector<double> softmax(const RVector &logits) {
    if (logits.size() == 0) return {1.0};
    const double mx = logits.maxCoeff();
    std::vector<double> out(logits.size());
    double s = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) s += (out[i] = std::exp(logits(i) - mx));
    for (double &v : out) v /= s;
    return out;
  }

  int components() const { return k_; }
  int dim() const { return d_; }

 private:
  const ModelDerivatives &md_;
  double w_;
  int k_;
  int d_;
};

struct SearchState {
  std::vector<CMatrix> bases;
  RVector logits;
  double value;
};

// Moves the state by step x (Lie-algebra coordinates and logit increments).
inline SearchState retract(const SearchState &s, const RVector &x, int k, int d) {
  SearchState out = s;
  for (int c = 0; c < k; ++c) out.bases[c] = s.bases[c] * expi_hermitian(herm_from_coords(x.data() + c * d * d, d));
  if (k > 1) out.logits = s.logits + x.tail(k);
  return out;
}

// L-BFGS with the base point reset after every step.
inline SearchState local_search(const MixtureObjective &obj, SearchState s, int max_iters) {
  const int k = obj.components(), d = obj.dim();
  const int memory = 8;
  std::vector<RVector> ss, ys;
  auto e = obj.evaluate(s.bases, s.logits, true);
  s.value = e.value;
  RVector grad = e.grad;
  int flat = 0;
  for (int iter = 0; iter < max_iters; ++iter) {
    if (grad.norm() < 1e-12 * std::max(1.0, s.value)) break;
    // Two-loop recursion.
    RVector q = grad;
    std::vector<double> alpha(ss.size());
    for (int i = static_cast<int>(ss.size()) - 1; i >= 0; --i) {
      alpha[i] = ss[i].dot(q) / ys[i].dot(ss[i]);
      q -= alpha[i] * ys[i];
    }
    if (!ss.empty()) q *= ss.back().dot(ys.back()) / ys.back().squaredNorm();
    else q *= 1e-2 / std::max(1.0, grad.norm());
    for (std::size_t i = 0; i < ss.size(); ++i) {
      const double beta = ys[i].dot(q) / ys[i].dot(ss[i]);
      q += (alpha[i] - beta) * ss[i];
    }
    RVector dir = -q;
    double slope = dir.dot(grad);
    if (!(slope < 0)) {
      ss.clear();
      ys.clear();
      dir = -grad * (1e-2 / std::max(1.0, grad.norm()));
      slope = dir.dot(grad);
    }
    // Backtracking Armijo search.
    double t = 1.0;
    SearchState trial;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      trial = retract(s, t * dir, k, d);
      trial.value = obj.evaluate(trial.bases, trial.logits, false).value;
      if (trial.value <= s.value + 1e-4 * t * slope) {
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
    const auto e2 = obj.evaluate(trial.bases, trial.logits, true);
    const RVector sk = t * dir;
    const RVector yk = e2.grad - grad;
    if (sk.dot(yk) > 1e-16) {
      ss.push_back(sk);
      ys.push_back(yk);
      if (static_cast<int>(ss.size()) > memory) {
        ss.erase(ss.begin());
        ys.erase(ys.begin());
      }
    }
    const double improvement = s.value - trial.value;
    s = std::move(trial);
    s.value = e2.value;
    grad = e2.grad;
    flat = improvement < 1e-15 * std::max(1.0, s.value) ? flat + 1 : 0;
    if (flat > 20) break;
  }
  return s;
}

inline CMatrix haar_unitary(std::mt19937_64 &rng, Eigen::Index d) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix z(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ() * CMatrix::Identity(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const cplx r = qr.matrixQR()(j, j);
    if (std::abs(r) > 0) q.col(j) *= r / std::abs(r);
  }
  return q;
}

}  // namespace detail

/// Searches measurement bases on the m-copy probe minimising
/// w (J^-1)_xx + (1 - w) (J^-1)_yy, certified against the Nagaoka-Hayashi
/// bound. Throws TargetNotReachedError (with the best POVM) if the relative
/// gap exceeds options.tolerance.
inline Povm optimize_collective(const ProbeModel &model, double weight_w, const OptimizeOptions &opt = {}) {
  check_epsilon(model.epsilon);
  check_copies(model.copies);
  if (model.copies > 3) throw Error(ErrorKind::DimensionTooLarge, "measurement search limited to 3 copies");
  if (!(weight_w > 0.0 && weight_w < 1.0)) throw Error(ErrorKind::ConfigError, "weight must lie in (0, 1)");
  const ModelDerivatives md = derivatives_at_origin(model);
  const int k = opt.components > 0 ? opt.components : (model.copies == 1 ? 2 : 1);
  const int d = static_cast<int>(model.dimension());

  double target = opt.target;
  if (target < 0) {
    Mat2 w = Mat2::Zero();
    w(0, 0) = weight_w;
    w(1, 1) = 1.0 - weight_w;
    target = nagaoka_hayashi_sdp(model, w).value;
  }

  const detail::MixtureObjective obj(md, weight_w, k);
  detail::SearchState best;
  best.value = std::numeric_limits<double>::infinity();
  for (int r = 0; r < opt.restarts; ++r) {
    std::mt19937_64 rng(opt.seed + static_cast<std::uint64_t>(r));
    detail::SearchState s;
    for (int c = 0; c < k; ++c) s.bases.push_back(detail::haar_unitary(rng, d));
    s.logits = RVector::Zero(k > 1 ? k : 0);
    s = detail::local_search(obj, std::move(s), opt.max_iters);
    if (s.value < best.value) best = s;
    if (best.value <= target * (1.0 + opt.early_stop)) break;
  }

  std::vector<double> mix = detail::MixtureObjective::softmax(best.logits);
  Povm out = k == 1 ? povm_from_basis(best.bases[0]) : povm_from_mixture(best.bases, mix);
  out.copies = model.copies;
  out.epsilon = model.epsilon;
  out.weight_w = weight_w;
  out.achieved_value = weighted_crb(classical_fisher(out, model).matrix, weight_w);
  if (!(out.achieved_value <= target * (1.0 + opt.tolerance))) throw TargetNotReachedError(out, target);
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline nlohmann::json matrix_json(const CMatrix &e) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < e.cols(); ++j) row.push_back({e(i, j).real(), e(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

inline CMatrix matrix_from_json(const nlohmann::json &rows, int d) {
  CMatrix e(d, d);
  if (static_cast<int>(rows.size()) != d)
    throw Error(ErrorKind::SchemaMismatch, "matrix row count differs from dimension");
  for (int r = 0; r < d; ++r) {
    if (static_cast<int>(rows[r].size()) != d)
      throw Error(ErrorKind::SchemaMismatch, "matrix column count differs from dimension");
    for (int c = 0; c < d; ++c)
      e(r, c) = cplx(rows[r][c].at(0).get<double>(), rows[r][c].at(1).get<double>());
  }
  return e;
}

}  // namespace detail

/// Entries are [re, im] pairs. "bases"/"mixing" are present only for POVMs
/// built from orthonormal bases.
inline nlohmann::json to_json(const Povm &p) {
  nlohmann::json outcomes = nlohmann::json::array();
  for (const CMatrix &e : p.outcomes) outcomes.push_back(detail::matrix_json(e));
  nlohmann::json j{{"dimension", p.dimension}, {"copies", p.copies},
                   {"epsilon", p.epsilon},     {"weight_w", p.weight_w},
                   {"achieved_value", p.achieved_value}, {"outcomes", outcomes}};
  if (!p.bases.empty()) {
    nlohmann::json bases = nlohmann::json::array();
    for (const CMatrix &b : p.bases) bases.push_back(detail::matrix_json(b));
    j["bases"] = bases;
    j["mixing"] = p.mixing;
  }
  return j;
}

inline Povm povm_from_json(const nlohmann::json &j) {
  try {
    Povm p;
    p.dimension = j.at("dimension").get<int>();
    p.copies = j.at("copies").get<int>();
    p.epsilon = j.at("epsilon").get<double>();
    p.weight_w = j.at("weight_w").get<double>();
    p.achieved_value = j.at("achieved_value").get<double>();
    for (const auto &rows : j.at("outcomes")) p.outcomes.push_back(detail::matrix_from_json(rows, p.dimension));
    if (j.contains("bases")) {
      for (const auto &rows : j.at("bases")) p.bases.push_back(detail::matrix_from_json(rows, p.dimension));
      p.mixing = j.at("mixing").get<std::vector<double>>();
      if (p.mixing.size() != p.bases.size())
        throw Error(ErrorKind::SchemaMismatch, "mixing and bases differ in length");
    }
    return p;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::SchemaMismatch, e.what());
  }
}

}  // namespace qmetro
