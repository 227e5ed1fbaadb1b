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

// Dense complex linear algebra shared by every other module. Thin layer over
// Eigen that adds the Hermiticity checks and the deterministic eigenvector
// conventions the golden tests rely on.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "qmetro/error.hpp"

namespace qmetro {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kHermTol = 1e-10;
inline constexpr double kPsdClip = 1e-8;
inline constexpr double kPi = 3.14159265358979323846;

namespace pauli {
inline CMatrix I() { return CMatrix::Identity(2, 2); }
inline CMatrix X() {
  CMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline CMatrix Y() {
  CMatrix m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}
inline CMatrix Z() {
  CMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
}  // namespace pauli

struct HermitianEig {
  RVector eigenvalues;   // ascending
  CMatrix eigenvectors;  // columns, orthonormal
};

inline CMatrix kron(const CMatrix &a, const CMatrix &b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline double hermiticity_defect(const CMatrix &a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  return (a - a.adjoint()).norm();
}

inline bool is_hermitian(const CMatrix &a, double tol = kHermTol) {
  return hermiticity_defect(a) <= tol;
}

inline void require_hermitian(const CMatrix &a, double tol = kHermTol) {
  const double defect = hermiticity_defect(a);
  if (!(defect <= tol))
    throw Error(ErrorKind::NotHermitian,
                "||A - A^dagger||_F = " + std::to_string(defect));
}

inline CMatrix hermitian_part(const CMatrix &a) { return 0.5 * (a + a.adjoint()); }

namespace detail {

// Rotate v so its largest-magnitude entry is real and positive. Ties go to
// the lowest index.
inline void fix_phase(Eigen::Ref<CVector> v) {
  double best = -1.0;
  Eigen::Index at = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i));
    if (mag > best + 1e-12) {
      best = mag;
      at = i;
    }
  }
  if (best <= 0.0) return;
  v *= std::conj(v(at)) / std::abs(v(at));
}

inline bool lex_less(const CVector &a, const CVector &b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const cplx d = a(i) - b(i);
    if (std::abs(d.real()) > 1e-10) return a(i).real() > b(i).real();
    if (std::abs(d.imag()) > 1e-10) return a(i).imag() > b(i).imag();
  }
  return false;
}

// Replace a degenerate eigenspace basis with Gram-Schmidt applied to the
// projector's columns, which depends only on the subspace.
inline CMatrix canonical_subspace_basis(const CMatrix &vecs) {
  const CMatrix proj = vecs * vecs.adjoint();
  const Eigen::Index k = vecs.cols();
  CMatrix out(vecs.rows(), k);
  Eigen::Index found = 0;
  for (Eigen::Index col = 0; col < proj.cols() && found < k; ++col) {
    CVector v = proj.col(col);
    for (Eigen::Index j = 0; j < found; ++j) v -= out.col(j).dot(v) * out.col(j);
    const double n = v.norm();
    if (n < 1e-6) continue;
    out.col(found++) = v / n;
  }
  if (found < k) return vecs;
  return out;
}

}  // namespace detail

/// Full spectral decomposition of a Hermitian matrix with deterministic
/// eigenvector phases and degenerate-subspace ordering.
inline HermitianEig herm_eig(const CMatrix &a) {
  require_hermitian(a);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a));
  HermitianEig out{es.eigenvalues(), es.eigenvectors()};
  const Eigen::Index n = a.rows();
  const double scale = std::max(1.0, out.eigenvalues.cwiseAbs().maxCoeff());
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index stop = start + 1;
    while (stop < n && out.eigenvalues(stop) - out.eigenvalues(start) <= 1e-10 * scale) ++stop;
    const Eigen::Index len = stop - start;
    if (len > 1) {
      CMatrix block = detail::canonical_subspace_basis(out.eigenvectors.middleCols(start, len));
      std::vector<CVector> cols;
      for (Eigen::Index j = 0; j < len; ++j) {
        CVector v = block.col(j);
        detail::fix_phase(v);
        cols.push_back(v);
      }
      std::sort(cols.begin(), cols.end(), detail::lex_less);
      for (Eigen::Index j = 0; j < len; ++j) out.eigenvectors.col(start + j) = cols[j];
    } else {
      detail::fix_phase(out.eigenvectors.col(start));
    }
    start = stop;
  }
  return out;
}

inline CMatrix sqrtm_psd(const CMatrix &a) {
  const HermitianEig e = herm_eig(a);
  if (e.eigenvalues.minCoeff() < -kPsdClip)
    throw Error(ErrorKind::NotPsd,
                "minimum eigenvalue " + std::to_string(e.eigenvalues.minCoeff()));
  const RVector roots = e.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  CMatrix out = e.eigenvectors * roots.asDiagonal() * e.eigenvectors.adjoint();
  return hermitian_part(out);
}

inline double trace_abs(const CMatrix &a) {
  return herm_eig(a).eigenvalues.cwiseAbs().sum();
}

/// Re Tr[a b] without forming the product.
inline double re_trace_prod(const CMatrix &a, const CMatrix &b) {
  return (a.transpose().array() * b.array()).sum().real();
}

inline CMatrix expi_hermitian(const CMatrix &h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(h));
  CVector phases(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < phases.size(); ++i)
    phases(i) = std::polar(1.0, es.eigenvalues()(i));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

inline double unitarity_defect(const CMatrix &u) {
  if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
  return (u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols())).norm();
}

/// Operator-norm distance between a and b after removing the best global phase.
inline double distance_up_to_phase(const CMatrix &a, const CMatrix &b) {
  const cplx overlap = (b.adjoint() * a).trace();
  const cplx phase = std::abs(overlap) > 0 ? overlap / std::abs(overlap) : cplx(1.0);
  const CMatrix diff = a - phase * b;
  Eigen::JacobiSVD<CMatrix> svd(diff);
  return svd.singularValues()(0);
}

}  // namespace qmetro
