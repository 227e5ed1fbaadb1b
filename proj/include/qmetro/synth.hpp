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

// Compiling measurement bases to {rz, ry, cx} circuits.
//
// Qubit 0 is the most significant tensor factor everywhere. Rz(a) is
// diag(e^{-ia/2}, e^{ia/2}) and Ry(b) = exp(-i b Y / 2). A circuit's gates are
// listed in time order, so its unitary is e^{i phase} G_n ... G_1.

#include <array>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qmetro/numkernel.hpp"

namespace qmetro {

inline constexpr int kMaxCircuitWidth = 7;

struct Gate {
  std::string name;         // "rz", "ry" or "cx"
  std::vector<int> qubits;  // cx: {control, target}
  double angle = 0.0;       // unused for cx
};

struct Circuit {
  int width = 1;
  std::vector<Gate> gates;
  double global_phase = 0.0;

  int cx_count() const {
    int n = 0;
    for (const auto &g : gates) n += g.name == "cx";
    return n;
  }
};

inline CMatrix rz(double a) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = std::polar(1.0, -a / 2);
  m(1, 1) = std::polar(1.0, a / 2);
  return m;
}

inline CMatrix ry(double b) {
  CMatrix m(2, 2);
  m << std::cos(b / 2), -std::sin(b / 2), std::sin(b / 2), std::cos(b / 2);
  return m;
}

inline void validate_gate(const Gate &g, int width) {
  const auto bad = [&](const std::string &why) {
    throw Error(ErrorKind::SchemaMismatch, "gate " + g.name + ": " + why);
  };
  const std::size_t arity = g.name == "cx" ? 2 : 1;
  if (g.name != "cx" && g.name != "rz" && g.name != "ry") bad("unknown gate name");
  if (g.qubits.size() != arity) bad("wrong number of qubits");
  for (int q : g.qubits)
    if (q < 0 || q >= width) bad("qubit index out of range");
  if (arity == 2 && g.qubits[0] == g.qubits[1]) bad("repeated qubit");
  if (!std::isfinite(g.angle)) bad("non-finite angle");
}

namespace detail {

// Apply a one-qubit matrix to `qubit` of a 2^width-dimensional operator from the left.
inline void apply_1q(CMatrix &m, const CMatrix &g, int qubit, int width) {
  const Eigen::Index dim = Eigen::Index{1} << width;
  const Eigen::Index bit = Eigen::Index{1} << (width - 1 - qubit);
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (i & bit) continue;
    const Eigen::Index j = i | bit;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const cplx a = m(i, c), b = m(j, c);
      m(i, c) = g(0, 0) * a + g(0, 1) * b;
      m(j, c) = g(1, 0) * a + g(1, 1) * b;
    }
  }
}

inline void apply_cx(CMatrix &m, int control, int target, int width) {
  const Eigen::Index dim = Eigen::Index{1} << width;
  const Eigen::Index cb = Eigen::Index{1} << (width - 1 - control);
  const Eigen::Index tb = Eigen::Index{1} << (width - 1 - target);
  for (Eigen::Index i = 0; i < dim; ++i)
    if ((i & cb) && !(i & tb)) m.row(i).swap(m.row(i | tb));
}

inline void apply_gate(CMatrix &m, const Gate &g, int width) {
  if (g.name == "cx")
    apply_cx(m, g.qubits[0], g.qubits[1], width);
  else
    apply_1q(m, g.name == "rz" ? rz(g.angle) : ry(g.angle), g.qubits[0], width);
}

}  // namespace detail

/// Unitary of the gate sequence including the global phase.
inline CMatrix circuit_unitary(const Circuit &c) {
  CMatrix u = CMatrix::Identity(Eigen::Index{1} << c.width, Eigen::Index{1} << c.width);
  for (const auto &g : c.gates) {
    validate_gate(g, c.width);
    detail::apply_gate(u, g, c.width);
  }
  return std::polar(1.0, c.global_phase) * u;
}

/// Sets global_phase so the circuit matches `target` as closely as possible.
inline void fix_global_phase(Circuit &c, const CMatrix &target) {
  c.global_phase = 0.0;
  const cplx overlap = (circuit_unitary(c).adjoint() * target).trace();
  c.global_phase = std::abs(overlap) > 0 ? std::arg(overlap) : 0.0;
}

inline void require_unitary(const CMatrix &u, Eigen::Index dim, double tol) {
  if (u.rows() != dim || u.cols() != dim)
    throw Error(ErrorKind::DimensionMismatch,
                "expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
  const double defect = unitarity_defect(u);
  if (!(defect <= tol))
    throw Error(ErrorKind::NotUnitary, "||U^dagger U - I||_F = " + std::to_string(defect));
}

// --- basis -> unitary -------------------------------------------------------

/// Row k of the result is the conjugate of basis vector k, so U maps basis
/// state k onto |k>.
inline CMatrix basis_to_unitary(const CMatrix &basis) {
  if (basis.rows() != basis.cols())
    throw Error(ErrorKind::DimensionMismatch, "basis must be square");
  const double defect = unitarity_defect(basis);
  if (!(defect <= 1e-8))
    throw Error(ErrorKind::NotOrthonormal, "||B^dagger B - I||_F = " + std::to_string(defect));
  return basis.adjoint();
}

// --- one qubit --------------------------------------------------------------

struct Zyz {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double phase = 0.0;

  CMatrix matrix() const { return std::polar(1.0, phase) * rz(alpha) * ry(beta) * rz(gamma); }
};

/// u = e^{i phase} Rz(alpha) Ry(beta) Rz(gamma) with beta in [0, pi].
inline Zyz zyz(const CMatrix &u) {
  require_unitary(u, 2, 1e-10);
  Zyz out;
  out.phase = std::arg(u.determinant()) / 2;
  const CMatrix v = std::polar(1.0, -out.phase) * u;
  out.beta = 2 * std::atan2(std::abs(v(1, 0)), std::abs(v(0, 0)));
  const double sum = std::abs(v(1, 1)) > 1e-14 ? 2 * std::arg(v(1, 1)) : 0.0;
  const double diff = std::abs(v(1, 0)) > 1e-14 ? 2 * std::arg(v(1, 0)) : 0.0;
  out.alpha = (sum + diff) / 2;
  out.gamma = (sum - diff) / 2;
  // The half-angle convention leaves a sign; settle it against u.
  if ((out.matrix() - u).norm() > 1.0) out.phase += kPi;
  if (std::abs(out.phase) < 1e-15) out.phase = 0.0;
  return out;
}

namespace detail {

inline void emit_zyz(Circuit &c, const CMatrix &u, int qubit) {
  const Zyz e = zyz(u);
  const auto push = [&](const char *name, double a) {
    if (std::abs(a) > 1e-12) c.gates.push_back({name, {qubit}, a});
  };
  push("rz", e.gamma);
  push("ry", e.beta);
  push("rz", e.alpha);
}

// Splits m = a (x) b with a of size da. Uses the largest entry as the pivot;
// the caller checks the product structure.
inline std::pair<CMatrix, CMatrix> split_tensor(const CMatrix &m, Eigen::Index da) {
  const Eigen::Index db = m.rows() / da;
  Eigen::Index pr = 0, pc = 0;
  m.cwiseAbs().maxCoeff(&pr, &pc);
  const Eigen::Index i1 = pr / db, i2 = pr % db, j1 = pc / db, j2 = pc % db;
  CMatrix a(da, da), b(db, db);
  for (Eigen::Index r = 0; r < da; ++r)
    for (Eigen::Index c = 0; c < da; ++c) a(r, c) = m(r * db + i2, c * db + j2);
  for (Eigen::Index r = 0; r < db; ++r)
    for (Eigen::Index c = 0; c < db; ++c) b(r, c) = m(i1 * db + r, j1 * db + c) / m(pr, pc);
  const double s = std::pow(std::abs(a.determinant()), 1.0 / static_cast<double>(da));
  if (s > 0) {
    a /= s;
    b *= s;
  }
  return {a, b};
}

}  // namespace detail

// --- two qubits -------------------------------------------------------------

struct Kak {
  Eigen::Vector3d k = Eigen::Vector3d::Zero();
  // u = e^{i phase} (a1 (x) a2) exp(i(kx XX + ky YY + kz ZZ)) (b1 (x) b2)
  CMatrix a1, a2, b1, b2;
  double phase = 0.0;
  Circuit circuit;

  CMatrix core() const;
  CMatrix matrix() const { return std::polar(1.0, phase) * kron(a1, a2) * core() * kron(b1, b2); }
};

inline CMatrix interaction(const Eigen::Vector3d &k) {
  const CMatrix h = k(0) * kron(pauli::X(), pauli::X()) + k(1) * kron(pauli::Y(), pauli::Y()) +
                    k(2) * kron(pauli::Z(), pauli::Z());
  return expi_hermitian(h);
}

inline CMatrix Kak::core() const { return interaction(k); }

/// 0, 1, 2 or 3 by the class of a canonical k-vector.
inline int cnot_class(const Eigen::Vector3d &k, double tol = 1e-9) {
  if (k.cwiseAbs().maxCoeff() < tol) return 0;
  if (std::abs(k(0) - kPi / 4) < tol && std::abs(k(1)) < tol && std::abs(k(2)) < tol) return 1;
  if (std::abs(k(2)) < tol) return 2;
  return 3;
}

namespace detail {

inline CMatrix magic_basis() {
  const double r = 1.0 / std::sqrt(2.0);
  const cplx i(0, 1);
  CMatrix m(4, 4);
  m << r, 0, 0, r * i,  //
      0, r * i, r, 0,   //
      0, r * i, -r, 0,  //
      r, 0, 0, -r * i;
  return m;
}

// Real orthogonal P (det +1) with P^T m P diagonal, for symmetric unitary m.
inline RMatrix co_diagonalize(const CMatrix &m) {
  const RMatrix re = m.real(), im = m.imag();
  static constexpr std::array<double, 5> kMix = {0.6180339887498949, 1.4142135623730951,
                                                 0.3183098861837907, 2.718281828459045,
                                                 0.1234567};
  RMatrix best;
  double best_off = std::numeric_limits<double>::infinity();
  for (double r : kMix) {
    Eigen::SelfAdjointEigenSolver<RMatrix> es(re + r * im);
    RMatrix p = es.eigenvectors();
    const CMatrix d = p.transpose().cast<cplx>() * m * p.cast<cplx>();
    const double off = (d - CMatrix(d.diagonal().asDiagonal())).norm();
    if (off < best_off) {
      best_off = off;
      best = p;
    }
    if (off < 1e-13) break;
  }
  if (best.determinant() < 0) best.col(0) *= -1;
  return best;
}

struct KakState {
  Eigen::Vector3d k;
  CMatrix a1, a2, b1, b2;
  double phase;
};

// Local rewrites of exp(i k.S). Each keeps (a1 (x) a2) core (b1 (x) b2) fixed.
inline void shift(KakState &s, int axis, double sign) {
  // exp(i k.S) = (i sign P(x)P) exp(i (k - sign pi/2 e_axis).S)
  const CMatrix p = axis == 0 ? pauli::X() : axis == 1 ? pauli::Y() : pauli::Z();
  s.a1 = s.a1 * p;
  s.a2 = s.a2 * p;
  s.phase += sign * kPi / 2;
  s.k(axis) -= sign * kPi / 2;
}

inline void flip(KakState &s, int keep) {
  // Conjugating by P(x)I negates the two components other than `keep`.
  const CMatrix p = keep == 0 ? pauli::X() : keep == 1 ? pauli::Y() : pauli::Z();
  s.a1 = s.a1 * p;
  s.b1 = p * s.b1;
  for (int j = 0; j < 3; ++j)
    if (j != keep) s.k(j) = -s.k(j);
}

inline void swap_axes(KakState &s, int i, int j) {
  // V(x)V with V mapping the i axis onto the j axis and leaving the third fixed.
  const int fixed = 3 - i - j;
  const CMatrix gen = fixed == 0 ? pauli::X() : fixed == 1 ? pauli::Y() : pauli::Z();
  const CMatrix v = expi_hermitian(-kPi / 4 * gen);
  s.a1 = s.a1 * v;
  s.a2 = s.a2 * v;
  s.b1 = v.adjoint() * s.b1;
  s.b2 = v.adjoint() * s.b2;
  std::swap(s.k(i), s.k(j));
}

inline void canonicalize(KakState &s) {
  constexpr double tol = 1e-9;
  for (int a = 0; a < 3; ++a) {
    while (s.k(a) > kPi / 4 + tol) shift(s, a, 1.0);
    while (s.k(a) <= -kPi / 4 + tol) shift(s, a, -1.0);
  }
  // Sort by magnitude, descending.
  for (int pass = 0; pass < 2; ++pass)
    for (int a = 0; a < 2; ++a)
      if (std::abs(s.k(a + 1)) > std::abs(s.k(a)) + 1e-15) swap_axes(s, a, a + 1);
  if (s.k(0) < 0 && s.k(1) < 0) {
    flip(s, 2);
  } else if (s.k(0) < 0) {
    flip(s, 1);
  }
  if (s.k(1) < 0) flip(s, 0);
  if (s.k(2) < 0 && std::abs(s.k(0) - kPi / 4) < tol) {
    shift(s, 0, 1.0);
    flip(s, 1);
  }
}

// Decomposition without circuit emission.
inline KakState kak_factors(const CMatrix &u) {
  const CMatrix mb = magic_basis();
  const cplx det = u.determinant();
  const double phase0 = std::arg(det) / 4;
  const CMatrix su = std::polar(1.0, -phase0) * u;
  const CMatrix up = mb.adjoint() * su * mb;
  const CMatrix m2 = up.transpose() * up;
  const RMatrix p = co_diagonalize(m2);
  const CMatrix pc = p.cast<cplx>();
  const CVector d = (pc.transpose() * m2 * pc).diagonal();
  Eigen::Vector4d theta;
  for (int j = 0; j < 4; ++j) theta(j) = std::arg(d(j)) / 2;
  // det(up) = 1 forces sum(theta) = 0 mod pi; make it 0 mod 2 pi.
  const double total = theta.sum();
  if (std::abs(std::remainder(total, 2 * kPi)) > kPi / 2) theta(0) += kPi;
  CVector delta_inv(4);
  for (int j = 0; j < 4; ++j) delta_inv(j) = std::polar(1.0, -theta(j));
  const CMatrix k1 = up * pc * delta_inv.asDiagonal();
  const CMatrix left = mb * k1.real().cast<cplx>() * mb.adjoint();
  const CMatrix right = mb * pc.transpose() * mb.adjoint();

  // Interaction eigenvalues in the magic basis.
  Eigen::Matrix4d sys;
  const CMatrix dx = mb.adjoint() * kron(pauli::X(), pauli::X()) * mb;
  const CMatrix dy = mb.adjoint() * kron(pauli::Y(), pauli::Y()) * mb;
  const CMatrix dz = mb.adjoint() * kron(pauli::Z(), pauli::Z()) * mb;
  for (int j = 0; j < 4; ++j) sys.row(j) << dx(j, j).real(), dy(j, j).real(), dz(j, j).real(), 1.0;
  const Eigen::Vector4d sol = sys.fullPivLu().solve(theta);

  KakState s;
  s.k = sol.head<3>();
  s.phase = phase0 + sol(3);
  auto [a1, a2] = split_tensor(left, 2);
  auto [b1, b2] = split_tensor(right, 2);
  s.a1 = a1;
  s.a2 = a2;
  s.b1 = b1;
  s.b2 = b2;
  canonicalize(s);
  // Recover the exact phase from the product; the split may drop a sign.
  const CMatrix rebuilt = kron(s.a1, s.a2) * interaction(s.k) * kron(s.b1, s.b2);
  s.phase = std::arg((rebuilt.adjoint() * u).trace());
  return s;
}

inline Circuit kak_template(const Eigen::Vector3d &k, int cls) {
  Circuit c;
  c.width = 2;
  switch (cls) {
    case 0:
      break;
    case 1:
      c.gates = {{"cx", {0, 1}, 0.0}};
      break;
    case 2:
      c.gates = {{"cx", {0, 1}, 0.0},
                 {"ry", {0}, -2 * k(0)},
                 {"rz", {1}, -2 * k(1)},
                 {"cx", {0, 1}, 0.0}};
      break;
    default:
      c.gates = {{"cx", {1, 0}, 0.0},
                 {"rz", {0}, kPi / 2 - 2 * k(2)},
                 {"ry", {1}, 2 * k(0) - kPi / 2},
                 {"cx", {0, 1}, 0.0},
                 {"ry", {1}, kPi / 2 - 2 * k(1)},
                 {"cx", {1, 0}, 0.0}};
  }
  return c;
}

}  // namespace detail

/// Cartan decomposition with canonical k (pi/4 >= kx >= ky >= |kz|, kz >= 0
/// when kx = pi/4) and a circuit of at most three cx gates.
inline Kak kak(const CMatrix &u) {
  require_unitary(u, 4, 1e-10);
  const detail::KakState s = detail::kak_factors(u);
  Kak out{s.k, s.a1, s.a2, s.b1, s.b2, s.phase, {}};

  // Wrap a template with the same k in locals: if T = (t1 (x) t2) C (s1 (x) s2)
  // then u = (a1 t1^dag (x) a2 t2^dag) T (s1^dag b1 (x) s2^dag b2).
  const int cls = cnot_class(s.k);
  for (int attempt : {cls, 3}) {
    const Circuit tmpl = detail::kak_template(s.k, attempt);
    const detail::KakState t = detail::kak_factors(circuit_unitary(tmpl));
    if ((t.k - s.k).norm() > 1e-7) continue;
    Circuit c;
    c.width = 2;
    detail::emit_zyz(c, t.b1.adjoint() * s.b1, 0);
    detail::emit_zyz(c, t.b2.adjoint() * s.b2, 1);
    c.gates.insert(c.gates.end(), tmpl.gates.begin(), tmpl.gates.end());
    detail::emit_zyz(c, s.a1 * t.a1.adjoint(), 0);
    detail::emit_zyz(c, s.a2 * t.a2.adjoint(), 1);
    fix_global_phase(c, u);
    out.circuit = std::move(c);
    return out;
  }
  throw Error(ErrorKind::SolverNotConverged, "no circuit template matches the interaction vector");
}

// --- three qubits -----------------------------------------------------------

namespace detail {

inline void append(Circuit &dst, const Circuit &src, const std::vector<int> &map) {
  for (Gate g : src.gates) {
    for (int &q : g.qubits) q = map[static_cast<std::size_t>(q)];
    dst.gates.push_back(std::move(g));
  }
}

// Multiplexed rotation on qubit 0 controlled by qubits 1 and 2; angles[j] is
// applied when (q1, q2) = (j >> 1, j & 1).
inline void emit_multiplexed(Circuit &c, const char *name, const Eigen::Vector4d &angles) {
  Eigen::Matrix4d sign;
  for (int j = 0; j < 4; ++j) {
    const double s1 = (j >> 1) ? -1.0 : 1.0, s2 = (j & 1) ? -1.0 : 1.0;
    sign.row(j) << 1.0, s1, s1 * s2, s2;
  }
  const Eigen::Vector4d t = sign.inverse() * angles;
  c.gates.push_back({name, {0}, t(0)});
  c.gates.push_back({"cx", {1, 0}, 0.0});
  c.gates.push_back({name, {0}, t(1)});
  c.gates.push_back({"cx", {2, 0}, 0.0});
  c.gates.push_back({name, {0}, t(2)});
  c.gates.push_back({"cx", {1, 0}, 0.0});
  c.gates.push_back({name, {0}, t(3)});
  c.gates.push_back({"cx", {2, 0}, 0.0});
}

inline void emit_two_qubit(Circuit &c, const CMatrix &u, int q_hi, int q_lo) {
  append(c, kak(u).circuit, {q_hi, q_lo});
}

// [[l0, 0], [0, l1]] = (I (x) v)(d (+) d^dag)(I (x) w).
inline void demultiplex(Circuit &c, const CMatrix &l0, const CMatrix &l1) {
  Eigen::ComplexSchur<CMatrix> schur(l0 * l1.adjoint());
  const CMatrix v = schur.matrixU();
  const CVector d2 = schur.matrixT().diagonal();
  CVector d(4);
  Eigen::Vector4d angles;
  for (int j = 0; j < 4; ++j) {
    d(j) = std::sqrt(d2(j));
    angles(j) = -2 * std::arg(d(j));
  }
  const CMatrix w = d.asDiagonal() * v.adjoint() * l1;
  emit_two_qubit(c, w, 1, 2);
  emit_multiplexed(c, "rz", angles);
  emit_two_qubit(c, v, 1, 2);
}

inline CMatrix permute_qubits(const CMatrix &u, const std::array<int, 3> &perm) {
  // Output qubit j carries input qubit perm[j].
  CMatrix p = CMatrix::Zero(8, 8);
  for (int i = 0; i < 8; ++i) {
    int out = 0;
    for (int j = 0; j < 3; ++j) out |= ((i >> (2 - perm[j])) & 1) << (2 - j);
    p(out, i) = 1.0;
  }
  return p * u * p.adjoint();
}

inline bool product_split(const CMatrix &u, int qubit, Circuit &c) {
  std::array<int, 3> perm{qubit, 0, 0};
  int at = 1;
  for (int q = 0; q < 3; ++q)
    if (q != qubit) perm[at++] = q;
  const CMatrix pu = permute_qubits(u, perm);
  auto [a, b] = split_tensor(pu, 2);
  if ((kron(a, b) - pu).norm() > 1e-9) return false;
  emit_zyz(c, a, qubit);
  emit_two_qubit(c, b, perm[1], perm[2]);
  return true;
}

}  // namespace detail

/// Cosine-sine split on qubit 0 with both halves demultiplexed down to kak
/// blocks. Tensor products with a free qubit skip the recursion.
inline Circuit synth_threequbit(const CMatrix &u) {
  require_unitary(u, 8, 1e-9);
  Circuit c;
  c.width = 3;
  for (int q = 0; q < 3; ++q) {
    Circuit trial;
    trial.width = 3;
    if (detail::product_split(u, q, trial)) {
      fix_global_phase(trial, u);
      return trial;
    }
  }

  // u = [[l0, 0], [0, l1]] [[cs, -sn], [sn, cs]] [[r0, 0], [0, r1]]
  const CMatrix u00 = u.topLeftCorner(4, 4), u10 = u.bottomLeftCorner(4, 4);
  const CMatrix u01 = u.topRightCorner(4, 4), u11 = u.bottomRightCorner(4, 4);
  Eigen::JacobiSVD<CMatrix> svd(u00, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const CMatrix l0 = svd.matrixU();
  const CMatrix r0 = svd.matrixV().adjoint();
  const RVector cs = svd.singularValues().cwiseMin(1.0);
  // u10 r0^dag = l1 sn with sn >= 0 diagonal; QR-like completion column by column.
  const CMatrix x = u10 * r0.adjoint();
  CMatrix l1 = CMatrix::Zero(4, 4);
  RVector sn(4);
  for (int j = 0; j < 4; ++j) {
    sn(j) = x.col(j).norm();
    if (sn(j) > 1e-7) l1.col(j) = x.col(j) / sn(j);
  }
  // Fill columns with vanishing sine by Gram-Schmidt against the others.
  for (int j = 0; j < 4; ++j) {
    if (sn(j) > 1e-7) continue;
    for (int e = 0; e < 4; ++e) {
      CVector v = CVector::Unit(4, e);
      for (int i = 0; i < 4; ++i)
        if (l1.col(i).norm() > 0.5) v -= l1.col(i).dot(v) * l1.col(i);
      if (v.norm() > 1e-3) {
        l1.col(j) = v.normalized();
        break;
      }
    }
    sn(j) = 0.0;
  }
  // Re-orthonormalize; sines near 1e-7 can leave a small defect.
  Eigen::HouseholderQR<CMatrix> qr(l1);
  CMatrix q = qr.householderQ();
  const CMatrix rr = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < 4; ++j) q.col(j) *= rr(j, j) / std::abs(rr(j, j));
  l1 = q;
  // The lower-right block fixes r1: u11 = l1 cs r1 and u01 = -l0 sn r1.
  const CMatrix r1 = cs.cast<cplx>().asDiagonal() * l1.adjoint() * u11 -
                     sn.cast<cplx>().asDiagonal() * l0.adjoint() * u01;

  Eigen::Vector4d ry_angles;
  for (int j = 0; j < 4; ++j) ry_angles(j) = 2 * std::atan2(sn(j), cs(j));

  detail::demultiplex(c, r0, r1);
  detail::emit_multiplexed(c, "ry", ry_angles);
  detail::demultiplex(c, l0, l1);
  fix_global_phase(c, u);
  return c;
}

// --- waveplates -------------------------------------------------------------

struct WaveplateSetting {
  double q1_deg = 0.0;
  double h_deg = 0.0;
  double q2_deg = 0.0;
};

inline CMatrix plate_rotation(double theta) {
  CMatrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

inline CMatrix qwp(double theta_rad) {
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = cplx(0, 1);
  return plate_rotation(theta_rad) * d * plate_rotation(-theta_rad);
}

inline CMatrix hwp(double theta_rad) {
  return plate_rotation(theta_rad) * pauli::Z() * plate_rotation(-theta_rad);
}

inline CMatrix jones(const WaveplateSetting &s) {
  constexpr double deg = kPi / 180.0;
  return qwp(s.q1_deg * deg) * hwp(s.h_deg * deg) * qwp(s.q2_deg * deg);
}

/// QWP(q1) HWP(h) QWP(q2) = u up to phase. Angles in degrees, in (-90, 90].
inline WaveplateSetting waveplates(const CMatrix &u) {
  require_unitary(u, 2, 1e-10);
  // The plate product is Ry(2 q1) Rx(2 (q1 + q2 - 2 h)) Ry(-2 q2); G turns
  // that YXY form into ZYZ.
  CMatrix g = pauli::I() + cplx(0, 1) * (pauli::X() + pauli::Y() + pauli::Z());
  g /= 2.0;
  const Zyz e = zyz(g.adjoint() * u * g);
  const double q1 = e.alpha / 2, q2 = -e.gamma / 2;
  const double h = (q1 + q2 - e.beta / 2) / 2;
  const auto norm = [](double rad) {
    double d = std::remainder(rad * 180.0 / kPi, 180.0);
    if (d <= -90.0) d += 180.0;
    if (std::abs(d) < 1e-12) d = 0.0;
    return d;
  };
  return {norm(q1), norm(h), norm(q2)};
}

// --- serialization ----------------------------------------------------------

inline nlohmann::json to_json(const Circuit &c) {
  nlohmann::json gates = nlohmann::json::array();
  for (const auto &g : c.gates) {
    nlohmann::json j{{"name", g.name}, {"qubits", g.qubits}};
    if (g.name != "cx") j["angle"] = g.angle;
    gates.push_back(std::move(j));
  }
  return {{"width", c.width}, {"global_phase", c.global_phase}, {"gates", gates}};
}

inline Circuit circuit_from_json(const nlohmann::json &j) {
  try {
    Circuit c;
    c.width = j.at("width").get<int>();
    c.global_phase = j.at("global_phase").get<double>();
    if (c.width < 1 || c.width > kMaxCircuitWidth)
      throw Error(ErrorKind::SchemaMismatch, "circuit width out of range");
    for (const auto &jg : j.at("gates")) {
      Gate g;
      g.name = jg.at("name").get<std::string>();
      g.qubits = jg.at("qubits").get<std::vector<int>>();
      if (g.name != "cx") g.angle = jg.at("angle").get<double>();
      validate_gate(g, c.width);
      c.gates.push_back(std::move(g));
    }
    return c;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::SchemaMismatch, std::string("circuit json: ") + e.what());
  }
}

/// One gate per line, angles with 17 significant digits.
inline std::string to_text(const Circuit &c) {
  std::ostringstream os;
  char buf[64];
  for (const auto &g : c.gates) {
    os << g.name;
    for (int q : g.qubits) os << ' ' << q;
    if (g.name != "cx") {
      std::snprintf(buf, sizeof buf, " %.17g", g.angle);
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace qmetro
