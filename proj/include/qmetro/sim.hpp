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

// Density-matrix simulation of a compiled measurement with depolarising gate
// noise and independent readout bit flips.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qmetro/synth.hpp"

namespace qmetro {

struct NoiseModel {
  double gate1_error = 0.0;  // depolarising probability after each rz/ry
  double gate2_error = 0.0;  // after each cx, spread over the 15 Paulis
  double readout_error = 0.0;
  std::string name;

  bool noiseless() const { return gate1_error == 0 && gate2_error == 0 && readout_error == 0; }
};

inline void validate(const NoiseModel &n) {
  for (double p : {n.gate1_error, n.gate2_error, n.readout_error})
    if (!(p >= 0.0 && p <= 1.0))
      throw Error(ErrorKind::POutOfRange, "noise probabilities must lie in [0, 1]");
}

/// Named presets. Only the gate rates of "low" and "high" have a physical
/// anchor; their readout rates are placeholders.
inline NoiseModel noise_profile(const std::string &name) {
  if (name == "ideal") return {0.0, 0.0, 0.0, name};
  if (name == "low") return {1e-3, 1e-2, 1e-2, name};
  if (name == "high") return {5e-3, 5e-2, 3e-2, name};
  throw Error(ErrorKind::ConfigError, "unknown noise profile '" + name + "'");
}

using OutcomeDistribution = std::vector<double>;
using Counts = std::vector<std::int64_t>;

namespace detail {

inline CMatrix conjugate(const CMatrix &rho, const Gate &g, int width) {
  CMatrix t = rho;
  apply_gate(t, g, width);
  t.adjointInPlace();
  apply_gate(t, g, width);
  return t;
}

inline CMatrix pauli_conjugate(const CMatrix &rho, int which, int qubit, int width) {
  const CMatrix p = which == 1 ? pauli::X() : which == 2 ? pauli::Y() : pauli::Z();
  CMatrix t = rho;
  apply_1q(t, p, qubit, width);
  t.adjointInPlace();
  apply_1q(t, p, qubit, width);
  return t;
}

inline void depolarize_1q(CMatrix &rho, double p, int qubit, int width) {
  if (p == 0.0) return;
  CMatrix acc = (1.0 - 0.75 * p) * rho;
  for (int a = 1; a <= 3; ++a) acc += 0.25 * p * pauli_conjugate(rho, a, qubit, width);
  rho = std::move(acc);
}

inline void depolarize_2q(CMatrix &rho, double p, int q0, int q1, int width) {
  if (p == 0.0) return;
  CMatrix acc = (1.0 - p) * rho;
  for (int a = 0; a <= 3; ++a) {
    const CMatrix first = a == 0 ? rho : pauli_conjugate(rho, a, q0, width);
    for (int b = 0; b <= 3; ++b) {
      if (a == 0 && b == 0) continue;
      acc += (p / 15.0) * (b == 0 ? first : pauli_conjugate(first, b, q1, width));
    }
  }
  rho = std::move(acc);
}

inline int width_of(const CMatrix &rho, const Circuit &c) {
  const Eigen::Index dim = Eigen::Index{1} << c.width;
  if (rho.rows() != dim || rho.cols() != dim)
    throw Error(ErrorKind::DimensionMismatch,
                "operator of size " + std::to_string(rho.rows()) + " on a " +
                    std::to_string(c.width) + "-qubit circuit");
  return c.width;
}

}  // namespace detail

/// Gate by gate with the channel of matching arity after each gate. Linear in
/// rho, so it also pushes derivative operators through.
inline CMatrix evolve(const CMatrix &rho, const Circuit &circuit, const NoiseModel &noise) {
  validate(noise);
  const int w = detail::width_of(rho, circuit);
  CMatrix out = rho;
  for (const auto &g : circuit.gates) {
    validate_gate(g, w);
    out = detail::conjugate(out, g, w);
    if (g.name == "cx")
      detail::depolarize_2q(out, noise.gate2_error, g.qubits[0], g.qubits[1], w);
    else
      detail::depolarize_1q(out, noise.gate1_error, g.qubits[0], w);
  }
  return out;
}

/// Computational-basis diagonal after readout flips, without clipping. Linear
/// in the operator; used for derivatives.
inline RVector outcome_linear(const CMatrix &op, const Circuit &circuit, const NoiseModel &noise) {
  const CMatrix out = evolve(op, circuit, noise);
  RVector p = out.diagonal().real();
  const double r = noise.readout_error;
  if (r > 0.0) {
    for (int q = 0; q < circuit.width; ++q) {
      const Eigen::Index bit = Eigen::Index{1} << (circuit.width - 1 - q);
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (i & bit) continue;
        const double a = p(i), b = p(i | bit);
        p(i) = (1 - r) * a + r * b;
        p(i | bit) = r * a + (1 - r) * b;
      }
    }
  }
  return p;
}

/// Born probabilities indexed by bitstring, qubit 0 as the most significant bit.
inline OutcomeDistribution outcome_probs(const CMatrix &rho, const Circuit &circuit,
                                         const NoiseModel &noise) {
  const RVector p = outcome_linear(rho, circuit, noise);
  OutcomeDistribution out(static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = std::max(p(i), 0.0);
  return out;
}

/// Multinomial draw by sequential binomials.
inline Counts sample(const OutcomeDistribution &dist, std::int64_t shots, std::uint64_t seed) {
  if (shots < 1) throw Error(ErrorKind::EmptyCounts, "shots must be >= 1");
  std::mt19937_64 rng(seed);
  Counts counts(dist.size(), 0);
  double remaining_mass = 0.0;
  for (double p : dist) remaining_mass += p;
  std::int64_t left = shots;
  for (std::size_t k = 0; k < dist.size() && left > 0; ++k) {
    if (k + 1 == dist.size() || remaining_mass <= 0.0) {
      counts[k] = left;
      break;
    }
    const double q = std::clamp(dist[k] / remaining_mass, 0.0, 1.0);
    std::binomial_distribution<std::int64_t> draw(left, q);
    counts[k] = draw(rng);
    left -= counts[k];
    remaining_mass -= dist[k];
  }
  return counts;
}

}  // namespace qmetro
