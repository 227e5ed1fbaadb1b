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

// The probe family: |0> rotated by exp(-i(tx X + ty Y)/2), then depolarised
// with strength epsilon, optionally as an m-fold tensor power.
//
// Sign anchor used throughout the project: a positive theta_x drives <Y>
// negative, a positive theta_y drives <X> positive.

#include <cmath>
#include <string>

#include "qmetro/numkernel.hpp"

namespace qmetro {

inline constexpr int kMaxCopies = 7;

struct ProbeModel {
  double epsilon = 0.0;
  int copies = 1;
  double theta_x = 0.0;  // reference point, radians
  double theta_y = 0.0;

  Eigen::Index dimension() const { return Eigen::Index{1} << copies; }
};

struct ModelDerivatives {
  CMatrix state;
  CMatrix d_theta_x;
  CMatrix d_theta_y;

  const CMatrix &derivative(int i) const { return i == 0 ? d_theta_x : d_theta_y; }
};

inline void check_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw Error(ErrorKind::EpsilonOutOfRange, "epsilon must lie in [0, 1), got " +
                                                  std::to_string(epsilon));
}

inline void check_copies(int m) {
  if (m < 1) throw Error(ErrorKind::DimensionMismatch, "copies must be >= 1");
  if (m > kMaxCopies)
    throw Error(ErrorKind::DimensionTooLarge,
                "at most " + std::to_string(kMaxCopies) + " copies supported");
}

inline CMatrix depolarize(const CMatrix &rho, double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw Error(ErrorKind::POutOfRange, "depolarising probability must be in [0, 1]");
  const auto d = static_cast<double>(rho.rows());
  return (1.0 - p) * rho + p * CMatrix::Identity(rho.rows(), rho.cols()) / d;
}

inline CMatrix single_copy_state(double theta_x, double theta_y, double epsilon) {
  check_epsilon(epsilon);
  // exp(-i(tx X + ty Y)/2) = cos(t/2) I - i sin(t/2) (n.sigma), t = |(tx, ty)|
  const double t = std::hypot(theta_x, theta_y);
  CMatrix u = std::cos(t / 2) * pauli::I();
  if (t > 0.0) {
    const CMatrix gen = (theta_x * pauli::X() + theta_y * pauli::Y()) / t;
    u += cplx(0, -std::sin(t / 2)) * gen;
  }
  const CVector psi = u.col(0);
  const CMatrix pure = psi * psi.adjoint();
  return hermitian_part(depolarize(pure, epsilon));
}

inline CMatrix multi_copy_state(double theta_x, double theta_y, double epsilon, int m) {
  check_copies(m);
  const CMatrix one = single_copy_state(theta_x, theta_y, epsilon);
  CMatrix out = one;
  for (int k = 1; k < m; ++k) out = kron(out, one);
  return out;
}

inline CMatrix model_state(const ProbeModel &model) {
  return multi_copy_state(model.theta_x, model.theta_y, model.epsilon, model.copies);
}

/// Exact derivatives at theta = 0; for m > 1 the product rule over tensor slots.
inline ModelDerivatives derivatives_at_origin(double epsilon, int m) {
  check_epsilon(epsilon);
  check_copies(m);
  const CMatrix rho1 = single_copy_state(0.0, 0.0, epsilon);
  const CMatrix dx1 = -(1.0 - epsilon) * pauli::Y() / 2.0;
  const CMatrix dy1 = (1.0 - epsilon) * pauli::X() / 2.0;
  ModelDerivatives out{rho1, dx1, dy1};
  for (int k = 1; k < m; ++k) {
    out.d_theta_x = kron(out.d_theta_x, rho1) + kron(out.state, dx1);
    out.d_theta_y = kron(out.d_theta_y, rho1) + kron(out.state, dy1);
    out.state = kron(out.state, rho1);
  }
  return out;
}

inline ModelDerivatives derivatives_at_origin(const ProbeModel &model) {
  return derivatives_at_origin(model.epsilon, model.copies);
}

}  // namespace qmetro
