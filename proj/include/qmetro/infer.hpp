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

// Estimation from outcome counts: the locally unbiased linear estimator,
// additive calibration, mean squared error, bootstrap and a KS check of the
// per-run error distribution.

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qmetro/povm.hpp"
#include "qmetro/seed.hpp"
#include "qmetro/sim.hpp"

namespace qmetro {

struct LinearEstimator {
  RVector xi_x;  // radians per outcome
  RVector xi_y;
  Mat2 fisher = Mat2::Zero();  // per shot
  double epsilon = 0.0;
  std::string scheme;

  Eigen::Index outcomes() const { return xi_x.size(); }
  Mat2 covariance() const { return fisher.inverse(); }
};

/// xi_j,k = sum_i (J^-1)_ji dp_i,k / p_k; outcomes with p_k = 0 get xi = 0.
inline LinearEstimator build_estimator(const RVector &p, const RVector &dpx, const RVector &dpy) {
  if (p.size() == 0) throw Error(ErrorKind::EmptyInput, "no outcomes");
  if (dpx.size() != p.size() || dpy.size() != p.size())
    throw Error(ErrorKind::DimensionMismatch, "derivative length differs from outcome count");
  const FisherInfo f = fisher_from_probabilities(p, dpx, dpy);
  const double det = f.matrix.determinant();
  if (!(det >= 1e-12))
    throw Error(ErrorKind::SingularFisher, "det J = " + std::to_string(det));
  const Mat2 inv = f.matrix.inverse();
  LinearEstimator e;
  e.fisher = f.matrix;
  e.xi_x = RVector::Zero(p.size());
  e.xi_y = RVector::Zero(p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) < 1e-12) continue;
    e.xi_x(k) = (inv(0, 0) * dpx(k) + inv(0, 1) * dpy(k)) / p(k);
    e.xi_y(k) = (inv(1, 0) * dpx(k) + inv(1, 1) * dpy(k)) / p(k);
  }
  return e;
}

inline LinearEstimator build_estimator(const Povm &povm, const ProbeModel &model) {
  const OutcomeModel o = outcome_model(povm, derivatives_at_origin(model));
  LinearEstimator e = build_estimator(o.p, o.dp[0], o.dp[1]);
  e.epsilon = model.epsilon;
  return e;
}

/// theta_j = sum_k (n_k / N) xi_j,k.
inline Eigen::Vector2d estimate(const Counts &counts, const LinearEstimator &e) {
  if (static_cast<Eigen::Index>(counts.size()) != e.outcomes())
    throw Error(ErrorKind::DimensionMismatch, "count vector does not match the estimator");
  std::int64_t total = 0;
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (std::size_t k = 0; k < counts.size(); ++k) {
    total += counts[k];
    const auto i = static_cast<Eigen::Index>(k);
    acc += static_cast<double>(counts[k]) * Eigen::Vector2d(e.xi_x(i), e.xi_y(i));
  }
  if (total <= 0) throw Error(ErrorKind::EmptyCounts, "no shots recorded");
  return acc / static_cast<double>(total);
}

// --- mitigation -------------------------------------------------------------

enum class MitigationKind { Shift, ShiftAndScale };

struct MitigationModel {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  // Only ShiftAndScale moves this off 1; kept to reproduce the biased variant.
  Eigen::Vector2d scale = Eigen::Vector2d::Ones();
  int points = 30;
  double range = 0.2;
  std::int64_t fitted_at = -1;  // run index
  MitigationKind kind = MitigationKind::Shift;

  Eigen::Vector2d apply(const Eigen::Vector2d &raw) const { return scale.cwiseProduct(raw) + c; }
};

/// Raw estimate at a known angle pair; the seed selects the shot noise.
using EstimateBackend = std::function<Eigen::Vector2d(const Eigen::Vector2d &theta, std::uint64_t seed)>;

inline std::vector<double> calibration_angles(int points, double range) {
  if (points < 1 || !(range >= 0.0))
    throw Error(ErrorKind::ConfigError, "calibration needs points >= 1 and range >= 0");
  std::vector<double> out;
  for (int i = 0; i < points; ++i)
    out.push_back(points == 1 ? 0.0 : -range + 2.0 * range * i / (points - 1));
  return out;
}

/// Fits theta_true = theta_noisy + c on `points` angles theta_x = theta_y
/// spread evenly over [-range, range].
inline MitigationModel calibrate(const EstimateBackend &backend, int points = 30, double range = 0.2,
                                 std::uint64_t seed = 0,
                                 MitigationKind kind = MitigationKind::Shift) {
  const std::vector<double> angles = calibration_angles(points, range);
  MitigationModel m;
  m.points = points;
  m.range = range;
  m.kind = kind;
  std::vector<Eigen::Vector2d> truth, raw;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const Eigen::Vector2d t(angles[i], angles[i]);
    truth.push_back(t);
    raw.push_back(backend(t, derive_seed(seed, {i})));
  }
  const double n = static_cast<double>(angles.size());
  for (int j = 0; j < 2; ++j) {
    double mt = 0, mr = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) mt += truth[i](j), mr += raw[i](j);
    mt /= n;
    mr /= n;
    if (kind == MitigationKind::ShiftAndScale && points > 1) {
      double sxy = 0, sxx = 0;
      for (std::size_t i = 0; i < raw.size(); ++i) {
        sxy += (raw[i](j) - mr) * (truth[i](j) - mt);
        sxx += (raw[i](j) - mr) * (raw[i](j) - mr);
      }
      m.scale(j) = sxx > 0 ? sxy / sxx : 1.0;
    }
    m.c(j) = mt - m.scale(j) * mr;
  }
  return m;
}

// --- runs and errors --------------------------------------------------------

struct RunRecord {
  std::int64_t run_index = 0;
  Eigen::Vector2d theta_true = Eigen::Vector2d::Zero();
  Eigen::Vector2d theta_hat_raw = Eigen::Vector2d::Zero();
  std::optional<Eigen::Vector2d> theta_hat_mitigated;
  std::string scheme;
  std::int64_t shots_used = 0;
  std::int64_t copies_consumed = 0;

  const Eigen::Vector2d &best_estimate() const {
    return theta_hat_mitigated ? *theta_hat_mitigated : theta_hat_raw;
  }
};

struct MseResult {
  double mse = 0.0;
  double scaled_mse = 0.0;
};

enum class EstimateKind { Raw, Mitigated, Best };

inline const Eigen::Vector2d &pick(const RunRecord &r, EstimateKind kind) {
  if (kind == EstimateKind::Raw) return r.theta_hat_raw;
  if (kind == EstimateKind::Mitigated && !r.theta_hat_mitigated)
    throw Error(ErrorKind::EmptyInput, "record has no mitigated estimate");
  return r.best_estimate();
}

/// Squared error summed over both angles, one value per run.
inline std::vector<double> squared_errors(const std::vector<RunRecord> &records,
                                          EstimateKind kind = EstimateKind::Best) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto &r : records) out.push_back((r.theta_true - pick(r, kind)).squaredNorm());
  return out;
}

/// Per-axis mean squared errors scaled by copies: the measured (v_x, v_y).
inline Eigen::Vector2d scaled_axis_mse(const std::vector<RunRecord> &records,
                                       EstimateKind kind = EstimateKind::Best) {
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "no run records");
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (const auto &r : records) acc += (r.theta_true - pick(r, kind)).cwiseAbs2();
  return acc / static_cast<double>(records.size()) *
         static_cast<double>(records.front().copies_consumed);
}

inline MseResult mse(const std::vector<RunRecord> &records, EstimateKind kind = EstimateKind::Best) {
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "no run records");
  for (const auto &r : records)
    if (r.copies_consumed != records.front().copies_consumed)
      throw Error(ErrorKind::ConfigError, "records mix different resource counts");
  const std::vector<double> se = squared_errors(records, kind);
  MseResult out;
  for (double v : se) out.mse += v;
  out.mse /= static_cast<double>(se.size());
  out.scaled_mse = out.mse * static_cast<double>(records.front().copies_consumed);
  return out;
}

// --- bootstrap --------------------------------------------------------------

/// Standard deviation over B resamples of a statistic computed from resampled
/// indices.
inline double bootstrap_std(std::size_t n, const std::function<double(const std::vector<std::size_t> &)> &stat,
                            int resamples = 1000, std::uint64_t seed = 0) {
  if (n < 2) throw Error(ErrorKind::TooFewValues, "bootstrap needs at least 2 values");
  if (resamples < 2) throw Error(ErrorKind::TooFewValues, "bootstrap needs at least 2 resamples");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_index(0, n - 1);
  std::vector<std::size_t> idx(n);
  std::vector<double> stats(static_cast<std::size_t>(resamples));
  for (auto &s : stats) {
    for (auto &i : idx) i = pick_index(rng);
    s = stat(idx);
  }
  double mean = 0.0;
  for (double s : stats) mean += s;
  mean /= static_cast<double>(stats.size());
  double var = 0.0;
  for (double s : stats) var += (s - mean) * (s - mean);
  return std::sqrt(var / static_cast<double>(stats.size() - 1));
}

/// Bootstrap standard deviation of the sample mean.
inline double bootstrap_std(const std::vector<double> &values, int resamples = 1000,
                            std::uint64_t seed = 0) {
  return bootstrap_std(
      values.size(),
      [&](const std::vector<std::size_t> &idx) {
        double s = 0.0;
        for (std::size_t i : idx) s += values[i];
        return s / static_cast<double>(idx.size());
      },
      resamples, seed);
}

// --- chi-squared shape ------------------------------------------------------

struct ChiSquareCheck {
  double ks_statistic = 0.0;
  double p_value = 0.0;
  double scale = 0.0;  // values ~ scale * chi2(dof)
  double dof = 2.0;
  bool pass = false;
};

/// Asymptotic Kolmogorov tail probability with Stephens' small-sample
/// correction.
inline double kolmogorov_p_value(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// KS test of `values` against scale * chi2(dof) with the scale fitted from
/// the sample mean. Passes when p >= alpha.
inline ChiSquareCheck chisq_check(std::vector<double> values, double dof = 2.0, double alpha = 0.01) {
  if (values.size() < 100) throw Error(ErrorKind::TooFewValues, "chi-squared check needs >= 100 values");
  if (!(dof > 0)) throw Error(ErrorKind::ConfigError, "degrees of freedom must be positive");
  ChiSquareCheck out;
  out.dof = dof;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  out.scale = mean / dof;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = std::max(values[i], 0.0) / out.scale;
    const double f = boost::math::gamma_p(dof / 2.0, x / 2.0);
    out.ks_statistic = std::max({out.ks_statistic, (static_cast<double>(i) + 1.0) / n - f,
                                 f - static_cast<double>(i) / n});
  }
  out.p_value = kolmogorov_p_value(out.ks_statistic, values.size());
  out.pass = out.p_value >= alpha;
  return out;
}

}  // namespace qmetro
