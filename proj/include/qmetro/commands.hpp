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

// Table builders behind the CLI subcommands. They return plain rows so tests
// can check values without parsing CSV.

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qmetro/bounds.hpp"
#include "qmetro/csv.hpp"
#include "qmetro/experiment.hpp"

namespace qmetro {

inline constexpr double kCrossCheckTol = 1e-5;

struct BoundsRow {
  double epsilon = 0.0;
  double sld = 0.0;
  std::vector<double> n;  // n[m-1] = N_m, variance sum of one m-copy measurement
  double holevo = 0.0;
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
  /// 1 - H / (m N_m): how far m-copy measurements stay from the Holevo limit.
  double gap(int m) const { return 1.0 - holevo / (m * n[static_cast<std::size_t>(m - 1)]); }
};

namespace detail {

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(b), 1.0);
}

}  // namespace detail

/// SDP bounds for one epsilon, cross-checked against the closed forms for
/// N_1, N_2 and the Holevo bound. Solver failures land in status.
inline BoundsRow bounds_row(double epsilon, int max_copies, const BoundOptions &opt = {}) {
  if (!(epsilon >= 0.0 && epsilon <= 0.95))
    throw Error(ErrorKind::ConfigError, "epsilon grid must lie in [0, 0.95]");
  if (max_copies < 1 || max_copies > kMaxCopies)
    throw Error(ErrorKind::ConfigError, "max copies must lie in [1, 7]");
  BoundsRow row;
  row.epsilon = epsilon;
  const Mat2 id = Mat2::Identity();
  const ClosedForms cf = closed_form(epsilon);
  std::vector<std::string> issues;
  try {
    row.sld = sld_bound(ProbeModel{epsilon, 1}, id).value;
    for (int m = 1; m <= max_copies; ++m)
      row.n.push_back(nagaoka_hayashi_sdp(ProbeModel{epsilon, m}, id, opt).value);
    row.holevo = holevo_sdp(ProbeModel{epsilon, 1}, id, opt).value;
  } catch (const Error &e) {
    row.n.resize(static_cast<std::size_t>(max_copies), std::nan(""));
    row.status = e.what();
    return row;
  }
  if (!detail::close_rel(row.n[0], cf.n1, kCrossCheckTol)) issues.push_back("n1");
  if (max_copies >= 2 && !detail::close_rel(row.n[1], cf.n2, kCrossCheckTol)) issues.push_back("n2");
  if (!detail::close_rel(row.holevo, cf.holevo, kCrossCheckTol)) issues.push_back("holevo");
  if (!detail::close_rel(row.sld, cf.sld_sum, kCrossCheckTol)) issues.push_back("sld");
  if (!issues.empty()) {
    row.status = "closed-form mismatch:";
    for (const auto &s : issues) row.status += " " + s;
  }
  return row;
}

inline void write_bounds_csv(std::ostream &out, const std::vector<BoundsRow> &rows, int max_copies) {
  std::vector<std::string> cols = {"epsilon", "sld"};
  for (int m = 1; m <= max_copies; ++m) cols.push_back("n" + std::to_string(m));
  cols.push_back("holevo");
  for (int m = 1; m <= max_copies; ++m) cols.push_back("gap_" + std::to_string(m));
  cols.push_back("status");
  CsvWriter w(out, cols);
  for (const auto &r : rows) {
    std::vector<std::string> cells = {fmt17(r.epsilon), fmt17(r.sld)};
    for (double v : r.n) cells.push_back(fmt17(v));
    cells.push_back(fmt17(r.holevo));
    for (int m = 1; m <= max_copies; ++m) cells.push_back(fmt17(r.gap(m)));
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    cells.push_back(status);
    w.row(cells);
  }
}

struct TradeoffRow {
  double weight = 0.5;
  TradeoffPoint nagaoka2;  // per copy
  TradeoffPoint holevo;
  double lw_margin_nagaoka2 = 0.0;
  double lw_reference = 0.0;  // (1 - eps)^2, the single-copy ceiling of 1/v_x + 1/v_y
};

/// Trade-off rows for the given weights; w = 0.5 is always included.
inline std::vector<TradeoffRow> tradeoff_rows(double epsilon, std::vector<double> weights,
                                              const BoundOptions &opt = {}) {
  check_epsilon(epsilon);
  for (double w : weights)
    if (!(w > 0.0 && w < 1.0)) throw Error(ErrorKind::ConfigError, "weights must lie in (0, 1)");
  if (std::none_of(weights.begin(), weights.end(), [](double w) { return std::abs(w - 0.5) < 1e-12; }))
    weights.push_back(0.5);
  std::sort(weights.begin(), weights.end());
  std::vector<TradeoffRow> out;
  for (double w : weights) {
    TradeoffRow r;
    r.weight = w;
    r.nagaoka2 = tradeoff_point(ProbeModel{epsilon, 2}, BoundKind::NagaokaHayashi, w,
                                Extraction::Diagonal, opt);
    r.holevo = tradeoff_point(ProbeModel{epsilon, 1}, BoundKind::Holevo, w, Extraction::Diagonal, opt);
    r.lw_margin_nagaoka2 = lw_margin(r.nagaoka2.v_x, r.nagaoka2.v_y, epsilon);
    r.lw_reference = (1.0 - epsilon) * (1.0 - epsilon);
    out.push_back(r);
  }
  return out;
}

inline void write_tradeoff_csv(std::ostream &out, const std::vector<TradeoffRow> &rows) {
  CsvWriter w(out, {"weight", "vx_nagaoka2", "vy_nagaoka2", "vx_holevo", "vy_holevo",
                    "lw_margin_nagaoka2", "lw_reference"});
  for (const auto &r : rows)
    w.row({fmt17(r.weight), fmt17(r.nagaoka2.v_x), fmt17(r.nagaoka2.v_y), fmt17(r.holevo.v_x),
           fmt17(r.holevo.v_y), fmt17(r.lw_margin_nagaoka2), fmt17(r.lw_reference)});
}

inline void write_sweep_csv(std::ostream &out, const std::vector<SweepPoint> &pts) {
  CsvWriter w(out, {"theta_x", "theta_y", "mean_x_raw", "mean_y_raw", "sem_x_raw", "sem_y_raw",
                    "mean_x_mit", "mean_y_mit", "sem_x_mit", "sem_y_mit", "scaled_mse_raw",
                    "scaled_mse_mit", "bootstrap_std_mit"});
  for (const auto &p : pts)
    w.row({fmt17(p.theta(0)), fmt17(p.theta(1)), fmt17(p.mean_raw(0)), fmt17(p.mean_raw(1)),
           fmt17(p.sem_raw(0)), fmt17(p.sem_raw(1)), fmt17(p.mean_mitigated(0)),
           fmt17(p.mean_mitigated(1)), fmt17(p.sem_mitigated(0)), fmt17(p.sem_mitigated(1)),
           fmt17(p.scaled_mse_raw), fmt17(p.scaled_mse_mitigated), fmt17(p.bootstrap_std_mitigated)});
}

}  // namespace qmetro
