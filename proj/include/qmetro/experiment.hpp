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

// End-to-end simulated experiments: probe -> measurement -> compiled circuit ->
// noisy simulation -> estimate -> optional additive calibration.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "qmetro/bounds.hpp"
#include "qmetro/infer.hpp"
#include "qmetro/povm.hpp"
#include "qmetro/seed.hpp"
#include "qmetro/sim.hpp"
#include "qmetro/synth.hpp"

namespace qmetro {

enum class Scheme { Single = 1, Two = 2, Three = 3 };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Single: return "single";
    case Scheme::Two: return "two";
    case Scheme::Three: return "three";
  }
  return "?";
}

inline Scheme scheme_from_string(const std::string &s) {
  if (s == "single") return Scheme::Single;
  if (s == "two") return Scheme::Two;
  if (s == "three") return Scheme::Three;
  throw Error(ErrorKind::ConfigError, "scheme must be single, two or three, got '" + s + "'");
}

inline int copies_of(Scheme s) { return static_cast<int>(s); }

/// 512 shots per circuit, except 341 for three copies, so every scheme uses
/// about 1024 probe copies per run.
inline int default_shots(Scheme s) { return s == Scheme::Three ? 341 : 512; }

struct MitigationConfig {
  bool enabled = true;
  int points = 30;
  double range = 0.2;
  int recalib_every = 40;
  MitigationKind kind = MitigationKind::Shift;
};

/// Ideal: the estimator assumes a noiseless device, as an experimenter who has
/// not characterised the noise would. NoiseAware: built from the noisy
/// outcome model, so it stays locally unbiased and its MSE tracks the noisy
/// Fisher information.
enum class EstimatorModel { Ideal, NoiseAware };

struct ExperimentConfig {
  double epsilon = 0.5;
  std::vector<Eigen::Vector2d> theta_grid{Eigen::Vector2d::Zero()};
  Scheme scheme = Scheme::Two;
  int shots_per_circuit = 0;  // 0: scheme default
  int runs = 400;
  std::uint64_t seed = 1;
  NoiseModel noise;
  MitigationConfig mitigation;
  EstimatorModel estimator = EstimatorModel::Ideal;
  double weight_w = 0.5;
  std::uint64_t optimizer_seed = 1;
  int optimizer_restarts = 20;
  std::string cache_dir;  // empty: in-memory cache only

  int shots() const { return shots_per_circuit > 0 ? shots_per_circuit : default_shots(scheme); }
};

inline void validate(const ExperimentConfig &c) {
  const auto bad = [](const std::string &why) { throw Error(ErrorKind::ConfigError, why); };
  check_epsilon(c.epsilon);
  validate(c.noise);
  if (c.theta_grid.empty()) bad("theta grid is empty");
  for (const auto &t : c.theta_grid)
    if (!t.allFinite()) bad("theta must be finite");
  if (c.shots_per_circuit < 0) bad("shots_per_circuit must be positive");
  if (c.runs < 1) bad("runs must be >= 1");
  if (!(c.weight_w > 0.0 && c.weight_w < 1.0)) bad("weight_w must lie in (0, 1)");
  if (c.mitigation.enabled) {
    if (c.mitigation.points < 1) bad("mitigation.points must be >= 1");
    if (!(c.mitigation.range >= 0.0)) bad("mitigation.range must be >= 0");
    if (c.mitigation.recalib_every < 1) bad("mitigation.recalib_every must be >= 1");
  }
  if (c.optimizer_restarts < 1) bad("optimizer.restarts must be >= 1");
}

// --- measurement apparatus --------------------------------------------------

/// Compiled circuits of one scheme plus the estimator built from their
/// outcome model (noiseless unless the config asks for a noise-aware one).
struct Apparatus {
  Scheme scheme = Scheme::Two;
  double epsilon = 0.0;
  std::vector<Circuit> circuits;
  std::vector<double> allocation;  // share of shots per circuit
  Povm povm;                        // abstract measurement the circuits implement
  LinearEstimator estimator;

  int copies() const { return copies_of(scheme); }
};

namespace detail {

inline Circuit compile_basis(const CMatrix &basis) {
  const CMatrix u = basis_to_unitary(basis);
  if (u.rows() == 2) {
    Circuit c;
    c.width = 1;
    emit_zyz(c, u, 0);
    fix_global_phase(c, u);
    return c;
  }
  if (u.rows() == 4) return kak(u).circuit;
  if (u.rows() == 8) return synth_threequbit(u);
  throw Error(ErrorKind::DimensionTooLarge, "circuits are compiled for at most three qubits");
}

inline std::string cache_key(double eps, int m, double w, std::uint64_t seed) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "povm_eps%.17g_m%d_w%.17g_seed%llu.json", eps, m, w,
                static_cast<unsigned long long>(seed));
  return buf;
}

inline Povm optimized_povm(double eps, int m, double w, std::uint64_t seed, int restarts,
                           const std::string &cache_dir) {
  static std::mutex lock;
  static std::map<std::string, Povm> memory;
  const std::string key = cache_key(eps, m, w, seed);
  {
    const std::lock_guard<std::mutex> guard(lock);
    if (auto it = memory.find(key); it != memory.end()) return it->second;
  }
  Povm p;
  const std::filesystem::path file =
      cache_dir.empty() ? std::filesystem::path() : std::filesystem::path(cache_dir) / key;
  if (!file.empty() && std::filesystem::exists(file)) {
    std::ifstream in(file);
    p = povm_from_json(nlohmann::json::parse(in));
  } else {
    OptimizeOptions opt;
    opt.seed = seed;
    opt.restarts = restarts;
    try {
      p = optimize_collective(ProbeModel{eps, m, 0.0, 0.0}, w, opt);
    } catch (const TargetNotReachedError &e) {
      // Projective measurements cannot reach every weighted target; keep the best found.
      std::cerr << "warning: " << e.what() << "; using the best measurement found\n";
      p = e.best();
    }
    if (!file.empty()) {
      std::filesystem::create_directories(file.parent_path());
      std::ofstream(file) << to_json(p).dump(1) << '\n';
    }
  }
  const std::lock_guard<std::mutex> guard(lock);
  memory.emplace(key, p);
  return p;
}

}  // namespace detail

inline Apparatus build_apparatus(const ExperimentConfig &cfg) {
  Apparatus a;
  a.scheme = cfg.scheme;
  a.epsilon = cfg.epsilon;
  const int m = copies_of(cfg.scheme);
  std::vector<CMatrix> bases;
  if (cfg.scheme == Scheme::Single) {
    const SingleCopyScheme s = optimal_single_copy(cfg.epsilon);
    bases = {s.povm_x.bases.front(), s.povm_y.bases.front()};
    a.allocation = {s.allocation, 1.0 - s.allocation};
    a.povm = povm_from_mixture(bases, a.allocation);
  } else {
    a.povm = detail::optimized_povm(cfg.epsilon, m, cfg.weight_w, cfg.optimizer_seed,
                                    cfg.optimizer_restarts, cfg.cache_dir);
    bases = a.povm.bases;
    a.allocation = a.povm.mixing;
  }
  a.povm.epsilon = cfg.epsilon;
  a.povm.copies = m;
  for (const CMatrix &b : bases) a.circuits.push_back(detail::compile_basis(b));

  // Estimator from the compiled circuits, so it sees exactly what is sampled.
  const ModelDerivatives md = derivatives_at_origin(cfg.epsilon, m);
  const NoiseModel seen = cfg.estimator == EstimatorModel::NoiseAware ? cfg.noise : NoiseModel{};
  std::vector<RVector> parts[3];
  for (std::size_t i = 0; i < a.circuits.size(); ++i) {
    parts[0].push_back(a.allocation[i] * outcome_linear(md.state, a.circuits[i], seen));
    parts[1].push_back(a.allocation[i] * outcome_linear(md.d_theta_x, a.circuits[i], seen));
    parts[2].push_back(a.allocation[i] * outcome_linear(md.d_theta_y, a.circuits[i], seen));
  }
  RVector cat[3];
  for (int j = 0; j < 3; ++j) {
    Eigen::Index n = 0;
    for (const auto &v : parts[j]) n += v.size();
    cat[j].resize(n);
    Eigen::Index at = 0;
    for (const auto &v : parts[j]) cat[j].segment(at, v.size()) = v, at += v.size();
  }
  a.estimator = build_estimator(cat[0], cat[1], cat[2]);
  a.estimator.epsilon = cfg.epsilon;
  a.estimator.scheme = to_string(cfg.scheme);
  return a;
}

/// Outcome distributions of every circuit for the probe at theta.
inline std::vector<OutcomeDistribution> distributions(const Apparatus &a, const Eigen::Vector2d &theta,
                                                      const NoiseModel &noise) {
  const CMatrix rho = multi_copy_state(theta(0), theta(1), a.epsilon, a.copies());
  std::vector<OutcomeDistribution> out;
  for (const auto &c : a.circuits) out.push_back(outcome_probs(rho, c, noise));
  return out;
}

/// One run: sample every circuit and estimate from the pooled counts. The
/// shot split follows the allocation; equal allocations give equal shots.
inline Eigen::Vector2d run_once(const Apparatus &a, const std::vector<OutcomeDistribution> &dists,
                                int shots_per_circuit, std::uint64_t seed) {
  Counts pooled;
  const double total = static_cast<double>(shots_per_circuit) * static_cast<double>(dists.size());
  for (std::size_t i = 0; i < dists.size(); ++i) {
    const auto shots = static_cast<std::int64_t>(std::llround(total * a.allocation[i]));
    const Counts c = shots > 0 ? sample(dists[i], shots, derive_seed(seed, {i}))
                               : Counts(dists[i].size(), 0);
    pooled.insert(pooled.end(), c.begin(), c.end());
  }
  return estimate(pooled, a.estimator);
}

inline std::int64_t copies_per_run(const ExperimentConfig &cfg, const Apparatus &a) {
  return static_cast<std::int64_t>(cfg.shots()) * static_cast<std::int64_t>(a.circuits.size()) *
         a.copies();
}

namespace tag {
inline constexpr std::uint64_t kRun = 1;
inline constexpr std::uint64_t kCalibration = 2;
inline constexpr std::uint64_t kBootstrap = 3;
}  // namespace tag

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RunRecord> records;  // sorted by run_index; grid point g owns [g*runs, (g+1)*runs)
  std::vector<MitigationModel> calibrations;
};

/// Runs config.runs repetitions at every grid point. Run r draws its shots
/// from derive_seed(seed, {r, scheme, run-tag}); the calibration before run r
/// uses the calibration tag.
inline ExperimentResult run_experiment(const ExperimentConfig &cfg) {
  validate(cfg);
  const Apparatus a = build_apparatus(cfg);
  const auto scheme_id = static_cast<std::uint64_t>(cfg.scheme);
  const int shots = cfg.shots();

  std::map<std::pair<double, double>, std::vector<OutcomeDistribution>> cache;
  const auto dists_at = [&](const Eigen::Vector2d &t) -> const std::vector<OutcomeDistribution> & {
    const auto key = std::make_pair(t(0), t(1));
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, distributions(a, t, cfg.noise)).first;
    return it->second;
  };
  const EstimateBackend backend = [&](const Eigen::Vector2d &t, std::uint64_t seed) {
    return run_once(a, dists_at(t), shots, seed);
  };

  ExperimentResult out;
  out.config = cfg;
  MitigationModel model;
  std::int64_t r = 0;
  for (const auto &theta : cfg.theta_grid) {
    for (int i = 0; i < cfg.runs; ++i, ++r) {
      if (cfg.mitigation.enabled && r % cfg.mitigation.recalib_every == 0) {
        model = calibrate(backend, cfg.mitigation.points, cfg.mitigation.range,
                          derive_seed(cfg.seed, {static_cast<std::uint64_t>(r), scheme_id,
                                                 tag::kCalibration}),
                          cfg.mitigation.kind);
        model.fitted_at = r;
        out.calibrations.push_back(model);
      }
      RunRecord rec;
      rec.run_index = r;
      rec.theta_true = theta;
      rec.theta_hat_raw = backend(
          theta, derive_seed(cfg.seed, {static_cast<std::uint64_t>(r), scheme_id, tag::kRun}));
      if (cfg.mitigation.enabled) rec.theta_hat_mitigated = model.apply(rec.theta_hat_raw);
      rec.scheme = to_string(cfg.scheme);
      rec.shots_used = static_cast<std::int64_t>(shots) * static_cast<std::int64_t>(a.circuits.size());
      rec.copies_consumed = copies_per_run(cfg, a);
      out.records.push_back(std::move(rec));
    }
  }
  return out;
}

// --- reports ----------------------------------------------------------------

inline constexpr std::uint64_t kReportBootstrapSeed = 0x5eed;

struct Report {
  std::size_t runs = 0;
  std::string scheme;
  std::int64_t copies_per_run = 0;
  bool mitigated = false;
  MseResult result;       // mitigated when available, raw otherwise
  MseResult raw;
  double bootstrap_std = 0.0;  // of scaled_mse
  Eigen::Vector2d axis_variances = Eigen::Vector2d::Zero();  // per copy
  std::optional<ChiSquareCheck> chisq;
  // Filled when epsilon is known.
  std::optional<double> epsilon;
  std::optional<double> lw_margin;
  std::optional<double> lw_margin_std;
  std::optional<ClosedForms> bounds;  // n2 reported as 2 n2 in json
};

/// Statistics recomputed from records alone, so a CSV round trip reproduces them.
inline Report summarize(const std::vector<RunRecord> &records, std::optional<double> epsilon = {}) {
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "no run records");
  Report rep;
  rep.runs = records.size();
  rep.scheme = records.front().scheme;
  rep.copies_per_run = records.front().copies_consumed;
  rep.mitigated = records.front().theta_hat_mitigated.has_value();
  rep.result = mse(records, EstimateKind::Best);
  rep.raw = mse(records, EstimateKind::Raw);
  const std::vector<double> se = squared_errors(records, EstimateKind::Best);
  const double scale = static_cast<double>(rep.copies_per_run);
  if (records.size() >= 2) rep.bootstrap_std = scale * bootstrap_std(se, 1000, kReportBootstrapSeed);
  rep.axis_variances = scaled_axis_mse(records, EstimateKind::Best);
  if (records.size() >= 100) rep.chisq = chisq_check(se);
  if (epsilon) {
    rep.epsilon = epsilon;
    rep.bounds = closed_form(*epsilon);
    rep.lw_margin = lw_margin(rep.axis_variances(0), rep.axis_variances(1), *epsilon);
    if (records.size() >= 2) {
      const double eps = *epsilon;
      rep.lw_margin_std = bootstrap_std(
          records.size(),
          [&](const std::vector<std::size_t> &idx) {
            Eigen::Vector2d acc = Eigen::Vector2d::Zero();
            for (std::size_t i : idx)
              acc += (records[i].theta_true - records[i].best_estimate()).cwiseAbs2();
            acc *= scale / static_cast<double>(idx.size());
            return lw_margin(acc(0), acc(1), eps);
          },
          1000, kReportBootstrapSeed);
    }
  }
  return rep;
}

inline nlohmann::json to_json(const Report &r) {
  nlohmann::json j{{"runs", r.runs},
                   {"scheme", r.scheme},
                   {"copies_per_run", r.copies_per_run},
                   {"mitigated", r.mitigated},
                   {"mse", r.result.mse},
                   {"scaled_mse", r.result.scaled_mse},
                   {"mse_raw", r.raw.mse},
                   {"scaled_mse_raw", r.raw.scaled_mse},
                   {"bootstrap_std", r.bootstrap_std},
                   {"v_x", r.axis_variances(0)},
                   {"v_y", r.axis_variances(1)}};
  if (r.chisq)
    j["chisq"] = {{"ks_statistic", r.chisq->ks_statistic},
                  {"p_value", r.chisq->p_value},
                  {"scale", r.chisq->scale},
                  {"pass", r.chisq->pass}};
  if (r.epsilon) j["epsilon"] = *r.epsilon;
  if (r.lw_margin) j["lw_margin"] = *r.lw_margin;
  if (r.lw_margin_std) j["lw_margin_std"] = *r.lw_margin_std;
  if (r.bounds)
    j["bounds"] = {{"n1", r.bounds->n1}, {"two_n2", 2.0 * r.bounds->n2}, {"holevo", r.bounds->holevo}};
  return j;
}

/// Noiseless reports must not sit below the Holevo line by more than 3 sigma.
inline bool below_holevo(const Report &r) {
  return r.bounds && r.result.scaled_mse < r.bounds->holevo - 3.0 * r.bootstrap_std;
}

// --- theta sweeps -----------------------------------------------------------

struct SweepPoint {
  Eigen::Vector2d theta = Eigen::Vector2d::Zero();
  Eigen::Vector2d mean_raw = Eigen::Vector2d::Zero();
  Eigen::Vector2d mean_mitigated = Eigen::Vector2d::Zero();
  Eigen::Vector2d sem_raw = Eigen::Vector2d::Zero();  // standard error of the mean
  Eigen::Vector2d sem_mitigated = Eigen::Vector2d::Zero();
  double scaled_mse_raw = 0.0;
  double scaled_mse_mitigated = 0.0;
  double bootstrap_std_mitigated = 0.0;
};

inline std::vector<SweepPoint> sweep_summary(const ExperimentResult &res) {
  const auto runs = static_cast<std::size_t>(res.config.runs);
  std::vector<SweepPoint> out;
  for (std::size_t g = 0; g < res.config.theta_grid.size(); ++g) {
    const std::vector<RunRecord> slice(res.records.begin() + static_cast<std::ptrdiff_t>(g * runs),
                                       res.records.begin() + static_cast<std::ptrdiff_t>((g + 1) * runs));
    SweepPoint p;
    p.theta = res.config.theta_grid[g];
    const double n = static_cast<double>(slice.size());
    for (const auto &r : slice) {
      p.mean_raw += r.theta_hat_raw / n;
      p.mean_mitigated += r.best_estimate() / n;
    }
    for (const auto &r : slice) {
      p.sem_raw += (r.theta_hat_raw - p.mean_raw).cwiseAbs2();
      p.sem_mitigated += (r.best_estimate() - p.mean_mitigated).cwiseAbs2();
    }
    const double denom = n > 1 ? n * (n - 1) : 1.0;
    p.sem_raw = (p.sem_raw / denom).cwiseSqrt();
    p.sem_mitigated = (p.sem_mitigated / denom).cwiseSqrt();
    p.scaled_mse_raw = mse(slice, EstimateKind::Raw).scaled_mse;
    p.scaled_mse_mitigated = mse(slice, EstimateKind::Best).scaled_mse;
    if (slice.size() >= 2)
      p.bootstrap_std_mitigated =
          static_cast<double>(slice.front().copies_consumed) *
          bootstrap_std(squared_errors(slice, EstimateKind::Best), 1000, kReportBootstrapSeed);
    out.push_back(p);
  }
  return out;
}

/// Norm of the grid-averaged bias vector.
inline double mean_bias(const std::vector<SweepPoint> &pts, bool mitigated) {
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (const auto &p : pts) acc += (mitigated ? p.mean_mitigated : p.mean_raw) - p.theta;
  return (acc / static_cast<double>(pts.size())).norm();
}

}  // namespace qmetro
