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

// qmetro command line.
//
// Exit codes: 0 ok, 2 config or input error, 3 solver / optimizer failure,
// 4 a result failed its statistical check.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qmetro/qmetro.hpp"

namespace {

using namespace qmetro;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitCheck = 4;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::SolverNotConverged:
    case ErrorKind::TargetNotReached:
    case ErrorKind::SingularFisher:
    case ErrorKind::SingularState:
      return kExitSolver;
    default:
      return kExitConfig;
  }
}

// Writes to the file, or to stdout when the path is empty or "-".
class Output {
 public:
  explicit Output(const std::string &path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw Error(ErrorKind::ConfigError, "cannot write " + path);
  }
  std::ostream &stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

nlohmann::json read_json(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::SchemaMismatch, path + ": " + e.what());
  }
}

std::vector<double> grid_values(const std::string &spec) {
  std::vector<double> out;
  for (const auto &t : parse_theta_grid(spec)) out.push_back(t(0));
  return out;
}

// Options shared by simulate and sweep.
struct RunOptions {
  std::string config;
  std::string out;
  std::string report;
  std::optional<std::uint64_t> seed;
  std::optional<double> eps;
  std::optional<double> weight;
  std::optional<int> copies;
  std::optional<std::string> profile;
  bool no_mitigation = false;
};

void add_run_options(CLI::App *cmd, RunOptions &o) {
  cmd->add_option("--config", o.config, "experiment config file")->required();
  cmd->add_option("--out", o.out, "CSV output (default stdout)");
  cmd->add_option("--seed", o.seed, "override seed");
  cmd->add_option("--eps", o.eps, "override epsilon");
  cmd->add_option("--weight", o.weight, "override weight_w");
  cmd->add_option("--copies", o.copies, "override scheme by copy count (1, 2, 3)");
  cmd->add_option("--profile", o.profile, "override noise profile (ideal, low, high)");
  cmd->add_flag("--no-mitigation", o.no_mitigation, "disable calibration");
}

ExperimentConfig resolve(const RunOptions &o) {
  ExperimentConfig c = load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.eps) c.epsilon = *o.eps;
  if (o.weight) c.weight_w = *o.weight;
  if (o.copies) {
    if (*o.copies < 1 || *o.copies > 3) throw Error(ErrorKind::ConfigError, "--copies must be 1, 2 or 3");
    c.scheme = static_cast<Scheme>(*o.copies);
  }
  if (o.profile) c.noise = noise_profile(*o.profile);
  if (o.no_mitigation) c.mitigation.enabled = false;
  try {
    validate(c);
  } catch (const Error &e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }
  return c;
}

int cmd_bounds(const std::string &grid, int max_copies, const std::string &out) {
  std::vector<BoundsRow> rows;
  for (double eps : grid_values(grid)) {
    rows.push_back(bounds_row(eps, max_copies));
    if (!rows.back().ok()) std::cerr << "epsilon " << eps << ": " << rows.back().status << '\n';
  }
  Output o(out);
  write_bounds_csv(o.stream(), rows, max_copies);
  const bool ok = std::all_of(rows.begin(), rows.end(), [](const BoundsRow &r) { return r.ok(); });
  return ok ? kExitOk : kExitSolver;
}

int cmd_optimize(double eps, int copies, double weight, std::uint64_t seed, int restarts,
                 const std::string &out) {
  OptimizeOptions opt;
  opt.seed = seed;
  opt.restarts = restarts;
  int code = kExitOk;
  Povm p;
  try {
    p = optimize_collective(ProbeModel{eps, copies}, weight, opt);
  } catch (const TargetNotReachedError &e) {
    std::cerr << e.what() << "; writing the best measurement found\n";
    p = e.best();
    code = kExitSolver;
  }
  Output o(out);
  o.stream() << to_json(p).dump(1) << '\n';
  std::cerr << "weighted variance " << p.achieved_value << '\n';
  return code;
}

int cmd_synth(const std::string &in, const std::string &out, bool text) {
  const Povm p = povm_from_json(read_json(in));
  std::vector<CMatrix> bases = p.bases;
  std::vector<double> mixing = p.mixing;
  if (bases.empty()) {
    bases = {basis_of(p)};
    mixing = {1.0};
  }
  Output o(out);
  nlohmann::json circuits = nlohmann::json::array();
  for (std::size_t i = 0; i < bases.size(); ++i) {
    const Circuit c = detail::compile_basis(bases[i]);
    if (text) {
      o.stream() << "# circuit " << i << " mixing " << fmt17(mixing[i]) << " cx " << c.cx_count() << '\n'
                 << to_text(c);
    }
    circuits.push_back(to_json(c));
  }
  if (!text) o.stream() << nlohmann::json{{"circuits", circuits}, {"mixing", mixing}}.dump(1) << '\n';
  return kExitOk;
}

int cmd_simulate(const RunOptions &o) {
  const ExperimentConfig cfg = resolve(o);
  const ExperimentResult res = run_experiment(cfg);
  {
    Output csv(o.out);
    write_runs_csv(csv.stream(), res.records);
  }
  const Report rep = summarize(res.records, cfg.epsilon);
  nlohmann::json j = to_json(rep);
  j["calibrations"] = res.calibrations.size();
  j["noise"] = cfg.noise.name.empty() ? "ideal" : cfg.noise.name;
  if (!o.report.empty()) {
    Output r(o.report);
    r.stream() << j.dump(1) << '\n';
  } else {
    std::cerr << j.dump(1) << '\n';
  }
  if (cfg.noise.noiseless() && below_holevo(rep)) {
    std::cerr << "scaled MSE " << rep.result.scaled_mse << " lies more than 3 sigma below the Holevo bound\n";
    return kExitCheck;
  }
  return kExitOk;
}

int cmd_sweep(const RunOptions &o) {
  const ExperimentConfig cfg = resolve(o);
  for (const auto &t : cfg.theta_grid)
    if (t.cwiseAbs().maxCoeff() > 0.2 + 1e-12)
      throw Error(ErrorKind::ConfigError, "sweep grid must lie within +-0.2 rad");
  const ExperimentResult res = run_experiment(cfg);
  const std::vector<SweepPoint> pts = sweep_summary(res);
  Output csv(o.out);
  write_sweep_csv(csv.stream(), pts);
  std::cerr << "mean bias raw " << mean_bias(pts, false);
  if (cfg.mitigation.enabled) std::cerr << ", mitigated " << mean_bias(pts, true);
  std::cerr << '\n';
  return kExitOk;
}

int cmd_tradeoff(double eps, const std::string &weights, const std::string &out) {
  const auto rows = tradeoff_rows(eps, grid_values(weights));
  Output o(out);
  write_tradeoff_csv(o.stream(), rows);
  return kExitOk;
}

int cmd_report(const std::string &in, std::optional<double> eps, const std::string &out) {
  std::ifstream f(in);
  if (!f) throw Error(ErrorKind::ConfigError, "cannot open " + in);
  const Report rep = summarize(read_runs_csv(f), eps);
  Output o(out);
  o.stream() << to_json(rep).dump(1) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"qmetro: multi-parameter estimation bounds, collective measurements and simulated experiments"};
  app.require_subcommand(1);

  std::string out;

  auto *bounds = app.add_subcommand("bounds", "bound table over an epsilon grid");
  std::string eps_grid = "0:0.9:10";
  int max_copies = 3;
  bounds->add_option("--eps-grid", eps_grid, "start:stop:count");
  bounds->add_option("--max-copies", max_copies, "largest copy number (<= 7)");
  bounds->add_option("--out", out, "CSV output");

  auto *optimize = app.add_subcommand("optimize", "search a collective measurement");
  double eps = 0.5;
  int copies = 2;
  double weight = 0.5;
  std::uint64_t seed = 1;
  int restarts = 20;
  optimize->add_option("--eps", eps);
  optimize->add_option("--copies", copies);
  optimize->add_option("--weight", weight);
  optimize->add_option("--seed", seed);
  optimize->add_option("--restarts", restarts);
  optimize->add_option("--out", out, "POVM JSON output");

  auto *synth = app.add_subcommand("synth", "compile a POVM JSON into circuits");
  std::string in;
  bool text = false;
  synth->add_option("--in", in, "POVM JSON")->required();
  synth->add_option("--out", out, "circuit JSON output");
  synth->add_flag("--text", text, "one gate per line instead of JSON");

  RunOptions sim_opts;
  auto *simulate = app.add_subcommand("simulate", "run a simulated experiment");
  add_run_options(simulate, sim_opts);
  simulate->add_option("--report", sim_opts.report, "report JSON output (default stderr)");

  RunOptions sweep_opts;
  auto *sweep = app.add_subcommand("sweep", "per-theta bias and MSE over a theta grid");
  add_run_options(sweep, sweep_opts);

  auto *tradeoff = app.add_subcommand("tradeoff", "weighted variance trade-off curves");
  std::string weights = "0.1:0.9:9";
  double trade_eps = 0.5;
  tradeoff->add_option("--eps", trade_eps);
  tradeoff->add_option("--weights", weights, "start:stop:count in (0, 1)");
  tradeoff->add_option("--out", out, "CSV output");

  auto *report = app.add_subcommand("report", "re-analyse a runs CSV");
  std::optional<double> report_eps;
  report->add_option("--in", in, "runs CSV")->required();
  report->add_option("--eps", report_eps, "epsilon, adds bound references and the LW margin");
  report->add_option("--out", out, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*bounds) return cmd_bounds(eps_grid, max_copies, out);
    if (*optimize) return cmd_optimize(eps, copies, weight, seed, restarts, out);
    if (*synth) return cmd_synth(in, out, text);
    if (*simulate) return cmd_simulate(sim_opts);
    if (*sweep) return cmd_sweep(sweep_opts);
    if (*tradeoff) return cmd_tradeoff(trade_eps, weights, out);
    if (*report) return cmd_report(in, report_eps, out);
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
