// End-to-end acceptance checks. One PASS/FAIL line per criterion; the exit
// status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "qmetro/qmetro.hpp"
#include "test_support.hpp"

using namespace qmetro;

namespace {

// Tolerances, fixed before any run.
constexpr double kClosedFormTol = 1e-12;
constexpr double kSdpRelTol = 1e-5;
constexpr double kPovmGap = 0.005;
constexpr double kZyzTol = 1e-10;
constexpr double kKakTol = 1e-8;
constexpr double kThreeQubitTol = 1e-7;
constexpr double kBornTol = 1e-8;
constexpr double kMseSigmas = 2.0;
constexpr double kLwSigmas = 3.0;
constexpr double kLwSingleSigmas = 2.0;
constexpr double kChisqAlpha = 0.01;
constexpr double kBiasRatio = 5.0;
constexpr double kFloorSigmas = 3.0;
constexpr double kOrderSigmas = 2.0;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double unitary_distance(const CMatrix &a, const CMatrix &b) { return (a - b).cwiseAbs().maxCoeff(); }

Report noiseless_report(Scheme s) {
  ExperimentConfig c;
  c.scheme = s;
  c.mitigation.enabled = false;
  return summarize(run_experiment(c).records, c.epsilon);
}

// --- 1 --------------------------------------------------------------------

void closed_forms(Outcome &o) {
  for (int i = 0; i <= 9; ++i) {
    const double eps = 0.1 * i;
    const double s = (1 - eps) * (1 - eps);
    const ClosedForms cf = closed_form(eps);
    o.require(rel(cf.n1, 4 / s) <= kClosedFormTol, "N1 at eps " + std::to_string(eps));
    o.require(rel(cf.n2, (4 - 2 * eps + eps * eps) / (2 * s)) <= kClosedFormTol, "N2");
    o.require(rel(cf.holevo, (4 - 2 * eps) / s) <= kClosedFormTol, "H");
    const bool strict = cf.holevo < 2 * cf.n2 && 2 * cf.n2 < cf.n1;
    const bool equal = std::abs(cf.holevo - 2 * cf.n2) <= 1e-12 && std::abs(2 * cf.n2 - cf.n1) <= 1e-12;
    o.require(i == 0 ? equal : strict, "hierarchy at eps " + std::to_string(eps));
  }
  const ClosedForms half = closed_form(0.5);
  o.require(half.n1 == 16.0 && half.n2 == 6.5 && half.holevo == 12.0, "eps 0.5 spot values");
  o.detail << "eps 0.5: N1 " << half.n1 << ", N2 " << half.n2 << ", H " << half.holevo;
}

// --- 2 --------------------------------------------------------------------

void sdp_oracle(Outcome &o) {
  double worst = 0.0;
  for (double eps : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const ClosedForms cf = closed_form(eps);
    const Mat2 id = Mat2::Identity();
    const double n1 = nagaoka_hayashi_sdp({eps, 1}, id).value;
    const double n2 = nagaoka_hayashi_sdp({eps, 2}, id).value;
    const double h = holevo_sdp({eps, 1}, id).value;
    for (double r : {rel(n1, cf.n1), rel(n2, cf.n2), rel(h, cf.holevo)}) worst = std::max(worst, r);
  }
  o.require(worst <= kSdpRelTol, "relative error");
  o.detail << "worst relative error " << worst;
}

// --- 3 --------------------------------------------------------------------

void many_copy_bound(Outcome &o) {
  const double h = closed_form(0.5).holevo;
  std::vector<double> gaps;
  double n3 = 0.0;
  for (int m = 1; m <= 7; ++m) {
    const double v = nagaoka_hayashi_sdp({0.5, m}, Mat2::Identity()).value;
    if (m == 3) n3 = 3 * v;
    gaps.push_back(1 - h / (m * v));
  }
  BoundOptions direct, symmetric;
  direct.route = BoundRoute::Direct;
  symmetric.route = BoundRoute::Symmetric;
  const double nd = nagaoka_hayashi_sdp({0.5, 3}, Mat2::Identity(), direct).value;
  const double ns = nagaoka_hayashi_sdp({0.5, 3}, Mat2::Identity(), symmetric).value;
  o.require(rel(ns, nd) <= kSdpRelTol, "direct vs symmetric route at m=3");
  o.require(n3 >= 12.0 && n3 <= 13.0, "3 N3 in [12, 13]");
  o.require(std::abs(gaps[0] - 0.25) <= kSdpRelTol, "gap_1 = 0.25");
  o.require(std::abs(gaps[1] - 1.0 / 13.0) <= kSdpRelTol, "gap_2 = 1/13");
  for (std::size_t m = 1; m < gaps.size(); ++m) o.require(gaps[m] < gaps[m - 1] && gaps[m] > 0, "gaps shrink");
  o.detail << "3 N3 " << n3 << "; gaps";
  for (double g : gaps) o.detail << ' ' << g;
}

// --- 4 --------------------------------------------------------------------

void povm_optimality(Outcome &o) {
  const ProbeModel model{0.5, 2};
  OptimizeOptions opt;
  opt.restarts = 20;
  const Povm p = optimize_collective(model, 0.5, opt);
  const double trace = classical_fisher(p, model).matrix.inverse().trace();
  const double cert = 2 * nagaoka_hayashi_sdp(model, 0.5 * Mat2::Identity()).value;
  o.require(std::abs(trace / 6.5 - 1) <= kPovmGap, "Tr J^-1 within 0.5% of 6.5");
  o.require(trace / cert - 1 <= kPovmGap, "within 0.5% of the SDP certificate");
  o.require(trace >= cert * (1 - kSdpRelTol), "not below the certificate");
  o.detail << "Tr J^-1 " << trace << ", certificate " << cert;
}

// --- 5 --------------------------------------------------------------------

void compilation(Outcome &o) {
  std::mt19937_64 rng(2024);
  double e2 = 0, e4 = 0, e8 = 0;
  int max_cx = 0;
  for (int t = 0; t < 200; ++t) {
    const CMatrix u2 = testing::random_unitary(rng, 2);
    e2 = std::max(e2, unitary_distance(zyz(u2).matrix(), u2));
    const CMatrix u4 = testing::random_unitary(rng, 4);
    const Kak k = kak(u4);
    e4 = std::max(e4, std::max(unitary_distance(k.matrix(), u4), unitary_distance(circuit_unitary(k.circuit), u4)));
    max_cx = std::max(max_cx, k.circuit.cx_count());
    const CMatrix u8 = testing::random_unitary(rng, 8);
    e8 = std::max(e8, unitary_distance(circuit_unitary(synth_threequbit(u8)), u8));
  }
  o.require(e2 <= kZyzTol, "zyz");
  o.require(e4 <= kKakTol, "kak");
  o.require(max_cx <= 3, "<= 3 CNOTs");
  o.require(e8 <= kThreeQubitTol, "three-qubit");

  double born = 0.0;
  for (int m = 1; m <= 3; ++m) {
    ExperimentConfig cfg;
    cfg.scheme = static_cast<Scheme>(m);
    const Apparatus a = build_apparatus(cfg);
    for (double th : {0.0, 0.13, -0.2}) {
      const CMatrix rho = multi_copy_state(th, -0.5 * th, 0.5, m);
      const auto dists = distributions(a, Eigen::Vector2d(th, -0.5 * th), NoiseModel{});
      std::size_t k = 0;
      for (std::size_t b = 0; b < dists.size(); ++b)
        for (double pc : dists[b]) {
          const double pa = std::real((a.povm.outcomes[k++] * rho).trace());
          born = std::max(born, std::abs(a.allocation[b] * pc - pa));
        }
    }
  }
  o.require(born <= kBornTol, "compiled Born statistics");
  o.detail << "max errors " << e2 << " / " << e4 << " / " << e8 << ", max cx " << max_cx << ", Born " << born;
}

// --- 6 --------------------------------------------------------------------

void fig2e(Outcome &o) {
  const Report single = noiseless_report(Scheme::Single);
  const Report two = noiseless_report(Scheme::Two);
  o.require(std::abs(single.result.scaled_mse - 16.0) <= kMseSigmas * single.bootstrap_std, "single = 16");
  o.require(std::abs(two.result.scaled_mse - 13.0) <= kMseSigmas * two.bootstrap_std, "two = 13");
  const ClosedForms cf = closed_form(0.5);
  const double improvement = 1 - 2 * cf.n2 / cf.n1;
  const double above_h = 2 * cf.n2 / cf.holevo - 1;
  o.require(std::abs(improvement - 0.1875) <= 1e-12, "18.75% below N1");
  o.require(std::abs(improvement - 0.19) <= 0.04, "inside 19 +- 4 %");
  o.require(std::abs(above_h - 0.06) <= 0.04, "inside 6 +- 4 % above H");
  o.detail << "single " << single.result.scaled_mse << " +- " << single.bootstrap_std << ", two "
           << two.result.scaled_mse << " +- " << two.bootstrap_std << "; measured improvement "
           << 1 - two.result.scaled_mse / 16.0;
}

// --- 7 --------------------------------------------------------------------

void lw_violation(Outcome &o) {
  const Report two = noiseless_report(Scheme::Two);
  const Report single = noiseless_report(Scheme::Single);
  o.require(*two.lw_margin >= kLwSigmas * *two.lw_margin_std, "two-copy margin >= 3 sigma");
  o.require(*single.lw_margin <= kLwSingleSigmas * *single.lw_margin_std, "single-copy margin <= 0");
  o.detail << "two (" << two.axis_variances(0) << ", " << two.axis_variances(1) << ") margin " << *two.lw_margin
           << " +- " << *two.lw_margin_std << "; single margin " << *single.lw_margin << " +- "
           << *single.lw_margin_std;
}

// --- 8 --------------------------------------------------------------------

void chisq_shape(Outcome &o) {
  const Report two = noiseless_report(Scheme::Two);
  const Report single = noiseless_report(Scheme::Single);
  o.require(two.chisq && two.chisq->p_value >= kChisqAlpha, "two-copy KS");
  o.require(single.chisq && single.chisq->p_value >= kChisqAlpha, "single-copy KS");
  o.detail << "KS p two " << two.chisq->p_value << ", single " << single.chisq->p_value;
}

// --- 9 --------------------------------------------------------------------

void mitigation(Outcome &o) {
  ExperimentConfig c;
  c.scheme = Scheme::Two;
  c.noise.readout_error = 0.05;
  c.noise.name = "readout";
  c.theta_grid = parse_theta_grid("-0.2:0.2:121");
  const std::vector<SweepPoint> pts = sweep_summary(run_experiment(c));
  const double raw = mean_bias(pts, false);
  const double mit = mean_bias(pts, true);
  o.require(raw >= kBiasRatio * mit, "bias reduced 5x");
  const double floor = 2 * closed_form(c.epsilon).n2;
  double lowest = 1e300;
  for (const auto &p : pts) {
    lowest = std::min(lowest, (p.scaled_mse_mitigated - floor) / p.bootstrap_std_mitigated);
    o.require(p.scaled_mse_mitigated >= floor - kFloorSigmas * p.bootstrap_std_mitigated,
              "floor at theta " + std::to_string(p.theta(0)));
  }
  o.detail << "grid-mean bias raw " << raw << ", mitigated " << mit << " (ratio " << raw / mit
           << "); min (MSE - 2N2)/sigma " << lowest;
}

// --- 10 -------------------------------------------------------------------

Report gate_noise_report(Scheme s, double g) {
  ExperimentConfig c;
  c.scheme = s;
  c.noise.gate1_error = g;
  c.noise.gate2_error = g;
  c.noise.name = "gate";
  c.estimator = EstimatorModel::NoiseAware;
  c.mitigation.enabled = false;
  return summarize(run_experiment(c).records, c.epsilon);
}

void noisy_ordering(Outcome &o) {
  const Report two_high = gate_noise_report(Scheme::Two, 5e-3);
  const Report three_high = gate_noise_report(Scheme::Three, 5e-3);
  const Report two_low = gate_noise_report(Scheme::Two, 1e-3);
  const double sd = std::hypot(two_high.bootstrap_std, three_high.bootstrap_std);
  o.require(three_high.result.scaled_mse - two_high.result.scaled_mse > kOrderSigmas * sd, "three > two at 5e-3");
  o.require(two_low.result.scaled_mse + kOrderSigmas * two_low.bootstrap_std < 16.0, "two < 16 at 1e-3");
  o.detail << "5e-3: two " << two_high.result.scaled_mse << " +- " << two_high.bootstrap_std << ", three "
           << three_high.result.scaled_mse << " +- " << three_high.bootstrap_std << "; 1e-3: two "
           << two_low.result.scaled_mse << " +- " << two_low.bootstrap_std;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome &)>>> criteria = {
      {"1 closed-form bounds", closed_forms},
      {"2 SDP matches closed forms", sdp_oracle},
      {"3 many-copy Nagaoka bound", many_copy_bound},
      {"4 collective POVM optimality", povm_optimality},
      {"5 compilation correctness", compilation},
      {"6 noiseless scaled MSE", fig2e},
      {"7 LW violation", lw_violation},
      {"8 chi-squared shape", chisq_shape},
      {"9 mitigation efficacy", mitigation},
      {"10 noisy ordering", noisy_ordering},
  };
  int failed = 0;
  for (const auto &[name, check] : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      check(o);
    } catch (const std::exception &e) {
      o.pass = false;
      o.detail << "[exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
