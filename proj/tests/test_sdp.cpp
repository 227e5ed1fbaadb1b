#include <catch_amalgamated.hpp>

#include "qmetro/sdp.hpp"
#include "test_support.hpp"

using namespace qmetro;
using Catch::Matchers::WithinAbs;

TEST_CASE("scalar Schur complement") {
  // min t s.t. [[t, 1], [1, 1]] >= 0  ->  t = 1
  sdp::LmiProblem p;
  const int b = p.add_block(2);
  const int t = p.add_variable(1.0);
  p.constant[b] << 0, 1, 1, 1;
  p.coeffs[t].push_back({b, 0, 0, 1.0});
  const sdp::Solution s = sdp::solve(p);
  CHECK(s.converged);
  CHECK_THAT(s.objective, WithinAbs(1.0, 1e-8));
  CHECK_THAT(s.dual_objective, WithinAbs(1.0, 1e-7));
}

TEST_CASE("largest eigenvalue of a real symmetric matrix") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + trial;
    RMatrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = g(rng);
    a = 0.5 * (a + a.transpose()).eval();
    // min t s.t. t I - A >= 0
    sdp::LmiProblem p;
    const int b = p.add_block(n);
    const int t = p.add_variable(1.0);
    p.constant[b] = -a;
    for (int i = 0; i < n; ++i) p.coeffs[t].push_back({b, i, i, 1.0});
    const sdp::Solution s = sdp::solve(p);
    Eigen::SelfAdjointEigenSolver<RMatrix> es(a);
    CHECK(s.converged);
    CHECK_THAT(s.objective, WithinAbs(es.eigenvalues()(n - 1), 1e-7));
  }
}

TEST_CASE("equality constraints and several blocks") {
  // min y1 + y2  s.t. y1 >= 0, y2 >= 0 (two 1x1 blocks), y1 - y2 = 1
  sdp::LmiProblem p;
  const int b1 = p.add_block(1), b2 = p.add_block(1);
  const int y1 = p.add_variable(1.0), y2 = p.add_variable(1.0);
  p.coeffs[y1].push_back({b1, 0, 0, 1.0});
  p.coeffs[y2].push_back({b2, 0, 0, 1.0});
  p.add_equality({{y1, 1.0}, {y2, -1.0}}, 1.0);
  const sdp::Solution s = sdp::solve(p);
  CHECK(s.converged);
  CHECK_THAT(s.objective, WithinAbs(1.0, 1e-8));
  CHECK_THAT(s.y(0), WithinAbs(1.0, 1e-7));
  CHECK_THAT(s.y(1), WithinAbs(0.0, 1e-7));
}

TEST_CASE("complex Hermitian LMI through the real embedding") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 2 + trial;
    const CMatrix h = testing::random_hermitian(rng, n);
    sdp::LmiProblem p;
    sdp::HermitianLmi lmi(p);
    const auto b = lmi.add_block(n);
    const int t = p.add_variable(1.0);
    for (int i = 0; i < n; ++i) lmi.add_entry(t, b, i, i, 1.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) lmi.add_constant(b, i, j, -h(i, j));
    const sdp::Solution s = sdp::solve(p);
    CHECK(s.converged);
    CHECK_THAT(s.objective, WithinAbs(herm_eig(h).eigenvalues(n - 1), 1e-7));
  }
}

TEST_CASE("Hermitian parameterisation round trip") {
  std::mt19937_64 rng(4);
  for (int d = 1; d <= 5; ++d) {
    const CMatrix a = testing::random_hermitian(rng, d);
    const CMatrix v = testing::random_hermitian(rng, d);
    // Express v in the basis, then check the trace functional.
    RVector params(d * d);
    for (int k = 0; k < d * d; ++k) {
      const CMatrix bk = sdp::HermitianLmi::basis(d, k);
      params(k) = re_trace_prod(bk, v) / re_trace_prod(bk, bk);
    }
    std::vector<int> idx(d * d);
    for (int k = 0; k < d * d; ++k) idx[k] = k;
    CHECK((sdp::HermitianLmi::assemble(params, idx, d) - v).norm() < 1e-12);
    const RVector g = sdp::HermitianLmi::trace_functional(a);
    CHECK_THAT(g.dot(params), WithinAbs((a * v).trace().real(), 1e-12));
  }
}

TEST_CASE("solver is bit-for-bit deterministic") {
  sdp::LmiProblem p;
  const int b = p.add_block(3);
  const int t = p.add_variable(1.0);
  p.constant[b] << 0, 1, 0.5, 1, 2, 0.1, 0.5, 0.1, 1;
  p.constant[b] *= -1;
  for (int i = 0; i < 3; ++i) p.coeffs[t].push_back({b, i, i, 1.0});
  const sdp::Solution s1 = sdp::solve(p), s2 = sdp::solve(p);
  CHECK(s1.objective == s2.objective);
  CHECK(s1.iterations == s2.iterations);
}

TEST_CASE("infeasible problem is reported as not converged") {
  // y >= 0 and -y - 1 >= 0 cannot both hold.
  sdp::LmiProblem p;
  const int b1 = p.add_block(1), b2 = p.add_block(1);
  const int y = p.add_variable(1.0);
  p.coeffs[y].push_back({b1, 0, 0, 1.0});
  p.coeffs[y].push_back({b2, 0, 0, -1.0});
  p.constant[b2](0, 0) = -1.0;
  sdp::Options opt;
  opt.max_iterations = 60;
  CHECK_FALSE(sdp::solve(p, opt).converged);
}
