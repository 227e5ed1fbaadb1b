#include <catch_amalgamated.hpp>

#include "qmetro/numkernel.hpp"
#include "test_support.hpp"

using namespace qmetro;
using Catch::Matchers::WithinAbs;

TEST_CASE("kron basics") {
  CHECK(kron(pauli::I(), pauli::I()).isApprox(CMatrix::Identity(4, 4)));

  CMatrix zi = CMatrix::Zero(4, 4);
  zi.diagonal() << 1, 1, -1, -1;
  CHECK((kron(pauli::Z(), pauli::I()) - zi).norm() == 0.0);

  CMatrix d = CMatrix::Zero(2, 2);
  d.diagonal() << 0.75, 0.25;
  const CMatrix dd = kron(d, d);
  CHECK_THAT(dd(0, 0).real(), WithinAbs(0.5625, 1e-15));
  CHECK_THAT(dd(1, 1).real(), WithinAbs(0.1875, 1e-15));
  CHECK_THAT(dd(2, 2).real(), WithinAbs(0.1875, 1e-15));
  CHECK_THAT(dd(3, 3).real(), WithinAbs(0.0625, 1e-15));
}

TEST_CASE("kron mixed product property") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix a = testing::random_complex(rng, 2, 3);
    const CMatrix b = testing::random_complex(rng, 3, 2);
    const CMatrix c = testing::random_complex(rng, 3, 2);
    const CMatrix d = testing::random_complex(rng, 2, 4);
    const CMatrix lhs = kron(a, b) * kron(c, d);
    const CMatrix rhs = kron(a * c, b * d);
    CHECK((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
  }
}

TEST_CASE("herm_eig on Paulis") {
  const HermitianEig z = herm_eig(pauli::Z());
  CHECK_THAT(z.eigenvalues(0), WithinAbs(-1.0, 1e-15));
  CHECK_THAT(z.eigenvalues(1), WithinAbs(1.0, 1e-15));

  const HermitianEig x = herm_eig(pauli::X());
  CHECK_THAT(x.eigenvalues(0), WithinAbs(-1.0, 1e-14));
  const double s = 1.0 / std::sqrt(2.0);
  // Largest entry real positive, ties to the lowest index.
  CHECK(std::abs(x.eigenvectors(0, 0) - cplx(s)) < 1e-12);
  CHECK(std::abs(x.eigenvectors(1, 0) - cplx(-s)) < 1e-12);
  CHECK(std::abs(x.eigenvectors(0, 1) - cplx(s)) < 1e-12);
  CHECK(std::abs(x.eigenvectors(1, 1) - cplx(s)) < 1e-12);

  CMatrix d = CMatrix::Zero(2, 2);
  d.diagonal() << 0.75, 0.25;
  const HermitianEig e = herm_eig(d);
  CHECK_THAT(e.eigenvalues(0), WithinAbs(0.25, 1e-15));
  CHECK_THAT(e.eigenvalues(1), WithinAbs(0.75, 1e-15));
}

TEST_CASE("herm_eig rejects non-Hermitian input") {
  CMatrix a = pauli::Z();
  a(0, 1) = 1e-6;
  try {
    herm_eig(a);
    FAIL("expected NotHermitian");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::NotHermitian);
  }
}

TEST_CASE("herm_eig reconstruction on random Hermitian matrices") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index d = 2 + trial % 15;
    const CMatrix a = testing::random_hermitian(rng, d);
    const HermitianEig e = herm_eig(a);
    const CMatrix rec = e.eigenvectors * e.eigenvalues.asDiagonal() * e.eigenvectors.adjoint();
    CHECK((rec - a).norm() < 1e-10);
    const CMatrix gram = e.eigenvectors.adjoint() * e.eigenvectors;
    CHECK((gram - CMatrix::Identity(d, d)).norm() < 1e-10);
    for (Eigen::Index i = 1; i < d; ++i) CHECK(e.eigenvalues(i) >= e.eigenvalues(i - 1));
  }
}

TEST_CASE("herm_eig is deterministic on degenerate spectra") {
  // A unitarily rotated projector has a 3-fold degenerate eigenvalue; the
  // canonical basis depends only on the subspace.
  std::mt19937_64 rng(5);
  const CMatrix u = testing::random_unitary(rng, 4);
  CMatrix d = CMatrix::Zero(4, 4);
  d.diagonal() << 1, 1, 1, 2;
  const CMatrix a = hermitian_part(u * d * u.adjoint());
  const HermitianEig e1 = herm_eig(a);
  // Same subspace, different input basis inside the degenerate block.
  const CMatrix v = testing::random_unitary(rng, 3);
  CMatrix mix = CMatrix::Identity(4, 4);
  mix.topLeftCorner(3, 3) = v;
  const CMatrix u2 = u * mix;
  const CMatrix a2 = hermitian_part(u2 * d * u2.adjoint());
  const HermitianEig e2 = herm_eig(a2);
  CHECK((e1.eigenvectors - e2.eigenvectors).norm() < 1e-8);
}

TEST_CASE("sqrtm_psd examples") {
  CMatrix d = CMatrix::Zero(2, 2);
  d.diagonal() << 4, 1;
  const CMatrix r = sqrtm_psd(d);
  CHECK_THAT(r(0, 0).real(), WithinAbs(2.0, 1e-14));
  CHECK_THAT(r(1, 1).real(), WithinAbs(1.0, 1e-14));
  CHECK(std::abs(r(0, 1)) < 1e-15);

  CHECK((sqrtm_psd(CMatrix::Identity(4, 4)) - CMatrix::Identity(4, 4)).norm() < 1e-14);

  d.diagonal() << 0.75, 0.25;
  const CMatrix r2 = sqrtm_psd(d);
  CHECK_THAT(r2(0, 0).real(), WithinAbs(std::sqrt(0.75), 1e-14));
  CHECK_THAT(r2(1, 1).real(), WithinAbs(0.5, 1e-14));
}

TEST_CASE("sqrtm_psd squares back on random PSD matrices") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index d = 2 + trial % 7;
    CMatrix a = testing::random_psd(rng, d);
    if (trial % 3 == 0) {
      // rank deficient
      const CMatrix b = testing::random_complex(rng, d, 1);
      a = b * b.adjoint();
    }
    const CMatrix r = sqrtm_psd(a);
    CHECK((r * r - a).norm() < 1e-9 * (1.0 + a.norm()));
    CHECK(is_hermitian(r));
  }
}

TEST_CASE("sqrtm_psd clips tiny negatives and rejects real negatives") {
  CMatrix a = CMatrix::Zero(2, 2);
  a.diagonal() << 1.0, -1e-11;
  CHECK(std::abs(sqrtm_psd(a)(1, 1)) == 0.0);
  a(1, 1) = -1e-6;
  try {
    sqrtm_psd(a);
    FAIL("expected NotPsd");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::NotPsd);
  }
}

TEST_CASE("trace_abs examples") {
  CHECK_THAT(trace_abs(pauli::Z()), WithinAbs(2.0, 1e-14));
  CHECK_THAT(trace_abs(pauli::I()), WithinAbs(2.0, 1e-14));
  CHECK_THAT(trace_abs(0.5 * pauli::Y()), WithinAbs(1.0, 1e-14));
}

TEST_CASE("distance_up_to_phase ignores global phase") {
  std::mt19937_64 rng(3);
  const CMatrix u = testing::random_unitary(rng, 4);
  CHECK(distance_up_to_phase(std::polar(1.0, 0.7) * u, u) < 1e-12);
  CHECK(distance_up_to_phase(kron(pauli::X(), pauli::I()), CMatrix::Identity(4, 4)) > 1.0);
}
