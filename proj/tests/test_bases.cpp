#include "choicert/bases.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace choicert;

namespace {

const std::vector<std::pair<BasisKind, int>> kAllBases = {
    {BasisKind::Pauli, 2},
    {BasisKind::PauliPlanar, 2},
    {BasisKind::GellMann, 3},
    {BasisKind::CanonicalHermitian, 2},
    {BasisKind::CanonicalHermitian, 4},
    {BasisKind::CanonicalHermitian, 5},
};

CMatrix bell() {
  CVector v = CVector::Zero(4);
  v(0) = v(3) = 1 / std::sqrt(2.0);
  return v * v.adjoint();
}

}  // namespace

TEST(MakeBasis, SizesAndIdentityElement) {
  EXPECT_EQ(make_basis(BasisKind::Pauli, 2).size(), 4);
  EXPECT_EQ(make_basis(BasisKind::PauliPlanar, 2).size(), 3);
  const auto gm = make_basis(BasisKind::GellMann, 3);
  ASSERT_EQ(gm.size(), 9);
  EXPECT_LT((gm.elements[0] - std::sqrt(2.0 / 3.0) * CMatrix::Identity(3, 3)).norm(), 1e-15);
  EXPECT_EQ(make_basis(BasisKind::CanonicalHermitian, 4).size(), 16);
  EXPECT_EQ(make_basis("pauli_planar", 2).kind, BasisKind::PauliPlanar);
}

TEST(MakeBasis, RejectsIncompatibleDimension) {
  EXPECT_THROW(make_basis(BasisKind::Pauli, 3), Error);
  EXPECT_THROW(make_basis(BasisKind::PauliPlanar, 4), Error);
  EXPECT_THROW(make_basis(BasisKind::GellMann, 2), Error);
  EXPECT_THROW(make_basis(BasisKind::CanonicalHermitian, 0), Error);
  EXPECT_THROW(make_basis("sigma", 2), Error);
}

TEST(MakeBasis, PauliOrdering) {
  const auto p = make_basis(BasisKind::Pauli, 2);
  CMatrix x(2, 2), y(2, 2), z(2, 2);
  x << 0, 1, 1, 0;
  y << 0, Complex(0, -1), Complex(0, 1), 0;
  z << 1, 0, 0, -1;
  EXPECT_EQ(p.elements[1], x);
  EXPECT_EQ(p.elements[2], y);
  EXPECT_EQ(p.elements[3], z);
  const auto planar = make_basis(BasisKind::PauliPlanar, 2);
  EXPECT_EQ(planar.elements[1], x);
  EXPECT_EQ(planar.elements[2], z);
}

TEST(MakeBasis, GellMannMatchesStandardTable) {
  const auto gm = make_basis(BasisKind::GellMann, 3);
  const Complex i(0, 1);
  std::vector<CMatrix> ref(8, CMatrix::Zero(3, 3));
  ref[0](0, 1) = ref[0](1, 0) = 1;
  ref[1](0, 1) = -i;
  ref[1](1, 0) = i;
  ref[2](0, 0) = 1;
  ref[2](1, 1) = -1;
  ref[3](0, 2) = ref[3](2, 0) = 1;
  ref[4](0, 2) = -i;
  ref[4](2, 0) = i;
  ref[5](1, 2) = ref[5](2, 1) = 1;
  ref[6](1, 2) = -i;
  ref[6](2, 1) = i;
  ref[7](0, 0) = ref[7](1, 1) = 1 / std::sqrt(3.0);
  ref[7](2, 2) = -2 / std::sqrt(3.0);
  for (int k = 0; k < 8; ++k) EXPECT_LT((gm.elements[k + 1] - ref[k]).norm(), 1e-15) << "lambda_" << k + 1;
}

TEST(OperatorBasis, HermitianAndOrthogonal) {
  for (auto [kind, d] : kAllBases) {
    const auto b = make_basis(kind, d);
    for (int mu = 0; mu < b.size(); ++mu) {
      EXPECT_LT((b.elements[mu] - b.elements[mu].adjoint()).norm(), 1e-15);
      for (int nu = 0; nu < b.size(); ++nu) {
        const Complex ip = (b.elements[mu] * b.elements[nu]).trace();
        if (mu != nu) {
          EXPECT_LT(std::abs(ip), 1e-12) << to_string(kind) << " " << mu << "," << nu;
        }
      }
    }
  }
}

TEST(Expand, MaximallyMixedAndBell) {
  const std::vector<OperatorBasis> pp = {make_basis(BasisKind::Pauli, 2), make_basis(BasisKind::Pauli, 2)};
  const auto mixed = expand(HermitianMatrix(CMatrix(CMatrix::Identity(4, 4) / 4.0)), pp);
  EXPECT_NEAR(mixed({0, 0}), 1.0, 1e-15);
  for (std::size_t k = 1; k < mixed.values.size(); ++k) EXPECT_NEAR(mixed.values[k], 0.0, 1e-15);

  const auto x = expand(HermitianMatrix(bell()), pp);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      // direct trace oracle: X_ab = tr(rho sigma_a (x) sigma_b), which is the Bell correlation
      const double oracle = (bell() * tensor_product(pp[0].elements[a], pp[1].elements[b])).trace().real();
      EXPECT_NEAR(x({a, b}), oracle, 1e-14);
    }
  }
  EXPECT_NEAR(x({1, 1}), 1, 1e-14);
  EXPECT_NEAR(x({2, 2}), -1, 1e-14);
  EXPECT_NEAR(x({3, 3}), 1, 1e-14);
  EXPECT_NEAR(x({1, 2}), 0, 1e-14);
}

TEST(Expand, QutritBlochCoordinates) {
  const auto gm = make_basis(BasisKind::GellMann, 3);
  // rho = (1 + zeta . lambda)/3 with zeta = e_1
  CMatrix rho = (CMatrix::Identity(3, 3) + gm.elements[1]) / 3.0;
  const auto x = expand(HermitianMatrix(rho), {gm});
  EXPECT_NEAR(x.values[0], 1.0, 1e-14);
  EXPECT_NEAR(x.values[1], 1.0, 1e-14);
  for (int k = 2; k < 9; ++k) EXPECT_NEAR(x.values[k], 0.0, 1e-14);
  std::mt19937_64 rng(11);
  CMatrix r = testutil::random_density(rng, 3);
  const auto y = expand(HermitianMatrix(r), {gm});
  for (int k = 1; k < 9; ++k) EXPECT_NEAR(y.values[k], 1.5 * (r * gm.elements[k]).trace().real(), 1e-13);
}

TEST(Expand, DimensionMismatch) {
  EXPECT_THROW(expand(HermitianMatrix::identity(3), {make_basis(BasisKind::Pauli, 2)}), DimensionError);
}

TEST(RoundTrip, ReconstructExpandIsIdentity) {
  std::mt19937_64 rng(12);
  const std::vector<std::vector<OperatorBasis>> layouts = {
      {make_basis(BasisKind::Pauli, 2), make_basis(BasisKind::Pauli, 2)},
      {make_basis(BasisKind::GellMann, 3), make_basis(BasisKind::GellMann, 3)},
      {make_basis(BasisKind::CanonicalHermitian, 4)},
      {make_basis(BasisKind::Pauli, 2), make_basis(BasisKind::GellMann, 3)},
  };
  for (const auto& f : layouts) {
    const int d = detail::basis_product_dim(f);
    for (int trial = 0; trial < 5; ++trial) {
      HermitianMatrix h(testutil::random_hermitian(rng, d));
      const auto x = expand(h, f);
      EXPECT_LT((reconstruct(x, f).matrix() - h.matrix()).norm(), 1e-12);
      const auto x2 = expand(reconstruct(x, f), f);
      for (std::size_t k = 0; k < x.values.size(); ++k) EXPECT_NEAR(x2.values[k], x.values[k], 1e-12);
    }
  }
}

TEST(RoundTrip, PlanarSubfamily) {
  const auto planar = make_basis(BasisKind::PauliPlanar, 2);
  const auto pauli = make_basis(BasisKind::Pauli, 2);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    // real symmetric qubit matrices have no sigma_y component
    CMatrix m = 0.5 * (CMatrix::Identity(2, 2) + u(rng) * pauli.elements[1] + u(rng) * pauli.elements[3]);
    EXPECT_LT((reconstruct(expand(HermitianMatrix(m), {planar}), {planar}).matrix() - m).norm(), 1e-14);
  }
  CMatrix with_y = 0.5 * (CMatrix::Identity(2, 2) + 0.3 * pauli.elements[2]);
  EXPECT_GT((reconstruct(expand(HermitianMatrix(with_y), {planar}), {planar}).matrix() - with_y).norm(), 0.1);
}

TEST(LocalState, UnitTraceBlochBall) {
  const auto p = make_basis(BasisKind::Pauli, 2);
  const HermitianMatrix s = local_state(p, {0.0, 0.0, 1.0});
  EXPECT_NEAR(s.trace(), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(s(0, 0)), 1.0, 1e-15);
  EXPECT_THROW(local_state(p, {0.0}), DimensionError);
}
