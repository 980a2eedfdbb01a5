#include "choicert/channels.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <thread>

using namespace choicert;

namespace {

// Printed 4x4 Choi matrix of the one-qubit channel (lambda, t).
CMatrix printed_choi(const OneQubitChannelParams& p) {
  const auto& l = p.lambda;
  const auto& t = p.t;
  const Complex tp(t[0], t[1]), tm(t[0], -t[1]);
  CMatrix c(4, 4);
  c << 1 + l[2] + t[2], 0, tp, l[0] + l[1],
       0, 1 - l[2] + t[2], l[0] - l[1], tp,
       tm, l[0] - l[1], 1 - l[2] - t[2], 0,
       l[0] + l[1], tm, 0, 1 + l[2] - t[2];
  return 0.5 * c;
}

// Choi matrix straight from the definition sum_ij Phi(|i><j|) (x) |i><j|.
CMatrix choi_by_definition(const Channel& ch) {
  const int n = ch.dim();
  CMatrix c = CMatrix::Zero(n * n, n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      CMatrix e = CMatrix::Zero(n, n);
      e(i, j) = 1;
      c += tensor_product(ch.apply(e), e);
    }
  }
  return c;
}

Eigen::Vector3d bloch(const CMatrix& rho) {
  const auto p = make_basis(BasisKind::Pauli, 2);
  Eigen::Vector3d r;
  for (int k = 0; k < 3; ++k) r(k) = (rho * p.elements[k + 1]).trace().real();
  return r;
}

}  // namespace

TEST(Choi, IdentityChannel) {
  const Channel id = one_qubit_channel({});
  CVector omega = CVector::Zero(4);
  omega(0) = omega(3) = 1;
  EXPECT_LT((id.choi().matrix() - omega * omega.adjoint()).norm(), 1e-15);
  EXPECT_LT((choi_by_definition(id) - id.choi().matrix()).norm(), 1e-15);
  const auto r = check_channel(id);
  EXPECT_TRUE(r.cp);
  EXPECT_TRUE(r.tp);
  EXPECT_NEAR(r.trace, 2.0, 1e-15);
}

TEST(Choi, FullyDepolarizing) {
  const Channel dep = one_qubit_channel({{0, 0, 0}, {0, 0, 0}});
  EXPECT_LT((dep.choi().matrix() - CMatrix::Identity(4, 4) / 2.0).norm(), 1e-15);
  EXPECT_NEAR(dep.choi().trace(), 2.0, 1e-15);
}

TEST(Choi, MatchesPrintedFormWithRealTranslation) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int trial = 0; trial < 20; ++trial) {
    OneQubitChannelParams p{{u(rng), u(rng), u(rng)}, {u(rng), 0.0, u(rng)}};
    EXPECT_LT((one_qubit_channel(p).choi().matrix() - printed_choi(p)).norm(), 1e-15);
  }
}

// With t_2 != 0 the printed form is the complex conjugate of the Choi
// matrix of the channel r -> diag(lambda) r + t; the latter is what the
// library builds, as checked against the Bloch action below.
TEST(Choi, ImaginaryTranslationConvention) {
  OneQubitChannelParams p{{0.2, -0.1, 0.3}, {0.1, 0.25, -0.2}};
  const Channel ch = one_qubit_channel(p);
  EXPECT_LT((ch.choi().matrix() - printed_choi(p).conjugate()).norm(), 1e-15);
  CMatrix zero = CMatrix::Zero(2, 2);
  zero(0, 0) = 1;
  const Eigen::Vector3d out = bloch(ch.apply(zero));
  EXPECT_NEAR(out(0), 0.1, 1e-15);
  EXPECT_NEAR(out(1), 0.25, 1e-15);
  EXPECT_NEAR(out(2), 0.3 - 0.2, 1e-15);
}

TEST(OneQubitChannel, BlochActionOnRandomStates) {
  std::mt19937_64 rng(22);
  OneQubitChannelParams p{{0.5, -0.3, 0.2}, {0.1, -0.2, 0.3}};
  const Channel ch = one_qubit_channel(p);
  for (int trial = 0; trial < 10; ++trial) {
    CMatrix rho = testutil::random_density(rng, 2);
    const Eigen::Vector3d r = bloch(rho), out = bloch(ch.apply(rho));
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(out(k), p.lambda[k] * r(k) + p.t[k], 1e-14);
    EXPECT_NEAR(ch.apply(rho).trace().real(), 1.0, 1e-14);
  }
}

TEST(OneQubitChannel, FujiwaraAlgoetAgreesWithChoiPositivity) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1, 1);
  int inside = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::array<double, 3> l{u(rng), u(rng), u(rng)};
    const bool fa = fujiwara_algoet(l);
    inside += fa;
    EXPECT_EQ(check_channel(one_qubit_channel({l, {0, 0, 0}})).cp, fa);
  }
  EXPECT_GT(inside, 50);
  EXPECT_FALSE(check_channel(one_qubit_channel({{1, 1, -1}, {0, 0, 0}})).cp);
  EXPECT_TRUE(check_channel(one_qubit_channel({{0.4, 0, 0.6}, {0, 0, 0}})).cp);
}

TEST(Kraus, RoundTripThroughChoi) {
  std::mt19937_64 rng(24);
  for (int d : {2, 3, 4}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto kraus = testutil::random_kraus(rng, d, 1 + trial);
      const Channel ch = Channel::from_kraus(SubsystemShape({d}), kraus);
      EXPECT_LT(kraus_completeness_defect(kraus), 1e-12);
      const Channel from_superop = Channel::from_superoperator(SubsystemShape({d}), ch.superoperator());
      const auto& canonical = from_superop.kraus();
      EXPECT_LE(static_cast<int>(canonical.size()), d * d);
      EXPECT_LE(static_cast<int>(canonical.size()), 1 + trial);
      EXPECT_LT(kraus_completeness_defect(canonical), 1e-10);
      const Channel rebuilt = Channel::from_kraus(SubsystemShape({d}), canonical);
      EXPECT_LT((rebuilt.choi().matrix() - from_superop.choi().matrix()).norm(), 1e-10);
      EXPECT_LT((choi_by_definition(ch) - ch.choi().matrix()).norm(), 1e-12);
      const auto rep = check_channel(ch);
      EXPECT_TRUE(rep.cp && rep.tp);
      EXPECT_NEAR(rep.trace, d, 1e-12);
    }
  }
}

TEST(Kraus, FromChoiIsConsistent) {
  const Channel id = one_qubit_channel({});
  const Channel c = Channel::from_choi(SubsystemShape({2}), id.choi());
  EXPECT_LT((c.superoperator() - id.superoperator()).norm(), 1e-15);
  EXPECT_THROW(Channel::from_choi(SubsystemShape({3}), id.choi()), DimensionError);
}

TEST(CheckChannel, AmplitudeDampingKrausExample) {
  CMatrix e1 = CMatrix::Zero(2, 2), e2 = CMatrix::Zero(2, 2);
  e1(0, 0) = 1;
  e2(0, 1) = 1;
  const auto rep = check_channel(Channel::from_kraus(SubsystemShape({2}), {e1, e2}));
  EXPECT_TRUE(rep.cp);
  EXPECT_TRUE(rep.tp);
}

TEST(CheckChannel, NonTracePreserving) {
  CMatrix e = 0.5 * CMatrix::Identity(2, 2);
  EXPECT_FALSE(check_channel(Channel::from_kraus(SubsystemShape({2}), {e})).tp);
}

TEST(Compose, IdentityDepolarizingAndProducts) {
  std::mt19937_64 rng(25);
  const Channel ch = Channel::from_kraus(SubsystemShape({2}), testutil::random_kraus(rng, 2, 3));
  const Channel id = one_qubit_channel({});
  EXPECT_LT((compose(id, ch).superoperator() - ch.superoperator()).norm(), 1e-15);
  const Channel dep = one_qubit_channel({{0, 0, 0}, {0, 0, 0}});
  EXPECT_LT((compose(dep, ch).superoperator() - dep.superoperator()).norm(), 1e-14);
  const Channel a = one_qubit_channel({{0.5, 0.2, -0.4}, {0, 0, 0}});
  const Channel b = one_qubit_channel({{0.3, -0.7, 0.9}, {0, 0, 0}});
  const Channel ab = one_qubit_channel({{0.15, -0.14, -0.36}, {0, 0, 0}});
  EXPECT_LT((compose(a, b).superoperator() - ab.superoperator()).norm(), 1e-14);
  const auto rep = check_channel(compose(a, ch));
  EXPECT_TRUE(rep.cp && rep.tp);
  EXPECT_THROW(compose(id, identity_channel(SubsystemShape({3}))), DimensionError);
}

TEST(TensorChannel, ActsFactorwise) {
  std::mt19937_64 rng(26);
  const Channel a = Channel::from_kraus(SubsystemShape({2}), testutil::random_kraus(rng, 2, 2));
  const Channel b = Channel::from_kraus(SubsystemShape({2}), testutil::random_kraus(rng, 2, 2));
  const Channel ab = tensor_channel(a, b);
  EXPECT_EQ(ab.shape(), SubsystemShape({2, 2}));
  CMatrix r1 = testutil::random_density(rng, 2), r2 = testutil::random_density(rng, 2);
  EXPECT_LT((ab.apply(tensor_product(r1, r2)) - tensor_product(a.apply(r1), b.apply(r2))).norm(), 1e-13);
}

TEST(PlanarPair, DegenerateCases) {
  const OneQubitChannelParams dep{{0, 0, 0}, {0, 0, 0}};
  const HermitianMatrix s = planar_pair_channel(1.0 / 16, dep, dep);
  EXPECT_LT((s.matrix() - CMatrix::Identity(16, 16) / 16.0).norm(), 1e-15);
  const OneQubitChannelParams phi{{0.4, 0, 0.3}, {0.2, 0, 0.1}};
  const HermitianMatrix half = planar_pair_channel(1.0 / 32, phi, phi);
  const HermitianMatrix full = planar_pair_channel(1.0 / 16, phi, phi);
  EXPECT_LT((half.matrix() - full.matrix()).norm(), 1e-15);
  EXPECT_NEAR(full.trace(), 1.0, 1e-14);
}

TEST(PlanarPair, MatchesTensorChannelChoi) {
  const OneQubitChannelParams phi{{0.4, 0, 0.3}, {0.2, 0, 0.1}};
  const Channel c = one_qubit_channel(phi);
  const Channel cc = tensor_channel(c, c);
  EXPECT_LT((planar_pair_channel(1.0 / 16, phi, phi).matrix() - cc.choi_state().matrix()).norm(), 1e-14);
}

TEST(PlanarPair, InvariantUnderEverySingleQubitTranspose) {
  std::mt19937_64 rng(27);
  std::uniform_real_distribution<double> u(-1, 1);
  const SubsystemShape shape({2, 2, 2, 2});
  int made = 0;
  while (made < 10) {
    auto random_planar = [&] {
      const double l1 = u(rng) * 0.5, l3 = u(rng) * 0.5;
      return OneQubitChannelParams{{l1, 0, l3}, {u(rng) * 0.3, 0, u(rng) * 0.3}};
    };
    const auto p1 = random_planar(), p2 = random_planar();
    if (!check_channel(one_qubit_channel(p1)).cp || !check_channel(one_qubit_channel(p2)).cp) continue;
    const double a = 0.5 / 16 * (1 + u(rng));
    const HermitianMatrix s = planar_pair_channel(a, p1, p2);
    for (int q = 0; q < 4; ++q) EXPECT_LT((partial_transpose(s, shape, {q}).matrix() - s.matrix()).norm(), 1e-10);
    ++made;
  }
}

TEST(PlanarPair, RejectsNonPlanarAndNonPositive) {
  const OneQubitChannelParams ok{{0.5, 0, 0.5}, {0, 0, 0}};
  EXPECT_THROW(planar_pair_channel(1.0 / 32, {{0.5, 0.1, 0.2}, {0, 0, 0}}, ok), Error);
  EXPECT_THROW(planar_pair_channel(1.0 / 32, ok, {{0.5, 0, 0.2}, {0, 0.1, 0}}), Error);
  // a large negative weight on a pure-ish term breaks positivity
  const OneQubitChannelParams edge{{0, 0, 1}, {0, 0, 0}};
  EXPECT_THROW(planar_pair_channel(-1.0, edge, ok), Error);
}

TEST(QutritDamping, MaximallyMixedAndMaximallyEntangled) {
  const auto mixed = qutrit_damping({0, 0});
  EXPECT_TRUE(mixed.psd);
  EXPECT_LT((mixed.choi_state.matrix() - CMatrix::Identity(9, 9) / 9.0).norm(), 1e-15);
  const auto ent = qutrit_damping({1, 1});
  EXPECT_TRUE(ent.psd);
  CVector v = CVector::Zero(9);
  for (int i = 0; i < 3; ++i) v(i * 3 + i) = 1 / std::sqrt(3.0);
  EXPECT_LT((ent.choi_state.matrix() - v * v.adjoint()).norm(), 1e-14);
  EXPECT_NEAR(negativity(ent.choi_state, SubsystemShape({3, 3}), {0}), 1.0, 1e-12);
}

TEST(QutritDamping, PlateauPointAndBlochAction) {
  const auto q = qutrit_damping({0, -0.5});
  EXPECT_TRUE(q.psd);
  EXPECT_NEAR(negativity(q.choi_state, SubsystemShape({3, 3}), {0}), 0.0, 1e-12);
  const auto r = check_channel(q.channel);
  EXPECT_TRUE(r.tp);
  // zeta -> Lambda zeta on a random qutrit state
  const auto gm = make_basis(BasisKind::GellMann, 3);
  std::mt19937_64 rng(28);
  const QutritDampingParams p{0.3, -0.6};
  const auto lam = p.damping();
  CMatrix rho = testutil::random_density(rng, 3);
  CMatrix out = qutrit_damping(p).channel.apply(rho);
  for (int i = 0; i < 8; ++i) {
    const double zin = 1.5 * (rho * gm.elements[i + 1]).trace().real();
    const double zout = 1.5 * (out * gm.elements[i + 1]).trace().real();
    EXPECT_NEAR(zout, lam[i] * zin, 1e-14);
  }
}

TEST(Dicke, ProjectorProperties) {
  for (int q : {2, 3, 4}) {
    const RMatrix p = dicke_projector(q);
    EXPECT_LT((p * p - p).norm(), 1e-14);
    EXPECT_NEAR(p.trace(), q + 1, 1e-13);
  }
}

TEST(SymmetricCheck, DickeBuiltAndIdentitySquared) {
  const RMatrix p = dicke_projector(4);
  EXPECT_TRUE(symmetric_choi_check(HermitianMatrix(RMatrix(p / 5.0))));
  const Channel id2 = tensor_channel(one_qubit_channel({}), one_qubit_channel({}));
  EXPECT_FALSE(symmetric_choi_check(id2.choi()));
  EXPECT_THROW(symmetric_choi_check(HermitianMatrix::identity(6)), DimensionError);
}

TEST(SymmetricCheck, OneQubitFaceOfTetrahedron) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-1, 1);
  int on_face = 0;
  for (int trial = 0; trial < 200 && on_face < 20; ++trial) {
    const double l1 = u(rng), l3 = u(rng);
    const double l2 = l1 + l3 - 1;
    if (!fujiwara_algoet({l1, l2, l3})) continue;
    ++on_face;
    EXPECT_TRUE(symmetric_choi_check(one_qubit_channel({{l1, l2, l3}, {0, 0, 0}}).choi()));
    EXPECT_FALSE(symmetric_choi_check(one_qubit_channel({{l1, l2 + 0.05, l3}, {0, 0, 0}}).choi()));
    EXPECT_FALSE(symmetric_choi_check(one_qubit_channel({{l1, l2, l3}, {0.05, 0, 0}}).choi()));
  }
  EXPECT_GE(on_face, 10);
}

TEST(Channel, CachesAreSharedAcrossCopiesAndThreads) {
  std::mt19937_64 rng(30);
  const Channel ch = Channel::from_superoperator(
      SubsystemShape({2}), Channel::from_kraus(SubsystemShape({2}), testutil::random_kraus(rng, 2, 2)).superoperator());
  const Channel copy = ch;
  std::vector<std::thread> threads;
  std::vector<const HermitianMatrix*> seen(4);
  for (int k = 0; k < 4; ++k) threads.emplace_back([&, k] { seen[k] = &(k % 2 ? copy : ch).choi(); });
  for (auto& t : threads) t.join();
  for (int k = 1; k < 4; ++k) EXPECT_EQ(seen[k], seen[0]);
}
