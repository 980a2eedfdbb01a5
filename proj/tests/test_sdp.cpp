#include "choicert/sdp.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace choicert;

namespace {

// Dense symmetric block from a list of (row, col, var, coef) entries.
SdpBlock block(int dim, std::vector<SdpEntry> entries, bool diagonal = false) {
  SdpBlock b;
  b.dim = dim;
  b.diagonal = diagonal;
  b.entries = std::move(entries);
  return b;
}

}  // namespace

TEST(Ipm, TwoByTwoCorrelation) {
  // min y  s.t. [[1, y], [y, 1]] >= 0  ->  y = -1
  SdpProblem p;
  p.num_vars = 1;
  p.objective = {1.0};
  p.blocks.push_back(block(2, {{0, 0, -1, 1}, {1, 1, -1, 1}, {0, 1, 0, 1}}));
  const auto r = IpmBackend().optimize(p, {});
  ASSERT_EQ(r.status, SdpStatus::Optimal) << r.message;
  EXPECT_NEAR(r.y[0], -1.0, 1e-7);
  EXPECT_NEAR(r.primal_objective, r.dual_objective, 1e-7);
}

TEST(Ipm, LargestEigenvalue) {
  // min t  s.t. t I - A >= 0
  std::mt19937_64 rng(51);
  for (int d : {3, 6, 10}) {
    const RMatrix a = testutil::random_hermitian(rng, d).real();
    SdpProblem p;
    p.num_vars = 1;
    p.objective = {1.0};
    SdpBlock b;
    b.dim = d;
    for (int i = 0; i < d; ++i) {
      b.entries.push_back({i, i, 0, 1.0});
      for (int j = i; j < d; ++j) b.entries.push_back({i, j, -1, -a(i, j)});
    }
    p.blocks.push_back(b);
    const auto r = IpmBackend().optimize(p, {});
    ASSERT_EQ(r.status, SdpStatus::Optimal) << r.message;
    Eigen::SelfAdjointEigenSolver<RMatrix> es(a);
    EXPECT_NEAR(r.y[0], es.eigenvalues()(d - 1), 1e-7);
  }
}

TEST(Ipm, PinsAndDiagonalBlocks) {
  // min y0 + y1 with y1 pinned to 0.5, y0 >= 0.25 (diagonal), [[1, y0], [y0, y1]] >= 0
  SdpProblem p;
  p.num_vars = 2;
  p.objective = {1.0, 1.0};
  p.pins = {{1, 0.5}};
  p.blocks.push_back(block(1, {{0, 0, -1, -0.25}, {0, 0, 0, 1.0}}, true));
  p.blocks.push_back(block(2, {{0, 0, -1, 1}, {0, 1, 0, 1}, {1, 1, 1, 1}}));
  const auto r = IpmBackend().optimize(p, {});
  ASSERT_EQ(r.status, SdpStatus::Optimal) << r.message;
  // y0 >= -sqrt(0.5) from the 2x2 block, so the diagonal bound is the active one
  EXPECT_NEAR(r.y[0], 0.25, 1e-7);
  EXPECT_DOUBLE_EQ(r.y[1], 0.5);
}

TEST(Feasibility, DetectsAndCertifiesInfeasibility) {
  // [[y, 1], [1, -y]] >= 0 has no solution (determinant -y^2 - 1 < 0)
  SdpProblem p;
  p.num_vars = 1;
  p.objective = {0.0};
  p.bounds = {10.0};
  p.blocks.push_back(block(2, {{0, 0, 0, 1}, {1, 1, 0, -1}, {0, 1, -1, 1}}));
  SdpBlock box = block(2, {{0, 0, -1, 10}, {0, 0, 0, -1}, {1, 1, -1, 10}, {1, 1, 0, 1}}, true);
  box.auxiliary = true;
  p.blocks.push_back(box);
  const auto r = solve_feasibility(p, IpmBackend(), {});
  EXPECT_EQ(r.status, Feasibility::Infeasible);
  EXPECT_LT(r.margin, -0.1);
  EXPECT_LT(r.certificate, -0.1);
}

TEST(Feasibility, FeasibleProblemReachesPhaseTwo) {
  SdpProblem p;
  p.num_vars = 1;
  p.objective = {1.0};
  p.bounds = {10.0};
  p.blocks.push_back(block(2, {{0, 0, -1, 1}, {1, 1, -1, 1}, {0, 1, 0, 1}}));
  SdpBlock box = block(2, {{0, 0, -1, 10}, {0, 0, 0, -1}, {1, 1, -1, 10}, {1, 1, 0, 1}}, true);
  box.auxiliary = true;
  p.blocks.push_back(box);
  const auto r = solve_feasibility(p, IpmBackend(), {});
  ASSERT_EQ(r.status, Feasibility::Feasible);
  EXPECT_GT(r.margin, 0.5);
  EXPECT_NEAR(r.solution.y[0], -1.0, 1e-7);
}

TEST(Certificate, RejectsBogusDual) {
  SdpProblem p;
  p.num_vars = 1;
  p.objective = {0.0};
  p.bounds = {1.0};
  p.blocks.push_back(block(2, {{0, 0, -1, 1}, {1, 1, -1, 1}, {0, 1, 0, 1}}));
  // X = I/2 gives tr(F0 X) = 1 > 0: no proof of anything
  EXPECT_GT(check_infeasibility(p, {RMatrix::Identity(2, 2) / 2}), 0.0);
  // unbounded variable with nonzero pairing: the certificate cannot be trusted
  p.bounds.clear();
  RMatrix x(2, 2);
  x << 0.5, -0.5, -0.5, 0.5;
  EXPECT_EQ(check_infeasibility(p, {x}), std::numeric_limits<double>::infinity());
}

TEST(Backends, RegistryResolvesIpmAndRejectsUnknown) {
  EXPECT_EQ(make_backend("ipm")->name(), "ipm");
  EXPECT_THROW(make_backend("mosek-but-missing"), Error);
}
