#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ddsos/sdp.h"
#include "ddsos/sdpa_io.h"
#include "random_sdp.h"

namespace ddsos {
namespace {

constexpr double kTol = 1e-6;

// min <C, X> s.t. trace(X) = 1 gives lambda_min(C).
SdpProblem MinEigenvalueProblem(const Eigen::Matrix2d& C) {
  SdpProblem p;
  p.blocks = {{2, BlockKind::kSymmetric}};
  p.constraints = {{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}};
  p.b = Eigen::VectorXd::Ones(1);
  p.objective = {{0, 0, 0, C(0, 0)}, {0, 0, 1, C(0, 1)}, {0, 1, 1, C(1, 1)}};
  return p;
}

TEST(SdpAnalyticTest, MinEigenvalue) {
  Eigen::Matrix2d C;
  C << 2, 1, 1, 2;
  const SdpSolution sol = SolveSdp(MinEigenvalueProblem(C));
  ASSERT_EQ(sol.status, SdpStatus::kOptimal) << sol.message;
  EXPECT_NEAR(sol.primal_objective, 1.0, kTol);
  EXPECT_NEAR(sol.dual_objective, 1.0, kTol);
  EXPECT_NEAR(sol.y(0), 1.0, kTol);
  const Eigen::MatrixXd X = sol.X.Dense(0);
  EXPECT_NEAR(X(0, 0), 0.5, 1e-4);
  EXPECT_NEAR(X(0, 1), -0.5, 1e-4);
}

TEST(SdpAnalyticTest, DiagonalLp) {
  // min x1 + 2 x2 s.t. x1 + x2 = 1, x >= 0.
  SdpProblem p;
  p.blocks = {{2, BlockKind::kDiagonal}};
  p.constraints = {{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}};
  p.b = Eigen::VectorXd::Ones(1);
  p.objective = {{0, 0, 0, 1.0}, {0, 1, 1, 2.0}};
  const SdpSolution sol = SolveSdp(p);
  ASSERT_EQ(sol.status, SdpStatus::kOptimal);
  EXPECT_NEAR(sol.primal_objective, 1.0, kTol);
  EXPECT_NEAR(sol.X(0, 0, 0), 1.0, 1e-5);
  EXPECT_NEAR(sol.X(0, 1, 1), 0.0, 1e-5);
}

TEST(SdpAnalyticTest, TwoBlocksWithCoupling) {
  // X11 = X22 = 1 and s = 1 + 2 X12 with s >= 0: min s is 0 at X12 = -1/2.
  SdpProblem p;
  p.blocks = {{2, BlockKind::kSymmetric}, {1, BlockKind::kDiagonal}};
  p.constraints = {{{0, 0, 0, 1.0}},
                   {{0, 1, 1, 1.0}},
                   {{1, 0, 0, 1.0}, {0, 0, 1, -1.0}}};
  p.b = Eigen::Vector3d(1.0, 1.0, 1.0);
  p.objective = {{1, 0, 0, 1.0}};
  const SdpSolution sol = SolveSdp(p);
  ASSERT_EQ(sol.status, SdpStatus::kOptimal);
  EXPECT_NEAR(sol.primal_objective, 0.0, kTol);
  EXPECT_NEAR(sol.X(0, 0, 1), -0.5, 1e-5);
}

TEST(SdpAnalyticTest, PrimalInfeasible) {
  SdpProblem p;
  p.blocks = {{1, BlockKind::kDiagonal}};
  p.constraints = {{{0, 0, 0, 1.0}}};
  p.b = Eigen::VectorXd::Constant(1, -1.0);
  p.objective = {{0, 0, 0, 1.0}};
  EXPECT_EQ(SolveSdp(p).status, SdpStatus::kPrimalInfeasible);
}

TEST(SdpAnalyticTest, DualInfeasible) {
  // min -x1 s.t. x2 = 1, x >= 0 is unbounded.
  SdpProblem p;
  p.blocks = {{2, BlockKind::kDiagonal}};
  p.constraints = {{{0, 1, 1, 1.0}}};
  p.b = Eigen::VectorXd::Ones(1);
  p.objective = {{0, 0, 0, -1.0}};
  EXPECT_EQ(SolveSdp(p).status, SdpStatus::kDualInfeasible);
}

TEST(SdpProblemTest, ValidateRejectsMalformed) {
  SdpProblem p = MinEigenvalueProblem(Eigen::Matrix2d::Identity());
  EXPECT_NO_THROW(p.Validate());
  p.constraints[0].push_back({0, 1, 0, 1.0});
  EXPECT_THROW(p.Validate(), std::invalid_argument);
  p = MinEigenvalueProblem(Eigen::Matrix2d::Identity());
  p.b = Eigen::Vector2d(1, 1);
  EXPECT_THROW(p.Validate(), std::invalid_argument);
  p = MinEigenvalueProblem(Eigen::Matrix2d::Identity());
  p.blocks[0].kind = BlockKind::kDiagonal;
  EXPECT_THROW(p.Validate(), std::invalid_argument);
}

TEST(SdpRandomTest, FiftyStrictlyFeasibleInstances) {
  std::mt19937 rng(20240601);
  int solved = 0;
  for (int i = 0; i < 50; ++i) {
    const SdpProblem p = testing::RandomSdp(rng, i);
    ASSERT_NO_THROW(p.Validate());
    const SdpSolution sol = SolveSdp(p);
    EXPECT_EQ(sol.status, SdpStatus::kOptimal) << "instance " << i << ": "
                                               << sol.message;
    if (sol.status != SdpStatus::kOptimal) continue;
    const ResidualReport r = ValidateSolution(p, sol);
    const double scale = 1.0 + p.b.cwiseAbs().maxCoeff();
    EXPECT_LE(r.primal_residual, 1e-7 * scale) << "instance " << i;
    EXPECT_LE(r.dual_residual, 1e-7 * scale) << "instance " << i;
    EXPECT_LE(r.relative_gap, 1e-7) << "instance " << i;
    EXPECT_GE(r.min_eig_X, -1e-8) << "instance " << i;
    EXPECT_GE(r.min_eig_S, -1e-8) << "instance " << i;
    EXPECT_NEAR(r.primal_objective, sol.primal_objective,
                1e-8 * (1 + std::abs(sol.primal_objective)));
    ++solved;
  }
  EXPECT_EQ(solved, 50);
}

TEST(SdpRandomTest, Deterministic) {
  std::mt19937 rng(7);
  const SdpProblem p = testing::RandomSdp(rng, 4);
  const SdpSolution a = SolveSdp(p);
  const SdpSolution b = SolveSdp(p);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.y, b.y);
  for (int k = 0; k < p.num_blocks(); ++k) EXPECT_EQ(a.X.blocks[k], b.X.blocks[k]);
}

TEST(ValidateSolutionTest, DetectsPerturbation) {
  Eigen::Matrix2d C;
  C << 2, 1, 1, 2;
  const SdpProblem p = MinEigenvalueProblem(C);
  SdpSolution sol = SolveSdp(p);
  ASSERT_EQ(sol.status, SdpStatus::kOptimal);
  const ResidualReport before = ValidateSolution(p, sol);
  sol.X.blocks[0](0, 0) += 0.1;
  const ResidualReport after = ValidateSolution(p, sol);
  EXPECT_NEAR(after.primal_residual, 0.1, 1e-6);
  EXPECT_LT(before.primal_residual, 1e-8);
  EXPECT_GT(after.absolute_gap, 0.1);
}

TEST(ValidateSolutionTest, EmptyDualUsesZero) {
  const SdpProblem p = MinEigenvalueProblem(Eigen::Matrix2d::Identity());
  SdpSolution sol;
  sol.X = BlockMatrix::Identity(p.blocks, 0.5);
  const ResidualReport r = ValidateSolution(p, sol);
  EXPECT_NEAR(r.primal_residual, 0.0, 1e-15);
  EXPECT_NEAR(r.primal_objective, 1.0, 1e-15);
  EXPECT_NEAR(r.dual_objective, 0.0, 1e-15);
  EXPECT_NEAR(r.min_eig_S, 1.0, 1e-12);
}

TEST(SdpaTest, RoundTripIsByteIdentical) {
  std::mt19937 rng(11);
  for (int i = 0; i < 10; ++i) {
    const SdpProblem p = testing::RandomSdp(rng, i);
    const std::string text = ToSdpaString(p);
    const SdpProblem q = ParseSdpa(text);
    EXPECT_EQ(ToSdpaString(q), text);
    EXPECT_EQ(q.b, p.b);
    const SdpProblem c = Canonicalize(p);
    ASSERT_EQ(c.num_constraints(), q.num_constraints());
    for (int j = 0; j < c.num_constraints(); ++j) {
      ASSERT_EQ(c.constraints[j].size(), q.constraints[j].size());
      for (size_t e = 0; e < c.constraints[j].size(); ++e) {
        EXPECT_EQ(c.constraints[j][e].value, q.constraints[j][e].value);
      }
    }
  }
}

TEST(SdpaTest, ObjectiveSignAndLayout) {
  SdpProblem p;
  p.blocks = {{2, BlockKind::kSymmetric}, {3, BlockKind::kDiagonal}};
  p.constraints = {{{0, 0, 1, 1.5}, {1, 2, 2, -1.0}}};
  p.b = Eigen::VectorXd::Constant(1, 0.25);
  p.objective = {{0, 0, 0, 2.0}};
  const std::string text = ToSdpaString(p);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.front(), '"');
  std::getline(in, line);
  EXPECT_EQ(line, "1");
  std::getline(in, line);
  EXPECT_EQ(line, "2");
  std::getline(in, line);
  EXPECT_NE(line.find("-3"), std::string::npos);
  EXPECT_NE(text.find("0 1 1 1 -2"), std::string::npos);
  EXPECT_NE(text.find("1 1 1 2 1.5"), std::string::npos);
  EXPECT_NE(text.find("1 2 3 3 -1"), std::string::npos);
}

TEST(SdpaTest, ParsesPunctuationAndComments) {
  const std::string text =
      "\"example\n* another comment\n1\n1\n{2}\n(3.0)\n"
      "0 1 1 1 -1\n0 1 2 2 -1\n1 1 1 1 1\n1 1 2 2 1\n";
  const SdpProblem p = ParseSdpa(text);
  EXPECT_EQ(p.num_constraints(), 1);
  EXPECT_EQ(p.blocks[0].size, 2);
  EXPECT_EQ(p.b(0), 3.0);
  const SdpSolution sol = SolveSdp(p);
  ASSERT_EQ(sol.status, SdpStatus::kOptimal);
  EXPECT_NEAR(sol.primal_objective, 3.0, kTol);
}

TEST(SdpaTest, RejectsMalformed) {
  EXPECT_THROW(ParseSdpa("1\n1\n2\n1.0\n0 1 3 3 1\n"), std::invalid_argument);
  EXPECT_THROW(ParseSdpa("2\n1\n2\n1.0\n"), std::invalid_argument);
  EXPECT_THROW(ParseSdpa("x\n"), std::invalid_argument);
}

}  // namespace
}  // namespace ddsos
