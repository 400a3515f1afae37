#include <random>

#include <gtest/gtest.h>

#include "ddsos/data.h"
#include "ddsos/plant.h"
#include "ddsos/sos_compile.h"
#include "example_fixture.h"

namespace ddsos {
namespace {

DataMatrices ExampleData() {
  return BuildDataMatrices(
      RunExperiment(testing::ExampleSystem(), testing::ExampleExperiment()));
}

SosOptions ZeroEpsilon() {
  SosOptions opts;
  opts.epsilon = Polynomial::Constant(2, 0.0);
  return opts;
}

TEST(SosOptionsTest, DefaultEpsilon) {
  const SosOptions opts;
  EXPECT_LE((opts.EpsilonFor(2) - Polynomial::Parse("1e-5*x1^2 + 1e-5*x2^2", 2))
                .MaxAbsCoefficient(),
            1e-18);
  EXPECT_NO_THROW(opts.Validate(2));
}

TEST(SosOptionsTest, Validation) {
  SosOptions opts;
  opts.mu = 0.0;
  EXPECT_THROW(opts.Validate(2), std::invalid_argument);
  opts = SosOptions{};
  opts.y_degree = -1;
  EXPECT_THROW(opts.Validate(2), std::invalid_argument);
  opts = SosOptions{};
  opts.epsilon = Polynomial::Parse("x1", 2);
  EXPECT_THROW(opts.Validate(2), std::invalid_argument);
  opts.epsilon = Polynomial::Parse("-x1^2", 2);
  EXPECT_THROW(opts.Validate(2), std::invalid_argument);
  opts.epsilon = Polynomial::Parse("x1^2*x2^2 + 0.5", 2);
  EXPECT_NO_THROW(opts.Validate(2));
  opts.epsilon = Polynomial::Parse("x1^2", 3);
  EXPECT_THROW(opts.Validate(2), std::invalid_argument);
}

TEST(SosCompileTest, ExampleLayout) {
  const CompiledSos c = CompileDataDriven(ExampleData(), SosOptions{});
  const SosProgram& prog = c.program;
  EXPECT_EQ(prog.num_y(), 18);
  EXPECT_EQ(prog.y_monomials.size(), 3u);
  EXPECT_EQ(prog.gram_monomials.size(), 3u);
  EXPECT_EQ(prog.extended_size(), 6);
  EXPECT_EQ(prog.q_degree, 2);
  ASSERT_EQ(c.problem.num_blocks(), 3);
  EXPECT_EQ(c.problem.blocks[1].size, 2);
  EXPECT_EQ(c.problem.blocks[2].kind, BlockKind::kDiagonal);
  EXPECT_EQ(c.problem.blocks[2].size, 2 * 18 + 2);
  EXPECT_EQ(prog.margin_slot, 36);
  EXPECT_EQ(prog.budget_slot, 37);
  EXPECT_EQ(c.problem.blocks[0].size, static_cast<int>(prog.active.size()));
  EXPECT_LE(prog.active.size(), 6u);
  EXPECT_LE(prog.removed_constraints, prog.raw_constraints);
  EXPECT_NO_THROW(c.problem.Validate());
  EXPECT_EQ(prog.y_index(2, 1, 2), 17);
}

TEST(SosCompileTest, RejectsRankDeficientData) {
  DataMatrices dm = ExampleData();
  dm.rank_report.rank = 1;
  EXPECT_THROW(CompileDataDriven(dm, SosOptions{}), DataRankError);
}

TEST(SosCompileTest, QOnSecondAxisIsMinusEpsilonForAnyY) {
  // For this plant the (2,2) entry of Q carries a factor x1 apart from
  // -eps(x), whatever the decision polynomial.
  const DataMatrices dm = BuildDataMatrices(testing::PrintedRecord());
  const Polynomial eps = SosOptions{}.EpsilonFor(2);
  std::mt19937 rng(2);
  std::normal_distribution<double> g;
  MatrixPolynomial random_y(3, 2, 2);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      random_y(i, j) = Polynomial::Constant(2, g(rng)) +
                       g(rng) * Polynomial::Variable(2, 0) +
                       g(rng) * Polynomial::Variable(2, 1);
    }
  }
  for (const MatrixPolynomial& Y : {testing::PrintedY(), random_y}) {
    const MatrixPolynomial Q = BuildQTemplate(dm, Y, eps);
    for (double x2 : {-1.0, 0.5, 1.0}) {
      EXPECT_NEAR(Q.Evaluate(Eigen::VectorXd(Eigen::Vector2d(0.0, x2)))(1, 1),
                  -1e-5 * x2 * x2, 1e-15);
    }
  }
}

TEST(SosCompileTest, DefaultMarginIsNegativeEpsilon) {
  const CompiledSos c = CompileDataDriven(ExampleData(), SosOptions{});
  const SdpSolution sol = SolveSdp(c.problem);
  ASSERT_EQ(sol.status, SdpStatus::kOptimal) << sol.message;
  const SosSolution s = DecodeSolution(c.program, sol);
  EXPECT_NEAR(s.margin, -1e-5, 1e-7);
  EXPECT_THROW(ExtractSolution(c.program, sol), SosInfeasibleError);
}

TEST(SosCompileTest, ZeroEpsilonIsFeasible) {
  const DataMatrices dm = ExampleData();
  const CompiledSos c = CompileDataDriven(dm, ZeroEpsilon());
  const SdpSolution sol = SolveSdp(c.problem);
  ASSERT_EQ(sol.status, SdpStatus::kOptimal);
  const SosSolution s = ExtractSolution(c.program, sol);
  EXPECT_GE(s.margin, -1e-8);
  EXPECT_LE(ReconstructResidual(c.program, s.Y, s.Theta), 1e-7);
  const Eigen::MatrixXd P0 = dm.Z0T * s.Y.Evaluate(Eigen::Vector2d::Zero());
  EXPECT_LE((P0 - s.P).cwiseAbs().maxCoeff(), 1e-7);
  const Eigen::MatrixXd P1 = dm.Z0T * s.Y.Evaluate(Eigen::Vector2d(0.7, -1.3));
  EXPECT_LE((P1 - s.P).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s.P)
                .eigenvalues()
                .minCoeff(),
            1e-3 - 1e-6);
  // Inactive Gram rows are zero.
  std::vector<bool> is_active(c.program.extended_size(), false);
  for (int a : c.program.active) is_active[a] = true;
  for (int a = 0; a < c.program.extended_size(); ++a) {
    if (!is_active[a]) EXPECT_EQ(s.Theta.row(a).norm(), 0.0);
  }
}

TEST(SosCompileTest, LargeMuIsInfeasible) {
  SosOptions opts;
  opts.mu = 1e3;
  const CompiledSos c = CompileDataDriven(ExampleData(), opts);
  const SdpSolution sol = SolveSdp(c.problem);
  if (sol.status == SdpStatus::kOptimal) {
    EXPECT_LT(DecodeSolution(c.program, sol).margin, -1.0);
  }
  EXPECT_THROW(ExtractSolution(c.program, sol), SosInfeasibleError);
}

TEST(SosCompileTest, GramBasisTooSmall) {
  // Y of degree 2 on the example yields Q of degree 3; the pad lifts it.
  SosOptions opts = ZeroEpsilon();
  opts.y_degree = 2;
  const CompiledSos c = CompileDataDriven(ExampleData(), opts);
  EXPECT_GE(c.program.q_degree, 3);
  EXPECT_GE(2 * c.program.gram_monomials.back().degree(), c.program.q_degree);
}

TEST(SosCompileTest, ModelBasedLayout) {
  const PolySystem sys = testing::ExampleSystem();
  const CompiledSos c = CompileModelBased(sys.A, sys.B, sys.Z, SosOptions{});
  EXPECT_EQ(c.program.y_rows, 1);
  EXPECT_EQ(c.program.num_y(), 6);
  EXPECT_EQ(c.problem.blocks[1].size, 2);
  EXPECT_THROW(CompileModelBased(Eigen::MatrixXd::Identity(3, 3), sys.B, sys.Z,
                                 SosOptions{}),
               std::invalid_argument);
}

TEST(SosCompileTest, ModelBasedDefaultMarginMatchesDataDriven) {
  const PolySystem sys = testing::ExampleSystem();
  const CompiledSos c = CompileModelBased(sys.A, sys.B, sys.Z, SosOptions{});
  const SdpSolution sol = SolveSdp(c.problem);
  ASSERT_EQ(sol.status, SdpStatus::kOptimal);
  EXPECT_NEAR(DecodeSolution(c.program, sol).margin, -1e-5, 1e-7);
}

TEST(SosCompileTest, ModelBasedStableLinear) {
  const MonomialVector z = MonomialVector::Parse("x1, x2", 2);
  SosOptions opts;
  opts.epsilon = Polynomial::Constant(2, 1e-5);
  const CompiledSos c = CompileModelBased(-Eigen::MatrixXd::Identity(2, 2),
                                          Eigen::Vector2d(0, 1), z, opts);
  const SdpSolution sol = SolveSdp(c.problem);
  ASSERT_EQ(sol.status, SdpStatus::kOptimal);
  const SosSolution s = ExtractSolution(c.program, sol);
  EXPECT_GT(s.margin, 0.0);
  EXPECT_LE(ReconstructResidual(c.program, s.Y, s.Theta, s.P), 1e-7);
}

TEST(GramResidualTest, ExactAndPerturbed) {
  MatrixPolynomial Q(1, 1, 1);
  Q(0, 0) = Polynomial::Parse("x1^2 + 2*x1 + 1", 1);
  const std::vector<Monomial> basis = MonomialBasis(1, 1);
  Eigen::Matrix2d theta = Eigen::Matrix2d::Ones();
  EXPECT_NEAR(GramResidual(Q, basis, theta), 0.0, 1e-15);
  theta(1, 1) = 3.0;
  EXPECT_NEAR(GramResidual(Q, basis, theta), 2.0, 1e-15);
  theta(1, 1) = 1.0;
  theta(0, 1) = theta(1, 0) = 0.5;
  EXPECT_NEAR(GramResidual(Q, basis, theta), 1.0, 1e-15);
  EXPECT_THROW(GramResidual(Q, basis, Eigen::Matrix3d::Identity()),
               std::invalid_argument);
}

TEST(GramResidualTest, MatrixCrossTerms) {
  // y^T [[1, x], [x, x^2]] y = (y1 + x y2)^2.
  MatrixPolynomial Q(2, 2, 1);
  Q(0, 0) = Polynomial::Parse("1", 1);
  Q(0, 1) = Q(1, 0) = Polynomial::Parse("x1", 1);
  Q(1, 1) = Polynomial::Parse("x1^2", 1);
  const std::vector<Monomial> basis = MonomialBasis(1, 1);
  Eigen::Vector4d v(1, 0, 0, 1);
  EXPECT_NEAR(GramResidual(Q, basis, v * v.transpose()), 0.0, 1e-15);
}

struct ScalarCase {
  const char* text;
  int n;
  int pad;
  bool sos;
};

TEST(ScalarSosTest, KnownPolynomials) {
  const ScalarCase cases[] = {
      {"x1^4 + 2*x1^2 + 1", 1, 0, true},
      {"x1^2 - 1", 1, 0, false},
      {"x1^2 - 2*x1*x2 + x2^2", 2, 0, true},
      {"x1^4 - 2*x1^2*x2^2 + x2^4 + 0.1", 2, 0, true},
      {"x1^4 + 2*x1^2*x2^2 + x2^4 - 2*x1^2 - 2*x2^2 + 1.1", 2, 0, true},
      {"x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1", 2, 0, false},
      {"x1^3", 1, 0, false},
  };
  for (const ScalarCase& c : cases) {
    const ScalarSosResult r =
        CheckScalarSos(Polynomial::Parse(c.text, c.n), c.pad);
    EXPECT_EQ(r.is_sos, c.sos) << c.text << " status " << ToString(r.status);
    if (c.sos && r.is_sos) {
      EXPECT_LE(r.residual, 1e-7) << c.text;
      EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r.Theta)
                    .eigenvalues()
                    .minCoeff(),
                -1e-8)
          << c.text;
    }
  }
}

TEST(ScalarSosTest, ShiftedSquareThreshold) {
  // (x1^2 + x2^2 - 1)^2 + c is SOS exactly when c >= 0.
  for (double c : {-0.1, 0.05, 1.0}) {
    Polynomial p = Polynomial::Parse("x1^2 + x2^2 - 1", 2);
    p = p * p + Polynomial::Constant(2, c);
    EXPECT_EQ(CheckScalarSos(p).is_sos, c >= 0.0) << c;
  }
}

TEST(ScalarSosTest, PadEnlargesBasis) {
  const Polynomial p = Polynomial::Parse("x1^2 + 1", 1);
  EXPECT_EQ(CompileScalarSos(p, 0).program.basis.size(), 2u);
  EXPECT_EQ(CompileScalarSos(p, 1).program.basis.size(), 3u);
  EXPECT_THROW(CompileScalarSos(p, -1), std::invalid_argument);
}

// Random linear plants xdot = A x + B u with data taken straight from the
// model: compile, solve, decode and rebuild Q.
TEST(SosRoundTripTest, RandomLinearPlants) {
  std::mt19937 rng(99);
  std::normal_distribution<double> g;
  int accepted = 0;
  for (int i = 0; i < 50; ++i) {
    const int n = 1 + i % 2;
    DataRecord rec;
    rec.Z = MonomialVector::Parse(n == 1 ? "x1" : "x1, x2", n);
    const Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return g(rng); });
    Eigen::MatrixXd B = Eigen::MatrixXd::NullaryExpr(n, 1, [&] { return g(rng); });
    B(n - 1, 0) += (B(n - 1, 0) >= 0 ? 1.0 : -1.0);
    const int T = n + 2;
    rec.X0 = Eigen::MatrixXd::NullaryExpr(n, T, [&] { return g(rng); });
    rec.U = Eigen::MatrixXd::NullaryExpr(1, T, [&] { return g(rng); });
    rec.X1 = A * rec.X0 + B * rec.U;
    const DataMatrices dm = BuildDataMatrices(rec);
    SosOptions opts;
    opts.y_degree = i % 3 == 0 ? 0 : 1;
    opts.epsilon = Polynomial::Constant(n, 1e-5);
    const CompiledSos c = CompileDataDriven(dm, opts);
    const SdpSolution sol = SolveSdp(c.problem);
    ASSERT_EQ(sol.status, SdpStatus::kOptimal) << "instance " << i;
    const SosSolution s = DecodeSolution(c.program, sol);
    EXPECT_LE(ReconstructResidual(c.program, s.Y, s.Theta), 1e-7) << i;
    const Eigen::VectorXd xr = Eigen::VectorXd::NullaryExpr(n, [&] { return g(rng); });
    EXPECT_LE((dm.Z0T * s.Y.Evaluate(xr) - s.P).cwiseAbs().maxCoeff(), 1e-7) << i;
    // y^T Q(x) y = z^T Theta z at a random point.
    const Eigen::VectorXd yv = Eigen::VectorXd::NullaryExpr(n, [&] { return g(rng); });
    const Eigen::VectorXd z = ExtendedBasisVector(c.program, xr, yv);
    const double lhs = yv.dot(ProgramQ(c.program, s.Y, s.P).Evaluate(xr) * yv);
    EXPECT_NEAR(lhs, z.dot(s.Theta * z), 1e-6 * (1 + std::abs(lhs))) << i;
    if (s.margin >= -1e-8) {
      EXPECT_NO_THROW(ExtractSolution(c.program, sol)) << i;
      ++accepted;
    }
  }
  // Single-input linear plants are stabilizable for generic data.
  EXPECT_EQ(accepted, 50);
}

}  // namespace
}  // namespace ddsos
