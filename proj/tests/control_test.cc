#include <random>

#include <gtest/gtest.h>

#include "ddsos/synthesis.h"
#include "ddsos/verification.h"
#include "example_fixture.h"

namespace ddsos {
namespace {

PolySystem Linear(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  PolySystem sys;
  sys.Z = MonomialVector::Parse(A.rows() == 1 ? "x1" : "x1, x2",
                                static_cast<int>(A.rows()));
  sys.A = A;
  sys.B = B;
  return sys;
}

DataMatrices ScalarUnstableData() {
  const PolySystem sys = Linear(Eigen::MatrixXd::Ones(1, 1),
                                Eigen::MatrixXd::Ones(1, 1));
  ExperimentConfig cfg;
  cfg.tau = 0.1;
  cfg.num_samples = 4;
  cfg.x0 = Eigen::VectorXd::Constant(1, 0.3);
  cfg.integrator_step = 0.01;
  cfg.input.channels = {InputChannel{0.1, {Sinusoid{1.0, 2.0, 0.3}}}};
  return BuildDataMatrices(RunExperiment(sys, cfg));
}

TEST(PrintedReplayTest, ControllerMatchesReference) {
  const DataMatrices dm = BuildDataMatrices(testing::PrintedRecord());
  const Eigen::MatrixXd P = ConstantPart(dm, testing::PrintedY());
  EXPECT_LE((P - testing::PrintedP()).cwiseAbs().maxCoeff(), 2e-4);
  // The printed values carry four digits, so Z0T Y is constant only to
  // about 1e-4.
  EXPECT_LE(NonconstantResidual(dm, testing::PrintedY()), 1e-3);
  EXPECT_THROW(ExtractController(dm, testing::PrintedY(), P),
               std::invalid_argument);
  const Controller c = ExtractController(dm, testing::PrintedY(), P, 1e-3);
  const Polynomial u = c.InputPolynomial()(0, 0);
  const Polynomial ref = testing::PrintedInput();
  EXPECT_LE((u - ref).MaxAbsCoefficient(), 0.02) << u.ToString();
}

TEST(ExtractControllerTest, FPEqualsUY) {
  const DataMatrices dm = BuildDataMatrices(testing::PrintedRecord());
  const MatrixPolynomial Y = testing::PrintedY();
  const Eigen::MatrixXd P = ConstantPart(dm, Y);
  const Controller c = ExtractController(dm, Y, P, 1e-3);
  const MatrixPolynomial lhs = c.F * Eigen::MatrixXd(0.5 * (P + P.transpose()));
  const MatrixPolynomial rhs = dm.record.U * Y;
  double worst = 0.0;
  for (int j = 0; j < 2; ++j) {
    worst = std::max(worst, (lhs(0, j) - rhs(0, j)).MaxAbsCoefficient());
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(ExtractControllerTest, RandomFPEqualsUY) {
  std::mt19937 rng(10);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    DataRecord rec;
    rec.Z = MonomialVector::Parse("x1, x2", 2);
    rec.X0 = Eigen::MatrixXd::NullaryExpr(2, 4, [&] { return g(rng); });
    rec.X1 = Eigen::MatrixXd::Zero(2, 4);
    rec.U = Eigen::MatrixXd::NullaryExpr(2, 4, [&] { return g(rng); });
    const DataMatrices dm = BuildDataMatrices(rec);
    // Y = G P + K(x) with Z0T K = 0 keeps Z0T Y = P constant.
    const Eigen::MatrixXd R = Eigen::MatrixXd::NullaryExpr(2, 2, [&] { return g(rng); });
    const Eigen::MatrixXd P = R * R.transpose() + Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd null =
        Eigen::FullPivLU<Eigen::MatrixXd>(dm.Z0T).kernel();
    MatrixPolynomial Y = MatrixPolynomial::FromMatrix(ParticularRightInverse(dm) * P, 2);
    for (int k = 0; k < null.cols(); ++k) {
      for (int j = 0; j < 2; ++j) {
        const Polynomial c = g(rng) * Polynomial::Variable(2, 0) +
                             Polynomial::Constant(2, g(rng));
        for (int t = 0; t < 4; ++t) Y(t, j) += null(t, k) * c;
      }
    }
    const Controller c = ExtractController(dm, Y, P, 1e-9);
    const MatrixPolynomial lhs = c.F * P;
    const MatrixPolynomial rhs = dm.record.U * Y;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        EXPECT_LE((lhs(i, j) - rhs(i, j)).MaxAbsCoefficient(), 1e-10);
      }
    }
  }
}

TEST(ExtractControllerTest, RejectsIndefiniteP) {
  const DataMatrices dm = BuildDataMatrices(testing::PrintedRecord());
  EXPECT_THROW(ExtractController(dm, testing::PrintedY(),
                                 Eigen::Vector2d(1.0, -1.0).asDiagonal(), 1.0),
               std::invalid_argument);
}

TEST(SpdInverseTest, ConditionAndFailure) {
  double cond = 0.0;
  const Eigen::MatrixXd inv =
      SpdInverse(Eigen::Vector2d(2.0, 0.5).asDiagonal(), &cond);
  EXPECT_NEAR(cond, 4.0, 1e-12);
  EXPECT_NEAR(inv(0, 0), 0.5, 1e-15);
  EXPECT_THROW(SpdInverse(Eigen::Vector2d(1.0, 1e-13).asDiagonal()),
               std::invalid_argument);
  EXPECT_THROW(SpdInverse(Eigen::Vector2d(1.0, 0.0).asDiagonal()),
               std::invalid_argument);
  Eigen::Matrix2d asym;
  asym << 1, 0.5, 0, 1;
  Eigen::Matrix2d sym;
  sym << 1, 0.25, 0.25, 1;
  EXPECT_LE((SpdInverse(asym) - sym.inverse()).norm(), 1e-14);
}

TEST(SynthesizeTest, ExampleDefaultIsInfeasibleByEpsilon) {
  const DataMatrices dm = BuildDataMatrices(
      RunExperiment(testing::ExampleSystem(), testing::ExampleExperiment()));
  try {
    Synthesize(dm);
    FAIL() << "expected infeasibility";
  } catch (const SosInfeasibleError& e) {
    EXPECT_NEAR(e.margin(), -1e-5, 1e-7);
  }
}

// With Z = x the decision terms of Q are at most linear, so a quadratic
// eps(x) can never be dominated; linear plants use a constant eps.
SosOptions ConstantEpsilon(int n) {
  SosOptions opts;
  opts.epsilon = Polynomial::Constant(n, 1e-5);
  return opts;
}

TEST(SynthesizeTest, QuadraticEpsilonBlocksLinearPlant) {
  try {
    Synthesize(ScalarUnstableData());
    FAIL() << "expected infeasibility";
  } catch (const SosInfeasibleError& e) {
    EXPECT_NEAR(e.margin(), -1e-5, 1e-7);
  }
}

TEST(SynthesizeTest, ScalarUnstablePlant) {
  const DataMatrices dm = ScalarUnstableData();
  const SynthesisResult r = Synthesize(dm, ConstantEpsilon(1));
  EXPECT_EQ(r.controller.provenance, Provenance::kDataDriven);
  EXPECT_GT(r.certificate.margin, 0.0);
  EXPECT_TRUE(CertificateCheck(r.certificate, dm, r.Y).passed());
  const PolySystem sys = Linear(Eigen::MatrixXd::Ones(1, 1),
                                Eigen::MatrixXd::Ones(1, 1));
  EXPECT_NEAR(r.controller.Evaluate(Eigen::VectorXd::Zero(1))(0), 0.0, 1e-15);
  GridSpec grid;
  grid.points_per_axis = 41;
  EXPECT_TRUE(PlantSideVdot(sys, r.controller, r.certificate.P, grid).passed());
  std::vector<Eigen::VectorXd> x0s = {Eigen::VectorXd::Constant(1, 1.0),
                                      Eigen::VectorXd::Constant(1, -1.0)};
  const ClosedLoopReport cl = VerifyClosedLoop(sys, r.controller, x0s);
  EXPECT_TRUE(cl.passed()) << cl.worst_final_norm();
}

TEST(SynthesizeTest, ModelBasedStableLinear) {
  const PolySystem sys = Linear(-Eigen::MatrixXd::Identity(2, 2),
                                Eigen::Vector2d(0.0, 1.0));
  const SynthesisResult r = ModelBasedSynthesize(sys.A, sys.B, sys.Z, ConstantEpsilon(2));
  EXPECT_EQ(r.controller.provenance, Provenance::kModelBased);
  EXPECT_EQ(r.certificate.Y.rows(), 1);
  const MatrixPolynomial Q =
      BuildModelBasedQ(sys.A, sys.B, sys.Z, r.certificate.P, r.certificate.Y,
                       r.certificate.epsilon);
  EXPECT_TRUE(CertificateCheck(r.certificate, Q).passed());
  EXPECT_TRUE(PlantSideVdot(sys, r.controller, r.certificate.P).passed());
  EXPECT_TRUE(VerifyClosedLoop(sys, r.controller, CirclePoints(8)).passed());
}

TEST(SynthesizeTest, ModelBasedScalarUnstable) {
  const PolySystem sys = Linear(Eigen::MatrixXd::Ones(1, 1),
                                Eigen::MatrixXd::Ones(1, 1));
  const SynthesisResult r =
      ModelBasedSynthesize(sys.A, sys.B, sys.Z, ConstantEpsilon(1));
  // Closed loop xdot = (1 + F(x)) x; its linear coefficient is negative.
  const double gain = 1.0 + r.controller.F(0, 0).Evaluate(Eigen::VectorXd::Zero(1));
  EXPECT_LT(gain, 0.0);
  EXPECT_TRUE(PlantSideVdot(sys, r.controller, r.certificate.P).passed());
}

TEST(CertificateCheckTest, PrintedPMeetsMu) {
  LyapunovCertificate cert;
  cert.Z = testing::ExampleZ();
  cert.P = testing::PrintedP();
  cert.mu = 1e-3;
  cert.gram_monomials = MonomialBasis(2, 1);
  cert.Theta = Eigen::MatrixXd::Zero(6, 6);
  const CertificateReport r = CertificateCheck(cert, MatrixPolynomial(2, 2, 2));
  EXPECT_TRUE(r.p_margin_ok);
  EXPECT_NEAR(r.p_min_eigenvalue, 0.0031, 1e-15);
  EXPECT_TRUE(r.passed());
  cert.Theta(0, 0) = -1e-3;
  EXPECT_FALSE(CertificateCheck(cert, MatrixPolynomial(2, 2, 2)).gram_psd);
}

TEST(CertificateCheckTest, DetectsCorruption) {
  const PolySystem sys = Linear(-Eigen::MatrixXd::Identity(2, 2),
                                Eigen::Vector2d(0.0, 1.0));
  const SynthesisResult r = ModelBasedSynthesize(sys.A, sys.B, sys.Z, ConstantEpsilon(2));
  const auto q = [&](const LyapunovCertificate& c) {
    return BuildModelBasedQ(sys.A, sys.B, sys.Z, c.P, c.Y, c.epsilon);
  };
  LyapunovCertificate bad = r.certificate;
  bad.Theta(0, 0) += 1e-3;
  CertificateReport rep = CertificateCheck(bad, q(r.certificate));
  EXPECT_FALSE(rep.reconstruction_ok);
  EXPECT_TRUE(rep.gram_psd);

  bad = r.certificate;
  const int s = static_cast<int>(bad.Theta.rows());
  bad.Theta -= 10.0 * Eigen::MatrixXd::Identity(s, s);
  rep = CertificateCheck(bad, q(r.certificate));
  EXPECT_FALSE(rep.gram_psd);
  EXPECT_LT(rep.gram_min_eigenvalue, 0.0);

  bad = r.certificate;
  bad.mu = 1e3;
  rep = CertificateCheck(bad, q(r.certificate));
  EXPECT_FALSE(rep.p_margin_ok);
  EXPECT_FALSE(rep.passed());
}

TEST(LyapunovTest, ValueIsQuadraticInZ) {
  LyapunovCertificate cert;
  cert.Z = MonomialVector::Parse("x2, x1^2", 2);
  cert.P = Eigen::Vector2d(2.0, 4.0).asDiagonal();
  EXPECT_NEAR(cert.V(Eigen::Vector2d(1.0, 2.0)), 4.0 / 2.0 + 1.0 / 4.0, 1e-15);
  EXPECT_EQ(cert.V(Eigen::Vector2d::Zero()), 0.0);
}

TEST(VdotTest, OpenLoopExampleIncreases) {
  const PolySystem sys = testing::ExampleSystem();
  const VdotReport r =
      PlantSideVdot(sys, Controller::Zero(sys.Z, 1), Eigen::Matrix2d::Identity());
  EXPECT_GT(r.max_vdot, 0.0);
  EXPECT_FALSE(r.passed());
  EXPECT_EQ(r.points, 21 * 21 - 1);
}

TEST(VdotTest, StableLinearDecreases) {
  const PolySystem sys = Linear(-Eigen::MatrixXd::Identity(2, 2),
                                Eigen::Vector2d(0.0, 1.0));
  const VdotReport r =
      PlantSideVdot(sys, Controller::Zero(sys.Z, 1), Eigen::Matrix2d::Identity());
  EXPECT_TRUE(r.passed());
  EXPECT_LT(r.max_vdot, 0.0);
}

TEST(VdotTest, PrintedControllerIsOnlySemidefinite) {
  // V-dot vanishes along x2 = 0 for the reference pair.
  const PolySystem sys = testing::ExampleSystem();
  Controller c;
  c.Z = sys.Z;
  c.F = MatrixPolynomial(1, 2, 2);
  c.F(0, 0) = Polynomial::Parse("-2.0247", 2);
  c.F(0, 1) = Polynomial::Parse("-4.2114*x1 - 1", 2);
  GridSpec unit;
  unit.lo = -1.0;
  unit.hi = 1.0;
  const VdotReport r = PlantSideVdot(sys, c, testing::PrintedP(), unit);
  EXPECT_EQ(r.max_vdot, 0.0);
  EXPECT_EQ(r.argmax(1), 0.0);
  EXPECT_FALSE(r.passed());
}

TEST(ClosedLoopTest, PrintedControllerDecaysSlowly) {
  // The center manifold x2 ~ -x1^3 / 2 gives cubic decay of x1, so the
  // reference loop is stable but far from 1e-3 after 60 s.
  const PolySystem sys = testing::ExampleSystem();
  Controller c;
  c.Z = sys.Z;
  c.F = MatrixPolynomial(1, 2, 2);
  c.F(0, 0) = Polynomial::Parse("-2.0247", 2);
  c.F(0, 1) = Polynomial::Parse("-4.2114*x1 - 1", 2);
  const ClosedLoopReport r = VerifyClosedLoop(sys, c, CirclePoints(12));
  for (const auto& run : r.runs) {
    EXPECT_FALSE(run.diverged);
    EXPECT_LT(run.final_norm, 0.1);
    EXPECT_GT(run.final_norm, 1e-3);
  }
  EXPECT_FALSE(r.passed());
}

TEST(GridTest, PointsAndExclusion) {
  GridSpec g;
  g.points_per_axis = 3;
  EXPECT_EQ(GridPoints(2, g).size(), 8u);
  g.exclusion_radius = 0.0;
  EXPECT_EQ(GridPoints(2, g).size(), 9u);
  const auto circle = CirclePoints(4, 2.0);
  ASSERT_EQ(circle.size(), 4u);
  for (const auto& p : circle) EXPECT_NEAR(p.norm(), 2.0, 1e-15);
}

TEST(ClosedLoopTest, OpenLoopExampleDiverges) {
  const PolySystem sys = testing::ExampleSystem();
  const ClosedLoopReport r =
      VerifyClosedLoop(sys, Controller::Zero(sys.Z, 1), CirclePoints(4));
  EXPECT_FALSE(r.passed());
  bool any_diverged = false;
  for (const auto& run : r.runs) any_diverged |= run.diverged;
  EXPECT_TRUE(any_diverged);
}

TEST(ClosedLoopTest, StableLinearPasses) {
  const PolySystem sys = Linear(-Eigen::MatrixXd::Identity(2, 2),
                                Eigen::Vector2d(0.0, 1.0));
  const ClosedLoopReport r =
      VerifyClosedLoop(sys, Controller::Zero(sys.Z, 1), CirclePoints(6));
  EXPECT_TRUE(r.passed());
  EXPECT_LT(r.worst_final_norm(), 1e-20);
}

TEST(ClosedLoopTest, SlowDecayFails) {
  const PolySystem sys = Linear(-0.01 * Eigen::MatrixXd::Identity(1, 1),
                                Eigen::MatrixXd::Ones(1, 1));
  const ClosedLoopReport r = VerifyClosedLoop(
      sys, Controller::Zero(sys.Z, 1), {Eigen::VectorXd::Constant(1, 1.0)});
  EXPECT_FALSE(r.passed());
  EXPECT_NEAR(r.worst_final_norm(), std::exp(-0.6), 1e-9);
}

}  // namespace
}  // namespace ddsos
