#include "ddsos/synthesis.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace ddsos {

double LyapunovCertificate::V(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd z = Z.Evaluate(x);
  return z.dot(P.ldlt().solve(z));
}

CertificateReport CertificateCheck(const LyapunovCertificate& cert,
                                   const MatrixPolynomial& Q) {
  CertificateReport r;
  r.gram_min_eigenvalue =
      cert.Theta.size() == 0
          ? 0.0
          : Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cert.Theta)
                .eigenvalues()(0);
  r.gram_psd = r.gram_min_eigenvalue >= -1e-8;
  r.reconstruction_residual = GramResidual(Q, cert.gram_monomials, cert.Theta);
  r.reconstruction_ok = r.reconstruction_residual <= 1e-7;
  r.p_min_eigenvalue =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cert.P).eigenvalues()(0);
  r.p_margin_ok = r.p_min_eigenvalue >= cert.mu - 1e-6;
  return r;
}

CertificateReport CertificateCheck(const LyapunovCertificate& cert,
                                   const DataMatrices& dm,
                                   const MatrixPolynomial& Y) {
  return CertificateCheck(cert, BuildQTemplate(dm, Y, cert.epsilon));
}

Eigen::MatrixXd ConstantPart(const DataMatrices& dm,
                             const MatrixPolynomial& Y) {
  if (Y.rows() != dm.T() || Y.cols() != dm.N()) {
    throw std::invalid_argument(fmt::format(
        "Y is {}x{}, expected {}x{}", Y.rows(), Y.cols(), dm.T(), dm.N()));
  }
  return dm.Z0T * Y.CoefficientMatrix(Monomial::One(Y.num_vars()));
}

double NonconstantResidual(const DataMatrices& dm, const MatrixPolynomial& Y) {
  const MatrixPolynomial ZY = dm.Z0T * Y;
  double worst = 0.0;
  for (const auto& m : ZY.Support()) {
    if (m.is_constant()) continue;
    worst = std::max(worst, ZY.CoefficientMatrix(m).cwiseAbs().maxCoeff());
  }
  return worst;
}

Eigen::MatrixXd SpdInverse(const Eigen::MatrixXd& P, double* condition) {
  if (P.rows() != P.cols() || P.rows() == 0) {
    throw std::invalid_argument("P must be a nonempty square matrix");
  }
  const Eigen::MatrixXd S = 0.5 * (P + P.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const Eigen::VectorXd& lam = es.eigenvalues();
  if (!(lam(0) > 0.0)) {
    throw std::invalid_argument(fmt::format(
        "P is not positive definite (lambda_min = {:.6g})", lam(0)));
  }
  const double cond = lam(lam.size() - 1) / lam(0);
  if (condition) *condition = cond;
  if (cond > 1e12) {
    throw std::invalid_argument(
        fmt::format("P is too ill-conditioned (cond = {:.3g} > 1e12)", cond));
  }
  return es.eigenvectors() * lam.cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

Controller ExtractController(const DataMatrices& dm, const MatrixPolynomial& Y,
                             const Eigen::MatrixXd& P, double constancy_tol) {
  if (P.rows() != dm.N() || P.cols() != dm.N()) {
    throw std::invalid_argument(fmt::format(
        "P is {}x{}, expected {}x{}", P.rows(), P.cols(), dm.N(), dm.N()));
  }
  const double drift = std::max(
      NonconstantResidual(dm, Y),
      (ConstantPart(dm, Y) - P).cwiseAbs().maxCoeff());
  if (drift > constancy_tol) {
    throw std::invalid_argument(fmt::format(
        "Z0T Y(x) differs from P by {:.3g} (tolerance {:.3g})", drift,
        constancy_tol));
  }
  const double asym = (P - P.transpose()).cwiseAbs().maxCoeff();
  if (asym > constancy_tol) {
    throw std::invalid_argument(
        fmt::format("P is not symmetric (asymmetry {:.3g})", asym));
  }
  const Eigen::MatrixXd Pinv = SpdInverse(P);
  return Controller{(dm.record.U * Y) * Pinv, dm.record.Z,
                    Provenance::kDataDriven};
}

namespace {

LyapunovCertificate MakeCertificate(const SosProgram& prog,
                                    const SosSolution& s) {
  LyapunovCertificate c;
  c.provenance = prog.kind == SosProgramKind::kDataDriven
                     ? Provenance::kDataDriven
                     : Provenance::kModelBased;
  c.Z = prog.Z;
  c.Y = s.Y;
  c.P = s.P;
  c.Theta = s.Theta;
  c.gram_monomials = prog.gram_monomials;
  c.epsilon = prog.epsilon;
  c.mu = prog.opts.mu;
  c.margin = s.margin;
  return c;
}

}  // namespace

SynthesisResult Synthesize(const DataMatrices& dm, const SosOptions& opts,
                           const SolverOptions& solver) {
  CompiledSos compiled = CompileDataDriven(dm, opts);
  SdpSolution sol = SolveSdp(compiled.problem, solver);
  const SosSolution s = ExtractSolution(compiled.program, sol);
  Controller ctrl;
  try {
    ctrl = ExtractController(dm, s.Y, s.P, 1e-8);
  } catch (const std::invalid_argument& e) {
    throw MarginalFeasibilityError(e.what());
  }
  return SynthesisResult{std::move(ctrl), MakeCertificate(compiled.program, s),
                         s.Y, std::move(sol), std::move(compiled.program)};
}

SynthesisResult ModelBasedSynthesize(const Eigen::MatrixXd& A,
                                     const Eigen::MatrixXd& B,
                                     const MonomialVector& Z,
                                     const SosOptions& opts,
                                     const SolverOptions& solver) {
  CompiledSos compiled = CompileModelBased(A, B, Z, opts);
  SdpSolution sol = SolveSdp(compiled.problem, solver);
  const SosSolution s = ExtractSolution(compiled.program, sol);
  Eigen::MatrixXd Pinv;
  try {
    Pinv = SpdInverse(s.P);
  } catch (const std::invalid_argument& e) {
    throw MarginalFeasibilityError(e.what());
  }
  Controller ctrl{s.Y * Pinv, Z, Provenance::kModelBased};
  return SynthesisResult{std::move(ctrl), MakeCertificate(compiled.program, s),
                         s.Y, std::move(sol), std::move(compiled.program)};
}

}  // namespace ddsos
