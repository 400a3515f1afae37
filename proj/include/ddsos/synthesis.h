#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ddsos/controller.h"
#include "ddsos/data.h"
#include "ddsos/poly.h"
#include "ddsos/sdp.h"
#include "ddsos/sos_compile.h"

namespace ddsos {

/// V(x) = Z(x)^T P^{-1} Z(x) with the Gram matrix that certifies Q(x).
struct LyapunovCertificate {
  /// Which Q(x) the Gram matrix certifies: data-driven (rebuilt from data
  /// and Y) or model-based (rebuilt from A, B, P and Y).
  Provenance provenance{Provenance::kDataDriven};
  MonomialVector Z;
  /// The decision polynomial: T x N (data-driven) or m x N (model-based).
  MatrixPolynomial Y;
  Eigen::MatrixXd P;
  Eigen::MatrixXd Theta;
  std::vector<Monomial> gram_monomials;
  Polynomial epsilon;
  double mu{1e-3};
  double margin{0.0};

  double V(const Eigen::VectorXd& x) const;
};

struct CertificateReport {
  double gram_min_eigenvalue{0.0};
  double reconstruction_residual{0.0};
  double p_min_eigenvalue{0.0};
  bool gram_psd{false};
  bool reconstruction_ok{false};
  bool p_margin_ok{false};

  bool passed() const { return gram_psd && reconstruction_ok && p_margin_ok; }
};

/// Checks Theta >= -1e-8, |y^T Q y - z^T Theta z| <= 1e-7 coefficientwise
/// and lambda_min(P) >= mu - 1e-6.
CertificateReport CertificateCheck(const LyapunovCertificate& cert,
                                   const MatrixPolynomial& Q);

/// Data-driven form: Q is rebuilt from the data and Y.
CertificateReport CertificateCheck(const LyapunovCertificate& cert,
                                   const DataMatrices& dm,
                                   const MatrixPolynomial& Y);

/// Constant coefficient matrix of Z0T Y(x).
Eigen::MatrixXd ConstantPart(const DataMatrices& dm, const MatrixPolynomial& Y);

/// Largest nonconstant coefficient of Z0T Y(x).
double NonconstantResidual(const DataMatrices& dm, const MatrixPolynomial& Y);

/// Inverse of the symmetric part of P by eigendecomposition. Throws
/// std::invalid_argument if it is not positive definite or its condition
/// number exceeds 1e12.
Eigen::MatrixXd SpdInverse(const Eigen::MatrixXd& P, double* condition = nullptr);

/// F(x) = U Y(x) P^{-1}.
///
/// Throws std::invalid_argument if P is not positive definite, cond(P) >
/// 1e12, or Z0T Y(x) differs from P by more than `constancy_tol` in any
/// coefficient (including the asymmetry of P).
Controller ExtractController(const DataMatrices& dm, const MatrixPolynomial& Y,
                             const Eigen::MatrixXd& P,
                             double constancy_tol = 1e-8);

struct SynthesisResult {
  Controller controller;
  LyapunovCertificate certificate;
  MatrixPolynomial Y;
  SdpSolution solution;
  SosProgram program;
};

/// Compiles, solves and extracts the data-driven program.
///
/// Throws SosInfeasibleError (with the optimal margin) when no certificate
/// exists at the requested margins, MarginalFeasibilityError when the
/// solver's point fails the extraction tolerances.
SynthesisResult Synthesize(const DataMatrices& dm, const SosOptions& opts = {},
                           const SolverOptions& solver = {});

/// Model-based program on xdot = A Z(x) + B u; F(x) = Y(x) P^{-1}.
SynthesisResult ModelBasedSynthesize(const Eigen::MatrixXd& A,
                                     const Eigen::MatrixXd& B,
                                     const MonomialVector& Z,
                                     const SosOptions& opts = {},
                                     const SolverOptions& solver = {});

}  // namespace ddsos
