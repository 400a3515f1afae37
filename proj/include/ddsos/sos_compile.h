#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddsos/data.h"
#include "ddsos/poly.h"
#include "ddsos/sdp.h"

namespace ddsos {

struct SosOptions {
  /// Degree of the decision matrix polynomial Y(x).
  int y_degree{1};
  /// Lower bound on the eigenvalues of P.
  double mu{1e-3};
  /// Fixed SOS slack eps(x). Empty (zero variables) means
  /// epsilon_scale * (x1^2 + ... + xn^2).
  Polynomial epsilon;
  double epsilon_scale{1e-5};
  /// Extra degree for the Gram monomial basis.
  int gram_degree_pad{0};
  /// Bound on the sum of absolute Y coefficients (plus trace(P) in the
  /// model-based program). Keeps the optimal face bounded; a certificate
  /// can always be rescaled to meet it when mu is small.
  double coefficient_bound{10.0};

  /// eps(x) for an n-variable problem.
  Polynomial EpsilonFor(int n) const;

  /// Throws std::invalid_argument on a nonpositive mu, negative degrees or
  /// bound, or an eps(x) that is not a nonnegative combination of even
  /// monomials.
  void Validate(int n) const;
};

/// The program is infeasible at the requested margin, or the solver could
/// not certify it.
class SosInfeasibleError : public std::runtime_error {
 public:
  SosInfeasibleError(const std::string& what, double margin)
      : std::runtime_error(what), margin_(margin) {}
  double margin() const { return margin_; }

 private:
  double margin_;
};

/// The solver returned a point whose extracted certificate misses the
/// acceptance tolerances.
class MarginalFeasibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SosProgramKind { kDataDriven, kModelBased };

/// Scalar coefficient of Y(x): entry (row, col), monomial x^beta.
struct YCoefficient {
  int row{0};
  int col{0};
  Monomial monomial;
};

/// Element y_i * m_a(x) of the extended Gram basis.
struct ExtendedMonomial {
  int y{0};
  int m{0};
};

/// Layout of a compiled SOS program.
///
/// Blocks: 0 is the Gram block over the active extended basis, 1 is the
/// P block (P - (mu + t) I), 2 is a diagonal block holding the split Y
/// coefficients (y+ at 2k, y- at 2k+1), the shifted margin s = t + c and
/// the budget slack. The margin t is maximized; the offset
/// c = 1 + 2 mu + max |eps coefficient| keeps a strictly feasible start.
struct SosProgram {
  SosProgramKind kind{SosProgramKind::kDataDriven};
  SosOptions opts;
  Polynomial epsilon;
  MonomialVector Z;
  int n{0};
  int N{0};
  /// T for data-driven programs, m for model-based ones.
  int y_rows{0};

  // Data-driven inputs.
  Eigen::MatrixXd Z0T;
  Eigen::MatrixXd X1;
  Eigen::MatrixXd U;
  // Model-based inputs.
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;

  std::vector<Monomial> y_monomials;
  std::vector<YCoefficient> y_coefficients;
  std::vector<Monomial> gram_monomials;
  /// Full extended basis, y-major: index = i * |gram_monomials| + a.
  std::vector<ExtendedMonomial> extended_basis;
  /// Extended basis indices kept in the Gram block. Elements that can only
  /// carry a zero diagonal are removed before solving.
  std::vector<int> active;
  int q_degree{0};
  double margin_offset{0.0};
  int margin_slot{0};
  int budget_slot{0};
  int raw_constraints{0};
  int removed_constraints{0};

  int y_index(int row, int col, int monomial) const {
    return (row * N + col) * static_cast<int>(y_monomials.size()) + monomial;
  }
  int num_y() const { return static_cast<int>(y_coefficients.size()); }
  int extended_size() const {
    return static_cast<int>(extended_basis.size());
  }
};

struct CompiledSos {
  SosProgram program;
  SdpProblem problem;
};

/// Q(x) = -(dZ/dx X1 Y(x) + Y(x)^T X1^T dZ/dx^T) - eps(x) I for a numeric Y.
MatrixPolynomial BuildQTemplate(const DataMatrices& dm, const MatrixPolynomial& Y,
                                const Polynomial& eps);

/// Q(x) = -(dZ/dx (A P + B Y(x)) + (...)^T) - eps(x) I.
MatrixPolynomial BuildModelBasedQ(const Eigen::MatrixXd& A,
                                  const Eigen::MatrixXd& B,
                                  const MonomialVector& Z,
                                  const Eigen::MatrixXd& P,
                                  const MatrixPolynomial& Y,
                                  const Polynomial& eps);

/// Data-driven program: find Y(x) (T x N) with Z0T Y(x) = P constant,
/// P - mu I PSD and Q(x) SOS.
///
/// Throws std::invalid_argument when the Gram basis cannot represent Q
/// (increase gram_degree_pad) or the equalities are inconsistent.
CompiledSos CompileDataDriven(const DataMatrices& dm, const SosOptions& opts);

/// Model-based program for xdot = A Z(x) + B u: find P and Y(x) (m x N)
/// with P - mu I PSD and the model-based Q(x) SOS.
CompiledSos CompileModelBased(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const MonomialVector& Z, const SosOptions& opts);

struct SosSolution {
  MatrixPolynomial Y;
  Eigen::MatrixXd P;
  /// Gram matrix over the full extended basis (removed elements are zero).
  Eigen::MatrixXd Theta;
  double margin{0.0};
};

/// Maps a solver iterate back to (Y, P, Theta) without any acceptance
/// checks. Useful for diagnosing infeasible programs.
SosSolution DecodeSolution(const SosProgram& prog, const SdpSolution& sol);

/// Maps a solver result back to (Y, P, Theta).
///
/// Throws SosInfeasibleError when the solver did not reach optimality or
/// the margin is below -1e-8, and MarginalFeasibilityError when P is not
/// symmetric to 1e-8, lambda_min(P) < mu - 1e-6 or Theta has an eigenvalue
/// below -1e-8.
SosSolution ExtractSolution(const SosProgram& prog, const SdpSolution& sol);

/// Q(x) of the program evaluated for the given decision values. `P` is only
/// used by model-based programs.
MatrixPolynomial ProgramQ(const SosProgram& prog, const MatrixPolynomial& Y,
                          const Eigen::MatrixXd& P);

/// Max absolute coefficient of y^T Q(x) y - z(x, y)^T Theta z(x, y) over the
/// extended basis z.
double ReconstructResidual(const SosProgram& prog, const MatrixPolynomial& Y,
                           const Eigen::MatrixXd& Theta,
                           const Eigen::MatrixXd& P = {});

/// Same, for an explicit Q and Gram basis.
double GramResidual(const MatrixPolynomial& Q,
                    const std::vector<Monomial>& gram_monomials,
                    const Eigen::MatrixXd& Theta);

/// Extended basis vector z(x, y) with entries y_i m_a(x).
Eigen::VectorXd ExtendedBasisVector(const SosProgram& prog,
                                    const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& y);

/// Scalar SOS test program: minimize trace(Theta) subject to
/// p(x) = m(x)^T Theta m(x), m = MonomialBasis(n, ceil(deg p / 2) + pad).
struct ScalarSosProgram {
  Polynomial p;
  std::vector<Monomial> basis;
};

struct CompiledScalarSos {
  ScalarSosProgram program;
  SdpProblem problem;
};

CompiledScalarSos CompileScalarSos(const Polynomial& p, int degree_pad = 0);

struct ScalarSosResult {
  bool is_sos{false};
  SdpStatus status{SdpStatus::kNumericalFailure};
  Eigen::MatrixXd Theta;
  double residual{0.0};
};

/// Compiles and solves the scalar program.
ScalarSosResult CheckScalarSos(const Polynomial& p, int degree_pad = 0,
                               const SolverOptions& solver = {});

}  // namespace ddsos
