#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ddsos {

/// Dense symmetric PSD block, or a diagonal block (a bundle of independent
/// 1x1 PSD blocks, i.e. nonnegative scalars).
enum class BlockKind { kSymmetric, kDiagonal };

struct BlockSpec {
  int size{0};
  BlockKind kind{BlockKind::kSymmetric};
};

/// One nonzero of a symmetric block matrix; zero-based, row <= col. The
/// entry stands for both (row, col) and (col, row).
struct SdpEntry {
  int block{0};
  int row{0};
  int col{0};
  double value{0.0};
};

/// Block-diagonal SDP in primal standard form
///
///   minimize    <C, X>
///   subject to  <A_i, X> = b_i,  i = 1..m
///               X = diag(X_1, ..., X_K) PSD.
///
/// The dual is: maximize b^T y subject to C - sum_i y_i A_i = S PSD.
struct SdpProblem {
  std::vector<BlockSpec> blocks;
  std::vector<std::vector<SdpEntry>> constraints;
  Eigen::VectorXd b;
  std::vector<SdpEntry> objective;

  int num_constraints() const { return static_cast<int>(constraints.size()); }
  int num_blocks() const { return static_cast<int>(blocks.size()); }

  /// Throws std::invalid_argument on bad block sizes, out-of-range or lower
  /// triangle entries, off-diagonal entries in diagonal blocks, or a size
  /// mismatch between constraints and b.
  void Validate() const;
};

/// Block-diagonal symmetric matrix. Diagonal blocks are stored as size x 1
/// column vectors holding the diagonal.
struct BlockMatrix {
  std::vector<BlockSpec> specs;
  std::vector<Eigen::MatrixXd> blocks;

  static BlockMatrix Zero(const std::vector<BlockSpec>& specs);
  static BlockMatrix Identity(const std::vector<BlockSpec>& specs,
                              double scale = 1.0);

  double operator()(int block, int row, int col) const;
  /// Full dense copy of one block.
  Eigen::MatrixXd Dense(int block) const;
  /// Smallest eigenvalue over all blocks.
  double MinEigenvalue() const;
};

enum class SdpStatus {
  kOptimal,
  kPrimalInfeasible,
  kDualInfeasible,
  kMaxIterations,
  kNumericalFailure,
};

std::string_view ToString(SdpStatus s);

struct SolverOptions {
  double tol_feas{1e-8};
  double tol_gap{1e-8};
  double tol_psd{1e-9};
  int max_iters{100};
  double step_fraction{0.98};
  /// Farkas-certificate acceptance ratio for infeasibility detection.
  double tol_infeasibility{1e-8};

  void Validate() const;
};

struct IterationLog {
  int iteration{0};
  double primal_objective{0.0};
  double dual_objective{0.0};
  double primal_residual{0.0};
  double dual_residual{0.0};
  double relative_gap{0.0};
  double mu{0.0};
  double sigma{0.0};
  double primal_step{0.0};
  double dual_step{0.0};
};

struct SdpSolution {
  SdpStatus status{SdpStatus::kNumericalFailure};
  BlockMatrix X;
  Eigen::VectorXd y;
  BlockMatrix S;
  double primal_objective{0.0};
  double dual_objective{0.0};
  /// max_i |<A_i, X> - b_i|
  double primal_residual{0.0};
  /// largest absolute entry of C - sum y_i A_i - S
  double dual_residual{0.0};
  /// |pobj - dobj| / (1 + |pobj| + |dobj|)
  double relative_gap{0.0};
  int iterations{0};
  /// Condition estimate of the Schur complement at the last factorization.
  double schur_condition{0.0};
  std::string message;
  std::vector<IterationLog> history;
};

/// Solves `prob` with an infeasible-start primal-dual interior-point method:
/// HKM search direction with Mehrotra predictor-corrector steps.
///
/// Starting point: X = xi_k I, S = eta_k I per block k, y = 0, with
///   xi_k  = max(10, sqrt(n_k), sqrt(n_k) max_i (1 + |b_i|) / (1 + |A_i^k|_F))
///   eta_k = max(10, sqrt(n_k), max(max_i |A_i^k|_F, |C^k|_F)).
/// Returns kOptimal once the primal residual and dual residual are within
/// tol_feas and the relative gap is within tol_gap. Infeasibility is
/// reported when an iterate yields a Farkas certificate to within
/// tol_infeasibility. Deterministic for identical inputs.
SdpSolution SolveSdp(const SdpProblem& prob, const SolverOptions& opts = {});

struct ResidualReport {
  double primal_residual{0.0};
  double dual_residual{0.0};
  double primal_objective{0.0};
  double dual_objective{0.0};
  double absolute_gap{0.0};
  double relative_gap{0.0};
  double min_eig_X{0.0};
  double min_eig_S{0.0};
};

/// Recomputes residuals from scratch on dense copies of the data. Does not
/// use any solver state. If `sol.y` or `sol.S` are empty, dual quantities are
/// reported for y = 0 and S = C.
ResidualReport ValidateSolution(const SdpProblem& prob, const SdpSolution& sol);

/// Dense copy of constraint matrix A_i (or C when i == -1) for one block.
Eigen::MatrixXd DenseConstraintBlock(const SdpProblem& prob, int i, int block);

}  // namespace ddsos
