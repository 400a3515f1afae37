#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "ddsos/poly.h"

namespace ddsos {

/// Raised when the experiment data is not rich enough for synthesis: too few
/// samples, or a monomial data matrix without full row rank.
class DataRankError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One experiment's samples, stored column-wise (one column per sample).
///
///   U  : m x T  inputs u(t0 + k tau)
///   X0 : n x T  states x(t0 + k tau)
///   X1 : n x T  state derivatives at the same instants
///
/// `meta` echoes the producing configuration (times, seed, ...) as strings.
struct DataRecord {
  Eigen::MatrixXd U;
  Eigen::MatrixXd X0;
  Eigen::MatrixXd X1;
  MonomialVector Z;
  Eigen::VectorXd times;
  std::map<std::string, std::string> meta;

  int num_samples() const { return static_cast<int>(X0.cols()); }
  int num_states() const { return static_cast<int>(X0.rows()); }
  int num_inputs() const { return static_cast<int>(U.rows()); }

  /// Throws std::invalid_argument on inconsistent shapes.
  void Validate() const;
};

struct RankReport {
  int rank{0};
  Eigen::VectorXd singular_values;
  double tolerance{0.0};
  double sigma_min() const {
    return singular_values.size() ? singular_values.minCoeff() : 0.0;
  }
};

/// Numerical rank of `m` by SVD. Singular values above
/// max(rows, cols) * sigma_max * machine_epsilon * tolerance_factor count.
RankReport NumericalRank(const Eigen::MatrixXd& m,
                         double tolerance_factor = 1e6);

/// Synthesis-facing view of an experiment: the record plus the monomial data
/// matrix Z0T (N x T) whose column k is Z evaluated at X0 column k.
struct DataMatrices {
  DataRecord record;
  Eigen::MatrixXd Z0T;
  RankReport rank_report;

  int N() const { return static_cast<int>(Z0T.rows()); }
  int T() const { return static_cast<int>(Z0T.cols()); }
  int n() const { return record.num_states(); }
  int m() const { return record.num_inputs(); }
};

/// Z evaluated column-wise at X0.
Eigen::MatrixXd EvaluateMonomialData(const MonomialVector& z,
                                     const Eigen::MatrixXd& x0);

/// Builds Z0T and checks that it has full row rank.
///
/// Throws DataRankError when T < N (too few samples for full row rank) or
/// when the numerical rank of Z0T is below N.
DataMatrices BuildDataMatrices(const DataRecord& record,
                               double tolerance_factor = 1e6);

/// The Moore-Penrose right inverse Z0T^T (Z0T Z0T^T)^{-1} (T x N). One
/// solution G of Z0T G = I; used for diagnostics only.
Eigen::MatrixXd ParticularRightInverse(const DataMatrices& dm);

}  // namespace ddsos
