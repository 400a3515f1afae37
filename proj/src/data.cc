#include "ddsos/data.h"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

namespace ddsos {

void DataRecord::Validate() const {
  const auto T = X0.cols();
  if (T < 1) throw std::invalid_argument("DataRecord: no samples");
  if (U.cols() != T || X1.cols() != T) {
    throw std::invalid_argument(fmt::format(
        "DataRecord: sample counts disagree (U {}, X0 {}, X1 {})", U.cols(), T,
        X1.cols()));
  }
  if (X1.rows() != X0.rows()) {
    throw std::invalid_argument("DataRecord: X0 and X1 row counts differ");
  }
  if (Z.size() == 0 || Z.num_vars() != X0.rows()) {
    throw std::invalid_argument(
        "DataRecord: monomial vector does not match the state dimension");
  }
  if (times.size() != 0 && times.size() != T) {
    throw std::invalid_argument("DataRecord: times length mismatch");
  }
}

RankReport NumericalRank(const Eigen::MatrixXd& m, double tolerance_factor) {
  RankReport r;
  if (m.size() == 0) return r;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  r.singular_values = svd.singularValues();
  const double smax = r.singular_values.maxCoeff();
  r.tolerance = static_cast<double>(std::max(m.rows(), m.cols())) * smax *
                std::numeric_limits<double>::epsilon() * tolerance_factor;
  r.rank = static_cast<int>(
      (r.singular_values.array() > r.tolerance).count());
  return r;
}

Eigen::MatrixXd EvaluateMonomialData(const MonomialVector& z,
                                     const Eigen::MatrixXd& x0) {
  Eigen::MatrixXd out(z.size(), x0.cols());
  for (int k = 0; k < x0.cols(); ++k) {
    const Eigen::VectorXd col = x0.col(k);
    out.col(k) = z.Evaluate(col);
  }
  return out;
}

DataMatrices BuildDataMatrices(const DataRecord& record,
                               double tolerance_factor) {
  record.Validate();
  DataMatrices dm;
  dm.record = record;
  dm.Z0T = EvaluateMonomialData(record.Z, record.X0);
  const int N = dm.N();
  const int T = dm.T();
  if (T < N) {
    throw DataRankError(fmt::format(
        "{} samples cannot give a {}-row monomial data matrix full row rank; "
        "collect at least T >= N = {} samples",
        T, N, N));
  }
  dm.rank_report = NumericalRank(dm.Z0T, tolerance_factor);
  if (dm.rank_report.rank < N) {
    throw DataRankError(fmt::format(
        "monomial data matrix Z0T does not have full row rank: rank {} < N = "
        "{} (sigma_min {:.3e}, tolerance {:.3e})",
        dm.rank_report.rank, N, dm.rank_report.sigma_min(),
        dm.rank_report.tolerance));
  }
  return dm;
}

Eigen::MatrixXd ParticularRightInverse(const DataMatrices& dm) {
  if (dm.rank_report.rank < dm.N()) {
    throw DataRankError("right inverse requires full row rank");
  }
  const Eigen::MatrixXd gram = dm.Z0T * dm.Z0T.transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success) {
    throw DataRankError("Z0T Z0T^T is numerically singular");
  }
  // (Z Z^T)^{-1} Z, transposed.
  return ldlt.solve(dm.Z0T).transpose();
}

}  // namespace ddsos
