#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "ddsos/poly.h"

namespace ddsos {

enum class Provenance { kDataDriven, kModelBased, kUserSupplied };

std::string_view ToString(Provenance p);
Provenance ParseProvenance(std::string_view s);

/// State feedback u = F(x) Z(x) with F an m x N matrix polynomial.
struct Controller {
  MatrixPolynomial F;
  MonomialVector Z;
  Provenance provenance{Provenance::kUserSupplied};

  int num_inputs() const { return F.rows(); }

  /// Throws std::invalid_argument unless F is m x N against Z.
  void Validate() const;

  Eigen::VectorXd Evaluate(const Eigen::VectorXd& x) const;

  /// u(x) = F(x) Z(x) expanded as an m x 1 matrix polynomial.
  MatrixPolynomial InputPolynomial() const;

  /// The zero controller of the given input dimension.
  static Controller Zero(const MonomialVector& z, int num_inputs);
};

}  // namespace ddsos
