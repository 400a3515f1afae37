#include "ddsos/controller.h"

#include <stdexcept>

#include <fmt/format.h>

namespace ddsos {

std::string_view ToString(Provenance p) {
  switch (p) {
    case Provenance::kDataDriven:
      return "data-driven";
    case Provenance::kModelBased:
      return "model-based";
    case Provenance::kUserSupplied:
      return "user-supplied";
  }
  return "user-supplied";
}

Provenance ParseProvenance(std::string_view s) {
  if (s == "data-driven") return Provenance::kDataDriven;
  if (s == "model-based") return Provenance::kModelBased;
  if (s == "user-supplied") return Provenance::kUserSupplied;
  throw std::invalid_argument(fmt::format("unknown provenance '{}'", s));
}

void Controller::Validate() const {
  if (F.cols() != Z.size()) {
    throw std::invalid_argument(fmt::format(
        "Controller: F has {} columns but Z has {} entries", F.cols(),
        Z.size()));
  }
  if (F.rows() < 1) throw std::invalid_argument("Controller: F has no rows");
  if (F.num_vars() != Z.num_vars()) {
    throw std::invalid_argument("Controller: F and Z variable counts differ");
  }
}

Eigen::VectorXd Controller::Evaluate(const Eigen::VectorXd& x) const {
  return F.Evaluate(x) * Z.Evaluate(x);
}

MatrixPolynomial Controller::InputPolynomial() const {
  return F * Z.AsMatrix();
}

Controller Controller::Zero(const MonomialVector& z, int num_inputs) {
  return Controller{MatrixPolynomial(num_inputs, z.size(), z.num_vars()), z,
                    Provenance::kUserSupplied};
}

}  // namespace ddsos
