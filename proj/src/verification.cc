#include "ddsos/verification.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "ddsos/synthesis.h"

namespace ddsos {

double DataIdentityResidual(const PolySystem& sys, const DataMatrices& dm,
                   const MatrixPolynomial& G,
                   const std::vector<Eigen::VectorXd>& xs) {
  sys.Validate();
  if (G.rows() != dm.T() || G.cols() != dm.N()) {
    throw std::invalid_argument(fmt::format(
        "DataIdentityResidual: G is {}x{}, expected {}x{}", G.rows(), G.cols(), dm.T(),
        dm.N()));
  }
  const MatrixPolynomial ZG = dm.Z0T * G;
  const Monomial one = Monomial::One(G.num_vars());
  double drift = (ZG.CoefficientMatrix(one) -
                  Eigen::MatrixXd::Identity(dm.N(), dm.N()))
                     .cwiseAbs()
                     .maxCoeff();
  for (const auto& m : ZG.Support()) {
    if (m.is_constant()) continue;
    drift = std::max(drift, ZG.CoefficientMatrix(m).cwiseAbs().maxCoeff());
  }
  if (drift > 1e-8) {
    throw std::invalid_argument(fmt::format(
        "DataIdentityResidual: Z0T G(x) differs from the identity by {:.3g}", drift));
  }
  double worst = 0.0;
  for (const auto& x : xs) {
    const Eigen::VectorXd z = sys.Z.Evaluate(x);
    const Eigen::MatrixXd g = G.Evaluate(x);
    const Eigen::VectorXd lhs = (sys.A + sys.B * dm.record.U * g) * z;
    const Eigen::VectorXd rhs = dm.record.X1 * g * z;
    worst = std::max(worst, (lhs - rhs).norm());
  }
  return worst;
}

std::vector<Eigen::VectorXd> GridPoints(int n, const GridSpec& grid) {
  if (grid.points_per_axis < 2 || !(grid.hi > grid.lo)) {
    throw std::invalid_argument("GridPoints: need at least two points per axis");
  }
  std::vector<Eigen::VectorXd> out;
  std::vector<int> idx(n, 0);
  const double h = (grid.hi - grid.lo) / (grid.points_per_axis - 1);
  while (true) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = grid.lo + idx[i] * h;
    if (x.norm() >= grid.exclusion_radius) out.push_back(x);
    int k = 0;
    while (k < n && ++idx[k] == grid.points_per_axis) idx[k++] = 0;
    if (k == n) break;
  }
  return out;
}

VdotReport PlantSideVdot(const PolySystem& sys, const Controller& ctrl,
                         const Eigen::MatrixXd& P, const GridSpec& grid) {
  sys.Validate();
  ctrl.Validate();
  const Eigen::MatrixXd Pinv = SpdInverse(P);
  const MatrixPolynomial J = Jacobian(sys.Z);
  VdotReport r;
  r.max_vdot = -std::numeric_limits<double>::infinity();
  for (const auto& x : GridPoints(sys.n(), grid)) {
    const Eigen::VectorXd z = sys.Z.Evaluate(x);
    const Eigen::VectorXd xdot = sys.Derivative(x, ctrl.Evaluate(x));
    const double vdot = 2.0 * (Pinv * z).dot(J.Evaluate(x) * xdot);
    ++r.points;
    if (vdot > r.max_vdot) {
      r.max_vdot = vdot;
      r.argmax = x;
    }
  }
  return r;
}

bool ClosedLoopReport::passed() const {
  return !runs.empty() &&
         std::all_of(runs.begin(), runs.end(),
                     [](const ClosedLoopRun& r) { return r.passed; });
}

double ClosedLoopReport::worst_final_norm() const {
  double w = 0.0;
  for (const auto& r : runs) {
    w = std::max(w, r.diverged ? std::numeric_limits<double>::infinity()
                               : r.final_norm);
  }
  return w;
}

ClosedLoopReport VerifyClosedLoop(const PolySystem& sys, const Controller& ctrl,
                                  const std::vector<Eigen::VectorXd>& initial,
                                  const ClosedLoopOptions& opts) {
  ClosedLoopReport report;
  for (const auto& x0 : initial) {
    ClosedLoopRun run;
    run.x0 = x0;
    run.initial_norm = x0.norm();
    try {
      const Trajectory traj =
          SimulateClosedLoop(sys, ctrl, x0, 0.0, opts.horizon, opts.step);
      run.final_norm = traj.final_state().norm();
      const double bound =
          std::min(opts.tol, opts.decay_factor * run.initial_norm);
      run.passed = run.final_norm <= bound;
      run.detail = fmt::format("|x(T)| = {:.3e} (bound {:.3e})",
                               run.final_norm, bound);
    } catch (const DivergenceError& e) {
      run.diverged = true;
      run.divergence_time = e.time();
      run.final_norm = std::numeric_limits<double>::infinity();
      run.detail = e.what();
    }
    report.runs.push_back(std::move(run));
  }
  return report;
}

std::vector<Eigen::VectorXd> CirclePoints(int count, double radius) {
  std::vector<Eigen::VectorXd> out;
  for (int k = 0; k < count; ++k) {
    const double a = 2.0 * std::numbers::pi * k / count;
    out.push_back(Eigen::Vector2d(radius * std::cos(a), radius * std::sin(a)));
  }
  return out;
}

}  // namespace ddsos
