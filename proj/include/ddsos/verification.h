#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddsos/controller.h"
#include "ddsos/data.h"
#include "ddsos/plant.h"
#include "ddsos/poly.h"

namespace ddsos {

/// max over xs of |(A + B U G(x)) Z(x) - X1 G(x) Z(x)|.
///
/// Requires Z0T G(x) = I coefficientwise to 1e-8; throws
/// std::invalid_argument otherwise.
double DataIdentityResidual(const PolySystem& sys, const DataMatrices& dm,
                   const MatrixPolynomial& G,
                   const std::vector<Eigen::VectorXd>& xs);

/// Uniform grid on [lo, hi]^n.
struct GridSpec {
  double lo{-2.0};
  double hi{2.0};
  int points_per_axis{21};
  /// Points with |x| < exclusion_radius are skipped.
  double exclusion_radius{1e-2};
};

std::vector<Eigen::VectorXd> GridPoints(int n, const GridSpec& grid);

struct VdotReport {
  double max_vdot{0.0};
  Eigen::VectorXd argmax;
  int points{0};
  bool passed() const { return points > 0 && max_vdot < 0.0; }
};

/// Vdot(x) = 2 Z^T P^{-1} dZ/dx (A Z + B F(x) Z) for V = Z^T P^{-1} Z,
/// maximized over the grid.
VdotReport PlantSideVdot(const PolySystem& sys, const Controller& ctrl,
                         const Eigen::MatrixXd& P, const GridSpec& grid = {});

struct ClosedLoopOptions {
  double horizon{60.0};
  double step{1e-3};
  double tol{1e-3};
  /// Final norm must also be at most this fraction of the initial norm.
  double decay_factor{0.01};
};

struct ClosedLoopRun {
  Eigen::VectorXd x0;
  double initial_norm{0.0};
  double final_norm{0.0};
  bool diverged{false};
  double divergence_time{0.0};
  bool passed{false};
  std::string detail;
};

struct ClosedLoopReport {
  std::vector<ClosedLoopRun> runs;
  bool passed() const;
  double worst_final_norm() const;
};

/// Simulates from every initial state. A run passes iff it does not diverge
/// and |x(horizon)| <= min(tol, decay_factor |x0|).
ClosedLoopReport VerifyClosedLoop(const PolySystem& sys, const Controller& ctrl,
                                  const std::vector<Eigen::VectorXd>& initial,
                                  const ClosedLoopOptions& opts = {});

/// `count` equally spaced points on the circle of the given radius
/// (two-state systems).
std::vector<Eigen::VectorXd> CirclePoints(int count, double radius = 1.0);

}  // namespace ddsos
