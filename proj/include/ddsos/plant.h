#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ddsos/controller.h"
#include "ddsos/data.h"
#include "ddsos/poly.h"

namespace ddsos {

/// Ground-truth polynomial plant xdot = A Z(x) + B u.
///
/// A is n x N. The literature sometimes writes A as n x n; that only agrees
/// with Z(x) in R^N when n == N.
struct PolySystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  MonomialVector Z;

  int n() const { return Z.num_vars(); }
  int m() const { return static_cast<int>(B.cols()); }
  int N() const { return Z.size(); }

  /// Throws std::invalid_argument on shape errors or when Z is not certified
  /// to vanish only at the origin.
  void Validate() const;

  Eigen::VectorXd Derivative(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u) const;
};

/// Sum of sinusoids per input channel:
///   u_j(t) = offset_j + sum_k amplitude_k sin(frequency_k t + phase_k).
struct Sinusoid {
  double amplitude{0.0};
  double frequency{0.0};  // rad/s
  double phase{0.0};      // rad
};

struct InputChannel {
  double offset{0.0};
  std::vector<Sinusoid> sinusoids;
};

struct InputSignal {
  std::vector<InputChannel> channels;
  int num_inputs() const { return static_cast<int>(channels.size()); }
  Eigen::VectorXd operator()(double t) const;
};

struct ExperimentConfig {
  double t0{0.0};
  double tau{1.0};
  int num_samples{1};
  Eigen::VectorXd x0;
  InputSignal input;
  double integrator_step{1e-3};
  double derivative_noise_std{0.0};
  std::uint64_t seed{0};

  double horizon_end() const { return t0 + (num_samples - 1) * tau; }

  /// Throws std::invalid_argument on nonpositive sizes, a step that exceeds
  /// or does not divide tau, or a negative noise level.
  void Validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;

  int size() const { return static_cast<int>(times.size()); }
  const Eigen::VectorXd& final_state() const { return states.back(); }
};

/// The state left the finite range during integration.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(double time, const std::string& what)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

using InputFunction = std::function<Eigen::VectorXd(double t,
                                                    const Eigen::VectorXd& x)>;

/// States beyond this norm count as diverged.
inline constexpr double kDivergenceNorm = 1e8;

/// Fixed-step classical RK4 for xdot = A Z(x) + B u(t, x) over [t_begin,
/// t_end]. Output holds every integrator step. The step count is
/// round((t_end - t_begin) / step); the step must divide the span to 1e-9
/// relative accuracy.
///
/// Throws DivergenceError (carrying the time) if the state becomes
/// non-finite or its norm exceeds kDivergenceNorm.
Trajectory Simulate(const PolySystem& sys, const InputFunction& input,
                    const Eigen::VectorXd& x0, double t_begin, double t_end,
                    double step);

/// Open-loop simulation driven by a time signal.
Trajectory Simulate(const PolySystem& sys, const InputSignal& input,
                    const Eigen::VectorXd& x0, double t_begin, double t_end,
                    double step);

/// Integrates xdot = A Z(x) + B F(x) Z(x).
Trajectory SimulateClosedLoop(const PolySystem& sys, const Controller& ctrl,
                              const Eigen::VectorXd& x0, double t_begin,
                              double t_end, double step);

/// Runs one experiment and samples it at t0 + k tau.
///
/// X1 holds the model right-hand side at each sample instant plus i.i.d.
/// N(0, derivative_noise_std^2) perturbations from a generator seeded with
/// cfg.seed; identical inputs give bit-identical records.
DataRecord RunExperiment(const PolySystem& sys, const ExperimentConfig& cfg);

/// Simulated trajectory of the experiment (every integrator step).
Trajectory ExperimentTrajectory(const PolySystem& sys,
                                const ExperimentConfig& cfg);

}  // namespace ddsos
