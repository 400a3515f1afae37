#include "ddsos/plant.h"

#include <cmath>
#include <random>

#include <fmt/format.h>

namespace ddsos {

void PolySystem::Validate() const {
  if (A.rows() != n() || A.cols() != N()) {
    throw std::invalid_argument(
        fmt::format("PolySystem: A is {}x{}, expected n x N = {}x{}", A.rows(),
                    A.cols(), n(), N()));
  }
  if (B.rows() != n() || B.cols() < 1) {
    throw std::invalid_argument(fmt::format(
        "PolySystem: B is {}x{}, expected {} rows and at least one column",
        B.rows(), B.cols(), n()));
  }
  if (Z.origin_vanishing() != OriginVanishing::kCertified) {
    throw std::invalid_argument(fmt::format(
        "PolySystem: Z = [{}] must contain a pure power of every state "
        "variable",
        Z.ToString()));
  }
}

Eigen::VectorXd PolySystem::Derivative(const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& u) const {
  return A * Z.Evaluate(x) + B * u;
}

Eigen::VectorXd InputSignal::operator()(double t) const {
  Eigen::VectorXd u(num_inputs());
  for (int j = 0; j < num_inputs(); ++j) {
    double v = channels[j].offset;
    for (const auto& s : channels[j].sinusoids) {
      v += s.amplitude * std::sin(s.frequency * t + s.phase);
    }
    u(j) = v;
  }
  return u;
}

namespace {

// Number of whole steps of length `step` in `span`, or -1 if it is not whole.
long StepCount(double span, double step) {
  const double ratio = span / step;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) return -1;
  return static_cast<long>(rounded);
}

}  // namespace

void ExperimentConfig::Validate() const {
  if (num_samples < 1) {
    throw std::invalid_argument("experiment: sample count must be positive");
  }
  if (!(tau > 0.0)) {
    throw std::invalid_argument("experiment: sampling period must be positive");
  }
  if (!(integrator_step > 0.0) || integrator_step > tau) {
    throw std::invalid_argument(
        "experiment: integrator step must be in (0, tau]");
  }
  if (StepCount(tau, integrator_step) < 1) {
    throw std::invalid_argument(fmt::format(
        "experiment: integrator step {} does not divide tau {}",
        integrator_step, tau));
  }
  if (!(derivative_noise_std >= 0.0)) {
    throw std::invalid_argument("experiment: noise level must be >= 0");
  }
  if (x0.size() == 0) {
    throw std::invalid_argument("experiment: missing initial state");
  }
}

Trajectory Simulate(const PolySystem& sys, const InputFunction& input,
                    const Eigen::VectorXd& x0, double t_begin, double t_end,
                    double step) {
  if (!(step > 0.0)) throw std::invalid_argument("Simulate: step must be > 0");
  if (!(t_end >= t_begin)) {
    throw std::invalid_argument("Simulate: empty time span");
  }
  if (x0.size() != sys.n()) {
    throw std::invalid_argument(
        fmt::format("Simulate: x0 has dimension {}, expected {}", x0.size(),
                    sys.n()));
  }
  const long steps = StepCount(t_end - t_begin, step);
  if (steps < 0) {
    throw std::invalid_argument(fmt::format(
        "Simulate: step {} does not divide the span [{}, {}]", step, t_begin,
        t_end));
  }

  auto rhs = [&](double t, const Eigen::VectorXd& x) {
    return sys.Derivative(x, input(t, x));
  };

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.inputs.reserve(steps + 1);
  Eigen::VectorXd x = x0;
  for (long k = 0; k <= steps; ++k) {
    // Times are recomputed from the index so sample instants are exact.
    const double t = t_begin + static_cast<double>(k) * step;
    if (!x.allFinite() || x.norm() > kDivergenceNorm) {
      throw DivergenceError(
          t, fmt::format("simulation diverged at t = {:.6g} (|x| = {:.3g})", t,
                         x.norm()));
    }
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.inputs.push_back(input(t, x));
    if (k == steps) break;
    const Eigen::VectorXd k1 = rhs(t, x);
    const Eigen::VectorXd k2 = rhs(t + 0.5 * step, x + 0.5 * step * k1);
    const Eigen::VectorXd k3 = rhs(t + 0.5 * step, x + 0.5 * step * k2);
    const Eigen::VectorXd k4 = rhs(t + step, x + step * k3);
    x += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return traj;
}

Trajectory Simulate(const PolySystem& sys, const InputSignal& input,
                    const Eigen::VectorXd& x0, double t_begin, double t_end,
                    double step) {
  if (input.num_inputs() != sys.m()) {
    throw std::invalid_argument(fmt::format(
        "Simulate: input signal has {} channels, plant has {} inputs",
        input.num_inputs(), sys.m()));
  }
  return Simulate(
      sys, [&input](double t, const Eigen::VectorXd&) { return input(t); }, x0,
      t_begin, t_end, step);
}

Trajectory SimulateClosedLoop(const PolySystem& sys, const Controller& ctrl,
                              const Eigen::VectorXd& x0, double t_begin,
                              double t_end, double step) {
  ctrl.Validate();
  if (ctrl.num_inputs() != sys.m() || ctrl.Z.size() != sys.N() ||
      ctrl.Z.num_vars() != sys.n()) {
    throw std::invalid_argument(fmt::format(
        "SimulateClosedLoop: controller is {}x{} over {} variables, plant "
        "needs {}x{} over {}",
        ctrl.F.rows(), ctrl.F.cols(), ctrl.Z.num_vars(), sys.m(), sys.N(),
        sys.n()));
  }
  return Simulate(
      sys,
      [&ctrl](double, const Eigen::VectorXd& x) { return ctrl.Evaluate(x); },
      x0, t_begin, t_end, step);
}

Trajectory ExperimentTrajectory(const PolySystem& sys,
                                const ExperimentConfig& cfg) {
  sys.Validate();
  cfg.Validate();
  return Simulate(sys, cfg.input, cfg.x0, cfg.t0, cfg.horizon_end(),
                  cfg.integrator_step);
}

DataRecord RunExperiment(const PolySystem& sys, const ExperimentConfig& cfg) {
  const Trajectory traj = ExperimentTrajectory(sys, cfg);
  const long per_sample = StepCount(cfg.tau, cfg.integrator_step);
  const int T = cfg.num_samples;

  DataRecord rec;
  rec.Z = sys.Z;
  rec.U.resize(sys.m(), T);
  rec.X0.resize(sys.n(), T);
  rec.X1.resize(sys.n(), T);
  rec.times.resize(T);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int k = 0; k < T; ++k) {
    const auto idx = static_cast<size_t>(k * per_sample);
    rec.times(k) = cfg.t0 + k * cfg.tau;
    rec.X0.col(k) = traj.states[idx];
    rec.U.col(k) = cfg.input(rec.times(k));
    rec.X1.col(k) = sys.Derivative(rec.X0.col(k), rec.U.col(k));
    if (cfg.derivative_noise_std > 0.0) {
      for (int i = 0; i < sys.n(); ++i) {
        rec.X1(i, k) += cfg.derivative_noise_std * noise(rng);
      }
    }
  }
  rec.meta["t0"] = fmt::format("{}", cfg.t0);
  rec.meta["tau"] = fmt::format("{}", cfg.tau);
  rec.meta["samples"] = fmt::format("{}", T);
  rec.meta["integrator_step"] = fmt::format("{}", cfg.integrator_step);
  rec.meta["noise_std"] = fmt::format("{}", cfg.derivative_noise_std);
  rec.meta["seed"] = fmt::format("{}", cfg.seed);
  return rec;
}

}  // namespace ddsos
