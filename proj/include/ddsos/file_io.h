#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ddsos/controller.h"
#include "ddsos/data.h"
#include "ddsos/plant.h"
#include "ddsos/sdp.h"
#include "ddsos/sos_compile.h"
#include "ddsos/synthesis.h"
#include "ddsos/verification.h"

namespace ddsos {

/// Parse or format failures in any text format, with file and line context.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "key = value" lines; '#' starts a comment; blank lines are ignored.
/// Duplicate keys are an error.
using KeyValues = std::map<std::string, std::string>;

KeyValues ParseKeyValues(std::string_view text, std::string_view source = "");

std::string ReadTextFile(const std::filesystem::path& path);
/// Creates parent directories as needed.
void WriteTextFile(const std::filesystem::path& path, std::string_view text);

/// Rows separated by ';', entries by whitespace: "1 0; 0 1".
Eigen::MatrixXd ParseMatrix(std::string_view text);
std::string FormatMatrix(const Eigen::MatrixXd& m);
Eigen::VectorXd ParseVector(std::string_view text);

/// System file keys: n, Z, A, B.
PolySystem ParseSystem(const KeyValues& kv);
std::string FormatSystem(const PolySystem& sys);

/// Experiment file keys: t0, tau, samples, x0, integrator_step, noise_std,
/// seed, inputs, and per channel uK.offset and uK.sines ("a f p; a f p").
ExperimentConfig ParseExperiment(const KeyValues& kv);
std::string FormatExperiment(const ExperimentConfig& cfg);

/// Everything tunable from an options file.
struct RunOptions {
  SosOptions sos;
  SolverOptions solver;
  double rank_factor{1e6};
  GridSpec grid;
  ClosedLoopOptions closed_loop;
  int circle_points{12};
  double circle_radius{1.0};
};

/// Options file keys (all optional): y_degree, mu, epsilon, gram_degree_pad,
/// coefficient_bound, tol_feas, tol_gap, tol_psd, max_iters, step_fraction,
/// rank_factor, grid_lo, grid_hi, grid_points, grid_exclusion, horizon,
/// sim_step, sim_tol, decay_factor, circle_points, circle_radius.
RunOptions ParseRunOptions(const KeyValues& kv, int n);

/// CSV with '#' metadata lines (Z, n, m, then meta entries) and columns
/// t, x1..xn, dx1..dxn, u1..um.
std::string DataRecordToCsv(const DataRecord& rec);
DataRecord DataRecordFromCsv(std::string_view text);

/// Controller text: provenance, n, Z, inputs and one "F(i,j) = poly" line
/// per entry.
std::string ControllerToText(const Controller& ctrl);
Controller ControllerFromText(std::string_view text);

std::string CertificateToText(const LyapunovCertificate& cert);
LyapunovCertificate CertificateFromText(std::string_view text);

/// Columns t, x1..xn, u1..um.
std::string TrajectoryToCsv(const Trajectory& traj);

/// Columns run, t, x1..xn; one block of rows per trajectory.
std::string PhasePortraitCsv(const std::vector<Trajectory>& runs,
                             int stride = 1);

}  // namespace ddsos
