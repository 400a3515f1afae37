// ddsos: experiment -> rank -> synthesize -> verify -> export-sdpa.
//
// Exit codes: 0 ok, 1 usage or input error, 2 simulation blow-up,
// 3 infeasible program, 4 data rank failure, 5 verification failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ddsos/file_io.h"
#include "ddsos/plant.h"
#include "ddsos/sdpa_io.h"
#include "ddsos/sos_compile.h"
#include "ddsos/synthesis.h"
#include "ddsos/verification.h"

namespace fs = std::filesystem;
using namespace ddsos;

namespace {

enum ExitCode {
  kOk = 0,
  kUsage = 1,
  kBlowUp = 2,
  kInfeasible = 3,
  kRankFailure = 4,
  kVerifyFailure = 5,
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path DefaultOutDir() {
  const char* env = std::getenv("DDSOS_OUT_DIR");
  return env && *env ? fs::path(env) : fs::path(".");
}

fs::path Require(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(fmt::format("missing {} path", what));
  if (!fs::is_regular_file(path)) {
    throw UsageError(fmt::format("{} file '{}' does not exist", what, path));
  }
  return path;
}

struct Common {
  std::string out;
  std::string options;
  fs::path out_dir() const { return out.empty() ? DefaultOutDir() : fs::path(out); }
};

void AddCommon(CLI::App* cmd, Common* c) {
  cmd->add_option("-o,--out", c->out,
                  "Output directory (default: $DDSOS_OUT_DIR or .)");
  cmd->add_option("--options", c->options, "Options file (key = value)");
}

// SOS overrides shared by synthesize and export-sdpa.
struct SosFlags {
  std::optional<double> mu;
  std::optional<std::string> epsilon;
  std::optional<int> y_degree;
  std::optional<int> gram_pad;
  std::optional<double> bound;
};

void AddSosFlags(CLI::App* cmd, SosFlags* f) {
  cmd->add_option("--mu", f->mu, "Margin on P (default 1e-3)");
  cmd->add_option("--epsilon", f->epsilon,
                  "Fixed SOS slack polynomial, e.g. \"1e-5*x1^2 + 1e-5*x2^2\"");
  cmd->add_option("--y-degree", f->y_degree, "Degree of Y(x) (default 1)");
  cmd->add_option("--gram-pad", f->gram_pad, "Extra Gram basis degree");
  cmd->add_option("--coefficient-bound", f->bound,
                  "Bound on the sum of absolute Y coefficients");
}

RunOptions LoadOptions(const Common& c, int n, const SosFlags* f = nullptr) {
  RunOptions o;
  if (!c.options.empty()) {
    o = ParseRunOptions(
        ParseKeyValues(ReadTextFile(Require(c.options, "options")), c.options),
        n);
  }
  if (f) {
    if (f->mu) o.sos.mu = *f->mu;
    if (f->epsilon) o.sos.epsilon = Polynomial::Parse(*f->epsilon, n);
    if (f->y_degree) o.sos.y_degree = *f->y_degree;
    if (f->gram_pad) o.sos.gram_degree_pad = *f->gram_pad;
    if (f->bound) o.sos.coefficient_bound = *f->bound;
    o.sos.Validate(n);
  }
  return o;
}

PolySystem LoadSystem(const std::string& path) {
  return ParseSystem(
      ParseKeyValues(ReadTextFile(Require(path, "system")), path));
}

DataRecord LoadData(const std::string& path) {
  return DataRecordFromCsv(ReadTextFile(Require(path, "data")));
}

void Write(const fs::path& path, std::string_view text) {
  WriteTextFile(path, text);
  fmt::print("wrote {}\n", path.string());
}

std::string RankSummary(const DataMatrices& dm) {
  std::string sv;
  for (int i = 0; i < dm.rank_report.singular_values.size(); ++i) {
    sv += fmt::format("{}{:.6g}", i ? " " : "", dm.rank_report.singular_values(i));
  }
  return fmt::format(
      "N = {}, T = {}, rank = {}, sigma_min = {:.6g}, tolerance = {:.3g}\n"
      "singular values: {}\n",
      dm.N(), dm.T(), dm.rank_report.rank, dm.rank_report.sigma_min(),
      dm.rank_report.tolerance, sv);
}

int CmdExperiment(const std::string& system, const std::string& experiment,
                  const Common& c) {
  const PolySystem sys = LoadSystem(system);
  const ExperimentConfig cfg = ParseExperiment(ParseKeyValues(
      ReadTextFile(Require(experiment, "experiment")), experiment));
  if (cfg.x0.size() != sys.n() || cfg.input.num_inputs() != sys.m()) {
    throw UsageError(fmt::format(
        "experiment has {} states and {} inputs; system has {} and {}",
        cfg.x0.size(), cfg.input.num_inputs(), sys.n(), sys.m()));
  }
  const Trajectory traj = ExperimentTrajectory(sys, cfg);
  const DataRecord rec = RunExperiment(sys, cfg);
  fmt::print("{:>10}", "t");
  for (int i = 1; i <= sys.n(); ++i) fmt::print(" {:>10}", fmt::format("x{}", i));
  for (int i = 1; i <= sys.n(); ++i) fmt::print(" {:>10}", fmt::format("dx{}", i));
  for (int j = 1; j <= sys.m(); ++j) fmt::print(" {:>10}", fmt::format("u{}", j));
  fmt::print("\n");
  for (int k = 0; k < rec.num_samples(); ++k) {
    fmt::print("{:>10.4f}", rec.times(k));
    for (int i = 0; i < sys.n(); ++i) fmt::print(" {:>10.4f}", rec.X0(i, k));
    for (int i = 0; i < sys.n(); ++i) fmt::print(" {:>10.4f}", rec.X1(i, k));
    for (int j = 0; j < sys.m(); ++j) fmt::print(" {:>10.4f}", rec.U(j, k));
    fmt::print("\n");
  }
  Write(c.out_dir() / "data.csv", DataRecordToCsv(rec));
  Write(c.out_dir() / "experiment_trajectory.csv", TrajectoryToCsv(traj));
  return kOk;
}

int CmdRank(const std::string& data, const Common& c) {
  const DataRecord rec = LoadData(data);
  const RunOptions o = LoadOptions(c, rec.num_states());
  rec.Validate();
  const Eigen::MatrixXd Z0T = EvaluateMonomialData(rec.Z, rec.X0);
  DataMatrices dm{rec, Z0T, NumericalRank(Z0T, o.rank_factor)};
  fmt::print("{}", RankSummary(dm));
  if (dm.T() < dm.N()) {
    fmt::print(stderr,
               "rank check failed: T = {} < N = {} samples; the data matrix "
               "cannot have full row rank\n",
               dm.T(), dm.N());
    return kRankFailure;
  }
  if (dm.rank_report.rank < dm.N()) {
    fmt::print(stderr,
               "rank check failed: Z0T has rank {} < N = {}; the data "
               "matrix does not have full row rank\n",
               dm.rank_report.rank, dm.N());
    return kRankFailure;
  }
  fmt::print("full row rank: ok\n");
  return kOk;
}

std::string SolverLog(const SdpSolution& sol) {
  std::string out = fmt::format(
      "status = {}\niterations = {}\nprimal_objective = {:.12g}\n"
      "dual_objective = {:.12g}\nprimal_residual = {:.3e}\n"
      "dual_residual = {:.3e}\nrelative_gap = {:.3e}\nmessage = {}\n",
      ToString(sol.status), sol.iterations, sol.primal_objective,
      sol.dual_objective, sol.primal_residual, sol.dual_residual,
      sol.relative_gap, sol.message);
  out += "# it pobj dobj pres dres gap mu sigma alpha_p alpha_d\n";
  for (const auto& h : sol.history) {
    out += fmt::format(
        "# {:3d} {: .10e} {: .10e} {:.2e} {:.2e} {:.2e} {:.2e} {:.2e} "
        "{:.3f} {:.3f}\n",
        h.iteration, h.primal_objective, h.dual_objective, h.primal_residual,
        h.dual_residual, h.relative_gap, h.mu, h.sigma, h.primal_step,
        h.dual_step);
  }
  return out;
}

int CmdSynthesize(const std::string& data, const std::string& model,
                  const SosFlags& flags, const Common& c) {
  if (data.empty() == model.empty()) {
    throw UsageError("give exactly one of --data or --model");
  }
  SynthesisResult res;
  try {
    if (!model.empty()) {
      const PolySystem sys = LoadSystem(model);
      const RunOptions o = LoadOptions(c, sys.n(), &flags);
      res = ModelBasedSynthesize(sys.A, sys.B, sys.Z, o.sos, o.solver);
    } else {
      const DataRecord rec = LoadData(data);
      const RunOptions o = LoadOptions(c, rec.num_states(), &flags);
      const DataMatrices dm = BuildDataMatrices(rec, o.rank_factor);
      fmt::print("{}", RankSummary(dm));
      res = Synthesize(dm, o.sos, o.solver);
    }
  } catch (const SosInfeasibleError& e) {
    fmt::print(stderr, "infeasible: {}\nmargin t* = {:.6e}\n", e.what(),
               e.margin());
    return kInfeasible;
  } catch (const MarginalFeasibilityError& e) {
    fmt::print(stderr, "marginal feasibility: {}\n", e.what());
    return kInfeasible;
  }
  fmt::print("feasible, margin t* = {:.6e}, {} solver iterations\n",
             res.certificate.margin, res.solution.iterations);
  const MatrixPolynomial u = res.controller.InputPolynomial();
  for (int i = 0; i < u.rows(); ++i) {
    fmt::print("u{} = {}\n", i + 1, u(i, 0).ToString());
  }
  Write(c.out_dir() / "controller.txt", ControllerToText(res.controller));
  Write(c.out_dir() / "certificate.txt", CertificateToText(res.certificate));
  Write(c.out_dir() / "solver.log", SolverLog(res.solution));
  return kOk;
}

int CmdVerify(const std::string& system, const std::string& controller,
              const std::string& certificate, const std::string& data,
              const std::string& lyapunov_p, const Common& c) {
  const PolySystem sys = LoadSystem(system);
  const Controller ctrl =
      ControllerFromText(ReadTextFile(Require(controller, "controller")));
  const RunOptions o = LoadOptions(c, sys.n());
  if (ctrl.num_inputs() != sys.m() || ctrl.Z.size() != sys.N() ||
      ctrl.Z.num_vars() != sys.n()) {
    throw UsageError("controller does not match the system dimensions");
  }
  bool ok = true;
  std::string report;
  std::optional<Eigen::MatrixXd> P;
  if (!certificate.empty()) {
    const LyapunovCertificate cert =
        CertificateFromText(ReadTextFile(Require(certificate, "certificate")));
    P = cert.P;
    MatrixPolynomial Q;
    if (cert.provenance == Provenance::kModelBased) {
      Q = BuildModelBasedQ(sys.A, sys.B, sys.Z, cert.P, cert.Y, cert.epsilon);
    } else {
      if (data.empty()) {
        throw UsageError("a data-driven certificate needs --data");
      }
      Q = BuildQTemplate(BuildDataMatrices(LoadData(data), o.rank_factor),
                         cert.Y, cert.epsilon);
    }
    const CertificateReport cr = CertificateCheck(cert, Q);
    report += fmt::format(
        "certificate.gram_psd = {} (lambda_min {:.3e})\n"
        "certificate.reconstruction = {} (residual {:.3e})\n"
        "certificate.p_margin = {} (lambda_min(P) {:.6e}, mu {})\n",
        cr.gram_psd ? "pass" : "FAIL", cr.gram_min_eigenvalue,
        cr.reconstruction_ok ? "pass" : "FAIL", cr.reconstruction_residual,
        cr.p_margin_ok ? "pass" : "FAIL", cr.p_min_eigenvalue, cert.mu);
    ok = ok && cr.passed();
  } else {
    report += "certificate = skipped (no certificate given)\n";
  }
  if (!lyapunov_p.empty()) P = ParseMatrix(lyapunov_p);
  if (P) {
    const VdotReport vr = PlantSideVdot(sys, ctrl, *P, o.grid);
    report += fmt::format(
        "vdot = {} (max {:.3e} at [{}] over {} grid points on [{}, {}]^{})\n",
        vr.passed() ? "pass" : "FAIL", vr.max_vdot,
        FormatMatrix(vr.argmax.transpose()), vr.points, o.grid.lo, o.grid.hi,
        sys.n());
    ok = ok && vr.passed();
  } else {
    report += "vdot = skipped (no P from a certificate or --P)\n";
  }
  std::vector<Eigen::VectorXd> initial;
  if (sys.n() == 2) {
    initial = CirclePoints(o.circle_points, o.circle_radius);
  } else {
    for (int i = 0; i < sys.n(); ++i) {
      for (double s : {1.0, -1.0}) {
        initial.push_back(
            s * o.circle_radius * Eigen::VectorXd::Unit(sys.n(), i));
      }
    }
  }
  const ClosedLoopReport cl = VerifyClosedLoop(sys, ctrl, initial, o.closed_loop);
  report += fmt::format("closed_loop = {} (worst |x({})| = {:.3e}, tol {})\n",
                        cl.passed() ? "pass" : "FAIL", o.closed_loop.horizon,
                        cl.worst_final_norm(), o.closed_loop.tol);
  for (const auto& r : cl.runs) {
    report += fmt::format("  x0 = [{}]: {} {}\n", FormatMatrix(r.x0.transpose()),
                          r.passed ? "pass" : "FAIL", r.detail);
  }
  ok = ok && cl.passed();
  report += "note: stability is checked on a bounded box and a finite set of "
            "initial states only\n";

  std::vector<Trajectory> runs;
  const double horizon = o.closed_loop.horizon;
  for (const auto& x0 : initial) {
    try {
      runs.push_back(
          SimulateClosedLoop(sys, ctrl, x0, 0.0, horizon, o.closed_loop.step));
    } catch (const DivergenceError&) {
      // Diverged runs are reported above; the portrait keeps the others.
    }
  }
  const int stride =
      std::max(1, static_cast<int>(std::lround(0.05 / o.closed_loop.step)));
  fmt::print("{}", report);
  Write(c.out_dir() / "verify_report.txt", report);
  Write(c.out_dir() / "phase_portrait.csv", PhasePortraitCsv(runs, stride));
  return ok ? kOk : kVerifyFailure;
}

int CmdExportSdpa(const std::string& data, const std::string& scalar, int vars,
                  int pad, const std::string& file, const SosFlags& flags,
                  const Common& c) {
  SdpProblem prob;
  if (!scalar.empty()) {
    if (!data.empty()) throw UsageError("give either --data or --scalar");
    if (vars < 1) throw UsageError("--vars must be positive");
    prob = CompileScalarSos(Polynomial::Parse(scalar, vars), pad).problem;
  } else {
    if (data.empty()) throw UsageError("missing data path (or --scalar)");
    const DataRecord rec = LoadData(data);
    const RunOptions o = LoadOptions(c, rec.num_states(), &flags);
    prob = CompileDataDriven(BuildDataMatrices(rec, o.rank_factor), o.sos)
               .problem;
  }
  const std::string text = ToSdpaString(prob);
  if (ToSdpaString(ParseSdpa(text)) != text) {
    throw std::runtime_error("SDPA round trip mismatch");
  }
  fs::path path = file.empty() ? c.out_dir() / "problem.dat-s" : fs::path(file);
  fmt::print("{} constraints, {} blocks\n", prob.num_constraints(),
             prob.num_blocks());
  Write(path, text);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven SOS controller synthesis for polynomial systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ddsos 0.1.0");

  Common common;
  std::string system, experiment, data, model, controller, certificate,
      lyapunov_p, scalar, file;
  int vars = 1;
  int pad = 0;
  SosFlags flags;

  auto* exp = app.add_subcommand("experiment", "Simulate an experiment and "
                                               "write its data record");
  exp->add_option("--system", system, "System file")->required();
  exp->add_option("--experiment", experiment, "Experiment file")->required();
  AddCommon(exp, &common);

  auto* rank = app.add_subcommand("rank", "Check that the data has full row "
                                          "rank");
  rank->add_option("--data", data, "Data CSV")->required();
  AddCommon(rank, &common);

  auto* syn = app.add_subcommand("synthesize", "Solve the SOS program and "
                                               "write the controller");
  syn->add_option("--data", data, "Data CSV (data-driven synthesis)");
  syn->add_option("--model", model, "System file (model-based synthesis)");
  AddSosFlags(syn, &flags);
  AddCommon(syn, &common);

  auto* ver = app.add_subcommand("verify", "Check a controller against a "
                                           "plant");
  ver->add_option("--system", system, "System file")->required();
  ver->add_option("--controller", controller, "Controller file")->required();
  ver->add_option("--certificate", certificate, "Certificate file");
  ver->add_option("--data", data, "Data CSV for a data-driven certificate");
  ver->add_option("--P", lyapunov_p,
                  "Lyapunov matrix when no certificate is given, e.g. "
                  "\"0.0065 0; 0 0.0031\"");
  AddCommon(ver, &common);

  auto* sdpa = app.add_subcommand("export-sdpa", "Write the compiled SDP in "
                                                 "SDPA sparse format");
  sdpa->add_option("--data", data, "Data CSV");
  sdpa->add_option("--scalar", scalar, "Scalar polynomial SOS test instead");
  sdpa->add_option("--vars", vars, "Variable count for --scalar");
  sdpa->add_option("--pad", pad, "Gram degree pad for --scalar");
  sdpa->add_option("--file", file, "Output file (default <out>/problem.dat-s)");
  AddSosFlags(sdpa, &flags);
  AddCommon(sdpa, &common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*exp) return CmdExperiment(system, experiment, common);
    if (*rank) return CmdRank(data, common);
    if (*syn) return CmdSynthesize(data, model, flags, common);
    if (*ver) {
      return CmdVerify(system, controller, certificate, data, lyapunov_p,
                       common);
    }
    if (*sdpa) {
      return CmdExportSdpa(data, scalar, vars, pad, file, flags, common);
    }
  } catch (const DivergenceError& e) {
    fmt::print(stderr, "blow-up: {}\n", e.what());
    return kBlowUp;
  } catch (const DataRankError& e) {
    fmt::print(stderr, "rank failure: {}\n", e.what());
    return kRankFailure;
  } catch (const UsageError& e) {
    fmt::print(stderr, "usage: {}\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsage;
  }
  return kUsage;
}
