#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ddsos/data.h"
#include "ddsos/file_io.h"
#include "ddsos/plant.h"
#include "ddsos/poly.h"
#include "ddsos/sdp.h"
#include "ddsos/sdpa_io.h"
#include "ddsos/sos_compile.h"
#include "ddsos/synthesis.h"
#include "ddsos/verification.h"

namespace py = pybind11;

namespace ddsos {
namespace {

std::vector<std::vector<std::string>> EntryStrings(const MatrixPolynomial& m) {
  std::vector<std::vector<std::string>> out(m.rows());
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) out[i].push_back(m(i, j).ToString());
  }
  return out;
}

PolySystem MakeSystem(const std::string& z, int n, const Eigen::MatrixXd& A,
                      const Eigen::MatrixXd& B) {
  PolySystem sys{A, B, MonomialVector::Parse(z, n)};
  sys.Validate();
  return sys;
}

}  // namespace

PYBIND11_MODULE(_ddsos, m) {
  m.doc() = "Data-driven SOS controller synthesis for polynomial systems";

  py::register_exception<DataRankError>(m, "DataRankError");
  py::register_exception<SosInfeasibleError>(m, "SosInfeasibleError");
  py::register_exception<MarginalFeasibilityError>(m,
                                                   "MarginalFeasibilityError");
  py::register_exception<DivergenceError>(m, "DivergenceError");
  py::register_exception<FormatError>(m, "FormatError");

  py::class_<Polynomial>(m, "Polynomial")
      .def(py::init([](const std::string& text, int n) {
             return Polynomial::Parse(text, n);
           }),
           py::arg("text"), py::arg("num_vars"))
      .def_property_readonly("num_vars", &Polynomial::num_vars)
      .def_property_readonly("degree", &Polynomial::degree)
      .def("__call__",
           [](const Polynomial& p, const Eigen::VectorXd& x) {
             return p.Evaluate(x);
           })
      .def("__str__", &Polynomial::ToString)
      .def("__repr__",
           [](const Polynomial& p) { return "Polynomial('" + p.ToString() + "')"; })
      .def(py::self + py::self)
      .def(py::self - py::self)
      .def(py::self * py::self)
      .def(py::self == py::self);

  py::class_<MonomialVector>(m, "MonomialVector")
      .def(py::init([](const std::string& text, int n) {
             return MonomialVector::Parse(text, n);
           }),
           py::arg("text"), py::arg("num_vars"))
      .def("__len__", &MonomialVector::size)
      .def("__call__", [](const MonomialVector& z,
                          const Eigen::VectorXd& x) { return z.Evaluate(x); })
      .def("__str__", &MonomialVector::ToString);

  py::class_<PolySystem>(m, "PolySystem")
      .def(py::init(&MakeSystem), py::arg("Z"), py::arg("num_vars"),
           py::arg("A"), py::arg("B"))
      .def_static("from_text", [](const std::string& text) {
        return ParseSystem(ParseKeyValues(text));
      })
      .def_readonly("A", &PolySystem::A)
      .def_readonly("B", &PolySystem::B)
      .def_property_readonly("n", &PolySystem::n)
      .def_property_readonly("m", &PolySystem::m)
      .def_property_readonly("N", &PolySystem::N)
      .def("derivative", &PolySystem::Derivative, py::arg("x"), py::arg("u"))
      .def("to_text", [](const PolySystem& s) { return FormatSystem(s); });

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_static("from_text", [](const std::string& text) {
        return ParseExperiment(ParseKeyValues(text));
      })
      .def_readwrite("t0", &ExperimentConfig::t0)
      .def_readwrite("tau", &ExperimentConfig::tau)
      .def_readwrite("num_samples", &ExperimentConfig::num_samples)
      .def_readwrite("x0", &ExperimentConfig::x0)
      .def_readwrite("integrator_step", &ExperimentConfig::integrator_step)
      .def_readwrite("derivative_noise_std",
                     &ExperimentConfig::derivative_noise_std)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def("to_text", [](const ExperimentConfig& c) { return FormatExperiment(c); });

  py::class_<DataRecord>(m, "DataRecord")
      .def_static("from_csv", [](const std::string& text) {
        return DataRecordFromCsv(text);
      })
      .def_readonly("U", &DataRecord::U)
      .def_readonly("X0", &DataRecord::X0)
      .def_readonly("X1", &DataRecord::X1)
      .def_readonly("times", &DataRecord::times)
      .def_readonly("meta", &DataRecord::meta)
      .def("to_csv", [](const DataRecord& r) { return DataRecordToCsv(r); });

  py::class_<RankReport>(m, "RankReport")
      .def_readonly("rank", &RankReport::rank)
      .def_readonly("singular_values", &RankReport::singular_values)
      .def_readonly("tolerance", &RankReport::tolerance)
      .def_property_readonly("sigma_min", &RankReport::sigma_min);

  py::class_<DataMatrices>(m, "DataMatrices")
      .def_readonly("record", &DataMatrices::record)
      .def_readonly("Z0T", &DataMatrices::Z0T)
      .def_readonly("rank_report", &DataMatrices::rank_report);

  m.def("run_experiment", &RunExperiment, py::arg("system"), py::arg("config"));
  m.def("numerical_rank", &NumericalRank, py::arg("matrix"),
        py::arg("tolerance_factor") = 1e6);
  m.def("build_data_matrices", &BuildDataMatrices, py::arg("record"),
        py::arg("tolerance_factor") = 1e6);

  py::class_<SosOptions>(m, "SosOptions")
      .def(py::init<>())
      .def_readwrite("y_degree", &SosOptions::y_degree)
      .def_readwrite("mu", &SosOptions::mu)
      .def_readwrite("epsilon", &SosOptions::epsilon)
      .def_readwrite("epsilon_scale", &SosOptions::epsilon_scale)
      .def_readwrite("gram_degree_pad", &SosOptions::gram_degree_pad)
      .def_readwrite("coefficient_bound", &SosOptions::coefficient_bound);

  py::class_<Controller>(m, "Controller")
      .def_static("from_text", [](const std::string& text) {
        return ControllerFromText(text);
      })
      .def_static("zero", &Controller::Zero, py::arg("Z"), py::arg("num_inputs"))
      .def("__call__", &Controller::Evaluate)
      .def_property_readonly("num_inputs", &Controller::num_inputs)
      .def_property_readonly(
          "provenance", [](const Controller& c) { return std::string(ToString(c.provenance)); })
      .def_property_readonly(
          "F", [](const Controller& c) { return EntryStrings(c.F); })
      .def_property_readonly("u", [](const Controller& c) {
        std::vector<std::string> out;
        const MatrixPolynomial u = c.InputPolynomial();
        for (int i = 0; i < u.rows(); ++i) out.push_back(u(i, 0).ToString());
        return out;
      })
      .def("to_text", [](const Controller& c) { return ControllerToText(c); });

  py::class_<LyapunovCertificate>(m, "LyapunovCertificate")
      .def_readonly("P", &LyapunovCertificate::P)
      .def_readonly("Theta", &LyapunovCertificate::Theta)
      .def_readonly("mu", &LyapunovCertificate::mu)
      .def_readonly("margin", &LyapunovCertificate::margin)
      .def("V", &LyapunovCertificate::V)
      .def("to_text",
           [](const LyapunovCertificate& c) { return CertificateToText(c); });

  py::class_<SynthesisResult>(m, "SynthesisResult")
      .def_readonly("controller", &SynthesisResult::controller)
      .def_readonly("certificate", &SynthesisResult::certificate)
      .def_property_readonly("iterations", [](const SynthesisResult& r) {
        return r.solution.iterations;
      });

  m.def(
      "synthesize",
      [](const DataMatrices& dm, const SosOptions& opts) {
        return Synthesize(dm, opts);
      },
      py::arg("data"), py::arg("options") = SosOptions{});
  m.def(
      "model_based_synthesize",
      [](const PolySystem& sys, const SosOptions& opts) {
        return ModelBasedSynthesize(sys.A, sys.B, sys.Z, opts);
      },
      py::arg("system"), py::arg("options") = SosOptions{});
  m.def(
      "optimal_margin",
      [](const DataMatrices& dm, const SosOptions& opts) {
        const CompiledSos c = CompileDataDriven(dm, opts);
        return DecodeSolution(c.program, SolveSdp(c.problem)).margin;
      },
      py::arg("data"), py::arg("options") = SosOptions{},
      "Optimal margin t* of the data-driven program, without acceptance "
      "checks.");
  m.def(
      "extract_controller",
      [](const DataMatrices& dm, const std::vector<std::vector<std::string>>& y,
         const Eigen::MatrixXd& P, double tol) {
        const int n = dm.n();
        MatrixPolynomial Y(static_cast<int>(y.size()),
                           y.empty() ? 0 : static_cast<int>(y[0].size()), n);
        for (int i = 0; i < Y.rows(); ++i) {
          for (int j = 0; j < Y.cols(); ++j) {
            Y(i, j) = Polynomial::Parse(y[i].at(j), n);
          }
        }
        return ExtractController(dm, Y, P, tol);
      },
      py::arg("data"), py::arg("Y"), py::arg("P"),
      py::arg("constancy_tol") = 1e-8);

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init<>())
      .def_readwrite("lo", &GridSpec::lo)
      .def_readwrite("hi", &GridSpec::hi)
      .def_readwrite("points_per_axis", &GridSpec::points_per_axis)
      .def_readwrite("exclusion_radius", &GridSpec::exclusion_radius);

  py::class_<VdotReport>(m, "VdotReport")
      .def_readonly("max_vdot", &VdotReport::max_vdot)
      .def_readonly("argmax", &VdotReport::argmax)
      .def_readonly("points", &VdotReport::points)
      .def_property_readonly("passed", &VdotReport::passed);
  m.def("plant_side_vdot", &PlantSideVdot, py::arg("system"),
        py::arg("controller"), py::arg("P"), py::arg("grid") = GridSpec{});

  py::class_<ClosedLoopOptions>(m, "ClosedLoopOptions")
      .def(py::init<>())
      .def_readwrite("horizon", &ClosedLoopOptions::horizon)
      .def_readwrite("step", &ClosedLoopOptions::step)
      .def_readwrite("tol", &ClosedLoopOptions::tol)
      .def_readwrite("decay_factor", &ClosedLoopOptions::decay_factor);
  py::class_<ClosedLoopRun>(m, "ClosedLoopRun")
      .def_readonly("x0", &ClosedLoopRun::x0)
      .def_readonly("final_norm", &ClosedLoopRun::final_norm)
      .def_readonly("diverged", &ClosedLoopRun::diverged)
      .def_readonly("passed", &ClosedLoopRun::passed)
      .def_readonly("detail", &ClosedLoopRun::detail);
  py::class_<ClosedLoopReport>(m, "ClosedLoopReport")
      .def_readonly("runs", &ClosedLoopReport::runs)
      .def_property_readonly("passed", &ClosedLoopReport::passed)
      .def_property_readonly("worst_final_norm",
                             &ClosedLoopReport::worst_final_norm);
  m.def("verify_closed_loop", &VerifyClosedLoop, py::arg("system"),
        py::arg("controller"), py::arg("initial_states"),
        py::arg("options") = ClosedLoopOptions{});
  m.def("circle_points", &CirclePoints, py::arg("count"),
        py::arg("radius") = 1.0);

  py::class_<ScalarSosResult>(m, "ScalarSosResult")
      .def_readonly("is_sos", &ScalarSosResult::is_sos)
      .def_readonly("Theta", &ScalarSosResult::Theta)
      .def_readonly("residual", &ScalarSosResult::residual)
      .def_property_readonly("status", [](const ScalarSosResult& r) {
        return std::string(ToString(r.status));
      });
  m.def(
      "check_scalar_sos",
      [](const Polynomial& p, int pad) { return CheckScalarSos(p, pad); },
      py::arg("p"), py::arg("degree_pad") = 0);

  m.def(
      "solve_sdpa",
      [](const std::string& text) {
        const SdpSolution s = SolveSdp(ParseSdpa(text));
        py::dict d;
        d["status"] = std::string(ToString(s.status));
        d["primal_objective"] = s.primal_objective;
        d["dual_objective"] = s.dual_objective;
        d["relative_gap"] = s.relative_gap;
        d["iterations"] = s.iterations;
        d["y"] = s.y;
        return d;
      },
      py::arg("text"),
      "Solves an SDPA dat-s problem given as text and returns a summary.");
  m.def(
      "export_sdpa",
      [](const DataMatrices& dm, const SosOptions& opts) {
        return ToSdpaString(CompileDataDriven(dm, opts).problem);
      },
      py::arg("data"), py::arg("options") = SosOptions{});
}

}  // namespace ddsos
