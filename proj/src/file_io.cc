#include "ddsos/file_io.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace ddsos {

namespace {

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> Split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> Lines(std::string_view text) {
  auto lines = Split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

double ParseDouble(std::string_view s, std::string_view what) {
  s = Trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw FormatError(fmt::format("{}: '{}' is not a number", what, s));
  }
  return v;
}

long ParseInteger(std::string_view s, std::string_view what) {
  s = Trim(s);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw FormatError(fmt::format("{}: '{}' is not an integer", what, s));
  }
  return v;
}

std::uint64_t ParseUnsigned(std::string_view s, std::string_view what) {
  s = Trim(s);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw FormatError(
        fmt::format("{}: '{}' is not a nonnegative integer", what, s));
  }
  return v;
}

std::vector<double> ParseNumbers(std::string_view s, std::string_view what) {
  std::vector<double> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(ParseDouble(tok, what));
  return out;
}

// Tracks which keys were consumed so unknown keys can be reported.
class Reader {
 public:
  Reader(const KeyValues& kv, std::string_view what) : kv_(kv), what_(what) {}

  bool Has(const std::string& key) const { return kv_.contains(key); }

  const std::string& Get(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) {
      throw FormatError(fmt::format("{}: missing key '{}'", what_, key));
    }
    used_.push_back(key);
    return it->second;
  }

  double Double(const std::string& key) {
    return ParseDouble(Get(key), Context(key));
  }
  double Double(const std::string& key, double fallback) {
    return Has(key) ? Double(key) : fallback;
  }
  long Integer(const std::string& key) {
    return ParseInteger(Get(key), Context(key));
  }
  long Integer(const std::string& key, long fallback) {
    return Has(key) ? Integer(key) : fallback;
  }

  void CheckAllUsed() const {
    for (const auto& [k, v] : kv_) {
      if (std::find(used_.begin(), used_.end(), k) == used_.end()) {
        throw FormatError(fmt::format("{}: unknown key '{}'", what_, k));
      }
    }
  }

  std::string Context(const std::string& key) const {
    return fmt::format("{} key '{}'", what_, key);
  }

 private:
  const KeyValues& kv_;
  std::string what_;
  std::vector<std::string> used_;
};

std::string Num(double v) { return fmt::format("{}", v); }

MonomialVector ParseZ(std::string_view text, int n) {
  try {
    return MonomialVector::Parse(text, n);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

Polynomial ParsePoly(std::string_view text, int n, std::string_view what) {
  try {
    return Polynomial::Parse(text, n);
  } catch (const std::invalid_argument& e) {
    throw FormatError(fmt::format("{}: {}", what, e.what()));
  }
}

// Splits a metadata/comment-bearing text into '#' key-value lines and the
// remaining body lines.
void SplitHeader(std::string_view text, KeyValues* header,
                 std::vector<std::string_view>* body) {
  for (auto line : Lines(text)) {
    const auto t = Trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto inner = Trim(t.substr(1));
      const auto eq = inner.find('=');
      if (eq == std::string_view::npos) continue;
      (*header)[std::string(Trim(inner.substr(0, eq)))] =
          std::string(Trim(inner.substr(eq + 1)));
      continue;
    }
    body->push_back(t);
  }
}

}  // namespace

KeyValues ParseKeyValues(std::string_view text, std::string_view source) {
  KeyValues kv;
  int lineno = 0;
  for (auto line : Lines(text)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError(
          fmt::format("{}:{}: expected 'key = value'", source, lineno));
    }
    std::string key(Trim(line.substr(0, eq)));
    if (key.empty()) {
      throw FormatError(fmt::format("{}:{}: empty key", source, lineno));
    }
    if (kv.contains(key)) {
      throw FormatError(
          fmt::format("{}:{}: duplicate key '{}'", source, lineno, key));
    }
    kv.emplace(std::move(key), std::string(Trim(line.substr(eq + 1))));
  }
  return kv;
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error(
        fmt::format("cannot open '{}' for reading", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error(
        fmt::format("cannot open '{}' for writing", path.string()));
  }
  out << text;
  if (!out) {
    throw std::runtime_error(fmt::format("write to '{}' failed", path.string()));
  }
}

Eigen::MatrixXd ParseMatrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  for (auto r : Split(text, ';')) {
    if (Trim(r).empty()) continue;
    rows.push_back(ParseNumbers(r, "matrix"));
  }
  if (rows.empty()) return {};
  const size_t cols = rows.front().size();
  Eigen::MatrixXd m(rows.size(), cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw FormatError(fmt::format(
          "matrix: row {} has {} entries, expected {}", i + 1, rows[i].size(),
          cols));
    }
    for (size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::string FormatMatrix(const Eigen::MatrixXd& m) {
  std::string out;
  for (int i = 0; i < m.rows(); ++i) {
    if (i) out += "; ";
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out += ' ';
      out += Num(m(i, j));
    }
  }
  return out;
}

Eigen::VectorXd ParseVector(std::string_view text) {
  const auto v = ParseNumbers(text, "vector");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

PolySystem ParseSystem(const KeyValues& kv) {
  Reader r(kv, "system");
  const int n = static_cast<int>(r.Integer("n"));
  if (n < 1) throw FormatError("system: n must be positive");
  PolySystem sys;
  sys.Z = ParseZ(r.Get("Z"), n);
  sys.A = ParseMatrix(r.Get("A"));
  sys.B = ParseMatrix(r.Get("B"));
  r.CheckAllUsed();
  try {
    sys.Validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return sys;
}

std::string FormatSystem(const PolySystem& sys) {
  return fmt::format("n = {}\nZ = {}\nA = {}\nB = {}\n", sys.n(),
                     sys.Z.ToString(), FormatMatrix(sys.A),
                     FormatMatrix(sys.B));
}

ExperimentConfig ParseExperiment(const KeyValues& kv) {
  Reader r(kv, "experiment");
  ExperimentConfig cfg;
  cfg.t0 = r.Double("t0", 0.0);
  cfg.tau = r.Double("tau");
  cfg.num_samples = static_cast<int>(r.Integer("samples"));
  cfg.x0 = ParseVector(r.Get("x0"));
  cfg.integrator_step = r.Double("integrator_step", 1e-3);
  cfg.derivative_noise_std = r.Double("noise_std", 0.0);
  if (r.Has("seed")) cfg.seed = ParseUnsigned(r.Get("seed"), "experiment seed");
  const long inputs = r.Integer("inputs");
  if (inputs < 1) throw FormatError("experiment: inputs must be positive");
  for (long j = 1; j <= inputs; ++j) {
    InputChannel ch;
    ch.offset = r.Double(fmt::format("u{}.offset", j), 0.0);
    const std::string key = fmt::format("u{}.sines", j);
    if (r.Has(key)) {
      for (auto term : Split(r.Get(key), ';')) {
        if (Trim(term).empty()) continue;
        const auto v = ParseNumbers(term, r.Context(key));
        if (v.size() != 3) {
          throw FormatError(fmt::format(
              "{}: each sinusoid needs 'amplitude frequency phase'",
              r.Context(key)));
        }
        ch.sinusoids.push_back({v[0], v[1], v[2]});
      }
    }
    cfg.input.channels.push_back(std::move(ch));
  }
  r.CheckAllUsed();
  try {
    cfg.Validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return cfg;
}

std::string FormatExperiment(const ExperimentConfig& cfg) {
  std::string out = fmt::format(
      "t0 = {}\ntau = {}\nsamples = {}\nx0 = {}\nintegrator_step = {}\n"
      "noise_std = {}\nseed = {}\ninputs = {}\n",
      Num(cfg.t0), Num(cfg.tau), cfg.num_samples,
      FormatMatrix(cfg.x0.transpose()), Num(cfg.integrator_step),
      Num(cfg.derivative_noise_std), cfg.seed, cfg.input.num_inputs());
  for (int j = 0; j < cfg.input.num_inputs(); ++j) {
    const auto& ch = cfg.input.channels[j];
    out += fmt::format("u{}.offset = {}\n", j + 1, Num(ch.offset));
    if (ch.sinusoids.empty()) continue;
    out += fmt::format("u{}.sines = ", j + 1);
    for (size_t k = 0; k < ch.sinusoids.size(); ++k) {
      const auto& s = ch.sinusoids[k];
      if (k) out += "; ";
      out += fmt::format("{} {} {}", Num(s.amplitude), Num(s.frequency),
                         Num(s.phase));
    }
    out += '\n';
  }
  return out;
}

RunOptions ParseRunOptions(const KeyValues& kv, int n) {
  Reader r(kv, "options");
  RunOptions o;
  o.sos.y_degree = static_cast<int>(r.Integer("y_degree", o.sos.y_degree));
  o.sos.mu = r.Double("mu", o.sos.mu);
  if (r.Has("epsilon")) {
    o.sos.epsilon = ParsePoly(r.Get("epsilon"), n, "options key 'epsilon'");
    if (o.sos.epsilon.num_vars() == 0) o.sos.epsilon = Polynomial(n);
  }
  o.sos.gram_degree_pad =
      static_cast<int>(r.Integer("gram_degree_pad", o.sos.gram_degree_pad));
  o.sos.coefficient_bound =
      r.Double("coefficient_bound", o.sos.coefficient_bound);
  o.solver.tol_feas = r.Double("tol_feas", o.solver.tol_feas);
  o.solver.tol_gap = r.Double("tol_gap", o.solver.tol_gap);
  o.solver.tol_psd = r.Double("tol_psd", o.solver.tol_psd);
  o.solver.max_iters =
      static_cast<int>(r.Integer("max_iters", o.solver.max_iters));
  o.solver.step_fraction = r.Double("step_fraction", o.solver.step_fraction);
  o.rank_factor = r.Double("rank_factor", o.rank_factor);
  o.grid.lo = r.Double("grid_lo", o.grid.lo);
  o.grid.hi = r.Double("grid_hi", o.grid.hi);
  o.grid.points_per_axis =
      static_cast<int>(r.Integer("grid_points", o.grid.points_per_axis));
  o.grid.exclusion_radius = r.Double("grid_exclusion", o.grid.exclusion_radius);
  o.closed_loop.horizon = r.Double("horizon", o.closed_loop.horizon);
  o.closed_loop.step = r.Double("sim_step", o.closed_loop.step);
  o.closed_loop.tol = r.Double("sim_tol", o.closed_loop.tol);
  o.closed_loop.decay_factor =
      r.Double("decay_factor", o.closed_loop.decay_factor);
  o.circle_points =
      static_cast<int>(r.Integer("circle_points", o.circle_points));
  o.circle_radius = r.Double("circle_radius", o.circle_radius);
  r.CheckAllUsed();
  try {
    o.sos.Validate(n);
    o.solver.Validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return o;
}

std::string DataRecordToCsv(const DataRecord& rec) {
  rec.Validate();
  const int n = rec.num_states();
  const int m = rec.num_inputs();
  std::string out = "# ddsos data record\n";
  out += fmt::format("# n = {}\n# m = {}\n# Z = {}\n", n, m, rec.Z.ToString());
  for (const auto& [k, v] : rec.meta) out += fmt::format("# {} = {}\n", k, v);
  out += "t";
  for (int i = 1; i <= n; ++i) out += fmt::format(",x{}", i);
  for (int i = 1; i <= n; ++i) out += fmt::format(",dx{}", i);
  for (int j = 1; j <= m; ++j) out += fmt::format(",u{}", j);
  out += '\n';
  for (int k = 0; k < rec.num_samples(); ++k) {
    out += Num(rec.times.size() ? rec.times(k) : static_cast<double>(k));
    for (int i = 0; i < n; ++i) out += "," + Num(rec.X0(i, k));
    for (int i = 0; i < n; ++i) out += "," + Num(rec.X1(i, k));
    for (int j = 0; j < m; ++j) out += "," + Num(rec.U(j, k));
    out += '\n';
  }
  return out;
}

DataRecord DataRecordFromCsv(std::string_view text) {
  KeyValues header;
  std::vector<std::string_view> body;
  SplitHeader(text, &header, &body);
  for (const char* key : {"n", "m", "Z"}) {
    if (!header.contains(key)) {
      throw FormatError(fmt::format("data CSV: missing '# {} = ...' line", key));
    }
  }
  const int n = static_cast<int>(ParseInteger(header["n"], "data CSV n"));
  const int m = static_cast<int>(ParseInteger(header["m"], "data CSV m"));
  if (n < 1 || m < 1) throw FormatError("data CSV: n and m must be positive");
  DataRecord rec;
  rec.Z = ParseZ(header["Z"], n);
  for (const auto& [k, v] : header) {
    if (k != "n" && k != "m" && k != "Z") rec.meta[k] = v;
  }
  if (body.empty()) throw FormatError("data CSV: missing column header");
  const int cols = 1 + 2 * n + m;
  if (static_cast<int>(Split(body.front(), ',').size()) != cols) {
    throw FormatError(fmt::format(
        "data CSV: header has {} columns, expected {}",
        Split(body.front(), ',').size(), cols));
  }
  const int T = static_cast<int>(body.size()) - 1;
  if (T < 1) throw FormatError("data CSV: no samples");
  rec.times.resize(T);
  rec.X0.resize(n, T);
  rec.X1.resize(n, T);
  rec.U.resize(m, T);
  for (int k = 0; k < T; ++k) {
    const auto f = Split(body[k + 1], ',');
    if (static_cast<int>(f.size()) != cols) {
      throw FormatError(fmt::format("data CSV: row {} has {} fields, expected {}",
                                    k + 1, f.size(), cols));
    }
    rec.times(k) = ParseDouble(f[0], "data CSV");
    for (int i = 0; i < n; ++i) rec.X0(i, k) = ParseDouble(f[1 + i], "data CSV");
    for (int i = 0; i < n; ++i) {
      rec.X1(i, k) = ParseDouble(f[1 + n + i], "data CSV");
    }
    for (int j = 0; j < m; ++j) {
      rec.U(j, k) = ParseDouble(f[1 + 2 * n + j], "data CSV");
    }
  }
  return rec;
}

std::string ControllerToText(const Controller& ctrl) {
  ctrl.Validate();
  std::string out = "# ddsos controller, u = F(x) Z(x)\n";
  out += fmt::format("provenance = {}\nn = {}\nZ = {}\ninputs = {}\n",
                     ToString(ctrl.provenance), ctrl.Z.num_vars(),
                     ctrl.Z.ToString(), ctrl.num_inputs());
  for (int i = 0; i < ctrl.F.rows(); ++i) {
    for (int j = 0; j < ctrl.F.cols(); ++j) {
      out += fmt::format("F({},{}) = {}\n", i + 1, j + 1,
                         ctrl.F(i, j).ToString());
    }
  }
  const MatrixPolynomial u = ctrl.InputPolynomial();
  for (int i = 0; i < u.rows(); ++i) {
    out += fmt::format("# u{} = {}\n", i + 1, u(i, 0).ToString());
  }
  return out;
}

Controller ControllerFromText(std::string_view text) {
  const KeyValues kv = ParseKeyValues(text, "controller");
  Reader r(kv, "controller");
  const int n = static_cast<int>(r.Integer("n"));
  if (n < 1) throw FormatError("controller: n must be positive");
  Controller c;
  try {
    c.provenance = ParseProvenance(r.Get("provenance"));
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  c.Z = ParseZ(r.Get("Z"), n);
  const int m = static_cast<int>(r.Integer("inputs"));
  if (m < 1) throw FormatError("controller: inputs must be positive");
  c.F = MatrixPolynomial(m, c.Z.size(), n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < c.Z.size(); ++j) {
      const std::string key = fmt::format("F({},{})", i + 1, j + 1);
      c.F(i, j) = ParsePoly(r.Get(key), n, r.Context(key));
    }
  }
  r.CheckAllUsed();
  return c;
}

std::string CertificateToText(const LyapunovCertificate& cert) {
  std::string basis;
  for (size_t a = 0; a < cert.gram_monomials.size(); ++a) {
    if (a) basis += ", ";
    basis += cert.gram_monomials[a].ToString();
  }
  std::string out = fmt::format(
      "# ddsos certificate, V(x) = Z(x)^T P^-1 Z(x)\n"
      "provenance = {}\nn = {}\nZ = {}\nmu = {}\nmargin = {}\n"
      "epsilon = {}\nP = {}\ngram_basis = {}\nTheta = {}\nY.rows = {}\n",
      ToString(cert.provenance), cert.Z.num_vars(), cert.Z.ToString(),
      Num(cert.mu), Num(cert.margin), cert.epsilon.ToString(),
      FormatMatrix(cert.P), basis, FormatMatrix(cert.Theta), cert.Y.rows());
  for (int i = 0; i < cert.Y.rows(); ++i) {
    for (int j = 0; j < cert.Y.cols(); ++j) {
      out += fmt::format("Y({},{}) = {}\n", i + 1, j + 1,
                         cert.Y(i, j).ToString());
    }
  }
  return out;
}

LyapunovCertificate CertificateFromText(std::string_view text) {
  const KeyValues kv = ParseKeyValues(text, "certificate");
  Reader r(kv, "certificate");
  const int n = static_cast<int>(r.Integer("n"));
  if (n < 1) throw FormatError("certificate: n must be positive");
  LyapunovCertificate c;
  try {
    c.provenance = ParseProvenance(r.Get("provenance"));
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  c.Z = ParseZ(r.Get("Z"), n);
  c.mu = r.Double("mu");
  c.margin = r.Double("margin");
  c.epsilon = ParsePoly(r.Get("epsilon"), n, "certificate epsilon");
  c.P = ParseMatrix(r.Get("P"));
  for (auto tok : Split(r.Get("gram_basis"), ',')) {
    const Polynomial p = ParsePoly(Trim(tok), n, "certificate gram_basis");
    if (p.terms().size() != 1 || p.terms().begin()->second != 1.0) {
      throw FormatError(fmt::format(
          "certificate: gram_basis entry '{}' is not a monomial", Trim(tok)));
    }
    c.gram_monomials.push_back(p.terms().begin()->first);
  }
  c.Theta = ParseMatrix(r.Get("Theta"));
  const long rows = r.Integer("Y.rows");
  if (rows < 1) throw FormatError("certificate: Y.rows must be positive");
  c.Y = MatrixPolynomial(static_cast<int>(rows), c.Z.size(), n);
  for (int i = 0; i < c.Y.rows(); ++i) {
    for (int j = 0; j < c.Y.cols(); ++j) {
      const std::string key = fmt::format("Y({},{})", i + 1, j + 1);
      c.Y(i, j) = ParsePoly(r.Get(key), n, r.Context(key));
    }
  }
  r.CheckAllUsed();
  const int ne = c.Z.size() * static_cast<int>(c.gram_monomials.size());
  if (c.P.rows() != c.Z.size() || c.P.cols() != c.Z.size() ||
      c.Theta.rows() != ne || c.Theta.cols() != ne) {
    throw FormatError("certificate: P or Theta has the wrong shape");
  }
  return c;
}

std::string TrajectoryToCsv(const Trajectory& traj) {
  if (traj.size() == 0) return "t\n";
  const int n = static_cast<int>(traj.states.front().size());
  const int m = static_cast<int>(traj.inputs.front().size());
  std::string out = "t";
  for (int i = 1; i <= n; ++i) out += fmt::format(",x{}", i);
  for (int j = 1; j <= m; ++j) out += fmt::format(",u{}", j);
  out += '\n';
  for (int k = 0; k < traj.size(); ++k) {
    out += Num(traj.times[k]);
    for (int i = 0; i < n; ++i) out += "," + Num(traj.states[k](i));
    for (int j = 0; j < m; ++j) out += "," + Num(traj.inputs[k](j));
    out += '\n';
  }
  return out;
}

std::string PhasePortraitCsv(const std::vector<Trajectory>& runs, int stride) {
  if (stride < 1) throw std::invalid_argument("PhasePortraitCsv: stride < 1");
  const int n =
      runs.empty() || runs.front().size() == 0
          ? 0
          : static_cast<int>(runs.front().states.front().size());
  std::string out = "run,t";
  for (int i = 1; i <= n; ++i) out += fmt::format(",x{}", i);
  out += '\n';
  for (size_t r = 0; r < runs.size(); ++r) {
    const Trajectory& traj = runs[r];
    for (int k = 0; k < traj.size(); ++k) {
      if (k % stride != 0 && k + 1 != traj.size()) continue;
      out += fmt::format("{},{}", r + 1, Num(traj.times[k]));
      for (int i = 0; i < n; ++i) out += "," + Num(traj.states[k](i));
      out += '\n';
    }
  }
  return out;
}

}  // namespace ddsos
