#include "ddsos/sos_compile.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include <fmt/format.h>

namespace ddsos {

Polynomial SosOptions::EpsilonFor(int n) const {
  if (epsilon.num_vars() != 0) return epsilon;
  Polynomial eps(n);
  for (int i = 0; i < n; ++i) {
    eps.AddTerm(Monomial::Power(n, i, 2), epsilon_scale);
  }
  return eps;
}

void SosOptions::Validate(int n) const {
  if (!(mu > 0.0)) throw std::invalid_argument("SosOptions: mu must be > 0");
  if (y_degree < 0) {
    throw std::invalid_argument("SosOptions: Y degree must be >= 0");
  }
  if (gram_degree_pad < 0) {
    throw std::invalid_argument("SosOptions: Gram degree pad must be >= 0");
  }
  if (!(coefficient_bound > 0.0)) {
    throw std::invalid_argument("SosOptions: coefficient bound must be > 0");
  }
  if (!(epsilon_scale >= 0.0)) {
    throw std::invalid_argument("SosOptions: epsilon scale must be >= 0");
  }
  const Polynomial eps = EpsilonFor(n);
  if (eps.num_vars() != n) {
    throw std::invalid_argument(fmt::format(
        "SosOptions: epsilon has {} variables, expected {}", eps.num_vars(), n));
  }
  for (const auto& [m, c] : eps.terms()) {
    const bool even = std::all_of(m.exponents().begin(), m.exponents().end(),
                                  [](int e) { return e % 2 == 0; });
    if (!even || c < 0.0) {
      throw std::invalid_argument(fmt::format(
          "SosOptions: epsilon term {}*{} is not a nonnegative square", c,
          m.ToString()));
    }
  }
}

namespace {

constexpr int kGramBlock = 0;
constexpr int kPBlock = 1;
constexpr int kScalarBlock = 2;

// Affine form over symbolic decision variables.
struct Affine {
  std::map<int, double> coeffs;
  double constant{0.0};

  void Add(const Affine& other, double scale) {
    for (const auto& [v, c] : other.coeffs) coeffs[v] += scale * c;
    constant += scale * other.constant;
  }
  bool IsZero() const {
    if (constant != 0.0) return false;
    return std::all_of(coeffs.begin(), coeffs.end(),
                       [](const auto& kv) { return kv.second == 0.0; });
  }
};

using AffinePoly = std::map<Monomial, Affine>;

struct VarKey {
  int block{0};
  int row{0};
  int col{0};
  friend auto operator<=>(const VarKey&, const VarKey&) = default;
};

// sum_k a_k X_k + constant = 0, where X_k is the symmetric element at key k
// counted once.
struct LinRow {
  std::map<VarKey, double> a;
  double constant{0.0};
};

// Symbolic variable numbering: Y coefficients first, then (model-based)
// upper-triangle entries of P.
struct Symbols {
  int num_y{0};
  int N{0};
  double mu{0.0};
  double offset{0.0};
  int margin_slot{0};

  int PIndex(int k, int j) const {
    if (k > j) std::swap(k, j);
    return num_y + k * N - k * (k - 1) / 2 + (j - k);
  }

  // Adds scale * (symbolic variable v) to `row`.
  void Emit(int v, double scale, LinRow* row) const {
    if (scale == 0.0) return;
    if (v < num_y) {
      row->a[{kScalarBlock, 2 * v, 2 * v}] += scale;
      row->a[{kScalarBlock, 2 * v + 1, 2 * v + 1}] -= scale;
      return;
    }
    int r = v - num_y;
    int k = 0;
    while (r >= N - k) {
      r -= N - k;
      ++k;
    }
    const int j = k + r;
    // P = X_P + (mu + s - c) I on the diagonal.
    row->a[{kPBlock, k, j}] += scale;
    if (k == j) {
      row->a[{kScalarBlock, margin_slot, margin_slot}] += scale;
      row->constant += scale * (mu - offset);
    }
  }

  void Emit(const Affine& f, double scale, LinRow* row) const {
    for (const auto& [v, c] : f.coeffs) Emit(v, scale * c, row);
    row->constant += scale * f.constant;
  }
};

void AddProduct(const Polynomial& w, const Monomial& beta, int var,
                double scale, AffinePoly* out) {
  for (const auto& [alpha, c] : w.terms()) {
    (*out)[alpha * beta].coeffs[var] += scale * c;
  }
}

std::vector<Monomial> BasisUpTo(int n, int d) { return MonomialBasis(n, d); }

int DegreeOf(const MatrixPolynomial& m) { return m.degree(); }

struct Template {
  // Q_ik for i <= k, row-major upper triangle.
  std::vector<AffinePoly> q;
  int N{0};
  AffinePoly& at(int i, int k) {
    if (i > k) std::swap(i, k);
    return q[i * N + k];
  }
  const AffinePoly& at(int i, int k) const {
    if (i > k) std::swap(i, k);
    return q[i * N + k];
  }
};

// H holds the affine entries of the N x N matrix whose symmetric part gives
// Q = -(H + H^T) - eps I.
Template SymmetricPart(const std::vector<AffinePoly>& H, int N,
                       const Polynomial& eps) {
  Template t;
  t.N = N;
  t.q.assign(N * N, {});
  for (int i = 0; i < N; ++i) {
    for (int k = i; k < N; ++k) {
      AffinePoly& out = t.q[i * N + k];
      for (const auto& [m, f] : H[i * N + k]) out[m].Add(f, -1.0);
      for (const auto& [m, f] : H[k * N + i]) out[m].Add(f, -1.0);
      if (i == k) {
        for (const auto& [m, c] : eps.terms()) out[m].constant -= c;
      }
      std::erase_if(out, [](const auto& kv) { return kv.second.IsZero(); });
    }
  }
  return t;
}

// Accumulates W(x) * Y(x) into H, with Y's entries symbolic over the Y
// coefficient numbering of `prog`.
void AccumulateWY(const MatrixPolynomial& W, const SosProgram& prog,
                  std::vector<AffinePoly>* H) {
  const int N = prog.N;
  const int nm = static_cast<int>(prog.y_monomials.size());
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < N; ++k) {
      for (int t = 0; t < prog.y_rows; ++t) {
        const Polynomial& w = W(i, t);
        if (w.is_zero()) continue;
        for (int b = 0; b < nm; ++b) {
          AddProduct(w, prog.y_monomials[b], prog.y_index(t, k, b), 1.0,
                     &(*H)[i * N + k]);
        }
      }
    }
  }
}

void ErasePrunable(const Template& q, SosProgram* prog) {
  const int nm = static_cast<int>(prog->gram_monomials.size());
  std::vector<bool> alive(prog->extended_size(), true);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int e = 0; e < prog->extended_size(); ++e) {
      if (!alive[e]) continue;
      const int i = prog->extended_basis[e].y;
      const Monomial& ma = prog->gram_monomials[prog->extended_basis[e].m];
      const Monomial sq = ma * ma;
      const auto& qii = q.at(i, i);
      if (qii.contains(sq)) continue;
      bool other = false;
      for (int b = 0; b < nm && !other; ++b) {
        if (!alive[i * nm + b]) continue;
        for (int c = b + 1; c < nm; ++c) {
          if (!alive[i * nm + c]) continue;
          if (prog->gram_monomials[b] * prog->gram_monomials[c] == sq) {
            other = true;
            break;
          }
        }
      }
      if (other) continue;
      alive[e] = false;
      changed = true;
    }
  }
  prog->active.clear();
  for (int e = 0; e < prog->extended_size(); ++e) {
    if (alive[e]) prog->active.push_back(e);
  }
}

std::vector<LinRow> GramRows(const Template& q, const SosProgram& prog,
                             const Symbols& sym) {
  const int nm = static_cast<int>(prog.gram_monomials.size());
  std::vector<int> slot(prog.extended_size(), -1);
  for (int p = 0; p < static_cast<int>(prog.active.size()); ++p) {
    slot[prog.active[p]] = p;
  }
  std::vector<LinRow> rows;
  for (int i = 0; i < prog.N; ++i) {
    for (int k = i; k < prog.N; ++k) {
      std::map<Monomial, LinRow> by_monomial;
      for (int a = 0; a < nm; ++a) {
        const int p = slot[i * nm + a];
        if (p < 0) continue;
        for (int b = 0; b < nm; ++b) {
          const int r = slot[k * nm + b];
          if (r < 0) continue;
          const Monomial g = prog.gram_monomials[a] * prog.gram_monomials[b];
          LinRow& row = by_monomial[g];
          row.a[{kGramBlock, std::min(p, r), std::max(p, r)}] += 1.0;
          if (p == r) {
            // Theta = X_G + t I with t = s - c.
            row.a[{kScalarBlock, prog.margin_slot, prog.margin_slot}] += 1.0;
            row.constant -= prog.margin_offset;
          }
        }
      }
      for (const auto& [g, f] : q.at(i, k)) {
        sym.Emit(f, -1.0, &by_monomial[g]);
      }
      for (auto& [g, row] : by_monomial) {
        std::erase_if(row.a, [](const auto& kv) { return kv.second == 0.0; });
        if (row.a.empty()) {
          if (std::abs(row.constant) > 0.0) {
            throw std::invalid_argument(fmt::format(
                "SOS compile: the Gram basis of degree {} cannot represent "
                "the {} term of Q({},{}); increase gram_degree_pad",
                prog.gram_monomials.back().degree(), g.ToString(), i + 1,
                k + 1));
          }
          continue;
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

// Removes linearly dependent rows with a rank-revealing QR of the
// (row-normalized) constraint matrix. Throws if a dropped row is
// inconsistent with the kept ones.
std::vector<LinRow> EliminateRedundant(std::vector<LinRow> rows,
                                       int* removed) {
  std::map<VarKey, int> cols;
  for (const auto& r : rows) {
    for (const auto& [k, v] : r.a) cols.emplace(k, 0);
  }
  int idx = 0;
  for (auto& [k, v] : cols) v = idx++;
  const int m = static_cast<int>(rows.size());
  const int nc = static_cast<int>(cols.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nc + 1, m);
  for (int i = 0; i < m; ++i) {
    for (const auto& [k, v] : rows[i].a) M(cols[k], i) = v;
    const double scale = M.col(i).head(nc).norm();
    if (scale > 0.0) M.col(i) /= scale;
    M(nc, i) = -rows[i].constant / (scale > 0.0 ? scale : 1.0);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M.topRows(nc));
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  *removed = m - rank;
  if (rank == m) return rows;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> aug(M);
  aug.setThreshold(1e-10);
  if (aug.rank() > rank) {
    throw std::invalid_argument(
        "SOS compile: equality constraints are inconsistent");
  }
  std::vector<int> keep(qr.colsPermutation().indices().data(),
                        qr.colsPermutation().indices().data() + rank);
  std::sort(keep.begin(), keep.end());
  std::vector<LinRow> out;
  out.reserve(rank);
  for (int i : keep) out.push_back(std::move(rows[i]));
  return out;
}

SdpProblem Assemble(const std::vector<BlockSpec>& blocks,
                    const std::vector<LinRow>& rows,
                    const std::vector<SdpEntry>& objective) {
  SdpProblem prob;
  prob.blocks = blocks;
  prob.objective = objective;
  prob.b.resize(static_cast<int>(rows.size()));
  prob.constraints.reserve(rows.size());
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    std::vector<SdpEntry> entries;
    for (const auto& [k, v] : rows[i].a) {
      if (v == 0.0) continue;
      // <A, X> counts an off-diagonal entry twice.
      entries.push_back({k.block, k.row, k.col, k.row == k.col ? v : 0.5 * v});
    }
    prob.constraints.push_back(std::move(entries));
    prob.b(i) = -rows[i].constant;
  }
  prob.Validate();
  return prob;
}

void InitProgram(SosProgram* prog, const MonomialVector& Z,
                 const SosOptions& opts, int y_rows, int jac_extra_degree) {
  opts.Validate(Z.num_vars());
  prog->opts = opts;
  prog->Z = Z;
  prog->n = Z.num_vars();
  prog->N = Z.size();
  prog->y_rows = y_rows;
  prog->epsilon = opts.EpsilonFor(prog->n);
  prog->y_monomials = BasisUpTo(prog->n, opts.y_degree);
  for (int t = 0; t < y_rows; ++t) {
    for (int k = 0; k < prog->N; ++k) {
      for (const auto& m : prog->y_monomials) {
        prog->y_coefficients.push_back({t, k, m});
      }
    }
  }
  const int dJ = DegreeOf(Jacobian(Z));
  prog->q_degree =
      std::max(dJ + std::max(opts.y_degree, jac_extra_degree),
               prog->epsilon.degree());
  const int gd = (prog->q_degree + 1) / 2 + opts.gram_degree_pad;
  prog->gram_monomials = BasisUpTo(prog->n, gd);
  const int nm = static_cast<int>(prog->gram_monomials.size());
  for (int i = 0; i < prog->N; ++i) {
    for (int a = 0; a < nm; ++a) prog->extended_basis.push_back({i, a});
  }
  prog->margin_offset = 1.0 + 2.0 * opts.mu + prog->epsilon.MaxAbsCoefficient();
  prog->margin_slot = 2 * prog->num_y();
  prog->budget_slot = prog->margin_slot + 1;
}

CompiledSos Finish(SosProgram prog, const Template& q, const Symbols& sym,
                   std::vector<LinRow> rows, bool p_in_budget) {
  ErasePrunable(q, &prog);
  if (prog.active.empty()) {
    throw std::invalid_argument("SOS compile: empty Gram basis");
  }
  std::vector<LinRow> gram = GramRows(q, prog, sym);
  rows.insert(rows.end(), std::make_move_iterator(gram.begin()),
              std::make_move_iterator(gram.end()));

  LinRow budget;
  for (int j = 0; j < 2 * prog.num_y(); ++j) {
    budget.a[{kScalarBlock, j, j}] = 1.0;
  }
  if (p_in_budget) {
    // trace(P), including the margin shift, so scaling P cannot grow t.
    for (int k = 0; k < prog.N; ++k) sym.Emit(sym.PIndex(k, k), 1.0, &budget);
  }
  budget.a[{kScalarBlock, prog.budget_slot, prog.budget_slot}] = 1.0;
  budget.constant -= prog.opts.coefficient_bound;
  rows.push_back(std::move(budget));

  prog.raw_constraints = static_cast<int>(rows.size());
  rows = EliminateRedundant(std::move(rows), &prog.removed_constraints);

  const std::vector<BlockSpec> blocks = {
      {static_cast<int>(prog.active.size()), BlockKind::kSymmetric},
      {prog.N, BlockKind::kSymmetric},
      {2 * prog.num_y() + 2, BlockKind::kDiagonal}};
  SdpProblem prob = Assemble(
      blocks, rows, {{kScalarBlock, prog.margin_slot, prog.margin_slot, -1.0}});
  return {std::move(prog), std::move(prob)};
}

MatrixPolynomial EpsilonIdentity(const Polynomial& eps, int N) {
  MatrixPolynomial E(N, N, eps.num_vars());
  for (int i = 0; i < N; ++i) E(i, i) = eps;
  return E;
}

}  // namespace

MatrixPolynomial BuildQTemplate(const DataMatrices& dm,
                                const MatrixPolynomial& Y,
                                const Polynomial& eps) {
  const MatrixPolynomial J = Jacobian(dm.record.Z);
  if (Y.rows() != dm.T() || Y.cols() != dm.N()) {
    throw std::invalid_argument(fmt::format(
        "BuildQTemplate: Y is {}x{}, expected {}x{}", Y.rows(), Y.cols(),
        dm.T(), dm.N()));
  }
  const MatrixPolynomial H = (J * dm.record.X1) * Y;
  return -1.0 * (H + H.Transpose()) - EpsilonIdentity(eps, dm.N());
}

MatrixPolynomial BuildModelBasedQ(const Eigen::MatrixXd& A,
                                  const Eigen::MatrixXd& B,
                                  const MonomialVector& Z,
                                  const Eigen::MatrixXd& P,
                                  const MatrixPolynomial& Y,
                                  const Polynomial& eps) {
  const MatrixPolynomial J = Jacobian(Z);
  if (Y.rows() != B.cols() || Y.cols() != Z.size()) {
    throw std::invalid_argument(fmt::format(
        "BuildModelBasedQ: Y is {}x{}, expected {}x{}", Y.rows(), Y.cols(),
        B.cols(), Z.size()));
  }
  const MatrixPolynomial H = (J * A) * P + (J * B) * Y;
  return -1.0 * (H + H.Transpose()) - EpsilonIdentity(eps, Z.size());
}

CompiledSos CompileDataDriven(const DataMatrices& dm, const SosOptions& opts) {
  const int N = dm.N();
  const int T = dm.T();
  if (dm.rank_report.rank < N || T < N) {
    throw DataRankError(
        "SOS compile: data matrix Z0T does not have full row rank");
  }
  SosProgram prog;
  prog.kind = SosProgramKind::kDataDriven;
  prog.Z0T = dm.Z0T;
  prog.X1 = dm.record.X1;
  prog.U = dm.record.U;
  InitProgram(&prog, dm.record.Z, opts, T, 0);

  Symbols sym{prog.num_y(), N, opts.mu, prog.margin_offset, prog.margin_slot};

  std::vector<AffinePoly> H(N * N);
  AccumulateWY(Jacobian(prog.Z) * prog.X1, prog, &H);
  const Template q = SymmetricPart(H, N, prog.epsilon);

  std::vector<LinRow> rows;
  const int nm = static_cast<int>(prog.y_monomials.size());
  // Z0T Y(x) is constant: nonconstant coefficients vanish.
  for (int k = 0; k < N; ++k) {
    for (int j = 0; j < N; ++j) {
      for (int b = 0; b < nm; ++b) {
        if (prog.y_monomials[b].is_constant()) continue;
        LinRow row;
        for (int t = 0; t < T; ++t) {
          sym.Emit(prog.y_index(t, j, b), dm.Z0T(k, t), &row);
        }
        rows.push_back(std::move(row));
      }
    }
  }
  // P = Z0T Y0 is symmetric and P - (mu + t) I = X_P.
  for (int k = 0; k < N; ++k) {
    for (int j = k; j < N; ++j) {
      LinRow row;
      for (int t = 0; t < T; ++t) {
        sym.Emit(prog.y_index(t, j, 0), -dm.Z0T(k, t), &row);
      }
      row.a[{kPBlock, k, j}] += 1.0;
      if (k == j) {
        row.a[{kScalarBlock, prog.margin_slot, prog.margin_slot}] += 1.0;
        row.constant += opts.mu - prog.margin_offset;
      }
      rows.push_back(std::move(row));
      if (k == j) continue;
      LinRow sym_row;
      for (int t = 0; t < T; ++t) {
        sym.Emit(prog.y_index(t, j, 0), dm.Z0T(k, t), &sym_row);
        sym.Emit(prog.y_index(t, k, 0), -dm.Z0T(j, t), &sym_row);
      }
      rows.push_back(std::move(sym_row));
    }
  }
  for (auto& r : rows) {
    std::erase_if(r.a, [](const auto& kv) { return kv.second == 0.0; });
  }
  std::erase_if(rows, [](const LinRow& r) {
    return r.a.empty() && r.constant == 0.0;
  });
  return Finish(std::move(prog), q, sym, std::move(rows), false);
}

CompiledSos CompileModelBased(const Eigen::MatrixXd& A,
                              const Eigen::MatrixXd& B,
                              const MonomialVector& Z,
                              const SosOptions& opts) {
  const int n = Z.num_vars();
  const int N = Z.size();
  if (A.rows() != n || A.cols() != N || B.rows() != n || B.cols() < 1) {
    throw std::invalid_argument(fmt::format(
        "CompileModelBased: A is {}x{} and B is {}x{}; expected {}x{} and "
        "{}xm",
        A.rows(), A.cols(), B.rows(), B.cols(), n, N, n));
  }
  SosProgram prog;
  prog.kind = SosProgramKind::kModelBased;
  prog.A = A;
  prog.B = B;
  InitProgram(&prog, Z, opts, static_cast<int>(B.cols()), 0);

  Symbols sym{prog.num_y(), N, opts.mu, prog.margin_offset, prog.margin_slot};

  const MatrixPolynomial J = Jacobian(Z);
  const MatrixPolynomial JA = J * A;
  std::vector<AffinePoly> H(N * N);
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < N; ++k) {
      for (int j = 0; j < N; ++j) {
        for (const auto& [alpha, c] : JA(i, j).terms()) {
          H[i * N + k][alpha].coeffs[sym.PIndex(j, k)] += c;
        }
      }
    }
  }
  AccumulateWY(J * B, prog, &H);
  const Template q = SymmetricPart(H, N, prog.epsilon);
  return Finish(std::move(prog), q, sym, {}, true);
}

SosSolution DecodeSolution(const SosProgram& prog, const SdpSolution& sol) {
  const auto& xs = sol.X.blocks.at(kScalarBlock);
  SosSolution out;
  out.margin = xs(prog.margin_slot) - prog.margin_offset;
  out.Y = MatrixPolynomial(prog.y_rows, prog.N, prog.n);
  Eigen::MatrixXd Y0 = Eigen::MatrixXd::Zero(prog.y_rows, prog.N);
  for (int v = 0; v < prog.num_y(); ++v) {
    const YCoefficient& yc = prog.y_coefficients[v];
    const double val = xs(2 * v) - xs(2 * v + 1);
    out.Y(yc.row, yc.col).AddTerm(yc.monomial, val);
    if (yc.monomial.is_constant()) Y0(yc.row, yc.col) = val;
  }
  if (prog.kind == SosProgramKind::kDataDriven) {
    out.P = prog.Z0T * Y0;
  } else {
    out.P = sol.X.Dense(kPBlock) +
            (prog.opts.mu + out.margin) *
                Eigen::MatrixXd::Identity(prog.N, prog.N);
  }
  const int ne = prog.extended_size();
  out.Theta = Eigen::MatrixXd::Zero(ne, ne);
  const Eigen::MatrixXd XG = sol.X.Dense(kGramBlock);
  const int na = static_cast<int>(prog.active.size());
  for (int p = 0; p < na; ++p) {
    for (int q = 0; q < na; ++q) {
      out.Theta(prog.active[p], prog.active[q]) =
          XG(p, q) + (p == q ? out.margin : 0.0);
    }
  }
  return out;
}

SosSolution ExtractSolution(const SosProgram& prog, const SdpSolution& sol) {
  SosSolution out = DecodeSolution(prog, sol);
  if (sol.status != SdpStatus::kOptimal) {
    throw SosInfeasibleError(
        fmt::format("SOS program not solved: solver status {} ({})",
                    ToString(sol.status), sol.message),
        out.margin);
  }
  if (out.margin < -1e-8) {
    throw SosInfeasibleError(
        fmt::format("SOS program infeasible: optimal margin {:.6g} < -1e-8",
                    out.margin),
        out.margin);
  }
  const double asym = (out.P - out.P.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8) {
    throw MarginalFeasibilityError(
        fmt::format("extracted P is not symmetric (max asymmetry {:.3g})",
                    asym));
  }
  out.P = (0.5 * (out.P + out.P.transpose())).eval();
  const double lmin =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(out.P).eigenvalues()(0);
  if (lmin < prog.opts.mu - 1e-6) {
    throw MarginalFeasibilityError(fmt::format(
        "extracted P has lambda_min {:.6g} < mu - 1e-6 = {:.6g}", lmin,
        prog.opts.mu - 1e-6));
  }
  const double tmin =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(out.Theta)
          .eigenvalues()(0);
  if (tmin < -1e-8) {
    throw MarginalFeasibilityError(fmt::format(
        "extracted Gram matrix has eigenvalue {:.3g} < -1e-8", tmin));
  }
  return out;
}

MatrixPolynomial ProgramQ(const SosProgram& prog, const MatrixPolynomial& Y,
                          const Eigen::MatrixXd& P) {
  if (prog.kind == SosProgramKind::kModelBased) {
    return BuildModelBasedQ(prog.A, prog.B, prog.Z, P, Y, prog.epsilon);
  }
  if (Y.rows() != prog.y_rows || Y.cols() != prog.N) {
    throw std::invalid_argument("ProgramQ: Y shape mismatch");
  }
  const MatrixPolynomial H = (Jacobian(prog.Z) * prog.X1) * Y;
  return -1.0 * (H + H.Transpose()) - EpsilonIdentity(prog.epsilon, prog.N);
}

double GramResidual(const MatrixPolynomial& Q,
                    const std::vector<Monomial>& gram_monomials,
                    const Eigen::MatrixXd& Theta) {
  const int N = Q.rows();
  const int nm = static_cast<int>(gram_monomials.size());
  if (Q.cols() != N || Theta.rows() != N * nm || Theta.cols() != N * nm) {
    throw std::invalid_argument(fmt::format(
        "GramResidual: Q is {}x{}, Theta is {}x{}, basis has {} monomials",
        Q.rows(), Q.cols(), Theta.rows(), Theta.cols(), nm));
  }
  // Coefficients of the polynomial in (x, y), keyed by x-monomial and the
  // unordered y pair.
  std::map<std::tuple<Monomial, int, int>, double> diff;
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < N; ++k) {
      for (const auto& [g, c] : Q(i, k).terms()) {
        diff[{g, std::min(i, k), std::max(i, k)}] += c;
      }
    }
  }
  for (int p = 0; p < N * nm; ++p) {
    for (int q = 0; q < N * nm; ++q) {
      const double v = Theta(p, q);
      if (v == 0.0) continue;
      const int i = p / nm;
      const int k = q / nm;
      const Monomial g = gram_monomials[p % nm] * gram_monomials[q % nm];
      diff[{g, std::min(i, k), std::max(i, k)}] -= v;
    }
  }
  double worst = 0.0;
  for (const auto& [key, v] : diff) worst = std::max(worst, std::abs(v));
  return worst;
}

double ReconstructResidual(const SosProgram& prog, const MatrixPolynomial& Y,
                           const Eigen::MatrixXd& Theta,
                           const Eigen::MatrixXd& P) {
  return GramResidual(ProgramQ(prog, Y, P), prog.gram_monomials, Theta);
}

Eigen::VectorXd ExtendedBasisVector(const SosProgram& prog,
                                    const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& y) {
  const int nm = static_cast<int>(prog.gram_monomials.size());
  Eigen::VectorXd z(prog.N * nm);
  for (int i = 0; i < prog.N; ++i) {
    for (int a = 0; a < nm; ++a) {
      z(i * nm + a) = y(i) * prog.gram_monomials[a].Evaluate(
                                 std::span<const double>(x.data(), x.size()));
    }
  }
  return z;
}

CompiledScalarSos CompileScalarSos(const Polynomial& p, int degree_pad) {
  if (degree_pad < 0) {
    throw std::invalid_argument("CompileScalarSos: pad must be >= 0");
  }
  if (p.num_vars() < 1) {
    throw std::invalid_argument("CompileScalarSos: need at least one variable");
  }
  CompiledScalarSos out;
  out.program.p = p;
  out.program.basis =
      MonomialBasis(p.num_vars(), (p.degree() + 1) / 2 + degree_pad);
  const auto& basis = out.program.basis;
  const int nb = static_cast<int>(basis.size());

  std::map<Monomial, LinRow> by_monomial;
  for (int a = 0; a < nb; ++a) {
    for (int b = 0; b < nb; ++b) {
      by_monomial[basis[a] * basis[b]]
          .a[{0, std::min(a, b), std::max(a, b)}] += 1.0;
    }
  }
  for (const auto& [g, c] : p.terms()) {
    auto it = by_monomial.find(g);
    if (it == by_monomial.end()) {
      throw std::invalid_argument(fmt::format(
          "CompileScalarSos: basis cannot represent the {} term; increase "
          "the degree pad",
          g.ToString()));
    }
    it->second.constant -= c;
  }
  std::vector<LinRow> rows;
  for (auto& [g, r] : by_monomial) rows.push_back(std::move(r));
  int removed = 0;
  rows = EliminateRedundant(std::move(rows), &removed);
  std::vector<SdpEntry> objective;
  for (int a = 0; a < nb; ++a) objective.push_back({0, a, a, 1.0});
  out.problem = Assemble({{nb, BlockKind::kSymmetric}}, rows, objective);
  return out;
}

ScalarSosResult CheckScalarSos(const Polynomial& p, int degree_pad,
                               const SolverOptions& solver) {
  const CompiledScalarSos c = CompileScalarSos(p, degree_pad);
  const SdpSolution sol = SolveSdp(c.problem, solver);
  ScalarSosResult r;
  r.status = sol.status;
  r.is_sos = sol.status == SdpStatus::kOptimal;
  r.Theta = sol.X.Dense(0);
  MatrixPolynomial Q(1, 1, p.num_vars());
  Q(0, 0) = p;
  r.residual = GramResidual(Q, c.program.basis, r.Theta);
  return r;
}

}  // namespace ddsos
