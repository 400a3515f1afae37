#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <Eigen/Sparse>
#include <fmt/format.h>

#include "ddsos/sdp.h"

namespace ddsos {

void SdpProblem::Validate() const {
  if (blocks.empty()) throw std::invalid_argument("SdpProblem: no blocks");
  for (const auto& blk : blocks) {
    if (blk.size < 1) {
      throw std::invalid_argument("SdpProblem: block sizes must be >= 1");
    }
  }
  if (b.size() != num_constraints()) {
    throw std::invalid_argument(fmt::format(
        "SdpProblem: {} constraints but b has {} entries", num_constraints(),
        b.size()));
  }
  auto check = [&](const SdpEntry& e, std::string_view where) {
    if (e.block < 0 || e.block >= num_blocks()) {
      throw std::invalid_argument(
          fmt::format("SdpProblem: {} references block {}", where, e.block));
    }
    const auto& blk = blocks[e.block];
    if (e.row < 0 || e.col < e.row || e.col >= blk.size) {
      throw std::invalid_argument(fmt::format(
          "SdpProblem: {} entry ({}, {}) invalid for block {} of size {}",
          where, e.row, e.col, e.block, blk.size));
    }
    if (blk.kind == BlockKind::kDiagonal && e.row != e.col) {
      throw std::invalid_argument(fmt::format(
          "SdpProblem: {} has an off-diagonal entry in diagonal block {}",
          where, e.block));
    }
    if (!std::isfinite(e.value)) {
      throw std::invalid_argument(
          fmt::format("SdpProblem: {} has a non-finite value", where));
    }
  };
  for (int i = 0; i < num_constraints(); ++i) {
    for (const auto& e : constraints[i]) check(e, fmt::format("A_{}", i + 1));
  }
  for (const auto& e : objective) check(e, "C");
}

BlockMatrix BlockMatrix::Zero(const std::vector<BlockSpec>& specs) {
  BlockMatrix m;
  m.specs = specs;
  for (const auto& s : specs) {
    m.blocks.push_back(s.kind == BlockKind::kDiagonal
                           ? Eigen::MatrixXd::Zero(s.size, 1)
                           : Eigen::MatrixXd::Zero(s.size, s.size));
  }
  return m;
}

BlockMatrix BlockMatrix::Identity(const std::vector<BlockSpec>& specs,
                                  double scale) {
  BlockMatrix m;
  m.specs = specs;
  for (const auto& s : specs) {
    m.blocks.push_back(
        s.kind == BlockKind::kDiagonal
            ? Eigen::MatrixXd::Constant(s.size, 1, scale)
            : Eigen::MatrixXd(scale * Eigen::MatrixXd::Identity(s.size, s.size)));
  }
  return m;
}

double BlockMatrix::operator()(int block, int row, int col) const {
  if (specs[block].kind == BlockKind::kDiagonal) {
    return row == col ? blocks[block](row, 0) : 0.0;
  }
  return blocks[block](row, col);
}

Eigen::MatrixXd BlockMatrix::Dense(int block) const {
  if (specs[block].kind == BlockKind::kDiagonal) {
    return blocks[block].col(0).asDiagonal();
  }
  return blocks[block];
}

double BlockMatrix::MinEigenvalue() const {
  double v = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < blocks.size(); ++k) {
    if (specs[k].kind == BlockKind::kDiagonal) {
      v = std::min(v, blocks[k].minCoeff());
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          blocks[k], Eigen::EigenvaluesOnly);
      v = std::min(v, es.eigenvalues()(0));
    }
  }
  return v;
}

std::string_view ToString(SdpStatus s) {
  switch (s) {
    case SdpStatus::kOptimal:
      return "optimal";
    case SdpStatus::kPrimalInfeasible:
      return "primal-infeasible";
    case SdpStatus::kDualInfeasible:
      return "dual-infeasible";
    case SdpStatus::kMaxIterations:
      return "max-iterations";
    case SdpStatus::kNumericalFailure:
      return "numerical-failure";
  }
  return "numerical-failure";
}

void SolverOptions::Validate() const {
  if (!(tol_feas > 0 && tol_gap > 0 && tol_psd > 0 && tol_infeasibility > 0)) {
    throw std::invalid_argument("SolverOptions: tolerances must be positive");
  }
  if (max_iters < 1) {
    throw std::invalid_argument("SolverOptions: max_iters must be >= 1");
  }
  if (!(step_fraction > 0 && step_fraction < 1)) {
    throw std::invalid_argument("SolverOptions: step_fraction must be in (0,1)");
  }
}

namespace {

struct LocalEntry {
  int row;
  int col;
  double value;
};

// The entries of one constraint restricted to one block.
struct BlockTerm {
  int constraint;
  std::vector<LocalEntry> entries;
};

// Constraint data regrouped by block, plus the objective.
class LinearOperator {
 public:
  explicit LinearOperator(const SdpProblem& prob)
      : specs_(prob.blocks), m_(prob.num_constraints()) {
    terms_.resize(specs_.size());
    objective_.resize(specs_.size());
    std::vector<std::vector<LocalEntry>> scratch(specs_.size());
    for (int i = 0; i < m_; ++i) {
      for (auto& s : scratch) s.clear();
      for (const auto& e : prob.constraints[i]) {
        scratch[e.block].push_back({e.row, e.col, e.value});
      }
      for (size_t k = 0; k < specs_.size(); ++k) {
        if (!scratch[k].empty()) terms_[k].push_back({i, scratch[k]});
      }
    }
    for (const auto& e : prob.objective) {
      objective_[e.block].push_back({e.row, e.col, e.value});
    }
    for (size_t k = 0; k < specs_.size(); ++k) {
      if (specs_[k].kind != BlockKind::kDiagonal) continue;
      std::vector<Eigen::Triplet<double>> trips;
      for (size_t t = 0; t < terms_[k].size(); ++t) {
        for (const auto& e : terms_[k][t].entries) {
          trips.emplace_back(static_cast<int>(t), e.row, e.value);
        }
      }
      Eigen::SparseMatrix<double> a(static_cast<int>(terms_[k].size()),
                                    specs_[k].size);
      a.setFromTriplets(trips.begin(), trips.end());
      diag_ops_.emplace(k, std::move(a));
    }
  }

  const std::vector<BlockSpec>& specs() const { return specs_; }
  int m() const { return m_; }

  // <A_i, G> for every i; G may be nonsymmetric in dense blocks.
  Eigen::VectorXd Apply(const BlockMatrix& g) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m_);
    for (size_t k = 0; k < specs_.size(); ++k) {
      const Eigen::MatrixXd& gk = g.blocks[k];
      const bool diag = specs_[k].kind == BlockKind::kDiagonal;
      for (const auto& term : terms_[k]) {
        out(term.constraint) += Inner(term.entries, gk, diag);
      }
    }
    return out;
  }

  BlockMatrix Adjoint(const Eigen::VectorXd& y) const {
    BlockMatrix out = BlockMatrix::Zero(specs_);
    for (size_t k = 0; k < specs_.size(); ++k) {
      const bool diag = specs_[k].kind == BlockKind::kDiagonal;
      for (const auto& term : terms_[k]) {
        Accumulate(term.entries, y(term.constraint), diag, &out.blocks[k]);
      }
    }
    return out;
  }

  BlockMatrix Objective() const {
    BlockMatrix out = BlockMatrix::Zero(specs_);
    for (size_t k = 0; k < specs_.size(); ++k) {
      Accumulate(objective_[k], 1.0, specs_[k].kind == BlockKind::kDiagonal,
                 &out.blocks[k]);
    }
    return out;
  }

  // Frobenius norms of A_i restricted to block k, and of C restricted to k.
  double MaxConstraintNorm(int k) const {
    double v = 0.0;
    for (const auto& term : terms_[k]) v = std::max(v, Norm(term.entries));
    return v;
  }
  double ObjectiveNorm(int k) const { return Norm(objective_[k]); }
  const std::vector<BlockTerm>& terms(int k) const { return terms_[k]; }

  // HKM Schur complement M_ij = sum_k tr(A_i X A_j S^{-1}).
  Eigen::MatrixXd Schur(const BlockMatrix& x, const BlockMatrix& sinv) const {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m_, m_);
    for (size_t k = 0; k < specs_.size(); ++k) {
      const auto& terms = terms_[k];
      if (terms.empty()) continue;
      if (specs_[k].kind == BlockKind::kDiagonal) {
        const Eigen::VectorXd w =
            x.blocks[k].col(0).cwiseProduct(sinv.blocks[k].col(0));
        const Eigen::SparseMatrix<double>& a = diag_ops_.at(k);
        const Eigen::SparseMatrix<double> aw = a * w.asDiagonal();
        const Eigen::MatrixXd sub =
            Eigen::MatrixXd(aw * Eigen::SparseMatrix<double>(a.transpose()));
        for (size_t s = 0; s < terms.size(); ++s) {
          for (size_t t = 0; t < terms.size(); ++t) {
            M(terms[s].constraint, terms[t].constraint) += sub(s, t);
          }
        }
        continue;
      }
      const Eigen::MatrixXd& xk = x.blocks[k];
      const Eigen::MatrixXd& sk = sinv.blocks[k];
      const int n = specs_[k].size;
      Eigen::MatrixXd xa(n, n);
      for (const auto& tj : terms) {
        xa.setZero();
        for (const auto& e : tj.entries) {
          xa.col(e.col) += e.value * xk.col(e.row);
          if (e.row != e.col) xa.col(e.row) += e.value * xk.col(e.col);
        }
        const Eigen::MatrixXd g = xa * sk;
        for (const auto& ti : terms) {
          M(ti.constraint, tj.constraint) += Inner(ti.entries, g, false);
        }
      }
    }
    return 0.5 * (M + M.transpose());
  }

 private:
  static double Inner(const std::vector<LocalEntry>& entries,
                      const Eigen::MatrixXd& g, bool diag) {
    double s = 0.0;
    if (diag) {
      for (const auto& e : entries) s += e.value * g(e.row, 0);
      return s;
    }
    for (const auto& e : entries) {
      s += e.row == e.col ? e.value * g(e.row, e.row)
                          : e.value * (g(e.row, e.col) + g(e.col, e.row));
    }
    return s;
  }

  static void Accumulate(const std::vector<LocalEntry>& entries, double scale,
                         bool diag, Eigen::MatrixXd* out) {
    if (scale == 0.0) return;
    for (const auto& e : entries) {
      if (diag) {
        (*out)(e.row, 0) += scale * e.value;
      } else {
        (*out)(e.row, e.col) += scale * e.value;
        if (e.row != e.col) (*out)(e.col, e.row) += scale * e.value;
      }
    }
  }

  static double Norm(const std::vector<LocalEntry>& entries) {
    double s = 0.0;
    for (const auto& e : entries) {
      s += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
    }
    return std::sqrt(s);
  }

  std::vector<BlockSpec> specs_;
  int m_;
  std::vector<std::vector<BlockTerm>> terms_;
  std::vector<std::vector<LocalEntry>> objective_;
  std::map<size_t, Eigen::SparseMatrix<double>> diag_ops_;
};

bool IsDiag(const BlockMatrix& a, size_t k) {
  return a.specs[k].kind == BlockKind::kDiagonal;
}

double InnerProduct(const BlockMatrix& a, const BlockMatrix& b) {
  double s = 0.0;
  for (size_t k = 0; k < a.blocks.size(); ++k) {
    s += a.blocks[k].cwiseProduct(b.blocks[k]).sum();
  }
  return s;
}

void AddScaled(BlockMatrix* a, double alpha, const BlockMatrix& b) {
  for (size_t k = 0; k < a->blocks.size(); ++k) {
    a->blocks[k] += alpha * b.blocks[k];
  }
}

BlockMatrix Sub(const BlockMatrix& a, const BlockMatrix& b) {
  BlockMatrix r = a;
  AddScaled(&r, -1.0, b);
  return r;
}

double MaxAbs(const BlockMatrix& a) {
  double v = 0.0;
  for (const auto& blk : a.blocks) {
    if (blk.size()) v = std::max(v, blk.cwiseAbs().maxCoeff());
  }
  return v;
}

int TotalDimension(const std::vector<BlockSpec>& specs) {
  int n = 0;
  for (const auto& s : specs) n += s.size;
  return n;
}

// Inverse of every block; false if some block is not positive definite.
bool InvertPd(const BlockMatrix& s, BlockMatrix* inv) {
  *inv = s;
  for (size_t k = 0; k < s.blocks.size(); ++k) {
    if (IsDiag(s, k)) {
      if ((s.blocks[k].array() <= 0.0).any()) return false;
      inv->blocks[k] = s.blocks[k].cwiseInverse();
      continue;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(s.blocks[k]);
    if (llt.info() != Eigen::Success) return false;
    inv->blocks[k] = llt.solve(
        Eigen::MatrixXd::Identity(s.blocks[k].rows(), s.blocks[k].cols()));
    inv->blocks[k] = (0.5 * (inv->blocks[k] + inv->blocks[k].transpose())).eval();
  }
  return true;
}

// Largest alpha with x + alpha dx PSD (infinity when unbounded).
double MaxStep(const BlockMatrix& x, const BlockMatrix& dx) {
  double alpha = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < x.blocks.size(); ++k) {
    if (IsDiag(x, k)) {
      for (int p = 0; p < x.blocks[k].rows(); ++p) {
        const double d = dx.blocks[k](p, 0);
        if (d < 0.0) alpha = std::min(alpha, -x.blocks[k](p, 0) / d);
      }
      continue;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(x.blocks[k]);
    if (llt.info() != Eigen::Success) return 0.0;
    const auto L = llt.matrixL();
    const Eigen::MatrixXd a1 = L.solve(dx.blocks[k]);
    Eigen::MatrixXd w = L.solve(a1.transpose());
    w = (0.5 * (w + w.transpose())).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w,
                                                      Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

// X * G * Sinv for every block, where G is symmetric (or diagonal).
BlockMatrix TripleProduct(const BlockMatrix& x, const BlockMatrix& g,
                          const BlockMatrix& sinv) {
  BlockMatrix r = x;
  for (size_t k = 0; k < x.blocks.size(); ++k) {
    if (IsDiag(x, k)) {
      r.blocks[k] = x.blocks[k].cwiseProduct(g.blocks[k])
                        .cwiseProduct(sinv.blocks[k]);
    } else {
      r.blocks[k] = x.blocks[k] * g.blocks[k] * sinv.blocks[k];
    }
  }
  return r;
}

// G * Sinv for every block.
BlockMatrix RightMultiply(const BlockMatrix& g, const BlockMatrix& sinv) {
  BlockMatrix r = g;
  for (size_t k = 0; k < g.blocks.size(); ++k) {
    r.blocks[k] = IsDiag(g, k) ? Eigen::MatrixXd(g.blocks[k].cwiseProduct(
                                     sinv.blocks[k]))
                               : Eigen::MatrixXd(g.blocks[k] * sinv.blocks[k]);
  }
  return r;
}

void Symmetrize(BlockMatrix* a) {
  for (size_t k = 0; k < a->blocks.size(); ++k) {
    if (!IsDiag(*a, k)) {
      a->blocks[k] = (0.5 * (a->blocks[k] + a->blocks[k].transpose())).eval();
    }
  }
}

double MaxEigenvalue(const BlockMatrix& a) {
  double v = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < a.blocks.size(); ++k) {
    if (IsDiag(a, k)) {
      v = std::max(v, a.blocks[k].maxCoeff());
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          a.blocks[k], Eigen::EigenvaluesOnly);
      v = std::max(v, es.eigenvalues()(es.eigenvalues().size() - 1));
    }
  }
  return v;
}

struct Iterate {
  BlockMatrix X;
  Eigen::VectorXd y;
  BlockMatrix S;
};

}  // namespace

SdpSolution SolveSdp(const SdpProblem& prob, const SolverOptions& opts) {
  prob.Validate();
  opts.Validate();
  const LinearOperator op(prob);
  const auto& specs = op.specs();
  const int m = op.m();
  const double nu = TotalDimension(specs);
  const BlockMatrix C = op.Objective();
  const Eigen::VectorXd& b = prob.b;

  Iterate it;
  {
    BlockMatrix x0 = BlockMatrix::Zero(specs);
    BlockMatrix s0 = BlockMatrix::Zero(specs);
    for (size_t k = 0; k < specs.size(); ++k) {
      const double nk = specs[k].size;
      double ratio = 0.0;
      for (const auto& term : op.terms(static_cast<int>(k))) {
        double norm = 0.0;
        for (const auto& e : term.entries) {
          norm += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
        }
        ratio = std::max(ratio, (1.0 + std::abs(b(term.constraint))) /
                                    (1.0 + std::sqrt(norm)));
      }
      const double xi = std::max({10.0, std::sqrt(nk), std::sqrt(nk) * ratio});
      const double eta =
          std::max({10.0, std::sqrt(nk), op.MaxConstraintNorm(k),
                    op.ObjectiveNorm(k)});
      if (IsDiag(x0, k)) {
        x0.blocks[k].setConstant(xi);
        s0.blocks[k].setConstant(eta);
      } else {
        x0.blocks[k] = xi * Eigen::MatrixXd::Identity(nk, nk);
        s0.blocks[k] = eta * Eigen::MatrixXd::Identity(nk, nk);
      }
    }
    it = {std::move(x0), Eigen::VectorXd::Zero(m), std::move(s0)};
  }

  SdpSolution sol;
  Iterate best = it;
  double best_merit = std::numeric_limits<double>::infinity();

  auto finish = [&](SdpStatus status, const Iterate& at, std::string msg) {
    sol.status = status;
    sol.X = at.X;
    sol.y = at.y;
    sol.S = at.S;
    sol.primal_objective = InnerProduct(C, at.X);
    sol.dual_objective = b.dot(at.y);
    sol.primal_residual =
        m ? (b - op.Apply(at.X)).cwiseAbs().maxCoeff() : 0.0;
    sol.dual_residual = MaxAbs(Sub(Sub(C, op.Adjoint(at.y)), at.S));
    sol.relative_gap = std::abs(sol.primal_objective - sol.dual_objective) /
                       (1.0 + std::abs(sol.primal_objective) +
                        std::abs(sol.dual_objective));
    sol.message = std::move(msg);
    return sol;
  };

  for (int iter = 0;; ++iter) {
    sol.iterations = iter;
    const Eigen::VectorXd rp = m ? Eigen::VectorXd(b - op.Apply(it.X))
                                 : Eigen::VectorXd();
    const BlockMatrix Rd = Sub(Sub(C, op.Adjoint(it.y)), it.S);
    const double pobj = InnerProduct(C, it.X);
    const double dobj = b.dot(it.y);
    const double pinf = m ? rp.cwiseAbs().maxCoeff() : 0.0;
    const double dinf = MaxAbs(Rd);
    const double xs = InnerProduct(it.X, it.S);
    const double denom = 1.0 + std::abs(pobj) + std::abs(dobj);
    const double gap = std::max(std::abs(pobj - dobj), xs) / denom;
    const double mu = xs / nu;

    IterationLog log{iter, pobj, dobj, pinf, dinf, gap, mu, 0.0, 0.0, 0.0};

    const double merit = std::max({pinf / opts.tol_feas, dinf / opts.tol_feas,
                                   gap / opts.tol_gap});
    if (merit < best_merit) {
      best_merit = merit;
      best = it;
    }
    if (pinf <= opts.tol_feas && dinf <= opts.tol_feas &&
        gap <= opts.tol_gap) {
      sol.history.push_back(log);
      return finish(SdpStatus::kOptimal, it, "converged");
    }

    // Farkas certificates.
    if (dobj > 0.0 && m > 0) {
      const double lmax = MaxEigenvalue(op.Adjoint(it.y));
      if (lmax <= opts.tol_infeasibility * dobj) {
        sol.history.push_back(log);
        return finish(SdpStatus::kPrimalInfeasible, it,
                      fmt::format("dual ray: max eig(A^T y) / b^T y = {:.3e}",
                                  lmax / dobj));
      }
    }
    if (pobj < 0.0) {
      const double ax = m ? op.Apply(it.X).cwiseAbs().maxCoeff() : 0.0;
      if (ax <= opts.tol_infeasibility * -pobj) {
        sol.history.push_back(log);
        return finish(SdpStatus::kDualInfeasible, it,
                      fmt::format("primal ray: |A(X)| / |<C,X>| = {:.3e}",
                                  ax / -pobj));
      }
    }

    if (iter >= opts.max_iters) {
      sol.history.push_back(log);
      return finish(SdpStatus::kMaxIterations, best,
                    fmt::format("iteration cap {} reached", opts.max_iters));
    }

    BlockMatrix Sinv;
    if (!InvertPd(it.S, &Sinv)) {
      sol.history.push_back(log);
      return finish(SdpStatus::kNumericalFailure, best,
                    "dual slack lost positive definiteness");
    }

    Eigen::LLT<Eigen::MatrixXd> schur;
    if (m > 0) {
      Eigen::MatrixXd M = op.Schur(it.X, Sinv);
      const Eigen::VectorXd d = M.diagonal();
      const double dmax = d.maxCoeff();
      const double dmin = d.minCoeff();
      schur.compute(M);
      if (schur.info() != Eigen::Success) {
        // Tiny diagonal shift, once.
        M.diagonal().array() += 1e-14 * std::max(1.0, dmax);
        schur.compute(M);
      }
      sol.schur_condition = dmin > 0.0 ? dmax / dmin
                                       : std::numeric_limits<double>::infinity();
      if (schur.info() != Eigen::Success) {
        sol.history.push_back(log);
        return finish(SdpStatus::kNumericalFailure, best,
                      fmt::format("Schur complement is numerically singular "
                                  "(diagonal ratio {:.3e})",
                                  sol.schur_condition));
      }
    }

    // Solves for a direction with complementarity target sigma*mu and an
    // optional second-order correction dXa dSa.
    const BlockMatrix XRdSinv = TripleProduct(it.X, Rd, Sinv);
    auto direction = [&](double sigma, const BlockMatrix* corr, BlockMatrix* dX,
                         Eigen::VectorXd* dy, BlockMatrix* dS) {
      // R = sigma mu S^{-1} - X - X Rd S^{-1} - corr S^{-1}
      BlockMatrix R = Sinv;
      for (auto& blk : R.blocks) blk *= sigma * mu;
      AddScaled(&R, -1.0, it.X);
      AddScaled(&R, -1.0, XRdSinv);
      if (corr != nullptr) AddScaled(&R, -1.0, RightMultiply(*corr, Sinv));
      if (m > 0) {
        *dy = schur.solve(rp - op.Apply(R));
      } else {
        *dy = Eigen::VectorXd();
      }
      *dS = m ? Sub(Rd, op.Adjoint(*dy)) : Rd;
      // dX = R + X A^T(dy) S^{-1}, symmetrized.
      *dX = R;
      if (m > 0) AddScaled(dX, 1.0, TripleProduct(it.X, op.Adjoint(*dy), Sinv));
      Symmetrize(dX);
    };

    BlockMatrix dXa, dSa;
    Eigen::VectorXd dya;
    direction(0.0, nullptr, &dXa, &dya, &dSa);
    const double ap_aff = std::min(1.0, MaxStep(it.X, dXa));
    const double ad_aff = std::min(1.0, MaxStep(it.S, dSa));
    BlockMatrix xa = it.X, sa = it.S;
    AddScaled(&xa, ap_aff, dXa);
    AddScaled(&sa, ad_aff, dSa);
    const double mu_aff = InnerProduct(xa, sa) / nu;
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

    // Corrector: dXa dSa per block.
    BlockMatrix corr = dXa;
    for (size_t k = 0; k < corr.blocks.size(); ++k) {
      corr.blocks[k] = IsDiag(corr, k)
                           ? Eigen::MatrixXd(dXa.blocks[k].cwiseProduct(
                                 dSa.blocks[k]))
                           : Eigen::MatrixXd(dXa.blocks[k] * dSa.blocks[k]);
    }
    BlockMatrix dX, dS;
    Eigen::VectorXd dy;
    direction(sigma, &corr, &dX, &dy, &dS);

    const double ap =
        std::min(1.0, opts.step_fraction * MaxStep(it.X, dX));
    const double ad =
        std::min(1.0, opts.step_fraction * MaxStep(it.S, dS));
    log.sigma = sigma;
    log.primal_step = ap;
    log.dual_step = ad;
    sol.history.push_back(log);

    if (!(ap > 0.0) || !(ad > 0.0) || !std::isfinite(ap) ||
        !std::isfinite(ad)) {
      return finish(SdpStatus::kNumericalFailure, best,
                    "step length collapsed to zero");
    }
    AddScaled(&it.X, ap, dX);
    if (m > 0) it.y += ad * dy;
    AddScaled(&it.S, ad, dS);
  }
}

Eigen::MatrixXd DenseConstraintBlock(const SdpProblem& prob, int i,
                                     int block) {
  const int n = prob.blocks[block].size;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  const auto& entries = i < 0 ? prob.objective : prob.constraints[i];
  for (const auto& e : entries) {
    if (e.block != block) continue;
    a(e.row, e.col) += e.value;
    if (e.row != e.col) a(e.col, e.row) += e.value;
  }
  return a;
}

ResidualReport ValidateSolution(const SdpProblem& prob,
                                const SdpSolution& sol) {
  ResidualReport r;
  const int K = prob.num_blocks();
  std::vector<Eigen::MatrixXd> X(K), S(K), C(K);
  for (int k = 0; k < K; ++k) {
    X[k] = sol.X.Dense(k);
    C[k] = DenseConstraintBlock(prob, -1, k);
    S[k] = sol.S.blocks.empty() ? C[k] : sol.S.Dense(k);
  }
  const Eigen::VectorXd y = sol.y.size() == prob.num_constraints()
                                ? sol.y
                                : Eigen::VectorXd::Zero(prob.num_constraints());
  std::vector<Eigen::MatrixXd> dual_res = C;
  for (int i = 0; i < prob.num_constraints(); ++i) {
    double ax = 0.0;
    for (int k = 0; k < K; ++k) {
      const Eigen::MatrixXd a = DenseConstraintBlock(prob, i, k);
      ax += (a.array() * X[k].array()).sum();
      dual_res[k] -= y(i) * a;
    }
    r.primal_residual = std::max(r.primal_residual, std::abs(ax - prob.b(i)));
  }
  r.min_eig_X = std::numeric_limits<double>::infinity();
  r.min_eig_S = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    dual_res[k] -= S[k];
    r.dual_residual = std::max(r.dual_residual, dual_res[k].cwiseAbs().maxCoeff());
    r.primal_objective += (C[k].array() * X[k].array()).sum();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ex(X[k],
                                                      Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S[k],
                                                      Eigen::EigenvaluesOnly);
    r.min_eig_X = std::min(r.min_eig_X, ex.eigenvalues()(0));
    r.min_eig_S = std::min(r.min_eig_S, es.eigenvalues()(0));
  }
  r.dual_objective = prob.b.dot(y);
  r.absolute_gap = std::abs(r.primal_objective - r.dual_objective);
  r.relative_gap = r.absolute_gap /
                   (1.0 + std::abs(r.primal_objective) +
                    std::abs(r.dual_objective));
  return r;
}

}  // namespace ddsos
