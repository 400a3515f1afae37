#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ddsos/sdp.h"

namespace ddsos::testing {

// Random problem with a known strictly feasible primal-dual pair.
inline SdpProblem RandomSdp(std::mt19937& rng, int index) {
  std::uniform_int_distribution<int> size(1, 6);
  std::normal_distribution<double> g;
  SdpProblem p;
  const int nb = 1 + index % 3;
  int svec = 0;
  for (int k = 0; k < nb; ++k) {
    const bool diag = (index % 5 == 0 && k == 0);
    const int s = diag ? size(rng) * 2 : size(rng);
    p.blocks.push_back({s, diag ? BlockKind::kDiagonal : BlockKind::kSymmetric});
    svec += diag ? s : s * (s + 1) / 2;
  }
  const int m = std::max(1, std::min({40, svec, 3 + index % 11}));
  auto random_entries = [&](std::vector<SdpEntry>* out) {
    for (int k = 0; k < nb; ++k) {
      const BlockSpec& b = p.blocks[k];
      for (int r = 0; r < b.size; ++r) {
        for (int c = r; c < b.size; ++c) {
          if (b.kind == BlockKind::kDiagonal && c != r) continue;
          if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.6) {
            out->push_back({k, r, c, g(rng)});
          }
        }
      }
    }
  };
  p.constraints.resize(m);
  for (auto& con : p.constraints) {
    random_entries(&con);
    if (con.empty()) con.push_back({0, 0, 0, 1.0 + std::abs(g(rng))});
  }

  // b = A(X0), C = sum y0_i A_i + S0 with X0, S0 positive definite.
  p.b.resize(m);
  const Eigen::VectorXd y0 = Eigen::VectorXd::NullaryExpr(m, [&] { return g(rng); });
  std::vector<Eigen::MatrixXd> X0, C;
  for (int k = 0; k < nb; ++k) {
    const int s = p.blocks[k].size;
    Eigen::MatrixXd R = Eigen::MatrixXd::NullaryExpr(s, s, [&] { return g(rng); });
    Eigen::MatrixXd x = R * R.transpose() + Eigen::MatrixXd::Identity(s, s);
    Eigen::MatrixXd S = Eigen::MatrixXd::Identity(s, s) * (1.0 + std::abs(g(rng)));
    if (p.blocks[k].kind == BlockKind::kDiagonal) {
      x = Eigen::MatrixXd(x.diagonal().asDiagonal());
    } else {
      R = Eigen::MatrixXd::NullaryExpr(s, s, [&] { return g(rng); });
      S += R * R.transpose();
    }
    X0.push_back(x);
    C.push_back(S);
  }
  for (int i = 0; i < m; ++i) {
    double bi = 0.0;
    for (const SdpEntry& e : p.constraints[i]) {
      bi += e.value * (e.row == e.col ? X0[e.block](e.row, e.col)
                                      : 2.0 * X0[e.block](e.row, e.col));
      C[e.block](e.row, e.col) += y0(i) * e.value;
      if (e.row != e.col) C[e.block](e.col, e.row) += y0(i) * e.value;
    }
    p.b(i) = bi;
  }
  for (int k = 0; k < nb; ++k) {
    for (int r = 0; r < p.blocks[k].size; ++r) {
      for (int c = r; c < p.blocks[k].size; ++c) {
        if (p.blocks[k].kind == BlockKind::kDiagonal && c != r) continue;
        if (C[k](r, c) != 0.0) p.objective.push_back({k, r, c, C[k](r, c)});
      }
    }
  }
  return p;
}

}  // namespace ddsos::testing
