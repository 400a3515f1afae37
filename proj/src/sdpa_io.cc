#include "ddsos/sdpa_io.h"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

namespace ddsos {

namespace {

std::vector<SdpEntry> CanonicalEntries(const std::vector<SdpEntry>& in) {
  std::map<std::tuple<int, int, int>, double> merged;
  for (const auto& e : in) merged[{e.block, e.row, e.col}] += e.value;
  std::vector<SdpEntry> out;
  for (const auto& [key, v] : merged) {
    if (v == 0.0) continue;
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), v});
  }
  return out;
}

}  // namespace

SdpProblem Canonicalize(const SdpProblem& prob) {
  SdpProblem out;
  out.blocks = prob.blocks;
  out.b = prob.b;
  out.objective = CanonicalEntries(prob.objective);
  for (const auto& c : prob.constraints) {
    out.constraints.push_back(CanonicalEntries(c));
  }
  return out;
}

void WriteSdpa(const SdpProblem& prob, std::ostream& out) {
  prob.Validate();
  const SdpProblem canon = Canonicalize(prob);
  out << "\"ddsos SDP: min <C,X> s.t. <A_i,X> = b_i, X psd; F0 = -C, Fi = "
         "A_i, c = b\"\n";
  out << canon.num_constraints() << "\n";
  out << canon.num_blocks() << "\n";
  for (int k = 0; k < canon.num_blocks(); ++k) {
    const auto& blk = canon.blocks[k];
    out << (k ? " " : "")
        << (blk.kind == BlockKind::kDiagonal ? -blk.size : blk.size);
  }
  out << "\n";
  for (int i = 0; i < canon.num_constraints(); ++i) {
    out << (i ? " " : "") << fmt::format("{}", canon.b(i));
  }
  out << "\n";
  for (const auto& e : canon.objective) {
    out << fmt::format("0 {} {} {} {}\n", e.block + 1, e.row + 1, e.col + 1,
                       -e.value);
  }
  for (int i = 0; i < canon.num_constraints(); ++i) {
    for (const auto& e : canon.constraints[i]) {
      out << fmt::format("{} {} {} {} {}\n", i + 1, e.block + 1, e.row + 1,
                         e.col + 1, e.value);
    }
  }
}

std::string ToSdpaString(const SdpProblem& prob) {
  std::ostringstream os;
  WriteSdpa(prob, os);
  return os.str();
}

SdpProblem ReadSdpa(std::istream& in) {
  std::string line;
  std::string body;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (!header_done) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      if (line[first] == '"' || line[first] == '*') continue;
      header_done = true;
    }
    for (char& c : line) {
      if (c == ',' || c == '(' || c == ')' || c == '{' || c == '}') c = ' ';
    }
    body += line;
    body += '\n';
  }
  std::istringstream is(body);
  auto fail = [](const std::string& what) -> void {
    throw std::invalid_argument("SDPA parse error: " + what);
  };

  long m = 0, nblocks = 0;
  if (!(is >> m) || m < 0) fail("missing constraint count");
  if (!(is >> nblocks) || nblocks < 1) fail("missing block count");
  SdpProblem prob;
  for (long k = 0; k < nblocks; ++k) {
    long s = 0;
    if (!(is >> s) || s == 0) fail("bad block structure");
    prob.blocks.push_back(
        {static_cast<int>(std::abs(s)),
         s < 0 ? BlockKind::kDiagonal : BlockKind::kSymmetric});
  }
  prob.b.resize(m);
  for (long i = 0; i < m; ++i) {
    if (!(is >> prob.b(i))) fail("bad c vector");
  }
  prob.constraints.resize(m);
  long matno = 0, blk = 0, row = 0, col = 0;
  double v = 0.0;
  while (is >> matno) {
    if (!(is >> blk >> row >> col >> v)) fail("truncated entry");
    if (matno < 0 || matno > m) fail(fmt::format("matrix number {}", matno));
    if (blk < 1 || blk > nblocks) fail(fmt::format("block number {}", blk));
    if (row > col) std::swap(row, col);
    const SdpEntry e{static_cast<int>(blk - 1), static_cast<int>(row - 1),
                     static_cast<int>(col - 1), v};
    if (matno == 0) {
      prob.objective.push_back({e.block, e.row, e.col, -v});
    } else {
      prob.constraints[matno - 1].push_back(e);
    }
  }
  if (!is.eof()) fail("unexpected token");
  prob.Validate();
  return Canonicalize(prob);
}

SdpProblem ParseSdpa(const std::string& text) {
  std::istringstream is(text);
  return ReadSdpa(is);
}

}  // namespace ddsos
