#include "ddsos/poly.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace ddsos {

Monomial::Monomial(std::vector<int> exponents)
    : exponents_(std::move(exponents)) {
  for (int e : exponents_) {
    if (e < 0) {
      throw std::invalid_argument("Monomial: negative exponent");
    }
    degree_ += e;
  }
}

Monomial Monomial::One(int n) { return Monomial(std::vector<int>(n, 0)); }

Monomial Monomial::Power(int n, int var, int power) {
  if (var < 0 || var >= n) {
    throw std::invalid_argument(
        fmt::format("Monomial: variable index {} outside [0, {})", var, n));
  }
  std::vector<int> e(n, 0);
  e[var] = power;
  return Monomial(std::move(e));
}

double Monomial::Evaluate(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != num_vars()) {
    throw std::invalid_argument(
        fmt::format("Monomial::Evaluate: point has dimension {}, expected {}",
                    x.size(), num_vars()));
  }
  double v = 1.0;
  for (int i = 0; i < num_vars(); ++i) {
    for (int k = 0; k < exponents_[i]; ++k) v *= x[i];
  }
  return v;
}

Monomial Monomial::operator*(const Monomial& other) const {
  if (other.num_vars() != num_vars()) {
    throw std::invalid_argument("Monomial product: variable count mismatch");
  }
  std::vector<int> e(exponents_);
  for (int i = 0; i < num_vars(); ++i) e[i] += other.exponents_[i];
  return Monomial(std::move(e));
}

std::string Monomial::ToString() const {
  std::string out;
  for (int i = 0; i < num_vars(); ++i) {
    if (exponents_[i] == 0) continue;
    if (!out.empty()) out += '*';
    out += fmt::format("x{}", i + 1);
    if (exponents_[i] > 1) out += fmt::format("^{}", exponents_[i]);
  }
  return out.empty() ? "1" : out;
}

bool operator<(const Monomial& a, const Monomial& b) {
  if (a.degree_ != b.degree_) return a.degree_ < b.degree_;
  if (a.exponents_.size() != b.exponents_.size()) {
    return a.exponents_.size() < b.exponents_.size();
  }
  // Same degree: x1 ranks first, so a larger leading exponent sorts earlier.
  return a.exponents_ > b.exponents_;
}

Polynomial::Polynomial(int num_vars, const Monomial& monomial,
                       double coefficient)
    : n_(num_vars) {
  if (monomial.num_vars() != n_) {
    throw std::invalid_argument("Polynomial: monomial variable count mismatch");
  }
  AddTerm(monomial, coefficient);
}

Polynomial Polynomial::Constant(int n, double c) {
  return Polynomial(n, Monomial::One(n), c);
}

Polynomial Polynomial::Variable(int n, int var) {
  return Polynomial(n, Monomial::Power(n, var), 1.0);
}

int Polynomial::degree() const {
  // Terms are ordered by degree, so the last one is of maximal degree.
  return terms_.empty() ? 0 : terms_.rbegin()->first.degree();
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::AddTerm(const Monomial& m, double c) {
  if (m.num_vars() != n_) {
    throw std::invalid_argument(
        fmt::format("Polynomial: monomial in {} variables added to polynomial "
                    "in {} variables",
                    m.num_vars(), n_));
  }
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double Polynomial::Evaluate(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_) {
    throw std::invalid_argument(
        fmt::format("Polynomial::Evaluate: point has dimension {}, expected {}",
                    x.size(), n_));
  }
  double v = 0.0;
  for (const auto& [m, c] : terms_) v += c * m.Evaluate(x);
  return v;
}

Polynomial Polynomial::Differentiate(int var) const {
  if (var < 0 || var >= n_) {
    throw std::invalid_argument("Polynomial::Differentiate: bad variable");
  }
  Polynomial d(n_);
  for (const auto& [m, c] : terms_) {
    const int e = m.exponent(var);
    if (e == 0) continue;
    std::vector<int> exps = m.exponents();
    exps[var] -= 1;
    d.AddTerm(Monomial(std::move(exps)), c * e);
  }
  return d;
}

double Polynomial::MaxAbsCoefficient() const {
  double v = 0.0;
  for (const auto& [m, c] : terms_) v = std::max(v, std::abs(c));
  return v;
}

std::string Polynomial::ToString() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    const auto& [m, c] = *it;
    const double mag = std::abs(c);
    if (out.empty()) {
      if (c < 0) out += '-';
    } else {
      out += c < 0 ? " - " : " + ";
    }
    if (m.is_constant()) {
      out += fmt::format("{}", mag);
    } else if (mag == 1.0) {
      out += m.ToString();
    } else {
      out += fmt::format("{}*{}", mag, m.ToString());
    }
  }
  return out;
}

void Polynomial::CheckSameVars(const Polynomial& other) const {
  if (other.n_ != n_) {
    throw std::invalid_argument(fmt::format(
        "Polynomial: variable count mismatch ({} vs {})", n_, other.n_));
  }
}

Polynomial Polynomial::operator-() const {
  Polynomial r(*this);
  for (auto& [m, c] : r.terms_) c = -c;
  return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  CheckSameVars(other);
  for (const auto& [m, c] : other.terms_) AddTerm(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  CheckSameVars(other);
  for (const auto& [m, c] : other.terms_) AddTerm(m, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(double c) {
  if (c == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto it = terms_.begin(); it != terms_.end();) {
    it->second *= c;
    // Underflow can turn a tiny coefficient into an exact zero.
    it = it->second == 0.0 ? terms_.erase(it) : std::next(it);
  }
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  a.CheckSameVars(b);
  Polynomial r(a.n_);
  for (const auto& [ma, ca] : a.terms_) {
    for (const auto& [mb, cb] : b.terms_) r.AddTerm(ma * mb, ca * cb);
  }
  return r;
}

namespace {

class PolynomialParser {
 public:
  PolynomialParser(std::string_view text, int n) : s_(text), n_(n) {}

  Polynomial Parse() {
    Polynomial p(n_);
    SkipSpace();
    if (AtEnd()) Fail("empty polynomial");
    bool first = true;
    while (!AtEnd()) {
      double sign = 1.0;
      if (Peek() == '+' || Peek() == '-') {
        sign = Peek() == '-' ? -1.0 : 1.0;
        ++pos_;
        SkipSpace();
      } else if (!first) {
        Fail("expected '+' or '-'");
      }
      auto [m, c] = ParseTerm();
      p.AddTerm(m, sign * c);
      first = false;
      SkipSpace();
    }
    return p;
  }

 private:
  std::pair<Monomial, double> ParseTerm() {
    double coeff = 1.0;
    std::vector<int> exps(n_, 0);
    bool need_factor = true;
    if (!AtEnd() && (std::isdigit(Peek()) || Peek() == '.')) {
      coeff = ParseNumber();
      SkipSpace();
      if (AtEnd() || Peek() != '*') need_factor = false;
      if (!AtEnd() && Peek() == '*') {
        ++pos_;
        SkipSpace();
      }
    }
    while (need_factor) {
      ParseFactor(&exps);
      SkipSpace();
      if (!AtEnd() && Peek() == '*') {
        ++pos_;
        SkipSpace();
      } else {
        need_factor = false;
      }
    }
    return {Monomial(std::move(exps)), coeff};
  }

  void ParseFactor(std::vector<int>* exps) {
    if (AtEnd() || Peek() != 'x') Fail("expected variable 'x<k>'");
    ++pos_;
    const int var = ParseInt();
    if (var < 1 || var > n_) {
      Fail(fmt::format("variable x{} outside x1..x{}", var, n_));
    }
    int power = 1;
    SkipSpace();
    if (!AtEnd() && Peek() == '^') {
      ++pos_;
      SkipSpace();
      power = ParseInt();
    }
    (*exps)[var - 1] += power;
  }

  double ParseNumber() {
    const std::string rest(s_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) Fail("expected number");
    pos_ += static_cast<size_t>(end - rest.c_str());
    return v;
  }

  int ParseInt() {
    if (AtEnd() || !std::isdigit(Peek())) Fail("expected integer");
    int v = 0;
    while (!AtEnd() && std::isdigit(Peek())) {
      v = v * 10 + (Peek() - '0');
      ++pos_;
    }
    return v;
  }

  void SkipSpace() {
    while (!AtEnd() && std::isspace(static_cast<unsigned char>(Peek()))) {
      ++pos_;
    }
  }
  bool AtEnd() const { return pos_ >= s_.size(); }
  char Peek() const { return s_[pos_]; }

  [[noreturn]] void Fail(const std::string& what) const {
    throw std::invalid_argument(fmt::format(
        "polynomial parse error at offset {} in \"{}\": {}", pos_, s_, what));
  }

  std::string_view s_;
  int n_;
  size_t pos_{0};
};

}  // namespace

Polynomial Polynomial::Parse(std::string_view text, int n) {
  return PolynomialParser(text, n).Parse();
}

MatrixPolynomial::MatrixPolynomial(int rows, int cols, int num_vars)
    : rows_(rows),
      cols_(cols),
      n_(num_vars),
      entries_(static_cast<size_t>(rows) * cols, Polynomial(num_vars)) {}

MatrixPolynomial MatrixPolynomial::FromMatrix(const Eigen::MatrixXd& m,
                                              int num_vars) {
  MatrixPolynomial r(m.rows(), m.cols(), num_vars);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      r(i, j) = Polynomial::Constant(num_vars, m(i, j));
    }
  }
  return r;
}

int MatrixPolynomial::degree() const {
  int d = 0;
  for (const auto& p : entries_) d = std::max(d, p.degree());
  return d;
}

Eigen::MatrixXd MatrixPolynomial::Evaluate(std::span<const double> x) const {
  Eigen::MatrixXd r(rows_, cols_);
  for (int i = 0; i < rows_; ++i) {
    for (int j = 0; j < cols_; ++j) r(i, j) = (*this)(i, j).Evaluate(x);
  }
  return r;
}

Eigen::MatrixXd MatrixPolynomial::CoefficientMatrix(const Monomial& m) const {
  Eigen::MatrixXd r(rows_, cols_);
  for (int i = 0; i < rows_; ++i) {
    for (int j = 0; j < cols_; ++j) r(i, j) = (*this)(i, j).coefficient(m);
  }
  return r;
}

std::vector<Monomial> MatrixPolynomial::Support() const {
  std::set<Monomial> s;
  for (const auto& p : entries_) {
    for (const auto& [m, c] : p.terms()) s.insert(m);
  }
  return {s.begin(), s.end()};
}

MatrixPolynomial MatrixPolynomial::Transpose() const {
  MatrixPolynomial r(cols_, rows_, n_);
  for (int i = 0; i < rows_; ++i) {
    for (int j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
  }
  return r;
}

MatrixPolynomial& MatrixPolynomial::operator+=(const MatrixPolynomial& other) {
  if (other.rows_ != rows_ || other.cols_ != cols_) {
    throw std::invalid_argument("MatrixPolynomial +: shape mismatch");
  }
  for (size_t k = 0; k < entries_.size(); ++k) entries_[k] += other.entries_[k];
  return *this;
}

MatrixPolynomial& MatrixPolynomial::operator-=(const MatrixPolynomial& other) {
  if (other.rows_ != rows_ || other.cols_ != cols_) {
    throw std::invalid_argument("MatrixPolynomial -: shape mismatch");
  }
  for (size_t k = 0; k < entries_.size(); ++k) entries_[k] -= other.entries_[k];
  return *this;
}

MatrixPolynomial operator*(const MatrixPolynomial& a,
                           const MatrixPolynomial& b) {
  if (a.cols_ != b.rows_) {
    throw std::invalid_argument(
        fmt::format("MatrixPolynomial product: {}x{} times {}x{}", a.rows_,
                    a.cols_, b.rows_, b.cols_));
  }
  MatrixPolynomial r(a.rows_, b.cols_, a.n_);
  for (int i = 0; i < a.rows_; ++i) {
    for (int j = 0; j < b.cols_; ++j) {
      for (int k = 0; k < a.cols_; ++k) r(i, j) += a(i, k) * b(k, j);
    }
  }
  return r;
}

MatrixPolynomial operator*(const Eigen::MatrixXd& a,
                           const MatrixPolynomial& b) {
  if (a.cols() != b.rows_) {
    throw std::invalid_argument("MatrixPolynomial product: shape mismatch");
  }
  MatrixPolynomial r(a.rows(), b.cols_, b.n_);
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < b.cols_; ++j) {
      for (int k = 0; k < a.cols(); ++k) {
        if (a(i, k) != 0.0) r(i, j) += a(i, k) * b(k, j);
      }
    }
  }
  return r;
}

MatrixPolynomial operator*(const MatrixPolynomial& a,
                           const Eigen::MatrixXd& b) {
  if (a.cols_ != b.rows()) {
    throw std::invalid_argument("MatrixPolynomial product: shape mismatch");
  }
  MatrixPolynomial r(a.rows_, b.cols(), a.n_);
  for (int i = 0; i < a.rows_; ++i) {
    for (int j = 0; j < b.cols(); ++j) {
      for (int k = 0; k < a.cols_; ++k) {
        if (b(k, j) != 0.0) r(i, j) += b(k, j) * a(i, k);
      }
    }
  }
  return r;
}

MatrixPolynomial operator*(double c, MatrixPolynomial a) {
  for (auto& p : a.entries_) p *= c;
  return a;
}

MonomialVector::MonomialVector(int n, std::vector<Monomial> entries)
    : n_(n), entries_(std::move(entries)) {
  if (n_ < 1) throw std::invalid_argument("MonomialVector: n must be >= 1");
  if (entries_.empty()) {
    throw std::invalid_argument("MonomialVector: needs at least one entry");
  }
  std::set<Monomial> seen;
  std::vector<bool> appears(n_, false), pure(n_, false);
  for (const auto& m : entries_) {
    if (m.num_vars() != n_) {
      throw std::invalid_argument(
          "MonomialVector: entry has wrong variable count");
    }
    if (m.is_constant()) {
      throw std::invalid_argument(
          "MonomialVector: constant entry would not vanish at the origin");
    }
    if (!seen.insert(m).second) {
      throw std::invalid_argument(
          fmt::format("MonomialVector: duplicate entry {}", m.ToString()));
    }
    int nonzero = 0;
    int last = -1;
    for (int i = 0; i < n_; ++i) {
      if (m.exponent(i) > 0) {
        appears[i] = true;
        ++nonzero;
        last = i;
      }
    }
    if (nonzero == 1) pure[last] = true;
  }
  for (int i = 0; i < n_; ++i) {
    if (!appears[i]) {
      throw std::invalid_argument(fmt::format(
          "MonomialVector: x{} appears in no entry, so Z vanishes away from "
          "the origin",
          i + 1));
    }
  }
  vanishing_ = std::all_of(pure.begin(), pure.end(), [](bool b) { return b; })
                   ? OriginVanishing::kCertified
                   : OriginVanishing::kUnverified;
}

MonomialVector MonomialVector::Parse(std::string_view text, int n) {
  std::vector<Monomial> entries;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    const Polynomial p = Polynomial::Parse(text.substr(start, end - start), n);
    if (p.terms().size() != 1 || p.terms().begin()->second != 1.0) {
      throw std::invalid_argument(fmt::format(
          "MonomialVector: \"{}\" is not a bare monomial",
          text.substr(start, end - start)));
    }
    entries.push_back(p.terms().begin()->first);
    start = end + 1;
  }
  return MonomialVector(n, std::move(entries));
}

int MonomialVector::degree() const {
  int d = 0;
  for (const auto& m : entries_) d = std::max(d, m.degree());
  return d;
}

Eigen::VectorXd MonomialVector::Evaluate(std::span<const double> x) const {
  Eigen::VectorXd z(size());
  for (int k = 0; k < size(); ++k) z(k) = entries_[k].Evaluate(x);
  return z;
}

MatrixPolynomial MonomialVector::AsMatrix() const {
  MatrixPolynomial r(size(), 1, n_);
  for (int k = 0; k < size(); ++k) r(k, 0) = Polynomial(n_, entries_[k], 1.0);
  return r;
}

std::string MonomialVector::ToString() const {
  std::string out;
  for (const auto& m : entries_) {
    if (!out.empty()) out += ", ";
    out += m.ToString();
  }
  return out;
}

MatrixPolynomial Jacobian(const MonomialVector& z) {
  const int n = z.num_vars();
  MatrixPolynomial j(z.size(), n, n);
  for (int k = 0; k < z.size(); ++k) {
    const Polynomial zk(n, z[k], 1.0);
    for (int i = 0; i < n; ++i) j(k, i) = zk.Differentiate(i);
  }
  return j;
}

std::vector<Monomial> MonomialsOfDegree(int n, int d) {
  std::vector<Monomial> out;
  std::vector<int> e(n, 0);
  // Emit exponent vectors in descending lexicographic order, which is the
  // graded lexicographic order within one degree.
  auto rec = [&](auto&& self, int var, int remaining) -> void {
    if (var == n - 1) {
      e[var] = remaining;
      out.emplace_back(e);
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      e[var] = k;
      self(self, var + 1, remaining - k);
    }
    e[var] = 0;
  };
  if (n > 0) rec(rec, 0, d);
  return out;
}

std::vector<Monomial> MonomialBasis(int n, int d) {
  if (d < 0) throw std::invalid_argument("MonomialBasis: negative degree");
  std::vector<Monomial> out;
  for (int k = 0; k <= d; ++k) {
    auto level = MonomialsOfDegree(n, k);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

}  // namespace ddsos
