#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ddsos {

/// A monomial x1^q1 * ... * xn^qn, identified by its exponent vector.
///
/// Monomials are totally ordered by graded lexicographic order: lower total
/// degree first, ties broken so that x1 precedes x2 (i.e. [1, x1, x2, x1^2,
/// x1*x2, x2^2, ...]). Every container in this library that is keyed by
/// monomials iterates in this order.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::vector<int> exponents);

  /// The constant monomial 1 in `n` variables.
  static Monomial One(int n);
  /// The monomial x_{var+1} (zero-based `var`) raised to `power`.
  static Monomial Power(int n, int var, int power = 1);

  int num_vars() const { return static_cast<int>(exponents_.size()); }
  const std::vector<int>& exponents() const { return exponents_; }
  int exponent(int var) const { return exponents_[var]; }
  int degree() const { return degree_; }
  bool is_constant() const { return degree_ == 0; }

  double Evaluate(std::span<const double> x) const;

  /// Product of two monomials in the same number of variables.
  Monomial operator*(const Monomial& other) const;

  /// Formats as "1", "x1", "x1^2*x3", ...
  std::string ToString() const;

  friend bool operator==(const Monomial& a, const Monomial& b) {
    return a.exponents_ == b.exponents_;
  }
  friend bool operator<(const Monomial& a, const Monomial& b);

 private:
  std::vector<int> exponents_;
  int degree_{0};
};

/// Sparse real polynomial in a fixed number of variables.
///
/// Terms with a zero coefficient are never stored, so the zero polynomial has
/// no terms. The degree of the zero polynomial is 0.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, double>;

  Polynomial() = default;
  explicit Polynomial(int num_vars) : n_(num_vars) {}
  Polynomial(int num_vars, const Monomial& monomial, double coefficient);

  static Polynomial Constant(int n, double c);
  /// The polynomial x_{var+1}.
  static Polynomial Variable(int n, int var);

  /// Parses the textual form, e.g. "-4.2114*x1^3 + 2*x1*x2 - 1".
  /// Variables are x1..xn; throws std::invalid_argument on syntax errors or
  /// on variable indices outside [1, n].
  static Polynomial Parse(std::string_view text, int n);

  int num_vars() const { return n_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;
  double coefficient(const Monomial& m) const;

  /// Adds c * m to this polynomial, dropping the term if it cancels exactly.
  void AddTerm(const Monomial& m, double c);

  double Evaluate(std::span<const double> x) const;
  double Evaluate(const Eigen::VectorXd& x) const {
    return Evaluate(std::span<const double>(x.data(), x.size()));
  }

  Polynomial Differentiate(int var) const;

  /// Largest absolute coefficient; 0 for the zero polynomial.
  double MaxAbsCoefficient() const;

  /// Canonical text: terms in descending graded lexicographic order, shortest
  /// round-trip decimal coefficients. "0" for the zero polynomial.
  std::string ToString() const;

  Polynomial operator-() const;
  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(double c);

  friend Polynomial operator+(Polynomial a, const Polynomial& b) {
    return a += b;
  }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) {
    return a -= b;
  }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(Polynomial a, double c) { return a *= c; }
  friend Polynomial operator*(double c, Polynomial a) { return a *= c; }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.n_ == b.n_ && a.terms_ == b.terms_;
  }

 private:
  void CheckSameVars(const Polynomial& other) const;

  int n_{0};
  TermMap terms_;
};

/// Dense matrix of polynomials sharing one variable count.
class MatrixPolynomial {
 public:
  MatrixPolynomial() = default;
  MatrixPolynomial(int rows, int cols, int num_vars);

  /// Constant matrix polynomial.
  static MatrixPolynomial FromMatrix(const Eigen::MatrixXd& m, int num_vars);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int num_vars() const { return n_; }

  Polynomial& operator()(int i, int j) { return entries_[i * cols_ + j]; }
  const Polynomial& operator()(int i, int j) const {
    return entries_[i * cols_ + j];
  }

  int degree() const;
  Eigen::MatrixXd Evaluate(std::span<const double> x) const;
  Eigen::MatrixXd Evaluate(const Eigen::VectorXd& x) const {
    return Evaluate(std::span<const double>(x.data(), x.size()));
  }

  /// Coefficient matrix of monomial `m` across all entries.
  Eigen::MatrixXd CoefficientMatrix(const Monomial& m) const;
  /// Every monomial with a nonzero coefficient in some entry, ascending.
  std::vector<Monomial> Support() const;

  MatrixPolynomial Transpose() const;

  MatrixPolynomial& operator+=(const MatrixPolynomial& other);
  MatrixPolynomial& operator-=(const MatrixPolynomial& other);
  friend MatrixPolynomial operator+(MatrixPolynomial a,
                                    const MatrixPolynomial& b) {
    return a += b;
  }
  friend MatrixPolynomial operator-(MatrixPolynomial a,
                                    const MatrixPolynomial& b) {
    return a -= b;
  }
  friend MatrixPolynomial operator*(const MatrixPolynomial& a,
                                    const MatrixPolynomial& b);
  friend MatrixPolynomial operator*(const Eigen::MatrixXd& a,
                                    const MatrixPolynomial& b);
  friend MatrixPolynomial operator*(const MatrixPolynomial& a,
                                    const Eigen::MatrixXd& b);
  friend MatrixPolynomial operator*(double c, MatrixPolynomial a);

 private:
  int rows_{0};
  int cols_{0};
  int n_{0};
  std::vector<Polynomial> entries_;
};

/// How strongly a monomial vector is known to vanish only at the origin.
enum class OriginVanishing {
  /// Every variable appears as a pure power entry x_i^k; Z(x) = 0 iff x = 0.
  kCertified,
  /// Every variable appears in some entry but not all as pure powers; the
  /// property may or may not hold.
  kUnverified,
};

/// The vector Z(x) of N distinct nonconstant monomials in n state variables.
class MonomialVector {
 public:
  MonomialVector() = default;
  /// Throws std::invalid_argument if `entries` is empty, contains the
  /// constant monomial, repeats an entry, mixes variable counts, or omits a
  /// variable entirely (then Z(e_i) = 0 for a unit vector e_i).
  MonomialVector(int n, std::vector<Monomial> entries);

  /// Parses a comma separated list such as "x2, x1^2".
  static MonomialVector Parse(std::string_view text, int n);

  int num_vars() const { return n_; }
  int size() const { return static_cast<int>(entries_.size()); }
  const std::vector<Monomial>& entries() const { return entries_; }
  const Monomial& operator[](int k) const { return entries_[k]; }
  int degree() const;

  OriginVanishing origin_vanishing() const { return vanishing_; }

  Eigen::VectorXd Evaluate(std::span<const double> x) const;
  Eigen::VectorXd Evaluate(const Eigen::VectorXd& x) const {
    return Evaluate(std::span<const double>(x.data(), x.size()));
  }

  /// Z(x) as an N x 1 matrix polynomial.
  MatrixPolynomial AsMatrix() const;

  /// "x2, x1^2"
  std::string ToString() const;

 private:
  int n_{0};
  std::vector<Monomial> entries_;
  OriginVanishing vanishing_{OriginVanishing::kUnverified};
};

/// The N x n matrix polynomial dZ/dx, entry (k, i) = dZ_k/dx_i.
MatrixPolynomial Jacobian(const MonomialVector& z);

/// All monomials in `n` variables of total degree <= `d`, graded
/// lexicographic order. The result has C(n + d, d) entries.
std::vector<Monomial> MonomialBasis(int n, int d);

/// Monomials of total degree exactly `d`, graded lexicographic order.
std::vector<Monomial> MonomialsOfDegree(int n, int d);

}  // namespace ddsos
