#ifndef QFOCK_KSPOLY_HPP
#define QFOCK_KSPOLY_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qfock/fock.hpp"
#include "qfock/model.hpp"
#include "qfock/qscalar.hpp"
#include "qfock/stochastic.hpp"

namespace qfock {

constexpr int kMaxKsLength = 8;

// Polynomial in noncommuting x_1, x_2, ...; a word lists variable indices left to right.
class NCPolynomial {
 public:
  using NCWord = std::vector<int>;

  NCPolynomial() = default;
  static NCPolynomial constant(const QScalar& c);
  static NCPolynomial variable(int j);

  void add(const NCWord& w, const QScalar& c);
  QScalar coeff(const NCWord& w) const;
  const std::map<NCWord, QScalar>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;

  NCPolynomial& operator+=(const NCPolynomial& o);
  NCPolynomial& operator-=(const NCPolynomial& o);
  NCPolynomial& operator*=(const QScalar& c);
  friend NCPolynomial operator+(NCPolynomial a, const NCPolynomial& b) { return a += b; }
  friend NCPolynomial operator-(NCPolynomial a, const NCPolynomial& b) { return a -= b; }
  friend NCPolynomial operator*(const QScalar& c, NCPolynomial a) { return a *= c; }
  // Concatenation product.
  friend NCPolynomial operator*(const NCPolynomial& a, const NCPolynomial& b);
  bool operator==(const NCPolynomial& o) const { return terms_ == o.terms_; }
  bool operator!=(const NCPolynomial& o) const { return !(*this == o); }

  // Sparse word form, highest degree first: "x1 x1 - x2 - 1".
  std::string to_string() const;

 private:
  std::map<NCWord, QScalar> terms_;
};

// Polynomial in one commuting variable x; coeffs[i] multiplies x^i, no trailing zeros.
class QPolynomial {
 public:
  QPolynomial() = default;
  explicit QPolynomial(std::vector<QScalar> coeffs);
  static QPolynomial x();
  static QPolynomial constant(const QScalar& c);

  const std::vector<QScalar>& coeffs() const { return c_; }
  QScalar coeff(int i) const;
  int degree() const { return static_cast<int>(c_.size()) - 1; }

  QPolynomial& operator+=(const QPolynomial& o);
  QPolynomial& operator-=(const QPolynomial& o);
  friend QPolynomial operator+(QPolynomial a, const QPolynomial& b) { return a += b; }
  friend QPolynomial operator-(QPolynomial a, const QPolynomial& b) { return a -= b; }
  friend QPolynomial operator*(const QPolynomial& a, const QPolynomial& b);
  friend QPolynomial operator*(const QScalar& c, const QPolynomial& a);
  bool operator==(const QPolynomial& o) const { return c_ == o.c_; }
  bool operator!=(const QPolynomial& o) const { return !(*this == o); }

  // Coefficientwise substitution q -> q0.
  QPolynomial at_q(const mpq_class& q0) const;
  // "x^3 - (2 + q)*x".
  std::string to_string() const;

 private:
  void trim();
  std::vector<QScalar> c_;
};

// A_u by the recursion
//   A_{(j, u)} = x_j A_u - sum_i q^{i-1} r_{j+u(i)} A_{u \ u(i)} - sum_i q^{i-1} A_{(j+u(i), u \ u(i))},
// A_() = 1, A_(i) = x_i. Length at most 8; a missing moment is a usage error.
NCPolynomial ks_poly(const std::vector<int>& u, const MomentSequence& r);

struct KsFormulaReport {
  std::string name;
  int j = 0;
  int n = 0;
  NCPolynomial recursion;
  NCPolynomial closed;
  bool exact_zero = false;
};

// A_{(j,1,...,1)} (n ones) against x_j A^(n) + sum_{k=1}^n (-1)^k [n]!/[n-k]! (x_{j+k} + r_{j+k}) A^(n-k).
KsFormulaReport ks_row_formula(int j, int n, const MomentSequence& r);
// A^(n+1) against sum_{k=0}^n (-1)^k [n]!/[n-k]! (x_{k+1} + r_{k+1}) A^(n-k); needs r_1 = 0.
KsFormulaReport ks_power_formula(int n, const MomentSequence& r);

// Replaces each x_j by a commuting polynomial; unbound variables are zero.
QPolynomial substitute(const NCPolynomial& p, const std::function<QPolynomial(int)>& bind);

// A^(n) with r_2 = 1, r_k = 0 otherwise, x_1 = x, x_k = 0 for k >= 2.
// Degrees above the ks_poly length cap come from the three-term recurrence.
QPolynomial q_hermite(int n);
// A^(n) with r_k = 1 for k >= 2, x_k = x for all k.
QPolynomial q_charlier(int n);
// H_{n+1} = x H_n - [n]_q H_{n-1}, H_0 = 1, H_1 = x.
QPolynomial q_hermite_recurrence(int n);
// C_{n+1} = x C_n - [n]_q C_{n-1} - [n]_q C_n, C_0 = 1, C_1 = x.
QPolynomial q_charlier_recurrence(int n);

struct MonicOP {
  int degree = 0;
  std::vector<mpq_class> coeffs;  // coeffs[i] multiplies x^i; coeffs[degree] = 1
};

// Monic orthogonal polynomial under <x^a, x^b> = r_{a+b+2}. Singular Hankel -> DegeneracyError.
MonicOP monic_op(int k, const MomentSequence& r);
// sum_{a,b} c_a d_b r_{a+b+2}.
mpq_class op_inner(const MonicOP& a, const MonicOP& b, const MomentSequence& r);

// p with x_j bound to operators, applied to v.
FockVector apply_nc(const FockSpace& space, const NCPolynomial& p, const std::function<FockOperator(int)>& bind,
                    const FockVector& v);

// A_u(x_j = Y_j([0,t))) Omega against tensor_i chi_[0,t) (x) x^{u(i)-1}; moments scaled by t.
IdentityReport ks_substitution_identity(const ProcessModel& m, const std::vector<int>& u, const mpq_class& t);
// psi_{n+1}(t) Omega against sum_{k=0}^n (-1)^k [n]!/[n-k]! Delta_{k+1}(t) psi_{n-k}(t) Omega.
IdentityReport ks_chain_identity(const ProcessModel& m, int n, const mpq_class& t);

}  // namespace qfock

#endif  // QFOCK_KSPOLY_HPP
