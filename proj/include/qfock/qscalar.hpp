#ifndef QFOCK_QSCALAR_HPP
#define QFOCK_QSCALAR_HPP

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qfock/errors.hpp"

namespace qfock {

// Either an exact polynomial sum_i c_i q^i with rational coefficients, or a
// double evaluated at a pinned numeric q0. Exact values with no q-dependence
// mix freely with floats; anything else across modes is a usage error.
class QScalar {
 public:
  QScalar() = default;
  QScalar(long n);  // NOLINT(google-explicit-constructor)
  QScalar(int n) : QScalar(static_cast<long>(n)) {}  // NOLINT
  QScalar(const mpq_class& c);                        // NOLINT

  static QScalar q();
  static QScalar monomial(const mpq_class& c, unsigned power);
  static QScalar from_coeffs(std::vector<mpq_class> coeffs);
  static QScalar floating(double value, double q0);

  bool is_exact() const { return exact_; }
  bool is_float() const { return !exact_; }
  double q0() const { return q0_; }
  double value() const;
  const std::vector<mpq_class>& coeffs() const { return c_; }

  bool is_zero() const;
  // Exact, degree 0 (includes zero).
  bool is_constant() const;
  // -1 for zero; 0 for float values.
  int degree() const;
  mpq_class constant_term() const;
  mpq_class coeff(unsigned i) const;

  QScalar& operator+=(const QScalar& o);
  QScalar& operator-=(const QScalar& o);
  QScalar& operator*=(const QScalar& o);
  QScalar& operator*=(const mpq_class& c);
  QScalar operator-() const;

  friend QScalar operator+(QScalar a, const QScalar& b) { return a += b; }
  friend QScalar operator-(QScalar a, const QScalar& b) { return a -= b; }
  friend QScalar operator*(QScalar a, const QScalar& b) { return a *= b; }
  // Division by a nonzero rational; throws DegeneracyError on zero.
  QScalar operator/(const mpq_class& c) const;

  bool operator==(const QScalar& o) const;
  bool operator!=(const QScalar& o) const { return !(*this == o); }

  QScalar pow(unsigned k) const;
  // Multiplies by q^k: a coefficient shift when exact, q0^k when float.
  QScalar times_q_power(unsigned k) const;

  // Exact -> float at q0. Float input must already be at q0.
  QScalar eval_at(double q0) const;
  // Exact polynomial evaluated at a rational point.
  mpq_class substitute(const mpq_class& x) const;
  double to_double() const;
  double to_double(double q0) const;

  // "c0 + c1*q + c2*q^2"; coefficient 1 omitted before q, negatives as " - ".
  std::string to_string() const;
  static QScalar parse(std::string_view text);

 private:
  void trim();
  void check_mix(const QScalar& o) const;
  void to_float_like(const QScalar& o);

  bool exact_ = true;
  double f_ = 0.0;
  double q0_ = 0.0;
  std::vector<mpq_class> c_;
};

std::ostream& operator<<(std::ostream& os, const QScalar& s);

// [n]_q = 1 + q + ... + q^{n-1}; [0]_q = 0.
QScalar q_int(unsigned n);
// [n]_q! = [1]_q ... [n]_q; [0]_q! = 1.
QScalar q_fact(unsigned n);
// [n]_q! / [n-k]_q! = [n]_q [n-1]_q ... [n-k+1]_q.
QScalar q_falling(unsigned n, unsigned k);

// sigma given in one-line notation over {1..n}.
unsigned inversions(const std::vector<int>& sigma);

mpq_class parse_rational(std::string_view text);
std::string rational_to_string(const mpq_class& r);

}  // namespace qfock

#endif  // QFOCK_QSCALAR_HPP
