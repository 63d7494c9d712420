#include "qfock/qscalar.hpp"

#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace qfock {

QScalar::QScalar(long n) {
  if (n != 0) c_.emplace_back(n);
}

QScalar::QScalar(const mpq_class& c) {
  if (sgn(c) != 0) {
    c_.push_back(c);
    c_.back().canonicalize();
  }
}

QScalar QScalar::q() { return monomial(1, 1); }

QScalar QScalar::monomial(const mpq_class& c, unsigned power) {
  QScalar s;
  if (sgn(c) == 0) return s;
  s.c_.assign(power + 1, mpq_class(0));
  s.c_[power] = c;
  s.c_[power].canonicalize();
  return s;
}

QScalar QScalar::from_coeffs(std::vector<mpq_class> coeffs) {
  QScalar s;
  s.c_ = std::move(coeffs);
  for (auto& x : s.c_) x.canonicalize();
  s.trim();
  return s;
}

QScalar QScalar::floating(double value, double q0) {
  if (!(q0 > -1.0 && q0 < 1.0)) throw UsageError("float q0 must lie in (-1,1)");
  QScalar s;
  s.exact_ = false;
  s.f_ = value;
  s.q0_ = q0;
  return s;
}

double QScalar::value() const {
  if (exact_) throw UsageError("value() on an exact scalar; use to_double(q0)");
  return f_;
}

void QScalar::trim() {
  while (!c_.empty() && sgn(c_.back()) == 0) c_.pop_back();
}

bool QScalar::is_zero() const { return exact_ ? c_.empty() : f_ == 0.0; }

bool QScalar::is_constant() const { return exact_ && c_.size() <= 1; }

int QScalar::degree() const {
  if (!exact_) return 0;
  return static_cast<int>(c_.size()) - 1;
}

mpq_class QScalar::constant_term() const {
  if (!exact_) throw UsageError("constant_term() on a float scalar");
  return c_.empty() ? mpq_class(0) : c_[0];
}

mpq_class QScalar::coeff(unsigned i) const {
  if (!exact_) throw UsageError("coeff() on a float scalar");
  return i < c_.size() ? c_[i] : mpq_class(0);
}

void QScalar::check_mix(const QScalar& o) const {
  if (exact_ == o.exact_) {
    if (!exact_ && q0_ != o.q0_) throw UsageError("float scalars pinned at different q0");
    return;
  }
  const QScalar& ex = exact_ ? *this : o;
  if (!ex.is_constant()) {
    throw UsageError("cannot mix a q-dependent exact scalar with a float scalar");
  }
}

// Converts a q-free exact *this into float mode alongside o.
void QScalar::to_float_like(const QScalar& o) {
  double v = c_.empty() ? 0.0 : c_[0].get_d();
  exact_ = false;
  f_ = v;
  q0_ = o.q0_;
  c_.clear();
}

QScalar& QScalar::operator+=(const QScalar& o) {
  check_mix(o);
  if (exact_ && o.exact_) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
    for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] += o.c_[i];
    trim();
    return *this;
  }
  if (exact_) to_float_like(o);
  f_ += o.exact_ ? (o.c_.empty() ? 0.0 : o.c_[0].get_d()) : o.f_;
  return *this;
}

QScalar& QScalar::operator-=(const QScalar& o) { return *this += -o; }

QScalar& QScalar::operator*=(const QScalar& o) {
  check_mix(o);
  if (exact_ && o.exact_) {
    if (c_.empty() || o.c_.empty()) {
      c_.clear();
      return *this;
    }
    std::vector<mpq_class> r(c_.size() + o.c_.size() - 1, mpq_class(0));
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (sgn(c_[i]) == 0) continue;
      for (std::size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
    }
    c_ = std::move(r);
    trim();
    return *this;
  }
  if (exact_) to_float_like(o);
  f_ *= o.exact_ ? (o.c_.empty() ? 0.0 : o.c_[0].get_d()) : o.f_;
  return *this;
}

QScalar& QScalar::operator*=(const mpq_class& c) {
  if (!exact_) {
    f_ *= c.get_d();
    return *this;
  }
  if (sgn(c) == 0) {
    c_.clear();
    return *this;
  }
  mpq_class cc = c;
  cc.canonicalize();
  for (auto& x : c_) x *= cc;
  return *this;
}

QScalar QScalar::operator-() const {
  QScalar r = *this;
  if (exact_) {
    for (auto& x : r.c_) x = -x;
  } else {
    r.f_ = -r.f_;
  }
  return r;
}

QScalar QScalar::operator/(const mpq_class& c) const {
  if (sgn(c) == 0) throw DegeneracyError("division of a scalar by zero");
  QScalar r = *this;
  if (exact_) {
    mpq_class cc = c;
    cc.canonicalize();
    for (auto& x : r.c_) x /= cc;
  } else {
    r.f_ /= c.get_d();
  }
  return r;
}

bool QScalar::operator==(const QScalar& o) const {
  if (exact_ != o.exact_) return false;
  if (exact_) return c_ == o.c_;
  return f_ == o.f_ && q0_ == o.q0_;
}

QScalar QScalar::pow(unsigned k) const {
  QScalar result(1);
  if (!exact_) result = floating(1.0, q0_);
  QScalar base = *this;
  while (k) {
    if (k & 1u) result *= base;
    k >>= 1u;
    if (k) base *= base;
  }
  return result;
}

QScalar QScalar::times_q_power(unsigned k) const {
  if (k == 0) return *this;
  QScalar r = *this;
  if (!exact_) {
    double p = 1.0;
    for (unsigned i = 0; i < k; ++i) p *= q0_;
    r.f_ *= p;
    return r;
  }
  if (c_.empty()) return r;
  r.c_.insert(r.c_.begin(), k, mpq_class(0));
  return r;
}

QScalar QScalar::eval_at(double q0) const {
  if (!exact_) {
    if (q0 != q0_) throw UsageError("float scalar is pinned at a different q0");
    return *this;
  }
  return floating(to_double(q0), q0);
}

mpq_class QScalar::substitute(const mpq_class& x) const {
  if (!exact_) throw UsageError("substitute() requires an exact scalar");
  mpq_class acc = 0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double QScalar::to_double() const {
  if (!exact_) return f_;
  if (!is_constant()) throw UsageError("to_double() of a q-dependent scalar needs q0");
  return c_.empty() ? 0.0 : c_[0].get_d();
}

double QScalar::to_double(double q0) const {
  if (!exact_) return f_;
  double acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * q0 + it->get_d();
  return acc;
}

std::string rational_to_string(const mpq_class& r) {
  return r.get_str();
}

std::string QScalar::to_string() const {
  if (!exact_) {
    std::ostringstream os;
    os << std::setprecision(17) << f_;
    return os.str();
  }
  if (c_.empty()) return "0";
  std::string out;
  bool first = true;
  for (std::size_t i = 0; i < c_.size(); ++i) {
    if (sgn(c_[i]) == 0) continue;
    mpq_class mag = abs(c_[i]);
    bool neg = sgn(c_[i]) < 0;
    if (first) {
      if (neg) out += "-";
    } else {
      out += neg ? " - " : " + ";
    }
    first = false;
    if (i == 0) {
      out += mag.get_str();
      continue;
    }
    if (mag != 1) out += mag.get_str() + "*";
    out += "q";
    if (i > 1) out += "^" + std::to_string(i);
  }
  return out;
}

std::ostream& operator<<(std::ostream& os, const QScalar& s) { return os << s.to_string(); }

mpq_class parse_rational(std::string_view text) {
  std::string s;
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  }
  if (s.empty()) throw UsageError("empty rational literal");
  auto dot = s.find('.');
  if (dot != std::string::npos) {
    // Decimal literal: read digits exactly rather than through a double.
    bool neg = s[0] == '-';
    std::string body = (s[0] == '-' || s[0] == '+') ? s.substr(1) : s;
    dot = body.find('.');
    std::string digits = body.substr(0, dot) + body.substr(dot + 1);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
      throw UsageError("malformed rational literal: " + s);
    }
    mpz_class num(digits, 10);
    mpz_class den = 1;
    for (std::size_t i = dot + 1; i < body.size(); ++i) den *= 10;
    mpq_class r(num, den);
    r.canonicalize();
    return neg ? mpq_class(-r) : r;
  }
  std::string t = s[0] == '+' ? s.substr(1) : s;
  if (t.empty()) throw UsageError("malformed rational literal: " + s);
  std::size_t start = (t[0] == '-') ? 1 : 0;
  if (t.size() == start || t.find_first_not_of("0123456789/", start) != std::string::npos ||
      t.find('/', start) == start || t.back() == '/' || t.find('/') != t.rfind('/')) {
    throw UsageError("malformed rational literal: " + s);
  }
  mpq_class r;
  if (r.set_str(t, 10) != 0) throw UsageError("malformed rational literal: " + s);
  if (r.get_den() == 0) throw UsageError("zero denominator in rational literal: " + s);
  r.canonicalize();
  return r;
}

QScalar QScalar::parse(std::string_view text) {
  std::string s;
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  }
  if (s.empty()) throw UsageError("empty scalar literal");
  QScalar out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    int sign = 1;
    if (s[pos] == '+' || s[pos] == '-') {
      sign = s[pos] == '-' ? -1 : 1;
      ++pos;
    } else if (pos != 0) {
      throw UsageError("malformed scalar literal: " + s);
    }
    std::size_t end = pos;
    while (end < s.size() && s[end] != '+' && s[end] != '-') {
      if (s[end] == '^') {
        ++end;
        if (end < s.size() && (s[end] == '+' || s[end] == '-')) ++end;
      } else {
        ++end;
      }
    }
    std::string term = s.substr(pos, end - pos);
    pos = end;
    if (term.empty()) throw UsageError("malformed scalar literal: " + s);
    mpq_class coef = 1;
    unsigned power = 0;
    auto qpos = term.find('q');
    if (qpos == std::string::npos) {
      coef = parse_rational(term);
    } else {
      std::string head = term.substr(0, qpos);
      std::string tail = term.substr(qpos + 1);
      if (!head.empty()) {
        if (head.back() != '*') throw UsageError("malformed scalar term: " + term);
        coef = parse_rational(head.substr(0, head.size() - 1));
      }
      power = 1;
      if (!tail.empty()) {
        if (tail[0] != '^' || tail.size() < 2 ||
            tail.find_first_not_of("0123456789", 1) != std::string::npos) {
          throw UsageError("malformed scalar term: " + term);
        }
        power = static_cast<unsigned>(std::stoul(tail.substr(1)));
      }
    }
    out += monomial(mpq_class(sign * coef), power);
  }
  return out;
}

QScalar q_int(unsigned n) {
  std::vector<mpq_class> c(n, mpq_class(1));
  return QScalar::from_coeffs(std::move(c));
}

QScalar q_fact(unsigned n) {
  QScalar r(1);
  for (unsigned i = 2; i <= n; ++i) r *= q_int(i);
  return r;
}

QScalar q_falling(unsigned n, unsigned k) {
  if (k > n) throw UsageError("q_falling requires k <= n");
  QScalar r(1);
  for (unsigned i = 0; i < k; ++i) r *= q_int(n - i);
  return r;
}

unsigned inversions(const std::vector<int>& sigma) {
  const int n = static_cast<int>(sigma.size());
  std::vector<bool> seen(n + 1, false);
  for (int v : sigma) {
    if (v < 1 || v > n || seen[v]) throw UsageError("inversions: input is not a permutation of {1..n}");
    seen[v] = true;
  }
  unsigned count = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (sigma[i] > sigma[j]) ++count;
    }
  }
  return count;
}

}  // namespace qfock
