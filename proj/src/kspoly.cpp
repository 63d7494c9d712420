#include "qfock/kspoly.hpp"

#include <algorithm>
#include <utility>

namespace qfock {

namespace {

std::string coeff_text(const QScalar& c, bool leading, bool bare) {
  std::string out;
  if (c.is_constant()) {
    mpq_class v = c.constant_term();
    const bool neg = sgn(v) < 0;
    if (neg) v = -v;
    if (leading) {
      out = neg ? "-" : "";
    } else {
      out = neg ? " - " : " + ";
    }
    if (bare || v != 1) out += rational_to_string(v);
    return out;
  }
  // Pull the sign of the top q-coefficient out of the parentheses.
  const bool neg = sgn(c.coeff(static_cast<unsigned>(c.degree()))) < 0;
  if (leading) {
    out = neg ? "-" : "";
  } else {
    out = neg ? " - " : " + ";
  }
  return out + "(" + (neg ? -c : c).to_string() + ")";
}

QScalar in_mode(const QMode& mode, const QScalar& c) { return mode.exact ? c : c.eval_at(mode.q0); }

}  // namespace

// ---------------------------------------------------------------- NCPolynomial

NCPolynomial NCPolynomial::constant(const QScalar& c) {
  NCPolynomial p;
  p.add({}, c);
  return p;
}

NCPolynomial NCPolynomial::variable(int j) {
  if (j < 1) throw UsageError("indeterminate index must be positive");
  NCPolynomial p;
  p.add({j}, QScalar(1));
  return p;
}

void NCPolynomial::add(const NCWord& w, const QScalar& c) {
  if (c.is_zero()) return;
  auto it = terms_.find(w);
  if (it == terms_.end()) {
    terms_.emplace(w, c);
    return;
  }
  it->second += c;
  if (it->second.is_zero()) terms_.erase(it);
}

QScalar NCPolynomial::coeff(const NCWord& w) const {
  auto it = terms_.find(w);
  return it == terms_.end() ? QScalar() : it->second;
}

int NCPolynomial::degree() const {
  int d = -1;
  for (const auto& [w, c] : terms_) d = std::max(d, static_cast<int>(w.size()));
  return d;
}

NCPolynomial& NCPolynomial::operator+=(const NCPolynomial& o) {
  for (const auto& [w, c] : o.terms_) add(w, c);
  return *this;
}

NCPolynomial& NCPolynomial::operator-=(const NCPolynomial& o) {
  for (const auto& [w, c] : o.terms_) add(w, -c);
  return *this;
}

NCPolynomial& NCPolynomial::operator*=(const QScalar& c) {
  if (c.is_zero()) {
    terms_.clear();
    return *this;
  }
  for (auto it = terms_.begin(); it != terms_.end();) {
    it->second *= c;
    it = it->second.is_zero() ? terms_.erase(it) : std::next(it);
  }
  return *this;
}

NCPolynomial operator*(const NCPolynomial& a, const NCPolynomial& b) {
  NCPolynomial out;
  for (const auto& [wa, ca] : a.terms_) {
    for (const auto& [wb, cb] : b.terms_) {
      NCPolynomial::NCWord w = wa;
      w.insert(w.end(), wb.begin(), wb.end());
      out.add(w, ca * cb);
    }
  }
  return out;
}

std::string NCPolynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::vector<std::pair<NCWord, QScalar>> sorted(terms_.begin(), terms_.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
  std::string out;
  bool first = true;
  for (const auto& [w, c] : sorted) {
    out += coeff_text(c, first, w.empty());
    if (!w.empty()) {
      if (!c.is_constant() || abs(c.constant_term()) != 1) out += " ";
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (i > 0) out += " ";
        out += "x" + std::to_string(w[i]);
      }
    }
    first = false;
  }
  return out;
}

// ---------------------------------------------------------------- QPolynomial

QPolynomial::QPolynomial(std::vector<QScalar> coeffs) : c_(std::move(coeffs)) { trim(); }

QPolynomial QPolynomial::x() { return QPolynomial({QScalar(), QScalar(1)}); }

QPolynomial QPolynomial::constant(const QScalar& c) { return QPolynomial({c}); }

void QPolynomial::trim() {
  while (!c_.empty() && c_.back().is_zero()) c_.pop_back();
}

QScalar QPolynomial::coeff(int i) const {
  return i >= 0 && i < static_cast<int>(c_.size()) ? c_[i] : QScalar();
}

QPolynomial& QPolynomial::operator+=(const QPolynomial& o) {
  if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
  for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] += o.c_[i];
  trim();
  return *this;
}

QPolynomial& QPolynomial::operator-=(const QPolynomial& o) {
  if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
  for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] -= o.c_[i];
  trim();
  return *this;
}

QPolynomial operator*(const QPolynomial& a, const QPolynomial& b) {
  if (a.c_.empty() || b.c_.empty()) return {};
  std::vector<QScalar> c(a.c_.size() + b.c_.size() - 1);
  for (std::size_t i = 0; i < a.c_.size(); ++i)
    for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
  return QPolynomial(std::move(c));
}

QPolynomial operator*(const QScalar& s, const QPolynomial& a) {
  std::vector<QScalar> c = a.c_;
  for (auto& x : c) x *= s;
  return QPolynomial(std::move(c));
}

QPolynomial QPolynomial::at_q(const mpq_class& q0) const {
  std::vector<QScalar> c;
  for (const auto& x : c_) c.emplace_back(x.substitute(q0));
  return QPolynomial(std::move(c));
}

std::string QPolynomial::to_string() const {
  if (c_.empty()) return "0";
  std::string out;
  bool first = true;
  for (int i = degree(); i >= 0; --i) {
    if (c_[i].is_zero()) continue;
    std::string mono = i == 0 ? "" : (i == 1 ? "x" : "x^" + std::to_string(i));
    std::string c = coeff_text(c_[i], first, i == 0);
    out += c;
    if (i > 0) {
      if (!c_[i].is_constant()) {
        out += "*";
      } else if (abs(c_[i].constant_term()) != 1) {
        out += "*";
      }
      out += mono;
    }
    first = false;
  }
  return out;
}

// ---------------------------------------------------------------- Kailath-Segall

namespace {

using Memo = std::map<std::vector<int>, NCPolynomial>;

const NCPolynomial& ks_rec(const std::vector<int>& u, const MomentSequence& r, Memo& memo) {
  auto it = memo.find(u);
  if (it != memo.end()) return it->second;
  NCPolynomial out;
  if (u.empty()) {
    out = NCPolynomial::constant(QScalar(1));
  } else if (u.size() == 1) {
    out = NCPolynomial::variable(u[0]);
  } else {
    const int j = u[0];
    const std::vector<int> rest(u.begin() + 1, u.end());
    out = NCPolynomial::variable(j) * ks_rec(rest, r, memo);
    for (std::size_t i = 0; i < rest.size(); ++i) {
      std::vector<int> without = rest;
      without.erase(without.begin() + static_cast<std::ptrdiff_t>(i));
      const QScalar qi = QScalar::monomial(1, static_cast<unsigned>(i));
      out -= (qi * QScalar(r.r(j + rest[i]))) * ks_rec(without, r, memo);
      std::vector<int> merged = without;
      merged.insert(merged.begin(), j + rest[i]);
      out -= qi * ks_rec(merged, r, memo);
    }
  }
  return memo.emplace(u, std::move(out)).first->second;
}

void check_index(const std::vector<int>& u) {
  if (static_cast<int>(u.size()) > kMaxKsLength) {
    throw UsageError("Kailath-Segall polynomials are limited to length " + std::to_string(kMaxKsLength));
  }
  for (int x : u) {
    if (x < 1) throw UsageError("multi-index entries must be positive");
  }
}

NCPolynomial x_plus_r(int k, const MomentSequence& r) {
  return NCPolynomial::variable(k) + NCPolynomial::constant(QScalar(r.r(k)));
}

}  // namespace

NCPolynomial ks_poly(const std::vector<int>& u, const MomentSequence& r) {
  check_index(u);
  Memo memo;
  return ks_rec(u, r, memo);
}

KsFormulaReport ks_row_formula(int j, int n, const MomentSequence& r) {
  if (j < 1 || n < 0) throw UsageError("row formula needs j >= 1 and n >= 0");
  std::vector<int> u(1, j);
  u.insert(u.end(), n, 1);
  check_index(u);
  Memo memo;
  KsFormulaReport rep{"ks_row_formula", j, n, ks_rec(u, r, memo), {}, false};
  auto A = [&](int m) { return ks_rec(std::vector<int>(m, 1), r, memo); };
  rep.closed = NCPolynomial::variable(j) * A(n);
  for (int k = 1; k <= n; ++k) {
    QScalar c = q_falling(n, k);
    if (k % 2 == 1) c = -c;
    rep.closed += c * (x_plus_r(j + k, r) * A(n - k));
  }
  rep.exact_zero = rep.recursion == rep.closed;
  return rep;
}

KsFormulaReport ks_power_formula(int n, const MomentSequence& r) {
  if (n < 0) throw UsageError("power formula needs n >= 0");
  check_index(std::vector<int>(n + 1, 1));
  Memo memo;
  auto A = [&](int m) { return ks_rec(std::vector<int>(m, 1), r, memo); };
  KsFormulaReport rep{"ks_power_formula", 1, n, A(n + 1), {}, false};
  for (int k = 0; k <= n; ++k) {
    QScalar c = q_falling(n, k);
    if (k % 2 == 1) c = -c;
    rep.closed += c * (x_plus_r(k + 1, r) * A(n - k));
  }
  rep.exact_zero = rep.recursion == rep.closed;
  return rep;
}

QPolynomial substitute(const NCPolynomial& p, const std::function<QPolynomial(int)>& bind) {
  std::map<int, QPolynomial> cache;
  auto get = [&](int j) -> const QPolynomial& {
    auto it = cache.find(j);
    if (it == cache.end()) it = cache.emplace(j, bind(j)).first;
    return it->second;
  };
  QPolynomial out;
  for (const auto& [w, c] : p.terms()) {
    QPolynomial term = QPolynomial::constant(c);
    for (int j : w) term = term * get(j);
    out += term;
  }
  return out;
}

QPolynomial q_hermite(int n) {
  if (n < 0 || n > 20) throw UsageError("q-Hermite degree must be in [0, 20]");
  if (n > kMaxKsLength) return q_hermite_recurrence(n);
  const auto r = MomentSequence::gaussian(n + 1);
  return substitute(ks_poly(std::vector<int>(n, 1), r), [](int j) {
    // Y_k vanishes for k >= 2 when nu = delta_0.
    return j == 1 ? QPolynomial::x() : QPolynomial();
  });
}

QPolynomial q_charlier(int n) {
  if (n < 0 || n > 20) throw UsageError("q-Charlier degree must be in [0, 20]");
  if (n > kMaxKsLength) return q_charlier_recurrence(n);
  const auto r = MomentSequence::poisson(n + 1);
  return substitute(ks_poly(std::vector<int>(n, 1), r), [](int) { return QPolynomial::x(); });
}

QPolynomial q_hermite_recurrence(int n) {
  if (n < 0) throw UsageError("degree must be nonnegative");
  QPolynomial prev = QPolynomial::constant(QScalar(1));
  if (n == 0) return prev;
  QPolynomial cur = QPolynomial::x();
  for (int k = 1; k < n; ++k) {
    QPolynomial next = QPolynomial::x() * cur - q_int(k) * prev;
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

QPolynomial q_charlier_recurrence(int n) {
  if (n < 0) throw UsageError("degree must be nonnegative");
  QPolynomial prev = QPolynomial::constant(QScalar(1));
  if (n == 0) return prev;
  QPolynomial cur = QPolynomial::x();
  for (int k = 1; k < n; ++k) {
    QPolynomial next = QPolynomial::x() * cur - q_int(k) * prev - q_int(k) * cur;
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

MonicOP monic_op(int k, const MomentSequence& r) { return {k, r.monic_orthogonal(k)}; }

mpq_class op_inner(const MonicOP& a, const MonicOP& b, const MomentSequence& r) {
  mpq_class s = 0;
  for (int i = 0; i <= a.degree; ++i)
    for (int j = 0; j <= b.degree; ++j) s += a.coeffs[i] * b.coeffs[j] * r.r(i + j + 2);
  return s;
}

FockVector apply_nc(const FockSpace& space, const NCPolynomial& p, const std::function<FockOperator(int)>& bind,
                    const FockVector& v) {
  std::map<int, FockOperator> ops;
  auto op = [&](int j) -> const FockOperator& {
    auto it = ops.find(j);
    if (it == ops.end()) it = ops.emplace(j, bind(j)).first;
    return it->second;
  };
  FockVector out;
  for (const auto& [w, c] : p.terms()) {
    FockVector x = v;
    for (auto it = w.rbegin(); it != w.rend(); ++it) x = op(*it).apply(space, x);
    out.axpy(in_mode(space.mode(), c), x);
  }
  return out;
}

IdentityReport ks_substitution_identity(const ProcessModel& m, const std::vector<int>& u, const mpq_class& t) {
  const Interval I{mpq_class(0), t};
  const NCPolynomial A = ks_poly(u, m.moments().scaled(t));
  const FockVector omega = FockVector::vacuum(m.mode().one());
  const FockVector lhs = apply_nc(m.space(), A, [&](int j) { return m.Y(I, j); }, omega);
  std::vector<OneParticleVector> word;
  for (int k : u) word.push_back(m.interval_vector(I, k));
  const FockVector rhs = u.empty() ? omega : FockVector::tensor(word);
  IdentityReport r{"ks_substitution", static_cast<int>(u.size()), false, residual2(m.space(), lhs, rhs)};
  r.exact_zero = r.residual.is_zero();
  return r;
}

IdentityReport ks_chain_identity(const ProcessModel& m, int n, const mpq_class& t) {
  if (n < 0) throw UsageError("chain index must be nonnegative");
  const Interval I{mpq_class(0), t};
  const FockSpace& s = m.space();
  const FockVector omega = FockVector::vacuum(m.mode().one());
  const FockVector lhs = psi_n(m, n + 1, t).apply(s, omega);
  FockVector rhs;
  for (int k = 0; k <= n; ++k) {
    QScalar c = in_mode(m.mode(), q_falling(n, k));
    if (k % 2 == 1) c = -c;
    const FockVector tail = psi_n(m, n - k, t).apply(s, omega);
    rhs.axpy(c, m.Delta(I, k + 1).apply(s, tail));
  }
  IdentityReport r{"ks_chain", n, false, residual2(s, lhs, rhs)};
  r.exact_zero = r.residual.is_zero();
  return r;
}

}  // namespace qfock
