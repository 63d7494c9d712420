#include "suites.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <random>

#include "qfock/fock.hpp"
#include "qfock/kspoly.hpp"
#include "qfock/partitions.hpp"
#include "qfock/stochastic.hpp"
#include "qfock/wick.hpp"

namespace qfock::tools {

namespace {

using Rng = std::mt19937_64;

int rand_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

QScalar rand_rational(Rng& rng) {
  mpq_class x(rand_int(rng, -3, 3), rand_int(rng, 1, 3));
  x.canonicalize();
  return QScalar(x);
}

bool is_body(const ProcessModel& m) { return m.kind() == ProcessModel::Kind::Body; }

int power1(const ProcessModel& m, int atom) { return static_cast<const BodyAlgebra&>(m.algebra()).index(atom, 1); }

// Power-1 letters on every atom (body) or arbitrary functions (appendix).
Letter random_letter(Rng& rng, const ProcessModel& m) {
  OneParticleVector v;
  if (is_body(m)) {
    for (int a = 0; a < m.grid().size(); ++a) v.add(power1(m, a), rand_rational(rng));
  } else {
    for (int i = 0; i < m.algebra().dim(); ++i) v.add(i, rand_rational(rng));
  }
  if (v.is_zero()) v.add(0, QScalar(1));
  return m.algebra().letter(v);
}

// Wick element over power-1 letters on atoms < end, degree <= max_degree.
FockVector random_past(Rng& rng, const ProcessModel& m, int end, int max_degree, int terms) {
  FockVector out = FockVector::vacuum(rand_rational(rng));
  if (end == 0) return out;
  for (int t = 0; t < terms; ++t) {
    const int len = rand_int(rng, 1, max_degree);
    std::vector<int> idx;
    for (int i = 0; i < len; ++i) idx.push_back(power1(m, rand_int(rng, 0, end - 1)));
    out.add(Word(idx), rand_rational(rng));
  }
  return out;
}

// B^t B + I with small integer B.
OneParticleSpace random_space(Rng& rng, int dim) {
  std::vector<int> b(static_cast<std::size_t>(dim) * dim);
  for (auto& x : b) x = rand_int(rng, -2, 2);
  std::vector<QScalar> g(static_cast<std::size_t>(dim) * dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      long s = i == j ? 1 : 0;
      for (int k = 0; k < dim; ++k) s += b[k * dim + i] * b[k * dim + j];
      g[static_cast<std::size_t>(i) * dim + j] = QScalar(s);
    }
  return OneParticleSpace(dim, std::move(g));
}

StepFunction random_off_diagonal(Rng& rng, int arity, int natoms, int terms) {
  StepFunction F(arity);
  std::vector<int> atoms(natoms);
  for (int t = 0; t < terms; ++t) {
    for (int i = 0; i < natoms; ++i) atoms[i] = i;
    std::shuffle(atoms.begin(), atoms.end(), rng);
    F.add(std::vector<int>(atoms.begin(), atoms.begin() + arity), rand_rational(rng));
  }
  return F;
}

constexpr std::size_t kFullNormTerms = 64;

class RowSink {
 public:
  RowSink(std::string suite, bool fault) : suite_(std::move(suite)), fault_(fault) {}

  // Residual ||lhs - rhs||_q^2. For a large difference only its q^0 coefficient
  // <d, d>_0 is reported; when that is nonzero the identity has already failed.
  void vectors(const std::string& id, int n, const FockSpace& s, const FockVector& lhs, FockVector rhs) {
    if (fault_) rhs *= QScalar(-1);
    const FockVector d = lhs - rhs;
    if (d.size() > kFullNormTerms) {
      const QScalar c0 = s.inner0(d, d);
      if (!c0.is_zero()) {
        rows_.push_back({suite_, id, n, false, "q^0 coefficient " + c0.to_string()});
        return;
      }
    }
    residual(id, n, s.normq2(d));
  }
  void scalars(const std::string& id, int n, const QScalar& lhs, QScalar rhs) {
    if (fault_) rhs = -rhs;
    residual(id, n, lhs - rhs);
  }
  void polynomials(const std::string& id, int n, const NCPolynomial& lhs, NCPolynomial rhs) {
    if (fault_) rhs *= QScalar(-1);
    const NCPolynomial d = lhs - rhs;
    rows_.push_back({suite_, id, n, d.is_zero(), d.to_string()});
  }
  void residual(const std::string& id, int n, const QScalar& r) {
    rows_.push_back({suite_, id, n, r.is_zero(), r.to_string()});
  }
  std::vector<SuiteRow> take() { return std::move(rows_); }
  bool fault() const { return fault_; }

 private:
  std::string suite_;
  bool fault_;
  std::vector<SuiteRow> rows_;
};

void need(bool ok, const std::string& msg) {
  if (!ok) throw UsageError(msg);
}

void need_body(const ProcessModel& m, const std::string& suite) {
  need(is_body(m), suite + " needs a body model (kind = body)");
}

void need_depth(const ProcessModel& m, int d, const std::string& suite) {
  need(m.fock_depth() >= d, suite + " needs fock depth >= " + std::to_string(d) + " (--depth)");
}

void need_cutoff(const ProcessModel& m, int d, const std::string& suite) {
  if (is_body(m)) need(m.degree_cutoff() >= d, suite + " needs degree cutoff >= " + std::to_string(d) + " (--cutoff)");
}

void need_moment(const ProcessModel& m, int k, const std::string& suite) {
  need(m.moments().has(k), suite + " needs moment r_" + std::to_string(k));
}

void need_nmax(const SuiteConfig& cfg, int cap, const std::string& suite) {
  need(cfg.nmax >= 1, "--nmax must be positive");
  need(cfg.nmax <= cap, suite + " is limited to n <= " + std::to_string(cap) + "; requested " + std::to_string(cfg.nmax));
}

FockVector omega(const ProcessModel& m) { return FockVector::vacuum(m.mode().one()); }

FockVector apply_all(const ProcessModel& m, const std::vector<Letter>& ls, FockVector v) {
  for (auto it = ls.rbegin(); it != ls.rend(); ++it) v = field(*it).apply(m.space(), v);
  return v;
}

Interval iv(const mpq_class& a, const mpq_class& b) { return {a, b}; }

struct Suite {
  std::function<void(const ProcessModel&, const SuiteConfig&)> budget;
  std::function<void(const ProcessModel&, const SuiteConfig&, Rng&, RowSink&)> run;
};

// ---------------------------------------------------------------- suites

constexpr int kCommutationDegree = 4;

void commutation(const ProcessModel&, const SuiteConfig& cfg, Rng& rng, RowSink& out) {
  const int top = std::min(cfg.nmax, kCommutationDegree);
  const int dim = 3;
  // The fault flips the sign of the q term; the right side is zero either way.
  const QScalar q = out.fault() ? -QScalar::q() : QScalar::q();
  for (int n = 0; n <= top; ++n) {
    Rng local(rng());
    QScalar res;
    for (int trial = 0; trial < 20; ++trial) {
      FockSpace s(random_space(local, dim), top + 1);
      OneParticleVector zeta, eta;
      for (int i = 0; i < dim; ++i) {
        zeta.add(i, rand_rational(local));
        eta.add(i, rand_rational(local));
      }
      const FockOperator comm = FockOperator::annihilation(zeta) * FockOperator::creation(eta) -
                                q * (FockOperator::creation(eta) * FockOperator::annihilation(zeta));
      const QScalar pair = s.one_particle().pair(zeta, eta);
      for (const auto& w : all_words(dim, n)) {
        const FockVector v = FockVector::basis(w);
        res += s.normq2(s.apply(comm, v) - pair * v);
      }
    }
    out.residual("a(z)a*(e) - q a*(e)a(z) = <z,e> on degree-n words", n, res);
  }
}

void product_expansion_suite(const ProcessModel& m, const SuiteConfig& cfg, Rng& rng, RowSink& out) {
  for (int n = 1; n <= cfg.nmax; ++n) {
    std::vector<Letter> ls;
    for (int i = 0; i < n; ++i) ls.push_back(random_letter(rng, m));
    const auto pe = product_expansion(m.algebra(), ls);
    out.vectors("product expansion on Omega = X(l_1)...X(l_n) Omega", n, m.space(), pe.on_vacuum(m.mode()),
                apply_all(m, ls, omega(m)));
  }
}

void moments_suite(const ProcessModel& m, const SuiteConfig& cfg, Rng& rng, RowSink& out) {
  for (int n = 1; n <= cfg.nmax; ++n) {
    std::vector<Letter> ls;
    for (int i = 0; i < n; ++i) ls.push_back(random_letter(rng, m));
    out.scalars("partition sum q^rc = <Omega, X(l_1)...X(l_n) Omega>", n, vacuum_moment(m.algebra(), ls, m.mode()),
                m.space().vacuum_coeff(apply_all(m, ls, omega(m))));
  }
}

constexpr int kStPiMax = 6;

void st_pi_suite(const ProcessModel& m, const SuiteConfig& cfg, Rng&, RowSink& out) {
  const mpq_class t = m.grid().horizon();
  const FockOperator x = m.X(m.whole());
  const int top = std::min(cfg.nmax, kStPiMax);
  for (int n = 1; n <= top; ++n) {
    FockVector lhs = omega(m);
    for (int i = 0; i < n; ++i) lhs = x.apply(m.space(), lhs);
    FockVector rhs;
    for_each_partition(n, [&](const SetPartition& pi) { rhs += st_pi_closed(m, pi, t).apply(m.space(), omega(m)); });
    out.vectors("X(t)^n Omega = sum_pi St_pi(t) Omega", n, m.space(), lhs, rhs);
  }
}

constexpr int kIsometryArity = 3;

void isometry_suite(const ProcessModel& m, const SuiteConfig& cfg, Rng& rng, RowSink& out) {
  const int natoms = m.grid().size();
  const int top = std::min({cfg.nmax, kIsometryArity, natoms});
  const mpq_class r2 = m.moments().r(2);
  for (int n = 1; n <= top; ++n) {
    // Centered integrator: Y_1 = X for body models, X minus its drift for appendix ones.
    const std::vector<ProcessRef> procs(n, ProcessRef::y(1));
    const StepFunction F = random_off_diagonal(rng, n, natoms, 3);
    const StepFunction G = random_off_diagonal(rng, n, natoms, 3);
    const FockVector a = multiple_integral(m, F, procs).apply(m.space(), omega(m));
    const FockVector b = multiple_integral(m, G, procs).apply(m.space(), omega(m));
    mpq_class scale = 1;
    for (int i = 0; i < n; ++i) scale *= r2;
    out.scalars("<int F dY_1, int G dY_1> = r_2^n <F, G>_q", n, m.space().innerq(a, b),
                QScalar(scale) * l2q_inner(F, G, m.grid()));
  }
}

constexpr int kKsRow = 5;
constexpr int kKsChain = 4;

void ks_suite(const ProcessModel& m, const SuiteConfig& cfg, Rng&, RowSink& out) {
  const auto& r = m.moments();
  const int rows = std::min(cfg.nmax, kKsRow);
  for (int j = 1; j <= 3; ++j) {
    for (int n = 0; n <= rows; ++n) {
      if (!r.has(j + n + 1)) continue;
      const auto rep = ks_row_formula(j, n, r);
      out.polynomials("A_(" + std::to_string(j) + ",1,...,1) row formula", n, rep.recursion, rep.closed);
    }
  }
  const mpq_class t = m.grid().horizon();
  const Interval I = m.whole();
  const int chain = std::min(cfg.nmax - 1, kKsChain);
  for (int n = 0; n <= chain; ++n) {
    const FockVector lhs = psi_n(m, n + 1, t).apply(m.space(), omega(m));
    FockVector rhs;
    for (int k = 0; k <= n; ++k) {
      QScalar c = q_falling(n, k);
      if (!m.mode().exact) c = c.eval_at(m.mode().q0);
      if (k % 2 == 1) c = -c;
      rhs.axpy(c, m.Delta(I, k + 1).apply(m.space(), psi_n(m, n - k, t).apply(m.space(), omega(m))));
    }
    out.vectors("psi_{n+1} = sum_k (-1)^k [n]!/[n-k]! Delta_{k+1} psi_{n-k} on Omega", n, m.space(), lhs, rhs);
  }
  const int subst = std::min(cfg.nmax, 3);
  const auto scaled = r.scaled(t);
  for (int n = 1; n <= subst; ++n) {
    // u = (2, 1, ..., 1): exercises one higher-order variable.
    std::vector<int> u(n, 1);
    u[0] = 2;
    const NCPolynomial A = ks_poly(u, scaled);
    const FockVector lhs = apply_nc(m.space(), A, [&](int j) { return m.Y(I, j); }, omega(m));
    std::vector<OneParticleVector> word;
    for (int k : u) word.push_back(m.interval_vector(I, k));
    out.vectors("A_u(x_j = Y_j) Omega = tensor chi (x) x^{u(i)-1}, u = (2,1,...)", n, m.space(), lhs,
                FockVector::tensor(word));
  }
}

void ito_suite(const ProcessModel& m, const SuiteConfig&, Rng& rng, RowSink& out) {
  const int N = m.grid().size();
  const QScalar r2(m.moments().r(2));
  for (Side side : {Side::Left, Side::Right}) {
    AdaptedProcess U, V;
    for (int a = 1; a < N; ++a) {
      U.pieces.emplace_back(m.grid().atom(a), random_past(rng, m, a, 2, 2));
      V.pieces.emplace_back(m.grid().atom(a), random_past(rng, m, a, 2, 2));
    }
    const FockVector a = ito_integral(m, U, side).apply(m.space(), omega(m));
    const FockVector b = ito_integral(m, V, side).apply(m.space(), omega(m));
    out.scalars(std::string("Ito isometry, ") + (side == Side::Left ? "left" : "right") + " integrand", 2,
                m.space().innerq(a, b), r2 * process_inner(m, U, V));
  }
}

void conditional_suite(const ProcessModel& m, const SuiteConfig& cfg, Rng& rng, RowSink& out) {
  const int N = m.grid().size();
  const int half = N / 2;
  const mpq_class s = m.grid().boundary(half);
  const Interval I = iv(s, m.grid().horizon());
  const WickMap W(m.algebra_ptr());
  const FockOperator X = m.X(I);
  const int top = std::min(cfg.nmax, 3);
  for (int d = 1; d <= top; ++d) {
    const FockVector z = random_past(rng, m, half, d, 3);
    const FockVector lhs = conditional_expectation(m, (X * W.wick(z) * X).apply(m.space(), omega(m)), s);
    const QScalar c(I.length() * m.moments().r(2));
    out.vectors("E_s[X([s,t)) W(z) X([s,t))] = (t-s) r_2 Gamma_q(z)", d, m.space(), lhs, c * m.space().gamma_q(z));
  }
}

void two_sided_suite(const ProcessModel& m, const SuiteConfig& cfg, Rng&, RowSink& out) {
  const int N = m.grid().size();
  const Interval past = iv(0, m.grid().boundary(1));
  const Interval I = iv(m.grid().boundary(1), m.grid().horizon());
  const int top = std::min(cfg.nmax, 2);
  for (int k = 0; k <= top; ++k) {
    FockVector eta = omega(m);
    if (k >= 1) eta = FockVector::tensor(std::vector<OneParticleVector>(k, m.interval_vector(past, 1)));
    AdaptedProcess U{{{I, eta}}};
    const FockVector closed = two_sided_integral(m, U).apply(m.space(), omega(m));
    out.vectors("int dDelta_2 Gamma_q(U) Omega = q^k Delta_2(I) eta", k, m.space(), closed,
                m.mode().one().times_q_power(k) * m.Delta(I, 2).apply(m.space(), eta));
    FockVector diag;
    for (int a = 1; a < N; ++a) {
      for (const auto& [w, c] : eta.terms()) diag.add(Word{power1(m, a)}.concat(w).concat(Word{power1(m, a)}), c);
    }
    out.vectors("sum_A X(A) U X(A) - int dDelta_2 Gamma_q(U) = sum_A e_A eta e_A", k, m.space(),
                two_sided_discrete(m, U).apply(m.space(), omega(m)) - closed, diag);
  }
}

void traciality_suite(const ProcessModel& m, const SuiteConfig&, Rng&, RowSink& out) {
  const Interval I = m.grid().atom(0);
  const Interval J = m.grid().atom(1);
  const QScalar q = m.mode().q();
  for (int k = 1; k <= 2; ++k) {
    const auto [a, b] = traciality_witness(m, I, J, k);
    const QScalar c = m.mode().embed(QScalar(m.moments().r(2) * m.moments().r(2 + k) * I.length() * J.length()));
    out.scalars("phi[X(I)X(J)X(I)X(J)Y_k(I)] = q^2 r_2 r_{2+k}|I||J|", k, a, c * q * q);
    out.scalars("phi[Y_k(I)X(I)X(J)X(I)X(J)] = q r_2 r_{2+k}|I||J|", k, b, c * q);
  }
}

const std::map<std::string, Suite>& registry() {
  static const std::map<std::string, Suite> suites = {
      {"commutation", {[](const ProcessModel&, const SuiteConfig& c) { need_nmax(c, 8, "commutation"); },
                       commutation}},
      {"product_expansion",
       {[](const ProcessModel& m, const SuiteConfig& c) {
          need_nmax(c, kMaxExpansionLength, "product_expansion");
          need_depth(m, c.nmax, "product_expansion");
          need_cutoff(m, c.nmax, "product_expansion");
        },
        product_expansion_suite}},
      {"moments",
       {[](const ProcessModel& m, const SuiteConfig& c) {
          need_nmax(c, kMaxMomentLength, "moments");
          need_depth(m, c.nmax, "moments");
          need_cutoff(m, c.nmax, "moments");
        },
        moments_suite}},
      {"st_pi",
       {[](const ProcessModel& m, const SuiteConfig& c) {
          need_nmax(c, 8, "st_pi");
          const int n = std::min(c.nmax, kStPiMax);
          need_depth(m, n, "st_pi");
          need_cutoff(m, n, "st_pi");
          if (is_body(m)) need_moment(m, 2 * n, "st_pi");
        },
        st_pi_suite}},
      {"isometry",
       {[](const ProcessModel& m, const SuiteConfig& c) {
          need_nmax(c, 8, "isometry");
          need_depth(m, std::min({c.nmax, kIsometryArity, m.grid().size()}), "isometry");
          need_moment(m, 2, "isometry");
        },
        isometry_suite}},
      {"kailath_segall",
       {[](const ProcessModel& m, const SuiteConfig& c) {
          need_nmax(c, kMaxKsLength - 1, "kailath_segall");
          need_body(m, "kailath_segall");
          const int chain = std::min(c.nmax - 1, kKsChain) + 1;
          need_depth(m, chain, "kailath_segall");
          need_cutoff(m, chain, "kailath_segall");
          need_moment(m, 2 * chain, "kailath_segall");
        },
        ks_suite}},
      {"ito",
       {[](const ProcessModel& m, const SuiteConfig&) {
          need_body(m, "ito");
          need(m.grid().size() >= 2, "ito needs at least 2 grid atoms (--grid)");
          need_depth(m, 3, "ito");
          need_cutoff(m, 3, "ito");
          need_moment(m, 6, "ito");
        },
        ito_suite}},
      {"conditional",
       {[](const ProcessModel& m, const SuiteConfig& c) {
          need_nmax(c, 8, "conditional");
          need_body(m, "conditional");
          need(m.grid().size() >= 2, "conditional needs at least 2 grid atoms (--grid)");
          const int d = std::min(c.nmax, 3);
          need_depth(m, d + 2, "conditional");
          need_cutoff(m, 2, "conditional");
          need_moment(m, 4, "conditional");
        },
        conditional_suite}},
      {"two_sided",
       {[](const ProcessModel& m, const SuiteConfig& c) {
          need_nmax(c, 8, "two_sided");
          need_body(m, "two_sided");
          need(m.grid().size() >= 2, "two_sided needs at least 2 grid atoms (--grid)");
          need_depth(m, std::min(c.nmax, 2) + 2, "two_sided");
          need_cutoff(m, 3, "two_sided");
          need_moment(m, 6, "two_sided");
        },
        two_sided_suite}},
      {"traciality",
       {[](const ProcessModel& m, const SuiteConfig&) {
          need_body(m, "traciality");
          need(m.grid().size() >= 2, "traciality needs at least 2 grid atoms (--grid)");
          need_cutoff(m, 4, "traciality");
          need_moment(m, 8, "traciality");
        },
        traciality_suite}},
  };
  return suites;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"commutation", "product_expansion", "moments", "st_pi",
                                                 "isometry",    "kailath_segall",    "ito",     "conditional",
                                                 "two_sided",   "traciality"};
  return names;
}

void check_budget(const std::string& suite, const ProcessModel& m, const SuiteConfig& cfg) {
  auto it = registry().find(suite);
  if (it == registry().end()) throw UsageError("unknown suite: " + suite);
  it->second.budget(m, cfg);
}

std::vector<SuiteRow> run_suite(const std::string& suite, const ProcessModel& m, const SuiteConfig& cfg) {
  check_budget(suite, m, cfg);
  // One stream per suite, so results do not depend on which suites run together.
  std::uint32_t h = 2166136261u;  // FNV-1a
  for (unsigned char ch : suite) h = (h ^ ch) * 16777619u;
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32), h};
  Rng rng(seq);
  RowSink sink(suite, cfg.fault == suite);
  registry().at(suite).run(m, cfg, rng, sink);
  return sink.take();
}

}  // namespace qfock::tools
