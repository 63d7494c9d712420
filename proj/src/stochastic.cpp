#include "qfock/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

namespace qfock {

namespace {

// All permutations of {1..n} in one-line notation, with their inversion counts.
std::vector<std::pair<std::vector<int>, unsigned>> permutations(int n) {
  std::vector<int> sigma(n);
  std::iota(sigma.begin(), sigma.end(), 1);
  std::vector<std::pair<std::vector<int>, unsigned>> out;
  do {
    out.emplace_back(sigma, inversions(sigma));
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return out;
}

FockVector vacuum_of(const ProcessModel& m) { return FockVector::vacuum(m.mode().one()); }

Interval from_zero(const mpq_class& t) { return {mpq_class(0), t}; }

mpq_class overlap(const Interval& a, const Interval& b) {
  mpq_class lo = std::max(a.a, b.a);
  mpq_class hi = std::min(a.b, b.b);
  return hi > lo ? mpq_class(hi - lo) : mpq_class(0);
}

FockOperator wick_of(const ProcessModel& m, const FockVector& v) { return WickMap(m.algebra_ptr()).wick(v); }

void check_piece(const ProcessModel& m, const Interval& I, const FockVector& U, const char* what) {
  m.grid().atoms_in(I);
  const int start = m.grid().boundary_index(I.a);
  for (const auto& [w, c] : U.terms()) {
    for (int p = 0; p < w.size(); ++p) {
      if (m.atom_of_basis(w[p]) >= start) {
        throw UsageError(std::string(what) + " is not adapted: a letter on atom " +
                         std::to_string(m.atom_of_basis(w[p]) + 1) + " is not before " + I.a.get_str());
      }
    }
  }
}

void check_disjoint(const std::vector<Interval>& pieces) {
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (pieces[i].b <= pieces[i].a) throw UsageError("empty process interval");
    for (std::size_t j = i + 1; j < pieces.size(); ++j) {
      if (sgn(overlap(pieces[i], pieces[j])) != 0) throw UsageError("process intervals overlap");
    }
  }
}

class StDiscreteNode : public FockOperator::Node {
 public:
  StDiscreteNode(const ProcessModel& m, SetPartition pi, const mpq_class& t) : pi_(std::move(pi)), t_(t) {
    for (int a : m.grid().atoms_in(from_zero(t))) {
      atoms_.push_back(a);
      fields_.push_back(m.X(m.grid().atom(a)));
    }
    model_ = std::make_shared<ProcessModel>(m);
  }

  FockVector apply(const FockSpace& s, const FockVector& v) const override {
    const std::size_t nb = pi_.size();
    std::vector<std::pair<std::vector<int>, FockVector>> states{{std::vector<int>(nb, -1), v}};
    for (int pos = pi_.n(); pos >= 1; --pos) {
      const int b = pi_.block_of(pos);
      std::vector<std::pair<std::vector<int>, FockVector>> next;
      for (auto& [assign, vec] : states) {
        if (assign[b] >= 0) {
          FockVector w = fields_[assign[b]].apply(s, vec);
          if (!w.is_zero()) next.emplace_back(assign, std::move(w));
          continue;
        }
        for (std::size_t a = 0; a < atoms_.size(); ++a) {
          if (std::find(assign.begin(), assign.end(), static_cast<int>(a)) != assign.end()) continue;
          FockVector w = fields_[a].apply(s, vec);
          if (w.is_zero()) continue;
          std::vector<int> na = assign;
          na[b] = static_cast<int>(a);
          next.emplace_back(std::move(na), std::move(w));
        }
      }
      states = std::move(next);
    }
    FockVector out;
    for (const auto& st : states) out += st.second;
    return out;
  }
  int raise() const override { return pi_.n(); }
  int lower() const override { return pi_.n(); }
  // St_pi^* is St of the mirrored partition.
  FockOperator adjoint(const FockSpace&) const override {
    const int n = pi_.n();
    std::vector<std::vector<int>> blocks;
    for (const auto& b : pi_.blocks()) {
      std::vector<int> nbk;
      for (int x : b) nbk.push_back(n + 1 - x);
      std::sort(nbk.begin(), nbk.end());
      blocks.push_back(nbk);
    }
    return FockOperator(std::make_shared<StDiscreteNode>(*model_, SetPartition(n, blocks), t_));
  }

 private:
  SetPartition pi_;
  mpq_class t_;
  std::vector<int> atoms_;
  std::vector<FockOperator> fields_;
  std::shared_ptr<const ProcessModel> model_;
};

// x^m = sum_j B[m][j] P_j for m < K.
std::vector<std::vector<mpq_class>> monomials_in_op_basis(const MomentSequence& r, int K) {
  std::vector<std::vector<mpq_class>> B(K);
  for (int m = 0; m < K; ++m) {
    auto c = r.monic_orthogonal(m);
    B[m].assign(m + 1, mpq_class(0));
    B[m][m] = 1;
    for (int j = 0; j < m; ++j) {
      if (sgn(c[j]) == 0) continue;
      for (int i = 0; i <= j; ++i) B[m][i] -= c[j] * B[j][i];
    }
    for (auto& x : B[m]) x.canonicalize();
  }
  return B;
}

const BodyAlgebra& body_algebra(const ProcessModel& m, const char* what) {
  if (m.kind() != ProcessModel::Kind::Body) throw UsageError(std::string(what) + " needs a body model");
  return static_cast<const BodyAlgebra&>(m.algebra());
}

}  // namespace

StepFunction::StepFunction(int arity) : n_(arity) {
  if (arity < 0) throw UsageError("negative arity");
}

StepFunction StepFunction::indicator(const TimeGrid& grid, const std::vector<Interval>& rect) {
  StepFunction F(static_cast<int>(rect.size()));
  std::vector<std::vector<int>> atoms;
  for (const auto& I : rect) atoms.push_back(grid.atoms_in(I));
  std::vector<int> tuple(rect.size());
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == rect.size()) {
      F.add(tuple, QScalar(1));
      return;
    }
    for (int a : atoms[i]) {
      tuple[i] = a;
      rec(i + 1);
    }
  };
  rec(0);
  return F;
}

void StepFunction::add(const std::vector<int>& atoms, const QScalar& c) {
  if (static_cast<int>(atoms.size()) != n_) throw UsageError("step function tuple has the wrong arity");
  auto it = values_.find(atoms);
  if (it == values_.end()) {
    if (!c.is_zero()) values_.emplace(atoms, c);
    return;
  }
  it->second += c;
  if (it->second.is_zero()) values_.erase(it);
}

QScalar StepFunction::value(const std::vector<int>& atoms) const {
  auto it = values_.find(atoms);
  return it == values_.end() ? QScalar() : it->second;
}

bool StepFunction::off_diagonal() const {
  for (const auto& [u, c] : values_) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (std::size_t j = i + 1; j < u.size(); ++j) {
        if (u[i] == u[j]) return false;
      }
    }
  }
  return true;
}

QScalar l2q_inner(const StepFunction& F, const StepFunction& G, const TimeGrid& grid) {
  if (F.arity() != G.arity()) throw UsageError("l2q_inner of step functions with different arity");
  const int n = F.arity();
  const auto perms = permutations(n);
  QScalar total;
  std::vector<int> v(n);
  for (const auto& [u, fu] : F.values()) {
    mpq_class width = 1;
    for (int a : u) width *= grid.width(a);
    for (const auto& [sigma, inv] : perms) {
      for (int i = 0; i < n; ++i) v[sigma[i] - 1] = u[i];
      QScalar g = G.value(v);
      if (g.is_zero()) continue;
      total += (fu * g * QScalar(width)).times_q_power(inv);
    }
  }
  return total;
}

std::string ProcessRef::label() const {
  switch (kind) {
    case Kind::X:
      return "X";
    case Kind::Y:
      return "Y" + std::to_string(k);
    case Kind::Delta:
      return "Delta" + std::to_string(k);
    case Kind::Yhat:
      return "Yhat" + std::to_string(k);
  }
  return "?";
}

FockOperator process_operator(const ProcessModel& m, const ProcessRef& p, const Interval& I) {
  switch (p.kind) {
    case ProcessRef::Kind::X:
      return m.X(I);
    case ProcessRef::Kind::Y:
      return m.Y(I, p.k);
    case ProcessRef::Kind::Delta:
      return m.Delta(I, p.k);
    case ProcessRef::Kind::Yhat:
      return m.Yhat(I, p.k);
  }
  throw UsageError("unknown process");
}

OneParticleVector process_vector(const ProcessModel& m, const ProcessRef& p, const Interval& I) {
  if (p.kind == ProcessRef::Kind::Yhat) return m.yhat_vector(I, p.k);
  return m.interval_vector(I, p.kind == ProcessRef::Kind::X ? 1 : p.k);
}

QScalar process_drift(const ProcessModel& m, const ProcessRef& p, const Interval& I) {
  switch (p.kind) {
    case ProcessRef::Kind::X:
      return QScalar(I.length() * m.moments().r(1));
    case ProcessRef::Kind::Delta:
      return QScalar(I.length() * m.moments().r(p.k));
    default:
      return QScalar();
  }
}

FockOperator multiple_integral(const ProcessModel& m, const StepFunction& F, const std::vector<ProcessRef>& procs) {
  if (static_cast<int>(procs.size()) != F.arity()) throw UsageError("one process per argument of F is required");
  if (!F.off_diagonal()) throw UsageError("multiple integral of a step function with diagonal support");
  std::vector<std::map<int, FockOperator>> cache(procs.size());
  auto op = [&](std::size_t i, int a) -> const FockOperator& {
    auto it = cache[i].find(a);
    if (it == cache[i].end()) it = cache[i].emplace(a, process_operator(m, procs[i], m.grid().atom(a))).first;
    return it->second;
  };
  FockOperator total = FockOperator::zero();
  for (const auto& [u, c] : F.values()) {
    FockOperator term = FockOperator::identity();
    for (std::size_t i = 0; i < u.size(); ++i) term = term * op(i, u[i]);
    total = total + m.mode().embed(c) * term;
  }
  return total;
}

FockOperator full_measure(const ProcessModel& m, const std::vector<ProcessRef>& procs, const mpq_class& t) {
  const int k = static_cast<int>(procs.size());
  const Interval I = from_zero(t);
  std::vector<OneParticleVector> vecs;
  std::vector<QScalar> drift;
  for (const auto& p : procs) {
    vecs.push_back(process_vector(m, p, I));
    drift.push_back(process_drift(m, p, I));
  }
  FockVector element;
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    QScalar c(1);
    std::vector<OneParticleVector> word;
    for (int j = 0; j < k; ++j) {
      if ((mask >> j) & 1u) {
        word.push_back(vecs[j]);
      } else {
        c *= drift[j];
      }
    }
    if (c.is_zero()) continue;
    element.axpy(c, FockVector::tensor(word));
  }
  return wick_of(m, element);
}

FockOperator psi_n(const ProcessModel& m, int n, const mpq_class& t) {
  return full_measure(m, std::vector<ProcessRef>(n, ProcessRef::x()), t);
}

FockOperator st_pi_discrete(const ProcessModel& m, const SetPartition& pi, const mpq_class& t) {
  if (pi.n() > m.fock_depth()) {
    throw DepthExceeded("St_pi on " + std::to_string(pi.n()) + " points exceeds Fock depth " +
                        std::to_string(m.fock_depth()));
  }
  return FockOperator(std::make_shared<StDiscreteNode>(m, pi, t));
}

FockOperator st_pi_closed(const ProcessModel& m, const SetPartition& pi, const mpq_class& t) {
  const std::size_t nb = pi.size();
  const Interval I = from_zero(t);
  for (const auto& b : pi.blocks()) {
    if (m.kind() == ProcessModel::Kind::Body && static_cast<int>(b.size()) > m.degree_cutoff()) {
      throw CutoffExceeded("block of size " + std::to_string(b.size()) + " exceeds degree cutoff " +
                           std::to_string(m.degree_cutoff()));
    }
  }
  FockVector element;
  for (unsigned mask = 0; mask < (1u << nb); ++mask) {
    std::vector<bool> open(nb);
    mpq_class scalar = 1;
    std::vector<OneParticleVector> word;
    for (std::size_t b = 0; b < nb; ++b) {
      const int size = static_cast<int>(pi.block(b).size());
      open[b] = (mask >> b) & 1u;
      if (open[b]) {
        word.push_back(m.interval_vector(I, size));
      } else {
        scalar *= t * m.moments().r(size);
      }
    }
    if (sgn(scalar) == 0) continue;
    const unsigned k = rc(ExtendedPartition(pi, open));
    element.axpy(m.mode().embed(QScalar(scalar)).times_q_power(k), FockVector::tensor(word));
  }
  return wick_of(m, element);
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return 0;
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return den == 0 ? 0 : num / den;
}

ConvergenceTable st_pi_convergence(const ProcessModel& base, const SetPartition& pi, const mpq_class& t,
                                   const std::vector<int>& schedule) {
  if (base.mode().exact) throw UsageError("convergence experiments run in float mode");
  auto run = [&](int N) {
    const TimeGrid grid = TimeGrid::uniform(t, N);
    ProcessModel m = [&] {
      if (base.kind() == ProcessModel::Kind::Body) {
        return ProcessModel(base.mode(), base.moments(), grid, base.degree_cutoff(), base.fock_depth());
      }
      const auto& alg = static_cast<const AppendixAlgebra&>(base.algebra());
      return ProcessModel::appendix(base.mode(), alg.points(), alg.weights(), grid, base.fock_depth());
    }();
    const FockVector omega = vacuum_of(m);
    const FockVector d = st_pi_discrete(m, pi, t).apply(m.space(), omega);
    const FockVector c = st_pi_closed(m, pi, t).apply(m.space(), omega);
    const double e2 = m.space().normq2(d - c).to_double(m.mode().q0);
    ConvergenceRow row;
    row.N = N;
    row.delta = mpq_class(t / N).get_d();
    row.error = std::sqrt(std::max(0.0, e2));
    return row;
  };
  std::vector<std::future<ConvergenceRow>> jobs;
  for (int N : schedule) jobs.push_back(std::async(std::launch::async, run, N));
  ConvergenceTable out;
  std::vector<double> lx, ly, ly2;
  for (auto& j : jobs) {
    ConvergenceRow r = j.get();
    out.rows.push_back(r);
    if (r.error > 1e-14) {
      lx.push_back(std::log(r.delta));
      ly.push_back(std::log(r.error));
      ly2.push_back(2 * std::log(r.error));
    }
  }
  out.all_exact = lx.empty();
  out.slope = fit_slope(lx, ly);
  out.slope_squared = fit_slope(lx, ly2);
  return out;
}

QScalar residual2(const FockSpace& s, const FockVector& a, const FockVector& b) { return s.normq2(a - b); }

IdentityReport power_decomposition(const ProcessModel& m, int n, const mpq_class& t) {
  if (n > 6) throw ResourceError("power decomposition is limited to n <= 6");
  const FockSpace& s = m.space();
  FockVector lhs = vacuum_of(m);
  const FockOperator x = m.X(from_zero(t));
  for (int i = 0; i < n; ++i) lhs = x.apply(s, lhs);
  FockVector rhs;
  const FockVector omega = vacuum_of(m);
  for_each_partition(n, [&](const SetPartition& pi) { rhs += st_pi_closed(m, pi, t).apply(s, omega); });
  IdentityReport r{"power_decomposition", n, false, residual2(s, lhs, rhs)};
  r.exact_zero = r.residual.is_zero();
  return r;
}

IdentityReport yhat_chaos_identity(const ProcessModel& m, const StepFunction& F, const std::vector<int>& ks) {
  std::vector<ProcessRef> procs;
  for (int k : ks) procs.push_back(ProcessRef::yhat(k));
  const FockVector omega = vacuum_of(m);
  FockVector element;
  for (const auto& [u, c] : F.values()) {
    std::vector<OneParticleVector> word;
    for (std::size_t i = 0; i < u.size(); ++i) word.push_back(m.yhat_vector(m.grid().atom(u[i]), ks[i]));
    element.axpy(m.mode().embed(c), FockVector::tensor(word));
  }
  const FockVector lhs = wick_of(m, element).apply(m.space(), omega);
  const FockVector rhs = multiple_integral(m, F, procs).apply(m.space(), omega);
  IdentityReport r{"wick_yhat_chaos", F.arity(), false, residual2(m.space(), lhs, rhs)};
  r.exact_zero = r.residual.is_zero();
  return r;
}

mpq_class yhat_norm2(const ProcessModel& m, int k) { return m.moments().monic_norm2(k - 1); }

ChaosDecomposition chaos_decompose(const ProcessModel& m, const FockVector& v) {
  const BodyAlgebra& alg = body_algebra(m, "chaos decomposition");
  int maxk = 0;
  for (const auto& [w, c] : v.terms()) {
    for (int p = 0; p < w.size(); ++p) maxk = std::max(maxk, alg.power_of(w[p]));
  }
  const auto B = monomials_in_op_basis(m.moments(), maxk);
  ChaosDecomposition out;
  for (const auto& [w, c] : v.sorted_terms()) {
    const int n = w.size();
    std::vector<int> atoms(n), u(n);
    for (int p = 0; p < n; ++p) atoms[p] = alg.atom_of(w[p]);
    std::function<void(int, QScalar)> rec = [&](int p, QScalar coef) {
      if (p == n) {
        auto it = out.find(u);
        if (it == out.end()) it = out.emplace(u, StepFunction(n)).first;
        it->second.add(atoms, coef);
        return;
      }
      const auto& row = B[alg.power_of(w[p]) - 1];
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (sgn(row[j]) == 0) continue;
        u[p] = static_cast<int>(j) + 1;
        rec(p + 1, coef * QScalar(row[j]));
      }
    };
    rec(0, c);
  }
  for (auto it = out.begin(); it != out.end();) it = it->second.is_zero() ? out.erase(it) : std::next(it);
  return out;
}

FockVector chaos_assemble(const ProcessModel& m, const ChaosDecomposition& d) {
  FockVector out;
  for (const auto& [u, F] : d) {
    for (const auto& [a, c] : F.values()) {
      std::vector<OneParticleVector> word;
      for (std::size_t i = 0; i < a.size(); ++i) word.push_back(m.yhat_vector(m.grid().atom(a[i]), u[i]));
      out.axpy(c, FockVector::tensor(word));
    }
  }
  return out;
}

QScalar chaos_norm2(const ProcessModel& m, const ChaosDecomposition& d) {
  QScalar total = m.mode().embed(QScalar());
  std::map<int, std::vector<std::pair<std::vector<int>, unsigned>>> perms;
  for (const auto& [u, F] : d) {
    const int n = static_cast<int>(u.size());
    if (!perms.count(n)) perms[n] = permutations(n);
    mpq_class h = 1;
    for (int k : u) h *= yhat_norm2(m, k);
    std::vector<int> u2(n), a2(n);
    for (const auto& [a, c] : F.values()) {
      mpq_class width = h;
      for (int x : a) width *= m.grid().width(x);
      for (const auto& [sigma, inv] : perms[n]) {
        for (int i = 0; i < n; ++i) {
          u2[sigma[i] - 1] = u[i];
          a2[sigma[i] - 1] = a[i];
        }
        auto it = d.find(u2);
        if (it == d.end()) continue;
        QScalar g = it->second.value(a2);
        if (g.is_zero()) continue;
        total += m.mode().embed(c * g * QScalar(width)).times_q_power(inv);
      }
    }
  }
  return total;
}

QScalar chaos_norm2_orthogonal_sum(const ProcessModel& m, const ChaosDecomposition& d) {
  QScalar total = m.mode().embed(QScalar());
  for (const auto& [u, F] : d) {
    mpq_class h = 1;
    for (int k : u) h *= yhat_norm2(m, k);
    total += m.mode().embed(l2q_inner(F, F, m.grid())) * QScalar(h);
  }
  return total;
}

void check_adapted(const ProcessModel& m, const AdaptedProcess& U) {
  std::vector<Interval> pieces;
  for (const auto& [I, u] : U.pieces) {
    check_piece(m, I, u, "process value");
    pieces.push_back(I);
  }
  check_disjoint(pieces);
}

FockOperator ito_integral(const ProcessModel& m, const AdaptedProcess& U, Side side) {
  check_adapted(m, U);
  FockOperator total = FockOperator::zero();
  for (const auto& [I, u] : U.pieces) {
    const FockOperator w = wick_of(m, u);
    total = total + (side == Side::Left ? w * m.X(I) : m.X(I) * w);
  }
  return total;
}

QScalar process_inner(const ProcessModel& m, const AdaptedProcess& U, const AdaptedProcess& V) {
  QScalar total = m.mode().embed(QScalar());
  for (const auto& [I, u] : U.pieces) {
    for (const auto& [J, v] : V.pieces) {
      const mpq_class len = overlap(I, J);
      if (sgn(len) == 0) continue;
      total += m.space().innerq(u, v) * QScalar(len);
    }
  }
  return total;
}

FockOperator two_sided_integral(const ProcessModel& m, const AdaptedProcess& U) {
  check_adapted(m, U);
  FockOperator total = FockOperator::zero();
  for (const auto& [I, u] : U.pieces) total = total + m.Delta(I, 2) * wick_of(m, m.space().gamma_q(u));
  return total;
}

FockOperator two_sided_discrete(const ProcessModel& m, const AdaptedProcess& U) {
  check_adapted(m, U);
  FockOperator total = FockOperator::zero();
  for (const auto& [I, u] : U.pieces) {
    const FockOperator w = wick_of(m, u);
    for (int a : m.grid().atoms_in(I)) {
      const FockOperator x = m.X(m.grid().atom(a));
      total = total + x * w * x;
    }
  }
  return total;
}

FockVector project_before(const ProcessModel& m, const FockVector& v, const mpq_class& t) {
  const int end = m.grid().boundary_index(t);
  return m.space().project(v, [&](int i) { return m.atom_of_basis(i) < end; });
}

FockVector conditional_expectation(const ProcessModel& m, const FockVector& v, const mpq_class& t) {
  return project_before(m, v, t);
}

FockOperator biprocess_integral(const ProcessModel& m, const BiProcess& U) {
  if (U.terms.size() != U.pieces.size()) throw UsageError("bi-process needs one term list per piece");
  check_disjoint(U.pieces);
  FockOperator total = FockOperator::zero();
  for (std::size_t j = 0; j < U.pieces.size(); ++j) {
    const FockOperator x = m.X(U.pieces[j]);
    for (const auto& [A, B] : U.terms[j]) {
      check_piece(m, U.pieces[j], A, "bi-process left factor");
      check_piece(m, U.pieces[j], B, "bi-process right factor");
      total = total + wick_of(m, A) * x * wick_of(m, B);
    }
  }
  return total;
}

QScalar biprocess_inner(const ProcessModel& m, const BiProcess& U, const BiProcess& V) {
  if (U.terms.size() != U.pieces.size() || V.terms.size() != V.pieces.size()) {
    throw UsageError("bi-process needs one term list per piece");
  }
  if (U.pieces.size() != V.pieces.size()) throw UsageError("bi-processes on different decompositions");
  for (std::size_t j = 0; j < U.pieces.size(); ++j) {
    if (U.pieces[j].a != V.pieces[j].a || U.pieces[j].b != V.pieces[j].b) {
      throw UsageError("bi-processes on different decompositions");
    }
  }
  const FockSpace& s = m.space();
  QScalar total = m.mode().embed(QScalar());
  for (std::size_t j = 0; j < U.pieces.size(); ++j) {
    const QScalar len(U.pieces[j].length());
    for (const auto& [A1, B1] : U.terms[j]) {
      for (const auto& [A2, B2] : V.terms[j]) {
        // Gamma_q(q)(A1^* A2) is the Wick operator of gamma_q((A1^* A2) Omega).
        const FockVector z = s.gamma_q(wick_of(m, A1.reversed()).apply(s, A2));
        total += s.innerq(B1, wick_of(m, z).apply(s, B2)) * len;
      }
    }
  }
  return total;
}

std::pair<QScalar, QScalar> traciality_witness(const ProcessModel& m0, const Interval& I, const Interval& J, int k) {
  if (sgn(overlap(I, J)) != 0) throw UsageError("traciality witness needs disjoint intervals");
  const ProcessModel m = m0.fock_depth() >= 5 ? m0 : m0.with_depth(5);
  const FockSpace& s = m.space();
  const FockOperator xi = m.X(I), xj = m.X(J), yk = m.Y(I, k);
  auto phi = [&](const std::vector<const FockOperator*>& ops) {
    FockVector v = vacuum_of(m);
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) v = (*it)->apply(s, v);
    return s.vacuum_coeff(v);
  };
  return {phi({&xi, &xj, &xi, &xj, &yk}), phi({&yk, &xi, &xj, &xi, &xj})};
}

FockVector substitute_q(const FockVector& v, const mpq_class& q0) {
  FockVector out;
  for (const auto& [w, c] : v.terms()) out.add(w, QScalar(c.substitute(q0)));
  return out;
}

}  // namespace qfock
