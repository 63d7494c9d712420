#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qfock/model.hpp"
#include "support.hpp"

using namespace qfock;
using testsupport::Rng;

namespace {

mpq_class Q(long n, long d = 1) {
  mpq_class x(n, d);
  x.canonicalize();
  return x;
}

Interval iv(mpq_class a, mpq_class b) { return {std::move(a), std::move(b)}; }

QScalar phi(const ProcessModel& m, const FockOperator& op) {
  return m.space().vacuum_coeff(op.apply(m.space(), FockVector::vacuum()));
}

// nu = 1/2 delta_0 + 1/4 delta_1 + 1/4 delta_{-1}.
std::vector<std::pair<mpq_class, mpq_class>> three_point() {
  return {{Q(0), Q(1, 2)}, {Q(1), Q(1, 4)}, {Q(-1), Q(1, 4)}};
}

ProcessModel generic_body(int N = 4, int depth = 5, int cutoff = 4) {
  // r = 0, 1, 1/2, 3/2, ...: moments of a generic positive measure.
  auto r = MomentSequence::from_atoms({{Q(-1), Q(1, 3)}, {Q(1, 2), Q(1, 3)}, {Q(2), Q(1, 3)}}, 2 * cutoff + 2);
  return ProcessModel(QMode::formal(), r, TimeGrid::uniform(2, N), cutoff, depth);
}

}  // namespace

TEST_CASE("moment sequences") {
  auto g = MomentSequence::gaussian(6);
  CHECK(g.r(2) == 1);
  CHECK(g.r(4) == 0);
  auto p = MomentSequence::poisson(5);
  CHECK(p.r(1) == 0);
  CHECK(p.r(5) == 1);
  auto a = MomentSequence::from_atoms(three_point(), 8);
  CHECK(a.r(1) == 0);
  CHECK(a.r(2) == 1);
  CHECK(a.r(3) == 0);
  CHECK(a.r(4) == Q(1, 2));
  CHECK(a.r(8) == Q(1, 2));
  CHECK_THROWS_AS(a.r(9), UsageError);
  CHECK_THROWS_AS(a.r(0), UsageError);
  CHECK(a.hankel_psd(2));
  CHECK_FALSE(MomentSequence::explicit_moments({0, 1, 0, -1, 0, 1}).hankel_psd(1));
  CHECK(a.scaled(Q(3)).r(4) == Q(3, 2));
}

TEST_CASE("monic orthogonal polynomials") {
  auto a = MomentSequence::from_atoms(three_point(), 12);
  CHECK(a.monic_orthogonal(0) == std::vector<mpq_class>{1});
  // Hand solve: P_2 = x^2 - 1/2, P_3 = x^3 - x on the three points.
  CHECK(a.monic_orthogonal(2) == std::vector<mpq_class>{Q(-1, 2), 0, 1});
  CHECK(a.monic_orthogonal(3) == std::vector<mpq_class>{0, -1, 0, 1});
  CHECK(a.monic_norm2(2) == Q(1, 4));
  try {
    a.monic_orthogonal(4);
    FAIL("expected a degeneracy error");
  } catch (const DegeneracyError& e) {
    CHECK(std::string(e.what()).find("order 4") != std::string::npos);
  }
  // P_1 = x - r_3/r_2 for any nondegenerate sequence.
  auto r = MomentSequence::explicit_moments({0, 3, 5, 17, 40});
  CHECK(r.monic_orthogonal(1) == std::vector<mpq_class>{Q(-5, 3), 1});
  // Monic polynomials do not move under nu -> t nu.
  CHECK(r.scaled(Q(7, 2)).monic_orthogonal(1) == r.monic_orthogonal(1));
}

TEST_CASE("time grids") {
  auto g = TimeGrid::uniform(Q(3, 2), 3);
  CHECK(g.size() == 3);
  CHECK(g.width(1) == Q(1, 2));
  CHECK(g.mesh() == Q(1, 2));
  CHECK(g.atoms_in(iv(Q(1, 2), Q(3, 2))) == std::vector<int>{1, 2});
  CHECK(g.atoms_in(iv(Q(1, 2), Q(1, 2))).empty());
  CHECK_THROWS_AS(g.atoms_in(iv(Q(1, 3), Q(1))), UsageError);
  CHECK_THROWS_AS(TimeGrid({Q(1), Q(2)}), UsageError);
  CHECK_THROWS_AS(TimeGrid({Q(0), Q(2), Q(2)}), UsageError);
  TimeGrid h({Q(0), Q(1, 3), Q(1)});
  CHECK(h.mesh() == Q(2, 3));
}

TEST_CASE("body letters") {
  auto r = MomentSequence::from_atoms(three_point(), 8);
  ProcessModel m(QMode::formal(), r, TimeGrid::uniform(2, 4), 3, 4);
  const auto& alg = static_cast<const BodyAlgebra&>(m.algebra());
  auto A = iv(Q(0), Q(1, 2));
  Letter l = m.letter_of_interval_power(A, 1);
  CHECK(l.xi == OneParticleVector::basis(alg.index(0, 1)));
  CHECK(l.gauge.column(alg.index(0, 1)) == OneParticleVector::basis(alg.index(0, 2)));
  CHECK(l.gauge.column(alg.index(1, 1)).is_zero());
  CHECK(l.gauge.is_poisoned(alg.index(0, 3)));
  CHECK_THROWS_AS(l.gauge.column(alg.index(0, 3)), CutoffExceeded);
  CHECK(l.mean.is_zero());

  auto I = iv(Q(0), Q(3, 2));
  auto J = iv(Q(1), Q(2));
  CHECK(alg.pair(m.interval_vector(I, 1), m.interval_vector(J, 1)) == QScalar(Q(1, 2) * r.r(2)));
  CHECK(alg.pair(m.interval_vector(I, 1), m.interval_vector(I, 1)) == QScalar(Q(3, 2) * r.r(2)));
  auto e = [&](int a, int k) { return OneParticleVector::basis(alg.index(a, k)); };
  CHECK(alg.pair(e(0, 1), e(1, 1)).is_zero());
  CHECK(alg.pair(e(2, 1), e(2, 1)) == QScalar(Q(1, 2) * r.r(2)));
  CHECK(alg.product(e(0, 1), e(0, 1)) == e(0, 2));
  CHECK(alg.product(e(0, 1), e(0, 2)) == e(0, 3));
  CHECK(alg.product(e(0, 1), e(1, 2)).is_zero());
  CHECK_THROWS_AS(alg.product(e(0, 2), e(0, 2)), CutoffExceeded);
  CHECK(alg.product(m.interval_vector(I, 1), m.interval_vector(J, 1)) == m.interval_vector(iv(Q(1), Q(3, 2)), 2));

  CHECK_THROWS_AS(m.interval_vector(I, 4), UsageError);
  CHECK_THROWS_AS(m.interval_vector(iv(Q(0), Q(1, 3)), 1), UsageError);
  CHECK_THROWS_AS(ProcessModel(QMode::formal(), r, TimeGrid::uniform(1, 1), 5, 3), UsageError);
}

TEST_CASE("gram reproduces the moment functional on interval words") {
  auto r = MomentSequence::from_atoms(three_point(), 12);
  ProcessModel m(QMode::formal(), r, TimeGrid::uniform(3, 6), 6, 2);
  const auto& alg = m.algebra();
  Rng rng(11);
  for (int t = 0; t < 60; ++t) {
    int n = testsupport::small_int(rng, 2, 6);
    std::vector<Interval> ivs;
    mpq_class lo = 0;
    mpq_class hi = 3;
    for (int i = 0; i < n; ++i) {
      int a = testsupport::small_int(rng, 0, 5);
      int b = testsupport::small_int(rng, a, 6);
      ivs.push_back(iv(Q(a, 2), Q(b, 2)));
      lo = std::max(lo, Q(a, 2));
      hi = std::min(hi, Q(b, 2));
    }
    OneParticleVector prod = m.interval_vector(ivs[0], 1);
    for (int i = 1; i + 1 < n; ++i) prod = alg.product(prod, m.interval_vector(ivs[i], 1));
    mpq_class cap = hi > lo ? mpq_class(hi - lo) : mpq_class(0);
    CHECK(alg.pair(prod, m.interval_vector(ivs[n - 1], 1)) == QScalar(cap * r.r(n)));
  }
}

TEST_CASE("letter algebra associativity") {
  auto m = generic_body(3, 2, 6);
  const auto& alg = m.algebra();
  Rng rng(5);
  auto random_low = [&]() {
    OneParticleVector v;
    for (int a = 0; a < 3; ++a)
      for (int k = 1; k <= 2; ++k) v.add(static_cast<const BodyAlgebra&>(alg).index(a, k), QScalar(testsupport::small_rational(rng)));
    return v;
  };
  for (int t = 0; t < 25; ++t) {
    auto a = random_low();
    auto b = random_low();
    auto c = random_low();
    CHECK(alg.product(alg.product(a, b), c) == alg.product(a, alg.product(b, c)));
    CHECK(alg.product(a, b) == alg.product(b, a));
    // T_a is symmetric for the gram.
    auto ta = alg.multiplication(a);
    CHECK(alg.pair(ta.apply(b), c) == alg.pair(b, ta.apply(c)));
  }
}

TEST_CASE("appendix algebra") {
  AppendixAlgebra two({Q(0), Q(1)}, {Q(1, 2), Q(1, 2)});
  OneParticleVector f = OneParticleVector::basis(1);
  CHECK(two.mean(f) == QScalar(Q(1, 2)));
  CHECK(two.pair(f, f) == QScalar(Q(1, 2)));
  OneParticleVector one = OneParticleVector::basis(0) + OneParticleVector::basis(1);
  CHECK(two.mean(one) == QScalar(1));
  CHECK(two.product(one, one) == one);
  OneParticleVector a = OneParticleVector::basis(0);
  CHECK(two.product(a, f).is_zero());
  CHECK(two.mean(two.product(a, f)).is_zero());

  AppendixAlgebra single({Q(3)}, {Q(1)});
  auto x = OneParticleVector::basis(0, QScalar(3));
  auto y = OneParticleVector::basis(0, QScalar(5));
  CHECK(single.pair(x, y) == QScalar(15));
  CHECK(single.product(x, y) == OneParticleVector::basis(0, QScalar(15)));

  CHECK_THROWS_AS(AppendixAlgebra({Q(0), Q(1)}, {Q(1), Q(0)}), UsageError);
  CHECK_THROWS_AS(AppendixAlgebra({Q(0), Q(1)}, {Q(1, 2), Q(1, 3)}), UsageError);
  CHECK_THROWS_AS(AppendixAlgebra({Q(0)}, {Q(-1)}), UsageError);
}

TEST_CASE("process operators: vacuum moments") {
  auto m = generic_body(4, 5, 6);
  const auto& r = m.moments();
  auto I = iv(Q(1, 2), Q(2));
  mpq_class len = I.length();
  CHECK(phi(m, m.X(I) * m.X(I)) == QScalar(len * r.r(2)));
  for (int k = 1; k <= 3; ++k) {
    for (int j = 1; j <= 3; ++j) {
      CHECK(phi(m, m.Y(I, k) * m.Y(I, j)) == QScalar(len * r.r(k + j)));
    }
    CHECK(phi(m, m.Delta(I, k)) == QScalar(len * r.r(k)));
  }
  CHECK(phi(m, m.X(I)).is_zero());
}

TEST_CASE("diagonal measure as a refinement limit") {
  // sum_i phi[X(I_i)^4] = t r_4 + (2 + q) t^2 r_2^2 / N: one block plus the three pairings.
  auto r = MomentSequence::from_atoms(three_point(), 8);
  mpq_class t = 2;
  QScalar q = QScalar::q();
  for (int N : {1, 2, 4, 8}) {
    ProcessModel m(QMode::formal(), r, TimeGrid::uniform(t, N), 4, 4);
    QScalar s3;
    QScalar s4;
    for (int i = 0; i < N; ++i) {
      auto x = m.X(m.grid().atom(i));
      s3 += phi(m, x * x * x);
      s4 += phi(m, x * x * x * x);
    }
    CHECK(s3 == QScalar(t * r.r(3)));
    mpq_class c = t * t * r.r(2) * r.r(2) / N;
    c.canonicalize();
    CHECK(s4 - QScalar(t * r.r(4)) == (QScalar(2) + q) * QScalar(c));
    CHECK(phi(m, m.Delta(m.whole(), 4)) == QScalar(t * r.r(4)));
  }
}

TEST_CASE("orthogonalized processes") {
  // Y_4 Y_4 reaches power 8 through the gauge.
  auto r = MomentSequence::from_atoms(three_point(), 16);
  ProcessModel m(QMode::formal(), r, TimeGrid::uniform(1, 2), 8, 4);
  auto I = iv(Q(0), Q(1));
  CHECK(m.yhat_vector(I, 1) == m.interval_vector(I, 1));
  auto y3 = m.yhat_vector(I, 3);
  CHECK(y3 == m.interval_vector(I, 3) + QScalar(Q(-1, 2)) * m.interval_vector(I, 1));
  for (int k = 1; k <= 4; ++k)
    for (int j = 1; j <= 4; ++j) {
      QScalar v = phi(m, m.Yhat(I, k) * m.Yhat(I, j));
      if (k != j) {
        CHECK(v.is_zero());
      } else {
        CHECK(v == QScalar(I.length() * r.monic_norm2(k - 1)));
      }
    }
  ProcessModel deg(QMode::formal(), r, TimeGrid::uniform(1, 1), 5, 3);
  CHECK_THROWS_AS(deg.Yhat(I, 5), DegeneracyError);
}

TEST_CASE("field operators are symmetric") {
  auto m = generic_body(2, 4, 3);
  Rng rng(17);
  auto I = iv(Q(0), Q(1));
  const auto& alg = static_cast<const BodyAlgebra&>(m.algebra());
  // Words over power-1 letters keep every gauge action under the cutoff.
  auto low = [&](const FockVector& x) {
    FockVector out;
    for (const auto& [w, c] : x.terms()) {
      std::vector<int> idx;
      for (int i : w.to_vector()) idx.push_back(alg.index(alg.atom_of(i), 1));
      out.add(Word(idx), c);
    }
    return out;
  };
  for (int t = 0; t < 4; ++t) {
    auto u = low(testsupport::random_fock_vector(rng, m.space().dim(), 2, 3));
    auto v = low(testsupport::random_fock_vector(rng, m.space().dim(), 2, 3));
    for (auto op : {m.X(I), m.Y(I, 2), m.Delta(m.whole(), 2)}) {
      CHECK(m.space().innerq(op.apply(m.space(), u), v) == m.space().innerq(u, op.apply(m.space(), v)));
    }
    auto xs = m.X(I).adjoint(m.space());
    CHECK(xs.apply(m.space(), u) == m.X(I).apply(m.space(), u));
  }
}

TEST_CASE("appendix model operators") {
  auto m = ProcessModel::appendix(QMode::formal(), {Q(0), Q(1), Q(2)}, {Q(1, 4), Q(1, 4), Q(1, 2)},
                                  TimeGrid::uniform(1, 2), 4);
  auto I = iv(Q(0), Q(1, 2));
  // r_k = E[x^k].
  CHECK(m.moments().r(1) == Q(5, 4));
  CHECK(m.moments().r(2) == Q(9, 4));
  CHECK(phi(m, m.X(I)) == QScalar(Q(5, 8)));
  CHECK(phi(m, m.Y(I, 1)).is_zero());
  // Compound Poisson: second moment |I| r_2 + |I|^2 r_1^2.
  CHECK(phi(m, m.X(I) * m.X(I)) == QScalar(Q(9, 8) + Q(25, 64)));
}

TEST_CASE("configuration") {
  auto cfg = parse_config(
      "# q-Gaussian on a grid\n"
      "q = exact\n"
      "moments = [0, 1, 0, 0, 0, 0, 0, 0]\n"
      "grid = uniform(1, 4)\n"
      "degree_cutoff = 3\n"
      "fock_depth = 5\n");
  auto m = ProcessModel::from_config(cfg);
  CHECK(m.kind() == ProcessModel::Kind::Body);
  CHECK(m.mode().exact);
  CHECK(m.grid().size() == 4);
  CHECK(m.degree_cutoff() == 3);
  CHECK(m.fock_depth() == 5);

  auto f = ProcessModel::from_config(parse_config("q = 0.3\nnu.atoms = [(1, 1)]\ngrid = [0, 1/2, 1]\ndegree_cutoff=2"));
  CHECK_FALSE(f.mode().exact);
  CHECK(f.mode().q0 == doctest::Approx(0.3));
  CHECK(f.moments().r(4) == 1);

  CHECK_NOTHROW(ProcessModel::from_config(parse_config("nu.atoms = [(1,1)]\nmoments = [0,1,1,1]\ndegree_cutoff=2")));
  CHECK_THROWS_AS(ProcessModel::from_config(parse_config("nu.atoms = [(1,1)]\nmoments = [0,1,2,1]\ndegree_cutoff=2")),
                  UsageError);
  CHECK_THROWS_AS(ProcessModel::from_config(parse_config("moments = [1, 1, 1, 1]\ndegree_cutoff=2")), UsageError);
  CHECK_THROWS_AS(ProcessModel::from_config(parse_config("grid = uniform(1, 2)")), UsageError);
  CHECK_THROWS_AS(parse_config("no equals sign"), UsageError);
  CHECK_THROWS_AS(ProcessModel::from_config(parse_config("q = 1\nmoments=[0,1,0,0]\ndegree_cutoff=2")), UsageError);

  auto app = ProcessModel::from_config(parse_config("kind = appendix\nnu.atoms = [(0, 1/2), (1, 1/2)]\n"));
  CHECK(app.kind() == ProcessModel::Kind::Appendix);
  CHECK(parse_pair_list("[(1, 2), (-1/2, 0.25)]")[1].second == Q(1, 4));
  CHECK_THROWS_AS(parse_pair_list("[(1, 2) x (3, 4)]"), UsageError);
}
