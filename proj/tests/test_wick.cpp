#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qfock/wick.hpp"
#include "support.hpp"

using namespace qfock;
using testsupport::Rng;

namespace {

mpq_class Q(long n, long d = 1) {
  mpq_class x(n, d);
  x.canonicalize();
  return x;
}

// Two atoms of [0, 1), moments of a three-point measure, cutoff 6.
ProcessModel body_model(int depth = 6, QMode mode = QMode::formal()) {
  auto r = MomentSequence::from_atoms({{Q(-1), Q(1, 3)}, {Q(1, 2), Q(1, 3)}, {Q(2), Q(1, 3)}}, 12);
  return ProcessModel(mode, r, TimeGrid::uniform(1, 2), 6, depth);
}

ProcessModel appendix_model(int depth = 6) {
  return ProcessModel::appendix(QMode::formal(), {Q(-1), Q(1), Q(3)}, {Q(1, 4), Q(1, 4), Q(1, 2)},
                                TimeGrid::uniform(1, 2), depth);
}

// Random letter supported on power-1 basis elements (body) or on all points (appendix).
Letter random_letter(Rng& rng, const ProcessModel& m) {
  OneParticleVector v;
  const auto& alg = m.algebra();
  if (m.kind() == ProcessModel::Kind::Body) {
    const auto& b = static_cast<const BodyAlgebra&>(alg);
    for (int a = 0; a < m.grid().size(); ++a) v.add(b.index(a, 1), QScalar(testsupport::small_rational(rng)));
  } else {
    for (int i = 0; i < alg.dim(); ++i) v.add(i, QScalar(testsupport::small_rational(rng)));
  }
  if (v.is_zero()) v.add(0, QScalar(1));
  return alg.letter(v);
}

FockVector random_low_vector(Rng& rng, const ProcessModel& m, int degree, int terms) {
  const auto& b = static_cast<const BodyAlgebra&>(m.algebra());
  FockVector out;
  for (int t = 0; t < terms; ++t) {
    int len = testsupport::small_int(rng, 0, degree);
    std::vector<int> idx;
    for (int i = 0; i < len; ++i) idx.push_back(b.index(testsupport::small_int(rng, 0, m.grid().size() - 1), 1));
    out.add(Word(idx), QScalar(testsupport::small_rational(rng)));
  }
  return out;
}

FockVector product_on_vacuum(const ProcessModel& m, const std::vector<Letter>& ls) {
  FockVector v = FockVector::vacuum();
  for (auto it = ls.rbegin(); it != ls.rend(); ++it) v = field(*it).apply(m.space(), v);
  return v;
}

FockVector vec(const OneParticleVector& x) { return FockVector::tensor({x}); }

// Letters e_U for nonempty U in {1..n} (index = mask - 1), tuned to one partition pi:
// e_U e_V = e_{U+V} when disjoint inside a block of pi, <e_U, e_V> = 1 iff U + V is a
// block of pi, mean(e_U) = 1 iff U is a singleton block (and singletons are enabled).
// Every (S, pi) term of X(e_1)...X(e_n) Omega then lands on its own tensor.
class SubsetAlgebra : public LetterAlgebra {
 public:
  SubsetAlgebra(int n, const SetPartition& pi, bool singleton_mean)
      : LetterAlgebra(make_space(n, pi)), block_mask_(masks(pi)), singleton_mean_(singleton_mean) {}

  std::optional<OneParticleVector> basis_product(int i, int j) const override {
    unsigned u = i + 1;
    unsigned v = j + 1;
    if (u & v) return OneParticleVector();
    for (unsigned b : block_mask_) {
      if (((u | v) & ~b) == 0) return OneParticleVector::basis(static_cast<int>((u | v) - 1));
    }
    return OneParticleVector();
  }
  QScalar basis_mean(int i) const override {
    unsigned u = i + 1;
    if (!singleton_mean_ || (u & (u - 1))) return QScalar();
    for (unsigned b : block_mask_)
      if (b == u) return QScalar(1);
    return QScalar();
  }

  static unsigned mask_of(const std::vector<int>& block) {
    unsigned m = 0;
    for (int x : block) m |= 1u << (x - 1);
    return m;
  }

 private:
  static std::vector<unsigned> masks(const SetPartition& pi) {
    std::vector<unsigned> out;
    for (const auto& b : pi.blocks()) out.push_back(mask_of(b));
    return out;
  }
  static OneParticleSpace make_space(int n, const SetPartition& pi) {
    const int dim = (1 << n) - 1;
    auto bm = masks(pi);
    std::vector<QScalar> g(static_cast<std::size_t>(dim) * dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        unsigned u = i + 1;
        unsigned v = j + 1;
        if (u & v) continue;
        for (unsigned b : bm)
          if ((u | v) == b) g[static_cast<std::size_t>(i) * dim + j] = QScalar(1);
      }
    return OneParticleSpace(dim, std::move(g));
  }

  std::vector<unsigned> block_mask_;
  bool singleton_mean_;
};

}  // namespace

TEST_CASE("Wick words evaluate to their tensors on the vacuum") {
  for (auto m : {body_model(), appendix_model()}) {
    WickMap w(m.algebra_ptr());
    Rng rng(7);
    for (int t = 0; t < 12; ++t) {
      int n = testsupport::small_int(rng, 0, 4);
      std::vector<Letter> ls;
      for (int i = 0; i < n; ++i) ls.push_back(random_letter(rng, m));
      std::vector<OneParticleVector> xs;
      for (const auto& l : ls) xs.push_back(l.xi);
      CHECK(w.wick(ls).apply(m.space(), FockVector::vacuum()) == FockVector::tensor(xs));
    }
  }
}

TEST_CASE("Wick base cases and the unrolled two-letter recursion") {
  auto m = body_model();
  WickMap w(m.algebra_ptr());
  const auto& alg = m.algebra();
  Rng rng(8);
  for (int t = 0; t < 5; ++t) {
    Letter l1 = random_letter(rng, m);
    Letter l2 = random_letter(rng, m);
    auto v = random_low_vector(rng, m, 2, 4);
    CHECK(w.wick(std::vector<Letter>{l1}).apply(m.space(), v) == field(l1).apply(m.space(), v));
    CHECK(w.wick(FockVector::vacuum()).apply(m.space(), v) == v);
    // W(l1 x l2) = X(l1) X(l2) - <l1, l2> - X(l1 l2).
    auto rhs = field(l1) * field(l2) - FockOperator::scalar(alg.pair(l1.xi, l2.xi)) -
               field(alg.letter(alg.product(l1.xi, l2.xi)));
    CHECK(w.wick(std::vector<Letter>{l1, l2}).apply(m.space(), v) == rhs.apply(m.space(), v));
  }
  auto a = appendix_model();
  WickMap wa(a.algebra_ptr());
  Letter f = random_letter(rng, a);
  auto v = FockVector::basis(Word{1, 2});
  CHECK(wa.wick(std::vector<Letter>{f}).apply(a.space(), v) ==
        (field(f) - FockOperator::scalar(f.mean)).apply(a.space(), v));
}

TEST_CASE("product expansion: small cases") {
  auto m = body_model();
  const auto& alg = m.algebra();
  Rng rng(9);
  Letter l1 = random_letter(rng, m);
  Letter l2 = random_letter(rng, m);
  auto one = product_expansion(alg, {l1});
  REQUIRE(one.terms().size() == 1);
  CHECK(one.terms()[0].ep.to_string() == "{1}*");
  CHECK(one.terms()[0].open_word == std::vector<OneParticleVector>{l1.xi});

  auto two = product_expansion(alg, {l1, l2});
  // W(l1 x l2) + <l1, l2> + W(l1 l2); closed singletons vanish in the body.
  REQUIRE(two.terms().size() == 3);
  int found = 0;
  for (const auto& t : two.terms()) {
    CHECK(t.rc == 0);
    if (t.open_word.size() == 2) {
      CHECK(t.scalar == QScalar(1));
      ++found;
    } else if (t.open_word.size() == 1) {
      CHECK(t.open_word[0] == alg.product(l1.xi, l2.xi));
      ++found;
    } else {
      CHECK(t.scalar == alg.pair(l1.xi, l2.xi));
      ++found;
    }
  }
  CHECK(found == 3);
  CHECK(two.ledger(alg).find("rc=0") != std::string::npos);

  WickMap w(m.algebra_ptr());
  auto v = random_low_vector(rng, m, 2, 3);
  CHECK(two.as_operator(w, m.mode()).apply(m.space(), v) == (field(l1) * field(l2)).apply(m.space(), v));
}

TEST_CASE("product expansion agrees with direct application") {
  for (auto m : {body_model(7), appendix_model(7)}) {
    const auto& alg = m.algebra();
    WickMap w(m.algebra_ptr());
    Rng rng(21);
    for (int n = 1; n <= 5; ++n) {
      for (int t = 0; t < 2; ++t) {
        std::vector<Letter> ls;
        for (int i = 0; i < n; ++i) ls.push_back(random_letter(rng, m));
        auto pe = product_expansion(alg, ls);
        auto direct = product_on_vacuum(m, ls);
        CHECK(pe.on_vacuum(m.mode()) == direct);
        // Each Wick term through the recursion, applied to Omega.
        CHECK(pe.as_operator(w, m.mode()).apply(m.space(), FockVector::vacuum()) == direct);
        if (n <= 3) {
          FockVector v = m.kind() == ProcessModel::Kind::Body ? random_low_vector(rng, m, 1, 3)
                                                               : FockVector::basis(Word{0}) + FockVector::basis(Word{3, 4});
          FockVector d = v;
          for (auto it = ls.rbegin(); it != ls.rend(); ++it) d = field(*it).apply(m.space(), d);
          CHECK(pe.as_operator(w, m.mode()).apply(m.space(), v) == d);
        }
      }
    }
  }
}

TEST_CASE("coefficient law: each (S, pi) tensor carries q^rc(S, pi)") {
  QScalar q = QScalar::q();
  for (bool singletons : {false, true}) {
    for (int n = 1; n <= 5; ++n) {
      for_each_partition(n, [&](const SetPartition& pi) {
        auto alg = std::make_shared<SubsetAlgebra>(n, pi, singletons);
        FockSpace s(alg->space(), n);
        FockVector direct = FockVector::vacuum();
        for (int i = n; i >= 1; --i) direct = field(alg->letter(OneParticleVector::basis((1 << (i - 1)) - 1))).apply(s, direct);
        // Refinements of pi with open sub-blocks land on other tensors; the tensor of
        // the open blocks of (S, pi) receives a contribution from (S, pi) alone.
        const std::size_t nb = pi.size();
        for (unsigned mask = 0; mask < (1u << nb); ++mask) {
          std::vector<bool> open(nb);
          std::vector<int> word;
          bool allowed = true;
          for (std::size_t b = 0; b < nb; ++b) {
            open[b] = (mask >> b) & 1u;
            if (open[b]) {
              word.push_back(static_cast<int>(SubsetAlgebra::mask_of(pi.block(b))) - 1);
            } else if (pi.block(b).size() == 1 && !singletons) {
              allowed = false;
            }
          }
          ExtendedPartition ep(pi, open);
          QScalar expected = allowed ? q.pow(rc(ep)) : QScalar();
          CHECK_MESSAGE(direct.coeff(Word(word)) == expected, ep.to_string());
        }

        std::vector<Letter> ls;
        for (int i = 1; i <= n; ++i) ls.push_back(alg->letter(OneParticleVector::basis((1 << (i - 1)) - 1)));
        CHECK(product_expansion(*alg, ls).on_vacuum(QMode::formal()) == direct);
      });
    }
  }
}

TEST_CASE("vacuum moments") {
  // q-Gaussian: r_2 = 1, everything else 0.
  ProcessModel g(QMode::formal(), MomentSequence::gaussian(8), TimeGrid::uniform(1, 1), 4, 5);
  Letter x = g.letter_of_interval_power(g.whole(), 1);
  QScalar q = QScalar::q();
  CHECK(vacuum_moment(g.algebra(), {x, x, x, x}) == QScalar(2) + q);
  CHECK(vacuum_moment(g.algebra(), {x}).is_zero());
  CHECK(vacuum_moment(g.algebra(), {}) == QScalar(1));
  CHECK(g.space().vacuum_coeff(product_on_vacuum(g, {x, x, x, x})) == QScalar(2) + q);

  // One point x = 1: every <f^k> = 1, so the moment counts partitions by crossings.
  auto p = ProcessModel::appendix(QMode::formal(), {Q(1)}, {Q(1)}, TimeGrid::uniform(1, 1), 5);
  Letter f = p.algebra().letter(OneParticleVector::basis(0));
  CHECK(vacuum_moment(p.algebra(), {f, f, f, f}) == QScalar(14) + q);
  CHECK(p.space().vacuum_coeff(product_on_vacuum(p, {f, f, f, f})) == QScalar(14) + q);

  for (auto m : {body_model(7), appendix_model(7)}) {
    Rng rng(31);
    for (int n = 1; n <= 6; ++n) {
      std::vector<Letter> ls;
      for (int i = 0; i < n; ++i) ls.push_back(random_letter(rng, m));
      CHECK(vacuum_moment(m.algebra(), ls) == m.space().vacuum_coeff(product_on_vacuum(m, ls)));
    }
  }
  auto fm = body_model(6, QMode::pinned(0.3));
  Rng rng(5);
  std::vector<Letter> ls;
  for (int i = 0; i < 4; ++i) ls.push_back(random_letter(rng, fm));
  CHECK(vacuum_moment(fm.algebra(), ls, fm.mode()).to_double() ==
        doctest::Approx(fm.space().vacuum_coeff(product_on_vacuum(fm, ls)).to_double()).epsilon(1e-12));
}

TEST_CASE("Wick adjoint reverses words") {
  auto m = body_model();
  WickMap w(m.algebra_ptr());
  Rng rng(12);
  for (int t = 0; t < 4; ++t) {
    auto e = random_low_vector(rng, m, 3, 3);
    auto u = random_low_vector(rng, m, 2, 3);
    auto v = random_low_vector(rng, m, 2, 3);
    auto op = w.wick(e);
    CHECK(m.space().innerq(op.apply(m.space(), u), v) ==
          m.space().innerq(u, op.adjoint(m.space()).apply(m.space(), v)));
  }
}

TEST_CASE("separating vacuum") {
  auto m = body_model(6);
  WickMap w(m.algebra_ptr());
  Rng rng(13);
  for (int t = 0; t < 6; ++t) {
    auto e = random_low_vector(rng, m, 3, 4);
    auto op = w.wick(e);
    CHECK(op.apply(m.space(), FockVector::vacuum()) == e);
    bool nonzero = e.is_zero();
    for (int i = 0; i < m.space().dim() && !nonzero; ++i)
      nonzero = !op.apply(m.space(), FockVector::basis(Word{i})).is_zero();
    CHECK(nonzero == !e.is_zero());
  }
  CHECK(w.wick(FockVector()).apply(m.space(), FockVector::basis(Word{0, 1})).is_zero());
}

TEST_CASE("right operators") {
  auto m = body_model(7);
  const auto& alg = m.algebra();
  const auto& s = m.space();
  WickMap w(m.algebra_ptr());
  QScalar q = QScalar::q();
  Rng rng(14);
  for (int t = 0; t < 3; ++t) {
    Letter f = random_letter(rng, m);
    Letter g1 = random_letter(rng, m);
    Letter g2 = random_letter(rng, m);
    Letter g3 = random_letter(rng, m);
    const auto& xf = f.xi;
    auto T = [&](const OneParticleVector& a, const OneParticleVector& b) { return alg.product(a, b); };
    auto pr = [&](const OneParticleVector& a, const OneParticleVector& b) { return alg.pair(a, b); };
    auto xr = right_operator(w, f);

    CHECK(xr.apply(s, FockVector::vacuum()) == vec(xf));
    // Degree 1: eta x xi_f + T_f eta + <eta, xi_f> Omega.
    CHECK(xr.apply(s, vec(g1.xi)) ==
          FockVector::tensor({g1.xi, xf}) + vec(T(xf, g1.xi)) + FockVector::vacuum(pr(g1.xi, xf)));
    // Degree 2.
    FockVector d2 = FockVector::tensor({g1.xi, g2.xi, xf});
    d2.axpy(q * pr(g1.xi, xf), vec(g2.xi));
    d2.axpy(pr(g2.xi, xf), vec(g1.xi));
    d2.axpy(q, FockVector::tensor({T(xf, g1.xi), g2.xi}));
    d2 += FockVector::tensor({g1.xi, T(xf, g2.xi)});
    CHECK(xr.apply(s, FockVector::tensor({g1.xi, g2.xi})) == d2);
    // Degree 3 with the correction Q(f).
    FockVector d3 = FockVector::tensor({g1.xi, g2.xi, g3.xi, xf});
    d3.axpy(q * q * pr(g1.xi, xf), FockVector::tensor({g2.xi, g3.xi}));
    d3.axpy(q * pr(g2.xi, xf), FockVector::tensor({g1.xi, g3.xi}));
    d3.axpy(pr(g3.xi, xf), FockVector::tensor({g1.xi, g2.xi}));
    d3.axpy(q * q, FockVector::tensor({T(xf, g1.xi), g2.xi, g3.xi}));
    d3.axpy(q, FockVector::tensor({g1.xi, T(xf, g2.xi), g3.xi}));
    d3 += FockVector::tensor({g1.xi, g2.xi, T(xf, g3.xi)});
    FockVector corr;
    corr.axpy(pr(T(g1.xi, g3.xi), xf), vec(g2.xi));
    corr += FockVector::tensor({T(g1.xi, T(g3.xi, xf)), g2.xi});
    corr.axpy(-pr(g1.xi, g3.xi), vec(T(g2.xi, xf)));
    corr -= FockVector::tensor({T(g1.xi, g3.xi), T(g2.xi, xf)});
    d3.axpy(q * (QScalar(1) - q), corr);
    CHECK(xr.apply(s, FockVector::tensor({g1.xi, g2.xi, g3.xi})) == d3);

    // Commutation with the left fields on vectors of degree <= 3.
    Letter g = random_letter(rng, m);
    auto v = random_low_vector(rng, m, 3, 4);
    CHECK((xr * field(g)).apply(s, v) == (field(g) * xr).apply(s, v));
  }
}

TEST_CASE("budgets and errors") {
  auto m = body_model();
  Rng rng(15);
  std::vector<Letter> nine;
  for (int i = 0; i < 9; ++i) nine.push_back(random_letter(rng, m));
  CHECK_THROWS_AS(product_expansion(m.algebra(), nine), ResourceError);
  std::vector<Letter> eleven(11, nine[0]);
  CHECK_THROWS_AS(vacuum_moment(m.algebra(), eleven), ResourceError);
  Letter bad = nine[0];
  bad.mean = QScalar(1);
  CHECK_THROWS_AS(product_expansion(m.algebra(), {bad}), UsageError);

  // Seven power-1 letters on one atom overflow the cutoff 6.
  const auto& b = static_cast<const BodyAlgebra&>(m.algebra());
  Letter x = m.algebra().letter(OneParticleVector::basis(b.index(0, 1)));
  std::vector<Letter> seven(7, x);
  CHECK_THROWS_AS(product_expansion(m.algebra(), seven), CutoffExceeded);
  auto deep = body_model(8);
  WickMap w(deep.algebra_ptr());
  CHECK_THROWS_AS(w.wick(std::vector<Letter>(7, x)).apply(deep.space(), FockVector::vacuum()), CutoffExceeded);
}
