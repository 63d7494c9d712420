#ifndef QFOCK_WICK_HPP
#define QFOCK_WICK_HPP

#include <memory>
#include <string>
#include <vector>

#include "qfock/fock.hpp"
#include "qfock/model.hpp"
#include "qfock/partitions.hpp"

namespace qfock {

// Wick map W on the algebraic Fock space of a letter algebra, defined by
//   W(b0 x rest) = X(b0) W(rest) - sum_i q^{i-1} <b0, b_i> W(rest \ i)
//                - sum_i q^{i-1} W((b0 b_i) x rest \ i) - mean(b0) W(rest),
// with W(Omega) = Id. The recursion runs over basis words, memoized per apply.
class WickMap {
 public:
  explicit WickMap(std::shared_ptr<const LetterAlgebra> algebra);

  const LetterAlgebra& algebra() const { return *alg_; }
  std::shared_ptr<const LetterAlgebra> algebra_ptr() const { return alg_; }
  FockOperator wick(const FockVector& element) const;
  // W(xi_1 x ... x xi_n).
  FockOperator wick(const std::vector<Letter>& word) const;
  FockOperator wick(const std::vector<OneParticleVector>& word) const;
  // X(b) for a one-particle vector b.
  FockOperator field_of(const OneParticleVector& b) const;

 private:
  std::shared_ptr<const LetterAlgebra> alg_;
};

// One (S, pi) summand of X(l_1)...X(l_n): q^rc * scalar * W(open word).
struct ExpansionTerm {
  ExtendedPartition ep;
  unsigned rc = 0;
  // Product over closed blocks of <l_min, prod_{middle} T l_max>, or mean(l) for singletons.
  QScalar scalar;
  // Open-block letters, ordered by block minimum: the product of the block's letters.
  std::vector<OneParticleVector> open_word;
};

class ProductExpansion {
 public:
  const std::vector<ExpansionTerm>& terms() const { return terms_; }
  // Sum of q^rc * scalar * W(open word) in the given space's mode.
  FockOperator as_operator(const WickMap& w, const QMode& mode) const;
  // Sum of q^rc * scalar * (open word tensor): the expansion applied to Omega.
  FockVector on_vacuum(const QMode& mode) const;
  // One line per (S, pi): partition, rc, scalar factor, open-block word.
  std::string ledger(const LetterAlgebra& alg) const;

 private:
  friend ProductExpansion product_expansion(const LetterAlgebra& alg, const std::vector<Letter>& letters);
  std::vector<ExpansionTerm> terms_;
};

constexpr int kMaxExpansionLength = 8;
constexpr int kMaxMomentLength = 10;

// Terms with a zero scalar (closed singletons in a centered algebra) are dropped.
// Throws ResourceError for n > 8, UsageError if a letter's mean disagrees with
// the algebra state, CutoffExceeded on letter-product overflow.
ProductExpansion product_expansion(const LetterAlgebra& alg, const std::vector<Letter>& letters);

// sum over pi of q^{rc(pi)} prod_B state(prod_{i in B} l_i), exact in Q[q] (or the
// space mode when given). n <= 10.
QScalar vacuum_moment(const LetterAlgebra& alg, const std::vector<Letter>& letters, const QMode& mode = QMode::formal());

// X^r(f): eta_1 x ... x eta_n -> W(eta_1 x ... x eta_n) X(f) Omega.
FockOperator right_operator(const WickMap& w, const Letter& f);

// Human-readable one-particle vector, e.g. "2*e(A1,1) + e(A2,1)".
std::string vector_label(const LetterAlgebra& alg, const OneParticleVector& v);

}  // namespace qfock

#endif  // QFOCK_WICK_HPP
