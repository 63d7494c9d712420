#ifndef QFOCK_FOCK_HPP
#define QFOCK_FOCK_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qfock/errors.hpp"
#include "qfock/qscalar.hpp"

namespace qfock {

constexpr int kMaxWordLength = 16;

// Tensor word e_{i1} x ... x e_{ik} over 0-based one-particle basis indices.
class Word {
 public:
  Word() = default;
  Word(std::initializer_list<int> idx);
  explicit Word(const std::vector<int>& idx);

  int size() const { return len_; }
  bool empty() const { return len_ == 0; }
  int operator[](int i) const { return idx_[i]; }
  std::vector<int> to_vector() const;

  Word prepend(int i) const;
  Word append(int i) const;
  Word erase(int pos) const;
  Word reversed() const;
  Word concat(const Word& o) const;
  Word sub(int from, int count) const;

  bool operator==(const Word& o) const;
  bool operator<(const Word& o) const;
  std::size_t hash() const;

 private:
  std::uint8_t len_ = 0;
  std::array<std::uint16_t, kMaxWordLength> idx_{};
};

struct WordHash {
  std::size_t operator()(const Word& w) const { return w.hash(); }
};

// Sparse vector in the one-particle space; terms sorted by index, no zeros.
class OneParticleVector {
 public:
  OneParticleVector() = default;
  static OneParticleVector basis(int i, QScalar c = QScalar(1));

  void add(int i, const QScalar& c);
  QScalar coeff(int i) const;
  const std::vector<std::pair<int, QScalar>>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  OneParticleVector& operator+=(const OneParticleVector& o);
  OneParticleVector& operator*=(const QScalar& c);
  friend OneParticleVector operator+(OneParticleVector a, const OneParticleVector& b) { return a += b; }
  friend OneParticleVector operator*(const QScalar& c, OneParticleVector a) { return a *= c; }
  OneParticleVector operator-() const;
  bool operator==(const OneParticleVector& o) const { return terms_ == o.terms_; }

 private:
  std::vector<std::pair<int, QScalar>> terms_;
};

// Column-sparse square matrix. A column may be poisoned: applying the matrix
// to that basis vector raises CutoffExceeded (used for products past a cutoff).
class OneParticleMatrix {
 public:
  OneParticleMatrix() = default;
  explicit OneParticleMatrix(int dim);
  static OneParticleMatrix identity(int dim);

  int dim() const { return static_cast<int>(cols_.size()); }
  void set_column(int j, OneParticleVector col);
  void poison_column(int j, std::string reason);
  // Throws CutoffExceeded on a poisoned column.
  const OneParticleVector& column(int j) const;
  bool is_poisoned(int j) const { return !cols_[j].has_value(); }
  bool is_zero() const;

  OneParticleVector apply(const OneParticleVector& v) const;
  OneParticleMatrix operator*(const QScalar& c) const;
  OneParticleMatrix operator+(const OneParticleMatrix& o) const;
  OneParticleMatrix transpose() const;

 private:
  std::vector<std::optional<OneParticleVector>> cols_;
  std::vector<std::string> poison_;
};

// Finite one-particle space with a symmetric Gram form.
class OneParticleSpace {
 public:
  OneParticleSpace() = default;
  // gram is dim x dim, row-major.
  OneParticleSpace(int dim, std::vector<QScalar> gram);
  static OneParticleSpace orthonormal(int dim);

  int dim() const { return dim_; }
  const QScalar& gram(int i, int j) const { return gram_[static_cast<std::size_t>(i) * dim_ + j]; }
  // Nonzero entries of row i.
  const std::vector<std::pair<int, QScalar>>& row(int i) const { return rows_[i]; }
  QScalar pair(const OneParticleVector& u, const OneParticleVector& v) const;
  // Covector i -> <e_i, v>.
  OneParticleVector lower(const OneParticleVector& v) const;
  // Floating-point check through a pivoted LDL^T factorization (q-free entries only).
  bool is_positive_semidefinite(double tol = 1e-12) const;
  // T^dagger = G^{-1} T^t G; exact, requires an invertible q-free Gram.
  OneParticleMatrix adjoint(const OneParticleMatrix& t) const;

 private:
  int dim_ = 0;
  std::vector<QScalar> gram_;
  std::vector<std::vector<std::pair<int, QScalar>>> rows_;
};

// Finite linear combination of words; no stored zero coefficients.
class FockVector {
 public:
  using Map = std::unordered_map<Word, QScalar, WordHash>;

  FockVector() = default;
  static FockVector vacuum(QScalar c = QScalar(1));
  static FockVector basis(const Word& w, QScalar c = QScalar(1));
  // Elementary tensor of one-particle vectors.
  static FockVector tensor(const std::vector<OneParticleVector>& factors);

  void add(const Word& w, const QScalar& c);
  QScalar coeff(const Word& w) const;
  const Map& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  int top_degree() const;
  FockVector degree_component(int n) const;
  // Terms sorted by (length, lexicographic word).
  std::vector<std::pair<Word, QScalar>> sorted_terms() const;

  FockVector& operator+=(const FockVector& o);
  FockVector& operator-=(const FockVector& o);
  FockVector& operator*=(const QScalar& c);
  void axpy(const QScalar& c, const FockVector& o);
  friend FockVector operator+(FockVector a, const FockVector& b) { return a += b; }
  friend FockVector operator-(FockVector a, const FockVector& b) { return a -= b; }
  friend FockVector operator*(const QScalar& c, FockVector a) { return a *= c; }
  FockVector reversed() const;
  bool operator==(const FockVector& o) const;
  bool operator!=(const FockVector& o) const { return !(*this == o); }

  // Lines "coeff | i1,i2,...", indices 1-based; empty list is the vacuum.
  std::string serialize() const;
  static FockVector parse(const std::string& text);

 private:
  Map terms_;
};

// Scalar mode of a Fock space: formal q (exact) or a pinned float q0.
struct QMode {
  bool exact = true;
  double q0 = 0.0;
  static QMode formal() { return {true, 0.0}; }
  static QMode pinned(double q0);
  QScalar q() const;
  QScalar one() const;
  QScalar embed(const QScalar& s) const;
};

class FockOperator;

// Algebraic Fock space truncated at a maximal word length (depth).
class FockSpace {
 public:
  FockSpace(OneParticleSpace sp, int depth, QMode mode = QMode::formal());

  const OneParticleSpace& one_particle() const { return *sp_; }
  std::shared_ptr<const OneParticleSpace> one_particle_ptr() const { return sp_; }
  int dim() const { return sp_->dim(); }
  int depth() const { return depth_; }
  const QMode& mode() const { return mode_; }
  bool exact() const { return mode_.exact; }
  QScalar q() const { return mode_.q(); }
  FockSpace with_depth(int depth) const;

  QScalar inner0(const FockVector& u, const FockVector& v) const;
  // w -> sum over x of <x, w>_0 x, i.e. the Gram-lowered coordinates.
  FockVector lower(const FockVector& v) const;
  // Sym(n) enumeration; degree caps 7 exact / 9 float.
  FockVector apply_Pn(const FockVector& v) const;
  // Same operator through P_n = (1 x P_{n-1}) R_n, R_n moving letter k to the front with q^{k-1}.
  FockVector apply_P(const FockVector& v) const;
  QScalar innerq(const FockVector& u, const FockVector& v) const;
  QScalar normq2(const FockVector& v) const { return innerq(v, v); }
  // <Omega, v>.
  QScalar vacuum_coeff(const FockVector& v) const;

  FockVector gamma_q(const FockVector& v) const;
  // Orthogonal projection onto words over kept indices; validates orthogonality.
  FockVector project(const FockVector& v, const std::function<bool(int)>& keep) const;

  FockVector apply(const FockOperator& op, const FockVector& v) const;

 private:
  std::shared_ptr<const OneParticleSpace> sp_;
  int depth_;
  QMode mode_;
};

// Lazy operator expression tree.
class FockOperator {
 public:
  class Node {
   public:
    virtual ~Node() = default;
    virtual FockVector apply(const FockSpace& space, const FockVector& v) const = 0;
    // Largest increase / decrease of word length.
    virtual int raise() const = 0;
    virtual int lower() const = 0;
    virtual FockOperator adjoint(const FockSpace& space) const;
  };

  FockOperator();  // zero operator
  explicit FockOperator(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static FockOperator zero();
  static FockOperator identity();
  static FockOperator scalar(const QScalar& c);
  static FockOperator creation(OneParticleVector zeta);
  static FockOperator annihilation(OneParticleVector zeta);
  static FockOperator gauge(OneParticleMatrix t);

  FockVector apply(const FockSpace& space, const FockVector& v) const { return node_->apply(space, v); }
  int raise() const { return node_->raise(); }
  int lower() const { return node_->lower(); }
  FockOperator adjoint(const FockSpace& space) const { return node_->adjoint(space); }
  const Node& node() const { return *node_; }

  friend FockOperator operator+(const FockOperator& a, const FockOperator& b);
  friend FockOperator operator-(const FockOperator& a, const FockOperator& b);
  // Composition: (a*b)v = a(b(v)).
  friend FockOperator operator*(const FockOperator& a, const FockOperator& b);
  friend FockOperator operator*(const QScalar& c, const FockOperator& a);

 private:
  std::shared_ptr<const Node> node_;
};

// a(zeta) + a*(zeta) + p(T) + mean * Id in a single pass.
FockOperator field_operator(OneParticleVector zeta, OneParticleMatrix t, QScalar mean);

// Largest singular value of P_D op P_D in the q-inner product (float mode).
double operator_norm_estimate(const FockSpace& space, const FockOperator& op, int depth);

// All words of length n over {0..dim-1}, lexicographic.
std::vector<Word> all_words(int dim, int n);

}  // namespace qfock

#endif  // QFOCK_FOCK_HPP
