#ifndef QFOCK_MODEL_HPP
#define QFOCK_MODEL_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qfock/fock.hpp"
#include "qfock/qscalar.hpp"

namespace qfock {

// Moments r_1..r_K of nu, r_{k+2} = int x^k dnu (note the index shift).
class MomentSequence {
 public:
  MomentSequence() = default;
  static MomentSequence explicit_moments(std::vector<mpq_class> r);
  // nu = sum w_j delta_{x_j}; r_1 = 0 and r_{k+2} = sum w_j x_j^k for k + 2 <= K.
  static MomentSequence from_atoms(const std::vector<std::pair<mpq_class, mpq_class>>& atoms, int K);
  // r_2 = 1, every other r_k = 0 (semicircle / q-Gaussian).
  static MomentSequence gaussian(int K);
  // nu = delta_1: r_1 = 0, r_k = 1 for k >= 2 (Poisson / q-Charlier).
  static MomentSequence poisson(int K);

  int size() const { return static_cast<int>(r_.size()); }
  bool has(int k) const { return k >= 1 && k <= size(); }
  // Throws UsageError when r_k is not available.
  const mpq_class& r(int k) const;
  MomentSequence scaled(const mpq_class& t) const;
  const std::vector<mpq_class>& values() const { return r_; }

  // Coefficients c_0..c_{k-1} of the monic P_k = x^k + sum c_j x^j orthogonal
  // under <x^a, x^b> = r_{a+b+2}; returns c_0..c_k with c_k = 1.
  std::vector<mpq_class> monic_orthogonal(int k) const;
  // <P_k, P_k>.
  mpq_class monic_norm2(int k) const;
  // Float check of the Hankel matrices (r_{i+j+2})_{0<=i,j<=m}.
  bool hankel_psd(int m) const;

 private:
  std::vector<mpq_class> r_;
};

struct Interval {
  mpq_class a;
  mpq_class b;
  mpq_class length() const { return b - a; }
};

// Half-open atoms [b_i, b_{i+1}) covering [0, T).
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<mpq_class> boundaries);
  static TimeGrid uniform(const mpq_class& T, int N);

  int size() const { return static_cast<int>(b_.size()) - 1; }
  const mpq_class& boundary(int i) const { return b_.at(i); }
  Interval atom(int i) const { return {b_.at(i), b_.at(i + 1)}; }
  mpq_class width(int i) const { return b_.at(i + 1) - b_.at(i); }
  mpq_class horizon() const { return b_.back(); }
  mpq_class mesh() const;
  // Atoms inside I; throws UsageError if I is not grid-aligned.
  std::vector<int> atoms_in(const Interval& I) const;
  // Index k with boundary(k) == t; throws if t is off-grid.
  int boundary_index(const mpq_class& t) const;
  const std::vector<mpq_class>& boundaries() const { return b_; }

 private:
  std::vector<mpq_class> b_{mpq_class(0)};
};

struct Letter {
  OneParticleVector xi;
  OneParticleMatrix gauge;
  QScalar mean;
};

// Commutative algebra whose basis is the one-particle basis. Products of basis
// elements are returned as vectors; nullopt marks a product past the cutoff.
class LetterAlgebra {
 public:
  virtual ~LetterAlgebra() = default;
  const OneParticleSpace& space() const { return *space_; }
  int dim() const { return space_->dim(); }

  virtual std::optional<OneParticleVector> basis_product(int i, int j) const = 0;
  virtual QScalar basis_mean(int i) const = 0;
  virtual std::string basis_label(int i) const { return "e" + std::to_string(i + 1); }

  // Throws CutoffExceeded past the cutoff.
  OneParticleVector product(const OneParticleVector& a, const OneParticleVector& b) const;
  QScalar pair(const OneParticleVector& a, const OneParticleVector& b) const { return space_->pair(a, b); }
  QScalar mean(const OneParticleVector& a) const;
  // Multiplication by a; columns past the cutoff are poisoned.
  OneParticleMatrix multiplication(const OneParticleVector& a) const;
  Letter letter(const OneParticleVector& a) const;

 protected:
  explicit LetterAlgebra(OneParticleSpace space)
      : space_(std::make_shared<const OneParticleSpace>(std::move(space))) {}

 private:
  std::shared_ptr<const OneParticleSpace> space_;
};

// Atoms x monomials: e_{A,k} ~ chi_A (x) x^{k-1}, 1 <= k <= d.
class BodyAlgebra : public LetterAlgebra {
 public:
  BodyAlgebra(const MomentSequence& r, const TimeGrid& grid, int cutoff);
  int index(int atom, int k) const { return atom * d_ + (k - 1); }
  int atom_of(int i) const { return i / d_; }
  int power_of(int i) const { return i % d_ + 1; }
  int cutoff() const { return d_; }

  std::optional<OneParticleVector> basis_product(int i, int j) const override;
  QScalar basis_mean(int) const override { return QScalar(); }
  std::string basis_label(int i) const override;

 private:
  int d_;
};

// Functions on finitely many weighted points, optionally tensored with grid
// atoms: e_{A,i} ~ chi_A (x) 1_{x_i}.
class AppendixAlgebra : public LetterAlgebra {
 public:
  // Untimed: one atom of unit length.
  AppendixAlgebra(std::vector<mpq_class> points, std::vector<mpq_class> weights);
  AppendixAlgebra(std::vector<mpq_class> points, std::vector<mpq_class> weights, const TimeGrid& grid);
  int index(int atom, int point) const { return atom * npoints() + point; }
  int atom_of(int i) const { return i / npoints(); }
  int point_of(int i) const { return i % npoints(); }
  int npoints() const { return static_cast<int>(points_.size()); }
  const std::vector<mpq_class>& points() const { return points_; }
  const std::vector<mpq_class>& weights() const { return weights_; }

  std::optional<OneParticleVector> basis_product(int i, int j) const override;
  QScalar basis_mean(int i) const override;
  std::string basis_label(int i) const override;

 private:
  std::vector<mpq_class> points_;
  std::vector<mpq_class> weights_;
  std::vector<mpq_class> atom_len_;
};

// Self-adjoint field operator X(l) = a(xi) + a*(xi) + p(T) + mean.
FockOperator field(const Letter& l);

// key = value configuration text; '#' starts a comment.
using ConfigMap = std::map<std::string, std::string>;
ConfigMap parse_config(const std::string& text);
ConfigMap load_config(const std::string& path);

class ProcessModel {
 public:
  enum class Kind { Body, Appendix };

  // Body construction over atoms x monomials.
  ProcessModel(QMode mode, MomentSequence moments, TimeGrid grid, int degree_cutoff, int fock_depth);
  // Appendix construction over atoms x weighted points.
  static ProcessModel appendix(QMode mode, std::vector<mpq_class> points, std::vector<mpq_class> weights,
                               TimeGrid grid, int fock_depth);
  static ProcessModel from_config(const ConfigMap& cfg);

  Kind kind() const { return kind_; }
  const QMode& mode() const { return space_->mode(); }
  const MomentSequence& moments() const { return moments_; }
  const TimeGrid& grid() const { return grid_; }
  int degree_cutoff() const { return cutoff_; }
  int fock_depth() const { return space_->depth(); }
  const LetterAlgebra& algebra() const { return *algebra_; }
  std::shared_ptr<const LetterAlgebra> algebra_ptr() const { return algebra_; }
  const FockSpace& space() const { return *space_; }
  ProcessModel with_depth(int depth) const;
  // Grid atom carrying one-particle basis vector i.
  int atom_of_basis(int i) const;

  // chi_I (x) x^{k-1} (body) or chi_I (x) x^k evaluated on the points (appendix).
  OneParticleVector interval_vector(const Interval& I, int k) const;
  Letter letter_of_interval_power(const Interval& I, int k) const;
  // chi_I (x) P_{k-1}, with P the monic orthogonal polynomials of nu. Body only.
  OneParticleVector yhat_vector(const Interval& I, int k) const;

  FockOperator X(const Interval& I) const;
  FockOperator Y(const Interval& I, int k) const;
  // Y_k(I) + |I| r_k.
  FockOperator Delta(const Interval& I, int k) const;
  FockOperator Yhat(const Interval& I, int k) const;
  Interval whole() const { return {mpq_class(0), grid_.horizon()}; }

 private:
  ProcessModel() = default;

  Kind kind_ = Kind::Body;
  MomentSequence moments_;
  TimeGrid grid_;
  int cutoff_ = 0;
  std::shared_ptr<const LetterAlgebra> algebra_;
  std::shared_ptr<const FockSpace> space_;
};

// Parses "[a, b, c]" into rationals.
std::vector<mpq_class> parse_rational_list(const std::string& text);
// Parses "[(x, w), ...]".
std::vector<std::pair<mpq_class, mpq_class>> parse_pair_list(const std::string& text);
TimeGrid parse_grid(const std::string& text);

}  // namespace qfock

#endif  // QFOCK_MODEL_HPP
