// Seeded generators shared by the test binaries.
#ifndef QFOCK_TESTS_SUPPORT_HPP
#define QFOCK_TESTS_SUPPORT_HPP

#include <random>
#include <vector>

#include "qfock/fock.hpp"

namespace testsupport {

using Rng = std::mt19937_64;

inline int small_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline mpq_class small_rational(Rng& rng) {
  return mpq_class(small_int(rng, -3, 3), small_int(rng, 1, 3));
}

// Symmetric, invertible rational gram: B^t B + I with small integer B.
inline qfock::OneParticleSpace random_space(Rng& rng, int dim) {
  std::vector<std::vector<int>> b(dim, std::vector<int>(dim));
  for (auto& row : b)
    for (auto& x : row) x = small_int(rng, -2, 2);
  std::vector<qfock::QScalar> g(static_cast<std::size_t>(dim) * dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      long s = i == j ? 1 : 0;
      for (int k = 0; k < dim; ++k) s += b[k][i] * b[k][j];
      g[static_cast<std::size_t>(i) * dim + j] = qfock::QScalar(s);
    }
  return qfock::OneParticleSpace(dim, std::move(g));
}

inline qfock::OneParticleVector random_vector(Rng& rng, int dim) {
  qfock::OneParticleVector v;
  for (int i = 0; i < dim; ++i) v.add(i, qfock::QScalar(small_rational(rng)));
  if (v.is_zero()) v.add(0, qfock::QScalar(1));
  return v;
}

inline qfock::OneParticleMatrix random_matrix(Rng& rng, int dim) {
  qfock::OneParticleMatrix m(dim);
  for (int j = 0; j < dim; ++j) m.set_column(j, random_vector(rng, dim));
  return m;
}

inline qfock::FockVector random_fock_vector(Rng& rng, int dim, int max_degree, int terms) {
  qfock::FockVector v;
  for (int t = 0; t < terms; ++t) {
    int len = small_int(rng, 0, max_degree);
    std::vector<int> idx(len);
    for (auto& x : idx) x = small_int(rng, 0, dim - 1);
    v.add(qfock::Word(idx), qfock::QScalar(small_rational(rng)));
  }
  return v;
}

}  // namespace testsupport

#endif  // QFOCK_TESTS_SUPPORT_HPP
