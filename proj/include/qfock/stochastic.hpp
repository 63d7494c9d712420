#ifndef QFOCK_STOCHASTIC_HPP
#define QFOCK_STOCHASTIC_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qfock/fock.hpp"
#include "qfock/model.hpp"
#include "qfock/partitions.hpp"
#include "qfock/wick.hpp"

namespace qfock {

// Finitely supported function on n-tuples of grid atoms (0-based atom indices).
class StepFunction {
 public:
  explicit StepFunction(int arity);
  // chi_{I_1 x ... x I_n} for grid-aligned intervals.
  static StepFunction indicator(const TimeGrid& grid, const std::vector<Interval>& rect);

  int arity() const { return n_; }
  void add(const std::vector<int>& atoms, const QScalar& c);
  QScalar value(const std::vector<int>& atoms) const;
  const std::map<std::vector<int>, QScalar>& values() const { return values_; }
  bool is_zero() const { return values_.empty(); }
  // Every supported tuple has pairwise distinct atoms.
  bool off_diagonal() const;

 private:
  int n_;
  std::map<std::vector<int>, QScalar> values_;
};

// sum_{u,v} F(u) G(v) sum_sigma q^{inv sigma} prod_i |A_{u(i)} cap A_{v(sigma(i))}|.
QScalar l2q_inner(const StepFunction& F, const StepFunction& G, const TimeGrid& grid);

// Integrator on one factor of a multiple integral.
struct ProcessRef {
  enum class Kind { X, Y, Delta, Yhat };
  Kind kind = Kind::X;
  int k = 1;

  static ProcessRef x() { return {Kind::X, 1}; }
  static ProcessRef y(int k) { return {Kind::Y, k}; }
  static ProcessRef delta(int k) { return {Kind::Delta, k}; }
  static ProcessRef yhat(int k) { return {Kind::Yhat, k}; }
  std::string label() const;
};

// Increment of the process over I.
FockOperator process_operator(const ProcessModel& m, const ProcessRef& p, const Interval& I);
// Vector part of the increment over I and its deterministic drift |I| r_k (zero for Y, Yhat).
OneParticleVector process_vector(const ProcessModel& m, const ProcessRef& p, const Interval& I);
QScalar process_drift(const ProcessModel& m, const ProcessRef& p, const Interval& I);

// sum_u F(u) p_1(A_{u(1)}) ... p_n(A_{u(n)}). Throws UsageError for diagonal support.
FockOperator multiple_integral(const ProcessModel& m, const StepFunction& F, const std::vector<ProcessRef>& procs);

// Full stochastic measure psi(p_1(t), ..., p_m(t)) over [0,t)^m: the sum over
// subsets T of the factors of prod_{j not in T} drift_j W(tensor_{j in T} vector_j).
FockOperator full_measure(const ProcessModel& m, const std::vector<ProcessRef>& procs, const mpq_class& t);
// psi_n(t) = psi(X(t), ..., X(t)).
FockOperator psi_n(const ProcessModel& m, int n, const mpq_class& t);

// St_pi(t; I) over the model grid atoms inside [0,t): sum over atom tuples constant
// exactly on the blocks of pi of X(A_{u(1)}) ... X(A_{u(n)}). Applied lazily, one
// branch per block assignment.
FockOperator st_pi_discrete(const ProcessModel& m, const SetPartition& pi, const mpq_class& t);
// sum_{S subset pi} q^{rc(S,pi)} R_{pi \ S}(t) W(tensor_{B in S} chi_{[0,t)} (x) x^{|B|-1}),
// with R_sigma(t) = prod_{B in sigma} t r_{|B|} and S ordered by block minima.
FockOperator st_pi_closed(const ProcessModel& m, const SetPartition& pi, const mpq_class& t);

struct ConvergenceRow {
  int N = 0;
  double delta = 0;
  double error = 0;  // || (St_pi(t; I) - St_pi(t)) Omega ||_q
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  // Least-squares slope of log error against log delta; 0 rows with zero error are skipped.
  double slope = 0;
  // Same fit for the squared error.
  double slope_squared = 0;
  bool all_exact = false;
};

// Runs each N of the schedule (uniform grid on [0,t)) in parallel. base must be
// in float mode; its moments, cutoff and depth are reused.
ConvergenceTable st_pi_convergence(const ProcessModel& base, const SetPartition& pi, const mpq_class& t,
                                   const std::vector<int>& schedule);
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

struct IdentityReport {
  std::string name;
  int n = 0;
  bool exact_zero = false;
  QScalar residual;  // squared q-norm of the difference
};

// ||a - b||_q^2.
QScalar residual2(const FockSpace& s, const FockVector& a, const FockVector& b);

// X(t)^n Omega against sum_pi St_pi(t) Omega, both exact.
IdentityReport power_decomposition(const ProcessModel& m, int n, const mpq_class& t);
// W(sum_u F(u) tensor_i chi_{A_{u(i)}} (x) P_{k_i - 1}) Omega against the multiple
// integral of F against Yhat_{k_1}, ..., Yhat_{k_n} on Omega.
IdentityReport yhat_chaos_identity(const ProcessModel& m, const StepFunction& F, const std::vector<int>& ks);

using ChaosDecomposition = std::map<std::vector<int>, StepFunction>;

// Expands every word of v in the basis chi_A (x) P_{k-1}. Keys are the multi-indices u.
ChaosDecomposition chaos_decompose(const ProcessModel& m, const FockVector& v);
// Re-assembles the vector from a decomposition.
FockVector chaos_assemble(const ProcessModel& m, const ChaosDecomposition& d);
// ||v||_q^2 from the decomposition, summing over sigma only where u(sigma) matches:
// sum_{u,a} sum_sigma q^{inv sigma} F_u(a) F_{u sigma}(a sigma) prod |A_{a_i}| h_{u_i}.
QScalar chaos_norm2(const ProcessModel& m, const ChaosDecomposition& d);
// sum_u l2q_inner(F_u, F_u) prod h_{u_i}: the orthogonal-sum form of Parseval.
QScalar chaos_norm2_orthogonal_sum(const ProcessModel& m, const ChaosDecomposition& d);
// h_k = <P_{k-1}, P_{k-1}>.
mpq_class yhat_norm2(const ProcessModel& m, int k);

// Simple process sum_i U_i chi_{I_i} with U_i a Wick element over atoms ending by a_i.
struct AdaptedProcess {
  std::vector<std::pair<Interval, FockVector>> pieces;
};

// Throws UsageError unless pieces are disjoint, grid aligned and adapted.
void check_adapted(const ProcessModel& m, const AdaptedProcess& U);

enum class Side { Left, Right };

// Left: sum_i W(U_i) X(I_i). Right: sum_i X(I_i) W(U_i).
FockOperator ito_integral(const ProcessModel& m, const AdaptedProcess& U, Side side);
// int <U(t), V(t)>_phi dt = sum_{i,j} |I_i cap J_j| <U_i, V_j>_q.
QScalar process_inner(const ProcessModel& m, const AdaptedProcess& U, const AdaptedProcess& V);

// sum_i Delta_2(I_i) W(Gamma_q(q) U_i).
FockOperator two_sided_integral(const ProcessModel& m, const AdaptedProcess& U);
// sum_i sum_{atoms A in I_i} X(A) W(U_i) X(A) over the model grid.
FockOperator two_sided_discrete(const ProcessModel& m, const AdaptedProcess& U);

// E_t[W(v)] = W(P_t v), with P_t keeping atoms inside [0,t).
FockVector conditional_expectation(const ProcessModel& m, const FockVector& v, const mpq_class& t);
// P_t applied to a vector.
FockVector project_before(const ProcessModel& m, const FockVector& v, const mpq_class& t);

// sum_i A^i (x) B^i with A^i, B^i simple adapted processes on a shared decomposition.
struct BiProcess {
  std::vector<Interval> pieces;
  // terms[j] lists the pairs (A_j^i, B_j^i) of Wick elements on piece j.
  std::vector<std::vector<std::pair<FockVector, FockVector>>> terms;
};

// sum_j sum_i W(A_j^i) X(I_j) W(B_j^i).
FockOperator biprocess_integral(const ProcessModel& m, const BiProcess& U);
// sum_j |I_j| sum_{i,i'} phi[B_i^* Gamma_q(q)(A_i^* A'_i') B'_i'].
QScalar biprocess_inner(const ProcessModel& m, const BiProcess& U, const BiProcess& V);

// (phi[X(I)X(J)X(I)X(J)Y_k(I)], phi[Y_k(I)X(I)X(J)X(I)X(J)]) by operator application.
std::pair<QScalar, QScalar> traciality_witness(const ProcessModel& m, const Interval& I, const Interval& J, int k);

// Substitutes a rational value for q in every coefficient.
FockVector substitute_q(const FockVector& v, const mpq_class& q0);

}  // namespace qfock

#endif  // QFOCK_STOCHASTIC_HPP
