#include "qfock/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace qfock {

// ---------------------------------------------------------------- MomentSequence

MomentSequence MomentSequence::explicit_moments(std::vector<mpq_class> r) {
  MomentSequence m;
  for (auto& x : r) x.canonicalize();
  m.r_ = std::move(r);
  return m;
}

MomentSequence MomentSequence::from_atoms(const std::vector<std::pair<mpq_class, mpq_class>>& atoms, int K) {
  if (atoms.empty()) throw UsageError("atomic measure needs at least one atom");
  for (const auto& [x, w] : atoms) {
    if (sgn(w) <= 0) throw UsageError("atomic measure weights must be positive");
  }
  std::vector<mpq_class> r(std::max(K, 0), mpq_class(0));
  for (int k = 2; k <= K; ++k) {
    mpq_class s = 0;
    for (const auto& [x, w] : atoms) {
      mpq_class p = 1;
      for (int i = 0; i < k - 2; ++i) p *= x;
      s += w * p;
    }
    r[k - 1] = s;
  }
  return explicit_moments(std::move(r));
}

MomentSequence MomentSequence::gaussian(int K) {
  std::vector<mpq_class> r(K, mpq_class(0));
  if (K >= 2) r[1] = 1;
  return explicit_moments(std::move(r));
}

MomentSequence MomentSequence::poisson(int K) {
  std::vector<mpq_class> r(K, mpq_class(1));
  if (K >= 1) r[0] = 0;
  return explicit_moments(std::move(r));
}

const mpq_class& MomentSequence::r(int k) const {
  if (!has(k)) throw UsageError("moment r_" + std::to_string(k) + " is not available");
  return r_[k - 1];
}

MomentSequence MomentSequence::scaled(const mpq_class& t) const {
  MomentSequence m = *this;
  for (auto& x : m.r_) x *= t;
  return m;
}

std::vector<mpq_class> MomentSequence::monic_orthogonal(int k) const {
  if (k < 0) throw UsageError("orthogonal polynomial degree must be nonnegative");
  std::vector<mpq_class> c(k + 1, mpq_class(0));
  c[k] = 1;
  if (k == 0) return c;
  // sum_j c_j r_{i+j+2} = -r_{i+k+2}, 0 <= i < k.
  std::vector<std::vector<mpq_class>> a(k, std::vector<mpq_class>(k + 1));
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) a[i][j] = r(i + j + 2);
    a[i][k] = -r(i + k + 2);
  }
  for (int col = 0; col < k; ++col) {
    int piv = -1;
    for (int row = col; row < k; ++row) {
      if (sgn(a[row][col]) != 0) {
        piv = row;
        break;
      }
    }
    if (piv < 0) {
      throw DegeneracyError("Hankel matrix singular at order " + std::to_string(k) +
                            ": nu has too few support points for P_" + std::to_string(k));
    }
    std::swap(a[col], a[piv]);
    mpq_class inv = 1 / a[col][col];
    for (auto& x : a[col]) x *= inv;
    for (int row = 0; row < k; ++row) {
      if (row == col || sgn(a[row][col]) == 0) continue;
      mpq_class f = a[row][col];
      for (int j = col; j <= k; ++j) a[row][j] -= f * a[col][j];
    }
  }
  for (int j = 0; j < k; ++j) c[j] = a[j][k];
  return c;
}

mpq_class MomentSequence::monic_norm2(int k) const {
  auto c = monic_orthogonal(k);
  // <P_k, P_k> = <P_k, x^k> by orthogonality.
  mpq_class s = 0;
  for (int j = 0; j <= k; ++j) s += c[j] * r(j + k + 2);
  return s;
}

bool MomentSequence::hankel_psd(int m) const {
  Eigen::MatrixXd h(m + 1, m + 1);
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= m; ++j) h(i, j) = r(i + j + 2).get_d();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff());
}

// ---------------------------------------------------------------- TimeGrid

TimeGrid::TimeGrid(std::vector<mpq_class> boundaries) : b_(std::move(boundaries)) {
  if (b_.size() < 2) throw UsageError("time grid needs at least one atom");
  if (sgn(b_[0]) != 0) throw UsageError("time grid must start at 0");
  for (std::size_t i = 0; i + 1 < b_.size(); ++i) {
    if (!(b_[i] < b_[i + 1])) throw UsageError("time grid boundaries must increase strictly");
  }
}

TimeGrid TimeGrid::uniform(const mpq_class& T, int N) {
  if (N < 1) throw UsageError("uniform grid needs N >= 1");
  if (sgn(T) <= 0) throw UsageError("uniform grid needs T > 0");
  std::vector<mpq_class> b;
  for (int i = 0; i <= N; ++i) {
    mpq_class x = T * i / N;
    x.canonicalize();
    b.push_back(x);
  }
  return TimeGrid(std::move(b));
}

mpq_class TimeGrid::mesh() const {
  mpq_class m = 0;
  for (int i = 0; i < size(); ++i) m = std::max(m, width(i));
  return m;
}

int TimeGrid::boundary_index(const mpq_class& t) const {
  auto it = std::lower_bound(b_.begin(), b_.end(), t);
  if (it == b_.end() || *it != t) throw UsageError("time " + t.get_str() + " is not a grid boundary");
  return static_cast<int>(it - b_.begin());
}

std::vector<int> TimeGrid::atoms_in(const Interval& I) const {
  if (I.b < I.a) throw UsageError("interval has negative length");
  int i = boundary_index(I.a);
  int j = boundary_index(I.b);
  std::vector<int> out;
  for (int k = i; k < j; ++k) out.push_back(k);
  return out;
}

// ---------------------------------------------------------------- LetterAlgebra

OneParticleVector LetterAlgebra::product(const OneParticleVector& a, const OneParticleVector& b) const {
  OneParticleVector out;
  for (const auto& [i, x] : a.terms()) {
    for (const auto& [j, y] : b.terms()) {
      auto p = basis_product(i, j);
      if (!p) throw CutoffExceeded("product " + basis_label(i) + " * " + basis_label(j));
      for (const auto& [k, z] : p->terms()) out.add(k, x * y * z);
    }
  }
  return out;
}

QScalar LetterAlgebra::mean(const OneParticleVector& a) const {
  QScalar s;
  for (const auto& [i, x] : a.terms()) s += x * basis_mean(i);
  return s;
}

OneParticleMatrix LetterAlgebra::multiplication(const OneParticleVector& a) const {
  OneParticleMatrix m(dim());
  for (int j = 0; j < dim(); ++j) {
    OneParticleVector col;
    bool overflow = false;
    std::string what;
    for (const auto& [i, x] : a.terms()) {
      auto p = basis_product(i, j);
      if (!p) {
        overflow = true;
        what = "gauge of " + basis_label(i) + " on " + basis_label(j);
        break;
      }
      for (const auto& [k, z] : p->terms()) col.add(k, x * z);
    }
    if (overflow) {
      m.poison_column(j, what);
    } else {
      m.set_column(j, std::move(col));
    }
  }
  return m;
}

Letter LetterAlgebra::letter(const OneParticleVector& a) const { return {a, multiplication(a), mean(a)}; }

namespace {

class SelfAdjointField : public FockOperator::Node, public std::enable_shared_from_this<SelfAdjointField> {
 public:
  explicit SelfAdjointField(FockOperator op) : op_(std::move(op)) {}
  FockVector apply(const FockSpace& s, const FockVector& v) const override { return op_.apply(s, v); }
  int raise() const override { return op_.raise(); }
  int lower() const override { return op_.lower(); }
  // Multiplication operators are symmetric for the state, so X(l) is its own adjoint
  // even when the gram is singular or the gauge has poisoned columns.
  FockOperator adjoint(const FockSpace&) const override { return FockOperator(shared_from_this()); }

 private:
  FockOperator op_;
};

}  // namespace

FockOperator field(const Letter& l) {
  return FockOperator(std::make_shared<SelfAdjointField>(field_operator(l.xi, l.gauge, l.mean)));
}

// ---------------------------------------------------------------- BodyAlgebra

namespace {

OneParticleSpace body_space(const MomentSequence& r, const TimeGrid& grid, int d) {
  if (d < 1) throw UsageError("degree cutoff must be >= 1");
  if (!r.has(2 * d)) {
    throw UsageError("moments up to r_" + std::to_string(2 * d) + " are needed for degree cutoff " +
                     std::to_string(d));
  }
  const int n = grid.size() * d;
  std::vector<QScalar> g(static_cast<std::size_t>(n) * n);
  for (int a = 0; a < grid.size(); ++a) {
    for (int j = 1; j <= d; ++j) {
      for (int k = 1; k <= d; ++k) {
        g[static_cast<std::size_t>(a * d + j - 1) * n + (a * d + k - 1)] = QScalar(grid.width(a) * r.r(j + k));
      }
    }
  }
  return OneParticleSpace(n, std::move(g));
}

}  // namespace

BodyAlgebra::BodyAlgebra(const MomentSequence& r, const TimeGrid& grid, int cutoff)
    : LetterAlgebra(body_space(r, grid, cutoff)), d_(cutoff) {}

std::optional<OneParticleVector> BodyAlgebra::basis_product(int i, int j) const {
  if (atom_of(i) != atom_of(j)) return OneParticleVector();
  int k = power_of(i) + power_of(j);
  if (k > d_) return std::nullopt;
  return OneParticleVector::basis(index(atom_of(i), k));
}

std::string BodyAlgebra::basis_label(int i) const {
  return "e(A" + std::to_string(atom_of(i) + 1) + "," + std::to_string(power_of(i)) + ")";
}

// ---------------------------------------------------------------- AppendixAlgebra

namespace {

OneParticleSpace appendix_space(const std::vector<mpq_class>& points, const std::vector<mpq_class>& weights,
                                const TimeGrid& grid) {
  if (points.empty() || points.size() != weights.size()) {
    throw UsageError("appendix algebra needs matching points and weights");
  }
  mpq_class total = 0;
  for (const auto& w : weights) {
    if (sgn(w) <= 0) throw UsageError("appendix weights must be positive");
    total += w;
  }
  if (total != 1) throw UsageError("appendix weights must sum to 1");
  const int p = static_cast<int>(points.size());
  const int n = grid.size() * p;
  std::vector<QScalar> g(static_cast<std::size_t>(n) * n);
  for (int a = 0; a < grid.size(); ++a)
    for (int i = 0; i < p; ++i) g[static_cast<std::size_t>(a * p + i) * n + (a * p + i)] = QScalar(grid.width(a) * weights[i]);
  return OneParticleSpace(n, std::move(g));
}

}  // namespace

AppendixAlgebra::AppendixAlgebra(std::vector<mpq_class> points, std::vector<mpq_class> weights)
    : AppendixAlgebra(std::move(points), std::move(weights), TimeGrid::uniform(1, 1)) {}

AppendixAlgebra::AppendixAlgebra(std::vector<mpq_class> points, std::vector<mpq_class> weights, const TimeGrid& grid)
    : LetterAlgebra(appendix_space(points, weights, grid)), points_(std::move(points)), weights_(std::move(weights)) {
  for (int a = 0; a < grid.size(); ++a) atom_len_.push_back(grid.width(a));
}

std::optional<OneParticleVector> AppendixAlgebra::basis_product(int i, int j) const {
  if (i != j) return OneParticleVector();
  return OneParticleVector::basis(i);
}

QScalar AppendixAlgebra::basis_mean(int i) const { return QScalar(atom_len_[atom_of(i)] * weights_[point_of(i)]); }

std::string AppendixAlgebra::basis_label(int i) const {
  return "1(A" + std::to_string(atom_of(i) + 1) + ",x=" + points_[point_of(i)].get_str() + ")";
}

// ---------------------------------------------------------------- config

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_brackets(const std::string& text, char open, char close) {
  std::string t = trim(text);
  if (t.size() < 2 || t.front() != open || t.back() != close) {
    throw UsageError(std::string("expected ") + open + "..." + close + ": " + text);
  }
  return t.substr(1, t.size() - 2);
}

}  // namespace

ConfigMap parse_config(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + " lacks '='");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError("config line " + std::to_string(lineno) + " has an empty key");
    out[key] = value;
  }
  return out;
}

ConfigMap load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<mpq_class> parse_rational_list(const std::string& text) {
  std::string body = strip_brackets(text, '[', ']');
  std::vector<mpq_class> out;
  if (trim(body).empty()) return out;
  std::istringstream in(body);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_rational(item));
  return out;
}

std::vector<std::pair<mpq_class, mpq_class>> parse_pair_list(const std::string& text) {
  std::string body = trim(strip_brackets(text, '[', ']'));
  std::vector<std::pair<mpq_class, mpq_class>> out;
  std::size_t i = 0;
  while (i < body.size()) {
    auto open = body.find('(', i);
    if (open == std::string::npos) {
      if (!trim(body.substr(i)).empty()) throw UsageError("malformed pair list: " + text);
      break;
    }
    if (!trim(body.substr(i, open - i)).empty() && trim(body.substr(i, open - i)) != ",") {
      throw UsageError("malformed pair list: " + text);
    }
    auto close = body.find(')', open);
    if (close == std::string::npos) throw UsageError("malformed pair list: " + text);
    std::string inner = body.substr(open + 1, close - open - 1);
    auto comma = inner.find(',');
    if (comma == std::string::npos) throw UsageError("pair needs two entries: (" + inner + ")");
    out.emplace_back(parse_rational(inner.substr(0, comma)), parse_rational(inner.substr(comma + 1)));
    i = close + 1;
  }
  return out;
}

TimeGrid parse_grid(const std::string& text) {
  std::string t = trim(text);
  if (t.rfind("uniform", 0) == 0) {
    std::string args = strip_brackets(t.substr(7), '(', ')');
    auto comma = args.find(',');
    if (comma == std::string::npos) throw UsageError("uniform grid needs (T, N)");
    mpq_class T = parse_rational(args.substr(0, comma));
    std::string n = trim(args.substr(comma + 1));
    if (n.empty() || n.find_first_not_of("0123456789") != std::string::npos) {
      throw UsageError("uniform grid N must be a positive integer");
    }
    return TimeGrid::uniform(T, std::stoi(n));
  }
  return TimeGrid(parse_rational_list(t));
}

// ---------------------------------------------------------------- ProcessModel

ProcessModel::ProcessModel(QMode mode, MomentSequence moments, TimeGrid grid, int degree_cutoff, int fock_depth)
    : kind_(Kind::Body), moments_(std::move(moments)), grid_(std::move(grid)), cutoff_(degree_cutoff) {
  auto alg = std::make_shared<const BodyAlgebra>(moments_, grid_, cutoff_);
  space_ = std::make_shared<const FockSpace>(alg->space(), fock_depth, mode);
  algebra_ = alg;
}

ProcessModel ProcessModel::appendix(QMode mode, std::vector<mpq_class> points, std::vector<mpq_class> weights,
                                    TimeGrid grid, int fock_depth) {
  ProcessModel m;
  m.kind_ = Kind::Appendix;
  m.grid_ = std::move(grid);
  // r_k = sum w x^k: the k-th cumulant rate of the compound Poisson process.
  const int K = 2 * kMaxWordLength + 2;
  std::vector<mpq_class> r(K);
  for (int k = 1; k <= K; ++k) {
    mpq_class s = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      mpq_class p = 1;
      for (int e = 0; e < k; ++e) p *= points[i];
      s += weights[i] * p;
    }
    r[k - 1] = s;
  }
  m.moments_ = MomentSequence::explicit_moments(std::move(r));
  m.cutoff_ = K;
  auto alg = std::make_shared<const AppendixAlgebra>(std::move(points), std::move(weights), m.grid_);
  m.space_ = std::make_shared<const FockSpace>(alg->space(), fock_depth, mode);
  m.algebra_ = alg;
  return m;
}

ProcessModel ProcessModel::with_depth(int depth) const {
  ProcessModel m = *this;
  m.space_ = std::make_shared<const FockSpace>(space_->with_depth(depth));
  return m;
}

ProcessModel ProcessModel::from_config(const ConfigMap& cfg) {
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    auto it = cfg.find(key);
    if (it == cfg.end()) return std::nullopt;
    return it->second;
  };
  auto get_int = [&](const std::string& key, int fallback) {
    auto v = get(key);
    if (!v) return fallback;
    if (v->empty() || v->find_first_not_of("0123456789") != std::string::npos) {
      throw UsageError("config key " + key + " must be a nonnegative integer");
    }
    return std::stoi(*v);
  };

  QMode mode = QMode::formal();
  if (auto q = get("q"); q && *q != "exact") mode = QMode::pinned(parse_rational(*q).get_d());
  TimeGrid grid = TimeGrid::uniform(1, 1);
  if (auto g = get("grid")) grid = parse_grid(*g);
  const int depth = get_int("fock_depth", 6);
  const std::string kind = get("kind").value_or("body");

  std::optional<std::vector<std::pair<mpq_class, mpq_class>>> atoms;
  if (auto a = get("nu.atoms")) atoms = parse_pair_list(*a);

  if (kind == "appendix") {
    if (!atoms) throw UsageError("appendix model needs nu.atoms = [(x, w), ...]");
    std::vector<mpq_class> pts;
    std::vector<mpq_class> wts;
    for (const auto& [x, w] : *atoms) {
      pts.push_back(x);
      wts.push_back(w);
    }
    return appendix(mode, std::move(pts), std::move(wts), std::move(grid), depth);
  }
  if (kind != "body") throw UsageError("config kind must be body or appendix");

  const int cutoff = get_int("degree_cutoff", 4);
  std::optional<MomentSequence> moments;
  if (auto m = get("moments")) moments = MomentSequence::explicit_moments(parse_rational_list(*m));
  if (atoms) {
    const int K = std::max(2 * cutoff, moments ? moments->size() : 0);
    auto derived = MomentSequence::from_atoms(*atoms, K);
    if (moments) {
      for (int k = 1; k <= moments->size(); ++k) {
        if (moments->r(k) != derived.r(k)) {
          throw UsageError("moments and nu.atoms disagree at r_" + std::to_string(k));
        }
      }
    }
    moments = derived;
  }
  if (!moments) throw UsageError("body model needs moments = [...] or nu.atoms = [...]");
  if (moments->has(1) && sgn(moments->r(1)) != 0) throw UsageError("body model requires r_1 = 0");
  return ProcessModel(mode, std::move(*moments), std::move(grid), cutoff, depth);
}

OneParticleVector ProcessModel::interval_vector(const Interval& I, int k) const {
  OneParticleVector v;
  if (kind_ == Kind::Body) {
    if (k < 1 || k > cutoff_) throw UsageError("power " + std::to_string(k) + " outside 1..degree_cutoff");
    const auto& alg = static_cast<const BodyAlgebra&>(*algebra_);
    for (int a : grid_.atoms_in(I)) v.add(alg.index(a, k), QScalar(1));
    return v;
  }
  if (k < 1) throw UsageError("power must be >= 1");
  const auto& alg = static_cast<const AppendixAlgebra&>(*algebra_);
  for (int a : grid_.atoms_in(I)) {
    for (int i = 0; i < alg.npoints(); ++i) {
      mpq_class p = 1;
      for (int e = 0; e < k; ++e) p *= alg.points()[i];
      v.add(alg.index(a, i), QScalar(p));
    }
  }
  return v;
}

int ProcessModel::atom_of_basis(int i) const {
  if (kind_ == Kind::Body) return static_cast<const BodyAlgebra&>(*algebra_).atom_of(i);
  return static_cast<const AppendixAlgebra&>(*algebra_).atom_of(i);
}

Letter ProcessModel::letter_of_interval_power(const Interval& I, int k) const {
  return algebra_->letter(interval_vector(I, k));
}

OneParticleVector ProcessModel::yhat_vector(const Interval& I, int k) const {
  if (kind_ != Kind::Body) throw UsageError("Yhat is defined for body models only");
  if (k < 1) throw UsageError("Yhat index must be >= 1");
  auto c = moments_.monic_orthogonal(k - 1);
  OneParticleVector v;
  for (int j = 0; j < k; ++j) {
    if (sgn(c[j]) == 0) continue;
    v += QScalar(c[j]) * interval_vector(I, j + 1);
  }
  return v;
}

FockOperator ProcessModel::X(const Interval& I) const { return Delta(I, 1); }

FockOperator ProcessModel::Y(const Interval& I, int k) const {
  Letter l = letter_of_interval_power(I, k);
  l.mean = QScalar();
  return field(l);
}

FockOperator ProcessModel::Delta(const Interval& I, int k) const {
  Letter l = letter_of_interval_power(I, k);
  if (kind_ == Kind::Body) l.mean = QScalar(I.length() * moments_.r(k));
  return field(l);
}

FockOperator ProcessModel::Yhat(const Interval& I, int k) const {
  Letter l = algebra_->letter(yhat_vector(I, k));
  l.mean = QScalar();
  return field(l);
}

}  // namespace qfock
