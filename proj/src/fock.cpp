#include "qfock/fock.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <numeric>
#include <sstream>

namespace qfock {

// ---------------------------------------------------------------- Word

Word::Word(std::initializer_list<int> idx) : Word(std::vector<int>(idx)) {}

Word::Word(const std::vector<int>& idx) {
  if (idx.size() > static_cast<std::size_t>(kMaxWordLength)) throw DepthExceeded("word longer than the hard cap");
  len_ = static_cast<std::uint8_t>(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] > 0xFFFF) throw UsageError("word index out of range");
    idx_[i] = static_cast<std::uint16_t>(idx[i]);
  }
}

std::vector<int> Word::to_vector() const { return {idx_.begin(), idx_.begin() + len_}; }

Word Word::prepend(int i) const {
  if (len_ >= kMaxWordLength) throw DepthExceeded("word longer than the hard cap");
  Word w;
  w.len_ = static_cast<std::uint8_t>(len_ + 1);
  w.idx_[0] = static_cast<std::uint16_t>(i);
  std::copy(idx_.begin(), idx_.begin() + len_, w.idx_.begin() + 1);
  return w;
}

Word Word::append(int i) const {
  if (len_ >= kMaxWordLength) throw DepthExceeded("word longer than the hard cap");
  Word w = *this;
  w.idx_[w.len_++] = static_cast<std::uint16_t>(i);
  return w;
}

Word Word::erase(int pos) const {
  Word w;
  w.len_ = static_cast<std::uint8_t>(len_ - 1);
  std::copy(idx_.begin(), idx_.begin() + pos, w.idx_.begin());
  std::copy(idx_.begin() + pos + 1, idx_.begin() + len_, w.idx_.begin() + pos);
  return w;
}

Word Word::reversed() const {
  Word w = *this;
  std::reverse(w.idx_.begin(), w.idx_.begin() + len_);
  return w;
}

Word Word::concat(const Word& o) const {
  if (len_ + o.len_ > kMaxWordLength) throw DepthExceeded("word longer than the hard cap");
  Word w = *this;
  std::copy(o.idx_.begin(), o.idx_.begin() + o.len_, w.idx_.begin() + len_);
  w.len_ = static_cast<std::uint8_t>(len_ + o.len_);
  return w;
}

Word Word::sub(int from, int count) const {
  Word w;
  w.len_ = static_cast<std::uint8_t>(count);
  std::copy(idx_.begin() + from, idx_.begin() + from + count, w.idx_.begin());
  return w;
}

bool Word::operator==(const Word& o) const {
  return len_ == o.len_ && std::equal(idx_.begin(), idx_.begin() + len_, o.idx_.begin());
}

bool Word::operator<(const Word& o) const {
  if (len_ != o.len_) return len_ < o.len_;
  return std::lexicographical_compare(idx_.begin(), idx_.begin() + len_, o.idx_.begin(),
                                      o.idx_.begin() + o.len_);
}

std::size_t Word::hash() const {
  std::uint64_t h = 1469598103934665603ULL ^ len_;
  for (int i = 0; i < len_; ++i) {
    h ^= idx_[i];
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

std::vector<Word> all_words(int dim, int n) {
  std::vector<Word> out;
  std::vector<int> cur(n, 0);
  if (dim <= 0) {
    if (n == 0) out.emplace_back();
    return out;
  }
  for (;;) {
    out.emplace_back(cur);
    int i = n - 1;
    while (i >= 0 && cur[i] == dim - 1) cur[i--] = 0;
    if (i < 0) break;
    ++cur[i];
  }
  return out;
}

// ---------------------------------------------------------------- OneParticleVector

OneParticleVector OneParticleVector::basis(int i, QScalar c) {
  OneParticleVector v;
  v.add(i, c);
  return v;
}

void OneParticleVector::add(int i, const QScalar& c) {
  if (c.is_zero()) return;
  auto it = std::lower_bound(terms_.begin(), terms_.end(), i,
                             [](const auto& t, int k) { return t.first < k; });
  if (it != terms_.end() && it->first == i) {
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
  } else {
    terms_.insert(it, {i, c});
  }
}

QScalar OneParticleVector::coeff(int i) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), i,
                             [](const auto& t, int k) { return t.first < k; });
  if (it != terms_.end() && it->first == i) return it->second;
  return QScalar();
}

OneParticleVector& OneParticleVector::operator+=(const OneParticleVector& o) {
  for (const auto& [i, c] : o.terms_) add(i, c);
  return *this;
}

OneParticleVector& OneParticleVector::operator*=(const QScalar& c) {
  if (c.is_zero()) {
    terms_.clear();
    return *this;
  }
  for (auto& t : terms_) t.second *= c;
  std::erase_if(terms_, [](const auto& t) { return t.second.is_zero(); });
  return *this;
}

OneParticleVector OneParticleVector::operator-() const {
  OneParticleVector r = *this;
  for (auto& t : r.terms_) t.second = -t.second;
  return r;
}

// ---------------------------------------------------------------- OneParticleMatrix

OneParticleMatrix::OneParticleMatrix(int dim) : cols_(dim, OneParticleVector()), poison_(dim) {}

OneParticleMatrix OneParticleMatrix::identity(int dim) {
  OneParticleMatrix m(dim);
  for (int i = 0; i < dim; ++i) m.cols_[i] = OneParticleVector::basis(i);
  return m;
}

void OneParticleMatrix::set_column(int j, OneParticleVector col) {
  cols_.at(j) = std::move(col);
}

void OneParticleMatrix::poison_column(int j, std::string reason) {
  cols_.at(j).reset();
  poison_.at(j) = std::move(reason);
}

const OneParticleVector& OneParticleMatrix::column(int j) const {
  const auto& c = cols_.at(j);
  if (!c) throw CutoffExceeded(poison_[j]);
  return *c;
}

bool OneParticleMatrix::is_zero() const {
  return std::all_of(cols_.begin(), cols_.end(), [](const auto& c) { return c && c->is_zero(); });
}

OneParticleVector OneParticleMatrix::apply(const OneParticleVector& v) const {
  OneParticleVector out;
  for (const auto& [j, c] : v.terms()) {
    for (const auto& [i, t] : column(j).terms()) out.add(i, t * c);
  }
  return out;
}

OneParticleMatrix OneParticleMatrix::operator*(const QScalar& c) const {
  OneParticleMatrix m = *this;
  for (auto& col : m.cols_) {
    if (col) *col *= c;
  }
  return m;
}

OneParticleMatrix OneParticleMatrix::operator+(const OneParticleMatrix& o) const {
  if (o.dim() != dim()) throw UsageError("matrix dimension mismatch");
  OneParticleMatrix m = *this;
  for (int j = 0; j < dim(); ++j) {
    if (!m.cols_[j]) continue;
    if (!o.cols_[j]) {
      m.poison_column(j, o.poison_[j]);
      continue;
    }
    *m.cols_[j] += *o.cols_[j];
  }
  return m;
}

OneParticleMatrix OneParticleMatrix::transpose() const {
  OneParticleMatrix m(dim());
  std::vector<OneParticleVector> cols(dim());
  for (int j = 0; j < dim(); ++j) {
    for (const auto& [i, t] : column(j).terms()) cols[i].add(j, t);
  }
  for (int j = 0; j < dim(); ++j) m.cols_[j] = std::move(cols[j]);
  return m;
}

// ---------------------------------------------------------------- OneParticleSpace

OneParticleSpace::OneParticleSpace(int dim, std::vector<QScalar> gram)
    : dim_(dim), gram_(std::move(gram)), rows_(dim) {
  if (dim < 0 || gram_.size() != static_cast<std::size_t>(dim) * dim) {
    throw UsageError("gram matrix size does not match the dimension");
  }
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      if (this->gram(i, j) != this->gram(j, i)) throw UsageError("gram matrix is not symmetric");
      if (!this->gram(i, j).is_zero()) rows_[i].emplace_back(j, this->gram(i, j));
    }
  }
}

OneParticleSpace OneParticleSpace::orthonormal(int dim) {
  std::vector<QScalar> g(static_cast<std::size_t>(dim) * dim);
  for (int i = 0; i < dim; ++i) g[static_cast<std::size_t>(i) * dim + i] = QScalar(1);
  return OneParticleSpace(dim, std::move(g));
}

QScalar OneParticleSpace::pair(const OneParticleVector& u, const OneParticleVector& v) const {
  QScalar acc;
  for (const auto& [i, ui] : u.terms()) {
    for (const auto& [j, g] : rows_[i]) {
      QScalar vj = v.coeff(j);
      if (!vj.is_zero()) acc += ui * g * vj;
    }
  }
  return acc;
}

OneParticleVector OneParticleSpace::lower(const OneParticleVector& v) const {
  OneParticleVector out;
  for (const auto& [j, vj] : v.terms()) {
    for (const auto& [i, g] : rows_[j]) out.add(i, g * vj);
  }
  return out;
}

bool OneParticleSpace::is_positive_semidefinite(double tol) const {
  Eigen::MatrixXd g(dim_, dim_);
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) g(i, j) = gram(i, j).to_double();
  }
  if (dim_ == 0) return true;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
  if (ldlt.info() != Eigen::Success) return false;
  double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  return ldlt.vectorD().minCoeff() >= -tol * scale;
}

OneParticleMatrix OneParticleSpace::adjoint(const OneParticleMatrix& t) const {
  const int n = dim_;
  // Solve G X = T^t G exactly by Gauss-Jordan over the rationals.
  std::vector<std::vector<mpq_class>> a(n, std::vector<mpq_class>(2 * n, mpq_class(0)));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!gram(i, j).is_constant()) throw UsageError("adjoint requires a q-free exact gram");
      a[i][j] = gram(i, j).constant_term();
    }
  }
  // (T^t G)_{ij} = sum_k T_{ki} G_{kj}
  for (int i = 0; i < n; ++i) {
    for (const auto& [k, tki] : t.column(i).terms()) {
      if (!tki.is_constant()) throw UsageError("adjoint requires a q-free exact matrix");
      for (const auto& [j, g] : rows_[k]) a[i][n + j] += tki.constant_term() * g.constant_term();
    }
  }
  for (int c = 0; c < n; ++c) {
    int piv = -1;
    for (int r = c; r < n; ++r) {
      if (sgn(a[r][c]) != 0) {
        piv = r;
        break;
      }
    }
    if (piv < 0) throw DegeneracyError("gram matrix is singular; adjoint undefined");
    std::swap(a[c], a[piv]);
    mpq_class inv = 1 / a[c][c];
    for (auto& x : a[c]) x *= inv;
    for (int r = 0; r < n; ++r) {
      if (r == c || sgn(a[r][c]) == 0) continue;
      mpq_class f = a[r][c];
      for (int k = 0; k < 2 * n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  OneParticleMatrix out(n);
  for (int j = 0; j < n; ++j) {
    OneParticleVector col;
    for (int i = 0; i < n; ++i) col.add(i, QScalar(a[i][n + j]));
    out.set_column(j, std::move(col));
  }
  return out;
}

// ---------------------------------------------------------------- FockVector

FockVector FockVector::vacuum(QScalar c) { return basis(Word(), std::move(c)); }

FockVector FockVector::basis(const Word& w, QScalar c) {
  FockVector v;
  v.add(w, c);
  return v;
}

FockVector FockVector::tensor(const std::vector<OneParticleVector>& factors) {
  FockVector v = vacuum();
  for (auto it = factors.rbegin(); it != factors.rend(); ++it) {
    FockVector next;
    for (const auto& [w, c] : v.terms_) {
      for (const auto& [i, f] : it->terms()) next.add(w.prepend(i), f * c);
    }
    v = std::move(next);
  }
  return v;
}

void FockVector::add(const Word& w, const QScalar& c) {
  if (c.is_zero()) return;
  auto [it, inserted] = terms_.try_emplace(w, c);
  if (!inserted) {
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
  }
}

QScalar FockVector::coeff(const Word& w) const {
  auto it = terms_.find(w);
  return it == terms_.end() ? QScalar() : it->second;
}

int FockVector::top_degree() const {
  int d = -1;
  for (const auto& [w, c] : terms_) d = std::max(d, w.size());
  return d;
}

FockVector FockVector::degree_component(int n) const {
  FockVector out;
  for (const auto& [w, c] : terms_) {
    if (w.size() == n) out.terms_.emplace(w, c);
  }
  return out;
}

std::vector<std::pair<Word, QScalar>> FockVector::sorted_terms() const {
  std::vector<std::pair<Word, QScalar>> out(terms_.begin(), terms_.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

FockVector& FockVector::operator+=(const FockVector& o) {
  for (const auto& [w, c] : o.terms_) add(w, c);
  return *this;
}

FockVector& FockVector::operator-=(const FockVector& o) {
  for (const auto& [w, c] : o.terms_) add(w, -c);
  return *this;
}

FockVector& FockVector::operator*=(const QScalar& c) {
  if (c.is_zero()) {
    terms_.clear();
    return *this;
  }
  for (auto it = terms_.begin(); it != terms_.end();) {
    it->second *= c;
    if (it->second.is_zero()) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
  return *this;
}

void FockVector::axpy(const QScalar& c, const FockVector& o) {
  if (c.is_zero()) return;
  for (const auto& [w, x] : o.terms_) add(w, c * x);
}

FockVector FockVector::reversed() const {
  FockVector out;
  for (const auto& [w, c] : terms_) out.add(w.reversed(), c);
  return out;
}

bool FockVector::operator==(const FockVector& o) const {
  if (terms_.size() != o.terms_.size()) return false;
  for (const auto& [w, c] : terms_) {
    auto it = o.terms_.find(w);
    if (it == o.terms_.end() || it->second != c) return false;
  }
  return true;
}

std::string FockVector::serialize() const {
  std::string out;
  for (const auto& [w, c] : sorted_terms()) {
    out += c.to_string();
    out += " |";
    for (int i = 0; i < w.size(); ++i) {
      out += i ? "," : " ";
      out += std::to_string(w[i] + 1);
    }
    out += '\n';
  }
  return out;
}

FockVector FockVector::parse(const std::string& text) {
  FockVector v;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto bar = line.find('|');
    if (bar == std::string::npos) throw UsageError("fock vector line lacks '|': " + line);
    QScalar c = QScalar::parse(line.substr(0, bar));
    std::vector<int> idx;
    std::string rest = line.substr(bar + 1);
    std::istringstream items(rest);
    std::string item;
    while (std::getline(items, item, ',')) {
      auto b = item.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      auto e = item.find_last_not_of(" \t\r");
      std::string tok = item.substr(b, e - b + 1);
      if (tok.find_first_not_of("0123456789") != std::string::npos) {
        throw UsageError("malformed word index: " + tok);
      }
      int k = std::stoi(tok);
      if (k < 1) throw UsageError("word indices are 1-based");
      idx.push_back(k - 1);
    }
    v.add(Word(idx), c);
  }
  return v;
}

// ---------------------------------------------------------------- QMode

QMode QMode::pinned(double q0) {
  if (!(q0 > -1.0 && q0 < 1.0)) throw UsageError("pinned q must lie in (-1,1)");
  return {false, q0};
}

QScalar QMode::q() const { return exact ? QScalar::q() : QScalar::floating(q0, q0); }

QScalar QMode::one() const { return exact ? QScalar(1) : QScalar::floating(1.0, q0); }

QScalar QMode::embed(const QScalar& s) const {
  if (exact) {
    if (!s.is_exact()) throw UsageError("float scalar used in an exact Fock space");
    return s;
  }
  if (s.is_exact()) {
    if (!s.is_constant()) throw UsageError("q-dependent exact scalar used in a float Fock space");
    return QScalar::floating(s.to_double(), q0);
  }
  if (s.q0() != q0) throw UsageError("float scalar pinned at a different q0");
  return s;
}

// ---------------------------------------------------------------- FockSpace

FockSpace::FockSpace(OneParticleSpace sp, int depth, QMode mode)
    : sp_(std::make_shared<const OneParticleSpace>(std::move(sp))), depth_(depth), mode_(mode) {
  if (depth < 0 || depth > kMaxWordLength) throw UsageError("fock depth out of range");
}

FockSpace FockSpace::with_depth(int depth) const {
  FockSpace s = *this;
  if (depth < 0 || depth > kMaxWordLength) throw UsageError("fock depth out of range");
  s.depth_ = depth;
  return s;
}

namespace {

// c * q^k in the space's scalar mode.
inline QScalar qshift(const FockSpace& s, const QScalar& c, int k) {
  if (s.exact()) return c.times_q_power(static_cast<unsigned>(k));
  return s.mode().embed(c).times_q_power(static_cast<unsigned>(k));
}

}  // namespace

FockVector FockSpace::lower(const FockVector& v) const {
  FockVector out;
  std::vector<std::pair<Word, QScalar>> cur;
  std::vector<std::pair<Word, QScalar>> nxt;
  for (const auto& [w, c] : v.terms()) {
    cur.assign(1, {Word(), c});
    for (int p = 0; p < w.size(); ++p) {
      nxt.clear();
      const auto& row = sp_->row(w[p]);
      for (const auto& [pre, x] : cur) {
        for (const auto& [j, g] : row) nxt.emplace_back(pre.append(j), x * g);
      }
      std::swap(cur, nxt);
    }
    for (const auto& [x, c2] : cur) out.add(x, c2);
  }
  return out;
}

QScalar FockSpace::inner0(const FockVector& u, const FockVector& v) const {
  const FockVector& small = u.size() <= v.size() ? u : v;
  const FockVector& big = u.size() <= v.size() ? v : u;
  FockVector low = lower(small);
  QScalar acc;
  for (const auto& [w, c] : low.terms()) {
    auto it = big.terms().find(w);
    if (it != big.terms().end()) acc += c * it->second;
  }
  return acc;
}

FockVector FockSpace::apply_Pn(const FockVector& v) const {
  const int cap = exact() ? 7 : 9;
  FockVector out;
  std::vector<int> perm;
  for (const auto& [w, c] : v.terms()) {
    const int n = w.size();
    if (n > cap) throw ResourceError("apply_Pn: degree " + std::to_string(n) + " exceeds the Sym(n) cap");
    perm.resize(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      unsigned inv = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) inv += perm[i] > perm[j];
      }
      Word x;
      for (int i = 0; i < n; ++i) x = x.append(w[perm[i]]);
      out.add(x, qshift(*this, c, static_cast<int>(inv)));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return out;
}

namespace {

const FockVector& apply_P_word(const FockSpace& s, const Word& w,
                               std::unordered_map<Word, FockVector, WordHash>& memo) {
  auto it = memo.find(w);
  if (it != memo.end()) return it->second;
  FockVector out;
  if (w.size() <= 1) {
    out.add(w, s.mode().one());
  } else {
    for (int k = 0; k < w.size(); ++k) {
      // Copy: recursive inserts may rehash the memo.
      FockVector sub = apply_P_word(s, w.erase(k), memo);
      for (const auto& [x, c] : sub.terms()) out.add(x.prepend(w[k]), qshift(s, c, k));
    }
  }
  return memo.emplace(w, std::move(out)).first->second;
}

}  // namespace

FockVector FockSpace::apply_P(const FockVector& v) const {
  std::unordered_map<Word, FockVector, WordHash> memo;
  FockVector out;
  for (const auto& [w, c] : v.terms()) out.axpy(c, apply_P_word(*this, w, memo));
  return out;
}

QScalar FockSpace::innerq(const FockVector& u, const FockVector& v) const {
  // P is symmetric for the 0-inner product, so symmetrize the smaller side.
  if (u.size() <= v.size()) return inner0(apply_P(u), v);
  return inner0(u, apply_P(v));
}

QScalar FockSpace::vacuum_coeff(const FockVector& v) const { return v.coeff(Word()); }

FockVector FockSpace::gamma_q(const FockVector& v) const {
  FockVector out;
  for (const auto& [w, c] : v.terms()) out.add(w, qshift(*this, c, w.size()));
  return out;
}

FockVector FockSpace::project(const FockVector& v, const std::function<bool(int)>& keep) const {
  const int n = dim();
  std::vector<bool> kept(n);
  for (int i = 0; i < n; ++i) kept[i] = keep(i);
  for (int i = 0; i < n; ++i) {
    if (!kept[i]) continue;
    for (const auto& [j, g] : sp_->row(i)) {
      if (!kept[j]) throw UsageError("project: kept and dropped basis vectors are not orthogonal");
    }
  }
  FockVector out;
  for (const auto& [w, c] : v.terms()) {
    bool ok = true;
    for (int p = 0; p < w.size() && ok; ++p) ok = kept[w[p]];
    if (ok) out.add(w, c);
  }
  return out;
}

FockVector FockSpace::apply(const FockOperator& op, const FockVector& v) const { return op.apply(*this, v); }

// ---------------------------------------------------------------- operator nodes

FockOperator FockOperator::Node::adjoint(const FockSpace&) const {
  throw UsageError("operator has no adjoint");
}

namespace {

void check_room(const FockSpace& s, const Word& w) {
  if (w.size() >= s.depth()) {
    throw DepthExceeded("creation on a word of length " + std::to_string(w.size()) + " at depth " +
                        std::to_string(s.depth()));
  }
}

// Dense view of <zeta, e_i> for annihilation.
std::vector<QScalar> pairing_table(const FockSpace& s, const OneParticleVector& zeta) {
  std::vector<QScalar> tab(s.dim());
  const OneParticleVector low = s.one_particle().lower(zeta);
  for (const auto& [i, c] : low.terms()) tab[i] = c;
  return tab;
}

void add_annihilation(const FockSpace& s, const std::vector<QScalar>& tab, const Word& w,
                      const QScalar& c, FockVector& out) {
  for (int k = 0; k < w.size(); ++k) {
    const QScalar& a = tab[w[k]];
    if (!a.is_zero()) out.add(w.erase(k), qshift(s, a * c, k));
  }
}

void add_gauge(const FockSpace& s, const OneParticleMatrix& t, const Word& w, const QScalar& c,
               FockVector& out) {
  for (int k = 0; k < w.size(); ++k) {
    const auto& col = t.column(w[k]);
    if (col.is_zero()) continue;
    Word rest = w.erase(k);
    QScalar ck = qshift(s, c, k);
    for (const auto& [i, x] : col.terms()) out.add(rest.prepend(i), x * ck);
  }
}

class ScalarNode : public FockOperator::Node {
 public:
  explicit ScalarNode(QScalar c) : c_(std::move(c)) {}
  FockVector apply(const FockSpace& s, const FockVector& v) const override {
    return s.mode().embed(c_) * v;
  }
  int raise() const override { return 0; }
  int lower() const override { return 0; }
  FockOperator adjoint(const FockSpace&) const override { return FockOperator::scalar(c_); }

 private:
  QScalar c_;
};

class CreationNode : public FockOperator::Node {
 public:
  explicit CreationNode(OneParticleVector z) : z_(std::move(z)) {}
  FockVector apply(const FockSpace& s, const FockVector& v) const override {
    FockVector out;
    if (z_.is_zero()) return out;
    for (const auto& [w, c] : v.terms()) {
      check_room(s, w);
      for (const auto& [i, x] : z_.terms()) out.add(w.prepend(i), x * c);
    }
    return out;
  }
  int raise() const override { return 1; }
  int lower() const override { return 0; }
  FockOperator adjoint(const FockSpace&) const override { return FockOperator::annihilation(z_); }

 private:
  OneParticleVector z_;
};

class AnnihilationNode : public FockOperator::Node {
 public:
  explicit AnnihilationNode(OneParticleVector z) : z_(std::move(z)) {}
  FockVector apply(const FockSpace& s, const FockVector& v) const override {
    FockVector out;
    auto tab = pairing_table(s, z_);
    for (const auto& [w, c] : v.terms()) add_annihilation(s, tab, w, c, out);
    return out;
  }
  int raise() const override { return 0; }
  int lower() const override { return 1; }
  FockOperator adjoint(const FockSpace&) const override { return FockOperator::creation(z_); }

 private:
  OneParticleVector z_;
};

class GaugeNode : public FockOperator::Node {
 public:
  explicit GaugeNode(OneParticleMatrix t) : t_(std::move(t)) {}
  FockVector apply(const FockSpace& s, const FockVector& v) const override {
    FockVector out;
    for (const auto& [w, c] : v.terms()) add_gauge(s, t_, w, c, out);
    return out;
  }
  int raise() const override { return 0; }
  int lower() const override { return 0; }
  FockOperator adjoint(const FockSpace& s) const override {
    return FockOperator::gauge(s.one_particle().adjoint(t_));
  }

 private:
  OneParticleMatrix t_;
};

class FieldNode : public FockOperator::Node {
 public:
  FieldNode(OneParticleVector z, OneParticleMatrix t, QScalar m)
      : z_(std::move(z)), t_(std::move(t)), m_(std::move(m)) {}
  FockVector apply(const FockSpace& s, const FockVector& v) const override {
    FockVector out;
    auto tab = pairing_table(s, z_);
    QScalar m = s.mode().embed(m_);
    const bool has_t = t_.dim() > 0;
    for (const auto& [w, c] : v.terms()) {
      if (!z_.is_zero()) {
        check_room(s, w);
        for (const auto& [i, x] : z_.terms()) out.add(w.prepend(i), x * c);
        add_annihilation(s, tab, w, c, out);
      }
      if (has_t) add_gauge(s, t_, w, c, out);
      if (!m.is_zero()) out.add(w, m * c);
    }
    return out;
  }
  int raise() const override { return z_.is_zero() ? 0 : 1; }
  int lower() const override { return z_.is_zero() ? 0 : 1; }
  FockOperator adjoint(const FockSpace& s) const override {
    OneParticleMatrix ta = t_.dim() > 0 ? s.one_particle().adjoint(t_) : t_;
    return field_operator(z_, ta, m_);
  }

 private:
  OneParticleVector z_;
  OneParticleMatrix t_;
  QScalar m_;
};

class SumNode : public FockOperator::Node {
 public:
  std::vector<std::pair<QScalar, FockOperator>> terms;
  FockVector apply(const FockSpace& s, const FockVector& v) const override {
    FockVector out;
    for (const auto& [c, op] : terms) out.axpy(s.mode().embed(c), op.apply(s, v));
    return out;
  }
  int raise() const override {
    int r = 0;
    for (const auto& t : terms) r = std::max(r, t.second.raise());
    return r;
  }
  int lower() const override {
    int r = 0;
    for (const auto& t : terms) r = std::max(r, t.second.lower());
    return r;
  }
  FockOperator adjoint(const FockSpace& s) const override {
    auto n = std::make_shared<SumNode>();
    for (const auto& [c, op] : terms) n->terms.emplace_back(c, op.adjoint(s));
    return FockOperator(n);
  }
};

class CompositionNode : public FockOperator::Node {
 public:
  std::vector<FockOperator> factors;  // leftmost applied last
  FockVector apply(const FockSpace& s, const FockVector& v) const override {
    FockVector cur = v;
    for (auto it = factors.rbegin(); it != factors.rend(); ++it) {
      if (cur.is_zero()) break;
      cur = it->apply(s, cur);
    }
    return cur;
  }
  int raise() const override {
    int r = 0;
    for (const auto& f : factors) r += f.raise();
    return r;
  }
  int lower() const override {
    int r = 0;
    for (const auto& f : factors) r += f.lower();
    return r;
  }
  FockOperator adjoint(const FockSpace& s) const override {
    auto n = std::make_shared<CompositionNode>();
    for (auto it = factors.rbegin(); it != factors.rend(); ++it) n->factors.push_back(it->adjoint(s));
    return FockOperator(n);
  }
};

}  // namespace

FockOperator::FockOperator() : node_(std::make_shared<SumNode>()) {}

FockOperator FockOperator::zero() { return FockOperator(); }
FockOperator FockOperator::identity() { return scalar(QScalar(1)); }
FockOperator FockOperator::scalar(const QScalar& c) { return FockOperator(std::make_shared<ScalarNode>(c)); }
FockOperator FockOperator::creation(OneParticleVector zeta) {
  return FockOperator(std::make_shared<CreationNode>(std::move(zeta)));
}
FockOperator FockOperator::annihilation(OneParticleVector zeta) {
  return FockOperator(std::make_shared<AnnihilationNode>(std::move(zeta)));
}
FockOperator FockOperator::gauge(OneParticleMatrix t) { return FockOperator(std::make_shared<GaugeNode>(std::move(t))); }

FockOperator field_operator(OneParticleVector zeta, OneParticleMatrix t, QScalar mean) {
  return FockOperator(std::make_shared<FieldNode>(std::move(zeta), std::move(t), std::move(mean)));
}

namespace {

void append_terms(SumNode& n, const QScalar& c, const FockOperator& op) {
  if (const auto* s = dynamic_cast<const SumNode*>(&op.node())) {
    for (const auto& [c2, op2] : s->terms) n.terms.emplace_back(c * c2, op2);
  } else {
    n.terms.emplace_back(c, op);
  }
}

}  // namespace

FockOperator operator+(const FockOperator& a, const FockOperator& b) {
  auto n = std::make_shared<SumNode>();
  append_terms(*n, QScalar(1), a);
  append_terms(*n, QScalar(1), b);
  return FockOperator(n);
}

FockOperator operator-(const FockOperator& a, const FockOperator& b) {
  auto n = std::make_shared<SumNode>();
  append_terms(*n, QScalar(1), a);
  append_terms(*n, QScalar(-1), b);
  return FockOperator(n);
}

FockOperator operator*(const QScalar& c, const FockOperator& a) {
  auto n = std::make_shared<SumNode>();
  append_terms(*n, c, a);
  return FockOperator(n);
}

FockOperator operator*(const FockOperator& a, const FockOperator& b) {
  auto n = std::make_shared<CompositionNode>();
  for (const FockOperator* f : {&a, &b}) {
    if (const auto* c = dynamic_cast<const CompositionNode*>(&f->node())) {
      n->factors.insert(n->factors.end(), c->factors.begin(), c->factors.end());
    } else {
      n->factors.push_back(*f);
    }
  }
  return FockOperator(n);
}

// ---------------------------------------------------------------- norm estimate

namespace {

double largest_singular_value(const Eigen::MatrixXd& a, const Eigen::MatrixXd& g) {
  const auto n = g.rows();
  if (n == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g, Eigen::EigenvaluesOnly);
  double lo = eig.eigenvalues().minCoeff();
  double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 1e-12 * std::max(1.0, hi))) {
    std::ostringstream os;
    os << "q-Gram numerically singular: eigenvalues in [" << lo << ", " << hi << "]";
    throw ResourceError(os.str());
  }
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) throw ResourceError("q-Gram Cholesky factorization failed");
  Eigen::MatrixXd l = llt.matrixL();
  // ||v||_q = ||L^t x||, so the operator is L^t A L^{-t} in orthonormal coordinates.
  Eigen::MatrixXd linv_t =
      l.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd m = l.transpose() * a * linv_t;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

}  // namespace

double operator_norm_estimate(const FockSpace& space, const FockOperator& op, int depth) {
  if (space.exact()) throw UsageError("operator_norm_estimate requires a float-mode space");
  if (depth < 0 || depth > 8) throw UsageError("operator_norm_estimate: depth must be in [0, 8]");
  const int dim = space.dim();
  std::vector<Word> basis;
  std::vector<int> offset;
  for (int k = 0; k <= depth; ++k) {
    offset.push_back(static_cast<int>(basis.size()));
    auto words = all_words(dim, k);
    basis.insert(basis.end(), words.begin(), words.end());
    if (basis.size() > 6000) throw ResourceError("operator_norm_estimate: truncated basis too large");
  }
  offset.push_back(static_cast<int>(basis.size()));
  std::unordered_map<Word, int, WordHash> index;
  for (std::size_t i = 0; i < basis.size(); ++i) index.emplace(basis[i], static_cast<int>(i));

  const auto n = static_cast<Eigen::Index>(basis.size());
  const FockSpace big = space.with_depth(std::min(kMaxWordLength, depth + std::max(0, op.raise())));
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    FockVector e = FockVector::basis(basis[j], space.mode().one());
    const FockVector image = big.apply(op, e);
    for (const auto& [x, c] : image.terms()) {
      if (x.size() <= depth) a(index.at(x), j) = c.to_double();
    }
    const FockVector gram_col = space.lower(space.apply_P(e));
    for (const auto& [x, c] : gram_col.terms()) g(index.at(x), j) = c.to_double();
  }
  if (op.raise() == 0 && op.lower() == 0) {
    double best = 0.0;
    for (int k = 0; k <= depth; ++k) {
      const int o = offset[k];
      const int len = offset[k + 1] - offset[k];
      best = std::max(best, largest_singular_value(a.block(o, o, len, len), g.block(o, o, len, len)));
    }
    return best;
  }
  return largest_singular_value(a, g);
}

}  // namespace qfock
