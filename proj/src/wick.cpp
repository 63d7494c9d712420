#include "qfock/wick.hpp"

#include <sstream>
#include <unordered_map>

namespace qfock {

namespace {

QScalar qweight(const FockSpace& s, const QScalar& c, int k) {
  return s.mode().embed(c).times_q_power(static_cast<unsigned>(k));
}

// X(e_b) v = a*(e_b) v + a(e_b) v + p(e_b) v + mean(e_b) v.
FockVector apply_basis_field(const FockSpace& s, const LetterAlgebra& alg, int b, const FockVector& v) {
  FockVector out;
  const QScalar mean = s.mode().embed(alg.basis_mean(b));
  const auto& grow = s.one_particle().row(b);
  for (const auto& [w, c] : v.terms()) {
    if (w.size() >= s.depth()) {
      throw DepthExceeded("Wick creation on a word of length " + std::to_string(w.size()) + " at depth " +
                          std::to_string(s.depth()));
    }
    out.add(w.prepend(b), c);
    for (int k = 0; k < w.size(); ++k) {
      for (const auto& [j, g] : grow) {
        if (j == w[k]) out.add(w.erase(k), qweight(s, g, k) * c);
      }
      auto p = alg.basis_product(b, w[k]);
      if (!p) throw CutoffExceeded("product " + alg.basis_label(b) + " * " + alg.basis_label(w[k]));
      if (p->is_zero()) continue;
      Word rest = w.erase(k);
      QScalar ck = qweight(s, c, k);
      for (const auto& [i, x] : p->terms()) out.add(rest.prepend(i), x * ck);
    }
    if (!mean.is_zero()) out.add(w, mean * c);
  }
  return out;
}

class WickEvaluator {
 public:
  WickEvaluator(const FockSpace& s, const LetterAlgebra& alg, const FockVector& v) : s_(s), alg_(alg), v_(v) {}

  const FockVector& eval(const Word& u) {
    if (u.empty()) return v_;
    auto it = memo_.find(u);
    if (it != memo_.end()) return it->second;
    const int b0 = u[0];
    const Word rest = u.sub(1, u.size() - 1);
    FockVector out = apply_basis_field(s_, alg_, b0, eval(rest));
    const QScalar mean = alg_.basis_mean(b0);
    if (!mean.is_zero()) out.axpy(-s_.mode().embed(mean), eval(rest));
    const auto& grow = s_.one_particle().row(b0);
    for (int i = 0; i < rest.size(); ++i) {
      const Word dropped = rest.erase(i);
      for (const auto& [j, g] : grow) {
        if (j == rest[i]) out.axpy(-qweight(s_, g, i), eval(dropped));
      }
      auto p = alg_.basis_product(b0, rest[i]);
      if (!p) throw CutoffExceeded("product " + alg_.basis_label(b0) + " * " + alg_.basis_label(rest[i]));
      for (const auto& [k, x] : p->terms()) out.axpy(-qweight(s_, x, i), eval(dropped.prepend(k)));
    }
    return memo_.emplace(u, std::move(out)).first->second;
  }

 private:
  const FockSpace& s_;
  const LetterAlgebra& alg_;
  const FockVector& v_;
  std::unordered_map<Word, FockVector, WordHash> memo_;
};

class WickNode : public FockOperator::Node {
 public:
  WickNode(std::shared_ptr<const LetterAlgebra> alg, FockVector element)
      : alg_(std::move(alg)), element_(std::move(element)), degree_(std::max(0, element_.top_degree())) {}

  FockVector apply(const FockSpace& s, const FockVector& v) const override {
    if (s.dim() != alg_->dim()) throw UsageError("Wick operator applied in a space of another dimension");
    WickEvaluator ev(s, *alg_, v);
    FockVector out;
    for (const auto& [w, c] : element_.sorted_terms()) out.axpy(s.mode().embed(c), ev.eval(w));
    return out;
  }
  int raise() const override { return degree_; }
  int lower() const override { return degree_; }
  // W(eta_1 x ... x eta_n)^* = W(eta_n x ... x eta_1).
  FockOperator adjoint(const FockSpace&) const override {
    return FockOperator(std::make_shared<WickNode>(alg_, element_.reversed()));
  }

 private:
  std::shared_ptr<const LetterAlgebra> alg_;
  FockVector element_;
  int degree_;
};

class RightNode : public FockOperator::Node {
 public:
  RightNode(std::shared_ptr<const LetterAlgebra> alg, Letter f) : alg_(std::move(alg)), f_(std::move(f)) {}

  FockVector apply(const FockSpace& s, const FockVector& v) const override {
    FockVector xf;
    for (const auto& [i, c] : f_.xi.terms()) xf.add(Word{i}, c);
    if (!f_.mean.is_zero()) xf.add(Word(), f_.mean);
    FockVector out;
    WickEvaluator ev(s, *alg_, xf);
    for (const auto& [w, c] : v.sorted_terms()) out.axpy(c, ev.eval(w));
    return out;
  }
  int raise() const override { return 1; }
  int lower() const override { return 1; }

 private:
  std::shared_ptr<const LetterAlgebra> alg_;
  Letter f_;
};

void check_letters(const LetterAlgebra& alg, const std::vector<Letter>& letters) {
  for (std::size_t i = 0; i < letters.size(); ++i) {
    if (!(alg.mean(letters[i].xi) == letters[i].mean)) {
      throw UsageError("letter " + std::to_string(i + 1) + " has mean " + letters[i].mean.to_string() +
                       " but the algebra state gives " + alg.mean(letters[i].xi).to_string());
    }
  }
}

// Product of the letters indexed by block (1-based), all of them.
OneParticleVector block_product(const LetterAlgebra& alg, const std::vector<Letter>& letters,
                                const std::vector<int>& block, std::size_t from, std::size_t to) {
  OneParticleVector p = letters[block[from] - 1].xi;
  for (std::size_t i = from + 1; i < to; ++i) p = alg.product(p, letters[block[i] - 1].xi);
  return p;
}

// State of the product of a block's letters: mean for a singleton, else
// <l_min, (prod of the others) >.
QScalar block_state(const LetterAlgebra& alg, const std::vector<Letter>& letters, const std::vector<int>& block) {
  if (block.size() == 1) return letters[block[0] - 1].mean;
  OneParticleVector rest = block_product(alg, letters, block, 1, block.size());
  return alg.pair(letters[block[0] - 1].xi, rest);
}

}  // namespace

WickMap::WickMap(std::shared_ptr<const LetterAlgebra> algebra) : alg_(std::move(algebra)) {
  if (!alg_) throw UsageError("Wick map needs a letter algebra");
}

FockOperator WickMap::wick(const FockVector& element) const {
  if (element.top_degree() > kMaxWordLength) throw UsageError("Wick element longer than the word limit");
  return FockOperator(std::make_shared<WickNode>(alg_, element));
}

FockOperator WickMap::wick(const std::vector<Letter>& word) const {
  std::vector<OneParticleVector> xs;
  for (const auto& l : word) xs.push_back(l.xi);
  return wick(xs);
}

FockOperator WickMap::wick(const std::vector<OneParticleVector>& word) const {
  return wick(FockVector::tensor(word));
}

FockOperator WickMap::field_of(const OneParticleVector& b) const { return field(alg_->letter(b)); }

FockOperator right_operator(const WickMap& w, const Letter& f) {
  return FockOperator(std::make_shared<RightNode>(w.algebra_ptr(), f));
}

ProductExpansion product_expansion(const LetterAlgebra& alg, const std::vector<Letter>& letters) {
  const int n = static_cast<int>(letters.size());
  if (n > kMaxExpansionLength) {
    throw ResourceError("product expansion of " + std::to_string(n) + " letters exceeds the budget of " +
                        std::to_string(kMaxExpansionLength) + " (Bell(" + std::to_string(n) +
                        ") = " + std::to_string(bell_number(std::min(n, kMaxPartitionSize))) + " partitions)");
  }
  check_letters(alg, letters);
  ProductExpansion out;
  if (n == 0) {
    out.terms_.push_back({ExtendedPartition(), 0, QScalar(1), {}});
    return out;
  }
  for_each_partition(n, [&](const SetPartition& pi) {
    const std::size_t nb = pi.size();
    // Block scalars and products are computed on first use, so an overflowing
    // product only raises when a term actually needs it.
    std::vector<std::optional<QScalar>> closed(nb);
    std::vector<std::optional<OneParticleVector>> open(nb);
    for (unsigned mask = 0; mask < (1u << nb); ++mask) {
      std::vector<bool> is_open(nb);
      QScalar scalar(1);
      for (std::size_t b = 0; b < nb; ++b) {
        is_open[b] = (mask >> b) & 1u;
      }
      for (std::size_t b = 0; b < nb && !scalar.is_zero(); ++b) {
        if (is_open[b]) continue;
        if (!closed[b]) closed[b] = block_state(alg, letters, pi.block(b));
        scalar *= *closed[b];
      }
      if (scalar.is_zero()) continue;
      std::vector<OneParticleVector> word;
      bool vanishes = false;
      for (std::size_t b = 0; b < nb && !vanishes; ++b) {
        if (!is_open[b]) continue;
        if (!open[b]) open[b] = block_product(alg, letters, pi.block(b), 0, pi.block(b).size());
        if (open[b]->is_zero()) vanishes = true;
        word.push_back(*open[b]);
      }
      if (vanishes) continue;
      ExtendedPartition ep(pi, is_open);
      unsigned k = rc(ep);
      out.terms_.push_back({std::move(ep), k, std::move(scalar), std::move(word)});
    }
  });
  return out;
}

FockOperator ProductExpansion::as_operator(const WickMap& w, const QMode& mode) const {
  FockOperator total = FockOperator::zero();
  for (const auto& t : terms_) {
    QScalar c = mode.embed(t.scalar).times_q_power(t.rc);
    total = total + c * w.wick(t.open_word);
  }
  return total;
}

FockVector ProductExpansion::on_vacuum(const QMode& mode) const {
  FockVector out;
  for (const auto& t : terms_) {
    QScalar c = mode.embed(t.scalar).times_q_power(t.rc);
    out.axpy(c, FockVector::tensor(t.open_word));
  }
  return out;
}

std::string vector_label(const LetterAlgebra& alg, const OneParticleVector& v) {
  if (v.is_zero()) return "0";
  std::string out;
  for (const auto& [i, c] : v.terms()) {
    std::string cs = c.to_string();
    std::string term;
    if (cs == "1") {
      term = alg.basis_label(i);
    } else if (cs == "-1") {
      term = "-" + alg.basis_label(i);
    } else if (c.is_constant() && cs.find(' ') == std::string::npos) {
      term = cs + "*" + alg.basis_label(i);
    } else {
      term = "(" + cs + ")*" + alg.basis_label(i);
    }
    if (out.empty()) {
      out = term;
    } else if (term[0] == '-') {
      out += " - " + term.substr(1);
    } else {
      out += " + " + term;
    }
  }
  return out;
}

std::string ProductExpansion::ledger(const LetterAlgebra& alg) const {
  std::ostringstream os;
  for (const auto& t : terms_) {
    os << t.ep.to_string() << "  rc=" << t.rc << "  scalar=" << t.scalar.to_string() << "  W(";
    for (std::size_t i = 0; i < t.open_word.size(); ++i) {
      if (i) os << " (x) ";
      os << "[" << vector_label(alg, t.open_word[i]) << "]";
    }
    os << ")\n";
  }
  return os.str();
}

QScalar vacuum_moment(const LetterAlgebra& alg, const std::vector<Letter>& letters, const QMode& mode) {
  const int n = static_cast<int>(letters.size());
  if (n > kMaxMomentLength) {
    throw ResourceError("vacuum moment of " + std::to_string(n) + " letters exceeds the budget of " +
                        std::to_string(kMaxMomentLength));
  }
  check_letters(alg, letters);
  QScalar total = mode.embed(QScalar(n == 0 ? 1 : 0));
  if (n == 0) return total;
  for_each_partition(n, [&](const SetPartition& pi) {
    QScalar term(1);
    for (const auto& b : pi.blocks()) {
      term *= block_state(alg, letters, b);
      if (term.is_zero()) return;
    }
    total += mode.embed(term).times_q_power(rc(pi));
  });
  return total;
}

}  // namespace qfock
