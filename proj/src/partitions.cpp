#include "qfock/partitions.hpp"

#include <algorithm>
#include <cctype>

namespace qfock {

SetPartition::SetPartition(int n, std::vector<std::vector<int>> blocks)
    : SetPartition(1, n, std::move(blocks)) {}

SetPartition::SetPartition(int lo, int hi, std::vector<std::vector<int>> blocks)
    : lo_(lo), hi_(hi), blocks_(std::move(blocks)) {
  canonicalize();
}

void SetPartition::canonicalize() {
  const int n = this->n();
  owner_.assign(n, -1);
  for (auto& b : blocks_) {
    if (b.empty()) throw UsageError("set partition has an empty block");
    std::sort(b.begin(), b.end());
  }
  std::sort(blocks_.begin(), blocks_.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    for (int x : blocks_[i]) {
      if (x < lo_ || x > hi_) throw UsageError("set partition element outside the ground set");
      if (owner_[x - lo_] != -1) throw UsageError("set partition blocks overlap");
      owner_[x - lo_] = static_cast<int>(i);
    }
  }
  for (int o : owner_) {
    if (o == -1) throw UsageError("set partition blocks do not cover the ground set");
  }
}

SetPartition SetPartition::from_rgs(const std::vector<int>& rgs) {
  std::vector<std::vector<int>> blocks;
  for (std::size_t i = 0; i < rgs.size(); ++i) {
    auto b = static_cast<std::size_t>(rgs[i]);
    if (b > blocks.size()) throw UsageError("not a restricted growth string");
    if (b == blocks.size()) blocks.emplace_back();
    blocks[b].push_back(static_cast<int>(i) + 1);
  }
  return SetPartition(static_cast<int>(rgs.size()), std::move(blocks));
}

namespace {

// Parses "{1,3}*{2}" into blocks plus open flags.
void parse_blocks(std::string_view text, std::vector<std::vector<int>>& blocks,
                  std::vector<bool>& open, bool allow_star) {
  std::size_t i = 0;
  auto skip = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip();
  while (i < text.size()) {
    if (text[i] != '{') throw UsageError("malformed partition: expected '{'");
    ++i;
    std::vector<int> block;
    for (;;) {
      skip();
      std::size_t start = i;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
      if (start == i) throw UsageError("malformed partition: expected an element");
      block.push_back(std::stoi(std::string(text.substr(start, i - start))));
      skip();
      if (i < text.size() && text[i] == ',') {
        ++i;
        continue;
      }
      if (i < text.size() && text[i] == '}') {
        ++i;
        break;
      }
      throw UsageError("malformed partition: expected ',' or '}'");
    }
    blocks.push_back(std::move(block));
    skip();
    bool star = false;
    if (i < text.size() && text[i] == '*') {
      if (!allow_star) throw UsageError("open-block marker in a plain partition");
      star = true;
      ++i;
      skip();
    }
    open.push_back(star);
    if (i < text.size() && text[i] == ',') {
      ++i;
      skip();
    }
  }
}

std::pair<int, int> ground_of(const std::vector<std::vector<int>>& blocks) {
  if (blocks.empty()) return {1, 0};
  int lo = blocks[0][0];
  int hi = lo;
  for (const auto& b : blocks) {
    for (int x : b) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  return {lo, hi};
}

}  // namespace

SetPartition SetPartition::parse(std::string_view text) {
  std::vector<std::vector<int>> blocks;
  std::vector<bool> open;
  parse_blocks(text, blocks, open, false);
  auto [lo, hi] = ground_of(blocks);
  return SetPartition(lo, hi, std::move(blocks));
}

int SetPartition::block_of(int x) const {
  if (x < lo_ || x > hi_) throw UsageError("element outside the ground set");
  return owner_[x - lo_];
}

std::optional<int> SetPartition::next_in_block(int x) const {
  const auto& b = blocks_[block_of(x)];
  auto it = std::upper_bound(b.begin(), b.end(), x);
  if (it == b.end()) return std::nullopt;
  return *it;
}

bool SetPartition::refines(const SetPartition& coarser) const {
  if (lo_ != coarser.lo_ || hi_ != coarser.hi_) return false;
  for (const auto& b : blocks_) {
    int target = coarser.block_of(b.front());
    for (int x : b) {
      if (coarser.block_of(x) != target) return false;
    }
  }
  return true;
}

std::string SetPartition::to_string() const {
  std::string out;
  for (const auto& b : blocks_) {
    out += '{';
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(b[i]);
    }
    out += '}';
  }
  return out;
}

ExtendedPartition::ExtendedPartition(SetPartition pi)
    : pi_(std::move(pi)), open_(pi_.size(), false) {}

ExtendedPartition::ExtendedPartition(SetPartition pi, std::vector<bool> open)
    : pi_(std::move(pi)), open_(std::move(open)) {
  if (open_.size() != pi_.size()) throw UsageError("open-block flags do not match the partition");
}

ExtendedPartition ExtendedPartition::with_open_blocks(SetPartition pi,
                                                     const std::vector<std::vector<int>>& open_blocks) {
  std::vector<bool> open(pi.size(), false);
  for (auto b : open_blocks) {
    std::sort(b.begin(), b.end());
    if (b.empty()) throw UsageError("open block is empty");
    int idx = pi.block_of(b.front());
    if (pi.block(idx) != b) throw UsageError("open block is not a block of the partition");
    open[idx] = true;
  }
  return ExtendedPartition(std::move(pi), std::move(open));
}

ExtendedPartition ExtendedPartition::parse(std::string_view text) {
  std::vector<std::vector<int>> blocks;
  std::vector<bool> open;
  parse_blocks(text, blocks, open, true);
  // Flags follow the textual order; map them onto the canonical order.
  std::vector<std::vector<int>> open_blocks;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (open[i]) open_blocks.push_back(blocks[i]);
  }
  auto [lo, hi] = ground_of(blocks);
  return ExtendedPartition::with_open_blocks(SetPartition(lo, hi, std::move(blocks)), open_blocks);
}

std::size_t ExtendedPartition::open_count() const {
  return static_cast<std::size_t>(std::count(open_.begin(), open_.end(), true));
}

std::string ExtendedPartition::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < pi_.size(); ++i) {
    const auto& b = pi_.block(i);
    out += '{';
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (j) out += ',';
      out += std::to_string(b[j]);
    }
    out += '}';
    if (open_[i]) out += '*';
  }
  return out;
}

ExtendedPartition restrict(const ExtendedPartition& ep, int k, int m) {
  const SetPartition& pi = ep.pi();
  if (k > m) throw UsageError("restrict: empty range (k > m)");
  if (k < pi.lo() || m > pi.hi()) throw UsageError("restrict: range outside the ground set");
  std::vector<std::vector<int>> blocks;
  std::vector<std::vector<int>> open_blocks;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    const auto& b = pi.block(i);
    std::vector<int> kept;
    for (int x : b) {
      if (x >= k && x <= m) kept.push_back(x);
    }
    if (kept.empty()) continue;
    if (ep.is_open(i) || b.front() < k) open_blocks.push_back(kept);
    blocks.push_back(std::move(kept));
  }
  return ExtendedPartition::with_open_blocks(SetPartition(k, m, std::move(blocks)), open_blocks);
}

unsigned rc_at(const ExtendedPartition& ep, int k) {
  auto j = ep.pi().next_in_block(k);
  if (!j || *j == k + 1) return 0;
  return static_cast<unsigned>(restrict(ep, k + 1, *j - 1).open_count());
}

unsigned rc(const ExtendedPartition& ep) {
  unsigned total = 0;
  for (int k = ep.pi().lo(); k <= ep.pi().hi(); ++k) total += rc_at(ep, k);
  return total;
}

unsigned rc(const SetPartition& pi) { return rc(ExtendedPartition(pi)); }

unsigned rc_alternative(const ExtendedPartition& ep) {
  const SetPartition& pi = ep.pi();
  unsigned total = rc(pi);
  for (std::size_t b = 0; b < pi.size(); ++b) {
    if (!ep.is_open(b)) continue;
    int mb = pi.block(b).front();
    for (const auto& c : pi.blocks()) {
      if (c.front() < mb && mb < c.back()) ++total;
    }
  }
  return total;
}

PartitionClass classify(const SetPartition& pi) {
  PartitionClass out;
  out.noncrossing = rc(pi) == 0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (pi.block(i).size() == 1) out.singletons.push_back(static_cast<int>(i));
    if (pi.block(i).size() == 2) out.pairs.push_back(static_cast<int>(i));
  }
  if (out.noncrossing) {
    std::vector<int> inner;
    std::vector<int> outer;
    for (std::size_t i = 0; i < pi.size(); ++i) {
      const auto& b = pi.block(i);
      bool nested = false;
      for (std::size_t j = 0; j < pi.size() && !nested; ++j) {
        const auto& c = pi.block(j);
        nested = j != i && c.front() < b.front() && b.back() < c.back();
      }
      (nested ? inner : outer).push_back(static_cast<int>(i));
    }
    out.inner = std::move(inner);
    out.outer = std::move(outer);
  }
  return out;
}

std::vector<int> inner_blocks(const SetPartition& pi) {
  auto c = classify(pi);
  if (!c.inner) throw UsageError("inner blocks are defined only for noncrossing partitions");
  return *c.inner;
}

std::vector<int> outer_blocks(const SetPartition& pi) {
  auto c = classify(pi);
  if (!c.outer) throw UsageError("outer blocks are defined only for noncrossing partitions");
  return *c.outer;
}

PartitionStream::PartitionStream(int n) : n_(n) {
  if (n < 1 || n > kMaxPartitionSize) {
    throw UsageError("partition enumeration requires 1 <= n <= " + std::to_string(kMaxPartitionSize));
  }
  rgs_.assign(n, 0);
  prefix_max_.assign(n, 0);
}

bool PartitionStream::next(SetPartition& out) {
  if (done_) return false;
  if (started_) {
    int i = n_ - 1;
    while (i >= 1 && rgs_[i] > prefix_max_[i - 1]) --i;
    if (i < 1) {
      done_ = true;
      return false;
    }
    ++rgs_[i];
    prefix_max_[i] = std::max(prefix_max_[i - 1], rgs_[i]);
    for (int j = i + 1; j < n_; ++j) {
      rgs_[j] = 0;
      prefix_max_[j] = prefix_max_[i];
    }
  }
  started_ = true;
  out = SetPartition::from_rgs(rgs_);
  return true;
}

void for_each_partition(int n, const std::function<void(const SetPartition&)>& f) {
  PartitionStream s(n);
  SetPartition p;
  while (s.next(p)) f(p);
}

std::vector<SetPartition> enumerate_partitions(int n) {
  if (n > 8) throw ResourceError("enumerate_partitions materializes at most n = 8; stream larger n");
  std::vector<SetPartition> out;
  for_each_partition(n, [&](const SetPartition& p) { out.push_back(p); });
  return out;
}

std::uint64_t bell_number(int n) {
  // Bell triangle.
  std::vector<std::uint64_t> row{1};
  for (int i = 0; i < n; ++i) {
    std::vector<std::uint64_t> next{row.back()};
    for (auto x : row) next.push_back(next.back() + x);
    row = std::move(next);
  }
  return row.front();
}

std::vector<int> induced_permutation(const SetPartition& pi, int k) {
  if (k < 1 || pi.lo() != 1 || pi.n() != 2 * k) throw UsageError("induced_permutation: pi must live on {1..2k}");
  for (const auto& b : pi.blocks()) {
    if (b.size() != 2 || b[0] > k || b[1] <= k) {
      throw UsageError("induced_permutation: pi is not a pairing of {1..k} with {k+1..2k}");
    }
  }
  std::vector<int> sigma(k);
  for (int i = 1; i <= k; ++i) {
    int partner = pi.block(pi.block_of(k + 1 - i))[1];
    sigma[i - 1] = partner - k;
  }
  return sigma;
}

void for_each_index_tuple(int N, const SetPartition& pi,
                          const std::function<void(const std::vector<int>&)>& f) {
  if (N < 1) throw UsageError("index_tuples requires N >= 1");
  if (pi.lo() != 1) throw UsageError("index_tuples requires a partition of {1..n}");
  const int nb = static_cast<int>(pi.size());
  const int n = pi.n();
  if (nb > N) return;
  std::vector<int> value(nb, 0);
  std::vector<bool> used(N + 1, false);
  std::vector<int> tuple(n);
  std::function<void(int)> rec = [&](int b) {
    if (b == nb) {
      for (int i = 1; i <= n; ++i) tuple[i - 1] = value[pi.block_of(i)];
      f(tuple);
      return;
    }
    for (int v = 1; v <= N; ++v) {
      if (used[v]) continue;
      used[v] = true;
      value[b] = v;
      rec(b + 1);
      used[v] = false;
    }
  };
  rec(0);
}

std::vector<std::vector<int>> index_tuples(int N, const SetPartition& pi) {
  std::vector<std::vector<int>> out;
  for_each_index_tuple(N, pi, [&](const std::vector<int>& t) { out.push_back(t); });
  return out;
}

}  // namespace qfock
