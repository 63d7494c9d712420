#ifndef QFOCK_PARTITIONS_HPP
#define QFOCK_PARTITIONS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qfock/errors.hpp"

namespace qfock {

// Partition of the contiguous ground set {lo..hi} (empty when hi < lo).
// Blocks are sorted and ordered by their least elements.
class SetPartition {
 public:
  SetPartition() = default;
  SetPartition(int n, std::vector<std::vector<int>> blocks);
  SetPartition(int lo, int hi, std::vector<std::vector<int>> blocks);

  // Restricted growth string over {1..n}: rgs[i] is the block of element i+1.
  static SetPartition from_rgs(const std::vector<int>& rgs);
  static SetPartition parse(std::string_view text);

  int lo() const { return lo_; }
  int hi() const { return hi_; }
  int n() const { return hi_ >= lo_ ? hi_ - lo_ + 1 : 0; }
  std::size_t size() const { return blocks_.size(); }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  const std::vector<int>& block(std::size_t i) const { return blocks_[i]; }
  // Index of the block containing element x.
  int block_of(int x) const;
  // Next element after x in its block, or nullopt if x is the block maximum.
  std::optional<int> next_in_block(int x) const;

  // Every block of *this lies inside a block of coarser.
  bool refines(const SetPartition& coarser) const;

  std::string to_string() const;
  bool operator==(const SetPartition& o) const {
    return lo_ == o.lo_ && hi_ == o.hi_ && blocks_ == o.blocks_;
  }

 private:
  void canonicalize();

  int lo_ = 1;
  int hi_ = 0;
  std::vector<std::vector<int>> blocks_;
  std::vector<int> owner_;  // owner_[x - lo_] = block index
};

// A set partition together with the set S of blocks open on the left.
class ExtendedPartition {
 public:
  ExtendedPartition() = default;
  explicit ExtendedPartition(SetPartition pi);
  ExtendedPartition(SetPartition pi, std::vector<bool> open);
  // Open blocks named by their contents.
  static ExtendedPartition with_open_blocks(SetPartition pi, const std::vector<std::vector<int>>& open_blocks);

  static ExtendedPartition parse(std::string_view text);

  const SetPartition& pi() const { return pi_; }
  const std::vector<bool>& open() const { return open_; }
  bool is_open(std::size_t block) const { return open_[block]; }
  std::size_t open_count() const;

  std::string to_string() const;
  bool operator==(const ExtendedPartition& o) const { return pi_ == o.pi_ && open_ == o.open_; }

 private:
  SetPartition pi_;
  std::vector<bool> open_;
};

// Restriction to {k..m}: a block survives if it meets the range, and is open
// if it was open or had an element below k. Accepts k <= m (k == m allowed).
ExtendedPartition restrict(const ExtendedPartition& ep, int k, int m);

// Right restricted crossings at k (computed from the restriction, literally).
unsigned rc_at(const ExtendedPartition& ep, int k);
unsigned rc(const ExtendedPartition& ep);
unsigned rc(const SetPartition& pi);
// rc(pi) + sum over open B of #{C : min C < min B < max C}.
unsigned rc_alternative(const ExtendedPartition& ep);

struct PartitionClass {
  bool noncrossing = false;
  std::vector<int> singletons;  // block indices
  std::vector<int> pairs;
  // Only present for noncrossing partitions.
  std::optional<std::vector<int>> inner;
  std::optional<std::vector<int>> outer;
};

PartitionClass classify(const SetPartition& pi);
std::vector<int> inner_blocks(const SetPartition& pi);
std::vector<int> outer_blocks(const SetPartition& pi);

// Streaming enumeration of Part(n) in restricted-growth-string order.
class PartitionStream {
 public:
  explicit PartitionStream(int n);
  // Fills out with the next partition; false once exhausted.
  bool next(SetPartition& out);
  int n() const { return n_; }

 private:
  int n_;
  bool started_ = false;
  bool done_ = false;
  std::vector<int> rgs_;
  std::vector<int> prefix_max_;
};

constexpr int kMaxPartitionSize = 12;

void for_each_partition(int n, const std::function<void(const SetPartition&)>& f);
// Materialized list; only for n <= 8.
std::vector<SetPartition> enumerate_partitions(int n);
std::uint64_t bell_number(int n);

// Part_2(k,k) pairing -> sigma in one-line notation.
std::vector<int> induced_permutation(const SetPartition& pi, int k);

// Tuples in {1..N}^n constant exactly on the blocks of pi.
void for_each_index_tuple(int N, const SetPartition& pi,
                          const std::function<void(const std::vector<int>&)>& f);
std::vector<std::vector<int>> index_tuples(int N, const SetPartition& pi);

}  // namespace qfock

#endif  // QFOCK_PARTITIONS_HPP
