#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "qfock/partitions.hpp"
#include "qfock/qscalar.hpp"

using qfock::ExtendedPartition;
using qfock::SetPartition;

namespace {

// Brute-force: some a<b<c<d with a,c in one block and b,d in another.
bool has_crossing(const SetPartition& p) {
  const int n = p.n();
  for (int a = 1; a <= n; ++a)
    for (int b = a + 1; b <= n; ++b)
      for (int c = b + 1; c <= n; ++c)
        for (int d = c + 1; d <= n; ++d) {
          if (p.block_of(a) == p.block_of(c) && p.block_of(b) == p.block_of(d) &&
              p.block_of(a) != p.block_of(b))
            return true;
        }
  return false;
}

unsigned pair_crossings(const SetPartition& p) {
  unsigned count = 0;
  for (const auto& x : p.blocks())
    for (const auto& y : p.blocks())
      if (x[0] < y[0] && y[0] < x[1] && x[1] < y[1]) ++count;
  return count;
}

std::vector<std::vector<bool>> all_subsets(std::size_t k) {
  std::vector<std::vector<bool>> out;
  for (std::size_t mask = 0; mask < (1u << k); ++mask) {
    std::vector<bool> s(k);
    for (std::size_t i = 0; i < k; ++i) s[i] = (mask >> i) & 1u;
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("canonical form and serialization") {
  SetPartition p(4, {{4, 2}, {3, 1}});
  CHECK(p.to_string() == "{1,3}{2,4}");
  CHECK(SetPartition::parse("{2,4}{1,3}") == p);
  auto ep = ExtendedPartition::parse("{1,3}*{2,4}");
  CHECK(ep.is_open(0));
  CHECK_FALSE(ep.is_open(1));
  CHECK(ep.to_string() == "{1,3}*{2,4}");
  CHECK_THROWS_AS(SetPartition(3, {{1, 2}}), qfock::UsageError);
  CHECK_THROWS_AS(SetPartition(3, {{1, 2}, {2, 3}}), qfock::UsageError);
  CHECK_THROWS_AS(SetPartition::parse("{1,2"), qfock::UsageError);
}

TEST_CASE("enumeration") {
  auto one = qfock::enumerate_partitions(1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].to_string() == "{1}");
  CHECK(qfock::enumerate_partitions(3).size() == 5);
  CHECK(qfock::enumerate_partitions(4).size() == 15);
  CHECK_THROWS_AS(qfock::PartitionStream(0), qfock::UsageError);
  CHECK_THROWS_AS(qfock::PartitionStream(13), qfock::UsageError);
  for (int n = 1; n <= 10; ++n) {
    std::set<std::string> seen;
    std::uint64_t count = 0;
    qfock::for_each_partition(n, [&](const SetPartition& p) {
      ++count;
      seen.insert(p.to_string());
    });
    CHECK(count == qfock::bell_number(n));
    CHECK(seen.size() == count);
  }
  CHECK(qfock::bell_number(12) == 4213597);
}

TEST_CASE("restriction") {
  ExtendedPartition a(SetPartition(2, {{1, 2}}));
  CHECK(qfock::restrict(a, 1, 2) == a);

  auto b = qfock::restrict(ExtendedPartition(SetPartition(3, {{1, 3}, {2}})), 2, 3);
  CHECK(b.pi().to_string() == "{2}{3}");
  CHECK_FALSE(b.is_open(0));
  CHECK(b.is_open(1));

  auto c = qfock::restrict(ExtendedPartition::with_open_blocks(SetPartition(2, {{1}, {2}}), {{1}}), 2, 2);
  CHECK(c.pi().to_string() == "{2}");
  CHECK(c.open_count() == 0);

  CHECK_THROWS_AS(qfock::restrict(a, 2, 1), qfock::UsageError);
}

TEST_CASE("restricted crossings") {
  CHECK(qfock::rc_at(ExtendedPartition(SetPartition(2, {{1, 2}})), 1) == 0);
  ExtendedPartition cross(SetPartition(4, {{1, 3}, {2, 4}}));
  // The crossing is charged at k=2: block {1,3} reaches back before the gap {3}.
  CHECK(qfock::rc_at(cross, 1) == 0);
  CHECK(qfock::rc_at(cross, 2) == 1);
  CHECK(qfock::rc(cross) == 1);
  auto e = ExtendedPartition::with_open_blocks(SetPartition(4, {{1, 4}, {2}, {3}}), {{2}, {3}});
  CHECK(qfock::rc_at(e, 1) == 2);
  auto f = ExtendedPartition::with_open_blocks(SetPartition(3, {{1, 3}, {2}}), {{2}});
  CHECK(qfock::rc(f) == 1);
  CHECK(qfock::rc_alternative(f) == 1);
  CHECK(qfock::rc(SetPartition(4, {{1, 4}, {2, 3}})) == 0);
}

TEST_CASE("rc agrees with the alternative formula for every extended partition, n <= 8") {
  for (int n = 1; n <= 8; ++n) {
    qfock::for_each_partition(n, [&](const SetPartition& p) {
      for (const auto& s : all_subsets(p.size())) {
        ExtendedPartition ep(p, s);
        REQUIRE(qfock::rc(ep) == qfock::rc_alternative(ep));
      }
    });
  }
}

TEST_CASE("rc vanishes exactly on noncrossing partitions, n <= 8") {
  for (int n = 1; n <= 8; ++n) {
    qfock::for_each_partition(n, [&](const SetPartition& p) {
      REQUIRE((qfock::rc(p) == 0) == !has_crossing(p));
      bool pairs = true;
      for (const auto& b : p.blocks()) pairs = pairs && b.size() == 2;
      if (pairs) REQUIRE(qfock::rc(p) == pair_crossings(p));
    });
  }
}

TEST_CASE("classification") {
  auto c = qfock::classify(SetPartition(4, {{1, 4}, {2, 3}}));
  CHECK(c.noncrossing);
  CHECK(*c.inner == std::vector<int>{1});
  CHECK(*c.outer == std::vector<int>{0});
  auto s = qfock::classify(SetPartition(3, {{1}, {2}, {3}}));
  CHECK(s.singletons.size() == 3);
  CHECK(s.outer->size() == 3);
  CHECK_FALSE(qfock::classify(SetPartition(4, {{1, 3}, {2, 4}})).noncrossing);
  CHECK_THROWS_AS(qfock::inner_blocks(SetPartition(4, {{1, 3}, {2, 4}})), qfock::UsageError);
}

TEST_CASE("induced permutation") {
  CHECK(qfock::induced_permutation(SetPartition(2, {{1, 2}}), 1) == std::vector<int>{1});
  CHECK(qfock::induced_permutation(SetPartition(4, {{1, 4}, {2, 3}}), 2) == std::vector<int>{1, 2});
  auto sigma = qfock::induced_permutation(SetPartition(4, {{1, 3}, {2, 4}}), 2);
  CHECK(qfock::inversions(sigma) == 1);
  CHECK_THROWS_AS(qfock::induced_permutation(SetPartition(4, {{1, 2}, {3, 4}}), 2), qfock::UsageError);
  for (int k = 1; k <= 5; ++k) {
    int tested = 0;
    qfock::for_each_partition(2 * k, [&](const SetPartition& p) {
      for (const auto& b : p.blocks())
        if (b.size() != 2 || b[0] > k || b[1] <= k) return;
      ++tested;
      REQUIRE(qfock::rc(p) == qfock::inversions(qfock::induced_permutation(p, k)));
    });
    long f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    CHECK(tested == f);
  }
}

TEST_CASE("index tuples") {
  CHECK(qfock::index_tuples(2, SetPartition(2, {{1, 2}})) == std::vector<std::vector<int>>{{1, 1}, {2, 2}});
  CHECK(qfock::index_tuples(2, SetPartition(2, {{1}, {2}})) == std::vector<std::vector<int>>{{1, 2}, {2, 1}});
  auto t = qfock::index_tuples(3, SetPartition(3, {{1, 3}, {2}}));
  CHECK(t.size() == 6);
  for (const auto& x : t) {
    CHECK(x[0] == x[2]);
    CHECK(x[0] != x[1]);
  }
  CHECK(qfock::index_tuples(1, SetPartition(2, {{1}, {2}})).empty());
}

TEST_CASE("refinement") {
  SetPartition fine(4, {{1}, {2}, {3, 4}});
  SetPartition coarse(4, {{1, 2}, {3, 4}});
  CHECK(fine.refines(coarse));
  CHECK_FALSE(coarse.refines(fine));
  // Every partition refines the one-block partition and is refined by the singletons.
  SetPartition top(4, {{1, 2, 3, 4}});
  SetPartition bottom(4, {{1}, {2}, {3}, {4}});
  qfock::for_each_partition(4, [&](const SetPartition& p) {
    CHECK(p.refines(top));
    CHECK(bottom.refines(p));
  });
}
