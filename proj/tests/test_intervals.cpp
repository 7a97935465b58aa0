#include <catch_amalgamated.hpp>

#include <random>
#include <set>

#include "msseg/intervals.hpp"

using namespace msseg;

namespace {

// Normality by definition: every probe [a, b) on the refined grid with length > c
// cells must contain a member of length >= length / c.
bool normal_by_definition(const IntervalSystem& sys, double c, std::size_t res) {
  const auto members = sys.enumerate();
  const std::size_t n = sys.n();
  for (std::size_t i = 0; i < n; ++i)
    if (!sys.contains({i, i + 1})) return false;
  for (std::size_t a = 0; a < res * n; ++a)
    for (std::size_t b = a + 1; b <= res * n; ++b) {
      const double len = static_cast<double>(b - a) / static_cast<double>(res);
      if (!(len > c)) continue;
      bool found = false;
      for (const auto& m : members) {
        if (m.start * res >= a && m.end * res <= b && static_cast<double>(m.length()) >= len / c) {
          found = true;
          break;
        }
      }
      if (!found) return false;
    }
  return true;
}

std::vector<IntervalKind> kinds() {
  return {IntervalKind::full, IntervalKind::dyadic_length, IntervalKind::dyadic_partition};
}

}  // namespace

TEST_CASE("enumeration counts") {
  CHECK(IntervalSystem(IntervalKind::full, 4).enumerate().size() == 10);
  CHECK(IntervalSystem(IntervalKind::dyadic_length, 4).enumerate().size() == 8);
  const IntervalSystem dp(IntervalKind::dyadic_partition, 8);
  CHECK(dp.enumerate().size() == 15);
  for (std::size_t i = 0; i < 8; ++i) CHECK(dp.contains({i, i + 1}));
}

TEST_CASE("full system matches a double loop") {
  for (std::size_t n = 1; n <= 64; ++n) {
    const IntervalSystem sys(IntervalKind::full, n);
    std::set<GridInterval> expected;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j <= n; ++j) expected.insert({i, j});
    const auto got = sys.enumerate();
    CHECK(got.size() == n * (n + 1) / 2);
    CHECK(std::set<GridInterval>(got.begin(), got.end()) == expected);
    CHECK(sys.size() == got.size());
  }
}

TEST_CASE("every kind: single cells, validity, order, no duplicates") {
  for (auto kind : kinds())
    for (std::size_t n = 1; n <= 64; ++n) {
      const IntervalSystem sys(kind, n);
      const auto all = sys.enumerate();
      CHECK(std::is_sorted(all.begin(), all.end()));
      CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
      CHECK(sys.size() == all.size());
      for (const auto& I : all) {
        CHECK(I.valid(n));
        CHECK(sys.contains(I));
      }
      for (std::size_t i = 0; i < n; ++i) CHECK(sys.contains({i, i + 1}));
    }
}

TEST_CASE("dyadic-length members and bound") {
  for (std::size_t n = 1; n <= 64; ++n) {
    const IntervalSystem sys(IntervalKind::dyadic_length, n);
    std::set<GridInterval> expected;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t len = 1; i + len <= n; len *= 2) expected.insert({i, i + len});
    const auto got = sys.enumerate();
    CHECK(std::set<GridInterval>(got.begin(), got.end()) == expected);
    const auto levels = static_cast<std::size_t>(std::floor(std::log2(static_cast<double>(n))));
    CHECK(got.size() <= n * (levels + 1));
  }
}

TEST_CASE("dyadic-partition formula for power-of-two n") {
  const IntervalSystem sys(IntervalKind::dyadic_partition, 8);
  const std::vector<GridInterval> expected = {{0, 1}, {0, 2}, {0, 4}, {0, 8}, {1, 2}, {2, 3}, {2, 4}, {3, 4},
                                              {4, 5}, {4, 6}, {4, 8}, {5, 6}, {6, 7}, {6, 8}, {7, 8}};
  CHECK(sys.enumerate() == expected);
}

TEST_CASE("dyadic-partition for n not a power of two is clipped and repaired") {
  const IntervalSystem sys(IntervalKind::dyadic_partition, 12);
  CHECK(sys.contains({0, 12}));
  CHECK(sys.contains({0, 6}));
  CHECK(sys.contains({9, 12}));
  CHECK(sys.contains({10, 11}));
  for (const auto& I : sys.enumerate()) CHECK(I.valid(12));
}

TEST_CASE("contained_in equals a brute-force filter") {
  std::mt19937_64 rng(3);
  CHECK(IntervalSystem(IntervalKind::full, 5).contained_in({2, 3}) == std::vector<GridInterval>{{2, 3}});
  CHECK(IntervalSystem(IntervalKind::full, 5).contained_in({0, 3}).size() == 6);
  for (auto kind : kinds()) {
    for (int rep = 0; rep < 50; ++rep) {
      const std::size_t n = 1 + rng() % 64;
      const std::size_t a = rng() % n;
      const std::size_t b = a + 1 + rng() % (n - a);
      const IntervalSystem sys(kind, n);
      std::vector<GridInterval> expected;
      for (const auto& I : sys.enumerate())
        if (GridInterval{a, b}.contains(I)) expected.push_back(I);
      CHECK(sys.contained_in({a, b}) == expected);
    }
  }
  const IntervalSystem dl(IntervalKind::dyadic_length, 8);
  std::vector<GridInterval> expected;
  for (const auto& I : dl.enumerate())
    if (I.end <= 5) expected.push_back(I);
  CHECK(dl.contained_in({0, 5}) == expected);
  CHECK_THROWS_AS(dl.contained_in({3, 9}), ContractViolation);
}

TEST_CASE("is_normal agrees with the definition") {
  for (auto kind : kinds())
    for (std::size_t n : {4u, 8u, 12u, 16u})
      for (double c : {1.25, 1.5, 2.0, 3.0, 4.5})
        for (std::size_t res : {2u, 4u}) {
          const IntervalSystem sys(kind, n);
          INFO(to_string(kind) << " n=" << n << " c=" << c << " res=" << res);
          CHECK(is_normal(sys, c, res) == normal_by_definition(sys, c, res));
        }
}

TEST_CASE("is_normal: witnesses on the probe grid") {
  // [0.25, 2) in cell units holds only cell 1; 1 < 1.75 / 1.5.
  CHECK_FALSE(is_normal(IntervalSystem(IntervalKind::full, 16), 1.5, 4));
  // [0.5, 2.75) holds only cell 1; 1 < 2.25 / 2.
  CHECK_FALSE(is_normal(IntervalSystem(IntervalKind::full, 16), 2.0, 4));
  // Even on the sampling grid the dyadic partition misses: cells [5, 14) contain no
  // member longer than 4 < 9 / 2.
  const IntervalSystem dp(IntervalKind::dyadic_partition, 16);
  std::size_t longest = 0;
  for (const auto& I : dp.contained_in({5, 14})) longest = std::max(longest, I.length());
  CHECK(longest == 4);
  CHECK_FALSE(is_normal(dp, 2.0, 1 + 1));
  // The full system is normal once c leaves room for the sub-cell slack.
  CHECK(is_normal(IntervalSystem(IntervalKind::full, 16), 3.0, 4));
}

TEST_CASE("is_normal rejects systems without all single cells") {
  std::vector<GridInterval> members;
  for (const auto& I : IntervalSystem::dyadic_partition_members(12))
    if (I.length() > 1) members.push_back(I);
  const auto sys = IntervalSystem::custom(12, members);
  CHECK_FALSE(is_normal(sys, 2.0, 4));
  CHECK_THROWS_AS(is_normal(sys, 1.0, 4), DomainError);
  CHECK_THROWS_AS(is_normal(sys, 2.0, 1), DomainError);
}

TEST_CASE("custom systems validate members") {
  CHECK_THROWS_AS(IntervalSystem::custom(4, {{0, 5}}), ContractViolation);
  CHECK_THROWS_AS(IntervalSystem(IntervalKind::full, 0), DomainError);
  CHECK(parse_interval_kind("dyadic-length") == IntervalKind::dyadic_length);
  CHECK_THROWS_AS(parse_interval_kind("dyadic"), ContractViolation);
}
