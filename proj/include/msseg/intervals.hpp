#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "msseg/errors.hpp"

namespace msseg {

// Half-open grid interval [start/n, end/n), i.e. cells start..end-1.
struct GridInterval {
  std::size_t start = 0;
  std::size_t end = 1;

  std::size_t length() const noexcept { return end - start; }
  bool contains(const GridInterval& other) const noexcept {
    return start <= other.start && other.end <= end;
  }
  bool valid(std::size_t n) const noexcept { return start < end && end <= n; }

  friend auto operator<=>(const GridInterval&, const GridInterval&) = default;
};

enum class IntervalKind { full, dyadic_partition, dyadic_length, custom };

inline std::string_view to_string(IntervalKind k) {
  switch (k) {
    case IntervalKind::full: return "full";
    case IntervalKind::dyadic_partition: return "dyadic-partition";
    case IntervalKind::dyadic_length: return "dyadic-length";
    case IntervalKind::custom: return "custom";
  }
  return "unknown";
}

inline IntervalKind parse_interval_kind(std::string_view s) {
  if (s == "full") return IntervalKind::full;
  if (s == "dyadic-partition") return IntervalKind::dyadic_partition;
  if (s == "dyadic-length") return IntervalKind::dyadic_length;
  throw ContractViolation("unknown interval system '" + std::string(s) + "'");
}

// Interval system on the n-grid. Members are visited in (start, end) order.
// full and dyadic-length are generated on the fly; dyadic-partition and custom
// systems keep explicit per-start / per-end member lists.
class IntervalSystem {
 public:
  IntervalSystem(IntervalKind kind, std::size_t n) : kind_(kind), n_(n) {
    if (n < 1) throw DomainError("IntervalSystem: n must be >= 1");
    if (kind == IntervalKind::custom) throw ContractViolation("use IntervalSystem::custom for explicit members");
    if (kind == IntervalKind::dyadic_partition) build_index(dyadic_partition_members(n));
  }

  static IntervalSystem custom(std::size_t n, std::vector<GridInterval> members) {
    IntervalSystem s(n);
    for (const auto& m : members)
      if (!m.valid(n)) throw ContractViolation("custom system: member outside the grid");
    s.build_index(std::move(members));
    return s;
  }

  IntervalKind kind() const noexcept { return kind_; }
  std::size_t n() const noexcept { return n_; }

  // Largest power-of-two member length for the dyadic-length system.
  std::size_t max_dyadic_length() const noexcept { return std::bit_floor(n_); }

  // Members [start, e) with e <= max_end, ascending e.
  template <typename F>
  void for_each_starting_at(std::size_t start, std::size_t max_end, F&& f) const {
    max_end = std::min(max_end, n_);
    switch (kind_) {
      case IntervalKind::full:
        for (std::size_t e = start + 1; e <= max_end; ++e) f(GridInterval{start, e});
        break;
      case IntervalKind::dyadic_length:
        for (std::size_t len = 1; start + len <= max_end; len <<= 1) f(GridInterval{start, start + len});
        break;
      default:
        for (std::size_t e : ends_by_start_[start]) {
          if (e > max_end) break;
          f(GridInterval{start, e});
        }
    }
  }

  // Members [s, end) with s >= min_start, descending s (ascending length).
  template <typename F>
  void for_each_ending_at(std::size_t end, std::size_t min_start, F&& f) const {
    switch (kind_) {
      case IntervalKind::full:
        for (std::size_t s = end; s-- > min_start;) f(GridInterval{s, end});
        break;
      case IntervalKind::dyadic_length:
        for (std::size_t len = 1; len <= end && end - len >= min_start; len <<= 1) f(GridInterval{end - len, end});
        break;
      default:
        for (std::size_t s : starts_by_end_[end]) {
          if (s < min_start) break;
          f(GridInterval{s, end});
        }
    }
  }

  // Members contained in segment, in (start, end) order.
  template <typename F>
  void for_each_within(const GridInterval& segment, F&& f) const {
    for (std::size_t s = segment.start; s < segment.end; ++s) for_each_starting_at(s, segment.end, f);
  }

  template <typename F>
  void for_each(F&& f) const {
    for_each_within(GridInterval{0, n_}, std::forward<F>(f));
  }

  std::vector<GridInterval> enumerate() const { return contained_in(GridInterval{0, n_}); }

  std::vector<GridInterval> contained_in(const GridInterval& segment) const {
    if (!segment.valid(n_)) throw ContractViolation("contained_in: segment outside the grid");
    std::vector<GridInterval> out;
    for_each_within(segment, [&](const GridInterval& I) { out.push_back(I); });
    return out;
  }

  bool contains(const GridInterval& I) const {
    if (!I.valid(n_)) return false;
    switch (kind_) {
      case IntervalKind::full: return true;
      case IntervalKind::dyadic_length: return std::has_single_bit(I.length());
      default: return std::binary_search(ends_by_start_[I.start].begin(), ends_by_start_[I.start].end(), I.end);
    }
  }

  std::size_t size() const {
    switch (kind_) {
      case IntervalKind::full: return n_ * (n_ + 1) / 2;
      case IntervalKind::dyadic_length: {
        std::size_t total = 0;
        for (std::size_t len = 1; len <= n_; len <<= 1) total += n_ - len + 1;
        return total;
      }
      default: {
        std::size_t total = 0;
        for (const auto& v : ends_by_start_) total += v.size();
        return total;
      }
    }
  }

  // Dyadic partition members
  //   [i*ceil(2^-j n), (i+1)*ceil(2^-j n)),  i < 2^j,  j <= floor(log2 n),
  // clipped to n with empty pieces dropped, plus every single cell.
  static std::vector<GridInterval> dyadic_partition_members(std::size_t n) {
    std::vector<GridInterval> out;
    const auto levels = static_cast<std::size_t>(std::bit_width(n) - 1);
    for (std::size_t j = 0; j <= levels; ++j) {
      const std::size_t parts = std::size_t{1} << j;
      const std::size_t width = (n + parts - 1) / parts;
      for (std::size_t i = 0; i < parts; ++i) {
        const std::size_t a = i * width;
        const std::size_t b = std::min(n, (i + 1) * width);
        if (a < b) out.push_back({a, b});
      }
    }
    for (std::size_t i = 0; i < n; ++i) out.push_back({i, i + 1});
    return out;
  }

 private:
  explicit IntervalSystem(std::size_t n) : kind_(IntervalKind::custom), n_(n) {}

  void build_index(std::vector<GridInterval> members) {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    ends_by_start_.assign(n_ + 1, {});
    starts_by_end_.assign(n_ + 1, {});
    for (const auto& m : members) {
      ends_by_start_[m.start].push_back(m.end);
      starts_by_end_[m.end].push_back(m.start);
    }
    for (auto& v : starts_by_end_) std::sort(v.rbegin(), v.rend());
  }

  IntervalKind kind_;
  std::size_t n_;
  std::vector<std::vector<std::size_t>> ends_by_start_;
  std::vector<std::vector<std::size_t>> starts_by_end_;
};

// Normality check. (ii) and (iii): all members are grid intervals and every single
// cell is a member. (i): every probe interval I with endpoints on the refined grid
// {k / (probe_resolution * n)} and |I| > c/n contains a member of length >= |I|/c.
inline bool is_normal(const IntervalSystem& system, double c, std::size_t probe_resolution = 4) {
  if (!(c > 1.0)) throw DomainError("is_normal: c must exceed 1");
  if (probe_resolution < 2) throw DomainError("is_normal: probe_resolution must be >= 2");
  const std::size_t n = system.n();

  for (std::size_t i = 0; i < n; ++i)
    if (!system.contains(GridInterval{i, i + 1})) return false;

  // longest[s][e]: longest member inside cells [s, e).
  std::vector<std::vector<std::size_t>> longest(n + 1, std::vector<std::size_t>(n + 1, 0));
  for (std::size_t len = 1; len <= n; ++len) {
    for (std::size_t s = 0; s + len <= n; ++s) {
      const std::size_t e = s + len;
      std::size_t best = system.contains(GridInterval{s, e}) ? len : 0;
      if (len > 1) best = std::max({best, longest[s + 1][e], longest[s][e - 1]});
      longest[s][e] = best;
    }
  }

  const std::size_t fine = probe_resolution * n;
  const double p = static_cast<double>(probe_resolution);
  for (std::size_t a = 0; a < fine; ++a) {
    for (std::size_t b = a + 1; b <= fine; ++b) {
      const double length_cells = static_cast<double>(b - a) / p;  // n|I|
      if (!(length_cells > c)) continue;
      const std::size_t s = (a + probe_resolution - 1) / probe_resolution;
      const std::size_t e = b / probe_resolution;
      const double inner = s < e ? static_cast<double>(longest[s][e]) : 0.0;
      if (inner < length_cells / c) return false;
    }
  }
  return true;
}

}  // namespace msseg
