#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "msseg/detail/parallel.hpp"
#include "msseg/errors.hpp"
#include "msseg/intervals.hpp"
#include "msseg/signals.hpp"

namespace msseg {

enum class Penalty { smuce, fdrseg, none };

inline std::string_view to_string(Penalty p) {
  switch (p) {
    case Penalty::smuce: return "smuce";
    case Penalty::fdrseg: return "fdrseg";
    case Penalty::none: return "none";
  }
  return "unknown";
}

inline Penalty parse_penalty(std::string_view s) {
  if (s == "smuce") return Penalty::smuce;
  if (s == "fdrseg") return Penalty::fdrseg;
  if (s == "none") return Penalty::none;
  throw ContractViolation("unknown penalty '" + std::string(s) + "'");
}

// Scale penalty of a member with `len` cells inside a constant segment of `segment_len`
// cells on the n-grid:
//   smuce   sqrt(2 log(e / |I|))        = sqrt(2 (1 + log(n / len)))
//   fdrseg  sqrt(2 log(e |I~| / |I|))   = sqrt(2 (1 + log(segment_len / len)))
// sqrt(2 log(e / ratio)) for a length ratio in (0, 1].
inline double log_penalty(double ratio) { return std::sqrt(2.0 * (1.0 - std::log(ratio))); }

inline double scale_penalty(Penalty p, std::size_t len, std::size_t segment_len, std::size_t n) {
  switch (p) {
    case Penalty::smuce:
      return std::sqrt(2.0 * (1.0 + std::log(static_cast<double>(n) / static_cast<double>(len))));
    case Penalty::fdrseg:
      return std::sqrt(2.0 * (1.0 + std::log(static_cast<double>(segment_len) / static_cast<double>(len))));
    case Penalty::none: return 0.0;
  }
  return 0.0;
}

inline double penalty_value(Penalty p, const GridInterval& I, const GridInterval& segment, std::size_t n) {
  if (!I.valid(n)) throw ContractViolation("penalty_value: interval outside [0,1)");
  if (p == Penalty::fdrseg && !segment.contains(I))
    throw ContractViolation("penalty_value: fdrseg interval is not inside its segment");
  return scale_penalty(p, I.length(), segment.length(), n);
}

namespace detail {

// Prefix sums of a centred copy of y, so interval sums and SSEs lose less precision.
class PrefixSums {
 public:
  PrefixSums() = default;
  explicit PrefixSums(std::span<const double> y) : sum_(y.size() + 1, 0.0), sq_(y.size() + 1, 0.0) {
    double m = 0.0;
    for (double v : y) m += v;
    centre_ = y.empty() ? 0.0 : m / static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = y[i] - centre_;
      sum_[i + 1] = sum_[i] + d;
      sq_[i + 1] = sq_[i] + d * d;
    }
  }

  double mean(std::size_t i, std::size_t j) const {
    return centre_ + (sum_[j] - sum_[i]) / static_cast<double>(j - i);
  }
  // Sum of (y - centre) over [i, j).
  double centred_sum(std::size_t i, std::size_t j) const { return sum_[j] - sum_[i]; }
  double centre() const noexcept { return centre_; }
  double sse(std::size_t i, std::size_t j) const {
    const double s = sum_[j] - sum_[i];
    return std::max(0.0, (sq_[j] - sq_[i]) - s * s / static_cast<double>(j - i));
  }

 private:
  std::vector<double> sum_;
  std::vector<double> sq_;
  double centre_ = 0.0;
};

}  // namespace detail

// One constant piece of a grid candidate.
struct GridSegment {
  GridInterval cells;
  double value = 0.0;
};

inline std::vector<GridSegment> grid_segments(const StepFunction& f, std::size_t n) {
  const auto idx = grid_breakpoints(f, n);
  std::vector<GridSegment> out;
  out.reserve(f.segments());
  for (std::size_t s = 0; s < f.segments(); ++s) out.push_back({{idx[s], idx[s + 1]}, f.values()[s]});
  return out;
}

// sup over members I inside a constant segment of the candidate of
//   |sum_{I} (y_i - c_I)| / sqrt(n|I|) - s_I,
// -infinity when no member qualifies.
inline double multiscale_statistic(std::span<const double> y, std::span<const GridSegment> candidate,
                                   const IntervalSystem& system, Penalty penalty) {
  const std::size_t n = y.size();
  if (system.n() != n) throw ContractViolation("multiscale_statistic: system and data sizes differ");
  const detail::PrefixSums ps(y);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& seg : candidate) {
    if (!seg.cells.valid(n)) throw ContractViolation("multiscale_statistic: segment outside the grid");
    const double shift = seg.value - ps.centre();
    system.for_each_within(seg.cells, [&](const GridInterval& I) {
      const auto len = static_cast<double>(I.length());
      const double t = std::abs(ps.centred_sum(I.start, I.end) - len * shift) / std::sqrt(len) -
                       scale_penalty(penalty, I.length(), seg.cells.length(), n);
      best = std::max(best, t);
    });
  }
  return best;
}

inline double multiscale_statistic(const Observation& y, const StepFunction& candidate,
                                   const IntervalSystem& system, Penalty penalty) {
  const auto segs = grid_segments(candidate, y.n());
  return multiscale_statistic(y.y, segs, system, penalty);
}

inline double universal_threshold(double a, std::size_t n) {
  if (n < 2) throw DomainError("universal_threshold: n must be >= 2");
  if (!(a > 0.0)) throw DomainError("universal_threshold: a must be positive");
  return a * std::sqrt(std::log(static_cast<double>(n)));
}

// Null statistic T_I(xi; 0): the zero candidate has one segment covering [0,1),
// so every member qualifies and fdrseg uses I~ = [0,1).
inline double null_statistic(std::span<const double> xi, const IntervalSystem& system, Penalty penalty) {
  const std::size_t n = xi.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + xi[i];
  std::vector<double> pen(n + 1), inv_sqrt(n + 1);
  for (std::size_t len = 1; len <= n; ++len) {
    pen[len] = scale_penalty(penalty, len, n, n);
    inv_sqrt[len] = 1.0 / std::sqrt(static_cast<double>(len));
  }
  double best = -std::numeric_limits<double>::infinity();
  system.for_each([&](const GridInterval& I) {
    const std::size_t len = I.length();
    best = std::max(best, std::abs(prefix[I.end] - prefix[I.start]) * inv_sqrt[len] - pen[len]);
  });
  return best;
}

// Index (1-based) of the order statistic used as the empirical (1-beta)-quantile.
inline std::size_t quantile_rank(double beta, std::size_t n_mc) {
  const double k = std::ceil((1.0 - beta) * static_cast<double>(n_mc) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1.0, k)), 1, n_mc);
}

// Sorted Monte Carlo sample of the null statistic.
class NullDistribution {
 public:
  NullDistribution(std::vector<double> draws, std::uint64_t seed, double delta_bound)
      : draws_(std::move(draws)), seed_(seed), delta_bound_(delta_bound) {
    std::sort(draws_.begin(), draws_.end());
  }

  double quantile(double beta) const {
    if (!(beta > 0.0 && beta < 1.0)) throw DomainError("quantile: beta must lie in (0,1)");
    return draws_[quantile_rank(beta, draws_.size()) - 1];
  }

  const std::vector<double>& draws() const noexcept { return draws_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double delta_bound() const noexcept { return delta_bound_; }

 private:
  std::vector<double> draws_;
  std::uint64_t seed_;
  double delta_bound_;
};

// max_I |s_I| over the system under the null (single segment [0,1)).
inline double penalty_bound(const IntervalSystem& system, Penalty penalty) {
  const std::size_t n = system.n();
  std::vector<char> seen(n + 1, 0);
  system.for_each([&](const GridInterval& I) { seen[I.length()] = 1; });
  double delta = 0.0;
  for (std::size_t len = 1; len <= n; ++len)
    if (seen[len]) delta = std::max(delta, std::abs(scale_penalty(penalty, len, n, n)));
  return delta;
}

inline NullDistribution simulate_null(std::size_t n, const IntervalSystem& system, Penalty penalty,
                                      double sigma, std::size_t n_mc, std::uint64_t seed) {
  if (n_mc < 100) throw DomainError("simulate_null: n_mc must be >= 100");
  if (system.n() != n) throw ContractViolation("simulate_null: system size differs from n");
  if (!(sigma >= 0.0)) throw DomainError("simulate_null: sigma must be >= 0");
  std::vector<double> draws(n_mc);
  detail::parallel_for(n_mc, [&](std::size_t r) {
    const auto xi = draw_noise(n, NoiseModel{NoiseKind::gaussian, sigma, replicate_seed(seed, r)});
    draws[r] = null_statistic(xi, system, penalty);
  });
  return NullDistribution(std::move(draws), seed, penalty_bound(system, penalty));
}

struct CalibrationResult {
  double eta = 0.0;
  double beta = 0.0;
  std::size_t n_mc = 0;
  std::uint64_t seed = 0;
  double delta_bound = 0.0;  // max_I |s_I| over the system
};

inline CalibrationResult simulate_quantile(double beta, std::size_t n, const IntervalSystem& system,
                                           Penalty penalty, double sigma, std::size_t n_mc,
                                           std::uint64_t seed) {
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("simulate_quantile: beta must lie in (0,1)");
  const auto null = simulate_null(n, system, penalty, sigma, n_mc, seed);
  return {null.quantile(beta), beta, n_mc, seed, null.delta_bound()};
}

struct UniversalRule {
  double a = 1.0;
};
struct QuantileRule {
  double beta = 0.1;
  std::size_t n_mc = 10000;
  std::uint64_t seed = 0;
};
struct ExplicitRule {
  double value = 0.0;
};
using ThresholdRule = std::variant<UniversalRule, QuantileRule, ExplicitRule>;

namespace detail {
inline double parse_double(std::string_view s, std::string_view what) {
  try {
    std::size_t used = 0;
    const std::string str(s);
    const double v = std::stod(str, &used);
    if (used != str.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ContractViolation("cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
  }
}

inline std::uint64_t parse_u64(std::string_view s, std::string_view what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ContractViolation("cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
  return v;
}
}  // namespace detail

// Grammar: universal:a=<x> | quantile:beta=<x>[,mc=<k>][,seed=<u64>] | value:<x>
inline ThresholdRule parse_threshold(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) throw ContractViolation("threshold needs '<rule>:<args>'");
  const auto kind = spec.substr(0, colon);
  auto args = spec.substr(colon + 1);
  if (kind == "value") return ExplicitRule{detail::parse_double(args, "threshold value")};
  UniversalRule uni;
  QuantileRule q;
  bool seen_main = false;
  while (!args.empty()) {
    const auto comma = args.find(',');
    const auto item = args.substr(0, comma);
    args = comma == std::string_view::npos ? std::string_view{} : args.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ContractViolation("threshold argument needs key=value");
    const auto key = item.substr(0, eq);
    const auto val = item.substr(eq + 1);
    if (kind == "universal" && key == "a") {
      uni.a = detail::parse_double(val, "a");
      seen_main = true;
    } else if (kind == "quantile" && key == "beta") {
      q.beta = detail::parse_double(val, "beta");
      seen_main = true;
    } else if (kind == "quantile" && key == "mc") {
      q.n_mc = static_cast<std::size_t>(detail::parse_u64(val, "mc"));
    } else if (kind == "quantile" && key == "seed") {
      q.seed = detail::parse_u64(val, "seed");
    } else {
      throw ContractViolation("unknown threshold argument '" + std::string(item) + "'");
    }
  }
  if (!seen_main) throw ContractViolation("threshold rule '" + std::string(kind) + "' is incomplete");
  if (kind == "universal") return uni;
  if (kind == "quantile") return q;
  throw ContractViolation("unknown threshold rule '" + std::string(kind) + "'");
}

struct ResolvedThreshold {
  double eta = 0.0;
  std::optional<CalibrationResult> calibration;
};

inline ResolvedThreshold resolve_threshold(const ThresholdRule& rule, const IntervalSystem& system,
                                           Penalty penalty, double sigma) {
  const std::size_t n = system.n();
  if (const auto* u = std::get_if<UniversalRule>(&rule)) return {universal_threshold(u->a, n), std::nullopt};
  if (const auto* e = std::get_if<ExplicitRule>(&rule)) return {e->value, std::nullopt};
  const auto& q = std::get<QuantileRule>(rule);
  auto cal = simulate_quantile(q.beta, n, system, penalty, sigma, q.n_mc, q.seed);
  return {cal.eta, cal};
}

}  // namespace msseg
