#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "msseg/errors.hpp"
#include "msseg/intervals.hpp"
#include "msseg/multiscale.hpp"
#include "msseg/signals.hpp"

namespace msseg {

// Rounding slack applied to band endpoints before emptiness tests.
inline constexpr double kBandSlack = 1e-9;

// Values c a constant segment may take so that every member I inside it passes its
// local test: sqrt(n|I|) |mean_I - c| - s_I <= eta.
struct FeasibleBand {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool empty() const noexcept { return lo - kBandSlack > hi + kBandSlack; }

  void intersect(double other_lo, double other_hi) noexcept {
    lo = std::max(lo, other_lo);
    hi = std::min(hi, other_hi);
  }
  void intersect(const FeasibleBand& o) noexcept { intersect(o.lo, o.hi); }

  // Closest admissible value; a band that is empty only within the slack maps to its midpoint.
  double clip(double v) const noexcept {
    if (lo > hi) return 0.5 * (lo + hi);
    return std::clamp(v, lo, hi);
  }
};

namespace detail {

inline FeasibleBand member_band(const PrefixSums& ps, const GridInterval& I, double s, double eta) {
  const double half = (eta + s) / std::sqrt(static_cast<double>(I.length()));
  const double m = ps.mean(I.start, I.end);
  return {m - half, m + half};
}

inline FeasibleBand direct_band(const PrefixSums& ps, std::size_t i, std::size_t j, const IntervalSystem& system,
                                Penalty penalty, double eta) {
  FeasibleBand band;
  const std::size_t n = system.n();
  system.for_each_within(GridInterval{i, j}, [&](const GridInterval& I) {
    band.intersect(member_band(ps, I, scale_penalty(penalty, I.length(), j - i, n), eta));
  });
  return band;
}

inline void check_grid(const Observation& y, const IntervalSystem& system) {
  y.validate();
  if (system.n() != y.n()) throw ContractViolation("interval system size differs from the data length");
}

}  // namespace detail

// Intersection band for the candidate segment [i/n, j/n); fdrseg uses I~ = [i/n, j/n).
inline FeasibleBand segment_band(const Observation& y, std::size_t i, std::size_t j, const IntervalSystem& system,
                                 Penalty penalty, double eta) {
  detail::check_grid(y, system);
  if (!(i < j && j <= y.n())) throw ContractViolation("segment_band: need 0 <= i < j <= n");
  const detail::PrefixSums ps(y.y);
  return detail::direct_band(ps, i, j, system, penalty, eta);
}

// Largest j such that the band of [i/n, j/n) is non-empty. For smuce and none the
// bands shrink as j grows, so the scan stops at the first empty band; fdrseg bands
// depend on the segment and every j is checked.
inline std::size_t prune_certificate(const Observation& y, std::size_t i, const IntervalSystem& system,
                                     Penalty penalty, double eta) {
  detail::check_grid(y, system);
  const std::size_t n = y.n();
  if (i >= n) throw ContractViolation("prune_certificate: start cell outside the grid");
  const detail::PrefixSums ps(y.y);
  if (detail::direct_band(ps, i, i + 1, system, penalty, eta).empty())
    throw ContractViolation("prune_certificate: single-cell band is empty");

  if (penalty == Penalty::fdrseg) {
    std::size_t last = i + 1;
    for (std::size_t j = i + 2; j <= n; ++j)
      if (!detail::direct_band(ps, i, j, system, penalty, eta).empty()) last = j;
    return last;
  }
  FeasibleBand band;
  std::size_t last = i;
  for (std::size_t j = i + 1; j <= n; ++j) {
    system.for_each_ending_at(j, i, [&](const GridInterval& I) {
      band.intersect(detail::member_band(ps, I, scale_penalty(penalty, I.length(), j - i, n), eta));
    });
    if (band.empty()) break;
    last = j;
  }
  return last;
}

struct EstimateSegment {
  GridInterval cells;
  double value = 0.0;
  FeasibleBand band;
};

struct Estimate {
  std::size_t n = 0;
  double sigma = 0.0;
  StepFunction fit;
  std::vector<EstimateSegment> segments;
  std::size_t jumps = 0;
  double eta = 0.0;
  IntervalKind intervals = IntervalKind::dyadic_length;
  Penalty penalty = Penalty::smuce;
  double certificate = 0.0;  // multiscale statistic of the fit, <= eta
  std::optional<CalibrationResult> calibration;
  // 1 for a fit of y itself; sigma when the constraint was imposed on y / sigma.
  // Values and bands are always in signal units.
  double noise_scale = 1.0;

  std::vector<std::size_t> change_cells() const {
    std::vector<std::size_t> out;
    for (std::size_t s = 1; s < segments.size(); ++s) out.push_back(segments[s].cells.start);
    return out;
  }
};

// Minimal-jump step function subject to T_I(y; f) <= eta.
//
// One backward dynamic program over suffixes [i, n) with lexicographic objective
// (number of segments, constrained residual sum of squares). For each start cell i the
// candidate ends j are scanned upwards; the band of [i, j) is the running
// intersection of end_band[j], where end_band[j] holds the intersection of the member
// intervals [a, j) with a >= i. The scan stops at the first empty band (bands are
// nested in j for smuce/none). Segment values are the sample means clipped into the
// band. Ties keep the smallest next breakpoint, which yields the lexicographically
// smallest change-point sequence among optimal partitions.
inline Estimate fit(const Observation& y, const IntervalSystem& system, Penalty penalty, double eta) {
  detail::check_grid(y, system);
  const std::size_t n = y.n();
  const detail::PrefixSums ps(y.y);

  for (std::size_t i = 0; i < n; ++i)
    if (detail::direct_band(ps, i, i + 1, system, penalty, eta).empty()) throw InfeasibleError(i);

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> count(n + 1, kNone);
  std::vector<double> cost(n + 1, inf);
  std::vector<std::size_t> next(n + 1, kNone);
  std::vector<FeasibleBand> chosen_band(n + 1);
  count[n] = 0;
  cost[n] = 0.0;

  auto consider = [&](std::size_t i, std::size_t j, const FeasibleBand& band) {
    if (count[j] == kNone) return;
    const double mean = ps.mean(i, j);
    const double c = band.clip(mean);
    const double seg_cost = ps.sse(i, j) + static_cast<double>(j - i) * (c - mean) * (c - mean);
    const std::size_t k = count[j] + 1;
    const double total = cost[j] + seg_cost;
    if (k < count[i] || (k == count[i] && total < cost[i])) {
      count[i] = k;
      cost[i] = total;
      next[i] = j;
      chosen_band[i] = band;
    }
  };

  if (penalty == Penalty::fdrseg) {
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t j = i + 1; j <= n; ++j) {
        const FeasibleBand band = detail::direct_band(ps, i, j, system, penalty, eta);
        if (!band.empty()) consider(i, j, band);
      }
    }
  } else {
    std::vector<FeasibleBand> end_band(n + 1);
    for (std::size_t i = n; i-- > 0;) {
      system.for_each_starting_at(i, n, [&](const GridInterval& I) {
        end_band[I.end].intersect(detail::member_band(ps, I, scale_penalty(penalty, I.length(), n, n), eta));
      });
      FeasibleBand band;
      for (std::size_t j = i + 1; j <= n; ++j) {
        band.intersect(end_band[j]);
        if (band.empty()) break;
        consider(i, j, band);
      }
    }
  }

  Estimate est;
  est.n = n;
  est.sigma = y.sigma;
  est.eta = eta;
  est.intervals = system.kind();
  est.penalty = penalty;
  std::vector<std::size_t> changes;
  std::vector<double> values;
  for (std::size_t i = 0; i < n; i = next[i]) {
    const FeasibleBand& band = chosen_band[i];
    const double value = band.clip(ps.mean(i, next[i]));
    est.segments.push_back({{i, next[i]}, value, band});
    if (i > 0) changes.push_back(i);
    values.push_back(value);
  }
  est.fit = StepFunction::on_grid(n, changes, values);
  est.jumps = est.fit.jumps();
  const auto segs = grid_segments(est.fit, n);
  est.certificate = multiscale_statistic(y.y, segs, system, penalty);
  return est;
}

// Fit with the constraint on y / sigma (the stepR SMUCE convention), so eta and the
// penalties are in noise-standard-deviation units. eta comes from a sigma = 1 calibration.
inline Estimate fit_standardized(const Observation& y, const IntervalSystem& system, Penalty penalty, double eta) {
  if (!(y.sigma > 0.0) || !std::isfinite(y.sigma)) throw DomainError("fit_standardized: sigma must be positive");
  Observation z{y.y, 1.0};
  for (double& v : z.y) v /= y.sigma;
  Estimate est = fit(z, system, penalty, eta);
  est.sigma = y.sigma;
  est.noise_scale = y.sigma;
  est.fit = est.fit.scaled(y.sigma);
  for (auto& seg : est.segments) {
    seg.value *= y.sigma;
    seg.band.lo *= y.sigma;
    seg.band.hi *= y.sigma;
  }
  return est;
}

}  // namespace msseg
