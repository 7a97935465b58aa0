#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "msseg/errors.hpp"
#include "msseg/intervals.hpp"
#include "msseg/multiscale.hpp"
#include "msseg/solver.hpp"

namespace msseg {

struct ConfidenceParams {
  double beta = 0.1;
  double eta = 0.0;  // eta(beta)
  std::size_t m = 1;  // change-point window, in cells
};

// floor(log n), at least one cell.
inline std::size_t default_window(std::size_t n) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::log(static_cast<double>(n)))));
}

// r_I = 2 (eta + s_I) / sqrt(n|I|)
inline double r_value(const GridInterval& I, double eta, Penalty penalty, const GridInterval& segment,
                      std::size_t n) {
  const double s = penalty_value(penalty, I, segment, n);
  return 2.0 * (eta + s) / std::sqrt(static_cast<double>(I.length()));
}

// Index of the estimate segment that contains I, if the estimate is constant on I.
inline std::optional<std::size_t> segment_containing(const Estimate& est, const GridInterval& I) {
  for (std::size_t s = 0; s < est.segments.size(); ++s)
    if (est.segments[s].cells.contains(I)) return s;
  return std::nullopt;
}

// True iff m_{I1}(est) > m_{I2}(est) + r_{I1} + r_{I2}; a true result certifies
// m_{I1}(f) > m_{I2}(f) simultaneously over all such pairs with confidence 1 - beta.
inline bool mean_order_claim(const Estimate& est, const GridInterval& first, const GridInterval& second,
                             const ConfidenceParams& params) {
  const auto s1 = segment_containing(est, first);
  const auto s2 = segment_containing(est, second);
  if (!s1 || !s2) throw ContractViolation("mean_order_claim: estimate is not constant on an input interval");
  const auto& a = est.segments[*s1];
  const auto& b = est.segments[*s2];
  const double r1 = est.noise_scale * r_value(first, params.eta, est.penalty, a.cells, est.n);
  const double r2 = est.noise_scale * r_value(second, params.eta, est.penalty, b.cells, est.n);
  return a.value > b.value + r1 + r2;
}

enum class Direction { increase, decrease, inconclusive };

inline std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::increase: return "increase";
    case Direction::decrease: return "decrease";
    case Direction::inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct MonotonicityEntry {
  std::size_t change_cell = 0;  // tau_i on the grid
  Direction direction = Direction::inconclusive;
  double u_left = 0.0, l_left = 0.0, u_right = 0.0, l_right = 0.0;
  bool left_empty = false;
  bool right_empty = false;
};

namespace detail {

// Smallest r_I over system members inside window, penalties relative to segment.
inline std::optional<double> min_r_in_window(const IntervalSystem& system, const GridInterval& window,
                                             const GridInterval& segment, double eta, Penalty penalty) {
  if (window.start >= window.end) return std::nullopt;
  std::optional<double> best;
  system.for_each_within(window, [&](const GridInterval& I) {
    const double r = r_value(I, eta, penalty, segment, system.n());
    if (!best || r < *best) best = r;
  });
  return best;
}

}  // namespace detail

// Increase/decrease claims between adjacent segments, using members inside the second
// half of the left segment and the first half of the right segment.
inline std::vector<MonotonicityEntry> monotonicity(const Estimate& est, const IntervalSystem& system,
                                                   const ConfidenceParams& params) {
  if (system.n() != est.n) throw ContractViolation("monotonicity: system size differs from the estimate");
  std::vector<MonotonicityEntry> out;
  for (std::size_t s = 0; s + 1 < est.segments.size(); ++s) {
    const auto& left = est.segments[s];
    const auto& right = est.segments[s + 1];
    const std::size_t cut = left.cells.end;
    // [tau_{i-1/2}, tau_i) and [tau_i, tau_{i+1/2}) shrunk to whole cells.
    const GridInterval left_window{(left.cells.start + left.cells.end + 1) / 2, cut};
    const GridInterval right_window{cut, (right.cells.start + right.cells.end) / 2};
    const auto rl = detail::min_r_in_window(system, left_window, left.cells, params.eta, est.penalty);
    const auto rr = detail::min_r_in_window(system, right_window, right.cells, params.eta, est.penalty);

    MonotonicityEntry e;
    e.change_cell = cut;
    e.left_empty = !rl;
    e.right_empty = !rr;
    if (rl && rr) {
      const double dl = est.noise_scale * *rl, dr = est.noise_scale * *rr;
      e.u_left = left.value + dl;
      e.l_left = left.value - dl;
      e.u_right = right.value + dr;
      e.l_right = right.value - dr;
      if (e.u_left < e.l_right)
        e.direction = Direction::increase;
      else if (e.l_left > e.u_right)
        e.direction = Direction::decrease;
    }
    out.push_back(e);
  }
  return out;
}

struct JumpAssessment {
  std::size_t change_cell = 0;
  double location = 0.0;
  double left_lo = 0.0, left_hi = 0.0;
  double right_lo = 0.0, right_hi = 0.0;
  std::size_t left_cells = 0;   // window length actually used
  std::size_t right_cells = 0;
  bool clipped = false;  // a window was shortened to fit its segment
  bool significant = false;
};

// A change-point is significant when
//   [c_i - r_{[tau-m/n, tau)}, c_i + r]  and  [c_{i+1} - r_{[tau, tau+m/n)}, c_{i+1} + r]
// are disjoint. Windows longer than the adjacent segment are clipped to it.
inline std::vector<JumpAssessment> significant_jumps(const Estimate& est, const ConfidenceParams& params) {
  if (params.m < 1) throw ContractViolation("significant_jumps: window m must be >= 1");
  std::vector<JumpAssessment> out;
  for (std::size_t s = 0; s + 1 < est.segments.size(); ++s) {
    const auto& left = est.segments[s];
    const auto& right = est.segments[s + 1];
    JumpAssessment a;
    a.change_cell = left.cells.end;
    a.location = static_cast<double>(a.change_cell) / static_cast<double>(est.n);
    a.left_cells = std::min(params.m, left.cells.length());
    a.right_cells = std::min(params.m, right.cells.length());
    a.clipped = a.left_cells < params.m || a.right_cells < params.m;
    const GridInterval lw{a.change_cell - a.left_cells, a.change_cell};
    const GridInterval rw{a.change_cell, a.change_cell + a.right_cells};
    const double rl = est.noise_scale * r_value(lw, params.eta, est.penalty, left.cells, est.n);
    const double rr = est.noise_scale * r_value(rw, params.eta, est.penalty, right.cells, est.n);
    a.left_lo = left.value - rl;
    a.left_hi = left.value + rl;
    a.right_lo = right.value - rr;
    a.right_hi = right.value + rr;
    a.significant = a.left_hi < a.right_lo || a.right_hi < a.left_lo;
    out.push_back(a);
  }
  return out;
}

// max over true change-points of the distance to the nearest estimated one;
// +infinity when nothing was estimated.
inline double jump_distance(std::span<const double> estimated, std::span<const double> truth) {
  if (truth.empty()) throw ContractViolation("jump_distance: truth must have at least one change-point");
  if (estimated.empty()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (double t : truth) {
    double nearest = std::numeric_limits<double>::infinity();
    for (double e : estimated) nearest = std::min(nearest, std::abs(t - e));
    worst = std::max(worst, nearest);
  }
  return worst;
}

struct ModeCount {
  std::size_t modes = 0;    // interior local maxima
  std::size_t troughs = 0;  // interior local minima
  std::size_t boundary_modes = 0;
  std::size_t boundary_troughs = 0;

  std::size_t total_modes() const noexcept { return modes + boundary_modes; }
  std::size_t total_troughs() const noexcept { return troughs + boundary_troughs; }
};

// Segments strictly above (below) both neighbours are modes (troughs); the first and
// last segment count as boundary modes/troughs against their single neighbour.
inline ModeCount count_modes_troughs(const StepFunction& f) {
  ModeCount out;
  const auto& v = f.values();
  const std::size_t k = v.size();
  if (k < 2) return out;
  for (std::size_t i = 1; i + 1 < k; ++i) {
    if (v[i - 1] < v[i] && v[i] > v[i + 1]) ++out.modes;
    if (v[i - 1] > v[i] && v[i] < v[i + 1]) ++out.troughs;
  }
  (v[0] > v[1] ? out.boundary_modes : out.boundary_troughs) += 1;
  (v[k - 1] > v[k - 2] ? out.boundary_modes : out.boundary_troughs) += 1;
  return out;
}

struct FeatureReport {
  std::vector<JumpAssessment> jumps;
  std::vector<MonotonicityEntry> monotonicity;
  std::size_t modes_lower_bound = 0;
  std::size_t troughs_lower_bound = 0;
  double beta = 0.0;
  double eta = 0.0;
  std::size_t m = 0;
};

inline FeatureReport feature_report(const Estimate& est, const IntervalSystem& system,
                                    const ConfidenceParams& params) {
  FeatureReport rep;
  rep.beta = params.beta;
  rep.eta = params.eta;
  rep.m = params.m;
  rep.jumps = significant_jumps(est, params);
  rep.monotonicity = monotonicity(est, system, params);
  // Certified windows do not overlap, so each increase followed by a decrease
  // (in the sequence of conclusive claims) certifies a distinct mode.
  Direction previous = Direction::inconclusive;
  for (const auto& e : rep.monotonicity) {
    if (e.direction == Direction::inconclusive) continue;
    if (previous == Direction::increase && e.direction == Direction::decrease) ++rep.modes_lower_bound;
    if (previous == Direction::decrease && e.direction == Direction::increase) ++rep.troughs_lower_bound;
    previous = e.direction;
  }
  return rep;
}

}  // namespace msseg
