#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "msseg/detail/quadrature.hpp"
#include "msseg/errors.hpp"
#include "msseg/multiscale.hpp"
#include "msseg/signals.hpp"

namespace msseg {

struct Approximant {
  StepFunction g;
  std::vector<std::size_t> change_cells;
  double error = 0.0;  // sqrt(sum (f_i - g_i)^2 / n)
};

namespace detail {

// Suffix tables for "[i, n) with at most s segments", s = 1..max_segments.
// Ties keep the unsplit suffix, then the leftmost breakpoint.
class ApproximantTable {
 public:
  ApproximantTable(std::span<const double> cells, std::size_t max_segments)
      : n_(cells.size()), cells_(cells.begin(), cells.end()), ps_(cells), cost_(max_segments + 1), next_(max_segments + 1) {
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s <= max_segments; ++s) {
      cost_[s].assign(n_ + 1, inf);
      next_[s].assign(n_ + 1, n_);
      cost_[s][n_] = 0.0;
    }
    for (std::size_t s = 1; s <= max_segments; ++s) {
      for (std::size_t i = 0; i < n_; ++i) {
        double best = ps_.sse(i, n_);
        std::size_t arg = n_;
        if (s > 1) {
          for (std::size_t j = i + 1; j < n_; ++j) {
            const double c = ps_.sse(i, j) + cost_[s - 1][j];
            if (c < best) {
              best = c;
              arg = j;
            }
          }
        }
        cost_[s][i] = best;
        next_[s][i] = arg;
      }
    }
  }

  Approximant extract(std::size_t k) const {
    const std::size_t s_max = std::min(k + 1, cost_.size() - 1);
    Approximant out;
    std::vector<double> values;
    std::size_t i = 0;
    double sse = 0.0;
    for (std::size_t s = s_max; i < n_; --s) {
      const std::size_t j = next_[s][i];
      const double m = ps_.mean(i, j);
      values.push_back(m);
      for (std::size_t c = i; c < j; ++c) sse += (cells_[c] - m) * (cells_[c] - m);
      if (j < n_) out.change_cells.push_back(j);
      i = j;
    }
    out.error = std::sqrt(sse / static_cast<double>(n_));
    std::vector<std::size_t> kept;
    std::vector<double> kept_values{values.front()};
    for (std::size_t p = 0; p < out.change_cells.size(); ++p) {
      if (values[p + 1] == kept_values.back()) continue;
      kept.push_back(out.change_cells[p]);
      kept_values.push_back(values[p + 1]);
    }
    out.change_cells = kept;
    out.g = StepFunction::on_grid(n_, kept, kept_values);
    return out;
  }

 private:
  std::size_t n_;
  std::vector<double> cells_;
  PrefixSums ps_;
  std::vector<std::vector<double>> cost_;
  std::vector<std::vector<std::size_t>> next_;
};

}  // namespace detail

// Best grid step function with at most k jumps in the discrete L2 norm.
inline Approximant best_approximant(std::span<const double> f_cells, std::size_t k) {
  if (f_cells.empty()) throw ContractViolation("best_approximant: need at least one cell");
  const std::size_t segments = std::min(k + 1, f_cells.size());
  return detail::ApproximantTable(f_cells, segments).extract(segments - 1);
}

struct ApproximantCurve {
  std::vector<std::size_t> k;
  std::vector<double> errors;  // Delta_{2,k}
  std::vector<StepFunction> approximants;
  std::optional<double> slope;  // least-squares slope of log Delta vs log k, estimates -gamma
};

inline constexpr std::size_t kSlopeMinK = 4;
inline constexpr double kZeroError = 1e-12;

// Least-squares slope of log(errors) against log(k) over k >= kSlopeMinK, zero errors excluded.
inline std::optional<double> log_log_slope(std::span<const std::size_t> k, std::span<const double> errors) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k[i] < kSlopeMinK || errors[i] <= kZeroError) continue;
    xs.push_back(std::log(static_cast<double>(k[i])));
    ys.push_back(std::log(errors[i]));
  }
  if (xs.size() < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

inline ApproximantCurve approx_error_curve(std::span<const double> f_cells, std::size_t K) {
  if (K < 1) throw ContractViolation("approx_error_curve: K must be >= 1");
  if (f_cells.empty()) throw ContractViolation("approx_error_curve: need at least one cell");
  const std::size_t segments = std::min(K + 1, f_cells.size());
  const detail::ApproximantTable table(f_cells, segments);
  ApproximantCurve curve;
  for (std::size_t k = 1; k <= K; ++k) {
    auto a = table.extract(std::min(k, segments - 1));
    curve.k.push_back(k);
    curve.errors.push_back(a.error);
    curve.approximants.push_back(std::move(a.g));
  }
  curve.slope = log_log_slope(curve.k, curve.errors);
  return curve;
}

inline ApproximantCurve approx_error_curve(const Signal& f, std::size_t n, std::size_t K) {
  const auto cells = cell_means(f, n);
  return approx_error_curve(cells, K);
}

namespace detail {

inline std::vector<std::size_t> partition_cells(std::span<const double> tau, std::size_t n) {
  if (tau.size() < 2 || tau.front() != 0.0 || tau.back() != 1.0)
    throw ContractViolation("partition must start at 0 and end at 1");
  std::vector<std::size_t> out;
  for (double t : tau) {
    const double scaled = snap_to_grid(t * static_cast<double>(n));
    if (scaled != std::round(scaled)) throw ContractViolation("partition point is not on the grid");
    const auto c = static_cast<std::size_t>(scaled);
    if (!out.empty() && c <= out.back()) throw ContractViolation("partition must be strictly increasing");
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

// Equal partition 0, 1/m, ..., 1.
inline std::vector<double> equal_partition(std::size_t m) {
  if (m < 1) throw ContractViolation("equal_partition: m must be >= 1");
  std::vector<double> tau(m + 1);
  for (std::size_t i = 0; i <= m; ++i) tau[i] = static_cast<double>(i) / static_cast<double>(m);
  tau.back() = 1.0;
  return tau;
}

// Segment sample means of y on a fixed grid partition tau.
inline StepFunction oracle_segmentation(const Observation& y, std::span<const double> tau) {
  y.validate();
  const auto cells = detail::partition_cells(tau, y.n());
  const detail::PrefixSums ps(y.y);
  std::vector<double> values;
  for (std::size_t s = 0; s + 1 < cells.size(); ++s) values.push_back(ps.mean(cells[s], cells[s + 1]));
  return StepFunction::on_grid(y.n(), std::span(cells).subspan(1, cells.size() - 2), values);
}

namespace detail {

inline constexpr double kLossTolerance = 1e-8;

// Points where f is not smooth, inside (a, b).
inline std::vector<double> pieces(const Signal& f, double a, double b) {
  std::vector<double> cuts{a};
  std::vector<double> jumps;
  if (const auto* s = std::get_if<StepFunction>(&f))
    jumps = s->change_points();
  else
    jumps = std::get<ContinuousSignal>(f).discontinuities();
  for (double t : jumps)
    if (t > a && t < b) cuts.push_back(t);
  cuts.push_back(b);
  return cuts;
}

template <typename G>
double integrate_signal(const Signal& f, double a, double b, const G& g) {
  const auto cuts = pieces(f, a, b);
  double total = 0.0;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p)
    total += detail::integrate([&](double x) { return g(evaluate(f, x)); }, cuts[p], cuts[p + 1],
                               kLossTolerance);
  return total;
}

inline double step_integral(const StepFunction& f, double a, double b) {
  const auto& bps = f.breakpoints();
  const auto& vals = f.values();
  double s = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double lo = std::max(a, bps[i]);
    const double hi = std::min(b, bps[i + 1]);
    if (hi > lo) s += vals[i] * (hi - lo);
  }
  return s;
}

inline double step_squared_deviation(const StepFunction& f, double a, double b, double c) {
  const auto& bps = f.breakpoints();
  const auto& vals = f.values();
  double s = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double lo = std::max(a, bps[i]);
    const double hi = std::min(b, bps[i + 1]);
    if (hi > lo) s += (vals[i] - c) * (vals[i] - c) * (hi - lo);
  }
  return s;
}

}  // namespace detail

struct OracleRisk {
  std::vector<double> tau;
  double bias_sq = 0.0;       // ||s_tau - f||^2 in the continuum
  double variance = 0.0;      // (#tau / n) sigma^2
  double total = 0.0;
  double grid_bias_sq = 0.0;  // the same bias measured on cell means
};

// Risk decomposition of the oracle segmentation on tau; s_tau is the best L2
// approximant of f that is constant on the pieces of tau.
inline OracleRisk oracle_risk(const Signal& f, std::span<const double> tau, double sigma, std::size_t n) {
  if (!(sigma >= 0.0)) throw DomainError("oracle_risk: sigma must be >= 0");
  const auto cells = detail::partition_cells(tau, n);
  const auto step = step_form(f);
  OracleRisk r;
  r.tau.assign(tau.begin(), tau.end());
  for (std::size_t s = 0; s + 1 < tau.size(); ++s) {
    const double a = tau[s];
    const double b = tau[s + 1];
    if (step) {
      const double c = detail::step_integral(*step, a, b) / (b - a);
      r.bias_sq += detail::step_squared_deviation(*step, a, b, c);
    } else {
      const double c = detail::integrate_signal(f, a, b, [](double v) { return v; }) / (b - a);
      r.bias_sq += detail::integrate_signal(f, a, b, [c](double v) { return (v - c) * (v - c); });
    }
  }
  const auto fbar = cell_means(f, n);
  const detail::PrefixSums ps(fbar);
  for (std::size_t s = 0; s + 1 < cells.size(); ++s) r.grid_bias_sq += ps.sse(cells[s], cells[s + 1]);
  r.grid_bias_sq /= static_cast<double>(n);
  r.variance = static_cast<double>(tau.size() - 1) / static_cast<double>(n) * sigma * sigma;
  r.total = r.bias_sq + r.variance;
  return r;
}

// ||f - g||_{L^p} on [0,1).
inline double lp_loss(const Signal& f, const StepFunction& g, double p) {
  if (!(p > 0.0 && std::isfinite(p))) throw DomainError("lp_loss: p must lie in (0, inf)");
  const auto& gb = g.breakpoints();
  double total = 0.0;
  if (const auto step = step_form(f)) {
    std::vector<double> cuts = step->breakpoints();
    cuts.insert(cuts.end(), gb.begin(), gb.end());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
      total += std::pow(std::abs((*step)(mid) - g(mid)), p) * (cuts[i + 1] - cuts[i]);
    }
  } else {
    for (std::size_t s = 0; s + 1 < gb.size(); ++s) {
      const double c = g.values()[s];
      total += detail::integrate_signal(f, gb[s], gb[s + 1], [c, p](double v) { return std::pow(std::abs(v - c), p); });
    }
  }
  return std::pow(total, 1.0 / p);
}

}  // namespace msseg
