#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "msseg/detail/quadrature.hpp"
#include "msseg/errors.hpp"

namespace msseg {

// Right-continuous step function on [0,1):
//   f = sum_i values[i] * 1[breakpoints[i], breakpoints[i+1])
// Stored in canonical form: adjacent values always differ.
class StepFunction {
 public:
  StepFunction() : breakpoints_{0.0, 1.0}, values_{0.0} {}

  StepFunction(std::vector<double> breakpoints, std::vector<double> values) {
    if (breakpoints.size() < 2 || values.size() + 1 != breakpoints.size())
      throw ContractViolation("StepFunction: need k+2 breakpoints for k+1 values");
    if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0)
      throw ContractViolation("StepFunction: breakpoints must start at 0 and end at 1");
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
      if (!(breakpoints[i] < breakpoints[i + 1]))
        throw ContractViolation("StepFunction: breakpoints must be strictly increasing");
    for (double v : values)
      if (!std::isfinite(v)) throw ContractViolation("StepFunction: values must be finite");

    breakpoints_.push_back(0.0);
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!values_.empty() && values_.back() == values[i]) continue;  // merge equal neighbours
      if (i > 0) breakpoints_.push_back(breakpoints[i]);
      values_.push_back(values[i]);
    }
    breakpoints_.push_back(1.0);
  }

  static StepFunction constant(double c) { return StepFunction({0.0, 1.0}, {c}); }

  // Step function on the n-grid: change_cells are interior cell indices (strictly
  // increasing, in (0, n)), values has change_cells.size() + 1 entries.
  static StepFunction on_grid(std::size_t n, std::span<const std::size_t> change_cells,
                              std::span<const double> values) {
    std::vector<double> bps;
    bps.reserve(change_cells.size() + 2);
    bps.push_back(0.0);
    for (std::size_t c : change_cells) {
      if (c == 0 || c >= n) throw ContractViolation("StepFunction::on_grid: change cell outside (0, n)");
      bps.push_back(static_cast<double>(c) / static_cast<double>(n));
    }
    bps.push_back(1.0);
    return StepFunction(std::move(bps), std::vector<double>(values.begin(), values.end()));
  }

  double operator()(double x) const {
    auto it = std::upper_bound(breakpoints_.begin() + 1, breakpoints_.end() - 1, x);
    return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
  }

  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t segments() const noexcept { return values_.size(); }
  std::size_t jumps() const noexcept { return values_.size() - 1; }

  // Interior breakpoints, i.e. J(f).
  std::vector<double> change_points() const {
    return std::vector<double>(breakpoints_.begin() + 1, breakpoints_.end() - 1);
  }

  double integral() const {
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i)
      s += values_[i] * (breakpoints_[i + 1] - breakpoints_[i]);
    return s;
  }

  StepFunction shifted(double c) const {
    std::vector<double> v = values_;
    for (double& x : v) x += c;
    return StepFunction(breakpoints_, std::move(v));
  }

  StepFunction scaled(double lambda) const {
    std::vector<double> v = values_;
    for (double& x : v) x *= lambda;
    return StepFunction(breakpoints_, std::move(v));
  }

  friend bool operator==(const StepFunction&, const StepFunction&) = default;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

// Cell indices of the breakpoints of f on the n-grid (including 0 and n).
// Throws ContractViolation when a breakpoint is not a multiple of 1/n.
inline std::vector<std::size_t> grid_breakpoints(const StepFunction& f, std::size_t n) {
  std::vector<std::size_t> out;
  out.reserve(f.breakpoints().size());
  for (double b : f.breakpoints()) {
    const double scaled = b * static_cast<double>(n);
    const double r = std::round(scaled);
    if (std::abs(scaled - r) > 1e-9 * std::max(1.0, scaled))
      throw ContractViolation("breakpoint " + std::to_string(b) + " is not on the 1/" +
                              std::to_string(n) + " grid");
    out.push_back(static_cast<std::size_t>(r));
  }
  return out;
}

enum class SignalKind { blocks, bumps, heavisine, doppler, ramp, sine_distorted_step };

inline std::string_view to_string(SignalKind k) {
  switch (k) {
    case SignalKind::blocks: return "blocks";
    case SignalKind::bumps: return "bumps";
    case SignalKind::heavisine: return "heavisine";
    case SignalKind::doppler: return "doppler";
    case SignalKind::ramp: return "ramp";
    case SignalKind::sine_distorted_step: return "sine-distorted-step";
  }
  return "unknown";
}

// Donoho-Johnstone test-signal constants (WaveLab MakeSignal, unnormalized).
namespace dj {
inline constexpr std::array<double, 11> positions = {0.10, 0.13, 0.15, 0.23, 0.25, 0.40,
                                                     0.44, 0.65, 0.76, 0.78, 0.81};
inline constexpr std::array<double, 11> block_heights = {4, -5, 3, -4, 5, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2};
inline constexpr std::array<double, 11> bump_heights = {4, 5, 3, 4, 5, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2};
inline constexpr std::array<double, 11> bump_widths = {0.005, 0.005, 0.006, 0.01, 0.01, 0.03,
                                                       0.01,  0.01,  0.005, 0.008, 0.005};
inline constexpr std::array<double, 2> heavisine_jumps = {0.3, 0.72};
}  // namespace dj

// Parameters of the sine-distorted step signal
//   y_i = fbar_i + 0.25 * b * sin(a * pi * i),  i = 0..n_ref-1.
// The distortion lives on sample indices, so the signal is a step function on the
// n_ref grid merged with the base breakpoints.
struct SineDistortion {
  StepFunction base;
  double amplitude_b = 0.0;
  double frequency_a = 0.0;
  std::size_t n_ref = 1;

  double offset(std::size_t i) const {
    return 0.25 * amplitude_b * std::sin(frequency_a * std::numbers::pi * static_cast<double>(i));
  }
};

class ContinuousSignal {
 public:
  static ContinuousSignal blocks() { return ContinuousSignal(SignalKind::blocks); }
  static ContinuousSignal bumps() { return ContinuousSignal(SignalKind::bumps); }
  static ContinuousSignal heavisine() { return ContinuousSignal(SignalKind::heavisine); }
  static ContinuousSignal doppler() { return ContinuousSignal(SignalKind::doppler); }
  static ContinuousSignal ramp() { return ContinuousSignal(SignalKind::ramp); }
  static ContinuousSignal sine_distorted(StepFunction base, double b, double a, std::size_t n_ref) {
    if (n_ref < 1) throw ContractViolation("sine_distorted: n_ref must be >= 1");
    ContinuousSignal s(SignalKind::sine_distorted_step);
    s.distortion_ = SineDistortion{std::move(base), b, a, n_ref};
    s.step_ = s.build_distorted_step();
    return s;
  }

  SignalKind kind() const noexcept { return kind_; }
  const std::optional<SineDistortion>& distortion() const noexcept { return distortion_; }

  double operator()(double x) const {
    switch (kind_) {
      case SignalKind::blocks:
      case SignalKind::sine_distorted_step: return (*step_)(x);
      case SignalKind::bumps: {
        double s = 0.0;
        for (std::size_t j = 0; j < dj::positions.size(); ++j)
          s += dj::bump_heights[j] / std::pow(1.0 + std::abs((x - dj::positions[j]) / dj::bump_widths[j]), 4);
        return s;
      }
      case SignalKind::heavisine: {
        auto sgn = [](double v) { return static_cast<double>((v > 0) - (v < 0)); };
        return 4.0 * std::sin(4.0 * std::numbers::pi * x) - sgn(x - 0.3) - sgn(0.72 - x);
      }
      case SignalKind::doppler:
        return std::sqrt(x * (1.0 - x)) * std::sin(2.0 * std::numbers::pi * 1.05 / (x + 0.05));
      case SignalKind::ramp: return x;
    }
    return 0.0;
  }

  // Known jump locations; quadrature splits cells there.
  std::vector<double> discontinuities() const {
    if (kind_ == SignalKind::heavisine)
      return std::vector<double>(dj::heavisine_jumps.begin(), dj::heavisine_jumps.end());
    if (step_) return step_->change_points();
    return {};
  }

  // Exact step representation for piecewise-constant kinds.
  const std::optional<StepFunction>& as_step() const noexcept { return step_; }

 private:
  explicit ContinuousSignal(SignalKind k) : kind_(k) {
    if (k == SignalKind::blocks) step_ = make_blocks_step();
  }

  static StepFunction make_blocks_step() {
    std::vector<double> bps{0.0};
    std::vector<double> vals{0.0};
    double level = 0.0;
    for (std::size_t j = 0; j < dj::positions.size(); ++j) {
      level += dj::block_heights[j];
      bps.push_back(dj::positions[j]);
      vals.push_back(level);
    }
    bps.push_back(1.0);
    return StepFunction(std::move(bps), std::move(vals));
  }

  StepFunction build_distorted_step() const {
    const auto& d = *distortion_;
    const double nr = static_cast<double>(d.n_ref);
    std::vector<double> bps;
    bps.reserve(d.n_ref + d.base.breakpoints().size());
    for (std::size_t i = 0; i <= d.n_ref; ++i) bps.push_back(static_cast<double>(i) / nr);
    bps.insert(bps.end(), d.base.breakpoints().begin(), d.base.breakpoints().end());
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    std::vector<double> vals;
    vals.reserve(bps.size() - 1);
    for (std::size_t p = 0; p + 1 < bps.size(); ++p) {
      const double mid = 0.5 * (bps[p] + bps[p + 1]);
      const auto cell = std::min(d.n_ref - 1, static_cast<std::size_t>(std::floor(mid * nr)));
      vals.push_back(d.base(mid) + d.offset(cell));
    }
    return StepFunction(std::move(bps), std::move(vals));
  }

  SignalKind kind_;
  std::optional<StepFunction> step_;
  std::optional<SineDistortion> distortion_;
};

using Signal = std::variant<StepFunction, ContinuousSignal>;

inline std::optional<StepFunction> step_form(const Signal& f) {
  if (const auto* s = std::get_if<StepFunction>(&f)) return *s;
  return std::get<ContinuousSignal>(f).as_step();
}

inline double evaluate(const Signal& f, double x) {
  return std::visit([x](const auto& g) { return g(x); }, f);
}

namespace detail {
inline double snap_to_grid(double scaled) {
  const double r = std::round(scaled);
  return std::abs(scaled - r) <= 1e-9 * std::max(1.0, std::abs(scaled)) ? r : scaled;
}
}  // namespace detail

inline std::vector<double> cell_means(const StepFunction& f, std::size_t n) {
  using detail::snap_to_grid;
  if (n < 1) throw DomainError("cell_means: n must be >= 1");
  std::vector<double> out(n, 0.0);
  const double nd = static_cast<double>(n);
  const auto& bps = f.breakpoints();
  const auto& vals = f.values();
  for (std::size_t s = 0; s < vals.size(); ++s) {
    // Work in cell units so grid-aligned breakpoints give exact overlaps.
    const double a = snap_to_grid(bps[s] * nd);
    const double b = snap_to_grid(bps[s + 1] * nd);
    auto first = static_cast<std::size_t>(std::floor(a));
    auto last = std::min(n, static_cast<std::size_t>(std::ceil(b)));
    for (std::size_t i = first; i < last; ++i) {
      const double overlap = std::min(b, static_cast<double>(i + 1)) - std::max(a, static_cast<double>(i));
      if (overlap > 0.0) out[i] += vals[s] * overlap;
    }
  }
  return out;
}

// Per-cell quadrature tolerance on the cell mean.
inline constexpr double kCellMeanTolerance = 1e-10;

// n * integral of f over each cell, pieces split at the given jump locations.
template <typename F>
std::vector<double> integrate_cells(const F& f, std::size_t n, std::span<const double> jumps) {
  if (n < 1) throw DomainError("cell_means: n must be >= 1");
  const double nd = static_cast<double>(n);
  std::vector<double> out(n);
  std::vector<double> cuts;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = static_cast<double>(i) / nd;
    const double b = static_cast<double>(i + 1) / nd;
    cuts.assign({a});
    for (double t : jumps)
      if (t > a && t < b) cuts.push_back(t);
    cuts.push_back(b);
    double integral = 0.0;
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p)
      integral += detail::integrate(f, cuts[p], cuts[p + 1], kCellMeanTolerance / nd);
    out[i] = integral * nd;
    if (!std::isfinite(out[i])) throw EvaluationError(i, "non-finite signal evaluation");
  }
  return out;
}

inline std::vector<double> cell_means(const ContinuousSignal& f, std::size_t n) {
  if (f.as_step()) return cell_means(*f.as_step(), n);
  const auto jumps = f.discontinuities();
  return integrate_cells(f, n, jumps);
}

inline std::vector<double> cell_means(const Signal& f, std::size_t n) {
  return std::visit([n](const auto& g) { return cell_means(g, n); }, f);
}

// Signal of Olshen et al. / Zhang-Siegmund on the 497-point grid.
inline constexpr std::size_t kOlshenSampleSize = 497;

inline StepFunction make_olshen_signal() {
  constexpr std::array<std::size_t, 6> cps = {138, 225, 242, 299, 308, 332};
  const std::vector<double> values = {-0.18, 0.08, 1.07, -0.53, 0.16, -0.69, -0.16};
  return StepFunction::on_grid(kOlshenSampleSize, cps, values);
}

// Discrete L2 norm sqrt(mean of squared cell means).
inline double grid_l2_norm(std::span<const double> cells) {
  double s = 0.0;
  for (double v : cells) s += v * v;
  return std::sqrt(s / static_cast<double>(cells.size()));
}

inline double snr_sigma(const Signal& f, double target_snr, std::size_t n) {
  if (!(target_snr > 0.0)) throw DomainError("snr_sigma: target SNR must be positive");
  const double norm = grid_l2_norm(cell_means(f, n));
  if (!(norm > 0.0)) throw DomainError("snr_sigma: signal has zero L2 norm");
  return norm / target_snr;
}

struct Observation {
  std::vector<double> y;
  double sigma = 0.0;

  std::size_t n() const noexcept { return y.size(); }

  void validate() const {
    if (y.empty()) throw ContractViolation("Observation: n must be >= 1");
    if (!(sigma >= 0.0)) throw ContractViolation("Observation: sigma must be >= 0");
    for (double v : y)
      if (!std::isfinite(v)) throw ContractViolation("Observation: values must be finite");
  }
};

enum class NoiseKind { gaussian, scaled_rademacher, uniform };

inline std::string_view to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::scaled_rademacher: return "scaled-rademacher";
    case NoiseKind::uniform: return "uniform";
  }
  return "unknown";
}

struct NoiseModel {
  NoiseKind kind = NoiseKind::gaussian;
  double sigma = 1.0;
  std::uint64_t seed = 0;
};

// Seed of replicate r derived from an experiment's base seed.
inline constexpr std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t r) noexcept {
  return base ^ (r * 0x9E3779B97F4A7C15ULL);
}

inline std::vector<double> draw_noise(std::size_t n, const NoiseModel& noise) {
  std::vector<double> xi(n, 0.0);
  if (noise.sigma == 0.0) return xi;
  std::mt19937_64 rng(noise.seed);
  switch (noise.kind) {
    case NoiseKind::gaussian: {
      std::normal_distribution<double> d(0.0, noise.sigma);
      for (double& v : xi) v = d(rng);
      break;
    }
    case NoiseKind::scaled_rademacher: {
      std::bernoulli_distribution d(0.5);
      for (double& v : xi) v = d(rng) ? noise.sigma : -noise.sigma;
      break;
    }
    case NoiseKind::uniform: {
      const double h = noise.sigma * std::sqrt(3.0);
      std::uniform_real_distribution<double> d(-h, h);
      for (double& v : xi) v = d(rng);
      break;
    }
  }
  return xi;
}

inline Observation sample_observations(std::span<const double> means, const NoiseModel& noise) {
  Observation obs{draw_noise(means.size(), noise), noise.sigma};
  for (std::size_t i = 0; i < means.size(); ++i) obs.y[i] += means[i];
  return obs;
}

inline Observation sample_observations(const Signal& f, std::size_t n, const NoiseModel& noise) {
  if (n < 1) throw DomainError("sample_observations: n must be >= 1");
  const auto means = cell_means(f, n);
  return sample_observations(means, noise);
}

}  // namespace msseg
