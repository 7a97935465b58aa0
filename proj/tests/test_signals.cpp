#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "msseg/signals.hpp"

using namespace msseg;
using Catch::Approx;

namespace {

// Midpoint Riemann sum with `res` points per cell.
template <typename F>
std::vector<double> riemann_cells(const F& f, std::size_t n, std::size_t res) {
  std::vector<double> out(n);
  const double h = 1.0 / static_cast<double>(n * res);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < res; ++k) s += f((static_cast<double>(i * res + k) + 0.5) * h);
    out[i] = s / static_cast<double>(res);
  }
  return out;
}

}  // namespace

TEST_CASE("step function construction and canonical form") {
  StepFunction f({0.0, 0.25, 0.5, 1.0}, {1.0, 1.0, 2.0});
  CHECK(f.jumps() == 1);
  CHECK(f.breakpoints() == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(f.values() == std::vector<double>{1.0, 2.0});
  StepFunction again(f.breakpoints(), f.values());
  CHECK(again == f);
  CHECK(f(0.49) == 1.0);
  CHECK(f(0.5) == 2.0);
  CHECK(f.integral() == Approx(1.5).margin(1e-15));

  CHECK_THROWS_AS(StepFunction({0.0, 0.6, 0.5, 1.0}, {1, 2, 3}), ContractViolation);
  CHECK_THROWS_AS(StepFunction({0.1, 1.0}, {1}), ContractViolation);
  CHECK_THROWS_AS(StepFunction({0.0, 1.0}, {1, 2}), ContractViolation);
}

TEST_CASE("canonicalisation is idempotent on random inputs") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> level(0, 2);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t k = 1 + rng() % 8;
    std::vector<double> bps{0.0};
    for (std::size_t i = 1; i < k; ++i) bps.push_back(static_cast<double>(i) / static_cast<double>(k));
    bps.push_back(1.0);
    std::vector<double> vals;
    for (std::size_t i = 0; i < k; ++i) vals.push_back(level(rng));
    StepFunction f(bps, vals);
    for (std::size_t i = 0; i + 1 < f.values().size(); ++i) CHECK(f.values()[i] != f.values()[i + 1]);
    CHECK(f.jumps() == f.breakpoints().size() - 2);
    CHECK(StepFunction(f.breakpoints(), f.values()) == f);
  }
}

TEST_CASE("cell means of indicators") {
  const StepFunction half({0.0, 0.5, 1.0}, {0.0, 1.0});
  CHECK(cell_means(half, 4) == std::vector<double>{0, 0, 1, 1});
  const StepFunction three_eighths({0.0, 0.375, 1.0}, {0.0, 1.0});
  CHECK(cell_means(three_eighths, 4) == std::vector<double>{0, 0.5, 1, 1});
  CHECK_THROWS_AS(cell_means(half, 0), DomainError);
}

TEST_CASE("cell means of a step function integrate to the integral") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> bps{0.0};
    for (int i = 0; i < 6; ++i) bps.push_back(u(rng));
    bps.push_back(1.0);
    std::sort(bps.begin(), bps.end());
    std::vector<double> vals;
    for (std::size_t i = 0; i + 1 < bps.size(); ++i) vals.push_back(u(rng) * 10 - 5);
    const StepFunction f(bps, vals);
    for (std::size_t n : {1u, 7u, 64u, 1000u}) {
      const auto cells = cell_means(f, n);
      double s = 0.0;
      for (double c : cells) s += c / static_cast<double>(n);
      CHECK(std::abs(s - f.integral()) <= 1e-12);
    }
  }
}

TEST_CASE("blocks cell means match a fine Riemann sum") {
  const auto blocks = ContinuousSignal::blocks();
  const std::size_t n = 1023;
  const std::size_t res = std::size_t{1} << 14;
  const auto exact = cell_means(blocks, n);
  const auto fine = riemann_cells(blocks, n, res);
  const auto& step = *blocks.as_step();
  for (std::size_t i = 0; i < n; ++i) {
    // A jump inside cell i is located to within half a Riemann sub-cell.
    double tol = 1e-6;
    for (std::size_t j = 0; j < dj::positions.size(); ++j) {
      const double t = dj::positions[j] * static_cast<double>(n);
      if (t > static_cast<double>(i) && t < static_cast<double>(i + 1))
        tol = std::abs(dj::block_heights[j]) / static_cast<double>(res);
    }
    INFO("cell " << i);
    CHECK(std::abs(exact[i] - fine[i]) <= tol);
  }
  CHECK(step.jumps() == dj::positions.size());
}

TEST_CASE("smooth signals: quadrature agrees with a fine Riemann sum") {
  const std::size_t n = 255;
  for (auto f : {ContinuousSignal::bumps(), ContinuousSignal::doppler()}) {
    const auto q = cell_means(f, n);
    const auto r = riemann_cells(f, n, 1 << 12);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(q[i] - r[i]) <= 1e-6);
  }
  // Heavisine has jumps at 0.3 and 0.72; compare away from those cells.
  const auto hs = ContinuousSignal::heavisine();
  const auto q = cell_means(hs, n);
  const auto r = riemann_cells(hs, n, 1 << 12);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = static_cast<double>(i) / n, b = static_cast<double>(i + 1) / n;
    if ((a < 0.3 && 0.3 < b) || (a < 0.72 && 0.72 < b)) continue;
    CHECK(std::abs(q[i] - r[i]) <= 1e-6);
  }
  // The ramp's cell means are the cell midpoints.
  const auto ramp = cell_means(ContinuousSignal::ramp(), 16);
  for (std::size_t i = 0; i < 16; ++i) CHECK(ramp[i] == Approx((i + 0.5) / 16).margin(1e-13));
}

TEST_CASE("non-finite evaluation names the cell") {
  auto bad = [](double x) { return x >= 0.5 ? std::numeric_limits<double>::infinity() : 1.0; };
  try {
    integrate_cells(bad, 8, {});
    FAIL("expected an evaluation error");
  } catch (const EvaluationError& e) {
    CHECK(e.cell() == 4);
  }
}

TEST_CASE("olshen signal") {
  const auto f = make_olshen_signal();
  CHECK(f.jumps() == 6);
  CHECK(f.values().front() == -0.18);
  CHECK(f.breakpoints()[1] == 138.0 / 497.0);
  CHECK(f.values() == std::vector<double>{-0.18, 0.08, 1.07, -0.53, 0.16, -0.69, -0.16});
  const auto idx = grid_breakpoints(f, kOlshenSampleSize);
  CHECK(idx == std::vector<std::size_t>{0, 138, 225, 242, 299, 308, 332, 497});
}

TEST_CASE("snr sigma") {
  CHECK(snr_sigma(StepFunction::constant(1.0), 2.0, 10) == Approx(0.5));
  CHECK(snr_sigma(StepFunction::constant(3.0), 3.0, 10) == Approx(1.0));
  // Olshen norm from segment lengths directly.
  const std::vector<double> cps{0, 138, 225, 242, 299, 308, 332, 497};
  const auto vals = make_olshen_signal().values();
  double ss = 0.0;
  for (std::size_t s = 0; s < vals.size(); ++s) ss += vals[s] * vals[s] * (cps[s + 1] - cps[s]) / 497.0;
  CHECK(snr_sigma(make_olshen_signal(), 1.0, 497) == Approx(std::sqrt(ss)).epsilon(1e-13));
  CHECK_THROWS_AS(snr_sigma(StepFunction::constant(0.0), 1.0, 10), DomainError);
  CHECK_THROWS_AS(snr_sigma(StepFunction::constant(1.0), 0.0, 10), DomainError);
}

TEST_CASE("sine distortion is added at the sample index") {
  const auto base = make_olshen_signal();
  const double a = 0.025, b = 0.3;
  const auto f = ContinuousSignal::sine_distorted(base, b, a, kOlshenSampleSize);
  const auto got = cell_means(f, kOlshenSampleSize);
  const auto plain = cell_means(base, kOlshenSampleSize);
  for (std::size_t i = 0; i < kOlshenSampleSize; ++i)
    CHECK(got[i] == Approx(plain[i] + 0.25 * b * std::sin(a * std::numbers::pi * i)).margin(1e-14));
  const auto zero = ContinuousSignal::sine_distorted(base, 0.0, a, kOlshenSampleSize);
  CHECK(*zero.as_step() == base);
}

TEST_CASE("observations") {
  const auto f = make_olshen_signal();
  const auto means = cell_means(f, 497);
  SECTION("zero noise reproduces cell means") {
    const auto obs = sample_observations(f, 497, NoiseModel{NoiseKind::gaussian, 0.0, 3});
    CHECK(obs.y == means);
  }
  SECTION("determinism") {
    const NoiseModel noise{NoiseKind::gaussian, 1.0, 42};
    CHECK(sample_observations(f, 497, noise).y == sample_observations(f, 497, noise).y);
    const NoiseModel other{NoiseKind::gaussian, 1.0, 43};
    CHECK(sample_observations(f, 497, noise).y != sample_observations(f, 497, other).y);
  }
  SECTION("rademacher support") {
    const auto obs = sample_observations(f, 497, NoiseModel{NoiseKind::scaled_rademacher, 1.0, 9});
    for (std::size_t i = 0; i < 497; ++i) {
      const double r = obs.y[i] - means[i];
      CHECK((std::abs(r - 1.0) < 1e-12 || std::abs(r + 1.0) < 1e-12));
    }
  }
  SECTION("uniform support") {
    const auto obs = sample_observations(f, 497, NoiseModel{NoiseKind::uniform, 2.0, 9});
    for (std::size_t i = 0; i < 497; ++i) CHECK(std::abs(obs.y[i] - means[i]) <= 2.0 * std::sqrt(3.0) + 1e-12);
  }
}

TEST_CASE("gaussian noise mean over many replicates") {
  const std::size_t n = 10, reps = 100000;
  const double sigma = 1.0;
  const std::vector<double> zero(n, 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto obs = sample_observations(zero, NoiseModel{NoiseKind::gaussian, sigma, replicate_seed(77, r)});
    for (double v : obs.y) total += v;
  }
  const double mean = total / static_cast<double>(n * reps);
  CHECK(std::abs(mean) <= 4.0 * sigma * std::pow(10.0, -2.5) * std::sqrt(10.0));
}

TEST_CASE("replicate seeds") {
  CHECK(replicate_seed(5, 0) == 5);
  CHECK(replicate_seed(5, 1) == (5ULL ^ 0x9E3779B97F4A7C15ULL));
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 10000; ++r) seen.insert(replicate_seed(123, r));
  CHECK(seen.size() == 10000);
}
