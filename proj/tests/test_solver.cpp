#include <catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "msseg/solver.hpp"

using namespace msseg;
using Catch::Approx;

namespace {

double oracle_penalty(Penalty pen, std::size_t len, std::size_t seg_len, std::size_t n) {
  if (pen == Penalty::smuce) return std::sqrt(2.0 * std::log(std::numbers::e * n / len));
  if (pen == Penalty::fdrseg) return std::sqrt(2.0 * std::log(std::numbers::e * seg_len / len));
  return 0.0;
}

// Band of [i, j) by direct membership tests and cell-by-cell means.
FeasibleBand oracle_band(const std::vector<double>& y, std::size_t i, std::size_t j, const IntervalSystem& sys,
                         Penalty pen, double eta) {
  FeasibleBand b;
  for (std::size_t a = i; a < j; ++a)
    for (std::size_t e = a + 1; e <= j; ++e) {
      if (!sys.contains({a, e})) continue;
      double m = 0.0;
      for (std::size_t k = a; k < e; ++k) m += y[k];
      const double len = static_cast<double>(e - a);
      m /= len;
      const double half = (eta + oracle_penalty(pen, e - a, j - i, y.size())) / std::sqrt(len);
      b.lo = std::max(b.lo, m - half);
      b.hi = std::min(b.hi, m + half);
    }
  return b;
}

struct Exhaustive {
  std::size_t min_jumps = std::numeric_limits<std::size_t>::max();
  double best_cost = std::numeric_limits<double>::infinity();
};

// All 2^(n-1) partitions; feasible when every segment band is non-empty.
Exhaustive exhaustive(const std::vector<double>& y, const IntervalSystem& sys, Penalty pen, double eta) {
  const std::size_t n = y.size();
  Exhaustive out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
    std::vector<std::size_t> cuts{0};
    for (std::size_t b = 0; b + 1 < n; ++b)
      if (mask >> b & 1) cuts.push_back(b + 1);
    cuts.push_back(n);
    const std::size_t jumps = cuts.size() - 2;
    if (jumps > out.min_jumps) continue;
    double cost = 0.0;
    bool ok = true;
    for (std::size_t s = 0; s + 1 < cuts.size() && ok; ++s) {
      const auto band = oracle_band(y, cuts[s], cuts[s + 1], sys, pen, eta);
      if (band.empty()) {
        ok = false;
        break;
      }
      double mean = 0.0;
      for (std::size_t k = cuts[s]; k < cuts[s + 1]; ++k) mean += y[k];
      mean /= static_cast<double>(cuts[s + 1] - cuts[s]);
      const double c = band.clip(mean);
      for (std::size_t k = cuts[s]; k < cuts[s + 1]; ++k) cost += (y[k] - c) * (y[k] - c);
    }
    if (!ok) continue;
    if (jumps < out.min_jumps) {
      out.min_jumps = jumps;
      out.best_cost = cost;
    } else {
      out.best_cost = std::min(out.best_cost, cost);
    }
  }
  return out;
}

double fit_cost(const Observation& y, const Estimate& est) {
  double c = 0.0;
  for (std::size_t i = 0; i < y.n(); ++i) {
    const double v = est.fit((i + 0.5) / static_cast<double>(y.n()));
    c += (y.y[i] - v) * (y.y[i] - v);
  }
  return c;
}

void check_certificate(const Observation& y, const Estimate& est, const IntervalSystem& sys, Penalty pen) {
  CHECK(est.certificate <= est.eta + 1e-9);
  CHECK(multiscale_statistic(y, est.fit, sys, pen) <= est.eta + 1e-9);
}

}  // namespace

TEST_CASE("segment band examples") {
  const IntervalSystem full4(IntervalKind::full, 4);
  const Observation y{{1, 1, 3, 3}, 1.0};
  CHECK(segment_band(y, 0, 4, full4, Penalty::none, 0.0).empty());
  const auto single = segment_band(y, 2, 3, full4, Penalty::none, 0.5);
  CHECK(single.lo == Approx(2.5));
  CHECK(single.hi == Approx(3.5));
  const Observation y2{{0, 10}, 1.0};
  CHECK(segment_band(y2, 0, 2, IntervalSystem(IntervalKind::full, 2), Penalty::none, 1.0).empty());
  CHECK_THROWS_AS(segment_band(y2, 1, 1, IntervalSystem(IntervalKind::full, 2), Penalty::none, 1.0),
                  ContractViolation);
}

TEST_CASE("segment band matches the direct oracle") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (auto kind : {IntervalKind::full, IntervalKind::dyadic_length, IntervalKind::dyadic_partition})
    for (auto pen : {Penalty::smuce, Penalty::fdrseg, Penalty::none})
      for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 2 + rng() % 30;
        Observation y{std::vector<double>(n), 1.0};
        for (double& v : y.y) v = g(rng);
        const std::size_t i = rng() % n;
        const std::size_t j = i + 1 + rng() % (n - i);
        const IntervalSystem sys(kind, n);
        const auto got = segment_band(y, i, j, sys, pen, 1.5);
        const auto want = oracle_band(y.y, i, j, sys, pen, 1.5);
        CHECK(got.lo == Approx(want.lo).margin(1e-12));
        CHECK(got.hi == Approx(want.hi).margin(1e-12));
      }
}

TEST_CASE("prune certificate") {
  const IntervalSystem full4(IntervalKind::full, 4);
  const Observation y{{1, 1, 3, 3}, 1.0};
  CHECK(prune_certificate(y, 0, full4, Penalty::none, 0.0) == 2);
  CHECK(prune_certificate(y, 3, full4, Penalty::none, 0.0) == 4);
  const Observation flat{std::vector<double>(9, 2.0), 1.0};
  for (std::size_t i = 0; i < 9; ++i)
    CHECK(prune_certificate(flat, i, IntervalSystem(IntervalKind::full, 9), Penalty::smuce, 0.0) == 9);
  CHECK_THROWS_AS(prune_certificate(y, 0, full4, Penalty::none, -1.0), ContractViolation);

  // Bands shrink in j, so the cutoff is the largest j with a non-empty band.
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (auto pen : {Penalty::smuce, Penalty::none, Penalty::fdrseg})
    for (int rep = 0; rep < 40; ++rep) {
      const std::size_t n = 2 + rng() % 25;
      Observation z{std::vector<double>(n), 1.0};
      for (double& v : z.y) v = g(rng) + (rng() % 3 == 0 ? 3.0 : 0.0);
      const IntervalSystem sys(IntervalKind::full, n);
      const std::size_t i = rng() % n;
      std::size_t last = i + 1;
      for (std::size_t j = i + 1; j <= n; ++j)
        if (!oracle_band(z.y, i, j, sys, pen, 1.0).empty()) last = j;
      CHECK(prune_certificate(z, i, sys, pen, 1.0) == last);
      if (pen != Penalty::fdrseg)
        for (std::size_t j = i + 1; j <= last; ++j) CHECK_FALSE(oracle_band(z.y, i, j, sys, pen, 1.0).empty());
    }
}

TEST_CASE("fit examples") {
  const Observation zero{std::vector<double>(8, 0.0), 1.0};
  for (double eta : {0.0, 0.5, 3.0}) {
    const auto est = fit(zero, IntervalSystem(IntervalKind::full, 8), Penalty::none, eta);
    CHECK(est.jumps == 0);
    CHECK(est.fit.values() == std::vector<double>{0.0});
  }
  const Observation y{{0, 10}, 1.0};
  const auto est = fit(y, IntervalSystem(IntervalKind::full, 2), Penalty::none, 1.0);
  CHECK(est.jumps == 1);
  CHECK(est.fit.change_points() == std::vector<double>{0.5});
  CHECK(est.fit.values() == std::vector<double>{0.0, 10.0});
  CHECK(est.change_cells() == std::vector<std::size_t>{1});
}

TEST_CASE("infeasible problems report the cell") {
  const Observation y{{0, 1, 2}, 1.0};
  try {
    fit(y, IntervalSystem(IntervalKind::full, 3), Penalty::none, -0.5);
    FAIL("expected infeasibility");
  } catch (const InfeasibleError& e) {
    CHECK(e.cell() == 0);
  }
  CHECK_THROWS_AS(fit(y, IntervalSystem(IntervalKind::full, 4), Penalty::none, 1.0), ContractViolation);
}

TEST_CASE("fit equals exhaustive search on small instances") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (auto pen : {Penalty::none, Penalty::smuce, Penalty::fdrseg})
    for (auto kind : {IntervalKind::full, IntervalKind::dyadic_length, IntervalKind::dyadic_partition})
      for (int rep = 0; rep < 25; ++rep) {
        const std::size_t n = 2 + rng() % 11;
        Observation y{std::vector<double>(n), 1.0};
        const double jump = (rng() % 2) ? 3.0 : 0.0;
        const std::size_t at = rng() % n;
        for (std::size_t i = 0; i < n; ++i) y.y[i] = g(rng) + (i >= at ? jump : 0.0);
        const IntervalSystem sys(kind, n);
        const double eta = pen == Penalty::none ? 1.0 : 0.3;
        const auto est = fit(y, sys, pen, eta);
        const auto ex = exhaustive(y.y, sys, pen, eta);
        INFO("n=" << n << " penalty=" << to_string(pen) << " kind=" << to_string(kind));
        CHECK(est.jumps == ex.min_jumps);
        CHECK(fit_cost(y, est) == Approx(ex.best_cost).margin(1e-9));
        check_certificate(y, est, sys, pen);
      }
}

TEST_CASE("segments carry their bands") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  const std::size_t n = 200;
  Observation y{std::vector<double>(n), 1.0};
  for (std::size_t i = 0; i < n; ++i) y.y[i] = g(rng) + (i > 80 && i < 140 ? 2.0 : 0.0);
  const IntervalSystem sys(IntervalKind::dyadic_length, n);
  const double eta = universal_threshold(0.6, n);
  const auto est = fit(y, sys, Penalty::smuce, eta);
  check_certificate(y, est, sys, Penalty::smuce);
  CHECK(est.segments.front().cells.start == 0);
  CHECK(est.segments.back().cells.end == n);
  for (std::size_t s = 0; s < est.segments.size(); ++s) {
    const auto& seg = est.segments[s];
    if (s) CHECK(seg.cells.start == est.segments[s - 1].cells.end);
    const auto band = segment_band(y, seg.cells.start, seg.cells.end, sys, Penalty::smuce, eta);
    CHECK(seg.band.lo == Approx(band.lo).margin(1e-12));
    CHECK(seg.band.hi == Approx(band.hi).margin(1e-12));
    CHECK(seg.value >= band.lo - 1e-9);
    CHECK(seg.value <= band.hi + 1e-9);
  }
  // Determinism.
  const auto again = fit(y, sys, Penalty::smuce, eta);
  CHECK(again.fit == est.fit);
  CHECK(again.certificate == est.certificate);
}

TEST_CASE("large n completes quickly") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  const std::size_t n = 5000;
  Observation y{std::vector<double>(n), 1.0};
  for (std::size_t i = 0; i < n; ++i) y.y[i] = g(rng) + ((i / 700) % 2 ? 1.5 : 0.0);
  for (auto kind : {IntervalKind::full, IntervalKind::dyadic_length}) {
    const IntervalSystem sys(kind, n);
    const auto t0 = std::chrono::steady_clock::now();
    const auto est = fit(y, sys, Penalty::smuce, universal_threshold(0.5, n));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    INFO(to_string(kind) << " took " << secs << " s");
    CHECK(secs < 60.0);
    check_certificate(y, est, sys, Penalty::smuce);
  }
}

TEST_CASE("standardised fit") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  const std::size_t n = 120;
  const IntervalSystem sys(IntervalKind::dyadic_length, n);
  for (int rep = 0; rep < 20; ++rep) {
    const double sigma = 0.05 + std::abs(g(rng));
    Observation y{std::vector<double>(n), sigma};
    for (std::size_t i = 0; i < n; ++i) y.y[i] = sigma * g(rng) + (i >= 40 && i < 70 ? 1.0 : 0.0);
    const double eta = 0.5;
    const auto est = fit_standardized(y, sys, Penalty::smuce, eta);
    CHECK(est.noise_scale == sigma);
    Observation z = y;
    for (double& v : z.y) v /= sigma;
    z.sigma = 1.0;
    const auto raw = fit(z, sys, Penalty::smuce, eta);
    check_certificate(z, raw, sys, Penalty::smuce);
    CHECK(est.jumps == raw.jumps);
    CHECK(est.change_cells() == raw.change_cells());
    CHECK(est.certificate == raw.certificate);
    for (std::size_t s = 0; s < est.segments.size(); ++s) {
      CHECK(est.segments[s].value == Approx(sigma * raw.segments[s].value).margin(1e-12));
      CHECK(est.segments[s].band.lo == Approx(sigma * raw.segments[s].band.lo).margin(1e-12));
      CHECK(est.fit(est.segments[s].cells.start / static_cast<double>(n) + 1e-9) ==
            Approx(est.segments[s].value).margin(1e-12));
    }
  }
  Observation unit{{0.0, 0.0, 5.0, 5.0}, 1.0};
  const IntervalSystem small(IntervalKind::full, 4);
  CHECK(fit_standardized(unit, small, Penalty::none, 1.0).fit == fit(unit, small, Penalty::none, 1.0).fit);
  CHECK_THROWS_AS(fit_standardized(Observation{{1.0, 2.0}, 0.0}, IntervalSystem(IntervalKind::full, 2),
                                   Penalty::none, 1.0),
                  DomainError);
}
