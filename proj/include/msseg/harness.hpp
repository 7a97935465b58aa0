#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "msseg/detail/parallel.hpp"
#include "msseg/errors.hpp"
#include "msseg/inference.hpp"
#include "msseg/intervals.hpp"
#include "msseg/io.hpp"
#include "msseg/multiscale.hpp"
#include "msseg/oracle.hpp"
#include "msseg/signals.hpp"
#include "msseg/solver.hpp"

namespace msseg {

// Largest n accepted with the full interval system.
inline constexpr std::size_t kFullSystemMaxN = 2000;

struct ExperimentConfig {
  std::string experiment = "stability";
  std::string signal = "olshen";
  std::vector<std::size_t> n = {kOlshenSampleSize};
  std::vector<double> snr = {1.0};
  std::vector<double> beta = {0.1};
  NoiseKind noise = NoiseKind::gaussian;
  Penalty penalty = Penalty::smuce;
  IntervalKind intervals = IntervalKind::dyadic_length;
  std::size_t replicates = 100;
  std::uint64_t seed = 1;
  std::size_t n_mc = 10000;
  double distortion_a = 0.0;  // sine distortion 0.25 b sin(a pi i)
  double distortion_b = 0.0;
  std::vector<double> lp;  // extra L^p losses to record
  std::string output;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"stability", "noise-sweep", "robustness", "convergence",
                                                 "calibrate", "fit",         "features",   "oracle"};
  return names;
}

inline const std::vector<std::string>& signal_names() {
  static const std::vector<std::string> names = {"olshen", "blocks", "bumps",     "heavisine",
                                                 "doppler", "ramp",  "three-jump"};
  return names;
}

inline NoiseKind parse_noise_kind(std::string_view s) {
  if (s == "gaussian") return NoiseKind::gaussian;
  if (s == "scaled-rademacher") return NoiseKind::scaled_rademacher;
  if (s == "uniform") return NoiseKind::uniform;
  throw ContractViolation("unknown noise kind '" + std::string(s) + "'");
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  while (true) {
    const auto comma = s.find(',');
    auto item = trim(s.substr(0, comma));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    s = s.substr(comma + 1);
  }
  return out;
}

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view s, Parse parse) {
  std::vector<T> out;
  for (const auto& item : split_list(s)) out.push_back(parse(item));
  return out;
}

template <typename T, typename Format>
std::string join(const std::vector<T>& v, Format format) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format(v[i]);
  }
  return out;
}

}  // namespace detail

// Applies one key=value setting; file entries and CLI flags share this.
inline void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  auto to_size = [](const std::string& s) { return static_cast<std::size_t>(detail::parse_u64(s, "integer")); };
  auto to_double = [](const std::string& s) { return detail::parse_double(s, "number"); };
  const std::string v = detail::trim(value);
  if (key == "experiment") {
    cfg.experiment = v;
  } else if (key == "signal") {
    cfg.signal = v;
  } else if (key == "n") {
    cfg.n = detail::parse_list<std::size_t>(v, to_size);
  } else if (key == "snr") {
    cfg.snr = detail::parse_list<double>(v, to_double);
  } else if (key == "beta") {
    cfg.beta = detail::parse_list<double>(v, to_double);
  } else if (key == "noise") {
    cfg.noise = parse_noise_kind(v);
  } else if (key == "penalty") {
    cfg.penalty = parse_penalty(v);
  } else if (key == "intervals") {
    cfg.intervals = parse_interval_kind(v);
  } else if (key == "replicates") {
    cfg.replicates = to_size(v);
  } else if (key == "seed") {
    cfg.seed = detail::parse_u64(v, "seed");
  } else if (key == "mc") {
    cfg.n_mc = to_size(v);
  } else if (key == "a") {
    cfg.distortion_a = to_double(v);
  } else if (key == "b") {
    cfg.distortion_b = to_double(v);
  } else if (key == "lp") {
    cfg.lp = detail::parse_list<double>(v, to_double);
  } else if (key == "output") {
    cfg.output = v;
  } else {
    throw ContractViolation("unknown config key '" + std::string(key) + "'");
  }
}

inline void validate(const ExperimentConfig& cfg) {
  const auto& ex = experiment_names();
  if (std::find(ex.begin(), ex.end(), cfg.experiment) == ex.end())
    throw ContractViolation("unknown experiment '" + cfg.experiment + "'");
  const auto& sig = signal_names();
  if (std::find(sig.begin(), sig.end(), cfg.signal) == sig.end())
    throw ContractViolation("unknown signal '" + cfg.signal + "'");
  if (cfg.n.empty() || cfg.snr.empty() || cfg.beta.empty()) throw ContractViolation("config grids must be non-empty");
  if (cfg.replicates < 1) throw ContractViolation("replicates must be >= 1");
  for (auto n : cfg.n) {
    if (n < 2) throw ContractViolation("n must be >= 2");
    if (cfg.intervals == IntervalKind::full && n > kFullSystemMaxN)
      throw ContractViolation("the full interval system is limited to n <= " + std::to_string(kFullSystemMaxN));
  }
  for (double s : cfg.snr)
    if (!(s > 0.0)) throw ContractViolation("snr values must be positive");
  for (double b : cfg.beta)
    if (!(b > 0.0 && b < 1.0)) throw ContractViolation("beta values must lie in (0,1)");
  for (double p : cfg.lp)
    if (!(p > 0.0 && std::isfinite(p))) throw ContractViolation("lp exponents must lie in (0, inf)");
  if (cfg.n_mc < 100) throw ContractViolation("mc must be >= 100");
}

inline std::string to_text(const ExperimentConfig& cfg) {
  auto size_str = [](std::size_t v) { return std::to_string(v); };
  std::ostringstream os;
  os << "experiment = " << cfg.experiment << '\n'
     << "signal = " << cfg.signal << '\n'
     << "n = " << detail::join(cfg.n, size_str) << '\n'
     << "snr = " << detail::join(cfg.snr, format_double) << '\n'
     << "beta = " << detail::join(cfg.beta, format_double) << '\n'
     << "noise = " << to_string(cfg.noise) << '\n'
     << "penalty = " << to_string(cfg.penalty) << '\n'
     << "intervals = " << to_string(cfg.intervals) << '\n'
     << "replicates = " << cfg.replicates << '\n'
     << "seed = " << cfg.seed << '\n'
     << "mc = " << cfg.n_mc << '\n'
     << "a = " << format_double(cfg.distortion_a) << '\n'
     << "b = " << format_double(cfg.distortion_b) << '\n'
     << "lp = " << detail::join(cfg.lp, format_double) << '\n'
     << "output = " << cfg.output << '\n';
  return os.str();
}

// Flat "key = value" lines; blank lines and '#' comments are ignored.
inline ExperimentConfig parse_config(std::istream& is, ExperimentConfig cfg = {}) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ContractViolation("config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(cfg, detail::trim(std::string_view(text).substr(0, eq)), std::string_view(text).substr(eq + 1));
  }
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot open config file '" + path + "'");
  return parse_config(in);
}

// Step signal of the feature-inference demo: one small and two large jumps.
inline StepFunction make_three_jump_signal() { return StepFunction({0.0, 0.25, 0.5, 0.75, 1.0}, {0.2, 0.0, 2.0, 0.0}); }

inline Signal make_signal(const ExperimentConfig& cfg, std::size_t n) {
  const auto& s = cfg.signal;
  if (s == "olshen") {
    if (cfg.experiment == "robustness" || cfg.distortion_b != 0.0)
      return ContinuousSignal::sine_distorted(make_olshen_signal(), cfg.distortion_b, cfg.distortion_a, n);
    return make_olshen_signal();
  }
  if (s == "blocks") return ContinuousSignal::blocks();
  if (s == "bumps") return ContinuousSignal::bumps();
  if (s == "heavisine") return ContinuousSignal::heavisine();
  if (s == "doppler") return ContinuousSignal::doppler();
  if (s == "ramp") return ContinuousSignal::ramp();
  if (s == "three-jump") return make_three_jump_signal();
  throw ContractViolation("unknown signal '" + s + "'");
}

// True change-points used for jump_distance; empty for signals without jumps.
inline std::vector<double> truth_change_points(const ExperimentConfig& cfg) {
  const auto& s = cfg.signal;
  if (s == "olshen") return make_olshen_signal().change_points();
  if (s == "blocks") return ContinuousSignal::blocks().as_step()->change_points();
  if (s == "heavisine") return ContinuousSignal::heavisine().discontinuities();
  if (s == "three-jump") return make_three_jump_signal().change_points();
  return {};
}

// Truth whose features are compared with the fit (the undistorted base for robustness).
inline std::optional<StepFunction> truth_feature_step(const ExperimentConfig& cfg) {
  if (cfg.signal == "olshen") return make_olshen_signal();
  if (cfg.signal == "blocks") return *ContinuousSignal::blocks().as_step();
  if (cfg.signal == "three-jump") return make_three_jump_signal();
  return std::nullopt;
}

inline std::uint64_t calibration_seed(std::uint64_t base) noexcept { return base ^ 0xA5A5A5A5A5A5A5A5ULL; }

struct ReplicateRecord {
  std::size_t replicate = 0;
  std::size_t n = 0;
  double snr = 0.0;
  double beta = 0.0;
  double sigma = 0.0;
  double eta = 0.0;
  std::uint64_t seed = 0;
  std::size_t jumps = 0;
  double l2_loss = 0.0;
  std::vector<double> lp_losses;
  double jump_distance = std::numeric_limits<double>::quiet_NaN();  // NaN when the truth has no jumps
  std::size_t fit_modes = 0;    // interior
  std::size_t fit_troughs = 0;  // interior
  double runtime_ms = 0.0;

  friend bool operator==(const ReplicateRecord& a, const ReplicateRecord& b) {
    auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
    return a.replicate == b.replicate && a.n == b.n && a.snr == b.snr && a.beta == b.beta && a.sigma == b.sigma &&
           a.eta == b.eta && a.seed == b.seed && a.jumps == b.jumps && a.l2_loss == b.l2_loss &&
           a.lp_losses == b.lp_losses && same(a.jump_distance, b.jump_distance) && a.fit_modes == b.fit_modes &&
           a.fit_troughs == b.fit_troughs && a.runtime_ms == b.runtime_ms;
  }
};

struct AggregateRow {
  std::size_t n = 0;
  double snr = 0.0;
  double beta = 0.0;
  std::size_t count = 0;
  double mean_jumps = 0.0;
  double stderr_jumps = 0.0;
  double mean_l2 = 0.0;
  double stderr_l2 = 0.0;
  std::vector<double> mean_lp;
  double median_jump_distance = std::numeric_limits<double>::quiet_NaN();
  std::size_t modal_jumps = 0;
  double modal_share = 0.0;

  friend bool operator==(const AggregateRow& a, const AggregateRow& b) {
    auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
    return a.n == b.n && a.snr == b.snr && a.beta == b.beta && a.count == b.count && a.mean_jumps == b.mean_jumps &&
           a.stderr_jumps == b.stderr_jumps && a.mean_l2 == b.mean_l2 && a.stderr_l2 == b.stderr_l2 &&
           a.mean_lp == b.mean_lp && same(a.median_jump_distance, b.median_jump_distance) &&
           a.modal_jumps == b.modal_jumps && a.modal_share == b.modal_share;
  }
};

struct SlopeFit {
  double slope = 0.0;
  std::optional<double> stderr_slope;  // needs at least three points
  std::size_t points = 0;

  friend bool operator==(const SlopeFit&, const SlopeFit&) = default;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ReplicateRecord> records;
  std::vector<AggregateRow> aggregates;
  std::optional<SlopeFit> slope;  // log mean L2 loss against log n
  std::size_t truth_modes = 0;
  std::size_t truth_troughs = 0;

  friend bool operator==(const ExperimentResult&, const ExperimentResult&) = default;
};

inline double sample_mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double standard_error(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = sample_mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline AggregateRow aggregate(std::span<const ReplicateRecord> rows) {
  AggregateRow a;
  if (rows.empty()) return a;
  a.n = rows.front().n;
  a.snr = rows.front().snr;
  a.beta = rows.front().beta;
  a.count = rows.size();
  std::vector<double> jumps, l2, jd;
  std::map<std::size_t, std::size_t> counts;
  for (const auto& r : rows) {
    jumps.push_back(static_cast<double>(r.jumps));
    l2.push_back(r.l2_loss);
    if (!std::isnan(r.jump_distance)) jd.push_back(r.jump_distance);
    ++counts[r.jumps];
  }
  a.mean_jumps = sample_mean(jumps);
  a.stderr_jumps = standard_error(jumps);
  a.mean_l2 = sample_mean(l2);
  a.stderr_l2 = standard_error(l2);
  for (std::size_t p = 0; p < rows.front().lp_losses.size(); ++p) {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r.lp_losses[p]);
    a.mean_lp.push_back(sample_mean(v));
  }
  a.median_jump_distance = median(jd);
  for (const auto& [k, c] : counts)
    if (c > static_cast<std::size_t>(a.modal_share)) {
      a.modal_jumps = k;
      a.modal_share = static_cast<double>(c);
    }
  a.modal_share /= static_cast<double>(rows.size());
  return a;
}

// Least-squares slope of log y against log x; absent with fewer than two points.
inline std::optional<SlopeFit> log_log_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2) return std::nullopt;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double mx = sample_mean(lx), my = sample_mean(ly);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) return std::nullopt;
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.points = lx.size();
  if (lx.size() >= 3) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double r = ly[i] - my - fit.slope * (lx[i] - mx);
      ssr += r * r;
    }
    fit.stderr_slope = std::sqrt(ssr / static_cast<double>(lx.size() - 2) / sxx);
  }
  return fit;
}

// Shared driver: for every n, snr and beta in the grids, replicates are sampled with
// seeds replicate_seed(seed, r) (common across grid points), fitted on the sigma-standardised
// scale with eta from one unit-variance Gaussian calibration per n, and scored.
inline ExperimentResult run_grid(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentResult res;
  res.config = cfg;
  const auto truth_cps = truth_change_points(cfg);
  if (const auto base = truth_feature_step(cfg)) {
    const auto mt = count_modes_troughs(*base);
    res.truth_modes = mt.modes;
    res.truth_troughs = mt.troughs;
  }

  for (std::size_t n : cfg.n) {
    const Signal signal = make_signal(cfg, n);
    const auto means = cell_means(signal, n);
    const double norm = grid_l2_norm(means);
    if (!(norm > 0.0)) throw DomainError("signal has zero L2 norm at n = " + std::to_string(n));
    const IntervalSystem system(cfg.intervals, n);
    const auto null = simulate_null(n, system, cfg.penalty, 1.0, cfg.n_mc, calibration_seed(cfg.seed));
    for (double snr : cfg.snr) {
      const double sigma = norm / snr;
      for (double beta : cfg.beta) {
        const double eta = null.quantile(beta);
        std::vector<ReplicateRecord> rows(cfg.replicates);
        detail::parallel_for(cfg.replicates, [&](std::size_t r) {
          const auto t0 = std::chrono::steady_clock::now();
          ReplicateRecord rec;
          rec.replicate = r;
          rec.n = n;
          rec.snr = snr;
          rec.beta = beta;
          rec.sigma = sigma;
          rec.eta = eta;
          rec.seed = replicate_seed(cfg.seed, r);
          const auto obs = sample_observations(means, NoiseModel{cfg.noise, sigma, rec.seed});
          const auto est = fit_standardized(obs, system, cfg.penalty, eta);
          rec.jumps = est.jumps;
          rec.l2_loss = lp_loss(signal, est.fit, 2.0);
          for (double p : cfg.lp) rec.lp_losses.push_back(lp_loss(signal, est.fit, p));
          if (!truth_cps.empty()) rec.jump_distance = jump_distance(est.fit.change_points(), truth_cps);
          const auto mt = count_modes_troughs(est.fit);
          rec.fit_modes = mt.modes;
          rec.fit_troughs = mt.troughs;
          rec.runtime_ms =
              std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
          rows[r] = std::move(rec);
        });
        res.aggregates.push_back(aggregate(rows));
        res.records.insert(res.records.end(), rows.begin(), rows.end());
      }
    }
  }

  // Slope over n at the first snr/beta grid point.
  std::vector<double> xs, ys;
  for (const auto& a : res.aggregates)
    if (a.snr == cfg.snr.front() && a.beta == cfg.beta.front()) {
      xs.push_back(static_cast<double>(a.n));
      ys.push_back(a.mean_l2);
    }
  res.slope = log_log_fit(xs, ys);
  return res;
}

inline ExperimentResult run_stability(ExperimentConfig cfg) {
  cfg.experiment = "stability";
  if (cfg.signal != "olshen") throw ContractViolation("stability runs on the olshen signal");
  return run_grid(cfg);
}

inline ExperimentResult run_noise_sweep(ExperimentConfig cfg) {
  cfg.experiment = "noise-sweep";
  return run_grid(cfg);
}

inline ExperimentResult run_robustness(ExperimentConfig cfg) {
  cfg.experiment = "robustness";
  if (cfg.signal != "olshen") throw ContractViolation("robustness runs on the sine-distorted olshen signal");
  return run_grid(cfg);
}

inline ExperimentResult run_convergence(ExperimentConfig cfg) {
  cfg.experiment = "convergence";
  if (cfg.signal != "blocks" && cfg.signal != "heavisine")
    throw ContractViolation("convergence runs on blocks or heavisine");
  return run_grid(cfg);
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment == "stability") return run_stability(cfg);
  if (cfg.experiment == "noise-sweep") return run_noise_sweep(cfg);
  if (cfg.experiment == "robustness") return run_robustness(cfg);
  if (cfg.experiment == "convergence") return run_convergence(cfg);
  throw ContractViolation("'" + cfg.experiment + "' is not a replicate experiment");
}

// Per-replicate CSV; runtime_ms is not written.
inline void write_csv(std::ostream& os, const ExperimentResult& res) {
  os << "replicate,n,snr,beta,sigma,eta,seed,jumps,l2_loss";
  for (double p : res.config.lp) os << ",l" << format_double(p) << "_loss";
  os << ",jump_distance,fit_modes,fit_troughs\n";
  for (const auto& r : res.records) {
    os << r.replicate << ',' << r.n << ',' << format_double(r.snr) << ',' << format_double(r.beta) << ','
       << format_double(r.sigma) << ',' << format_double(r.eta) << ',' << r.seed << ',' << r.jumps << ','
       << format_double(r.l2_loss);
    for (double l : r.lp_losses) os << ',' << format_double(l);
    os << ',' << (std::isnan(r.jump_distance) ? std::string() : format_double(r.jump_distance)) << ','
       << r.fit_modes << ',' << r.fit_troughs << '\n';
  }
}

// Whitespace-separated aggregate table, one row per (n, snr, beta).
inline void write_gnuplot(std::ostream& os, const ExperimentResult& res) {
  os << "# n snr beta count mean_jumps stderr_jumps mean_l2 stderr_l2 median_jump_distance modal_jumps modal_share\n";
  for (const auto& a : res.aggregates)
    os << a.n << ' ' << format_double(a.snr) << ' ' << format_double(a.beta) << ' ' << a.count << ' '
       << format_double(a.mean_jumps) << ' ' << format_double(a.stderr_jumps) << ' ' << format_double(a.mean_l2)
       << ' ' << format_double(a.stderr_l2) << ' ' << format_double(a.median_jump_distance) << ' '
       << a.modal_jumps << ' ' << format_double(a.modal_share) << '\n';
}

namespace detail {

// NaN -> null, +-inf -> "inf"/"-inf".
inline json encode_double(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double decode_double(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ContractViolation("unexpected string '" + s + "' for a number");
  }
  return j.get<double>();
}

}  // namespace detail

inline json to_json_value(const ExperimentResult& res) {
  json records = json::array();
  for (const auto& r : res.records)
    records.push_back({{"replicate", r.replicate},
                       {"n", r.n},
                       {"snr", r.snr},
                       {"beta", r.beta},
                       {"sigma", r.sigma},
                       {"eta", r.eta},
                       {"seed", r.seed},
                       {"jumps", r.jumps},
                       {"l2_loss", r.l2_loss},
                       {"lp_losses", r.lp_losses},
                       {"jump_distance", detail::encode_double(r.jump_distance)},
                       {"fit_modes", r.fit_modes},
                       {"fit_troughs", r.fit_troughs},
                       {"runtime_ms", r.runtime_ms}});
  json aggs = json::array();
  for (const auto& a : res.aggregates)
    aggs.push_back({{"n", a.n},
                    {"snr", a.snr},
                    {"beta", a.beta},
                    {"count", a.count},
                    {"mean_jumps", a.mean_jumps},
                    {"stderr_jumps", a.stderr_jumps},
                    {"mean_l2", a.mean_l2},
                    {"stderr_l2", a.stderr_l2},
                    {"mean_lp", a.mean_lp},
                    {"median_jump_distance", detail::encode_double(a.median_jump_distance)},
                    {"modal_jumps", a.modal_jumps},
                    {"modal_share", a.modal_share}});
  json slope = nullptr;
  if (res.slope)
    slope = {{"slope", res.slope->slope},
             {"stderr", res.slope->stderr_slope ? json(*res.slope->stderr_slope) : json(nullptr)},
             {"points", res.slope->points}};
  return {{"config", to_text(res.config)},
          {"records", records},
          {"aggregates", aggs},
          {"slope", slope},
          {"truth_modes", res.truth_modes},
          {"truth_troughs", res.truth_troughs}};
}

inline ExperimentResult result_from_json(const json& j) {
  ExperimentResult res;
  res.config = parse_config(j.at("config").get<std::string>());
  for (const auto& r : j.at("records")) {
    ReplicateRecord rec;
    rec.replicate = r.at("replicate").get<std::size_t>();
    rec.n = r.at("n").get<std::size_t>();
    rec.snr = r.at("snr").get<double>();
    rec.beta = r.at("beta").get<double>();
    rec.sigma = r.at("sigma").get<double>();
    rec.eta = r.at("eta").get<double>();
    rec.seed = r.at("seed").get<std::uint64_t>();
    rec.jumps = r.at("jumps").get<std::size_t>();
    rec.l2_loss = r.at("l2_loss").get<double>();
    rec.lp_losses = r.at("lp_losses").get<std::vector<double>>();
    rec.jump_distance = detail::decode_double(r.at("jump_distance"));
    rec.fit_modes = r.at("fit_modes").get<std::size_t>();
    rec.fit_troughs = r.at("fit_troughs").get<std::size_t>();
    rec.runtime_ms = r.at("runtime_ms").get<double>();
    res.records.push_back(std::move(rec));
  }
  for (const auto& a : j.at("aggregates")) {
    AggregateRow row;
    row.n = a.at("n").get<std::size_t>();
    row.snr = a.at("snr").get<double>();
    row.beta = a.at("beta").get<double>();
    row.count = a.at("count").get<std::size_t>();
    row.mean_jumps = a.at("mean_jumps").get<double>();
    row.stderr_jumps = a.at("stderr_jumps").get<double>();
    row.mean_l2 = a.at("mean_l2").get<double>();
    row.stderr_l2 = a.at("stderr_l2").get<double>();
    row.mean_lp = a.at("mean_lp").get<std::vector<double>>();
    row.median_jump_distance = detail::decode_double(a.at("median_jump_distance"));
    row.modal_jumps = a.at("modal_jumps").get<std::size_t>();
    row.modal_share = a.at("modal_share").get<double>();
    res.aggregates.push_back(std::move(row));
  }
  if (const auto& s = j.at("slope"); !s.is_null()) {
    SlopeFit fit;
    fit.slope = s.at("slope").get<double>();
    if (!s.at("stderr").is_null()) fit.stderr_slope = s.at("stderr").get<double>();
    fit.points = s.at("points").get<std::size_t>();
    res.slope = fit;
  }
  res.truth_modes = j.at("truth_modes").get<std::size_t>();
  res.truth_troughs = j.at("truth_troughs").get<std::size_t>();
  return res;
}

enum class EmitFormat { csv, json, gnuplot };

inline std::string emit_path(const std::string& prefix, EmitFormat f) {
  switch (f) {
    case EmitFormat::csv: return prefix + ".csv";
    case EmitFormat::json: return prefix + ".json";
    case EmitFormat::gnuplot: return prefix + ".dat";
  }
  return prefix;
}

// Writes prefix.csv / prefix.json / prefix.dat.
inline void emit(const ExperimentResult& res, const std::string& prefix, std::span<const EmitFormat> formats) {
  for (auto f : formats) {
    const auto path = emit_path(prefix, f);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    switch (f) {
      case EmitFormat::csv: write_csv(out, res); break;
      case EmitFormat::json: out << to_json_value(res).dump(2) << '\n'; break;
      case EmitFormat::gnuplot: write_gnuplot(out, res); break;
    }
    out.flush();
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
  }
}

}  // namespace msseg
