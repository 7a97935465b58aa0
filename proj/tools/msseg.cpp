#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "msseg/msseg.hpp"

using namespace msseg;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitInfeasible = 3;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out.flush()) throw std::runtime_error("failed writing '" + path + "'");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ContractViolation("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::vector<double> parse_partition(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "equal" && args.rfind("m=", 0) == 0)
    return equal_partition(static_cast<std::size_t>(detail::parse_u64(args.substr(2), "m")));
  if (kind == "points") {
    std::vector<double> tau;
    for (const auto& item : detail::split_list(args)) tau.push_back(detail::parse_double(item, "breakpoint"));
    return tau;
  }
  throw ContractViolation("partition must be 'equal:m=<k>' or 'points:<t0>,<t1>,...'");
}

// Flags shared by the replicate experiments; anything set here overrides --config.
struct ExperimentFlags {
  std::string config_path, signal, n, snr, beta, noise, penalty, intervals, lp, output;
  std::optional<std::size_t> replicates, mc;
  std::optional<std::uint64_t> seed;
  std::optional<double> a, b;
  std::string formats = "csv,json,gnuplot";

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key = value config file");
    app->add_option("--signal", signal);
    app->add_option("--n", n, "grid size or comma list");
    app->add_option("--snr", snr, "comma list");
    app->add_option("--beta", beta, "comma list");
    app->add_option("--noise", noise, "gaussian | scaled-rademacher | uniform");
    app->add_option("--penalty", penalty);
    app->add_option("--intervals", intervals);
    app->add_option("--replicates", replicates);
    app->add_option("--seed", seed);
    app->add_option("--mc", mc, "Monte Carlo draws for eta");
    app->add_option("--a", a, "distortion frequency");
    app->add_option("--b", b, "distortion amplitude");
    app->add_option("--lp", lp, "extra L^p exponents");
    app->add_option("--output", output, "output prefix; CSV to stdout when absent");
    app->add_option("--format", formats, "comma list of csv, json, gnuplot");
  }

  ExperimentConfig resolve(const std::string& experiment) const {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    cfg.experiment = experiment;
    auto set = [&](const char* key, const std::string& v) {
      if (!v.empty()) apply_setting(cfg, key, v);
    };
    set("signal", signal);
    set("n", n);
    set("snr", snr);
    set("beta", beta);
    set("noise", noise);
    set("penalty", penalty);
    set("intervals", intervals);
    set("lp", lp);
    set("output", output);
    if (replicates) cfg.replicates = *replicates;
    if (mc) cfg.n_mc = *mc;
    if (seed) cfg.seed = *seed;
    if (a) cfg.distortion_a = *a;
    if (b) cfg.distortion_b = *b;
    validate(cfg);
    return cfg;
  }

  std::vector<EmitFormat> emit_formats() const {
    std::vector<EmitFormat> out;
    for (const auto& f : detail::split_list(formats)) {
      if (f == "csv")
        out.push_back(EmitFormat::csv);
      else if (f == "json")
        out.push_back(EmitFormat::json);
      else if (f == "gnuplot")
        out.push_back(EmitFormat::gnuplot);
      else
        throw ContractViolation("unknown format '" + f + "'");
    }
    return out;
  }
};

void run_and_emit(const ExperimentFlags& flags, const std::string& experiment) {
  const auto cfg = flags.resolve(experiment);
  const auto formats = flags.emit_formats();
  const auto res = run_experiment(cfg);
  if (cfg.output.empty()) {
    write_csv(std::cout, res);
  } else {
    emit(res, cfg.output, formats);
    if (res.slope)
      std::cerr << "slope " << format_double(res.slope->slope)
                << (res.slope->stderr_slope ? " +- " + format_double(*res.slope->stderr_slope) : "") << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale change-point segmentation"};
  app.require_subcommand(1);

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "threshold eta for a grid size and interval system");
  std::size_t cal_n = 0;
  std::string cal_intervals = "dyadic-length", cal_penalty = "smuce", cal_threshold = "quantile:beta=0.1,mc=10000",
              cal_output;
  double cal_sigma = 1.0;
  std::optional<std::uint64_t> cal_seed;
  cal->add_option("--n", cal_n)->required();
  cal->add_option("--intervals", cal_intervals);
  cal->add_option("--penalty", cal_penalty);
  cal->add_option("--threshold", cal_threshold);
  cal->add_option("--sigma", cal_sigma);
  cal->add_option("--seed", cal_seed);
  cal->add_option("--output", cal_output);

  // fit
  auto* fitc = app.add_subcommand("fit", "minimal-jump fit of an observation CSV");
  std::string fit_input, fit_intervals = "dyadic-length", fit_penalty = "smuce",
                         fit_threshold = "quantile:beta=0.1,mc=10000", fit_output, fit_scale = "standardized";
  double fit_sigma = 1.0;
  std::optional<std::uint64_t> fit_seed;
  fitc->add_option("--input", fit_input)->required();
  fitc->add_option("--sigma", fit_sigma, "known noise level");
  fitc->add_option("--intervals", fit_intervals);
  fitc->add_option("--penalty", fit_penalty);
  fitc->add_option("--threshold", fit_threshold);
  fitc->add_option("--seed", fit_seed);
  fitc->add_option("--scale", fit_scale, "standardized: constrain y/sigma; raw: constrain y")
      ->check(CLI::IsMember({"standardized", "raw"}));
  fitc->add_option("--output", fit_output);

  // features
  auto* feat = app.add_subcommand("features", "significant jumps and monotonicity of an estimate");
  std::string feat_estimate, feat_m = "auto", feat_output, feat_annotations;
  std::optional<double> feat_beta;
  feat->add_option("--estimate", feat_estimate)->required();
  feat->add_option("--beta", feat_beta);
  feat->add_option("--m", feat_m, "window in cells or 'auto' for floor(log n)");
  feat->add_option("--output", feat_output);
  feat->add_option("--annotations", feat_annotations, "gnuplot table: location type significant");

  // oracle
  auto* orc = app.add_subcommand("oracle", "best-approximant error curve");
  std::string orc_signal = "heavisine", orc_output;
  std::size_t orc_n = 2048, orc_curve = 64;
  orc->add_option("--signal", orc_signal);
  orc->add_option("--n", orc_n);
  orc->add_option("--curve", orc_curve, "largest k");
  orc->add_option("--output", orc_output);

  // oracle-risk
  auto* risk = app.add_subcommand("oracle-risk", "risk of the oracle segmentation on a partition");
  std::string risk_signal = "ramp", risk_partition = "equal:m=8", risk_output;
  std::size_t risk_n = 384;
  double risk_sigma = 1.0;
  risk->add_option("--signal", risk_signal);
  risk->add_option("--partition", risk_partition, "equal:m=<k> or points:<t0>,...,<1>");
  risk->add_option("--sigma", risk_sigma);
  risk->add_option("--n", risk_n);
  risk->add_option("--output", risk_output);

  ExperimentFlags stab, sweep, robust, conv;
  stab.attach(app.add_subcommand("stability", "Olshen signal across a beta grid"));
  sweep.attach(app.add_subcommand("noise-sweep", "loss across an SNR grid"));
  robust.attach(app.add_subcommand("robustness", "sine-distorted Olshen signal"));
  conv.attach(app.add_subcommand("convergence", "L2 loss against n with a log-log slope"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*cal) {
      const IntervalSystem sys(parse_interval_kind(cal_intervals), cal_n);
      auto rule = parse_threshold(cal_threshold);
      if (auto* q = std::get_if<QuantileRule>(&rule); q && cal_seed) q->seed = *cal_seed;
      const auto resolved = resolve_threshold(rule, sys, parse_penalty(cal_penalty), cal_sigma);
      json out = resolved.calibration ? json(*resolved.calibration) : json{{"eta", resolved.eta}};
      write_text(cal_output, out.dump(2) + "\n");
    } else if (*fitc) {
      std::ifstream in(fit_input);
      if (!in) throw ContractViolation("cannot open '" + fit_input + "'");
      const auto y = read_observation_csv(in, fit_sigma);
      const IntervalSystem sys(parse_interval_kind(fit_intervals), y.n());
      const auto pen = parse_penalty(fit_penalty);
      auto rule = parse_threshold(fit_threshold);
      if (auto* q = std::get_if<QuantileRule>(&rule); q && fit_seed) q->seed = *fit_seed;
      const bool standardized = fit_scale == "standardized";
      const auto resolved = resolve_threshold(rule, sys, pen, standardized ? 1.0 : fit_sigma);
      auto est = standardized ? fit_standardized(y, sys, pen, resolved.eta) : fit(y, sys, pen, resolved.eta);
      est.calibration = resolved.calibration;
      write_text(fit_output, json(est).dump(2) + "\n");
    } else if (*feat) {
      const auto est = read_json(feat_estimate).get<Estimate>();
      if (est.intervals == IntervalKind::custom) throw ContractViolation("features needs a named interval system");
      const IntervalSystem sys(est.intervals, est.n);
      ConfidenceParams p;
      p.beta = feat_beta ? *feat_beta : est.calibration ? est.calibration->beta : 0.1;
      p.eta = est.eta;
      p.m = feat_m == "auto" ? default_window(est.n) : static_cast<std::size_t>(detail::parse_u64(feat_m, "m"));
      const auto rep = feature_report(est, sys, p);
      write_text(feat_output, json(rep).dump(2) + "\n");
      if (!feat_annotations.empty()) {
        std::ostringstream os;
        write_feature_annotations(os, rep, est.n);
        write_text(feat_annotations, os.str());
      }
    } else if (*orc) {
      ExperimentConfig cfg;
      cfg.signal = orc_signal;
      validate(cfg);
      const auto curve = approx_error_curve(make_signal(cfg, orc_n), orc_n, orc_curve);
      std::ostringstream os;
      os << "k,delta,gamma_hat\n";
      const std::string gamma = curve.slope ? format_double(-*curve.slope) : "";
      for (std::size_t i = 0; i < curve.k.size(); ++i)
        os << curve.k[i] << ',' << format_double(curve.errors[i]) << ',' << gamma << '\n';
      write_text(orc_output, os.str());
    } else if (*risk) {
      ExperimentConfig cfg;
      cfg.signal = risk_signal;
      validate(cfg);
      const auto tau = parse_partition(risk_partition);
      const auto r = oracle_risk(make_signal(cfg, risk_n), tau, risk_sigma, risk_n);
      const json out{{"signal", risk_signal}, {"n", risk_n},           {"sigma", risk_sigma},
                     {"tau", r.tau},          {"bias_sq", r.bias_sq}, {"grid_bias_sq", r.grid_bias_sq},
                     {"variance", r.variance}, {"total", r.total}};
      write_text(risk_output, out.dump(2) + "\n");
    } else if (*app.get_subcommand("stability")) {
      run_and_emit(stab, "stability");
    } else if (*app.get_subcommand("noise-sweep")) {
      run_and_emit(sweep, "noise-sweep");
    } else if (*app.get_subcommand("robustness")) {
      run_and_emit(robust, "robustness");
    } else if (*app.get_subcommand("convergence")) {
      run_and_emit(conv, "convergence");
    }
  } catch (const InfeasibleError& e) {
    std::cerr << "msseg: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const ContractViolation& e) {
    std::cerr << "msseg: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const DomainError& e) {
    std::cerr << "msseg: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "msseg: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
