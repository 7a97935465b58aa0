#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "msseg/errors.hpp"
#include "msseg/inference.hpp"
#include "msseg/multiscale.hpp"
#include "msseg/signals.hpp"
#include "msseg/solver.hpp"

namespace msseg {

using json = nlohmann::json;

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

// JSON has no infinities; they are written as null.
inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline double number_or_inf(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

inline void to_json(json& j, const StepFunction& f) {
  j = json{{"breakpoints", f.breakpoints()}, {"values", f.values()}};
}
inline void from_json(const json& j, StepFunction& f) {
  f = StepFunction(j.at("breakpoints").get<std::vector<double>>(), j.at("values").get<std::vector<double>>());
}

inline void write_observation_csv(std::ostream& os, const Observation& obs) {
  os << "index,value\n";
  for (std::size_t i = 0; i < obs.n(); ++i) os << i << ',' << format_double(obs.y[i]) << '\n';
}

inline Observation read_observation_csv(std::istream& is, double sigma) {
  std::string line;
  if (!std::getline(is, line)) throw ContractViolation("observation CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "index,value") throw ContractViolation("observation CSV must start with 'index,value'");
  Observation obs{{}, sigma};
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ContractViolation("observation CSV row " + std::to_string(row) + " has no comma");
    const auto index = detail::parse_u64(line.substr(0, comma), "index");
    if (index != row) throw ContractViolation("observation CSV rows must be numbered 0..n-1");
    obs.y.push_back(detail::parse_double(line.substr(comma + 1), "value"));
    ++row;
  }
  obs.validate();
  return obs;
}

inline void to_json(json& j, const CalibrationResult& c) {
  j = json{{"eta", c.eta}, {"beta", c.beta}, {"n_mc", c.n_mc}, {"seed", c.seed}, {"delta_bound", c.delta_bound}};
}
inline void from_json(const json& j, CalibrationResult& c) {
  c.eta = j.at("eta").get<double>();
  c.beta = j.at("beta").get<double>();
  c.n_mc = j.at("n_mc").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.delta_bound = j.at("delta_bound").get<double>();
}

inline void to_json(json& j, const Estimate& e) {
  json segs = json::array();
  for (const auto& s : e.segments)
    segs.push_back({{"start", s.cells.start}, {"end", s.cells.end}, {"value", s.value},
                    {"band", {finite_or_null(s.band.lo), finite_or_null(s.band.hi)}}});
  j = json{{"n", e.n},
           {"sigma", e.sigma},
           {"fit", e.fit},
           {"jumps", e.jumps},
           {"segments", segs},
           {"eta", e.eta},
           {"intervals", std::string(to_string(e.intervals))},
           {"penalty", std::string(to_string(e.penalty))},
           {"certificate", e.certificate},
           {"noise_scale", e.noise_scale},
           {"calibration", e.calibration ? json(*e.calibration) : json(nullptr)}};
}

inline void from_json(const json& j, Estimate& e) {
  e.n = j.at("n").get<std::size_t>();
  e.sigma = j.at("sigma").get<double>();
  e.fit = j.at("fit").get<StepFunction>();
  e.jumps = j.at("jumps").get<std::size_t>();
  e.eta = j.at("eta").get<double>();
  const auto intervals = j.at("intervals").get<std::string>();
  e.intervals = intervals == "custom" ? IntervalKind::custom : parse_interval_kind(intervals);
  e.penalty = parse_penalty(j.at("penalty").get<std::string>());
  e.certificate = j.at("certificate").get<double>();
  e.noise_scale = j.value("noise_scale", 1.0);
  e.segments.clear();
  for (const auto& s : j.at("segments")) {
    EstimateSegment seg;
    seg.cells = {s.at("start").get<std::size_t>(), s.at("end").get<std::size_t>()};
    seg.value = s.at("value").get<double>();
    const auto& band = s.at("band");
    seg.band.lo = band.at(0).is_null() ? -std::numeric_limits<double>::infinity() : band.at(0).get<double>();
    seg.band.hi = number_or_inf(band.at(1));
    e.segments.push_back(seg);
  }
  if (e.segments.empty() || e.segments.front().cells.start != 0 || e.segments.back().cells.end != e.n)
    throw ContractViolation("estimate segments must cover the grid");
  if (j.contains("calibration") && !j.at("calibration").is_null())
    e.calibration = j.at("calibration").get<CalibrationResult>();
  else
    e.calibration.reset();
}

inline void to_json(json& j, const FeatureReport& r) {
  json jumps = json::array();
  for (const auto& a : r.jumps)
    jumps.push_back({{"change_cell", a.change_cell},
                     {"location", a.location},
                     {"left_band", {a.left_lo, a.left_hi}},
                     {"right_band", {a.right_lo, a.right_hi}},
                     {"left_cells", a.left_cells},
                     {"right_cells", a.right_cells},
                     {"clipped", a.clipped},
                     {"significant", a.significant}});
  json mono = json::array();
  for (const auto& m : r.monotonicity) {
    json entry{{"change_cell", m.change_cell},
               {"direction", std::string(to_string(m.direction))},
               {"left_empty", m.left_empty},
               {"right_empty", m.right_empty}};
    if (!m.left_empty && !m.right_empty)
      entry["bounds"] = {{"u_left", m.u_left}, {"l_left", m.l_left}, {"u_right", m.u_right}, {"l_right", m.l_right}};
    mono.push_back(entry);
  }
  j = json{{"beta", r.beta},
           {"eta", r.eta},
           {"m", r.m},
           {"jumps", jumps},
           {"monotonicity", mono},
           {"modes_lower_bound", r.modes_lower_bound},
           {"troughs_lower_bound", r.troughs_lower_bound}};
}

// Plot annotation table: location, type, significant.
inline void write_feature_annotations(std::ostream& os, const FeatureReport& r, std::size_t n) {
  os << "# location type significant\n";
  for (const auto& a : r.jumps) os << format_double(a.location) << " jump " << (a.significant ? 1 : 0) << '\n';
  for (const auto& m : r.monotonicity)
    if (m.direction != Direction::inconclusive)
      os << format_double(static_cast<double>(m.change_cell) / static_cast<double>(n)) << ' '
         << to_string(m.direction) << " 1\n";
}

}  // namespace msseg
