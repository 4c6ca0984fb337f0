#pragma once

// Readers and writers for pixel posteriors, unit weights and projection
// summaries. Every writer has a matching reader that restores the values
// bit for bit.

#include <map>
#include <string>
#include <vector>

#include "lfmap/io/csv.hpp"
#include "lfmap/pipeline/pixels.hpp"
#include "lfmap/pipeline/projection.hpp"
#include "lfmap/pipeline/weighting.hpp"

namespace lfmap::io {

/// Pixel posterior file: pixel_id, country, population, then one column per
/// posterior sample. The version line is optional for this input format.
inline std::vector<pipeline::PixelPosterior> read_pixels(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (!t.kind.empty() && t.kind != "pixels") throw FormatError(path + ": expected an lfmap pixels file");
  const std::size_t id = t.column("pixel_id");
  const std::size_t country = t.column("country");
  const std::size_t pop = t.column("population");
  std::vector<std::size_t> sample_cols;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (c != id && c != country && c != pop) sample_cols.push_back(c);
  }
  if (sample_cols.empty()) throw FormatError(path + ": no sample columns");
  std::vector<pipeline::PixelPosterior> out;
  for (const auto& r : t.rows) {
    pipeline::PixelPosterior p;
    p.pixel_id = r[id];
    p.country = r[country];
    p.population = parse_double(r[pop]);
    for (std::size_t c : sample_cols) p.samples.push_back(parse_double(r[c]));
    p.validate();
    out.push_back(std::move(p));
  }
  return out;
}

inline void write_pixels(const std::string& path, const std::vector<pipeline::PixelPosterior>& pixels) {
  if (pixels.empty()) throw InvalidArgument("no pixels to write");
  std::vector<std::string> cols{"pixel_id", "country", "population"};
  for (std::size_t i = 0; i < pixels.front().samples.size(); ++i) cols.push_back("s" + std::to_string(i + 1));
  CsvWriter out(path, "pixels", cols);
  for (const auto& p : pixels) {
    if (p.samples.size() != pixels.front().samples.size()) {
      throw InvalidArgument("all pixels must carry the same number of samples");
    }
    std::vector<std::string> row{p.pixel_id, p.country, format_double(p.population)};
    for (double v : p.samples) row.push_back(format_double(v));
    out.row(row);
  }
  out.close();
}

/// Per-unit diagnostics (one row per unit, members joined with '+').
inline void write_units(const std::string& path, const std::vector<pipeline::PooledUnit>& units,
                        const std::vector<pipeline::UnitWeights>& weights) {
  if (units.size() != weights.size()) throw InvalidArgument("units and weights differ in length");
  CsvWriter out(path, "units",
                {"unit_id", "country", "members", "population", "undersized", "ess", "dropped_mass", "delta",
                 "delta_fallback", "low_ess", "failure"});
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& u = units[i];
    const auto& w = weights[i];
    std::string members;
    for (const auto& m : u.members) members += (members.empty() ? "" : "+") + m;
    out.row({u.unit_id, u.country, members, format_double(u.population), u.undersized ? "1" : "0",
             format_double(w.ess), format_double(w.dropped_mass), format_double(w.delta),
             w.delta_fallback ? "1" : "0", w.low_ess ? "1" : "0", w.failure.empty() ? "" : check_field(w.failure)});
  }
  out.close();
}

/// Sparse weights: one row per (unit, simulation) with non-zero weight.
inline void write_weights(const std::string& path, const std::vector<pipeline::UnitWeights>& weights) {
  CsvWriter out(path, "weights", {"unit_id", "simulation", "weight"});
  for (const auto& w : weights) {
    for (std::size_t i = 0; i < w.index.size(); ++i) {
      out.row({w.unit_id, std::to_string(w.index[i]), format_double(w.weight[i])});
    }
  }
  out.close();
}

/// Rebuilds unit weights from the units and weights files.
inline std::vector<pipeline::UnitWeights> read_weights(const std::string& units_path,
                                                       const std::string& weights_path) {
  const CsvTable units = read_csv(units_path, "units");
  std::vector<pipeline::UnitWeights> out;
  std::map<std::string, std::size_t> by_id;
  const std::size_t c_id = units.column("unit_id"), c_ess = units.column("ess"),
                    c_drop = units.column("dropped_mass"), c_delta = units.column("delta"),
                    c_fb = units.column("delta_fallback"), c_low = units.column("low_ess"),
                    c_fail = units.column("failure");
  for (const auto& r : units.rows) {
    pipeline::UnitWeights w;
    w.unit_id = r[c_id];
    w.ess = parse_double(r[c_ess]);
    w.dropped_mass = parse_double(r[c_drop]);
    w.delta = parse_double(r[c_delta]);
    w.delta_fallback = parse_bool(r[c_fb]);
    w.low_ess = parse_bool(r[c_low]);
    w.failure = r[c_fail];
    if (!by_id.emplace(w.unit_id, out.size()).second) throw FormatError("duplicate unit id " + w.unit_id);
    out.push_back(std::move(w));
  }
  const CsvTable t = read_csv(weights_path, "weights");
  const std::size_t w_id = t.column("unit_id"), w_sim = t.column("simulation"), w_val = t.column("weight");
  for (const auto& r : t.rows) {
    const auto it = by_id.find(r[w_id]);
    if (it == by_id.end()) throw FormatError("weights for unknown unit " + r[w_id]);
    out[it->second].index.push_back(parse_int<std::uint32_t>(r[w_sim]));
    out[it->second].weight.push_back(parse_double(r[w_val]));
  }
  return out;
}

/// Reads the pooled units (without samples) back from a units file.
inline std::vector<pipeline::PooledUnit> read_units(const std::string& path) {
  const CsvTable t = read_csv(path, "units");
  std::vector<pipeline::PooledUnit> out;
  const std::size_t c_id = t.column("unit_id"), c_country = t.column("country"), c_members = t.column("members"),
                    c_pop = t.column("population"), c_under = t.column("undersized");
  for (const auto& r : t.rows) {
    pipeline::PooledUnit u;
    u.unit_id = r[c_id];
    u.country = r[c_country];
    std::string member;
    for (char ch : r[c_members]) {
      if (ch == '+') {
        u.members.push_back(member);
        member.clear();
      } else {
        member += ch;
      }
    }
    u.members.push_back(member);
    u.population = parse_double(r[c_pop]);
    u.undersized = parse_bool(r[c_under]);
    out.push_back(std::move(u));
  }
  return out;
}

/// One row per unit x year for a single scenario.
inline void write_summary(const std::string& path, const std::vector<pipeline::ProjectionSummary>& summaries) {
  CsvWriter out(path, "summary",
                {"unit_id", "scenario", "year", "lower", "median", "upper", "mean", "elimination_probability", "ess",
                 "dropped_mass"});
  for (const auto& s : summaries) {
    for (const auto& y : s.years) {
      out.row({s.unit_id, s.scenario, std::to_string(y.year), format_double(y.lower), format_double(y.median),
               format_double(y.upper), format_double(y.mean), format_double(y.elimination_probability),
               format_double(s.ess), format_double(s.dropped_mass)});
    }
  }
  out.close();
}

inline std::vector<pipeline::ProjectionSummary> read_summary(const std::string& path) {
  const CsvTable t = read_csv(path, "summary");
  const std::size_t c_id = t.column("unit_id"), c_sc = t.column("scenario"), c_year = t.column("year"),
                    c_lo = t.column("lower"), c_med = t.column("median"), c_up = t.column("upper"),
                    c_mean = t.column("mean"), c_el = t.column("elimination_probability"), c_ess = t.column("ess"),
                    c_drop = t.column("dropped_mass");
  std::vector<pipeline::ProjectionSummary> out;
  for (const auto& r : t.rows) {
    if (out.empty() || out.back().unit_id != r[c_id] || out.back().scenario != r[c_sc]) {
      pipeline::ProjectionSummary s;
      s.unit_id = r[c_id];
      s.scenario = r[c_sc];
      s.ess = parse_double(r[c_ess]);
      s.dropped_mass = parse_double(r[c_drop]);
      out.push_back(std::move(s));
    }
    pipeline::YearSummary y;
    y.year = parse_int<int>(r[c_year]);
    y.lower = parse_double(r[c_lo]);
    y.median = parse_double(r[c_med]);
    y.upper = parse_double(r[c_up]);
    y.mean = parse_double(r[c_mean]);
    y.elimination_probability = parse_double(r[c_el]);
    out.back().years.push_back(y);
  }
  return out;
}

inline std::string threshold_label(double p) { return "achieved_" + format_double(p); }

/// Elimination map data: probability plus an achieved flag per probability
/// threshold, one row per unit x year.
inline void write_elimination(const std::string& path, const std::vector<pipeline::ProjectionSummary>& summaries,
                              const pipeline::ProjectionConfig& config) {
  std::vector<std::string> cols{"unit_id", "scenario", "year", "elimination_probability"};
  for (double p : config.probability_thresholds) cols.push_back(threshold_label(p));
  CsvWriter out(path, "elimination", cols);
  for (const auto& s : summaries) {
    for (std::size_t y = 0; y < s.years.size(); ++y) {
      std::vector<std::string> row{s.unit_id, s.scenario, std::to_string(s.years[y].year),
                                   format_double(s.years[y].elimination_probability)};
      for (double p : config.probability_thresholds) row.push_back(s.achieved(y, p) ? "1" : "0");
      out.row(row);
    }
  }
  out.close();
}

struct ProportionRow {
  std::string scenario;
  int year = 0;
  double probability = 0.0;
  double proportion = 0.0;
  friend bool operator==(const ProportionRow&, const ProportionRow&) = default;
};

/// Share of units reaching each probability threshold, per scenario and year.
inline void write_proportions(const std::string& path, const std::vector<ProportionRow>& rows) {
  CsvWriter out(path, "proportion_eliminated", {"scenario", "year", "probability_threshold", "proportion"});
  for (const auto& r : rows) {
    out.row({r.scenario, std::to_string(r.year), format_double(r.probability), format_double(r.proportion)});
  }
  out.close();
}

inline std::vector<ProportionRow> read_proportions(const std::string& path) {
  const CsvTable t = read_csv(path, "proportion_eliminated");
  const std::size_t c_sc = t.column("scenario"), c_year = t.column("year"), c_p = t.column("probability_threshold"),
                    c_v = t.column("proportion");
  std::vector<ProportionRow> out;
  for (const auto& r : t.rows) {
    out.push_back({r[c_sc], parse_int<int>(r[c_year]), parse_double(r[c_p]), parse_double(r[c_v])});
  }
  return out;
}

}  // namespace lfmap::io
