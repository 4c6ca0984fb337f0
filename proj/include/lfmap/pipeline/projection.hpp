#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lfmap/bank.hpp"
#include "lfmap/error.hpp"
#include "lfmap/parallel.hpp"
#include "lfmap/pipeline/weighting.hpp"

namespace lfmap::pipeline {

/// Smallest value x with weighted cdf H(x) >= q (inverse of the
/// right-continuous weighted empirical cdf). Weights need not be normalised;
/// zero-weight values are ignored and cdf levels within 1e-12 of q (relative
/// to the total weight) count as reaching it.
inline double weighted_quantile(std::span<const double> values, std::span<const double> weights, double q) {
  lfmap::detail::require(values.size() == weights.size() && !values.empty(), "quantile needs matching non-empty inputs");
  lfmap::detail::require(q >= 0.0 && q <= 1.0, "quantile level must lie in [0, 1]");
  std::vector<std::size_t> order;
  order.reserve(values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    lfmap::detail::require(weights[i] >= 0.0, "quantile weights must be non-negative");
    if (weights[i] > 0.0) {
      order.push_back(i);
      total += weights[i];
    }
  }
  lfmap::detail::require(total > 0.0, "quantile weights are all zero");
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double target = q * total - 1e-12 * total;
  double running = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double v = values[order[i]];
    while (i < order.size() && values[order[i]] == v) running += weights[order[i++]];
    if (running >= target) return v;
  }
  return values[order.back()];
}

/// Thresholds used when summarising projections.
struct ProjectionConfig {
  /// Prevalence below which a unit counts as having eliminated.
  double elimination_threshold = 0.01;
  /// Probabilities at which elimination is reported as achieved.
  std::vector<double> probability_thresholds{0.90, 0.95, 0.99};

  void validate() const {
    lfmap::detail::require(elimination_threshold > 0.0 && elimination_threshold <= 1.0,
                    "elimination threshold must lie in (0, 1]");
    for (double p : probability_thresholds) {
      lfmap::detail::require(p > 0.0 && p <= 1.0, "probability thresholds must lie in (0, 1]");
    }
  }
};

struct YearSummary {
  int year = 0;
  double lower = 0.0;
  double median = 0.0;
  double upper = 0.0;
  double mean = 0.0;
  /// Weighted probability that prevalence is below the elimination threshold.
  double elimination_probability = 0.0;

  friend bool operator==(const YearSummary&, const YearSummary&) = default;
};

struct ProjectionSummary {
  std::string unit_id;
  std::string scenario;
  std::vector<YearSummary> years;
  double ess = 0.0;
  double dropped_mass = 0.0;

  /// Whether elimination probability in `year` reaches `probability`.
  bool achieved(std::size_t year, double probability) const {
    return years.at(year).elimination_probability >= probability;
  }

  friend bool operator==(const ProjectionSummary&, const ProjectionSummary&) = default;
};

/// Weighted 2.5 / 50 / 97.5 percentiles, mean and elimination probability of
/// `values` under sparse unit weights.
inline YearSummary summarize_values(const UnitWeights& w, std::span<const double> values, double threshold) {
  std::vector<double> picked(w.index.size());
  YearSummary out;
  for (std::size_t i = 0; i < w.index.size(); ++i) {
    picked[i] = values[w.index[i]];
    out.mean += w.weight[i] * picked[i];
    if (picked[i] < threshold) out.elimination_probability += w.weight[i];
  }
  out.elimination_probability = std::clamp(out.elimination_probability, 0.0, 1.0);
  out.lower = weighted_quantile(picked, w.weight, 0.025);
  out.median = weighted_quantile(picked, w.weight, 0.5);
  out.upper = weighted_quantile(picked, w.weight, 0.975);
  return out;
}

/// Projects one unit under one bank scenario. Year 0 is the baseline.
inline ProjectionSummary project(const UnitWeights& weights, const SimulationBank& bank, std::size_t scenario,
                                 const ProjectionConfig& config = {}) {
  lfmap::detail::require(weights.ok(), "unit " + weights.unit_id + " has no weights: " + weights.failure);
  lfmap::detail::require(scenario < bank.scenarios().size(), "scenario index out of range");
  ProjectionSummary out;
  out.unit_id = weights.unit_id;
  out.scenario = bank.scenarios()[scenario];
  out.ess = weights.ess;
  out.dropped_mass = weights.dropped_mass;
  std::vector<double> values(bank.size());
  for (std::size_t y = 0; y < bank.points(); ++y) {
    for (std::size_t j = 0; j < bank.size(); ++j) values[j] = bank.trajectory(scenario, j)[y];
    YearSummary s = summarize_values(weights, values, config.elimination_threshold);
    s.year = static_cast<int>(y);
    out.years.push_back(s);
  }
  return out;
}

/// Projects every successfully weighted unit; failed units are skipped.
inline std::vector<ProjectionSummary> project_all(std::span<const UnitWeights> weights, const SimulationBank& bank,
                                                  std::size_t scenario, const ProjectionConfig& config,
                                                  unsigned workers) {
  config.validate();
  std::vector<ProjectionSummary> slots(weights.size());
  parallel_for(weights.size(), workers, [&](std::size_t i) {
    if (weights[i].ok()) slots[i] = project(weights[i], bank, scenario, config);
  });
  std::vector<ProjectionSummary> out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (weights[i].ok()) out.push_back(std::move(slots[i]));
  }
  return out;
}

/// Weighted summary of baseline (equilibrium) prevalence.
inline YearSummary baseline_summary(const UnitWeights& weights, const SimulationBank& bank,
                                    double threshold = 0.01) {
  return summarize_values(weights, bank.equilibrium_column(), threshold);
}

/// Weighted mean population size of the simulations behind a unit.
inline double estimated_population(const UnitWeights& weights, const SimulationBank& bank) {
  double out = 0.0;
  for (std::size_t i = 0; i < weights.index.size(); ++i) {
    out += weights.weight[i] * bank.parameters(weights.index[i]).population;
  }
  return out;
}

/// Fraction of units whose elimination probability in `year` reaches
/// `probability`.
inline double proportion_eliminated(std::span<const ProjectionSummary> summaries, std::size_t year,
                                    double probability) {
  if (summaries.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : summaries) hits += s.achieved(year, probability) ? 1U : 0U;
  return static_cast<double>(hits) / static_cast<double>(summaries.size());
}

}  // namespace lfmap::pipeline
