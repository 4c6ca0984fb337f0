#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lfmap/bank.hpp"
#include "lfmap/ernd.hpp"
#include "lfmap/parallel.hpp"
#include "lfmap/pipeline/pixels.hpp"
#include "lfmap/proposal.hpp"
#include "lfmap/weights.hpp"

namespace lfmap::pipeline {

struct WeightingConfig {
  ErndConfig ernd{.kind = ErndKind::kDistance, .delta = 0.01};
  /// Standard deviation of log population in the per-pixel prior.
  double population_log_sd = 0.5;
  /// Units whose ESS falls below this are flagged.
  double ess_floor = 50.0;
  /// Weights below this fraction of the largest are dropped.
  double sparse_cutoff = 1e-12;

  void validate() const {
    ernd.validate();
    lfmap::detail::require(population_log_sd > 0.0, "population log sd must be positive");
    lfmap::detail::require(ess_floor >= 0.0, "ESS floor must be >= 0");
    lfmap::detail::require(sparse_cutoff >= 0.0 && sparse_cutoff < 1.0, "sparse cutoff must lie in [0, 1)");
  }
};

/// Sparse normalised weights of one unit over the bank, with diagnostics.
struct UnitWeights {
  std::string unit_id;
  std::vector<std::uint32_t> index;
  std::vector<double> weight;
  double ess = 0.0;
  double dropped_mass = 0.0;
  double delta = 0.0;
  bool delta_fallback = false;
  bool low_ess = false;
  /// Non-empty when the unit could not be weighted at all.
  std::string failure;

  bool ok() const noexcept { return failure.empty(); }
  friend bool operator==(const UnitWeights&, const UnitWeights&) = default;
};

/// Stage-1 importance ratios of every simulation for a pixel of the given
/// reported population: log-normal population prior over the bank's
/// population proposal. The other parameters share prior and proposal.
inline std::vector<double> population_stage1(const SimulationBank& bank, double reported, double log_sd) {
  std::vector<std::size_t> idx(bank.size());
  for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
  return stage1_weights<std::size_t>(
      idx, [&](std::size_t j) { return population_prior_density(bank.parameters(j).population, reported, log_sd); },
      [&](std::size_t j) { return bank.proposal_pmf(j); });
}

/// Drops weights below `cutoff` times the largest and renormalises.
inline void sparsify(std::span<const double> dense, double cutoff, UnitWeights& out) {
  const double largest = *std::max_element(dense.begin(), dense.end());
  double total = 0.0;
  out.index.clear();
  out.weight.clear();
  for (std::size_t j = 0; j < dense.size(); ++j) {
    if (dense[j] > 0.0 && dense[j] >= cutoff * largest) {
      out.index.push_back(static_cast<std::uint32_t>(j));
      out.weight.push_back(dense[j]);
      total += dense[j];
    }
  }
  for (double& w : out.weight) w /= total;
  out.ess = lfmap::ess(out.weight);
}

/// Weights the bank for one unit: population-prior stage-1 ratios, then the
/// configured ERND against the unit's baseline prevalence samples.
inline UnitWeights weight_unit(const PooledUnit& unit, const SimulationBank& bank, const WeightingConfig& config) {
  UnitWeights out;
  out.unit_id = unit.unit_id;
  try {
    lfmap::detail::require(bank.size() > 0, "bank is empty");
    const auto w1 = population_stage1(bank, unit.population, config.population_log_sd);
    const auto pixel = PrevalenceSamples::map(unit.samples);
    const auto sims = PrevalenceSamples::bank(bank.equilibrium_column());
    const ErndResult r = reweight(config.ernd, pixel, sims, w1);
    out.dropped_mass = r.dropped_mass;
    out.delta = r.delta;
    out.delta_fallback = r.delta_fallback;
    sparsify(r.weights.span(), config.sparse_cutoff, out);
    out.low_ess = out.ess < config.ess_floor;
  } catch (const Error& e) {
    out.index.clear();
    out.weight.clear();
    out.ess = 0.0;
    out.failure = e.what();
  }
  return out;
}

/// Weights every unit independently; output slot i belongs to units[i]
/// whatever the worker count.
inline std::vector<UnitWeights> weight_all(std::span<const PooledUnit> units, const SimulationBank& bank,
                                           const WeightingConfig& config, unsigned workers) {
  config.validate();
  std::vector<UnitWeights> out(units.size());
  parallel_for(units.size(), workers, [&](std::size_t i) { out[i] = weight_unit(units[i], bank, config); });
  return out;
}

}  // namespace lfmap::pipeline
