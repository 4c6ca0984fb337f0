#pragma once

// The shared simulation bank: parameter draws, their equilibrium prevalence,
// and one yearly prevalence trajectory per intervention scenario.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lfmap/error.hpp"
#include "lfmap/parallel.hpp"
#include "lfmap/proposal.hpp"
#include "lfmap/rng.hpp"
#include "lfmap/transfil/model.hpp"

namespace lfmap {

class SimulationBank {
 public:
  SimulationBank() = default;

  SimulationBank(std::vector<std::string> scenarios, int horizon_years)
      : scenarios_(std::move(scenarios)), horizon_years_(horizon_years) {
    detail::require(horizon_years_ >= 0, "horizon must be >= 0");
  }

  /// Preallocates `count` simulations, all zero.
  void resize(std::size_t count) {
    parameters_.assign(count, {});
    proposal_pmf_.assign(count, 0.0);
    equilibrium_.assign(count, 0.0);
    trajectories_.assign(count * scenarios_.size() * points(), 0.0);
  }

  std::size_t size() const noexcept { return parameters_.size(); }
  const std::vector<std::string>& scenarios() const noexcept { return scenarios_; }
  int horizon_years() const noexcept { return horizon_years_; }
  /// Values per trajectory: the starting prevalence plus one per year.
  std::size_t points() const noexcept { return static_cast<std::size_t>(horizon_years_) + 1; }

  std::size_t scenario_index(const std::string& name) const {
    for (std::size_t s = 0; s < scenarios_.size(); ++s) {
      if (scenarios_[s] == name) return s;
    }
    throw InvalidArgument("scenario '" + name + "' is not in the bank");
  }

  ParameterVector& parameters(std::size_t j) { return parameters_.at(j); }
  const ParameterVector& parameters(std::size_t j) const { return parameters_.at(j); }
  const std::vector<ParameterVector>& all_parameters() const noexcept { return parameters_; }

  /// Population proposal probability of simulation j, for stage-1 weights.
  double& proposal_pmf(std::size_t j) { return proposal_pmf_.at(j); }
  double proposal_pmf(std::size_t j) const { return proposal_pmf_.at(j); }

  double& equilibrium(std::size_t j) { return equilibrium_.at(j); }
  double equilibrium(std::size_t j) const { return equilibrium_.at(j); }
  const std::vector<double>& equilibrium_column() const noexcept { return equilibrium_; }

  std::span<double> trajectory(std::size_t scenario, std::size_t j) {
    return {trajectories_.data() + offset(scenario, j), points()};
  }
  std::span<const double> trajectory(std::size_t scenario, std::size_t j) const {
    return {trajectories_.data() + offset(scenario, j), points()};
  }
  /// Prevalence of every simulation in `scenario` at `year`.
  std::vector<double> column(std::size_t scenario, std::size_t year) const {
    detail::require(year < points(), "year outside the horizon");
    std::vector<double> out(size());
    for (std::size_t j = 0; j < size(); ++j) out[j] = trajectory(scenario, j)[year];
    return out;
  }
  const std::vector<double>& raw_trajectories() const noexcept { return trajectories_; }
  std::vector<double>& raw_trajectories() noexcept { return trajectories_; }

  /// Appends the simulations of `other`, which must share scenarios and horizon.
  void append(const SimulationBank& other) {
    detail::require(other.scenarios_ == scenarios_ && other.horizon_years_ == horizon_years_,
                    "cannot append a bank with different scenarios");
    const std::size_t old = size();
    const std::size_t added = other.size();
    parameters_.insert(parameters_.end(), other.parameters_.begin(), other.parameters_.end());
    proposal_pmf_.insert(proposal_pmf_.end(), other.proposal_pmf_.begin(), other.proposal_pmf_.end());
    equilibrium_.insert(equilibrium_.end(), other.equilibrium_.begin(), other.equilibrium_.end());
    std::vector<double> merged((old + added) * scenarios_.size() * points());
    const std::size_t per = points();
    for (std::size_t s = 0; s < scenarios_.size(); ++s) {
      std::copy_n(trajectories_.begin() + static_cast<std::ptrdiff_t>(s * old * per), old * per,
                  merged.begin() + static_cast<std::ptrdiff_t>(s * (old + added) * per));
      std::copy_n(other.trajectories_.begin() + static_cast<std::ptrdiff_t>(s * added * per), added * per,
                  merged.begin() + static_cast<std::ptrdiff_t>((s * (old + added) + old) * per));
    }
    trajectories_ = std::move(merged);
  }

  friend bool operator==(const SimulationBank&, const SimulationBank&) = default;

 private:
  std::size_t offset(std::size_t scenario, std::size_t j) const {
    detail::require(scenario < scenarios_.size() && j < size(), "bank index out of range");
    return (scenario * size() + j) * points();
  }

  std::vector<std::string> scenarios_;
  int horizon_years_ = 0;
  std::vector<ParameterVector> parameters_;
  std::vector<double> proposal_pmf_;
  std::vector<double> equilibrium_;
  // [scenario][simulation][year]
  std::vector<double> trajectories_;
};

/// Seed of simulation j in a bank built from `master`.
inline std::uint64_t simulation_seed(std::uint64_t master, std::uint64_t j) {
  return derive_seed(master, j, Stream::kScenario);
}

/// Runs simulation `index` of the bank built from `seed` into `slot`. Every
/// scenario starts from the same equilibrium state and uses the same random
/// stream, so scenario contrasts are on matched seeds.
inline void simulate_into(SimulationBank& bank, std::size_t slot, std::uint64_t index,
                          const BankProposal& proposal, const transfil::ModelParams& params,
                          std::span<const transfil::Scenario> scenarios,
                          const transfil::ImportationSchedule& importation, std::uint64_t seed) {
  const ParameterVector theta = sample_parameter(proposal, seed, index);
  bank.parameters(slot) = theta;
  bank.proposal_pmf(slot) = proposal.population_pmf(theta.population);
  const std::uint64_t sim_seed = simulation_seed(seed, index);
  const auto eq = transfil::run_to_equilibrium(theta, params, sim_seed);
  bank.equilibrium(slot) = eq.prevalence;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const auto traj = transfil::run_scenario(eq.state, scenarios[s], params, theta, sim_seed, importation);
    auto out = bank.trajectory(s, slot);
    std::copy(traj.begin(), traj.end(), out.begin());
  }
}

inline std::vector<std::string> scenario_names(std::span<const transfil::Scenario> scenarios) {
  detail::require(!scenarios.empty(), "bank needs at least one scenario");
  std::vector<std::string> names;
  for (const auto& s : scenarios) {
    s.validate();
    detail::require(s.horizon_years == scenarios.front().horizon_years, "scenarios must share one horizon");
    names.push_back(s.name);
  }
  return names;
}

/// Builds simulations [first, first + count) of the bank seeded by `seed`, in
/// parallel. Output is independent of the worker count and of how the index
/// range is split into calls.
inline SimulationBank simulate_bank(const BankProposal& proposal, const transfil::ModelParams& params,
                                    std::span<const transfil::Scenario> scenarios, std::size_t count,
                                    std::uint64_t seed, unsigned workers,
                                    const transfil::ImportationSchedule& importation = {},
                                    std::uint64_t first = 0) {
  params.validate();
  SimulationBank bank(scenario_names(scenarios), scenarios.front().horizon_years);
  bank.resize(count);
  parallel_for(count, workers, [&](std::size_t j) {
    simulate_into(bank, j, first + j, proposal, params, scenarios, importation, seed);
  });
  return bank;
}

/// Pilot stage: runs `count` simulations with constant importation and turns
/// each scenario's mean prevalence decline into yearly importation
/// multipliers for the main bank.
inline transfil::ImportationSchedule pilot_importation_schedule(const BankProposal& proposal,
                                                                const transfil::ModelParams& params,
                                                                std::span<const transfil::Scenario> scenarios,
                                                                std::size_t count, std::uint64_t seed,
                                                                unsigned workers) {
  const SimulationBank pilot =
      simulate_bank(proposal, params, scenarios, count, derive_seed(seed, 0, Stream::kPilot), workers);
  transfil::ImportationSchedule schedule;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    std::vector<std::vector<double>> trajectories(pilot.size());
    for (std::size_t j = 0; j < pilot.size(); ++j) {
      const auto t = pilot.trajectory(s, j);
      trajectories[j].assign(t.begin(), t.end());
    }
    schedule.set(scenarios[s].name, transfil::importation_multipliers(trajectories));
  }
  return schedule;
}

}  // namespace lfmap
