#pragma once

// Stochastic individual-based lymphatic filariasis transmission model.
//
// Each host carries male, fertile female and sterilised female adult worms,
// an mf density per 20 uL, a gamma-distributed bite risk and a compliance
// history. Larvae in the mosquito population are held at quasi-equilibrium
// every step. Time advances in fixed steps with Poisson worm acquisition,
// binomial worm death, exact exponential mf integration and constant-hazard
// human death with an age cut-off; every death is replaced by a newborn.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "lfmap/error.hpp"
#include "lfmap/proposal.hpp"
#include "lfmap/rng.hpp"
#include "lfmap/transfil/params.hpp"
#include "lfmap/transfil/scenario.hpp"

namespace lfmap::transfil {

struct Individual {
  double age_months = 0.0;
  double bite_risk = 1.0;
  int male_worms = 0;
  int female_worms = 0;
  int sterile_female_worms = 0;
  double mf_density = 0.0;
  bool treated_last_round = false;
  bool offered_mda = false;
  int suppression_months_left = 0;

  int total_worms() const noexcept { return male_worms + female_worms + sterile_female_worms; }
};

/// Host population plus the mosquito larval state.
struct PopulationState {
  std::vector<Individual> individuals;
  /// Quasi-equilibrium L3 per mosquito from the most recent step.
  double larvae_mean = 0.0;
  double time_months = 0.0;
  /// Target coverage of the previous MDA round, used by the compliance model.
  double last_coverage = 0.0;
};

/// Exposure multiplier h(a): linear from 0 at birth to 1 at the saturation age.
inline double exposure(double age_months, const ModelParams& p) {
  const double saturation = p.exposure_saturation_years * 12.0;
  if (saturation <= 0.0) return 1.0;
  return std::min(1.0, age_months / saturation);
}

/// Rate (per month, per sex) of acquiring adult worms before larval coupling:
/// 0.5 * lambda * b * (V/H) * psi1 * psi2 * s2 * h(a).
inline double acquisition_rate(const Individual& ind, const ModelParams& p, const ParameterVector& theta) {
  return 0.5 * p.bites_per_mosquito * ind.bite_risk * theta.vector_host_ratio * p.l3_leave_prob *
         p.l3_enter_prob * p.l3_develop_prob * exposure(ind.age_months, p);
}

/// Larvae developing in a mosquito after a blood meal with mf density m.
inline double larvae_uptake(double m, VectorSpecies species, const ModelParams& p) {
  detail::require(m >= 0.0, "mf density must be non-negative");
  if (species == VectorSpecies::kAnopheles) {
    const double s = 1.0 - std::exp(-p.anopheles.r * m / p.anopheles.kappa);
    return p.anopheles.kappa * s * s;
  }
  return p.culex.kappa * (1.0 - std::exp(-p.culex.r * m / p.culex.kappa));
}

/// Bite-risk weighted mean uptake over the population.
inline double population_uptake(const PopulationState& state, const ModelParams& p) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& ind : state.individuals) {
    den += ind.bite_risk;
    if (ind.mf_density > 0.0) {
      num += larvae_uptake(ind.mf_density, p.species, p) * ind.bite_risk;
    }
  }
  return den > 0.0 ? num / den : 0.0;
}

/// Equilibrium L3 per mosquito: lambda g L / (sigma + lambda psi1).
inline double equilibrium_l3(double mean_uptake, const ModelParams& p) {
  return p.bites_per_mosquito * p.mosquito_infection_prob * mean_uptake /
         (p.mosquito_death_rate + p.bites_per_mosquito * p.l3_leave_prob);
}

/// Fraction of hosts whose mf density reaches the detection threshold.
inline double mf_prevalence(const PopulationState& state, const ModelParams& p) {
  if (state.individuals.empty()) return 0.0;
  std::size_t positive = 0;
  for (const auto& ind : state.individuals) {
    positive += ind.mf_density >= p.mf_detection_threshold ? 1U : 0U;
  }
  return static_cast<double>(positive) / static_cast<double>(state.individuals.size());
}

template <class Rng>
double draw_bite_risk(double k, Rng& rng) {
  std::gamma_distribution<double> gamma(k, 1.0 / k);
  return gamma(rng);
}

template <class Rng>
Individual newborn(const ParameterVector& theta, Rng& rng) {
  Individual ind;
  ind.bite_risk = draw_bite_risk(theta.aggregation_k, rng);
  return ind;
}

/// Population with ages from the stationary truncated exponential
/// distribution. Each host starts with Poisson(initial_worms_per_sex * b_i)
/// worms of each sex; mf start at zero.
template <class Rng>
PopulationState initial_population(const ParameterVector& theta, const ModelParams& p, Rng& rng) {
  theta.validate();
  PopulationState state;
  state.individuals.resize(static_cast<std::size_t>(theta.population));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double tau = p.human_death_rate;
  for (auto& ind : state.individuals) {
    ind = newborn(theta, rng);
    if (tau > 0.0) {
      const double tail = 1.0 - std::exp(-tau * p.max_age_months);
      ind.age_months = -std::log1p(-u(rng) * tail) / tau;
    } else {
      ind.age_months = u(rng) * p.max_age_months;
    }
    ind.age_months = std::min(ind.age_months, std::nextafter(p.max_age_months, 0.0));
    if (p.initial_worms_per_sex > 0.0) {
      const double mean = p.initial_worms_per_sex * ind.bite_risk * exposure(ind.age_months, p);
      ind.male_worms = static_cast<int>(poisson(rng, mean));
      ind.female_worms = static_cast<int>(poisson(rng, mean));
    }
  }
  return state;
}

/// Advances the population by `dt` months.
///
/// `importation_multiplier` scales the per-host importation rate (used to
/// reduce importation as interventions lower prevalence).
template <class Rng>
void step(PopulationState& state, double dt, const ModelParams& p, const ParameterVector& theta, Rng& rng,
          double importation_multiplier = 1.0) {
  detail::require(dt > 0.0, "time step must be positive");
  auto& people = state.individuals;
  const std::size_t n = people.size();
  if (n == 0) return;

  state.larvae_mean = equilibrium_l3(population_uptake(state, p), p);
  double availability = 1.0;
  if (p.coupling == AcquisitionCoupling::kL3Scaled) {
    availability = state.larvae_mean / p.l3_reference;
  }
  const double base_rate = 0.5 * p.bites_per_mosquito * theta.vector_host_ratio * p.l3_leave_prob *
                           p.l3_enter_prob * p.l3_develop_prob * availability;

  // mf: dM/dt = alpha * F * 1{male > 0} - gamma * M, integrated exactly with
  // the worm burden held at its start-of-step value.
  const double decay = std::exp(-p.mf_death_rate * dt);
  const double kill_prob = std::isinf(p.worm_death_rate) ? 1.0 : -std::expm1(-p.worm_death_rate * dt);
  for (auto& ind : people) {
    double production = 0.0;
    if (ind.male_worms > 0 && ind.female_worms > 0) {
      production = p.mf_production_rate * ind.female_worms;
      if (ind.suppression_months_left > 0) production *= p.mda_production_factor;
    }
    ind.mf_density = ind.mf_density * decay + (production / p.mf_death_rate) * (1.0 - decay);
    if (ind.suppression_months_left > 0) {
      ind.suppression_months_left = std::max(0, ind.suppression_months_left - static_cast<int>(std::ceil(dt)));
    }
    if (ind.total_worms() > 0) {
      ind.male_worms -= binomial(rng, ind.male_worms, kill_prob);
      ind.female_worms -= binomial(rng, ind.female_worms, kill_prob);
      ind.sterile_female_worms -= binomial(rng, ind.sterile_female_worms, kill_prob);
    }
  }

  // Worm acquisition: one Poisson count per host for both sexes together,
  // split by fair coin flips (the two processes have equal rates).
  if (base_rate > 0.0) {
    const double scale = 2.0 * base_rate * dt;
    for (auto& ind : people) {
      const double mean = scale * ind.bite_risk * exposure(ind.age_months, p);
      long acquired = poisson(rng, mean);
      while (acquired > 0) {
        const int batch = static_cast<int>(std::min<long>(acquired, 64));
        const std::uint64_t bits = rng();
        const int females = batch == 64 ? std::popcount(bits)
                                        : std::popcount(bits & ((std::uint64_t{1} << batch) - 1U));
        ind.female_worms += females;
        ind.male_worms += batch - females;
        acquired -= batch;
      }
    }
  }

  // Importation: one adult worm of random sex into a uniformly chosen host.
  const double imported_mean = theta.importation_rate * importation_multiplier * static_cast<double>(n) * dt;
  if (imported_mean > 0.0) {
    const long imported = poisson(rng, imported_mean);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (long w = 0; w < imported; ++w) {
      auto& ind = people[pick(rng)];
      if (u(rng) < 0.5) {
        ++ind.female_worms;
      } else {
        ++ind.male_worms;
      }
    }
  }

  // Demography: age, hard cut-off, then constant-hazard deaths. Every death
  // is replaced by an uninfected newborn.
  for (auto& ind : people) {
    ind.age_months += dt;
    if (ind.age_months >= p.max_age_months) {
      ind = newborn(theta, rng);
    }
  }
  const double death_prob = -std::expm1(-p.human_death_rate * dt);
  if (death_prob > 0.0) {
    std::geometric_distribution<std::size_t> gap(death_prob);
    for (std::size_t i = gap(rng); i < n; i += gap(rng) + 1) {
      people[i] = newborn(theta, rng);
    }
  }
  state.time_months += dt;
}

/// Treatment probabilities (given treated / not treated last round) that
/// keep the marginal coverage at `coverage` when last round's coverage was
/// `previous`, with persistence `rho`.
inline std::pair<double, double> compliance_probabilities(double coverage, double previous, double rho) {
  if (coverage <= 0.0) return {0.0, 0.0};
  if (coverage >= 1.0) return {1.0, 1.0};
  const double after_treated = std::clamp(coverage + rho * (1.0 - previous), 0.0, 1.0);
  const double after_untreated = std::clamp(coverage - rho * previous, 0.0, 1.0);
  return {after_treated, after_untreated};
}

/// One MDA round. Hosts never offered treatment before are treated with
/// probability `coverage`; others follow the two-state compliance chain.
/// Treated hosts lose a fraction `mf_kill` of mf, have each fertile female
/// worm sterilised with probability `sterilisation`, and enter the
/// post-treatment production suppression window.
template <class Rng>
void apply_mda(PopulationState& state, const MdaRound& round, const ModelParams& p, Rng& rng) {
  detail::require(round.coverage >= 0.0 && round.coverage <= 1.0, "coverage must lie in [0, 1]");
  if (round.coverage <= 0.0) {
    return;
  }
  const auto [after_treated, after_untreated] =
      compliance_probabilities(round.coverage, state.last_coverage, p.systematic_adherence);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& ind : state.individuals) {
    double prob = round.coverage;
    if (ind.offered_mda) {
      prob = ind.treated_last_round ? after_treated : after_untreated;
    }
    const bool treated = u(rng) < prob;
    ind.offered_mda = true;
    ind.treated_last_round = treated;
    if (!treated) continue;
    ind.mf_density *= 1.0 - round.mf_kill;
    const int sterilised = binomial(rng, ind.female_worms, round.sterilisation);
    ind.female_worms -= sterilised;
    ind.sterile_female_worms += sterilised;
    ind.suppression_months_left = p.mda_suppression_months;
  }
  state.last_coverage = round.coverage;
}

template <class Rng>
void apply_mda(PopulationState& state, double coverage, const ModelParams& p, Rng& rng) {
  apply_mda(state, MdaRound{0, coverage, p.mda_mf_kill, p.mda_sterilisation}, p, rng);
}

struct EquilibriumResult {
  double prevalence = 0.0;
  PopulationState state;
};

/// Runs a freshly seeded population forward for the burn-in period.
inline EquilibriumResult run_to_equilibrium(const ParameterVector& theta, const ModelParams& p,
                                            std::uint64_t seed) {
  p.validate();
  theta.validate();
  Engine rng{derive_seed(seed, 0, Stream::kEquilibrium)};
  EquilibriumResult out;
  out.state = initial_population(theta, p, rng);
  const long steps = std::lround(p.burn_in_years * 12.0 / p.dt_months);
  for (long s = 0; s < steps; ++s) {
    step(out.state, p.dt_months, p, theta, rng);
  }
  out.prevalence = mf_prevalence(out.state, p);
  return out;
}

/// Projects `scenario` from an equilibrium state. Entry 0 of the result is
/// the starting prevalence; entry y is the prevalence at the end of year y.
inline std::vector<double> run_scenario(PopulationState state, const Scenario& scenario, const ModelParams& p,
                                        const ParameterVector& theta, std::uint64_t seed,
                                        const ImportationSchedule& importation = {}) {
  scenario.validate();
  p.validate();
  Engine rng{derive_seed(seed, 0, Stream::kScenario)};
  std::vector<double> trajectory{mf_prevalence(state, p)};
  trajectory.reserve(static_cast<std::size_t>(scenario.horizon_years) + 1);
  std::size_t next_round = 0;
  for (int month = 0; month < 12 * scenario.horizon_years; ++month) {
    while (next_round < scenario.rounds.size() && scenario.rounds[next_round].month == month) {
      apply_mda(state, scenario.rounds[next_round], p, rng);
      ++next_round;
    }
    const int year = month / 12;
    step(state, 1.0, p, theta, rng, importation.multiplier(scenario.name, year));
    if ((month + 1) % 12 == 0) {
      trajectory.push_back(mf_prevalence(state, p));
    }
  }
  return trajectory;
}

/// Yearly importation multipliers from pilot trajectories run with constant
/// importation: mean prevalence in year y over mean baseline prevalence,
/// capped at one. Entry y applies during year y.
inline std::vector<double> importation_multipliers(std::span<const std::vector<double>> pilot) {
  detail::require(!pilot.empty(), "no pilot trajectories");
  const std::size_t years = pilot.front().size();
  detail::require(years >= 2, "pilot trajectories need at least one projected year");
  std::vector<double> mean(years, 0.0);
  for (const auto& t : pilot) {
    detail::require(t.size() == years, "pilot trajectories differ in length");
    for (std::size_t y = 0; y < years; ++y) mean[y] += t[y];
  }
  std::vector<double> out(years - 1, 1.0);
  if (mean[0] <= 0.0) return out;
  for (std::size_t y = 0; y + 1 < years; ++y) {
    // Importation during year y follows the reduction reached at its start.
    out[y] = std::min(1.0, mean[y] / mean[0]);
  }
  return out;
}

}  // namespace lfmap::transfil
