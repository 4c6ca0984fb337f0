#pragma once

#include <cmath>
#include <string>

#include "lfmap/error.hpp"

namespace lfmap::transfil {

enum class VectorSpecies { kAnopheles, kCulex };

/// How worm acquisition couples to larvae in the mosquito population.
enum class AcquisitionCoupling {
  /// Acquisition rate scaled by L* / l3_reference (vector feedback).
  kL3Scaled,
  /// Acquisition rate as the bare product of exposure constants.
  kPureRate,
};

/// Saturating larval-uptake curve parameters.
struct UptakeCurve {
  double kappa = 4.395;
  double r = 0.055;
};

/// Parameters fixed across the study area. Rates are per month.
struct ModelParams {
  double bites_per_mosquito = 10.0;          // lambda
  double exposure_saturation_years = 9.0;    // h(a) ramps linearly to 1 at this age
  double l3_leave_prob = 0.414;              // psi1
  double l3_enter_prob = 0.32;               // psi2
  double l3_develop_prob = 0.00275;          // s2
  double worm_death_rate = 0.0104;           // mu
  double mf_production_rate = 0.2;           // alpha
  double mf_death_rate = 0.1;                // gamma
  double mosquito_infection_prob = 0.37;     // g
  double mosquito_death_rate = 5.0;          // sigma
  double mda_mf_kill = 0.95;                 // chi1
  double mda_sterilisation = 0.55;           // kappa1
  double systematic_adherence = 0.35;        // rho
  double human_death_rate = 1.0 / (50.0 * 12.0);
  double max_age_months = 1200.0;

  VectorSpecies species = VectorSpecies::kAnopheles;
  UptakeCurve anopheles{4.395, 0.055};
  UptakeCurve culex{4.406, 0.116};

  AcquisitionCoupling coupling = AcquisitionCoupling::kL3Scaled;
  double l3_reference = 1.0;

  /// mf per 20 uL at or above which a host counts as mf-positive.
  double mf_detection_threshold = 1.0;
  /// Months after treatment during which mf production is multiplied by
  /// mda_production_factor.
  int mda_suppression_months = 6;
  double mda_production_factor = 0.0;

  /// Mean adult worms of each sex seeded per host (scaled by bite risk) at
  /// the start of burn-in. Zero starts from the disease-free state.
  double initial_worms_per_sex = 10.0;

  double burn_in_years = 100.0;
  double dt_months = 1.0;

  void validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    auto probability = [](double v) { return v >= 0.0 && v <= 1.0; };
    detail::require(positive(bites_per_mosquito), "lambda must be positive");
    detail::require(exposure_saturation_years >= 0.0, "exposure saturation age must be >= 0");
    detail::require(probability(l3_leave_prob) && probability(l3_enter_prob) && probability(l3_develop_prob),
                    "L3 proportions must lie in [0, 1]");
    detail::require(worm_death_rate >= 0.0, "worm death rate must be >= 0");
    detail::require(mf_production_rate >= 0.0 && std::isfinite(mf_production_rate), "mf production must be >= 0");
    detail::require(positive(mf_death_rate), "mf death rate must be positive");
    detail::require(probability(mosquito_infection_prob), "g must lie in [0, 1]");
    detail::require(positive(mosquito_death_rate), "mosquito death rate must be positive");
    detail::require(probability(mda_mf_kill) && probability(mda_sterilisation), "drug efficacies must lie in [0, 1]");
    detail::require(probability(systematic_adherence), "rho must lie in [0, 1]");
    detail::require(human_death_rate >= 0.0, "human death rate must be >= 0");
    detail::require(positive(max_age_months), "max age must be positive");
    detail::require(positive(anopheles.kappa) && positive(anopheles.r), "invalid Anopheles uptake curve");
    detail::require(positive(culex.kappa) && positive(culex.r), "invalid Culex uptake curve");
    detail::require(positive(l3_reference), "L3 reference must be positive");
    detail::require(mf_detection_threshold > 0.0, "mf detection threshold must be positive");
    detail::require(mda_suppression_months >= 0, "suppression window must be >= 0");
    detail::require(mda_production_factor >= 0.0 && mda_production_factor <= 1.0,
                    "post-MDA production factor must lie in [0, 1]");
    detail::require(initial_worms_per_sex >= 0.0 && std::isfinite(initial_worms_per_sex),
                    "initial worm burden must be finite and >= 0");
    detail::require(burn_in_years >= 0.0, "burn-in must be >= 0");
    detail::require(positive(dt_months), "time step must be positive");
  }
};

inline std::string to_string(VectorSpecies s) { return s == VectorSpecies::kAnopheles ? "anopheles" : "culex"; }

inline VectorSpecies parse_species(const std::string& s) {
  if (s == "anopheles") return VectorSpecies::kAnopheles;
  if (s == "culex") return VectorSpecies::kCulex;
  throw InvalidArgument("unknown vector species '" + s + "'");
}

}  // namespace lfmap::transfil
