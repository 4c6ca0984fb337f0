#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "lfmap/transfil/model.hpp"

using namespace lfmap;
using namespace lfmap::transfil;

namespace {

ParameterVector theta_of(int n, double vh, double k, double imp = 0.0) {
  ParameterVector t;
  t.population = n;
  t.vector_host_ratio = vh;
  t.aggregation_k = k;
  t.importation_rate = imp;
  return t;
}

void expect_sane(const PopulationState& s, std::size_t n) {
  ASSERT_EQ(s.individuals.size(), n);
  EXPECT_GE(s.larvae_mean, 0.0);
  for (const auto& ind : s.individuals) {
    EXPECT_GE(ind.male_worms, 0);
    EXPECT_GE(ind.female_worms, 0);
    EXPECT_GE(ind.sterile_female_worms, 0);
    EXPECT_GE(ind.mf_density, 0.0);
    EXPECT_GE(ind.age_months, 0.0);
  }
}

}  // namespace

TEST(Acquisition, TableConstants) {
  ModelParams p;
  Individual ind;
  ind.age_months = 200.0;  // past the exposure plateau
  const auto theta = theta_of(100, 10.0, 1.0);
  const double expected = 0.5 * 10.0 * 1.0 * 10.0 * 0.414 * 0.32 * 0.00275;
  EXPECT_NEAR(acquisition_rate(ind, p, theta), expected, 1e-15);
  EXPECT_NEAR(expected, 0.0182, 5e-5);
  EXPECT_NEAR(acquisition_rate(ind, p, theta_of(100, 20.0, 1.0)), 2.0 * expected, 1e-15);
  ind.bite_risk = 0.0;
  EXPECT_EQ(acquisition_rate(ind, p, theta), 0.0);
}

TEST(Exposure, RampsToOneAtSaturationAge) {
  ModelParams p;
  EXPECT_EQ(exposure(0.0, p), 0.0);
  EXPECT_NEAR(exposure(54.0, p), 0.5, 1e-15);
  EXPECT_EQ(exposure(108.0, p), 1.0);
  EXPECT_EQ(exposure(600.0, p), 1.0);
}

TEST(Uptake, LimitsAndShapes) {
  ModelParams p;
  EXPECT_EQ(larvae_uptake(0.0, VectorSpecies::kAnopheles, p), 0.0);
  EXPECT_EQ(larvae_uptake(0.0, VectorSpecies::kCulex, p), 0.0);
  EXPECT_NEAR(larvae_uptake(1e6, VectorSpecies::kAnopheles, p), p.anopheles.kappa, 1e-9);
  // Facilitation: L(m)/m -> 0; limitation: L(m)/m -> r.
  EXPECT_LT(larvae_uptake(1e-6, VectorSpecies::kAnopheles, p) / 1e-6, 1e-6);
  EXPECT_NEAR(larvae_uptake(1e-9, VectorSpecies::kCulex, p) / 1e-9, p.culex.r, 1e-6);
  // With matched constants the facilitation curve sits below the limitation curve.
  ModelParams matched = p;
  matched.culex = matched.anopheles;
  for (double m : {0.1, 1.0, 10.0}) {
    EXPECT_LE(larvae_uptake(m, VectorSpecies::kAnopheles, matched), larvae_uptake(m, VectorSpecies::kCulex, matched));
  }
}

TEST(Uptake, PopulationMeanIsBiteWeighted) {
  ModelParams p;
  PopulationState s;
  s.individuals.resize(2);
  EXPECT_EQ(population_uptake(s, p), 0.0);
  s.individuals[0].bite_risk = 1.0;
  s.individuals[1].bite_risk = 3.0;
  // Choose densities so the uptake values are 0.1 and 0.5.
  auto invert = [&](double target) {
    double lo = 0.0, hi = 1e4;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (larvae_uptake(mid, VectorSpecies::kAnopheles, p) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  s.individuals[0].mf_density = invert(0.1);
  s.individuals[1].mf_density = invert(0.5);
  EXPECT_NEAR(population_uptake(s, p), 0.4, 1e-12);
  s.individuals.resize(1);
  EXPECT_NEAR(population_uptake(s, p), 0.1, 1e-12);
}

TEST(EquilibriumL3, Arithmetic) {
  ModelParams p;
  EXPECT_EQ(equilibrium_l3(0.0, p), 0.0);
  const double one = 10.0 * 0.37 / (5.0 + 10.0 * 0.414);
  EXPECT_NEAR(equilibrium_l3(1.0, p), one, 1e-12);
  EXPECT_NEAR(equilibrium_l3(2.5, p), 2.5 * one, 1e-12);
}

TEST(BiteRisk, GammaMoments) {
  Engine rng(7);
  for (double k : {0.5, 1.0, 3.0}) {
    double s = 0.0, ss = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double b = draw_bite_risk(k, rng);
      s += b;
      ss += b * b;
    }
    const double mean = s / n;
    const double var = ss / n - mean * mean;
    EXPECT_NEAR(mean, 1.0, 0.01) << "k=" << k;
    EXPECT_NEAR(var * k, 1.0, 0.05) << "k=" << k;
  }
}

TEST(Step, MfDecaysExactlyWithoutProduction) {
  ModelParams p;
  p.mf_production_rate = 0.0;
  auto theta = theta_of(50, 0.0, 1.0);
  Engine rng(1);
  auto s = initial_population(theta, p, rng);
  for (std::size_t i = 0; i < s.individuals.size(); ++i) s.individuals[i].mf_density = 3.0 + i;
  for (int t = 0; t < 24; ++t) {
    std::vector<double> before;
    for (const auto& ind : s.individuals) before.push_back(ind.mf_density);
    // Replacement by newborns resets mf; only compare survivors.
    std::vector<double> ages;
    for (const auto& ind : s.individuals) ages.push_back(ind.age_months);
    step(s, 1.0, p, theta, rng);
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (s.individuals[i].age_months != ages[i] + 1.0) continue;
      EXPECT_NEAR(s.individuals[i].mf_density, before[i] * std::exp(-0.1), 1e-12);
    }
  }
}

TEST(Step, InfiniteWormDeathClearsAllWorms) {
  ModelParams p;
  p.worm_death_rate = std::numeric_limits<double>::infinity();
  auto theta = theta_of(100, 0.0, 1.0);
  Engine rng(2);
  auto s = initial_population(theta, p, rng);
  step(s, 1.0, p, theta, rng);
  for (const auto& ind : s.individuals) EXPECT_EQ(ind.total_worms(), 0);
}

TEST(Step, DiseaseFreeStateIsAbsorbing) {
  ModelParams p;
  p.initial_worms_per_sex = 0.0;
  auto theta = theta_of(300, 1000.0, 1.0, 0.0);
  Engine rng(3);
  auto s = initial_population(theta, p, rng);
  for (int t = 0; t < 240; ++t) step(s, 1.0, p, theta, rng);
  for (const auto& ind : s.individuals) {
    EXPECT_EQ(ind.total_worms(), 0);
    EXPECT_EQ(ind.mf_density, 0.0);
  }
  EXPECT_EQ(mf_prevalence(s, p), 0.0);
  EXPECT_EQ(s.larvae_mean, 0.0);
}

TEST(Step, ConservesPopulationAndStaysNonNegative) {
  ModelParams p;
  auto theta = theta_of(400, 300.0, 0.3, 0.0005);
  Engine rng(4);
  auto s = initial_population(theta, p, rng);
  expect_sane(s, 400);
  for (int t = 0; t < 120; ++t) {
    if (t % 12 == 0) apply_mda(s, 0.7, p, rng);
    step(s, 1.0, p, theta, rng);
    if (t % 20 == 0) expect_sane(s, 400);
  }
  expect_sane(s, 400);
  EXPECT_DOUBLE_EQ(s.time_months, 120.0);
}

TEST(Mda, ZeroCoverageLeavesStateUnchanged) {
  ModelParams p;
  auto theta = theta_of(200, 300.0, 0.3, 0.0005);
  Engine rng(5);
  auto s = initial_population(theta, p, rng);
  for (int t = 0; t < 60; ++t) step(s, 1.0, p, theta, rng);
  const auto before = s;
  apply_mda(s, 0.0, p, rng);
  ASSERT_EQ(s.individuals.size(), before.individuals.size());
  for (std::size_t i = 0; i < s.individuals.size(); ++i) {
    EXPECT_EQ(s.individuals[i].mf_density, before.individuals[i].mf_density);
    EXPECT_EQ(s.individuals[i].female_worms, before.individuals[i].female_worms);
    EXPECT_EQ(s.individuals[i].treated_last_round, before.individuals[i].treated_last_round);
  }
}

TEST(Mda, TotalEfficacyClearsMfAndSterilisesEveryFemale) {
  ModelParams p;
  auto theta = theta_of(300, 300.0, 0.3, 0.0005);
  Engine rng(6);
  auto s = initial_population(theta, p, rng);
  for (int t = 0; t < 60; ++t) step(s, 1.0, p, theta, rng);
  int females = 0;
  for (const auto& ind : s.individuals) females += ind.female_worms + ind.sterile_female_worms;
  ASSERT_GT(females, 0);
  apply_mda(s, MdaRound{0, 1.0, 1.0, 1.0}, p, rng);
  int sterile = 0;
  for (const auto& ind : s.individuals) {
    EXPECT_EQ(ind.mf_density, 0.0);
    EXPECT_EQ(ind.female_worms, 0);
    EXPECT_TRUE(ind.treated_last_round);
    sterile += ind.sterile_female_worms;
  }
  EXPECT_EQ(sterile, females);
}

TEST(Mda, CompliancePreservesCoverageWithPersistence) {
  ModelParams p;
  p.systematic_adherence = 0.35;
  PopulationState s;
  s.individuals.resize(10000);
  Engine rng(8);
  const double coverage = 0.65;
  std::vector<bool> previous;
  double joint = 0.0;
  int pairs = 0;
  for (int round = 0; round < 10; ++round) {
    apply_mda(s, MdaRound{0, coverage, 0.0, 0.0}, p, rng);
    int treated = 0;
    for (const auto& ind : s.individuals) treated += ind.treated_last_round ? 1 : 0;
    EXPECT_NEAR(treated / 10000.0, coverage, 0.01) << "round " << round;
    if (!previous.empty()) {
      for (std::size_t i = 0; i < previous.size(); ++i) joint += (previous[i] && s.individuals[i].treated_last_round);
      ++pairs;
    }
    previous.clear();
    for (const auto& ind : s.individuals) previous.push_back(ind.treated_last_round);
  }
  // Positive correlation: P(treated twice) exceeds coverage^2.
  const double both = joint / (pairs * 10000.0);
  EXPECT_GT(both - coverage * coverage, 0.02);
}

TEST(Mda, ComplianceProbabilitiesKeepTheMarginal) {
  for (double c : {0.3, 0.65, 0.8}) {
    for (double rho : {0.0, 0.35, 0.9}) {
      const auto [t, u] = compliance_probabilities(c, c, rho);
      EXPECT_NEAR(c * t + (1 - c) * u, c, 1e-12);
      EXPECT_GE(t, u);
    }
  }
  EXPECT_EQ(compliance_probabilities(1.0, 0.3, 0.35), std::make_pair(1.0, 1.0));
}

TEST(Equilibrium, DeterministicAndEndemicAtHighTransmission) {
  ModelParams p;
  p.burn_in_years = 40;
  const auto theta = theta_of(300, 800.0, 1.0, 0.0002);
  const auto a = run_to_equilibrium(theta, p, 17);
  const auto b = run_to_equilibrium(theta, p, 17);
  EXPECT_EQ(a.prevalence, b.prevalence);
  EXPECT_GT(a.prevalence, 0.7);
  const auto c = run_to_equilibrium(theta, p, 18);
  EXPECT_NE(a.prevalence, c.prevalence);
}

TEST(Equilibrium, NoImportationFromDiseaseFreeStartStaysAtZero) {
  ModelParams p;
  p.burn_in_years = 20;
  p.initial_worms_per_sex = 0.0;
  EXPECT_EQ(run_to_equilibrium(theta_of(200, 800.0, 1.0, 0.0), p, 1).prevalence, 0.0);
}

TEST(Scenario, PerfectMdaWithoutImportationDrivesPrevalenceDown) {
  ModelParams p;
  p.burn_in_years = 40;
  const auto theta = theta_of(300, 600.0, 1.0, 0.0);
  const auto eq = run_to_equilibrium(theta, p, 21);
  ASSERT_GT(eq.prevalence, 0.3);
  Scenario s = Scenario::periodic("perfect", MdaFrequency::kAnnual, 1.0, 1, 2);
  s.rounds[0].mf_kill = 1.0;
  s.rounds[0].sterilisation = 1.0;
  const auto traj = run_scenario(eq.state, s, p, theta, 21);
  ASSERT_EQ(traj.size(), 3U);
  EXPECT_LT(traj[1], traj[0]);
  EXPECT_LE(traj[2], traj[1]);
}

TEST(Scenario, MatchedBiannualBeatsAnnual) {
  ModelParams p;
  p.burn_in_years = 40;
  const auto theta = theta_of(400, 200.0, 0.3, 0.0002);
  double annual = 0.0, biannual = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto eq = run_to_equilibrium(theta, p, seed);
    annual += run_scenario(eq.state, Scenario::periodic("a", MdaFrequency::kAnnual, 0.65, 5, 5), p, theta, seed)[5];
    biannual +=
        run_scenario(eq.state, Scenario::periodic("b", MdaFrequency::kBiannual, 0.65, 5, 5), p, theta, seed)[5];
  }
  EXPECT_LT(biannual, annual);
}

TEST(Scenario, Validation) {
  EXPECT_THROW(Scenario::periodic("", MdaFrequency::kNone, 0.0, 0, 5), InvalidArgument);
  EXPECT_THROW(Scenario::periodic("x", MdaFrequency::kAnnual, 1.5, 5, 5), InvalidArgument);
  const auto s = Scenario::periodic("b", MdaFrequency::kBiannual, 0.65, 5, 5);
  EXPECT_EQ(s.rounds.size(), 10U);
  EXPECT_EQ(s.rounds[1].month, 6);
  EXPECT_EQ(default_scenarios().size(), 4U);
}

TEST(Importation, MultipliersFollowMeanDecline) {
  std::vector<std::vector<double>> pilot{{0.4, 0.2, 0.1}, {0.2, 0.1, 0.3}};
  const auto m = importation_multipliers(pilot);
  ASSERT_EQ(m.size(), 2U);
  EXPECT_DOUBLE_EQ(m[0], 1.0);
  EXPECT_DOUBLE_EQ(m[1], 0.5);
  ImportationSchedule sched;
  sched.set("x", m);
  EXPECT_EQ(sched.multiplier("x", 1), 0.5);
  EXPECT_EQ(sched.multiplier("x", 7), 1.0);
  EXPECT_EQ(sched.multiplier("y", 0), 1.0);
}

TEST(ModelParams, ValidationRejectsNonsense) {
  ModelParams p;
  EXPECT_NO_THROW(p.validate());
  p.mda_mf_kill = 1.5;
  EXPECT_THROW(p.validate(), InvalidArgument);
  EXPECT_EQ(parse_species(to_string(VectorSpecies::kCulex)), VectorSpecies::kCulex);
}
