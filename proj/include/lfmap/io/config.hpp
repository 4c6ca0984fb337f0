#pragma once

// Run configuration, read from JSON. Every field has a default, so "{}" is a
// valid configuration; unknown keys are rejected to catch typos.

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "lfmap/error.hpp"
#include "lfmap/io/csv.hpp"
#include "lfmap/pipeline/pixels.hpp"
#include "lfmap/pipeline/projection.hpp"
#include "lfmap/pipeline/weighting.hpp"
#include "lfmap/proposal.hpp"
#include "lfmap/transfil/params.hpp"
#include "lfmap/transfil/scenario.hpp"

namespace lfmap::io {

enum class Severity { kInfo = 0, kWarning = 1, kError = 2 };

inline std::string to_string(Severity s) {
  switch (s) {
    case Severity::kInfo:
      return "info";
    case Severity::kWarning:
      return "warning";
    case Severity::kError:
      return "error";
  }
  return "error";
}

inline Severity parse_severity(const std::string& s) {
  if (s == "info") return Severity::kInfo;
  if (s == "warning") return Severity::kWarning;
  if (s == "error") return Severity::kError;
  throw InvalidArgument("unknown severity '" + s + "'");
}

struct ScenarioSpec {
  std::string name;
  transfil::MdaFrequency frequency = transfil::MdaFrequency::kNone;
  double coverage = 0.0;
  int mda_years = 0;
};

struct BankSettings {
  std::uint64_t simulations = 1000;
  std::uint64_t shard_size = 1000;
  /// Pilot simulations with constant importation; 0 skips the pilot and
  /// keeps importation constant.
  std::uint64_t pilot_simulations = 200;
  AdaptiveProposalSpec population;
  /// Optional CSV (vector_host_ratio, aggregation_k, mass); empty uses the
  /// built-in grid.
  std::string vh_k_grid;
  double importation_max = 0.0005;
  transfil::ModelParams model;
};

struct ToySettings {
  std::uint64_t samples = 2000;
  std::uint64_t simulations = 2000;
  int replicates = 100;
  /// <= 0 selects the window width automatically.
  double delta = 0.0;
};

struct RunConfig {
  std::uint64_t seed = 20190101;
  unsigned workers = 0;
  BankSettings bank;
  int horizon_years = 5;
  std::vector<ScenarioSpec> scenarios{{"none", transfil::MdaFrequency::kNone, 0.0, 0},
                                      {"aMDA65", transfil::MdaFrequency::kAnnual, 0.65, 5},
                                      {"aMDA80", transfil::MdaFrequency::kAnnual, 0.80, 5},
                                      {"bMDA65", transfil::MdaFrequency::kBiannual, 0.65, 5}};
  pipeline::WeightingConfig weighting;
  pipeline::PoolingConfig pooling;
  pipeline::ProjectionConfig projection;
  ToySettings toy;
  Severity fail_severity = Severity::kError;

  std::vector<transfil::Scenario> build_scenarios() const {
    std::vector<transfil::Scenario> out;
    std::set<std::string> names;
    for (const auto& s : scenarios) {
      lfmap::detail::require(names.insert(s.name).second, "duplicate scenario name '" + s.name + "'");
      out.push_back(transfil::Scenario::periodic(s.name, s.frequency, s.coverage, s.mda_years, horizon_years,
                                                 bank.model));
    }
    return out;
  }

  void validate() const {
    lfmap::detail::require(bank.simulations >= 1, "bank.simulations must be >= 1");
    lfmap::detail::require(bank.shard_size >= 1, "bank.shard_size must be >= 1");
    lfmap::detail::require(bank.importation_max >= 0.0, "bank.importation_max must be >= 0");
    lfmap::detail::require(horizon_years >= 1, "horizon_years must be >= 1");
    lfmap::detail::require(!scenarios.empty(), "at least one scenario is required");
    lfmap::detail::require(toy.samples >= 1 && toy.simulations >= 3 && toy.replicates >= 1, "invalid toy settings");
    bank.population.validate();
    bank.model.validate();
    weighting.validate();
    pooling.validate();
    projection.validate();
    if (!bank.vh_k_grid.empty()) {
      lfmap::detail::require(std::filesystem::exists(bank.vh_k_grid), "V/H-k grid file '" + bank.vh_k_grid + "' not found");
    }
    (void)build_scenarios();
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw InvalidArgument(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || item.key() == k;
    if (!known) throw InvalidArgument("unknown key '" + item.key() + "' in " + where);
  }
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline nlohmann::json model_to_json(const transfil::ModelParams& p) {
  return {{"bites_per_mosquito", p.bites_per_mosquito},
          {"exposure_saturation_years", p.exposure_saturation_years},
          {"l3_leave_prob", p.l3_leave_prob},
          {"l3_enter_prob", p.l3_enter_prob},
          {"l3_develop_prob", p.l3_develop_prob},
          {"worm_death_rate", p.worm_death_rate},
          {"mf_production_rate", p.mf_production_rate},
          {"mf_death_rate", p.mf_death_rate},
          {"mosquito_infection_prob", p.mosquito_infection_prob},
          {"mosquito_death_rate", p.mosquito_death_rate},
          {"mda_mf_kill", p.mda_mf_kill},
          {"mda_sterilisation", p.mda_sterilisation},
          {"systematic_adherence", p.systematic_adherence},
          {"human_death_rate", p.human_death_rate},
          {"max_age_months", p.max_age_months},
          {"species", transfil::to_string(p.species)},
          {"anopheles_kappa", p.anopheles.kappa},
          {"anopheles_r", p.anopheles.r},
          {"culex_kappa", p.culex.kappa},
          {"culex_r", p.culex.r},
          {"coupling", p.coupling == transfil::AcquisitionCoupling::kL3Scaled ? "l3_scaled" : "pure_rate"},
          {"l3_reference", p.l3_reference},
          {"mf_detection_threshold", p.mf_detection_threshold},
          {"mda_suppression_months", p.mda_suppression_months},
          {"mda_production_factor", p.mda_production_factor},
          {"initial_worms_per_sex", p.initial_worms_per_sex},
          {"burn_in_years", p.burn_in_years},
          {"dt_months", p.dt_months}};
}

inline transfil::ModelParams model_from_json(const nlohmann::json& j) {
  transfil::ModelParams p;
  const nlohmann::json defaults = model_to_json(p);
  if (!j.is_object()) throw InvalidArgument("bank.model must be a JSON object");
  for (const auto& item : j.items()) {
    if (!defaults.contains(item.key())) throw InvalidArgument("unknown key '" + item.key() + "' in bank.model");
  }
  detail::read(j, "bites_per_mosquito", p.bites_per_mosquito);
  detail::read(j, "exposure_saturation_years", p.exposure_saturation_years);
  detail::read(j, "l3_leave_prob", p.l3_leave_prob);
  detail::read(j, "l3_enter_prob", p.l3_enter_prob);
  detail::read(j, "l3_develop_prob", p.l3_develop_prob);
  detail::read(j, "worm_death_rate", p.worm_death_rate);
  detail::read(j, "mf_production_rate", p.mf_production_rate);
  detail::read(j, "mf_death_rate", p.mf_death_rate);
  detail::read(j, "mosquito_infection_prob", p.mosquito_infection_prob);
  detail::read(j, "mosquito_death_rate", p.mosquito_death_rate);
  detail::read(j, "mda_mf_kill", p.mda_mf_kill);
  detail::read(j, "mda_sterilisation", p.mda_sterilisation);
  detail::read(j, "systematic_adherence", p.systematic_adherence);
  detail::read(j, "human_death_rate", p.human_death_rate);
  detail::read(j, "max_age_months", p.max_age_months);
  if (j.contains("species")) p.species = transfil::parse_species(j.at("species").get<std::string>());
  detail::read(j, "anopheles_kappa", p.anopheles.kappa);
  detail::read(j, "anopheles_r", p.anopheles.r);
  detail::read(j, "culex_kappa", p.culex.kappa);
  detail::read(j, "culex_r", p.culex.r);
  if (j.contains("coupling")) {
    const auto c = j.at("coupling").get<std::string>();
    if (c == "l3_scaled") {
      p.coupling = transfil::AcquisitionCoupling::kL3Scaled;
    } else if (c == "pure_rate") {
      p.coupling = transfil::AcquisitionCoupling::kPureRate;
    } else {
      throw InvalidArgument("unknown coupling '" + c + "'");
    }
  }
  detail::read(j, "l3_reference", p.l3_reference);
  detail::read(j, "mf_detection_threshold", p.mf_detection_threshold);
  detail::read(j, "mda_suppression_months", p.mda_suppression_months);
  detail::read(j, "mda_production_factor", p.mda_production_factor);
  detail::read(j, "initial_worms_per_sex", p.initial_worms_per_sex);
  detail::read(j, "burn_in_years", p.burn_in_years);
  detail::read(j, "dt_months", p.dt_months);
  return p;
}

inline std::string continuity_name(ContinuityMode m) { return m == ContinuityMode::kDrop ? "drop" : "tail_transfer"; }

/// Serialises every setting, including defaults, so a manifest alone
/// reproduces the run.
inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json scenarios = nlohmann::json::array();
  for (const auto& s : c.scenarios) {
    scenarios.push_back({{"name", s.name},
                         {"frequency", transfil::to_string(s.frequency)},
                         {"coverage", s.coverage},
                         {"mda_years", s.mda_years}});
  }
  const auto& pop = c.bank.population;
  const auto& w = c.weighting;
  return {
      {"seed", c.seed},
      {"bank",
       {{"simulations", c.bank.simulations},
        {"shard_size", c.bank.shard_size},
        {"pilot_simulations", c.bank.pilot_simulations},
        {"population",
         {{"support_min", pop.support_min},
          {"support_max", pop.support_max},
          {"tail_end", pop.tail_end},
          {"reference_populations", pop.reference_populations},
          {"log_sd", pop.log_sd},
          {"iterations", pop.iterations},
          {"evaluation_points", pop.evaluation_points}}},
        {"vh_k_grid", c.bank.vh_k_grid},
        {"importation_max", c.bank.importation_max},
        {"model", model_to_json(c.bank.model)}}},
      {"horizon_years", c.horizon_years},
      {"scenarios", scenarios},
      {"weighting",
       {{"ernd", lfmap::to_string(w.ernd.kind)},
        {"delta", w.ernd.delta},
        {"bins", w.ernd.bin_edges.size() - 1},
        {"continuity", continuity_name(w.ernd.continuity)},
        {"tail_start", w.ernd.tail_start},
        {"population_log_sd", w.population_log_sd},
        {"ess_floor", w.ess_floor},
        {"sparse_cutoff", w.sparse_cutoff}}},
      {"pooling", {{"min_population", c.pooling.min_population}, {"max_population", c.pooling.max_population}}},
      {"projection",
       {{"elimination_threshold", c.projection.elimination_threshold},
        {"probability_thresholds", c.projection.probability_thresholds}}},
      {"toy",
       {{"samples", c.toy.samples},
        {"simulations", c.toy.simulations},
        {"replicates", c.toy.replicates},
        {"delta", c.toy.delta}}},
      {"fail_severity", to_string(c.fail_severity)},
  };
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    detail::reject_unknown(j,
                           {"seed", "workers", "bank", "horizon_years", "scenarios", "weighting", "pooling",
                            "projection", "toy", "fail_severity"},
                           "config");
    detail::read(j, "seed", c.seed);
    detail::read(j, "workers", c.workers);
    detail::read(j, "horizon_years", c.horizon_years);
    if (j.contains("fail_severity")) c.fail_severity = parse_severity(j.at("fail_severity").get<std::string>());
    if (j.contains("bank")) {
      const auto& b = j.at("bank");
      detail::reject_unknown(
          b, {"simulations", "shard_size", "pilot_simulations", "population", "vh_k_grid", "importation_max", "model"},
          "bank");
      detail::read(b, "simulations", c.bank.simulations);
      detail::read(b, "shard_size", c.bank.shard_size);
      detail::read(b, "pilot_simulations", c.bank.pilot_simulations);
      detail::read(b, "vh_k_grid", c.bank.vh_k_grid);
      detail::read(b, "importation_max", c.bank.importation_max);
      if (b.contains("population")) {
        const auto& p = b.at("population");
        detail::reject_unknown(p,
                               {"support_min", "support_max", "tail_end", "reference_populations", "log_sd",
                                "iterations", "evaluation_points"},
                               "bank.population");
        auto& s = c.bank.population;
        detail::read(p, "support_min", s.support_min);
        detail::read(p, "support_max", s.support_max);
        detail::read(p, "tail_end", s.tail_end);
        detail::read(p, "reference_populations", s.reference_populations);
        detail::read(p, "log_sd", s.log_sd);
        detail::read(p, "iterations", s.iterations);
        detail::read(p, "evaluation_points", s.evaluation_points);
      }
      if (b.contains("model")) c.bank.model = model_from_json(b.at("model"));
    }
    if (j.contains("scenarios")) {
      c.scenarios.clear();
      for (const auto& s : j.at("scenarios")) {
        detail::reject_unknown(s, {"name", "frequency", "coverage", "mda_years"}, "scenario");
        ScenarioSpec spec;
        spec.name = check_field(s.at("name").get<std::string>());
        spec.frequency = transfil::parse_frequency(s.value("frequency", "none"));
        detail::read(s, "coverage", spec.coverage);
        detail::read(s, "mda_years", spec.mda_years);
        c.scenarios.push_back(spec);
      }
    }
    if (j.contains("weighting")) {
      const auto& w = j.at("weighting");
      detail::reject_unknown(w,
                             {"ernd", "delta", "bins", "continuity", "tail_start", "population_log_sd", "ess_floor",
                              "sparse_cutoff"},
                             "weighting");
      if (w.contains("ernd")) c.weighting.ernd.kind = parse_ernd_kind(w.at("ernd").get<std::string>());
      detail::read(w, "delta", c.weighting.ernd.delta);
      if (w.contains("bins")) c.weighting.ernd.bin_edges = equal_bins(w.at("bins").get<int>());
      if (w.contains("continuity")) {
        const auto m = w.at("continuity").get<std::string>();
        if (m == "drop") {
          c.weighting.ernd.continuity = ContinuityMode::kDrop;
        } else if (m == "tail_transfer") {
          c.weighting.ernd.continuity = ContinuityMode::kTailTransfer;
        } else {
          throw InvalidArgument("unknown continuity mode '" + m + "'");
        }
      }
      detail::read(w, "tail_start", c.weighting.ernd.tail_start);
      detail::read(w, "population_log_sd", c.weighting.population_log_sd);
      detail::read(w, "ess_floor", c.weighting.ess_floor);
      detail::read(w, "sparse_cutoff", c.weighting.sparse_cutoff);
    }
    if (j.contains("pooling")) {
      const auto& p = j.at("pooling");
      detail::reject_unknown(p, {"min_population", "max_population"}, "pooling");
      detail::read(p, "min_population", c.pooling.min_population);
      detail::read(p, "max_population", c.pooling.max_population);
    }
    if (j.contains("projection")) {
      const auto& p = j.at("projection");
      detail::reject_unknown(p, {"elimination_threshold", "probability_thresholds"}, "projection");
      detail::read(p, "elimination_threshold", c.projection.elimination_threshold);
      detail::read(p, "probability_thresholds", c.projection.probability_thresholds);
    }
    if (j.contains("toy")) {
      const auto& t = j.at("toy");
      detail::reject_unknown(t, {"samples", "simulations", "replicates", "delta"}, "toy");
      detail::read(t, "samples", c.toy.samples);
      detail::read(t, "simulations", c.toy.simulations);
      detail::read(t, "replicates", c.toy.replicates);
      detail::read(t, "delta", c.toy.delta);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

/// Reads a V/H-k grid CSV with columns vector_host_ratio, aggregation_k, mass.
inline VhKGrid read_vh_k_grid(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t a = t.column("vector_host_ratio"), b = t.column("aggregation_k"), m = t.column("mass");
  std::vector<VhKPoint> pts;
  for (const auto& r : t.rows) pts.push_back({parse_double(r[a]), parse_double(r[b]), parse_double(r[m])});
  return VhKGrid(std::move(pts));
}

}  // namespace lfmap::io
