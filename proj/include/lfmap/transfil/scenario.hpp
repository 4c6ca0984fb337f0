#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "lfmap/error.hpp"
#include "lfmap/transfil/params.hpp"

namespace lfmap::transfil {

enum class MdaFrequency { kNone, kAnnual, kBiannual };

inline std::string to_string(MdaFrequency f) {
  switch (f) {
    case MdaFrequency::kNone:
      return "none";
    case MdaFrequency::kAnnual:
      return "annual";
    case MdaFrequency::kBiannual:
      return "biannual";
  }
  return "none";
}

inline MdaFrequency parse_frequency(const std::string& s) {
  if (s == "none") return MdaFrequency::kNone;
  if (s == "annual") return MdaFrequency::kAnnual;
  if (s == "biannual") return MdaFrequency::kBiannual;
  throw InvalidArgument("unknown MDA frequency '" + s + "'");
}

/// One mass drug administration round.
struct MdaRound {
  /// Months after the start of the projection.
  int month = 0;
  double coverage = 0.65;
  double mf_kill = 0.95;
  double sterilisation = 0.55;
};

/// An intervention strategy projected forward from equilibrium.
struct Scenario {
  std::string name;
  MdaFrequency frequency = MdaFrequency::kNone;
  std::vector<MdaRound> rounds;
  int horizon_years = 5;

  void validate() const {
    detail::require(!name.empty(), "scenario needs a name");
    detail::require(horizon_years >= 1, "scenario horizon must be at least one year");
    for (std::size_t i = 0; i < rounds.size(); ++i) {
      const auto& r = rounds[i];
      detail::require(r.coverage >= 0.0 && r.coverage <= 1.0, "coverage must lie in [0, 1]");
      detail::require(r.mf_kill >= 0.0 && r.mf_kill <= 1.0 && r.sterilisation >= 0.0 && r.sterilisation <= 1.0,
                      "drug efficacies must lie in [0, 1]");
      detail::require(r.month >= 0 && r.month < 12 * horizon_years, "MDA round outside the horizon");
      if (i > 0) {
        detail::require(r.month > rounds[i - 1].month, "MDA round times must increase");
      }
    }
  }

  /// Rounds every 12 (annual) or 6 (biannual) months from month 0 for
  /// `mda_years` years, with efficacies taken from `params`.
  static Scenario periodic(std::string name, MdaFrequency frequency, double coverage, int mda_years,
                           int horizon_years, const ModelParams& params = {}) {
    Scenario s;
    s.name = std::move(name);
    s.frequency = frequency;
    s.horizon_years = horizon_years;
    if (frequency != MdaFrequency::kNone) {
      const int interval = frequency == MdaFrequency::kAnnual ? 12 : 6;
      for (int month = 0; month < 12 * mda_years && month < 12 * horizon_years; month += interval) {
        s.rounds.push_back({month, coverage, params.mda_mf_kill, params.mda_sterilisation});
      }
    }
    s.validate();
    return s;
  }
};

/// The four strategies compared for East Africa: no intervention, annual MDA
/// at 65% and 80% coverage, and biannual MDA at 65%, each over five years.
inline std::vector<Scenario> default_scenarios(const ModelParams& params = {}) {
  return {
      Scenario::periodic("none", MdaFrequency::kNone, 0.0, 0, 5, params),
      Scenario::periodic("aMDA65", MdaFrequency::kAnnual, 0.65, 5, 5, params),
      Scenario::periodic("aMDA80", MdaFrequency::kAnnual, 0.80, 5, 5, params),
      Scenario::periodic("bMDA65", MdaFrequency::kBiannual, 0.65, 5, 5, params),
  };
}

/// Yearly importation-rate multipliers per scenario name. Missing scenarios
/// and years past the table keep the baseline rate.
class ImportationSchedule {
 public:
  ImportationSchedule() = default;

  void set(const std::string& scenario, std::vector<double> multipliers) {
    for (double m : multipliers) {
      detail::require(m >= 0.0 && std::isfinite(m), "importation multipliers must be finite and >= 0");
    }
    table_[scenario] = std::move(multipliers);
  }

  /// Multiplier in force during `year` (0-based) of `scenario`.
  double multiplier(const std::string& scenario, int year) const {
    const auto it = table_.find(scenario);
    if (it == table_.end() || year < 0 || static_cast<std::size_t>(year) >= it->second.size()) {
      return 1.0;
    }
    return it->second[static_cast<std::size_t>(year)];
  }

  const std::map<std::string, std::vector<double>>& table() const noexcept { return table_; }

 private:
  std::map<std::string, std::vector<double>> table_;
};

}  // namespace lfmap::transfil
