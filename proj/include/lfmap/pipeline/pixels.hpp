#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lfmap/error.hpp"

namespace lfmap::pipeline {

/// Posterior prevalence draws for one map pixel.
struct PixelPosterior {
  std::string pixel_id;
  std::string country;
  double population = 0.0;
  std::vector<double> samples;

  void validate() const {
    lfmap::detail::require(!pixel_id.empty(), "pixel id must not be empty");
    lfmap::detail::require(std::isfinite(population) && population > 0.0,
                    "pixel " + pixel_id + ": population must be positive");
    lfmap::detail::require(!samples.empty(), "pixel " + pixel_id + ": no posterior samples");
    for (double v : samples) {
      lfmap::detail::require(v >= 0.0 && v <= 1.0, "pixel " + pixel_id + ": sample outside [0, 1]");
    }
  }
};

/// One or more pixels of the same country weighted as a single unit.
struct PooledUnit {
  std::string unit_id;
  std::string country;
  std::vector<std::string> members;
  double population = 0.0;
  /// Sample-wise population-weighted mean prevalence of the members.
  std::vector<double> samples;
  /// Set when the country's small pixels could not reach the minimum.
  bool undersized = false;
};

struct PoolingConfig {
  double min_population = 300.0;
  double max_population = 10000.0;

  void validate() const {
    lfmap::detail::require(min_population >= 0.0 && max_population > 0.0 && min_population <= max_population,
                    "pooling thresholds must satisfy 0 <= min <= max");
  }
};

struct Exclusion {
  std::string pixel_id;
  std::string country;
  double population = 0.0;
  std::string reason;
};

struct PoolingResult {
  std::vector<PooledUnit> units;
  std::vector<Exclusion> exclusions;
  std::vector<std::string> warnings;
};

namespace detail {

inline PooledUnit merge(std::span<const PixelPosterior* const> members) {
  PooledUnit unit;
  unit.country = members.front()->country;
  const std::size_t m = members.front()->samples.size();
  unit.samples.assign(m, 0.0);
  for (const auto* p : members) {
    if (p->samples.size() != m) {
      throw InvalidArgument("pixels " + members.front()->pixel_id + " and " + p->pixel_id +
                            " have different sample counts and cannot be pooled");
    }
    unit.members.push_back(p->pixel_id);
    unit.population += p->population;
    for (std::size_t i = 0; i < m; ++i) unit.samples[i] += p->population * p->samples[i];
  }
  for (double& v : unit.samples) v = std::clamp(v / unit.population, 0.0, 1.0);
  unit.unit_id = unit.members.front();
  for (std::size_t i = 1; i < unit.members.size(); ++i) unit.unit_id += "+" + unit.members[i];
  return unit;
}

}  // namespace detail

/// Drops pixels above the maximum population and pools pixels below the
/// minimum within each country.
///
/// Small pixels are taken largest first; each pool keeps adding the next
/// largest until it reaches the minimum, so pools contain as few pixels as
/// possible. A short remainder joins the last pool of its country; a country
/// whose small pixels total less than the minimum yields one undersized pool
/// and a warning. Units come out ordered by their earliest input pixel.
inline PoolingResult pool_and_filter(std::span<const PixelPosterior> pixels, const PoolingConfig& config = {}) {
  config.validate();
  PoolingResult out;
  std::vector<std::pair<std::size_t, PooledUnit>> ordered;
  std::map<std::string, std::vector<std::size_t>> small_by_country;
  std::vector<std::string> country_order;

  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const auto& p = pixels[i];
    p.validate();
    if (p.population > config.max_population) {
      out.exclusions.push_back({p.pixel_id, p.country, p.population, "population above maximum"});
      continue;
    }
    if (p.population < config.min_population) {
      if (!small_by_country.contains(p.country)) country_order.push_back(p.country);
      small_by_country[p.country].push_back(i);
      continue;
    }
    const PixelPosterior* self = &p;
    ordered.emplace_back(i, detail::merge(std::span<const PixelPosterior* const>(&self, 1)));
  }

  for (const auto& country : country_order) {
    auto idx = small_by_country[country];
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return pixels[a].population > pixels[b].population; });
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::size_t> current;
    double total = 0.0;
    for (std::size_t i : idx) {
      current.push_back(i);
      total += pixels[i].population;
      if (total >= config.min_population) {
        groups.push_back(std::move(current));
        current.clear();
        total = 0.0;
      }
    }
    bool undersized = false;
    if (!current.empty()) {
      if (groups.empty()) {
        groups.push_back(std::move(current));
        undersized = true;
        out.warnings.push_back("country " + country + ": small pixels total " + std::to_string(total) +
                               " people, below the pooling minimum; kept as one undersized pool");
      } else {
        groups.back().insert(groups.back().end(), current.begin(), current.end());
      }
    }
    for (const auto& g : groups) {
      std::vector<const PixelPosterior*> members;
      for (std::size_t i : g) members.push_back(&pixels[i]);
      PooledUnit unit = detail::merge(members);
      unit.undersized = undersized;
      ordered.emplace_back(*std::min_element(g.begin(), g.end()), std::move(unit));
    }
  }

  std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  out.units.reserve(ordered.size());
  for (auto& [index, unit] : ordered) out.units.push_back(std::move(unit));
  return out;
}

}  // namespace lfmap::pipeline
