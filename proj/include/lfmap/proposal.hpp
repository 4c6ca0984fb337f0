#pragma once

// Importance proposals over transmission-model parameters: the log-normal
// population prior, the ESS-flattening adaptive population proposal, the
// tabulated (V/H, k) prior, pilot-based region proposals, and bank sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lfmap/error.hpp"
#include "lfmap/rng.hpp"

namespace lfmap {

/// Spatially varying transmission-model parameters of one simulation.
struct ParameterVector {
  int population = 1000;
  double vector_host_ratio = 100.0;
  double aggregation_k = 0.2;
  /// Imported worms per host per month.
  double importation_rate = 0.0;

  void validate() const {
    detail::require(population >= 1, "population must be at least 1");
    detail::require(std::isfinite(vector_host_ratio) && vector_host_ratio >= 0.0, "V/H must be finite and >= 0");
    detail::require(std::isfinite(aggregation_k) && aggregation_k > 0.0, "k must be finite and > 0");
    detail::require(std::isfinite(importation_rate) && importation_rate >= 0.0,
                    "importation rate must be finite and >= 0");
  }

  friend bool operator==(const ParameterVector&, const ParameterVector&) = default;
};

/// Discrete distribution over strictly increasing support points.
class TabulatedProposal {
 public:
  TabulatedProposal() = default;

  TabulatedProposal(std::vector<double> support, std::vector<double> mass)
      : support_(std::move(support)), mass_(std::move(mass)) {
    detail::require(!support_.empty(), "tabulated proposal needs support");
    detail::require(support_.size() == mass_.size(), "support and mass differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < mass_.size(); ++i) {
      detail::require(mass_[i] >= 0.0 && std::isfinite(mass_[i]), "proposal mass must be finite and >= 0");
      if (i > 0) {
        detail::require(support_[i] > support_[i - 1], "proposal support must be strictly increasing");
      }
      total += mass_[i];
    }
    detail::require(total > 0.0, "proposal has zero total mass");
    cumulative_.resize(mass_.size());
    double running = 0.0;
    for (std::size_t i = 0; i < mass_.size(); ++i) {
      mass_[i] /= total;
      running += mass_[i];
      cumulative_[i] = running;
    }
    cumulative_.back() = 1.0;
  }

  const std::vector<double>& support() const noexcept { return support_; }
  const std::vector<double>& mass() const noexcept { return mass_; }

  /// Probability of exactly `x`; zero off the support.
  double pmf(double x) const {
    const auto it = std::lower_bound(support_.begin(), support_.end(), x);
    if (it == support_.end() || *it != x) {
      return 0.0;
    }
    return mass_[static_cast<std::size_t>(it - support_.begin())];
  }

  template <class Rng>
  double sample(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double target = u(rng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
    i = std::min(i, support_.size() - 1);
    // Skip zero-mass points that share a cumulative value with a predecessor.
    while (mass_[i] == 0.0 && i + 1 < support_.size()) ++i;
    return support_[i];
  }

 private:
  std::vector<double> support_;
  std::vector<double> mass_;
  std::vector<double> cumulative_;
};

/// Log-normal density of a population size n: log n ~ N(log N, sigma^2).
inline double population_prior_density(double n, double reported, double log_sd) {
  detail::require(n >= 1.0, "population must be >= 1");
  detail::require(reported >= 1.0, "reported population must be >= 1");
  detail::require(log_sd > 0.0, "log standard deviation must be positive");
  const double z = (std::log(n) - std::log(reported)) / log_sd;
  return std::exp(-0.5 * z * z) / (n * log_sd * std::sqrt(2.0 * std::numbers::pi));
}

/// Per-pixel prior on population size.
struct PopulationPrior {
  double reported_population = 1000.0;
  double log_sd = 0.5;

  void validate() const {
    detail::require(reported_population >= 1.0, "reported population must be >= 1");
    detail::require(log_sd > 0.0, "log standard deviation must be positive");
  }
  double density(double n) const { return population_prior_density(n, reported_population, log_sd); }
};

/// Settings for the ESS-flattening population proposal.
struct AdaptiveProposalSpec {
  int support_min = 260;
  int support_max = 10000;
  /// The proposal decreases linearly from q(support_max) to zero at tail_end + 1.
  int tail_end = 11550;
  /// Reported populations of the reference pixel set; empty means every
  /// integer in [support_min, support_max].
  std::vector<int> reference_populations;
  double log_sd = 0.5;
  int iterations = 10;
  /// Maximum number of reference populations at which ESS is evaluated
  /// exactly; other points are interpolated linearly in log population.
  int evaluation_points = 256;

  void validate() const {
    detail::require(support_min >= 1 && support_max >= support_min, "invalid population support");
    detail::require(tail_end >= support_max, "tail must end at or above the support maximum");
    detail::require(log_sd > 0.0, "log standard deviation must be positive");
    detail::require(iterations >= 0, "iterations must be >= 0");
    detail::require(evaluation_points >= 2, "need at least two evaluation points");
    for (int n : reference_populations) {
      detail::require(n >= 1, "reference populations must be >= 1");
    }
  }
};

/// Result of the adaptive iteration.
struct AdaptiveProposal {
  TabulatedProposal proposal;
  /// Reference populations where ESS was evaluated on the final proposal.
  std::vector<double> ess_points;
  /// Per-draw ESS of a pixel with that reported population.
  std::vector<double> ess_values;
};

namespace detail {

inline std::vector<double> with_linear_tail(std::vector<double> q, const AdaptiveProposalSpec& spec) {
  const std::size_t body = static_cast<std::size_t>(spec.support_max - spec.support_min + 1);
  const double top = q[body - 1];
  const double span = static_cast<double>(spec.tail_end + 1 - spec.support_max);
  for (std::size_t i = body; i < q.size(); ++i) {
    const double n = static_cast<double>(spec.support_min) + static_cast<double>(i);
    q[i] = top * (static_cast<double>(spec.tail_end) + 1.0 - n) / span;
  }
  const double total = std::accumulate(q.begin(), q.end(), 0.0);
  for (double& v : q) v /= total;
  return q;
}

/// Per-draw ESS of a pixel with reported population `reported` under the
/// proposal `q` on consecutive integers starting at `support_min`:
/// (sum pi)^2 / sum(pi^2 / q), with pi the log-normal density truncated to
/// the support.
inline double pixel_ess(std::span<const double> q, int support_min, double reported, double log_sd) {
  double mass = 0.0;
  double second = 0.0;
  const double lo = reported * std::exp(-9.0 * log_sd);
  const double hi = reported * std::exp(9.0 * log_sd);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double n = static_cast<double>(support_min) + static_cast<double>(i);
    if (n < lo || n > hi || q[i] <= 0.0) {
      continue;
    }
    const double pi = population_prior_density(n, reported, log_sd);
    mass += pi;
    second += pi * pi / q[i];
  }
  if (!(second > 0.0)) {
    return 0.0;
  }
  return mass * mass / second;
}

}  // namespace detail

/// Builds the population proposal by iterating q_i(n) proportional to
/// q_{i-1}(n) / ESS_{i-1}(n) from a flat start.
///
/// ESS_i(n) is the per-draw effective sample size that a pixel with reported
/// population n would receive from proposal q_i. The fixed point gives every
/// reference pixel the same ESS. After each update the tail above
/// support_max is reset to decrease linearly to zero.
inline AdaptiveProposal adapt_population_proposal(const AdaptiveProposalSpec& spec) {
  spec.validate();
  const std::size_t size = static_cast<std::size_t>(spec.tail_end - spec.support_min + 1);
  const std::size_t body = static_cast<std::size_t>(spec.support_max - spec.support_min + 1);

  std::vector<double> reference;
  if (spec.reference_populations.empty()) {
    for (int n = spec.support_min; n <= spec.support_max; ++n) reference.push_back(n);
  } else {
    for (int n : spec.reference_populations) reference.push_back(n);
    std::sort(reference.begin(), reference.end());
    reference.erase(std::unique(reference.begin(), reference.end()), reference.end());
  }

  // Evaluation points: all references if few, else log-spaced over their range.
  std::vector<double> eval;
  if (reference.size() <= static_cast<std::size_t>(spec.evaluation_points)) {
    eval = reference;
  } else {
    const double a = std::log(reference.front());
    const double b = std::log(reference.back());
    for (int i = 0; i < spec.evaluation_points; ++i) {
      eval.push_back(std::round(std::exp(a + (b - a) * i / (spec.evaluation_points - 1))));
    }
    eval.erase(std::unique(eval.begin(), eval.end()), eval.end());
  }

  auto ess_at_eval = [&](const std::vector<double>& q) {
    std::vector<double> out(eval.size());
    for (std::size_t e = 0; e < eval.size(); ++e) {
      out[e] = detail::pixel_ess(q, spec.support_min, eval[e], spec.log_sd);
      if (!(out[e] > 0.0)) {
        throw SupportViolation("reference pixel with population " + std::to_string(eval[e]) +
                               " receives zero effective sample size");
      }
    }
    return out;
  };
  // Piecewise-linear in log population, constant beyond the end points.
  auto interpolate = [&](const std::vector<double>& values, double n) {
    if (eval.size() == 1 || n <= eval.front()) return values.front();
    if (n >= eval.back()) return values.back();
    const auto it = std::upper_bound(eval.begin(), eval.end(), n);
    const std::size_t hi = static_cast<std::size_t>(it - eval.begin());
    const std::size_t lo = hi - 1;
    const double t = (std::log(n) - std::log(eval[lo])) / (std::log(eval[hi]) - std::log(eval[lo]));
    return values[lo] + t * (values[hi] - values[lo]);
  };

  std::vector<double> q(size, 0.0);
  std::fill(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(body), 1.0);
  q = detail::with_linear_tail(std::move(q), spec);

  for (int it = 0; it < spec.iterations; ++it) {
    const std::vector<double> e = ess_at_eval(q);
    for (std::size_t i = 0; i < body; ++i) {
      q[i] /= interpolate(e, static_cast<double>(spec.support_min) + static_cast<double>(i));
    }
    q = detail::with_linear_tail(std::move(q), spec);
  }

  std::vector<double> support(size);
  for (std::size_t i = 0; i < size; ++i) {
    support[i] = static_cast<double>(spec.support_min) + static_cast<double>(i);
  }
  AdaptiveProposal out;
  out.ess_points = eval;
  out.ess_values = ess_at_eval(q);
  out.proposal = TabulatedProposal(std::move(support), std::move(q));
  return out;
}

/// One support point of the joint (V/H, k) prior.
struct VhKPoint {
  double vector_host_ratio = 0.0;
  double aggregation_k = 0.0;
  double mass = 0.0;
};

/// Tabulated joint prior over the vector-to-host ratio and bite-risk aggregation.
class VhKGrid {
 public:
  VhKGrid() = default;

  explicit VhKGrid(std::vector<VhKPoint> points) : points_(std::move(points)) {
    detail::require(!points_.empty(), "V/H-k grid is empty");
    double total = 0.0;
    for (const auto& p : points_) {
      detail::require(p.vector_host_ratio >= 0.0 && p.aggregation_k > 0.0 && p.mass >= 0.0,
                      "invalid V/H-k grid point");
      total += p.mass;
    }
    detail::require(total > 0.0, "V/H-k grid has zero mass");
    double running = 0.0;
    for (auto& p : points_) {
      p.mass /= total;
      running += p.mass;
      cumulative_.push_back(running);
    }
    cumulative_.back() = 1.0;
  }

  /// Default grid: V/H on [20, 1000], k on [0.05, 1], log-spaced, with log k
  /// tending to rise with log V/H. Under the default model parameters this
  /// spans equilibrium mf prevalences from near zero to about 0.95.
  static VhKGrid default_grid() {
    std::vector<VhKPoint> pts;
    const int n_vh = 17;
    const int n_k = 10;
    const double vh_lo = 20.0;
    const double vh_hi = 1000.0;
    const double k_lo = 0.05;
    const double k_hi = 1.0;
    for (int a = 0; a < n_vh; ++a) {
      const double u = static_cast<double>(a) / (n_vh - 1);
      const double vh = vh_lo * std::pow(vh_hi / vh_lo, u);
      for (int b = 0; b < n_k; ++b) {
        const double v = static_cast<double>(b) / (n_k - 1);
        const double k = k_lo * std::pow(k_hi / k_lo, v);
        const double z = (v - (0.1 + 0.7 * u)) / 0.3;
        pts.push_back({vh, k, std::exp(-0.5 * z * z)});
      }
    }
    return VhKGrid(std::move(pts));
  }

  const std::vector<VhKPoint>& points() const noexcept { return points_; }

  template <class Rng>
  const VhKPoint& sample(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double target = u(rng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    std::size_t i = std::min(static_cast<std::size_t>(it - cumulative_.begin()), points_.size() - 1);
    while (points_[i].mass == 0.0 && i + 1 < points_.size()) ++i;
    return points_[i];
  }

 private:
  std::vector<VhKPoint> points_;
  std::vector<double> cumulative_;
};

/// Proposal for every component of a ParameterVector.
struct BankProposal {
  TabulatedProposal population;
  VhKGrid vh_k = VhKGrid::default_grid();
  double importation_max = 0.0005;

  /// Proposal probability of a population size (the other components are
  /// drawn from their priors and cancel in importance ratios).
  double population_pmf(int n) const { return population.pmf(static_cast<double>(n)); }
};

/// Draws parameter vector `index` of a bank. Pure in (seed, index).
inline ParameterVector sample_parameter(const BankProposal& proposal, std::uint64_t seed, std::uint64_t index) {
  Engine rng{derive_seed(seed, index, Stream::kBank)};
  ParameterVector theta;
  theta.population = static_cast<int>(proposal.population.sample(rng));
  const VhKPoint& point = proposal.vh_k.sample(rng);
  theta.vector_host_ratio = point.vector_host_ratio;
  theta.aggregation_k = point.aggregation_k;
  std::uniform_real_distribution<double> imp(0.0, proposal.importation_max);
  theta.importation_rate = imp(rng);
  return theta;
}

/// Draws `count` independent parameter vectors.
inline std::vector<ParameterVector> sample_bank(const BankProposal& proposal, std::size_t count,
                                                std::uint64_t seed) {
  detail::require(count >= 1, "bank needs at least one draw");
  std::vector<ParameterVector> out(count);
  for (std::size_t j = 0; j < count; ++j) {
    out[j] = sample_parameter(proposal, seed, j);
  }
  return out;
}

/// Pilot outcome: which region of parameter space a draw fell in and the
/// equilibrium prevalence it produced.
struct PilotOutcome {
  std::size_t region = 0;
  double prevalence = 0.0;
};

/// Proposal that reweights prior mass across regions of parameter space.
///
/// Within region r the proposal density is prior(theta) * mass[r] / prior_mass[r].
struct RegionProposal {
  std::vector<double> prior_mass;
  std::vector<double> mass;

  /// prior / proposal for any theta in region r; zero-mass regions are
  /// excluded from the proposal's support.
  double importance_ratio(std::size_t region) const {
    detail::require(region < mass.size(), "region index out of range");
    if (mass[region] <= 0.0) {
      throw SupportViolation("region outside the proposal support");
    }
    return prior_mass[region] / mass[region];
  }

  template <class Rng>
  std::size_t sample_region(Rng& rng) const {
    std::discrete_distribution<std::size_t> pick(mass.begin(), mass.end());
    return pick(rng);
  }
};

/// Builds a region proposal from pilot simulations drawn from the prior.
///
/// Region mass mixes the share of pilot draws whose prevalence is at most
/// `max_observed_prevalence` (optionally weighted by how often each
/// prevalence is observed in the map) with a `prior_mixture` share of prior
/// mass. Regions whose pilot draws all exceed the cap get zero mass.
inline RegionProposal build_pilot_proposal(std::span<const PilotOutcome> pilot,
                                           std::span<const double> region_prior_mass,
                                           double max_observed_prevalence, double prior_mixture = 0.05,
                                           const std::function<double(double)>& observed_weight = {}) {
  detail::require(!pilot.empty(), "pilot set is empty");
  detail::require(!region_prior_mass.empty(), "no regions");
  detail::require(prior_mixture >= 0.0 && prior_mixture <= 1.0, "prior mixture must lie in [0, 1]");
  const std::size_t regions = region_prior_mass.size();
  std::vector<double> accepted(regions, 0.0);
  std::vector<int> seen(regions, 0);
  std::vector<int> kept(regions, 0);
  for (const auto& draw : pilot) {
    detail::require(draw.region < regions, "pilot region index out of range");
    ++seen[draw.region];
    if (draw.prevalence <= max_observed_prevalence) {
      ++kept[draw.region];
      accepted[draw.region] += observed_weight ? observed_weight(draw.prevalence) : 1.0;
    }
  }
  const double accepted_total = std::accumulate(accepted.begin(), accepted.end(), 0.0);
  double prior_total = 0.0;
  for (std::size_t r = 0; r < regions; ++r) {
    detail::require(region_prior_mass[r] >= 0.0, "negative prior mass");
    if (!(seen[r] > 0 && kept[r] == 0)) prior_total += region_prior_mass[r];
  }
  if (!(accepted_total > 0.0) && !(prior_total > 0.0)) {
    throw InvalidArgument("every pilot prevalence exceeds the cap");
  }

  RegionProposal out;
  out.prior_mass.assign(region_prior_mass.begin(), region_prior_mass.end());
  const double prior_sum = std::accumulate(out.prior_mass.begin(), out.prior_mass.end(), 0.0);
  for (double& m : out.prior_mass) m /= prior_sum;
  out.mass.assign(regions, 0.0);
  const double share = accepted_total > 0.0 ? 1.0 - prior_mixture : 0.0;
  for (std::size_t r = 0; r < regions; ++r) {
    const bool excluded = seen[r] > 0 && kept[r] == 0;
    if (excluded) continue;
    double m = 0.0;
    if (accepted_total > 0.0) m += share * accepted[r] / accepted_total;
    if (prior_total > 0.0) m += (1.0 - share) * region_prior_mass[r] / prior_total;
    out.mass[r] = m;
  }
  const double total = std::accumulate(out.mass.begin(), out.mass.end(), 0.0);
  for (double& m : out.mass) m /= total;
  return out;
}

}  // namespace lfmap
