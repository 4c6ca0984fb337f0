#pragma once

// Analytically tractable validation harness: triangular prior on (theta1,
// theta2), prevalence map p(theta) = theta1, Beta(1,2) pixel target.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lfmap/ecdf.hpp"
#include "lfmap/ernd.hpp"
#include "lfmap/error.hpp"
#include "lfmap/parallel.hpp"
#include "lfmap/rng.hpp"
#include "lfmap/weights.hpp"

namespace lfmap::toy {

/// One parameter draw with 0 < theta2 < theta1 < 1.
struct ToyDraw {
  double theta1 = 0.5;
  double theta2 = 0.25;
};

enum class ProposalKind { kPrior, kUniform };

inline std::string to_string(ProposalKind kind) {
  return kind == ProposalKind::kPrior ? "beta_2_1" : "uniform_0_1";
}

/// Prior density: 2 on the triangle 0 < theta2 < theta1 < 1.
inline double prior_density(const ToyDraw& t) {
  return (t.theta2 > 0.0 && t.theta2 < t.theta1 && t.theta1 < 1.0) ? 2.0 : 0.0;
}

/// Density of the proposal that draws theta1 ~ U(0,1), theta2 | theta1 ~ U(0, theta1).
inline double uniform_proposal_density(const ToyDraw& t) {
  return (t.theta2 > 0.0 && t.theta2 < t.theta1 && t.theta1 < 1.0) ? 1.0 / t.theta1 : 0.0;
}

inline double proposal_density(ProposalKind kind, const ToyDraw& t) {
  return kind == ProposalKind::kPrior ? prior_density(t) : uniform_proposal_density(t);
}

/// theta1 ~ Beta(2,1), theta2 | theta1 ~ theta1 * U(0,1).
template <class Rng>
std::vector<ToyDraw> sample_prior(std::size_t count, Rng& rng) {
  std::vector<ToyDraw> out(count);
  for (auto& t : out) {
    t.theta1 = std::sqrt(open_unit(rng));
    t.theta2 = t.theta1 * open_unit(rng);
  }
  return out;
}

/// theta1 ~ U(0,1), theta2 | theta1 ~ theta1 * U(0,1).
template <class Rng>
std::vector<ToyDraw> sample_uniform_proposal(std::size_t count, Rng& rng) {
  std::vector<ToyDraw> out(count);
  for (auto& t : out) {
    t.theta1 = open_unit(rng);
    t.theta2 = t.theta1 * open_unit(rng);
  }
  return out;
}

inline std::vector<ToyDraw> sample_toy_prior(std::size_t count, std::uint64_t seed) {
  detail::require(count >= 1, "need at least one draw");
  Engine rng{derive_seed(seed, 0, Stream::kToyDraws)};
  return sample_prior(count, rng);
}

inline std::vector<ToyDraw> sample_toy_uniform_proposal(std::size_t count, std::uint64_t seed) {
  detail::require(count >= 1, "need at least one draw");
  Engine rng{derive_seed(seed, 0, Stream::kToyDraws)};
  return sample_uniform_proposal(count, rng);
}

/// I.i.d. Beta(1,2) pixel prevalences.
template <class Rng>
PrevalenceSamples sample_target(std::size_t count, Rng& rng) {
  std::vector<double> v(count);
  for (double& x : v) {
    x = 1.0 - std::sqrt(open_unit(rng));
  }
  return PrevalenceSamples::map(std::move(v));
}

inline PrevalenceSamples toy_target_sampler(std::size_t count, std::uint64_t seed) {
  Engine rng{derive_seed(seed, 0, Stream::kToyPixel)};
  return sample_target(count, rng);
}

/// Closed-form cdf of the reweighted theta2 marginal with density
/// 2(t - log t - 1) on (0, 1): x^2 - 2 x log x.
inline double theta2_posterior_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x - 2.0 * x * std::log(x);
}

inline double theta2_posterior_density(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return 2.0 * (x - std::log(x) - 1.0);
}

/// Mean of the reweighted theta2 marginal.
inline constexpr double kTheta2PosteriorMean = 1.0 / 6.0;

/// How the distance estimator picks its window.
struct DeltaPolicy {
  /// <= 0 means the automatic three-neighbour rule.
  double fixed = 0.0;
  static DeltaPolicy automatic() { return {}; }
  static DeltaPolicy constant(double delta) { return {delta}; }
};

/// Diagnostics for one replicate.
struct ToyExperimentReport {
  double ks = 0.0;
  double isd = 0.0;
  double ess = 0.0;
  double delta = 0.0;
  std::uint64_t replicate_seed = 0;
  ErndKind ernd = ErndKind::kDistance;
  ProposalKind proposal = ProposalKind::kPrior;
};

/// Single replicate returning everything needed by the experiment and the
/// posterior checks.
struct ToyReplicate {
  std::vector<ToyDraw> draws;
  PrevalenceSamples sims;
  PrevalenceSamples pixel;
  std::vector<double> stage1;
  ErndResult result;
};

inline ToyReplicate run_replicate(std::size_t m, std::size_t j, ErndKind ernd, ProposalKind proposal,
                                  DeltaPolicy delta, std::uint64_t replicate_seed,
                                  int histogram_bins = 100) {
  Engine draw_rng{derive_seed(replicate_seed, 0, Stream::kToyDraws)};
  Engine pixel_rng{derive_seed(replicate_seed, 0, Stream::kToyPixel)};
  ToyReplicate rep;
  rep.draws = proposal == ProposalKind::kPrior ? sample_prior(j, draw_rng)
                                                : sample_uniform_proposal(j, draw_rng);
  rep.pixel = sample_target(m, pixel_rng);
  std::vector<double> prevalence(j);
  std::transform(rep.draws.begin(), rep.draws.end(), prevalence.begin(),
                 [](const ToyDraw& t) { return t.theta1; });
  rep.sims = PrevalenceSamples::bank(std::move(prevalence));
  rep.stage1 = stage1_weights(std::span<const ToyDraw>(rep.draws), prior_density,
                              [proposal](const ToyDraw& t) { return proposal_density(proposal, t); });

  ErndConfig config;
  config.kind = ernd;
  config.delta = delta.fixed;
  config.bin_edges = equal_bins(histogram_bins);
  rep.result = reweight(config, rep.pixel, rep.sims, rep.stage1);
  return rep;
}

inline ToyExperimentReport summarize(const ToyReplicate& rep, ErndKind ernd, ProposalKind proposal,
                                     std::uint64_t replicate_seed) {
  const WeightedCdf map_cdf = WeightedCdf::from_samples(rep.pixel.span());
  const WeightedCdf sim_cdf = WeightedCdf::from_weighted(rep.sims.span(), rep.result.weights.span());
  ToyExperimentReport r;
  r.ks = ks_distance(map_cdf, sim_cdf);
  r.isd = integrated_squared_distance(map_cdf, sim_cdf);
  r.ess = rep.result.weights.ess();
  r.delta = rep.result.delta;
  r.replicate_seed = replicate_seed;
  r.ernd = ernd;
  r.proposal = proposal;
  return r;
}

/// Repeats the toy reweighting `replicates` times with fresh pixel and
/// simulation samples. Replicate seeds derive from `seed` by index, so the
/// reports do not depend on `workers`.
inline std::vector<ToyExperimentReport> run_toy_experiment(std::size_t m, std::size_t j, int replicates,
                                                           ErndKind ernd, ProposalKind proposal,
                                                           DeltaPolicy delta, std::uint64_t seed,
                                                           unsigned workers = 1) {
  detail::require(replicates >= 1, "need at least one replicate");
  detail::require(m >= 1 && j >= 1, "need at least one pixel sample and one simulation");
  std::vector<ToyExperimentReport> out(static_cast<std::size_t>(replicates));
  parallel_for(out.size(), workers, [&](std::size_t r) {
    const std::uint64_t rs = derive_seed(seed, r, Stream::kToyDraws);
    const ToyReplicate rep = run_replicate(m, j, ernd, proposal, delta, rs);
    out[r] = summarize(rep, ernd, proposal, rs);
  });
  return out;
}

/// Empirical quantile with linear interpolation between order statistics.
inline double interpolated_quantile(std::vector<double> values, double q) {
  detail::require(!values.empty(), "quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

/// Median, mean and 2.5/97.5 percentile band of one statistic.
struct Band {
  double median = 0.0;
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

inline Band band_of(const std::vector<double>& values) {
  Band b;
  b.median = interpolated_quantile(values, 0.5);
  b.lower = interpolated_quantile(values, 0.025);
  b.upper = interpolated_quantile(values, 0.975);
  double s = 0.0;
  for (double v : values) s += v;
  b.mean = s / static_cast<double>(values.size());
  return b;
}

/// One row of the estimator comparison table.
struct TableRow {
  ProposalKind proposal;
  ErndKind ernd;
  Band isd_x1000;
  Band ess;
};

inline TableRow table_row(const std::vector<ToyExperimentReport>& reports) {
  detail::require(!reports.empty(), "no reports");
  std::vector<double> isd;
  std::vector<double> e;
  for (const auto& r : reports) {
    isd.push_back(r.isd * 1000.0);
    e.push_back(r.ess);
  }
  return {reports.front().proposal, reports.front().ernd, band_of(isd), band_of(e)};
}

}  // namespace lfmap::toy
