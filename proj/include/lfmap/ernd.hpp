#pragma once

// Change-of-measure numerics: importance weights from the parameter prior and
// the three empirical Radon-Nikodym derivative (ERND) estimators that move the
// simulated prevalence distribution onto a map posterior.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "lfmap/error.hpp"
#include "lfmap/weights.hpp"

namespace lfmap {

/// Unnormalised importance weights prior(theta_j) / proposal(theta_j).
///
/// Throws SupportViolation if the proposal vanishes where the prior does not.
template <class Theta, class Prior, class Proposal>
std::vector<double> stage1_weights(std::span<const Theta> bank, Prior&& prior, Proposal&& proposal) {
  std::vector<double> out(bank.size());
  for (std::size_t j = 0; j < bank.size(); ++j) {
    const double pi = prior(bank[j]);
    const double q = proposal(bank[j]);
    detail::require(pi >= 0.0 && q >= 0.0, "densities must be non-negative");
    if (pi == 0.0) {
      out[j] = 0.0;
      continue;
    }
    if (!(q > 0.0)) {
      throw SupportViolation("proposal density is zero where the prior is positive");
    }
    out[j] = pi / q;
    if (!std::isfinite(out[j])) {
      throw SupportViolation("importance ratio is not finite");
    }
  }
  return out;
}

/// Window width chosen from the simulated prevalences.
struct DeltaChoice {
  double delta = 0.0;
  /// True when every prevalence coincides and the fallback width was used.
  bool fallback = false;
};

inline constexpr double kDeltaFallback = 1e-6;

/// Smallest window width for which every simulated prevalence has at least
/// three simulations (itself included) within half a width.
///
/// For each p_k the third-smallest of 2|p_k - p_j| over j is taken; the
/// result is the maximum of these over k.
inline DeltaChoice select_delta(std::span<const double> sims) {
  if (sims.size() < 3) {
    throw InvalidArgument("automatic window selection needs at least three simulations");
  }
  std::vector<double> p(sims.begin(), sims.end());
  std::sort(p.begin(), p.end());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(p.size());
  double widest = 0.0;
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    // Walk outwards taking the nearer neighbour twice; the second pick is the
    // third-nearest point once p_k itself is counted.
    std::ptrdiff_t left = k - 1;
    std::ptrdiff_t right = k + 1;
    double second = 0.0;
    for (int pick = 0; pick < 2; ++pick) {
      const double dl = left >= 0 ? p[k] - p[left] : INFINITY;
      const double dr = right < n ? p[right] - p[k] : INFINITY;
      if (dl <= dr) {
        second = dl;
        --left;
      } else {
        second = dr;
        ++right;
      }
    }
    widest = std::max(widest, 2.0 * second);
  }
  if (widest <= 0.0) {
    return {kDeltaFallback, true};
  }
  return {widest, false};
}

/// Output of an ERND estimator plus diagnostics.
struct ErndResult {
  WeightVector weights;
  /// Fraction of map samples with no simulation to carry them.
  double dropped_mass = 0.0;
  /// Intermediate discrepancy solutions clamped back onto the simplex.
  int clamped = 0;
  /// Window width actually used by the distance estimator.
  double delta = 0.0;
  bool delta_fallback = false;
};

namespace detail {

inline void check_inputs(const PrevalenceSamples& pixel, const PrevalenceSamples& sims,
                         std::span<const double> w1) {
  require(!pixel.empty(), "pixel has no posterior samples");
  require(!sims.empty(), "simulation bank is empty");
  require(w1.size() == sims.size(), "stage-1 weights do not match the simulations");
  for (double w : w1) {
    require(w >= 0.0 && std::isfinite(w), "stage-1 weights must be finite and non-negative");
  }
}

/// Simulation indices ordered by prevalence.
inline std::vector<std::size_t> order_by_value(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  return order;
}

inline std::size_t count_le(const std::vector<double>& sorted, double x) {
  return static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin());
}

inline std::size_t count_lt(const std::vector<double>& sorted, double x) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin());
}

}  // namespace detail

/// Window-count ERND: w2_j proportional to f(p_j | d) / g(p_j | w1) * w1_j.
///
/// f counts map samples in the closed window [p_j - delta/2, p_j + delta/2]
/// divided by delta*M; g sums stage-1 weight of simulations in the same
/// window divided by delta times the total stage-1 weight.
inline ErndResult distance_ernd(const PrevalenceSamples& pixel, const PrevalenceSamples& sims,
                                std::span<const double> w1, double delta,
                                ContinuityMode continuity = ContinuityMode::kDrop,
                                double tail_start = 0.75) {
  detail::check_inputs(pixel, sims, w1);
  detail::require(delta > 0.0, "window width must be positive");

  const std::vector<double> d = pixel.sorted_values();
  const auto p = sims.span();
  const double half = delta / 2.0;
  const bool use_tail = continuity == ContinuityMode::kTailTransfer;
  const double tail = use_tail ? tail_start : INFINITY;

  // Only simulations with positive stage-1 weight can carry mass.
  std::vector<double> ps;
  std::vector<double> prefix{0.0};
  for (std::size_t idx : detail::order_by_value(p)) {
    if (w1[idx] > 0.0) {
      ps.push_back(p[idx]);
      prefix.push_back(prefix.back() + w1[idx]);
    }
  }
  if (ps.empty()) {
    throw DegenerateWeights("every stage-1 weight is zero");
  }
  const double total_w1 = prefix.back();
  const double m = static_cast<double>(d.size());
  const std::size_t map_below_tail = detail::count_lt(d, tail);
  const std::size_t sims_below_tail = detail::count_lt(ps, tail);
  const double map_tail = static_cast<double>(d.size() - map_below_tail) / m;
  const double sim_tail = (total_w1 - prefix[sims_below_tail]) / total_w1;

  std::vector<double> w2(p.size(), 0.0);
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (w1[j] == 0.0) {
      continue;
    }
    if (p[j] >= tail) {
      w2[j] = w1[j] * map_tail / sim_tail;
      continue;
    }
    const double lo = p[j] - half;
    const double hi = p[j] + half;
    const std::size_t f_hi = std::min(detail::count_le(d, hi), map_below_tail);
    const std::size_t f_lo = std::min(detail::count_lt(d, lo), map_below_tail);
    const std::size_t g_hi = std::min(detail::count_le(ps, hi), sims_below_tail);
    const std::size_t g_lo = std::min(detail::count_lt(ps, lo), sims_below_tail);
    const double f = static_cast<double>(f_hi - f_lo) / (delta * m);
    const double g = (prefix[g_hi] - prefix[g_lo]) / (delta * total_w1);
    if (!(g > 0.0)) {
      throw Error("internal: empty denominator window for a positively weighted simulation");
    }
    w2[j] = f / g * w1[j];
  }

  // Map samples no simulation window reaches.
  std::size_t uncovered = 0;
  for (double x : d) {
    if (x >= tail && sim_tail > 0.0) {
      continue;
    }
    const std::size_t above = detail::count_lt(ps, x);
    bool covered = false;
    if (above < ps.size() && ps[above] - half <= x && x <= ps[above] + half && ps[above] < tail) {
      covered = true;
    }
    if (above > 0 && ps[above - 1] - half <= x && x <= ps[above - 1] + half && ps[above - 1] < tail) {
      covered = true;
    }
    uncovered += covered ? 0U : 1U;
  }

  ErndResult out;
  out.weights = WeightVector::normalized(std::move(w2));
  out.dropped_mass = static_cast<double>(uncovered) / m;
  out.delta = delta;
  return out;
}

/// Bin-ratio ERND over a fixed partition of [0, 1].
///
/// Every simulation in a bin is scaled by (map fraction in bin) / (stage-1
/// weight fraction in bin), so the weighted histogram reproduces the map
/// histogram. Map mass in bins without simulations is dropped and reported.
inline ErndResult histogram_ernd(const PrevalenceSamples& pixel, const PrevalenceSamples& sims,
                                 std::span<const double> w1, std::vector<double> bin_edges,
                                 ContinuityMode continuity = ContinuityMode::kDrop,
                                 double tail_start = 0.75) {
  detail::check_inputs(pixel, sims, w1);
  validate_bin_edges(bin_edges);
  detail::require(tail_start > 0.0 && tail_start < 1.0, "tail_start must lie in (0, 1)");

  if (continuity == ContinuityMode::kTailTransfer) {
    std::vector<double> merged;
    for (double e : bin_edges) {
      if (e < tail_start) merged.push_back(e);
    }
    merged.push_back(tail_start);
    merged.push_back(1.0);
    bin_edges = std::move(merged);
  }

  const std::size_t bins = bin_edges.size() - 1;
  auto bin_of = [&](double x) {
    const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), x);
    const std::size_t b = static_cast<std::size_t>(it - bin_edges.begin());
    return std::min(b == 0 ? 0 : b - 1, bins - 1);
  };

  std::vector<double> map_mass(bins, 0.0);
  for (double x : pixel.values()) {
    map_mass[bin_of(x)] += 1.0;
  }
  std::vector<double> sim_mass(bins, 0.0);
  const auto p = sims.span();
  for (std::size_t j = 0; j < p.size(); ++j) {
    sim_mass[bin_of(p[j])] += w1[j];
  }

  std::vector<double> w2(p.size(), 0.0);
  for (std::size_t j = 0; j < p.size(); ++j) {
    const std::size_t b = bin_of(p[j]);
    if (w1[j] > 0.0) {
      w2[j] = w1[j] * map_mass[b] / sim_mass[b];
    }
  }
  double dropped = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (map_mass[b] > 0.0 && sim_mass[b] == 0.0) {
      dropped += map_mass[b];
    }
  }

  ErndResult out;
  out.weights = WeightVector::normalized(std::move(w2));
  out.dropped_mass = dropped / static_cast<double>(pixel.size());
  return out;
}

/// Minimum integrated-squared-distance ERND.
///
/// With sorted distinct simulated prevalences u_1 < ... < u_K, the weighted cdf
/// on [u_k, u_{k+1}) is set to the average of the map cdf over that interval,
/// and to one from u_K on. Weights are the increments. Coincident prevalences
/// share their increment equally. Stage-1 weights do not enter.
inline ErndResult discrepancy_ernd(const PrevalenceSamples& pixel, const PrevalenceSamples& sims) {
  detail::require(!pixel.empty(), "pixel has no posterior samples");
  detail::require(!sims.empty(), "simulation bank is empty");

  const std::vector<double> d = pixel.sorted_values();
  const auto p = sims.span();
  const std::vector<std::size_t> order = detail::order_by_value(p);

  // Groups of indices sharing one prevalence value.
  std::vector<double> unique;
  std::vector<std::size_t> group_start;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (unique.empty() || p[order[r]] != unique.back()) {
      unique.push_back(p[order[r]]);
      group_start.push_back(r);
    }
  }
  group_start.push_back(order.size());

  const double m = static_cast<double>(d.size());
  const std::size_t groups = unique.size();
  std::vector<double> level(groups, 1.0);
  std::size_t below = 0;
  for (std::size_t k = 0; k + 1 < groups; ++k) {
    const double a = unique[k];
    const double b = unique[k + 1];
    while (below < d.size() && d[below] <= a) {
      ++below;
    }
    // Exact integral of the map cdf over [a, b].
    double integral = static_cast<double>(below) * (b - a);
    for (std::size_t i = below; i < d.size() && d[i] < b; ++i) {
      integral += b - d[i];
    }
    level[k] = integral / (m * (b - a));
  }

  ErndResult out;
  std::vector<double> w2(p.size(), 0.0);
  double previous = 0.0;
  for (std::size_t k = 0; k < groups; ++k) {
    double increment = level[k] - previous;
    if (increment < 0.0) {
      increment = 0.0;
      ++out.clamped;
    } else {
      previous = level[k];
    }
    const std::size_t members = group_start[k + 1] - group_start[k];
    for (std::size_t r = group_start[k]; r < group_start[k + 1]; ++r) {
      w2[order[r]] = increment / static_cast<double>(members);
    }
  }
  out.weights = WeightVector::normalized(std::move(w2));
  return out;
}

/// Runs the estimator selected by `config`.
inline ErndResult reweight(const ErndConfig& config, const PrevalenceSamples& pixel,
                           const PrevalenceSamples& sims, std::span<const double> w1) {
  config.validate();
  switch (config.kind) {
    case ErndKind::kDistance: {
      DeltaChoice choice{config.delta, false};
      if (config.auto_delta()) {
        choice = select_delta(sims.span());
      }
      ErndResult out = distance_ernd(pixel, sims, w1, choice.delta, config.continuity, config.tail_start);
      out.delta_fallback = choice.fallback;
      return out;
    }
    case ErndKind::kHistogram:
      return histogram_ernd(pixel, sims, w1, config.bin_edges, config.continuity, config.tail_start);
    case ErndKind::kDiscrepancy:
      return discrepancy_ernd(pixel, sims);
  }
  throw InvalidArgument("unknown ERND kind");
}

}  // namespace lfmap
