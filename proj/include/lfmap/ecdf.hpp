#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "lfmap/error.hpp"

namespace lfmap {

/// Right-continuous step cdf of a weighted sample.
///
/// Stored as distinct ascending jump locations with the cumulative mass at
/// each. Total mass is normalised to one.
class WeightedCdf {
 public:
  WeightedCdf() = default;

  /// Empirical cdf with equal mass on every value.
  static WeightedCdf from_samples(std::span<const double> values) {
    std::vector<double> w(values.size(), 1.0);
    return from_weighted(values, w);
  }

  static WeightedCdf from_weighted(std::span<const double> values, std::span<const double> weights) {
    detail::require(values.size() == weights.size(), "values and weights differ in length");
    detail::require(!values.empty(), "cdf of an empty sample");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double total = 0.0;
    for (double w : weights) {
      detail::require(w >= 0.0, "negative weight in cdf");
      total += w;
    }
    detail::require(total > 0.0, "cdf with zero total mass");

    WeightedCdf cdf;
    double running = 0.0;
    for (std::size_t idx : order) {
      running += weights[idx];
      if (!cdf.points_.empty() && cdf.points_.back() == values[idx]) {
        cdf.cumulative_.back() = running / total;
      } else {
        cdf.points_.push_back(values[idx]);
        cdf.cumulative_.push_back(running / total);
      }
    }
    cdf.cumulative_.back() = 1.0;
    return cdf;
  }

  const std::vector<double>& points() const noexcept { return points_; }
  const std::vector<double>& cumulative() const noexcept { return cumulative_; }

  /// F(x) = mass at values <= x.
  double operator()(double x) const {
    auto it = std::upper_bound(points_.begin(), points_.end(), x);
    if (it == points_.begin()) {
      return 0.0;
    }
    return cumulative_[static_cast<std::size_t>(it - points_.begin()) - 1];
  }

 private:
  std::vector<double> points_;
  std::vector<double> cumulative_;
};

namespace detail {

/// Calls `visit(x, F(x), H(x))` at every jump of either cdf in ascending order.
template <class Visit>
void merge_jumps(const WeightedCdf& f, const WeightedCdf& h, Visit&& visit) {
  const auto& fp = f.points();
  const auto& hp = h.points();
  std::size_t i = 0;
  std::size_t j = 0;
  double fv = 0.0;
  double hv = 0.0;
  while (i < fp.size() || j < hp.size()) {
    double x;
    if (j >= hp.size() || (i < fp.size() && fp[i] <= hp[j])) {
      x = fp[i];
    } else {
      x = hp[j];
    }
    if (i < fp.size() && fp[i] == x) {
      fv = f.cumulative()[i++];
    }
    if (j < hp.size() && hp[j] == x) {
      hv = h.cumulative()[j++];
    }
    visit(x, fv, hv);
  }
}

}  // namespace detail

/// Kolmogorov-Smirnov distance sup_x |F(x) - H(x)| between two step cdfs.
inline double ks_distance(const WeightedCdf& f, const WeightedCdf& h) {
  double best = 0.0;
  detail::merge_jumps(f, h, [&](double, double fv, double hv) {
    best = std::max(best, std::abs(fv - hv));
  });
  return best;
}

/// Exact integral of (F - H)^2 over [0, 1] for two step cdfs.
inline double integrated_squared_distance(const WeightedCdf& f, const WeightedCdf& h) {
  double total = 0.0;
  double prev_x = 0.0;
  double prev_diff = 0.0;
  detail::merge_jumps(f, h, [&](double x, double fv, double hv) {
    const double lo = std::clamp(prev_x, 0.0, 1.0);
    const double hi = std::clamp(x, 0.0, 1.0);
    total += (hi - lo) * prev_diff * prev_diff;
    prev_x = x;
    prev_diff = fv - hv;
  });
  const double lo = std::clamp(prev_x, 0.0, 1.0);
  total += (1.0 - lo) * prev_diff * prev_diff;
  return total;
}

/// KS distance between a step cdf and a continuous cdf `reference`.
///
/// Both one-sided limits are checked at every jump.
template <class Cdf>
double ks_distance_to(const WeightedCdf& h, Cdf&& reference) {
  double best = 0.0;
  double below = 0.0;
  for (std::size_t i = 0; i < h.points().size(); ++i) {
    const double c = reference(h.points()[i]);
    best = std::max({best, std::abs(below - c), std::abs(h.cumulative()[i] - c)});
    below = h.cumulative()[i];
  }
  return best;
}

/// Weighted mean of `values`.
inline double weighted_mean(std::span<const double> values, std::span<const double> weights) {
  detail::require(values.size() == weights.size(), "values and weights differ in length");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    num += weights[j] * values[j];
    den += weights[j];
  }
  detail::require(den > 0.0, "weighted mean with zero total weight");
  return num / den;
}

}  // namespace lfmap
