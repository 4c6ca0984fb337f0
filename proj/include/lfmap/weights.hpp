#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lfmap/error.hpp"

namespace lfmap {

/// Effective sample size (sum w)^2 / sum w^2 of a set of non-negative weights.
///
/// Invariant under positive rescaling. Throws DegenerateWeights when every
/// weight is zero.
inline double ess(std::span<const double> weights) {
  double total = 0.0;
  double max_weight = 0.0;
  for (double w : weights) {
    detail::require(w >= 0.0 && std::isfinite(w), "weights must be finite and non-negative");
    total += w;
    max_weight = std::max(max_weight, w);
  }
  if (!(total > 0.0)) {
    throw DegenerateWeights("all weights are zero");
  }
  // Scale by the maximum so squares neither overflow nor underflow.
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double w : weights) {
    const double s = w / max_weight;
    sum += s;
    sum_sq += s * s;
  }
  return sum * sum / sum_sq;
}

/// Normalised importance weights together with their effective sample size.
class WeightVector {
 public:
  WeightVector() = default;

  /// Normalises `raw` to sum to one. Throws DegenerateWeights if all are zero.
  static WeightVector normalized(std::vector<double> raw) {
    const double e = lfmap::ess(raw);
    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    for (double& w : raw) {
      w /= total;
    }
    WeightVector out;
    out.weights_ = std::move(raw);
    out.ess_ = e;
    return out;
  }

  /// Uniform weights over `count` entries.
  static WeightVector uniform(std::size_t count) {
    detail::require(count > 0, "uniform weights need at least one entry");
    return normalized(std::vector<double>(count, 1.0));
  }

  const std::vector<double>& weights() const noexcept { return weights_; }
  std::span<const double> span() const noexcept { return weights_; }
  double operator[](std::size_t j) const { return weights_[j]; }
  std::size_t size() const noexcept { return weights_.size(); }
  double ess() const noexcept { return ess_; }

 private:
  std::vector<double> weights_;
  double ess_ = 0.0;
};

/// Where a set of prevalence values came from.
enum class Provenance { kMapPosterior, kSimulationBank };

/// Prevalence values in [0, 1], either map posterior draws or bank outputs.
class PrevalenceSamples {
 public:
  PrevalenceSamples() = default;

  PrevalenceSamples(std::vector<double> values, Provenance provenance)
      : values_(std::move(values)), provenance_(provenance) {
    for (double v : values_) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw InvalidArgument("prevalence value outside [0, 1]: " + std::to_string(v));
      }
    }
    sorted_ = std::is_sorted(values_.begin(), values_.end());
  }

  static PrevalenceSamples map(std::vector<double> values) {
    return {std::move(values), Provenance::kMapPosterior};
  }
  static PrevalenceSamples bank(std::vector<double> values) {
    return {std::move(values), Provenance::kSimulationBank};
  }

  const std::vector<double>& values() const noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  bool is_sorted() const noexcept { return sorted_; }
  Provenance provenance() const noexcept { return provenance_; }

  /// Ascending copy of the values.
  std::vector<double> sorted_values() const {
    std::vector<double> out = values_;
    if (!sorted_) {
      std::sort(out.begin(), out.end());
    }
    return out;
  }

 private:
  std::vector<double> values_;
  Provenance provenance_ = Provenance::kMapPosterior;
  bool sorted_ = true;
};

/// Which empirical Radon-Nikodym derivative estimator to use.
enum class ErndKind { kDistance, kHistogram, kDiscrepancy };

/// Handling of map mass that falls where no simulation exists.
enum class ContinuityMode {
  /// Drop the unmatched map mass, renormalise, and report the dropped fraction.
  kDrop,
  /// Pool everything above `tail_start` into one bin so mass moves onto the
  /// nearest simulated prevalences.
  kTailTransfer,
};

inline std::string to_string(ErndKind kind) {
  switch (kind) {
    case ErndKind::kDistance:
      return "distance";
    case ErndKind::kHistogram:
      return "histogram";
    case ErndKind::kDiscrepancy:
      return "discrepancy";
  }
  return "unknown";
}

inline ErndKind parse_ernd_kind(const std::string& name) {
  if (name == "distance") return ErndKind::kDistance;
  if (name == "histogram") return ErndKind::kHistogram;
  if (name == "discrepancy") return ErndKind::kDiscrepancy;
  throw InvalidArgument("unknown ERND kind '" + name + "'");
}

/// `count` equal-width bin edges over [0, 1].
inline std::vector<double> equal_bins(int count) {
  detail::require(count >= 1, "need at least one bin");
  std::vector<double> edges(static_cast<std::size_t>(count) + 1);
  for (int b = 0; b <= count; ++b) {
    edges[static_cast<std::size_t>(b)] = static_cast<double>(b) / count;
  }
  edges.back() = 1.0;
  return edges;
}

/// Checks that `edges` partition [0, 1] into strictly increasing bins.
inline void validate_bin_edges(std::span<const double> edges) {
  detail::require(edges.size() >= 2, "histogram needs at least one bin");
  detail::require(edges.front() == 0.0 && edges.back() == 1.0, "bin edges must start at 0 and end at 1");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    detail::require(edges[i] > edges[i - 1], "bin edges must be strictly increasing");
  }
}

/// Estimator selection plus its tuning values.
struct ErndConfig {
  ErndKind kind = ErndKind::kDistance;
  /// Window width for the distance estimator; <= 0 selects it automatically.
  double delta = 0.01;
  std::vector<double> bin_edges = equal_bins(100);
  ContinuityMode continuity = ContinuityMode::kDrop;
  double tail_start = 0.75;

  bool auto_delta() const noexcept { return delta <= 0.0; }

  void validate() const {
    if (kind == ErndKind::kHistogram) {
      validate_bin_edges(bin_edges);
    }
    detail::require(std::isfinite(delta), "delta must be finite");
    detail::require(tail_start > 0.0 && tail_start < 1.0, "tail_start must lie in (0, 1)");
  }
};

}  // namespace lfmap
