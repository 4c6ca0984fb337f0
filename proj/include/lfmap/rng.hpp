#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lfmap {

/// Engine used by every stochastic component.
using Engine = std::mt19937_64;

/// SplitMix64 finaliser; a bijective avalanche on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31U);
}

/// Stream labels keep substreams of one task apart.
enum class Stream : std::uint64_t {
  kBank = 1,
  kEquilibrium = 2,
  kScenario = 3,
  kToyDraws = 4,
  kToyPixel = 5,
  kPilot = 6,
  kSynthetic = 7,
};

/// Derives a child seed from a master seed and an index path.
///
/// Results depend only on the arguments, so any task can be reseeded in
/// isolation regardless of the order in which tasks are scheduled.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    Stream stream = Stream::kBank) noexcept {
  return mix64(mix64(master ^ mix64(static_cast<std::uint64_t>(stream))) + index);
}

inline Engine make_engine(std::uint64_t master, std::uint64_t index,
                          Stream stream = Stream::kBank) {
  return Engine{derive_seed(master, index, stream)};
}

/// Uniform draw on the open interval (0, 1).
template <class Rng>
double open_unit(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  while (x <= 0.0) {
    x = u(rng);
  }
  return x;
}

/// Poisson draw; inversion for small means, library sampler otherwise.
template <class Rng>
long poisson(Rng& rng, double mean) {
  if (mean <= 0.0) {
    return 0;
  }
  if (mean < 30.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double p = std::exp(-mean);
    double cdf = p;
    const double target = u(rng);
    long k = 0;
    while (target > cdf && k < 1000) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }
  std::poisson_distribution<long> dist(mean);
  return dist(rng);
}

/// Binomial draw with the degenerate cases handled exactly.
template <class Rng>
int binomial(Rng& rng, int trials, double p) {
  if (trials <= 0 || p <= 0.0) {
    return 0;
  }
  if (p >= 1.0) {
    return trials;
  }
  std::binomial_distribution<int> dist(trials, p);
  return dist(rng);
}

}  // namespace lfmap
