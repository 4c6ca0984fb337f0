#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "lfmap/ecdf.hpp"
#include "lfmap/ernd.hpp"
#include "lfmap/weights.hpp"
#include "support/oracles.hpp"

using namespace lfmap;

namespace {

std::vector<double> uniform_values(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST(Ess, HandExamples) {
  EXPECT_DOUBLE_EQ(ess(std::vector<double>(7, 0.3)), 7.0);
  EXPECT_DOUBLE_EQ(ess(std::vector<double>{1, 0, 0, 0}), 1.0);
  EXPECT_NEAR(ess(std::vector<double>{1, 1, 2}), 16.0 / 6.0, 1e-15);
}

TEST(Ess, ScaleInvariant) {
  std::mt19937_64 rng(3);
  const auto w = uniform_values(rng, 50);
  for (double c : {1e-200, 1e-3, 7.0, 1e250}) {
    auto scaled = w;
    for (double& x : scaled) x *= c;
    EXPECT_NEAR(ess(scaled), ess(w), 1e-12 * ess(w));
  }
}

TEST(Ess, RejectsDegenerateAndNegative) {
  EXPECT_THROW(ess(std::vector<double>{0, 0}), DegenerateWeights);
  EXPECT_THROW(ess(std::vector<double>{1, -1}), InvalidArgument);
}

TEST(WeightVector, NormalisesAndKeepsEss) {
  const auto w = WeightVector::normalized({1, 1, 2});
  EXPECT_NEAR(sum(w.span()), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(w[2], 0.5);
  double sq = 0.0;
  for (double x : w.weights()) sq += x * x;
  EXPECT_NEAR(w.ess(), 1.0 / sq, 1e-12);
}

TEST(PrevalenceSamples, RejectsValuesOutsideUnitInterval) {
  EXPECT_THROW(PrevalenceSamples::map({0.2, 1.2}), InvalidArgument);
  EXPECT_THROW(PrevalenceSamples::bank({-0.1}), InvalidArgument);
  EXPECT_NO_THROW(PrevalenceSamples::map({0.0, 1.0}));
}

TEST(Stage1, PriorEqualsProposalGivesEqualWeights) {
  std::vector<double> thetas{0.1, 0.4, 0.7};
  auto w = stage1_weights(std::span<const double>(thetas), [](double) { return 3.0; }, [](double) { return 3.0; });
  for (double x : w) EXPECT_DOUBLE_EQ(x, 1.0);
}

TEST(Stage1, DirectRatio) {
  std::vector<double> thetas{0.0};
  auto w = stage1_weights(std::span<const double>(thetas), [](double) { return 0.5; }, [](double) { return 0.25; });
  EXPECT_DOUBLE_EQ(w[0], 2.0);
}

TEST(Stage1, TrianglePriorOverUnitSquare) {
  struct P {
    double a, b;
  };
  std::vector<P> thetas{{0.6, 0.2}, {0.2, 0.6}, {0.9, 0.89}, {0.3, 0.5}};
  auto w = stage1_weights(
      std::span<const P>(thetas), [](const P& t) { return (0 < t.b && t.b < t.a && t.a < 1) ? 2.0 : 0.0; },
      [](const P&) { return 1.0; });
  EXPECT_EQ(w, (std::vector<double>{2.0, 0.0, 2.0, 0.0}));
}

TEST(Stage1, SupportViolationIsReported) {
  std::vector<double> thetas{0.5};
  EXPECT_THROW(
      stage1_weights(std::span<const double>(thetas), [](double) { return 1.0; }, [](double) { return 0.0; }),
      SupportViolation);
}

TEST(Distance, HandExample) {
  const auto pixel = PrevalenceSamples::map({0.1, 0.1, 0.1, 0.5});
  const auto sims = PrevalenceSamples::bank({0.1, 0.5, 0.9});
  const auto r = distance_ernd(pixel, sims, std::vector<double>(3, 1.0), 0.2);
  EXPECT_NEAR(r.weights[0], 0.75, 1e-15);
  EXPECT_NEAR(r.weights[1], 0.25, 1e-15);
  EXPECT_EQ(r.weights[2], 0.0);
  EXPECT_EQ(r.dropped_mass, 0.0);
}

TEST(Distance, ClosedWindowIncludesEndpoints) {
  // 0.25 sits exactly on the edge of both windows.
  const auto pixel = PrevalenceSamples::map({0.25});
  const auto sims = PrevalenceSamples::bank({0.0, 0.5});
  const auto r = distance_ernd(pixel, sims, std::vector<double>(2, 1.0), 0.5);
  EXPECT_NEAR(r.weights[0], 0.5, 1e-15);
  EXPECT_NEAR(r.weights[1], 0.5, 1e-15);
}

TEST(Distance, IdenticalSamplesStayNearUniformAwayFromEdges) {
  std::vector<double> grid;
  for (int i = 0; i < 200; ++i) grid.push_back((i + 0.5) / 200.0);
  const auto r = distance_ernd(PrevalenceSamples::map(grid), PrevalenceSamples::bank(grid),
                               std::vector<double>(grid.size(), 1.0), 0.05);
  for (double w : r.weights.weights()) EXPECT_NEAR(w, 1.0 / 200.0, 1e-12);
}

TEST(Distance, ReportsDroppedMass) {
  const auto pixel = PrevalenceSamples::map({0.1, 0.9, 0.95, 0.97});
  const auto sims = PrevalenceSamples::bank({0.1, 0.12, 0.2});
  const auto r = distance_ernd(pixel, sims, std::vector<double>(3, 1.0), 0.05);
  EXPECT_DOUBLE_EQ(r.dropped_mass, 0.75);
}

TEST(Distance, TailTransferMovesHighMassOntoTheTailBin) {
  const auto pixel = PrevalenceSamples::map({0.1, 0.9, 0.95, 0.97});
  const auto sims = PrevalenceSamples::bank({0.1, 0.8});
  const auto r = distance_ernd(pixel, sims, std::vector<double>(2, 1.0), 0.05, ContinuityMode::kTailTransfer, 0.75);
  EXPECT_NEAR(r.weights[0], 0.25, 1e-15);
  EXPECT_NEAR(r.weights[1], 0.75, 1e-15);
  EXPECT_EQ(r.dropped_mass, 0.0);
}

TEST(Distance, ZeroStage1WeightStaysZero) {
  const auto pixel = PrevalenceSamples::map({0.1, 0.2});
  const auto sims = PrevalenceSamples::bank({0.1, 0.11, 0.2});
  const auto r = distance_ernd(pixel, sims, std::vector<double>{1.0, 0.0, 1.0}, 0.05);
  EXPECT_EQ(r.weights[1], 0.0);
  EXPECT_NEAR(sum(r.weights.span()), 1.0, 1e-12);
}

TEST(Distance, KsShrinksWithSampleSize) {
  std::mt19937_64 rng(11);
  auto run = [&](std::size_t n) {
    std::gamma_distribution<double> ga(2.0, 1.0), gb(5.0, 1.0);
    auto draw = [&] {
      const double a = ga(rng);
      return a / (a + gb(rng));
    };
    std::vector<double> map(n), sims(n);
    for (double& x : map) x = draw();
    for (double& x : sims) x = draw();
    const auto r = reweight({.kind = ErndKind::kDistance, .delta = 0.0}, PrevalenceSamples::map(map),
                            PrevalenceSamples::bank(sims), std::vector<double>(n, 1.0));
    return oracle::ks(map, oracle::ones(n), sims, r.weights.weights());
  };
  double small = 0.0, large = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    small += run(200);
    large += run(2000);
  }
  EXPECT_LT(large, small);
}

TEST(Histogram, HandExample) {
  const auto r = histogram_ernd(PrevalenceSamples::map({0.25, 0.25, 0.25, 0.75}), PrevalenceSamples::bank({0.25, 0.75}),
                                std::vector<double>(2, 1.0), equal_bins(2));
  EXPECT_NEAR(r.weights[0], 0.75, 1e-15);
  EXPECT_NEAR(r.weights[1], 0.25, 1e-15);
}

TEST(Histogram, SingleBinReturnsStage1) {
  const std::vector<double> w1{1.0, 3.0, 4.0};
  const auto r = histogram_ernd(PrevalenceSamples::map({0.9}), PrevalenceSamples::bank({0.1, 0.2, 0.3}), w1,
                                equal_bins(1));
  EXPECT_NEAR(r.weights[0], 0.125, 1e-15);
  EXPECT_NEAR(r.weights[1], 0.375, 1e-15);
  EXPECT_NEAR(r.weights[2], 0.5, 1e-15);
}

TEST(Histogram, ReproducesMapBinMasses) {
  std::mt19937_64 rng(5);
  const auto edges = equal_bins(20);
  for (int rep = 0; rep < 50; ++rep) {
    const auto map = uniform_values(rng, 300);
    const auto sims = uniform_values(rng, 500);
    const auto w1 = uniform_values(rng, 500);
    const auto r = histogram_ernd(PrevalenceSamples::map(map), PrevalenceSamples::bank(sims), w1, edges);
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
      auto in = [&](double x) { return x >= edges[b] && (x < edges[b + 1] || (b + 2 == edges.size() && x <= 1.0)); };
      double sim_mass = 0.0, map_mass = 0.0;
      for (std::size_t j = 0; j < sims.size(); ++j) sim_mass += in(sims[j]) ? r.weights[j] : 0.0;
      for (double x : map) map_mass += in(x) ? 1.0 / map.size() : 0.0;
      if (r.dropped_mass == 0.0) {
        EXPECT_NEAR(sim_mass, map_mass, 1e-12);
      }
    }
  }
}

TEST(Histogram, EmptySimulationBinIsDropped) {
  const auto r = histogram_ernd(PrevalenceSamples::map({0.1, 0.9}), PrevalenceSamples::bank({0.1, 0.2}),
                                std::vector<double>(2, 1.0), equal_bins(2));
  EXPECT_DOUBLE_EQ(r.dropped_mass, 0.5);
  EXPECT_NEAR(sum(r.weights.span()), 1.0, 1e-12);
}

TEST(Histogram, RejectsBadEdges) {
  EXPECT_THROW(validate_bin_edges(std::vector<double>{0.0, 0.5, 0.5, 1.0}), InvalidArgument);
  EXPECT_THROW(validate_bin_edges(std::vector<double>{0.1, 1.0}), InvalidArgument);
}

TEST(Discrepancy, SameMultisetGivesZeroIsd) {
  const std::vector<double> v{0.1, 0.3, 0.3, 0.8};
  const auto r = discrepancy_ernd(PrevalenceSamples::map(v), PrevalenceSamples::bank(v));
  EXPECT_NEAR(oracle::isd(v, oracle::ones(4), v, r.weights.weights()), 0.0, 1e-15);
  // The tied pair shares its increment equally.
  EXPECT_DOUBLE_EQ(r.weights[1], r.weights[2]);
}

TEST(Discrepancy, MatchesExactSimplexMinimiser) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 40; ++rep) {
    const auto sims = uniform_values(rng, 5);
    const auto map = uniform_values(rng, 10);
    const auto r = discrepancy_ernd(PrevalenceSamples::map(map), PrevalenceSamples::bank(sims));
    const auto best = oracle::simplex_isd_minimiser(map, sims);
    const double got = oracle::isd(map, oracle::ones(10), sims, r.weights.weights());
    const double want = oracle::isd(map, oracle::ones(10), sims, best);
    EXPECT_NEAR(got, want, 1e-9);
    EXPECT_EQ(r.clamped, 0);
  }
}

TEST(Discrepancy, BeatsRandomSimplexPoints) {
  std::mt19937_64 rng(23);
  std::exponential_distribution<double> e(1.0);
  const auto sims = uniform_values(rng, 6);
  const auto map = uniform_values(rng, 12);
  const auto r = discrepancy_ernd(PrevalenceSamples::map(map), PrevalenceSamples::bank(sims));
  const double best = oracle::isd(map, oracle::ones(12), sims, r.weights.weights());
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> w(6);
    for (double& x : w) x = e(rng);
    EXPECT_LE(best, oracle::isd(map, oracle::ones(12), sims, w) + 1e-9);
  }
}

TEST(SelectDelta, HandExamples) {
  EXPECT_NEAR(select_delta(std::vector<double>{0.1, 0.2, 0.4}).delta, 0.6, 1e-15);
  const auto degenerate = select_delta(std::vector<double>{0.3, 0.3, 0.3});
  EXPECT_TRUE(degenerate.fallback);
  EXPECT_EQ(degenerate.delta, kDeltaFallback);
  EXPECT_THROW(select_delta(std::vector<double>{0.1, 0.2}), InvalidArgument);
}

TEST(SelectDelta, EqualGridGivesFourSteps) {
  for (int n : {5, 17, 101}) {
    std::vector<double> grid;
    for (int i = 0; i < n; ++i) grid.push_back(i * 0.25 / 64.0);  // step is a power of two
    EXPECT_EQ(select_delta(grid).delta, 4.0 * 0.25 / 64.0);
  }
}

TEST(SelectDelta, EveryPointHasThreeInWindow) {
  std::mt19937_64 rng(29);
  for (int rep = 0; rep < 30; ++rep) {
    const auto p = uniform_values(rng, 3 + rep * 7);
    const double half = select_delta(p).delta / 2.0;
    for (double x : p) {
      const auto count = std::count_if(p.begin(), p.end(), [&](double y) { return std::abs(x - y) <= half; });
      EXPECT_GE(count, 3);
    }
  }
}

TEST(Ecdf, KsExamples) {
  const auto zero = WeightedCdf::from_samples(std::vector<double>{0.0});
  const auto one = WeightedCdf::from_samples(std::vector<double>{1.0});
  const auto half = WeightedCdf::from_samples(std::vector<double>{0.5});
  const auto pair = WeightedCdf::from_samples(std::vector<double>{0.2, 0.8});
  EXPECT_EQ(ks_distance(zero, zero), 0.0);
  EXPECT_EQ(ks_distance(zero, one), 1.0);
  EXPECT_EQ(ks_distance(pair, half), 0.5);
}

TEST(Ecdf, IsdExamples) {
  const auto zero = WeightedCdf::from_samples(std::vector<double>{0.0});
  const auto one = WeightedCdf::from_samples(std::vector<double>{1.0});
  const auto half = WeightedCdf::from_samples(std::vector<double>{0.5});
  EXPECT_EQ(integrated_squared_distance(zero, zero), 0.0);
  EXPECT_DOUBLE_EQ(integrated_squared_distance(zero, one), 1.0);
  EXPECT_DOUBLE_EQ(integrated_squared_distance(zero, half), 0.5);
}

TEST(Ecdf, AgreesWithBruteForce) {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    const auto a = uniform_values(rng, 20);
    const auto b = uniform_values(rng, 15);
    const auto wb = uniform_values(rng, 15);
    const auto fa = WeightedCdf::from_samples(a);
    const auto fb = WeightedCdf::from_weighted(b, wb);
    EXPECT_NEAR(ks_distance(fa, fb), oracle::ks(a, oracle::ones(20), b, wb), 1e-14);
    EXPECT_NEAR(integrated_squared_distance(fa, fb), oracle::isd(a, oracle::ones(20), b, wb), 1e-14);
  }
}

TEST(Ernd, OutputsAreProbabilityVectors) {
  std::mt19937_64 rng(37);
  for (auto kind : {ErndKind::kDistance, ErndKind::kHistogram, ErndKind::kDiscrepancy}) {
    for (int rep = 0; rep < 10; ++rep) {
      const auto map = uniform_values(rng, 100);
      const auto sims = uniform_values(rng, 150);
      ErndConfig config{.kind = kind, .delta = 0.0};
      const auto r = reweight(config, PrevalenceSamples::map(map), PrevalenceSamples::bank(sims),
                              std::vector<double>(150, 1.0));
      for (double w : r.weights.weights()) EXPECT_GE(w, 0.0);
      EXPECT_NEAR(sum(r.weights.span()), 1.0, 1e-12);
      EXPECT_GE(r.weights.ess(), 1.0);
      EXPECT_LE(r.weights.ess(), 150.0 + 1e-9);
    }
  }
}

TEST(Ernd, KindNamesRoundTrip) {
  for (auto kind : {ErndKind::kDistance, ErndKind::kHistogram, ErndKind::kDiscrepancy}) {
    EXPECT_EQ(parse_ernd_kind(to_string(kind)), kind);
  }
  EXPECT_THROW(parse_ernd_kind("kernel"), InvalidArgument);
}
