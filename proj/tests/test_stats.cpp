#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "pdsim/error.hpp"
#include "pdsim/rng.hpp"
#include "pdsim/stats.hpp"

namespace pdsim {
namespace {

// Two populations "A" (neurons 0..3) and "B" (4..5), 0.1 ms ticks.
SpikeTrain make_train(std::uint64_t n_ticks, std::uint64_t warmup) {
  SpikeTrain t;
  t.n_ticks = n_ticks;
  t.warmup_ticks = warmup;
  t.dt = 0.1;
  t.n_neurons = 7;
  t.pops = {{"A", 0, 4, 0}, {"B", 4, 6, 0}};
  return t;
}

TEST(Rates, CountsOnlyAfterWarmup) {
  auto t = make_train(20000, 10000);
  for (std::uint32_t k = 0; k < 20000; k += 100) t.events.push_back({k, 0});  // 100 Hz throughout
  t.events.push_back({50, 5});
  t.canonicalize();
  const auto r = firing_rates(t);
  ASSERT_EQ(r.size(), 2u);
  ASSERT_EQ(r[0].size(), 4u);
  EXPECT_DOUBLE_EQ(r[0][0], 100.0);
  EXPECT_EQ(r[0][1], 0.0);
  EXPECT_EQ(r[1][1], 0.0);  // its one spike is inside warm-up
}

TEST(Cv, PeriodicIsZeroAndWorkedExample) {
  auto t = make_train(1000, 0);
  for (std::uint32_t k = 0; k < 1000; k += 50) t.events.push_back({k, 1});
  for (std::uint32_t k : {0u, 10u, 40u}) t.events.push_back({k, 4});  // ISIs 1 ms and 3 ms
  t.events.push_back({5, 5});
  t.events.push_back({15, 5});  // two spikes: excluded
  t.canonicalize();
  const auto cv = cv_isi(t);
  ASSERT_EQ(cv[0].size(), 1u);
  EXPECT_NEAR(cv[0][0], 0.0, 1e-12);
  ASSERT_EQ(cv[1].size(), 1u);
  EXPECT_NEAR(cv[1][0], std::sqrt(2.0) / 2.0, 1e-12);
}

TEST(Cv, MatchesDirectComputation) {
  auto t = make_train(100000, 20000);
  Rng rng(3, StreamTag::test);
  for (std::uint32_t k = 0; k < 100000; ++k)
    if (rng.uniform() < 0.01) t.events.push_back({k, 2});
  const auto cv = cv_isi(t);
  std::vector<double> isi;
  std::uint32_t prev = 0;
  bool have = false;
  for (const auto& e : t.events) {
    if (e.tick < 20000) continue;
    if (have) isi.push_back((e.tick - prev) * 0.1);
    prev = e.tick;
    have = true;
  }
  const double m = std::accumulate(isi.begin(), isi.end(), 0.0) / isi.size();
  double ss = 0;
  for (double x : isi) ss += (x - m) * (x - m);
  ASSERT_EQ(cv[0].size(), 1u);
  EXPECT_NEAR(cv[0][0], std::sqrt(ss / (isi.size() - 1)) / m, 1e-12);
  EXPECT_NEAR(cv[0][0], 1.0, 0.05);  // geometric ISIs
}

TEST(Pearson, IdenticalAndOpposedTrains) {
  auto t = make_train(4000, 0);
  for (std::uint32_t b = 0; b < 200; ++b) {
    const std::uint32_t tick = b * 20 + 3;
    if (b % 2 == 0) {
      t.events.push_back({tick, 4});
      t.events.push_back({tick, 5});
    }
  }
  for (std::uint32_t b = 0; b < 200; ++b) {
    t.events.push_back({b * 20 + 1, b % 2 ? 0u : 1u});
    if (b % 3 == 0) t.events.push_back({b * 20 + 2, 2});
  }
  t.canonicalize();
  std::vector<std::string> warnings;
  const auto p = pearson_binned(t, 2.0, 200, 0, &warnings);
  ASSERT_EQ(p[1].size(), 1u);
  EXPECT_DOUBLE_EQ(p[1][0], 1.0);
  // Neuron 3 never fires and is dropped: pairs (0,1), (0,2), (1,2).
  ASSERT_EQ(p[0].size(), 3u);
  EXPECT_DOUBLE_EQ(p[0][0], -1.0);
  EXPECT_EQ(warnings.size(), 2u);
  EXPECT_THROW(pearson_binned(t, 0.25, 10, 0), Error);
  EXPECT_THROW(pearson_binned(t, 0.0, 10, 0), Error);
}

TEST(Pearson, MatchesDirectComputationAndDropsPartialBin) {
  auto t = make_train(1005, 0);  // 50 whole bins of 20 ticks, 5 ticks left over
  Rng rng(9, StreamTag::test);
  for (std::uint32_t k = 0; k < 1005; ++k)
    for (std::uint32_t n = 0; n < 4; ++n)
      if (rng.uniform() < 0.05 || (k >= 1000 && n < 2)) t.events.push_back({k, n});
  t.canonicalize();
  std::vector<std::vector<double>> bins(4, std::vector<double>(50, 0.0));
  for (const auto& e : t.events)
    if (e.neuron < 4 && e.tick < 1000) bins[e.neuron][e.tick / 20] += 1;
  auto corr = [&](int a, int b) {
    const double ma = std::accumulate(bins[a].begin(), bins[a].end(), 0.0) / 50;
    const double mb = std::accumulate(bins[b].begin(), bins[b].end(), 0.0) / 50;
    double sab = 0, saa = 0, sbb = 0;
    for (int i = 0; i < 50; ++i) {
      sab += (bins[a][i] - ma) * (bins[b][i] - mb);
      saa += (bins[a][i] - ma) * (bins[a][i] - ma);
      sbb += (bins[b][i] - mb) * (bins[b][i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
  };
  const auto p = pearson_binned(t, 2.0, 4, 0);
  ASSERT_EQ(p[0].size(), 6u);
  std::size_t k = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) EXPECT_NEAR(p[0][k++], corr(a, b), 1e-12);
}

TEST(Pearson, SampleIsSeeded) {
  SpikeTrain t;
  t.n_ticks = 2000;
  t.dt = 0.1;
  t.n_neurons = 101;
  t.pops = {{"A", 0, 100, 0}};
  Rng rng(2, StreamTag::test);
  for (std::uint32_t k = 0; k < 2000; ++k)
    for (std::uint32_t n = 0; n < 100; ++n)
      if (rng.uniform() < 0.02) t.events.push_back({k, n});
  const auto a = pearson_binned(t, 2.0, 10, 1);
  EXPECT_EQ(a[0].size(), 45u);
  EXPECT_EQ(pearson_binned(t, 2.0, 10, 1), a);
  EXPECT_NE(pearson_binned(t, 2.0, 10, 2), a);
}

std::vector<double> normal_sample(std::uint64_t seed, std::size_t n, double mean, double sd) {
  Rng rng(seed, StreamTag::test);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal({mean, sd});
  return v;
}

TEST(Kde, NormalisedWithScottBandwidth) {
  const auto s = normal_sample(1, 5000, 2.0, 0.5);
  const auto k = kde(s);
  EXPECT_EQ(k.grid.size(), 512u);
  EXPECT_NEAR(k.integral(), 1.0, 1e-12);
  const double m = std::accumulate(s.begin(), s.end(), 0.0) / s.size();
  double ss = 0;
  for (double x : s) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / (s.size() - 1));
  EXPECT_NEAR(k.bandwidth, sd * std::pow(5000.0, -0.2), 1e-12);
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  EXPECT_NEAR(k.grid.front(), *lo - 3 * k.bandwidth, 1e-12);
  EXPECT_NEAR(k.grid.back(), *hi + 3 * k.bandwidth, 1e-12);
  double mean = 0;
  for (std::size_t i = 0; i < k.grid.size(); ++i) mean += k.grid[i] * k.density[i] * k.spacing();
  EXPECT_NEAR(mean, m, 1e-3);
  for (std::size_t g : {0u, 100u, 256u, 400u, 511u}) {
    const double x = k.grid[g];
    double direct = 0;
    for (double xi : s) direct += std::exp(-0.5 * std::pow((x - xi) / k.bandwidth, 2));
    direct /= s.size() * k.bandwidth * std::sqrt(2 * M_PI);
    EXPECT_NEAR(k.density[g], direct, 1e-6 * direct + 1e-12) << g;
    EXPECT_NEAR(k.at(x), k.density[g], 1e-12);
  }
  EXPECT_EQ(k.at(1e6), 0.0);
}

TEST(Kde, SymmetricSampleGivesSymmetricCurve) {
  const std::vector<double> s = {-2, -1, -0.5, 0.5, 1, 2};
  const auto k = kde(s, 101);
  for (std::size_t i = 0; i < 101; ++i) EXPECT_NEAR(k.density[i], k.density[100 - i], 1e-12);
  EXPECT_THROW(kde(std::vector<double>{1.0}), Error);
  EXPECT_THROW(kde(std::vector<double>{3.0, 3.0, 3.0}), Error);
}

TEST(Kl, SelfIsZeroAndGaussianShiftIsHalf) {
  const auto p = kde(normal_sample(1, 100000, 0.0, 1.0));
  const auto q = kde(normal_sample(2, 100000, 1.0, 1.0));
  EXPECT_NEAR(kl_divergence(p, p), 0.0, 1e-12);
  const double kl = kl_divergence(p, q);
  EXPECT_NEAR(kl, 0.5, 0.05);
  EXPECT_GT(kl_divergence(q, p), 0.4);
}

TEST(Kl, DisjointSupportsStayFinite) {
  const auto p = kde(std::vector<double>{0.0, 0.1, 0.2});
  const auto q = kde(std::vector<double>{100.0, 100.1, 100.2});
  const double kl = kl_divergence(p, q);
  EXPECT_TRUE(std::isfinite(kl));
  EXPECT_GT(kl, 10.0);
}

SpikeTrain busy_train(std::uint64_t seed) {
  auto t = make_train(20000, 2000);
  Rng rng(seed, StreamTag::test);
  for (std::uint32_t k = 0; k < 20000; ++k)
    for (std::uint32_t n = 0; n < 6; ++n)
      if (rng.uniform() < 0.003 * (n + 1)) t.events.push_back({k, n});
  return t;
}

TEST(Report, DegenerateSamplesHaveNoDensity) {
  auto t = make_train(20000, 0);
  t.events.push_back({10, 0});
  const auto r = compute_stats(t, {});
  ASSERT_EQ(r.pops.size(), 2u);
  EXPECT_TRUE(r.pops[0].kde[0].has_value());  // one rate differs from the rest
  EXPECT_FALSE(r.pops[0].kde[1].has_value());
  EXPECT_FALSE(r.pops[0].kde[2].has_value());
  for (const auto& k : r.pops[1].kde) EXPECT_FALSE(k.has_value());
  EXPECT_EQ(r.warnings.size(), 7u);  // 2 sample clips, 5 missing densities
  const auto table = compare_runs(r, r);
  EXPECT_TRUE(table.values[0][0].has_value());
  EXPECT_FALSE(table.values[1][0].has_value());
  EXPECT_FALSE(table.median(1).has_value());
}

TEST(Report, JsonRoundTripAndSelfComparison) {
  const auto t = busy_train(1);
  const auto r = compute_stats(t, {}, {7, 0.1, "gmem", "mono", "f32", "poisson"});
  ASSERT_TRUE(r.pops[0].kde[0].has_value());
  const auto text = report_to_json(r);
  EXPECT_NE(text.find("\"stats_version\""), std::string::npos);
  const auto back = report_from_json(text);
  EXPECT_EQ(back.run.algorithm, "gmem");
  EXPECT_EQ(back.pops.size(), 2u);
  EXPECT_EQ(back.pops[0].samples[0], r.pops[0].samples[0]);
  EXPECT_EQ(back.pops[1].kde[0]->density, r.pops[1].kde[0]->density);
  EXPECT_EQ(back.pops[1].kde[0]->grid.front(), r.pops[1].kde[0]->grid.front());
  EXPECT_EQ(back.pops[1].kde[0]->grid.back(), r.pops[1].kde[0]->grid.back());
  EXPECT_EQ(back.warnings, r.warnings);

  const auto self = compare_runs(r, back);
  for (const auto& row : self.values)
    for (const auto& v : row)
      if (v) EXPECT_NEAR(*v, 0.0, 1e-12);
  EXPECT_NE(kl_table_to_json(self).find("\"median\""), std::string::npos);

  const auto other = compute_stats(busy_train(2), {});
  const auto kl = compare_runs(r, other);
  ASSERT_TRUE(kl.median(0).has_value());
  EXPECT_GT(*kl.median(0), 0.0);
}

TEST(Report, RejectsMismatchesAndBadJson) {
  const auto r = compute_stats(busy_train(1), {});
  auto other = r;
  other.options.bin_ms = 5.0;
  EXPECT_THROW(compare_runs(r, other), Error);
  other = r;
  other.pops[1].name = "C";
  EXPECT_THROW(compare_runs(r, other), Error);
  for (const char* bad : {"", "{", "[]", "{\"stats_version\": 2}", "{\"stats_version\": 1}"}) {
    try {
      report_from_json(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::format) << bad;
    }
  }
}

TEST(Report, OutOfRangeNeuronIsAFormatError) {
  auto t = make_train(100, 0);
  t.events.push_back({3, 42});
  try {
    compute_stats(t, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::format);
  }
}

TEST(KlTable, MedianSkipsMissing) {
  KlTable t;
  t.pops = {"a", "b", "c", "d"};
  t.values = {{1.0, std::nullopt, 0.0}, {3.0, std::nullopt, 0.0}, {2.0, 5.0, 0.0}, {std::nullopt, 1.0, 0.0}};
  EXPECT_DOUBLE_EQ(*t.median(0), 2.0);
  EXPECT_DOUBLE_EQ(*t.median(1), 3.0);
}

}  // namespace
}  // namespace pdsim
