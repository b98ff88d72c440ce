#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "pdsim/error.hpp"
#include "pdsim/netgen.hpp"
#include "pdsim/rng.hpp"
#include "support/test_nets.hpp"

namespace pdsim {
namespace {

TEST(Counts, WorkedExample) {
  const auto counts = sample_synapse_counts(default_model(), 1.0);
  EXPECT_EQ(counts[1][4], static_cast<std::uint64_t>(std::llround(5834.0 * 4850.0 * 0.0755)));
  EXPECT_NEAR(static_cast<double>(counts[1][4]), 2e6, 0.15e6);
}

TEST(Counts, ZeroProbabilityAndToy) {
  const auto m = default_model();
  const auto counts = sample_synapse_counts(m, 1.0);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c)
      if (m.conn.p[r][c] == 0.0) EXPECT_EQ(counts[r][c], 0u);
  EXPECT_EQ(sample_synapse_counts(testing::tiny_model({10, 10}, 1.0), 1.0)[0][1], 100u);
}

TEST(Counts, ScaledSizes) {
  const auto sizes = scaled_sizes(default_model(), 1.0);
  EXPECT_EQ(std::accumulate(sizes.begin(), sizes.end(), 0u), 77169u);
  const auto half = scaled_sizes(default_model(), 0.5);
  EXPECT_EQ(half[0], 10342u);  // round(10341.5)
  EXPECT_THROW(sample_synapse_counts(default_model(), 0.0), Error);
}

TEST(Generate, SingleSynapseNetwork) {
  auto m = testing::tiny_model({1, 1}, 0.0);
  m.conn.p[0][1] = 1.0;
  const Network net = generate(m, {1.0, 5, 1, 1});
  EXPECT_EQ(net.n_neurons, 3u);
  EXPECT_EQ(net.store.real_count(), 1u);
  const auto s = net.store.syns_from(0);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].target(), 1u);
  EXPECT_EQ(s[0].delay(), 15u);
  EXPECT_FLOAT_EQ(s[0].weight, static_cast<float>(0.15 * net.coeffs.w_f));
  EXPECT_TRUE(net.store.syns_from(1).empty());
}

TEST(Generate, Deterministic) {
  const GenerationOptions o{0.02, 9, 4, 1};
  const Network a = generate(default_model(), o);
  const Network b = generate(default_model(), o);
  EXPECT_TRUE(a == b);
  const Network c = generate(default_model(), {0.02, 10, 4, 1});
  EXPECT_FALSE(a.store == c.store);
}

TEST(Generate, PopulationsAndSink) {
  const Network net = generate(default_model(), {0.02, 1, 2, 1});
  std::uint32_t expect = 0;
  const auto sizes = scaled_sizes(default_model(), 0.02);
  for (std::size_t p = 0; p < net.pops.size(); ++p) {
    EXPECT_EQ(net.pops[p].begin, expect);
    EXPECT_EQ(net.pops[p].size(), sizes[p]);
    for (auto i = net.pops[p].begin; i < net.pops[p].end; ++i) ASSERT_EQ(net.pop_of[i], p);
    expect = net.pops[p].end;
  }
  EXPECT_EQ(expect, net.sink());
  EXPECT_EQ(net.pop_of[net.sink()], net.pops.size());
  EXPECT_TRUE(net.store.syns_from(net.sink()).empty());
  for (const auto& s : net.store.records())
    if (s.target() == net.sink()) EXPECT_EQ(s.weight, 0.0f);
  EXPECT_EQ(net.u_init[net.sink()], 0.0f);
}

TEST(Generate, RejectsBadOptions) {
  EXPECT_THROW(generate(default_model(), {0.0, 1, 1, 1}), Error);
  EXPECT_THROW(generate(default_model(), {-1.0, 1, 1, 1}), Error);
  EXPECT_THROW(generate(default_model(), {0.01, 1, 3, 1}), Error);
  EXPECT_THROW(generate(default_model(), {0.01, 1, 1, 3}), Error);
  EXPECT_THROW(generate(default_model(), {0.01, 1, 1, 128}), Error);
  // L5/inh rounds to zero neurons at this scale but has connections.
  EXPECT_THROW(generate(default_model(), {0.0004, 1, 1, 1}), Error);
  auto m = testing::tiny_model({4, 0}, 0.0);
  EXPECT_NO_THROW(generate(m, {1.0, 1, 1, 1}));
  m.conn.p[1][0] = 0.5;
  EXPECT_THROW(generate(m, {1.0, 1, 1, 1}), Error);
  EXPECT_THROW(generate(testing::tiny_model({200000}, 0.0), {1.0, 1, 1, 1}), Error);
}

TEST(Generate, DelayDiscretisation) {
  EXPECT_EQ(delay_to_ticks(1.5, 0.1), 15u);
  EXPECT_EQ(delay_to_ticks(0.04, 0.1), 1u);
  EXPECT_EQ(delay_to_ticks(-3.0, 0.1), 1u);
  EXPECT_EQ(delay_to_ticks(6.34, 0.1), 63u);
  EXPECT_EQ(delay_to_ticks(9.0, 0.1), 63u);
}

struct Moments {
  double mean, sd;
  std::size_t n;
};

Moments moments(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1)), v.size()};
}

// Mean of clamp(round(N(mu, sd) / dt), 1, 63) * dt by numerical integration.
double discretised_delay_mean(double mu, double sd, double dt) {
  auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - mu) / (sd * std::sqrt(2.0))); };
  double mean = 0;
  for (int k = 1; k <= 63; ++k) {
    const double lo = k == 1 ? -1e300 : (k - 0.5) * dt;
    const double hi = k == 63 ? 1e300 : (k + 0.5) * dt;
    mean += k * dt * (cdf(hi) - (k == 1 ? 0.0 : cdf(lo)));
  }
  return mean;
}

class Distributions : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { net_ = new Network(generate(default_model(), {0.1, 3, 1, 1})); }
  static void TearDownTestSuite() { delete net_; }
  static Network* net_;

  // Amplitudes (mV) and delays (ms) of synapses from population r onto c.
  static void collect(std::size_t r, std::size_t c, std::vector<double>& w, std::vector<double>& d) {
    const auto& net = *net_;
    for (auto n = net.pops[r].begin; n < net.pops[r].end; ++n)
      for (const auto& s : net.store.syns_from(n)) {
        if (net.pop_of[s.target()] != c) continue;
        w.push_back(s.weight / net.coeffs.w_f);
        d.push_back(s.delay() * net.sim.dt);
      }
  }
};
Network* Distributions::net_ = nullptr;

TEST_F(Distributions, ExcitatoryAmplitudesAndDelays) {
  std::vector<double> w, d;
  for (std::size_t c : {0, 1, 3, 4, 5, 6, 7}) collect(0, c, w, d);  // L23/exc onto all
  for (std::size_t c : {1, 2, 3, 4, 5, 6, 7}) collect(2, c, w, d);  // L4/exc except L23/exc
  const auto mw = moments(w);
  ASSERT_GE(mw.n, 1000000u);
  EXPECT_NEAR(mw.mean, 0.15, 0.0015);
  EXPECT_NEAR(mw.sd, 0.015, 0.0003);
  const auto md = moments(d);
  EXPECT_NEAR(md.mean, discretised_delay_mean(1.5, 0.75, 0.1), 0.005);
}

TEST_F(Distributions, InhibitoryAmplitudesAndDelays) {
  std::vector<double> w, d;
  for (std::size_t r : {1, 3, 5, 7})
    for (std::size_t c = 0; c < 8; ++c) collect(r, c, w, d);
  const auto spec = default_model().pops[1];
  const auto mw = moments(w);
  EXPECT_NEAR(mw.mean, spec.w_amp.mean, 0.01 * std::abs(spec.w_amp.mean));
  EXPECT_NEAR(mw.sd, spec.w_amp.sd, 0.02 * spec.w_amp.sd);
  const auto md = moments(d);
  EXPECT_NEAR(md.mean, discretised_delay_mean(spec.delay.mean, spec.delay.sd, 0.1), 0.005);
}

TEST_F(Distributions, AmplitudeException) {
  std::vector<double> w, d;
  collect(2, 0, w, d);
  const auto mw = moments(w);
  EXPECT_NEAR(mw.mean, 0.3, 0.003);
  EXPECT_NEAR(mw.sd, 0.03, 0.0015);
}

TEST_F(Distributions, InitialPotentials) {
  const auto& net = *net_;
  const auto m = default_model();
  for (std::size_t p = 0; p < 8; ++p) {
    std::vector<double> u;
    for (auto i = net.pops[p].begin; i < net.pops[p].end; ++i) u.push_back(net.u_init[i]);
    const auto mu = moments(u);
    const double want = m.pops[p].u_init.mean - m.sim.u_rest;
    EXPECT_NEAR(mu.mean, want, 4 * m.pops[p].u_init.sd / std::sqrt(mu.n)) << m.pops[p].name;
    EXPECT_NEAR(mu.sd, m.pops[p].u_init.sd, 0.1 * m.pops[p].u_init.sd) << m.pops[p].name;
  }
}

TEST_F(Distributions, CountsMatchPlan) {
  const auto counts = sample_synapse_counts(default_model(), 0.1);
  std::uint64_t total = 0;
  for (const auto& row : counts) total += std::accumulate(row.begin(), row.end(), std::uint64_t{0});
  EXPECT_EQ(net_->store.real_count(), total);
  std::vector<double> w, d;
  collect(1, 4, w, d);
  EXPECT_EQ(w.size(), counts[1][4]);
}

TEST(Generate, LayoutPlannerMatchesStore) {
  const std::uint32_t classes[] = {1, 4, 16};
  for (std::uint32_t bucket : {1, 4}) {
    const auto plan = plan_store_layout(default_model(), 0.02, 4, classes, bucket);
    ASSERT_EQ(plan.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
      const Network net = generate(default_model(), {0.02, 4, classes[i], bucket});
      EXPECT_EQ(plan[i].real, net.store.real_count());
      EXPECT_EQ(plan[i].stored, net.store.stored_count());
      EXPECT_DOUBLE_EQ(plan[i].occupancy(), net.store.occupancy());
    }
  }
}

TEST(Generate, DelayTailNeverReachesSixtyFour) {
  Rng rng(1, StreamTag::synapse_attributes, 0);
  const Gaussian d{1.5, 0.75};
  int above = 0;
  for (int i = 0; i < 1000000; ++i) above += std::round(rng.normal(d) / 0.1) > 63.0;
  EXPECT_EQ(above, 0);
}

}  // namespace
}  // namespace pdsim
