#include <memory>
#include <vector>

#include <benchmark/benchmark.h>

#include "pdsim/netgen.hpp"
#include "pdsim/neuron.hpp"
#include "pdsim/rng.hpp"
#include "pdsim/stats.hpp"
#include "pdsim/transfer.hpp"

using namespace pdsim;

namespace {

const Network& small_net() {
  static const Network net = generate(default_model(), {0.02, 1, 1, 1});
  return net;
}

// Spiking ids per tick at roughly the circuit's own activity.
std::vector<std::vector<std::uint32_t>> schedule(const Network& net, std::size_t ticks) {
  Rng rng(1, StreamTag::test, 0);
  std::vector<std::vector<std::uint32_t>> s(ticks);
  for (auto& t : s)
    for (std::uint32_t i = 0; i + 1 < net.n_neurons; ++i)
      if (rng.uniform() < 3e-4) t.push_back(i);
  return s;
}

template <typename Real>
void neuron_update(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  const Coefficients c = derive_coefficients(SimParams{});
  NeuronState<Real> s(n);
  std::vector<float> d(n, 30.0f);
  std::vector<std::uint32_t> thal(n, 1);
  std::vector<std::uint32_t> spiked;
  for (auto _ : state) {
    spiked.clear();
    update_range(s, c, d, thal, 0, n, spiked);
    benchmark::DoNotOptimize(spiked.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void thalamic_draw(benchmark::State& state) {
  const Network& net = small_net();
  ThalamicSource src(net, 3);
  std::vector<std::uint32_t> out(net.n_neurons);
  std::uint64_t t = 0;
  for (auto _ : state) {
    src.draw(t++, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * net.n_neurons);
}

void transfer_tick(benchmark::State& state) {
  const Network& net = small_net();
  TransferConfig cfg;
  cfg.algorithm = static_cast<Algorithm>(state.range(0));
  cfg.h = static_cast<std::uint32_t>(state.range(1));
  auto tr = make_transfer(net, cfg);
  const auto sched = schedule(net, 4096);
  std::uint64_t t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tr->deliver(t).data());
    tr->push_spikes(t, sched[t % sched.size()]);
    tr->finish_tick(t);
    ++t;
  }
  state.counters["events/s"] =
      benchmark::Counter(static_cast<double>(tr->events()), benchmark::Counter::kIsRate);
  state.SetLabel(std::string(to_string(cfg.algorithm)));
}

void generate_net(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(generate(default_model(), {0.01, 2, 1, 1}).n_neurons);
}

void density(benchmark::State& state) {
  Rng rng(4, StreamTag::test, 0);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (auto& x : v) x = rng.normal({0.0, 1.0});
  for (auto _ : state) benchmark::DoNotOptimize(kde(v).bandwidth);
}

}  // namespace

BENCHMARK(neuron_update<float>)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(neuron_update<double>)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(thalamic_draw);
BENCHMARK(transfer_tick)
    ->Args({static_cast<int>(Algorithm::gmem), 16})
    ->Args({static_cast<int>(Algorithm::jit), 16})
    ->Args({static_cast<int>(Algorithm::horiz), 8})
    ->Args({static_cast<int>(Algorithm::horiz), 16})
    ->Args({static_cast<int>(Algorithm::pull), 16});
BENCHMARK(generate_net)->Unit(benchmark::kMillisecond);
BENCHMARK(density)->Arg(1000)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
