#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "pdsim/netgen.hpp"

namespace pdsim {

struct SpikeEvent {
  std::uint32_t tick = 0;
  std::uint32_t neuron = 0;

  friend auto operator<=>(const SpikeEvent&, const SpikeEvent&) = default;
};

/// Recorded spikes in (tick, neuron) order plus what is needed to interpret
/// them. Spikes before warmup_ticks are kept but excluded by the statistics.
struct SpikeTrain {
  std::vector<SpikeEvent> events;
  std::uint64_t n_ticks = 0;
  std::uint64_t warmup_ticks = 0;
  double dt = 0.1;
  std::uint32_t n_neurons = 0;
  std::vector<PopulationRange> pops;

  /// Index of the first event at or after warm-up.
  std::size_t first_post_warmup() const noexcept {
    return static_cast<std::size_t>(
        std::lower_bound(events.begin(), events.end(),
                         SpikeEvent{static_cast<std::uint32_t>(
                                        std::min<std::uint64_t>(warmup_ticks, UINT32_MAX)),
                                    0}) -
        events.begin());
  }
  bool is_canonical() const noexcept { return std::is_sorted(events.begin(), events.end()); }
  void canonicalize() { std::sort(events.begin(), events.end()); }
};

/// Train metadata for runs on `net`; events are left empty.
inline SpikeTrain empty_train(const Network& net, std::uint64_t n_ticks, std::uint64_t warmup) {
  SpikeTrain s;
  s.n_ticks = n_ticks;
  s.warmup_ticks = warmup;
  s.dt = net.sim.dt;
  s.n_neurons = net.n_neurons;
  s.pops = net.pops;
  return s;
}

}  // namespace pdsim
