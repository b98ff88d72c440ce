#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string_view>

#include "pdsim/netgen.hpp"
#include "pdsim/neuron.hpp"
#include "pdsim/spike_train.hpp"
#include "pdsim/transfer.hpp"

namespace pdsim {

enum class ExecMode { mono, multi };
enum class ThalamicMode { poisson, dc };

std::string_view to_string(ExecMode m) noexcept;
std::string_view to_string(Precision p) noexcept;
std::string_view to_string(ThalamicMode m) noexcept;
ExecMode parse_exec(std::string_view s);
Precision parse_precision(std::string_view s);
ThalamicMode parse_thalamic(std::string_view s);

struct EngineConfig {
  ExecMode exec = ExecMode::mono;
  TransferConfig transfer;
  Precision precision = Precision::f32;
  std::uint64_t n_ticks = 100000;
  std::uint64_t warmup_ticks = 10000;
  bool record = true;
  std::uint64_t seed = 0;
  ThalamicMode thalamic = ThalamicMode::poisson;
  /// Queue depth between the update and transfer workers (multi only).
  std::size_t channel_depth = 512;
  /// Longest wait on a channel before the run fails with a deadlock error.
  std::chrono::milliseconds handshake_timeout{60000};
};

/// Throws Error(invalid_argument) for configurations that cannot run on `net`.
void check_engine_config(const Network& net, const EngineConfig& cfg);

struct RunResult {
  SpikeTrain spikes;         // empty events when recording is off
  std::uint64_t n_spikes = 0;
  double wall_seconds = 0.0;  // first to last tick, generation excluded
  /// Real synapse deliveries owed to this run's spikes, including those
  /// landing after the final tick.
  std::uint64_t synaptic_events = 0;
  double rtf = 0.0;

  double events_per_second() const noexcept {
    return wall_seconds > 0 ? static_cast<double>(synaptic_events) / wall_seconds : 0.0;
  }
};

/// Single control thread: deliver, update, transfer for each tick.
RunResult run_mono(const Network& net, const EngineConfig& cfg);

/// Update worker (calling thread) and transfer worker joined by two bounded
/// channels. Tick t+1 starts only after the transfer worker acknowledges t.
RunResult run_multi(const Network& net, const EngineConfig& cfg);

/// Dispatches on cfg.exec.
RunResult run(const Network& net, const EngineConfig& cfg);

/// Sum of real out-degrees over the spiking neurons.
std::uint64_t count_events(const Network& net, std::span<const SpikeEvent> spikes);

}  // namespace pdsim
