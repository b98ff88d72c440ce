#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdsim/params.hpp"
#include "pdsim/synapse_store.hpp"

namespace pdsim {

struct PopulationRange {
  std::string name;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  std::int64_t k_thalamic = 0;

  std::uint32_t size() const noexcept { return end - begin; }
  friend bool operator==(const PopulationRange&, const PopulationRange&) = default;
};

struct NetworkMeta {
  std::uint64_t seed = 0;
  double scale = 1.0;

  friend bool operator==(const NetworkMeta&, const NetworkMeta&) = default;
};

/// A generated microcircuit. The last neuron is a sink: it belongs to no
/// population, receives no input and is the target of all padding records.
struct Network {
  std::uint32_t n_neurons = 0;
  std::vector<PopulationRange> pops;
  std::vector<std::uint8_t> pop_of;  // sink maps to pops.size()
  SynapseStore store;
  SimParams sim;
  Coefficients coeffs;
  std::vector<float> u_init;  // deviation from rest, mV
  NetworkMeta meta;

  std::uint32_t sink() const noexcept { return n_neurons - 1; }

  friend bool operator==(const Network&, const Network&) = default;
};

/// Builds a Network around an existing store; derives pop_of and coeffs.
/// Population ranges must be contiguous from 0 and end at the sink.
Network make_network(std::vector<PopulationRange> pops, SynapseStore store, const SimParams& sim,
                     std::vector<float> u_init, NetworkMeta meta = {});

using CountMatrix = std::vector<std::vector<std::uint64_t>>;

std::vector<std::uint32_t> scaled_sizes(const ModelConfig& model, double scale);

/// count[r][c] = round(n_r * n_c * p[r][c]) with n = round(scale * N).
CountMatrix sample_synapse_counts(const ModelConfig& model, double scale);

/// Nearest tick, clamped to [1, d_max - 1].
std::uint32_t delay_to_ticks(double delay_ms, double dt) noexcept;

struct GenerationOptions {
  double scale = 1.0;
  std::uint64_t seed = 0;
  std::uint32_t n_classes = 1;
  std::uint32_t bucket = 1;
};

Network generate(const ModelConfig& model, const GenerationOptions& opts);

struct LayoutStats {
  std::uint32_t n_classes = 1;
  std::uint32_t bucket = 1;
  std::uint64_t real = 0;
  std::uint64_t stored = 0;
  double occupancy() const noexcept {
    return stored == 0 ? 1.0 : static_cast<double>(real) / static_cast<double>(stored);
  }
};

/// Record counts the store generated with (seed, scale) would have for each
/// class count, computed without allocating the store.
std::vector<LayoutStats> plan_store_layout(const ModelConfig& model, double scale,
                                           std::uint64_t seed,
                                           std::span<const std::uint32_t> class_counts,
                                           std::uint32_t bucket);

}  // namespace pdsim
