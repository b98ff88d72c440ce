#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "pdsim/spike_train.hpp"

namespace pdsim {

inline constexpr char kSpikeMagic[7] = {'P', 'D', 'S', 'P', 'K', '1', '\0'};

/// Binary: magic then (u32 tick, u32 neuron) records. Text: "tick\tneuron" lines.
void write_spikes(const std::filesystem::path& path, std::span<const SpikeEvent> events,
                  bool text = false);

/// Accepts either format (binary is recognised by its magic). Text input may
/// use any whitespace, blank lines and '#' comments, and need not be sorted;
/// the result is in (tick, neuron) order.
std::vector<SpikeEvent> read_spikes(const std::filesystem::path& path);

}  // namespace pdsim
