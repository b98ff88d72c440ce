#pragma once

#include <filesystem>

#include "pdsim/netgen.hpp"
#include "pdsim/params.hpp"

namespace pdsim {

inline constexpr char kNetworkMagic[7] = {'P', 'D', 'N', 'E', 'T', '1', '\0'};
inline constexpr std::uint8_t kNetworkVersion = 1;

/// Little-endian layout:
///   magic "PDNET1\0", version u8,
///   n_neurons u32, n_pops u8, n_classes u16, bucket u16, d_max u16, seed u64, scale f64,
///   n_pops x (name_len u16, name bytes, begin u32, end u32),
///   u_init f32[n_neurons],
///   index u64[n_neurons * (d_max + 1)],
///   records: (u32 target | delay << 17, f32 weight)[index.back()].
/// Stored weights already include the mV-to-current factor w_f.
void write_network(const Network& net, const std::filesystem::path& path);

/// Simulation parameters are not part of the file; coefficients and
/// thalamic fan-in are taken from `model` (matched by population name).
Network read_network(const std::filesystem::path& path,
                     const ModelConfig& model = default_model());

}  // namespace pdsim
