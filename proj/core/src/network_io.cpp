#include "pdsim/network_io.hpp"

#include <cstring>

#include "pdsim/binary_io.hpp"
#include "pdsim/error.hpp"

namespace pdsim {

void write_network(const Network& net, const std::filesystem::path& path) {
  detail::BinaryWriter w(path);
  w.bytes(kNetworkMagic, sizeof(kNetworkMagic));
  w.value<std::uint8_t>(kNetworkVersion);
  w.value<std::uint32_t>(net.n_neurons);
  w.value<std::uint8_t>(static_cast<std::uint8_t>(net.pops.size()));
  w.value<std::uint16_t>(static_cast<std::uint16_t>(net.store.n_classes()));
  w.value<std::uint16_t>(static_cast<std::uint16_t>(net.store.bucket()));
  w.value<std::uint16_t>(static_cast<std::uint16_t>(kDMax));
  w.value<std::uint64_t>(net.meta.seed);
  w.value<double>(net.meta.scale);
  for (const auto& p : net.pops) {
    w.value<std::uint16_t>(static_cast<std::uint16_t>(p.name.size()));
    w.bytes(p.name.data(), p.name.size());
    w.value<std::uint32_t>(p.begin);
    w.value<std::uint32_t>(p.end);
  }
  w.array(std::span<const float>(net.u_init));
  w.array(net.store.index());
  w.array(net.store.records());
  w.close();
}

Network read_network(const std::filesystem::path& path, const ModelConfig& model) {
  detail::BinaryReader r(path);
  if (r.remaining() < sizeof(kNetworkMagic))
    fail(ErrorKind::format, path.string() + ": not a network file");
  char magic[sizeof(kNetworkMagic)];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kNetworkMagic, sizeof(magic)) != 0)
    fail(ErrorKind::format, path.string() + ": not a network file");
  const auto version = r.value<std::uint8_t>();
  if (version != kNetworkVersion)
    fail(ErrorKind::format, path.string() + ": unsupported network file version " +
                                std::to_string(version));

  const auto n_neurons = r.value<std::uint32_t>();
  const auto n_pops = r.value<std::uint8_t>();
  const auto n_classes = r.value<std::uint16_t>();
  const auto bucket = r.value<std::uint16_t>();
  const auto d_max = r.value<std::uint16_t>();
  NetworkMeta meta;
  meta.seed = r.value<std::uint64_t>();
  meta.scale = r.value<double>();
  if (d_max != kDMax)
    fail(ErrorKind::format, path.string() + ": d_max " + std::to_string(d_max) + " unsupported");
  if (n_neurons == 0 || n_neurons > kMaxNeurons)
    fail(ErrorKind::format, path.string() + ": bad neuron count");

  std::vector<PopulationRange> pops(n_pops);
  for (auto& p : pops) {
    const auto len = r.value<std::uint16_t>();
    p.name.resize(len);
    r.bytes(p.name.data(), len);
    p.begin = r.value<std::uint32_t>();
    p.end = r.value<std::uint32_t>();
    for (const auto& spec : model.pops)
      if (spec.name == p.name) p.k_thalamic = spec.k_thalamic;
  }

  std::vector<float> u_init(n_neurons);
  r.array(std::span<float>(u_init));
  const std::size_t index_len = static_cast<std::size_t>(n_neurons) * (kDMax + 1);
  if (r.remaining() / sizeof(std::uint64_t) < index_len)
    fail(ErrorKind::format, path.string() + ": unexpected end of file");
  std::vector<std::uint64_t> index(index_len);
  r.array(std::span<std::uint64_t>(index));
  const std::uint64_t n_records = index.back();
  if (r.remaining() / sizeof(Synapse) < n_records)
    fail(ErrorKind::format, path.string() + ": unexpected end of file");
  std::vector<Synapse> records(n_records);
  r.array(std::span<Synapse>(records));
  if (!r.at_end()) fail(ErrorKind::format, path.string() + ": trailing bytes after synapse array");
  for (const auto& s : records)
    if (s.packed >> (kTargetBits + 6))
      fail(ErrorKind::format, path.string() + ": nonzero spare bits in synapse record");

  SynapseStore store =
      SynapseStore::from_parts(n_neurons, n_classes, bucket, std::move(index), std::move(records));
  try {
    return make_network(std::move(pops), std::move(store), model.sim, std::move(u_init), meta);
  } catch (const Error& e) {
    fail(ErrorKind::format, path.string() + ": " + e.what());
  }
}

}  // namespace pdsim
