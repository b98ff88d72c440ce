#include "pdsim/spike_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include "pdsim/binary_io.hpp"
#include "pdsim/error.hpp"

namespace pdsim {

namespace {

std::vector<SpikeEvent> parse_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::vector<SpikeEvent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const char* p = line.data();
    const char* end = p + line.size();
    auto skip_ws = [&] {
      while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    };
    skip_ws();
    if (p == end) continue;
    SpikeEvent e;
    auto bad = [&]() -> void {
      fail(ErrorKind::format, path.string() + ":" + std::to_string(lineno) +
                                  ": expected 'tick<TAB>neuron'");
    };
    auto r1 = std::from_chars(p, end, e.tick);
    if (r1.ec != std::errc() || r1.ptr == end || (*r1.ptr != ' ' && *r1.ptr != '\t')) bad();
    p = r1.ptr;
    skip_ws();
    auto r2 = std::from_chars(p, end, e.neuron);
    if (r2.ec != std::errc()) bad();
    p = r2.ptr;
    skip_ws();
    if (p != end) bad();
    out.push_back(e);
  }
  if (in.bad()) fail(ErrorKind::io, "read failed: " + path.string());
  return out;
}

}  // namespace

void write_spikes(const std::filesystem::path& path, std::span<const SpikeEvent> events,
                  bool text) {
  if (text) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
    bool ok = true;
    for (const auto& e : events) ok = ok && std::fprintf(f, "%u\t%u\n", e.tick, e.neuron) > 0;
    ok = (std::fclose(f) == 0) && ok;
    if (!ok) fail(ErrorKind::io, "write failed: " + path.string());
    return;
  }
  detail::BinaryWriter w(path);
  w.bytes(kSpikeMagic, sizeof(kSpikeMagic));
  static_assert(sizeof(SpikeEvent) == 8);
  w.array(events);
  w.close();
}

std::vector<SpikeEvent> read_spikes(const std::filesystem::path& path) {
  std::vector<SpikeEvent> out;
  {
    detail::BinaryReader r(path);
    char magic[sizeof(kSpikeMagic)] = {};
    const bool binary = r.remaining() >= sizeof(magic) &&
                        (r.bytes(magic, sizeof(magic)), std::memcmp(magic, kSpikeMagic, sizeof(magic)) == 0);
    if (binary) {
      if (r.remaining() % sizeof(SpikeEvent) != 0)
        fail(ErrorKind::format, path.string() + ": unexpected end of file");
      out.resize(r.remaining() / sizeof(SpikeEvent));
      r.array(std::span<SpikeEvent>(out));
    } else {
      out = parse_text(path);
    }
  }
  if (!std::is_sorted(out.begin(), out.end())) std::sort(out.begin(), out.end());
  return out;
}

}  // namespace pdsim
