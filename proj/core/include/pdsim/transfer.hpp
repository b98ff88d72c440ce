#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "pdsim/netgen.hpp"
#include "pdsim/synapse_store.hpp"

namespace pdsim {

enum class Algorithm { gmem, jit, horiz, pull };

std::string_view to_string(Algorithm a) noexcept;
Algorithm parse_algorithm(std::string_view name);

/// Tuning parameters: update width (uw), synapse unroll (su), horizon (h),
/// synapse classes (sc) and lane count (lc). su is recorded, not acted on.
struct TransferConfig {
  Algorithm algorithm = Algorithm::gmem;
  std::uint32_t h = 16;
  std::uint32_t sc = 1;
  std::uint32_t lc = 16;
  std::uint32_t su = 1;
  std::uint32_t uw = 16;
  std::size_t queue_capacity = 65536;
  /// Verifies class disjointness and wrap safety on every write.
  bool audit = false;
};

/// Throws Error(invalid_argument) when `cfg` cannot run on `net`.
void check_transfer_config(const Network& net, const TransferConfig& cfg);

/// rows x n_neurons wrap-around delivery matrix of f32 current; the row for
/// tick t is t mod rows. Rows are zeroed once consumed.
class CurrentBuffer {
 public:
  CurrentBuffer(std::uint32_t rows, std::uint32_t n_neurons);

  std::uint32_t rows() const noexcept { return rows_; }
  std::uint32_t width() const noexcept { return width_; }

  /// The oldest tick whose row has not been consumed yet.
  std::uint64_t next_tick() const noexcept { return next_; }
  bool accepts(std::uint64_t arrival) const noexcept {
    return arrival >= next_ && arrival < next_ + rows_;
  }

  float* row(std::uint64_t tick) noexcept {
    return data_.data() + static_cast<std::size_t>(tick & mask_) * width_;
  }
  void add(std::uint64_t arrival, std::uint32_t neuron, float w) noexcept {
    row(arrival)[neuron] += w;
  }

  /// Copies the row of `tick` into `out`, zeroes it and advances next_tick.
  /// `tick` must equal next_tick().
  void consume(std::uint64_t tick, std::span<float> out);

  double pending_sum() const noexcept;

 private:
  std::uint32_t rows_;
  std::uint32_t mask_;
  std::uint32_t width_;
  std::uint64_t next_ = 0;
  std::vector<float> data_;
};

/// d_max slots of neuron ids; slot rt holds the neurons that spiked at a
/// tick congruent to rt. The total held across slots is bounded.
class SpikeQueue {
 public:
  explicit SpikeQueue(std::size_t capacity);

  /// Replaces the slot of `tick`; throws QueueOverflow past capacity.
  void enqueue(std::uint64_t tick, std::span<const std::uint32_t> ids);
  std::span<const std::uint32_t> enqueued_at(std::uint32_t rt) const noexcept {
    return slots_[rt & kDMaxMask];
  }
  void evict(std::uint32_t rt) noexcept;

  std::size_t live() const noexcept { return live_; }
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  std::vector<std::vector<std::uint32_t>> slots_;
  std::size_t live_ = 0;
  std::size_t capacity_;
};

/// Independent per-neuron accumulators; each handled spiking neuron writes
/// to exactly one lane.
class LaneSet {
 public:
  LaneSet(std::uint32_t lanes, std::uint32_t n_neurons);

  std::uint32_t size() const noexcept { return lanes_; }
  float* lane(std::uint32_t k) noexcept {
    dirty_[k] = 1;
    return data_.data() + static_cast<std::size_t>(k) * width_;
  }

  /// out = lane 0 + lane 1 + ... in lane order; lanes are cleared.
  void sum_into(std::span<float> out);
  double pending_sum() const noexcept;

 private:
  std::uint32_t lanes_;
  std::uint32_t width_;
  std::vector<float> data_;
  std::vector<std::uint8_t> dirty_;
};

/// Debug check that, within one transfer call, each accumulator element is
/// only written by one congruence class.
class WriteAudit {
 public:
  void resize(std::size_t elements) { owner_.assign(elements, -1); }
  void claim(std::size_t element, std::uint32_t cls);
  /// Forgets the owners recorded since the last call.
  void end_call() noexcept;

 private:
  std::vector<std::int32_t> owner_;
  std::vector<std::size_t> touched_;
};

/// Window i of a horizon pass at tick t: neurons that spiked at
/// `spike_tick` deliver synapses with delay in [d_from, d_to).
struct HorizonWindow {
  std::uint32_t rt;
  std::uint64_t spike_tick;  // meaningful only when t >= h*i + 1
  std::uint32_t d_from;
  std::uint32_t d_to;
};

/// rt = (t - h*i - 1) mod d_max, d_from = h*i + 1, d_to = d_from + h.
std::vector<HorizonWindow> horizon_windows(std::uint64_t t, std::uint32_t h);

/// Age (t - rt) mod d_max of a queue slot.
constexpr std::uint32_t slot_age(std::uint64_t t, std::uint32_t rt) noexcept {
  return static_cast<std::uint32_t>((t - rt) & kDMaxMask);
}

/// Spike transfer algorithm. Per tick t the engine calls deliver(t), then
/// push_spikes(t, ...) zero or more times with ascending ids, then
/// finish_tick(t). Current scheduled for tick t always arrives in
/// deliver(t), for every algorithm.
class SpikeTransfer {
 public:
  virtual ~SpikeTransfer() = default;

  virtual Algorithm algorithm() const noexcept = 0;
  /// Current arriving at each neuron at tick t; valid until finish_tick(t).
  virtual std::span<const float> deliver(std::uint64_t t) = 0;
  virtual void push_spikes(std::uint64_t t, std::span<const std::uint32_t> ids) = 0;
  virtual void finish_tick(std::uint64_t t) = 0;

  /// Real (non-padding) synapse activations so far.
  std::uint64_t events() const noexcept { return events_; }

 protected:
  std::uint64_t events_ = 0;
};

std::unique_ptr<SpikeTransfer> make_transfer(const Network& net, const TransferConfig& cfg);

/// Eager push: every synapse of a spiking neuron is written at spike time
/// into a d_max-row buffer.
class GmemTransfer final : public SpikeTransfer {
 public:
  GmemTransfer(const Network& net, const TransferConfig& cfg);

  Algorithm algorithm() const noexcept override { return Algorithm::gmem; }
  std::span<const float> deliver(std::uint64_t t) override;
  void push_spikes(std::uint64_t t, std::span<const std::uint32_t> ids) override;
  void finish_tick(std::uint64_t) override {}

  const CurrentBuffer& buffer() const noexcept { return buf_; }

 private:
  const SynapseStore& store_;
  TransferConfig cfg_;
  CurrentBuffer buf_;
  std::vector<float> delivered_;
  WriteAudit audit_;
};

/// Lazy push: spiking neurons stay queued and only the synapses whose
/// current is read at the next tick are activated, into round-robin lanes.
class JitTransfer final : public SpikeTransfer {
 public:
  JitTransfer(const Network& net, const TransferConfig& cfg);

  Algorithm algorithm() const noexcept override { return Algorithm::jit; }
  std::span<const float> deliver(std::uint64_t t) override;
  void push_spikes(std::uint64_t t, std::span<const std::uint32_t> ids) override;
  void finish_tick(std::uint64_t t) override;

  const SpikeQueue& queue() const noexcept { return queue_; }

 private:
  const SynapseStore& store_;
  TransferConfig cfg_;
  SpikeQueue queue_;
  LaneSet lanes_;
  std::vector<std::uint32_t> pending_;
  std::vector<float> next_;
  std::uint64_t tick_ = 0;
  WriteAudit audit_;
};

/// Horizon push: d_max / h passes per spike, each covering h delays into an
/// h-row buffer.
class HorizonTransfer final : public SpikeTransfer {
 public:
  HorizonTransfer(const Network& net, const TransferConfig& cfg);

  Algorithm algorithm() const noexcept override { return Algorithm::horiz; }
  std::span<const float> deliver(std::uint64_t t) override;
  void push_spikes(std::uint64_t t, std::span<const std::uint32_t> ids) override;
  void finish_tick(std::uint64_t t) override;

  const CurrentBuffer& buffer() const noexcept { return buf_; }
  const SpikeQueue& queue() const noexcept { return queue_; }

 private:
  const SynapseStore& store_;
  TransferConfig cfg_;
  SpikeQueue queue_;
  CurrentBuffer buf_;
  std::vector<std::uint32_t> pending_;
  std::vector<float> delivered_;
  std::uint64_t tick_ = 0;
  WriteAudit audit_;
};

/// Receiver-driven reference: every neuron scans its incoming synapses
/// against a d_max-tick spike history. Small networks only.
class PullOracle final : public SpikeTransfer {
 public:
  explicit PullOracle(const Network& net);

  Algorithm algorithm() const noexcept override { return Algorithm::pull; }
  std::span<const float> deliver(std::uint64_t t) override;
  void push_spikes(std::uint64_t t, std::span<const std::uint32_t> ids) override;
  void finish_tick(std::uint64_t) override {}

 private:
  struct Incoming {
    std::uint32_t source;
    std::uint32_t delay;
    float weight;
  };
  std::uint32_t n_neurons_;
  std::vector<std::uint64_t> offsets_;
  std::vector<Incoming> incoming_;
  std::vector<std::uint8_t> history_;  // d_max x n_neurons spike flags
  std::vector<float> delivered_;
};

}  // namespace pdsim
