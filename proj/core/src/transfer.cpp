#include "pdsim/transfer.hpp"

#include <algorithm>
#include <string>

#include "pdsim/error.hpp"

namespace pdsim {

namespace {

// Walks records [o0, o1) class by class; class c owns positions o0 + c + k*nc.
// Returns the number of real (non-sink) records visited.
template <typename Put>
std::uint64_t for_each_class(const Synapse* rec, std::uint64_t o0, std::uint64_t o1,
                             std::uint32_t nc, std::uint32_t sink, Put&& put) {
  std::uint64_t real = 0;
  for (std::uint32_t c = 0; c < nc; ++c) {
    for (std::uint64_t o = o0 + c; o < o1; o += nc) {
      const Synapse s = rec[o];
      put(c, s);
      real += s.target() != sink;
    }
  }
  return real;
}

void check_wrap(const CurrentBuffer& buf, std::uint64_t arrival) {
  if (!buf.accepts(arrival))
    fail(ErrorKind::internal, "delivery for tick " + std::to_string(arrival) +
                                  " lands on a row not yet cleared (next tick " +
                                  std::to_string(buf.next_tick()) + ")");
}

}  // namespace

std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::gmem: return "gmem";
    case Algorithm::jit: return "jit";
    case Algorithm::horiz: return "horiz";
    case Algorithm::pull: return "pull";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::gmem, Algorithm::jit, Algorithm::horiz, Algorithm::pull})
    if (name == to_string(a)) return a;
  fail(ErrorKind::invalid_argument, "unknown algorithm '" + std::string(name) +
                                        "' (expected gmem, jit, horiz or pull)");
}

void check_transfer_config(const Network& net, const TransferConfig& cfg) {
  const auto& store = net.store;
  require(cfg.uw >= 1, "uw must be at least 1");
  require(cfg.su >= 1, "su must be at least 1");
  require(cfg.queue_capacity >= 1, "queue capacity must be at least 1");
  if (cfg.algorithm == Algorithm::pull) return;
  require(cfg.sc == store.n_classes(),
          "sc = " + std::to_string(cfg.sc) + " does not match the network's " +
              std::to_string(store.n_classes()) + " synapse classes");
  switch (cfg.algorithm) {
    case Algorithm::jit:
      require(is_power_of_two(cfg.lc) && cfg.lc <= kDMax, "lc must be a power of two <= 64");
      require(store.bucket() == 1, "jit requires bucket 1 (network has bucket " +
                                       std::to_string(store.bucket()) + ")");
      break;
    case Algorithm::horiz:
      require(is_power_of_two(cfg.h) && cfg.h <= kDMax, "h must be a power of two dividing 64");
      require(cfg.h % store.bucket() == 0, "horiz requires bucket to divide h (bucket " +
                                               std::to_string(store.bucket()) + ", h " +
                                               std::to_string(cfg.h) + ")");
      break;
    default:
      break;
  }
}

// --- CurrentBuffer ---------------------------------------------------------

CurrentBuffer::CurrentBuffer(std::uint32_t rows, std::uint32_t n_neurons)
    : rows_(rows), mask_(rows - 1), width_(n_neurons) {
  require(is_power_of_two(rows), "buffer rows must be a power of two");
  data_.assign(static_cast<std::size_t>(rows) * n_neurons, 0.0f);
}

void CurrentBuffer::consume(std::uint64_t tick, std::span<float> out) {
  require(tick == next_, "buffer rows must be consumed in tick order");
  require(out.size() == width_, "output must have one entry per neuron");
  float* r = row(tick);
  std::copy(r, r + width_, out.begin());
  std::fill(r, r + width_, 0.0f);
  ++next_;
}

double CurrentBuffer::pending_sum() const noexcept {
  double s = 0.0;
  for (float v : data_) s += v;
  return s;
}

// --- SpikeQueue ------------------------------------------------------------

SpikeQueue::SpikeQueue(std::size_t capacity) : slots_(kDMax), capacity_(capacity) {}

void SpikeQueue::enqueue(std::uint64_t tick, std::span<const std::uint32_t> ids) {
  auto& slot = slots_[tick & kDMaxMask];
  const std::size_t live = live_ - slot.size() + ids.size();
  if (live > capacity_) throw QueueOverflow(tick, capacity_);
  slot.assign(ids.begin(), ids.end());
  live_ = live;
}

void SpikeQueue::evict(std::uint32_t rt) noexcept {
  auto& slot = slots_[rt & kDMaxMask];
  live_ -= slot.size();
  slot.clear();
}

// --- LaneSet ---------------------------------------------------------------

LaneSet::LaneSet(std::uint32_t lanes, std::uint32_t n_neurons)
    : lanes_(lanes), width_(n_neurons) {
  require(lanes >= 1, "need at least one lane");
  data_.assign(static_cast<std::size_t>(lanes) * n_neurons, 0.0f);
  dirty_.assign(lanes, 0);
}

void LaneSet::sum_into(std::span<float> out) {
  std::fill(out.begin(), out.end(), 0.0f);
  for (std::uint32_t k = 0; k < lanes_; ++k) {
    if (!dirty_[k]) continue;
    float* l = data_.data() + static_cast<std::size_t>(k) * width_;
    for (std::uint32_t j = 0; j < width_; ++j) out[j] += l[j];
    std::fill(l, l + width_, 0.0f);
    dirty_[k] = 0;
  }
}

double LaneSet::pending_sum() const noexcept {
  double s = 0.0;
  for (float v : data_) s += v;
  return s;
}

// --- WriteAudit ------------------------------------------------------------

void WriteAudit::claim(std::size_t element, std::uint32_t cls) {
  auto& o = owner_[element];
  if (o < 0) {
    o = static_cast<std::int32_t>(cls);
    touched_.push_back(element);
  } else if (o != static_cast<std::int32_t>(cls)) {
    fail(ErrorKind::internal, "classes " + std::to_string(o) + " and " + std::to_string(cls) +
                                  " both wrote accumulator element " + std::to_string(element));
  }
}

void WriteAudit::end_call() noexcept {
  for (auto e : touched_) owner_[e] = -1;
  touched_.clear();
}

std::vector<HorizonWindow> horizon_windows(std::uint64_t t, std::uint32_t h) {
  std::vector<HorizonWindow> out;
  for (std::uint32_t i = 0; i < kDMax / h; ++i) {
    const std::uint64_t s = t - static_cast<std::uint64_t>(h) * i - 1;
    out.push_back({static_cast<std::uint32_t>(s & kDMaxMask), s, h * i + 1, h * i + 1 + h});
  }
  return out;
}

std::unique_ptr<SpikeTransfer> make_transfer(const Network& net, const TransferConfig& cfg) {
  check_transfer_config(net, cfg);
  switch (cfg.algorithm) {
    case Algorithm::gmem: return std::make_unique<GmemTransfer>(net, cfg);
    case Algorithm::jit: return std::make_unique<JitTransfer>(net, cfg);
    case Algorithm::horiz: return std::make_unique<HorizonTransfer>(net, cfg);
    case Algorithm::pull: return std::make_unique<PullOracle>(net);
  }
  fail(ErrorKind::invalid_argument, "unknown algorithm");
}

// --- gmem ------------------------------------------------------------------

GmemTransfer::GmemTransfer(const Network& net, const TransferConfig& cfg)
    : store_(net.store), cfg_(cfg), buf_(kDMax, net.n_neurons), delivered_(net.n_neurons) {
  check_transfer_config(net, cfg);
  if (cfg.audit) audit_.resize(static_cast<std::size_t>(kDMax) * net.n_neurons);
}

std::span<const float> GmemTransfer::deliver(std::uint64_t t) {
  buf_.consume(t, delivered_);
  return delivered_;
}

void GmemTransfer::push_spikes(std::uint64_t t, std::span<const std::uint32_t> ids) {
  const Synapse* rec = store_.records().data();
  const std::uint32_t nc = store_.n_classes();
  const std::uint32_t sink = store_.sink();
  for (std::uint32_t n : ids) {
    const std::uint64_t o0 = store_.index_at(n, 0);
    const std::uint64_t o1 = store_.index_at(n, kDMax);
    if (cfg_.audit) {
      events_ += for_each_class(rec, o0, o1, nc, sink, [&](std::uint32_t c, Synapse s) {
        const std::uint64_t arrival = t + s.delay();
        check_wrap(buf_, arrival);
        if (s.target() != sink)
          audit_.claim(static_cast<std::size_t>(arrival & kDMaxMask) * buf_.width() + s.target(), c);
        buf_.add(arrival, s.target(), s.weight);
      });
    } else {
      events_ += for_each_class(rec, o0, o1, nc, sink, [&](std::uint32_t, Synapse s) {
        buf_.add(t + s.delay(), s.target(), s.weight);
      });
    }
  }
  if (cfg_.audit) audit_.end_call();
}

// --- jit -------------------------------------------------------------------

JitTransfer::JitTransfer(const Network& net, const TransferConfig& cfg)
    : store_(net.store),
      cfg_(cfg),
      queue_(cfg.queue_capacity),
      lanes_(cfg.lc, net.n_neurons),
      next_(net.n_neurons, 0.0f) {
  check_transfer_config(net, cfg);
  if (cfg.audit) audit_.resize(static_cast<std::size_t>(cfg.lc) * net.n_neurons);
}

std::span<const float> JitTransfer::deliver(std::uint64_t t) {
  require(t == tick_, "ticks must be delivered in order");
  return next_;
}

void JitTransfer::push_spikes(std::uint64_t, std::span<const std::uint32_t> ids) {
  pending_.insert(pending_.end(), ids.begin(), ids.end());
}

void JitTransfer::finish_tick(std::uint64_t t) {
  require(t == tick_, "ticks must be finished in order");
  queue_.enqueue(t, pending_);
  pending_.clear();

  const Synapse* rec = store_.records().data();
  const std::uint32_t nc = store_.n_classes();
  const std::uint32_t sink = store_.sink();
  const std::uint32_t lane_mask = cfg_.lc - 1;
  const std::uint32_t width = store_.n_neurons();
  std::uint32_t next_lane = 0;

  // A neuron that spiked a ticks ago contributes its delay a+1 synapses to
  // tick t+1.
  for (std::uint32_t a = 0; a + 1 < kDMax; ++a) {
    const auto slot = queue_.enqueued_at(static_cast<std::uint32_t>((t - a) & kDMaxMask));
    for (std::uint32_t n : slot) {
      const std::uint32_t k = next_lane++ & lane_mask;
      float* lane = lanes_.lane(k);
      const std::uint64_t o0 = store_.index_at(n, a + 1);
      const std::uint64_t o1 = store_.index_at(n, a + 2);
      if (cfg_.audit) {
        events_ += for_each_class(rec, o0, o1, nc, sink, [&](std::uint32_t c, Synapse s) {
          if (s.target() != sink) audit_.claim(static_cast<std::size_t>(k) * width + s.target(), c);
          lane[s.target()] += s.weight;
        });
      } else {
        events_ += for_each_class(rec, o0, o1, nc, sink,
                                  [&](std::uint32_t, Synapse s) { lane[s.target()] += s.weight; });
      }
    }
  }
  if (cfg_.audit) audit_.end_call();
  queue_.evict(static_cast<std::uint32_t>((t - (kDMax - 2)) & kDMaxMask));
  lanes_.sum_into(next_);
  ++tick_;
}

// --- horiz -----------------------------------------------------------------

HorizonTransfer::HorizonTransfer(const Network& net, const TransferConfig& cfg)
    : store_(net.store),
      cfg_(cfg),
      queue_(cfg.queue_capacity),
      buf_(cfg.h, net.n_neurons),
      delivered_(net.n_neurons) {
  check_transfer_config(net, cfg);
  if (cfg.audit) audit_.resize(static_cast<std::size_t>(cfg.h) * net.n_neurons);
}

std::span<const float> HorizonTransfer::deliver(std::uint64_t t) {
  require(t == tick_, "ticks must be delivered in order");
  const Synapse* rec = store_.records().data();
  const std::uint32_t nc = store_.n_classes();
  const std::uint32_t sink = store_.sink();
  const std::uint32_t h = cfg_.h;

  // Window i covers neurons that spiked h*i + 1 ticks ago and their delays
  // [h*i + 1, h*i + 1 + h): arrivals t .. t + h - 1.
  for (std::uint32_t i = 0; i < kDMax / h; ++i) {
    const std::uint64_t back = static_cast<std::uint64_t>(h) * i + 1;
    if (t < back) break;
    const std::uint64_t s_tick = t - back;
    const std::uint32_t d_from = h * i + 1;
    const std::uint32_t d_to = std::min(d_from + h, kDMax);
    for (std::uint32_t n : queue_.enqueued_at(static_cast<std::uint32_t>(s_tick & kDMaxMask))) {
      const std::uint64_t o0 = store_.index_at(n, d_from);
      const std::uint64_t o1 = store_.index_at(n, d_to);
      if (cfg_.audit) {
        events_ += for_each_class(rec, o0, o1, nc, sink, [&](std::uint32_t c, Synapse s) {
          const std::uint64_t arrival = s_tick + s.delay();
          check_wrap(buf_, arrival);
          if (s.target() != sink)
            audit_.claim(static_cast<std::size_t>(arrival & (h - 1)) * buf_.width() + s.target(), c);
          buf_.add(arrival, s.target(), s.weight);
        });
      } else {
        events_ += for_each_class(rec, o0, o1, nc, sink, [&](std::uint32_t, Synapse s) {
          buf_.add(s_tick + s.delay(), s.target(), s.weight);
        });
      }
    }
    if (cfg_.audit) audit_.end_call();
  }
  // The oldest spikes have now delivered their last window.
  queue_.evict(static_cast<std::uint32_t>((t + h - 1 - kDMax) & kDMaxMask));
  buf_.consume(t, delivered_);
  return delivered_;
}

void HorizonTransfer::push_spikes(std::uint64_t, std::span<const std::uint32_t> ids) {
  pending_.insert(pending_.end(), ids.begin(), ids.end());
}

void HorizonTransfer::finish_tick(std::uint64_t t) {
  require(t == tick_, "ticks must be finished in order");
  queue_.enqueue(t, pending_);
  pending_.clear();
  ++tick_;
}

// --- pull ------------------------------------------------------------------

PullOracle::PullOracle(const Network& net)
    : n_neurons_(net.n_neurons),
      offsets_(net.n_neurons + 1, 0),
      history_(static_cast<std::size_t>(kDMax) * net.n_neurons, 0),
      delivered_(net.n_neurons, 0.0f) {
  const auto& store = net.store;
  const auto rec = store.records();
  for (const auto& s : rec)
    if (!store.is_padding(s)) ++offsets_[s.target() + 1];
  for (std::uint32_t i = 0; i < n_neurons_; ++i) offsets_[i + 1] += offsets_[i];
  incoming_.resize(offsets_.back());
  std::vector<std::uint64_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::uint32_t n = 0; n < n_neurons_; ++n) {
    for (std::uint64_t o = store.index_at(n, 0); o < store.index_at(n, kDMax); ++o) {
      const Synapse s = rec[o];
      if (store.is_padding(s)) continue;
      incoming_[fill[s.target()]++] = {n, s.delay(), s.weight};
    }
  }
}

std::span<const float> PullOracle::deliver(std::uint64_t t) {
  for (std::uint32_t i = 0; i < n_neurons_; ++i) {
    float acc = 0.0f;
    for (std::uint64_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      const auto& in = incoming_[k];
      if (t < in.delay) continue;
      const std::size_t row = static_cast<std::size_t>((t - in.delay) & kDMaxMask);
      if (history_[row * n_neurons_ + in.source]) {
        acc += in.weight;
        ++events_;
      }
    }
    delivered_[i] = acc;
  }
  const std::size_t row = static_cast<std::size_t>(t & kDMaxMask) * n_neurons_;
  std::fill(history_.begin() + static_cast<std::ptrdiff_t>(row),
            history_.begin() + static_cast<std::ptrdiff_t>(row + n_neurons_), 0);
  return delivered_;
}

void PullOracle::push_spikes(std::uint64_t t, std::span<const std::uint32_t> ids) {
  const std::size_t row = static_cast<std::size_t>(t & kDMaxMask) * n_neurons_;
  for (std::uint32_t n : ids) history_[row + n] = 1;
}

}  // namespace pdsim
