#include "pdsim/engine.hpp"

#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <variant>

#include "pdsim/bounded_queue.hpp"
#include "pdsim/error.hpp"

namespace pdsim {

namespace {

using Clock = std::chrono::steady_clock;

// Spike ids are handed to the transfer worker in batches of about this size.
constexpr std::size_t kBatch = 256;

// Neuron state plus external drive; advances one tick at a time in chunks
// of uw neurons and reports spikes chunk by chunk.
template <typename Real>
class Updater {
 public:
  Updater(const Network& net, const EngineConfig& cfg)
      : net_(net),
        cfg_(cfg),
        state_(initial_state<Real>(net)),
        thalamic_(net, cfg.seed),
        counts_(net.n_neurons, 0) {
    if (cfg.thalamic == ThalamicMode::dc) dc_ = dc_currents(net);
  }

  // Calls emit(span of ids) whenever at least kBatch spikes are pending and
  // once at the end with the remainder (possibly empty).
  template <typename Emit>
  void tick(std::uint64_t t, std::span<const float> delivered, Emit&& emit) {
    if (cfg_.thalamic == ThalamicMode::poisson) thalamic_.draw(t, counts_);
    spiked_.clear();
    const std::uint32_t n = net_.n_neurons;
    const std::uint32_t uw = cfg_.transfer.uw;
    for (std::uint32_t b = 0; b < n; b += uw) {
      const std::uint32_t e = std::min(n, b + uw);
      if (cfg_.thalamic == ThalamicMode::poisson)
        update_range(state_, net_.coeffs, delivered, counts_, b, e, spiked_);
      else
        update_range_dc(state_, net_.coeffs, delivered, dc_, b, e, spiked_);
      if (spiked_.size() >= kBatch) {
        emit(std::span<const std::uint32_t>(spiked_));
        record(t);
        spiked_.clear();
      }
    }
    emit(std::span<const std::uint32_t>(spiked_));
    record(t);
  }

  SpikeTrain& train() noexcept { return train_; }
  std::uint64_t n_spikes() const noexcept { return n_spikes_; }

  void init_train() { train_ = empty_train(net_, cfg_.n_ticks, cfg_.warmup_ticks); }

 private:
  void record(std::uint64_t t) {
    n_spikes_ += spiked_.size();
    if (!cfg_.record) return;
    for (auto id : spiked_) train_.events.push_back({static_cast<std::uint32_t>(t), id});
  }

  const Network& net_;
  const EngineConfig& cfg_;
  NeuronState<Real> state_;
  ThalamicSource thalamic_;
  std::vector<std::uint32_t> counts_;
  std::vector<double> dc_;
  std::vector<std::uint32_t> spiked_;
  SpikeTrain train_;
  std::uint64_t n_spikes_ = 0;
};

// Runs d_max more ticks with no new spikes so lazily delivered synapses are
// activated and counted.
void drain(SpikeTransfer& transfer, std::uint64_t from) {
  for (std::uint64_t t = from; t < from + kDMax; ++t) {
    transfer.deliver(t);
    transfer.finish_tick(t);
  }
}

RunResult finish(SpikeTrain train, std::uint64_t n_spikes, double wall, std::uint64_t events,
                 const Network& net, const EngineConfig& cfg) {
  RunResult r;
  r.spikes = std::move(train);
  r.n_spikes = n_spikes;
  r.wall_seconds = wall;
  r.synaptic_events = events;
  r.rtf = wall / (static_cast<double>(cfg.n_ticks) * net.sim.dt / 1000.0);
  return r;
}

template <typename Real>
RunResult mono(const Network& net, const EngineConfig& cfg) {
  auto transfer = make_transfer(net, cfg.transfer);
  Updater<Real> upd(net, cfg);
  upd.init_train();
  const auto t0 = Clock::now();
  for (std::uint64_t t = 0; t < cfg.n_ticks; ++t) {
    const auto delivered = transfer->deliver(t);
    upd.tick(t, delivered, [&](std::span<const std::uint32_t> ids) {
      if (!ids.empty()) transfer->push_spikes(t, ids);
    });
    transfer->finish_tick(t);
  }
  const double wall = std::chrono::duration<double>(Clock::now() - t0).count();
  drain(*transfer, cfg.n_ticks);
  return finish(std::move(upd.train()), upd.n_spikes(), wall, transfer->events(), net, cfg);
}

// Messages from the update worker to the transfer worker.
struct SpikeBatch {
  std::uint64_t tick;
  std::vector<std::uint32_t> ids;
};
struct Done {
  std::uint64_t tick;
  std::vector<float> recycled;  // returns the current buffer for reuse
};
using ToTransfer = std::variant<SpikeBatch, Done>;

// Messages from the transfer worker to the update worker.
struct Current {
  std::uint64_t tick;
  std::vector<float> values;
};
struct Ack {
  std::uint64_t tick;
};
struct Failure {
  std::exception_ptr error;
};
using ToUpdate = std::variant<Current, Ack, Failure>;

std::uint64_t transfer_worker(const Network& net, const EngineConfig& cfg,
                              BoundedQueue<ToTransfer>& in, BoundedQueue<ToUpdate>& out) {
  try {
    auto transfer = make_transfer(net, cfg.transfer);
    std::vector<float> spare(net.n_neurons);
    for (std::uint64_t t = 0; t < cfg.n_ticks; ++t) {
      const auto d = transfer->deliver(t);
      std::copy(d.begin(), d.end(), spare.begin());
      out.push(Current{t, std::move(spare)});
      for (;;) {
        auto msg = in.pop();
        if (!msg) return 0;  // update worker gave up
        if (auto* b = std::get_if<SpikeBatch>(&*msg)) {
          if (b->tick != t) fail(ErrorKind::internal, "spike batch for the wrong tick");
          transfer->push_spikes(t, b->ids);
          continue;
        }
        auto& done = std::get<Done>(*msg);
        if (done.tick != t) fail(ErrorKind::internal, "DONE for the wrong tick");
        spare = std::move(done.recycled);
        spare.resize(net.n_neurons);
        break;
      }
      transfer->finish_tick(t);
      out.push(Ack{t});
    }
    drain(*transfer, cfg.n_ticks);
    return transfer->events();
  } catch (...) {
    out.push(Failure{std::current_exception()});
    return 0;
  }
}

template <typename Real>
RunResult multi(const Network& net, const EngineConfig& cfg) {
  check_transfer_config(net, cfg.transfer);
  BoundedQueue<ToTransfer> to_transfer(cfg.channel_depth, cfg.handshake_timeout, "to_transfer");
  BoundedQueue<ToUpdate> to_update(cfg.channel_depth, cfg.handshake_timeout, "to_update");
  Updater<Real> upd(net, cfg);
  upd.init_train();

  std::uint64_t events = 0;
  std::optional<std::jthread> worker;
  // Closing both channels unblocks the worker if this thread bails out.
  struct Closer {
    BoundedQueue<ToTransfer>& a;
    BoundedQueue<ToUpdate>& b;
    std::optional<std::jthread>& w;
    ~Closer() {
      a.close();
      b.close();
      w.reset();
    }
  } closer{to_transfer, to_update, worker};

  const auto t0 = Clock::now();
  worker.emplace([&] { events = transfer_worker(net, cfg, to_transfer, to_update); });

  auto receive = [&]() -> ToUpdate {
    auto msg = to_update.pop();
    if (!msg) fail(ErrorKind::internal, "transfer worker closed its channel");
    if (auto* f = std::get_if<Failure>(&*msg)) std::rethrow_exception(f->error);
    return std::move(*msg);
  };

  for (std::uint64_t t = 0; t < cfg.n_ticks; ++t) {
    auto msg = receive();
    auto* cur = std::get_if<Current>(&msg);
    if (!cur || cur->tick != t) fail(ErrorKind::internal, "expected current for tick " + std::to_string(t));
    upd.tick(t, cur->values, [&](std::span<const std::uint32_t> ids) {
      if (!ids.empty()) to_transfer.push(SpikeBatch{t, {ids.begin(), ids.end()}});
    });
    to_transfer.push(Done{t, std::move(cur->values)});
    auto ack = receive();
    if (!std::holds_alternative<Ack>(ack) || std::get<Ack>(ack).tick != t)
      fail(ErrorKind::internal, "expected ack for tick " + std::to_string(t));
  }
  const double wall = std::chrono::duration<double>(Clock::now() - t0).count();
  worker.reset();  // joins after the worker's drain
  // A failure during the drain is still reported.
  if (auto msg = to_update.size() ? to_update.pop() : std::nullopt)
    if (auto* f = std::get_if<Failure>(&*msg)) std::rethrow_exception(f->error);
  return finish(std::move(upd.train()), upd.n_spikes(), wall, events, net, cfg);
}

}  // namespace

std::string_view to_string(ExecMode m) noexcept { return m == ExecMode::mono ? "mono" : "multi"; }
std::string_view to_string(Precision p) noexcept { return p == Precision::f32 ? "f32" : "f64"; }
std::string_view to_string(ThalamicMode m) noexcept {
  return m == ThalamicMode::poisson ? "poisson" : "dc";
}

ExecMode parse_exec(std::string_view s) {
  if (s == "mono") return ExecMode::mono;
  if (s == "multi") return ExecMode::multi;
  fail(ErrorKind::invalid_argument, "unknown exec mode '" + std::string(s) + "' (mono or multi)");
}

Precision parse_precision(std::string_view s) {
  if (s == "f32") return Precision::f32;
  if (s == "f64") return Precision::f64;
  fail(ErrorKind::invalid_argument, "unknown precision '" + std::string(s) + "' (f32 or f64)");
}

ThalamicMode parse_thalamic(std::string_view s) {
  if (s == "poisson") return ThalamicMode::poisson;
  if (s == "dc") return ThalamicMode::dc;
  fail(ErrorKind::invalid_argument, "unknown thalamic mode '" + std::string(s) + "' (poisson or dc)");
}

void check_engine_config(const Network& net, const EngineConfig& cfg) {
  require(cfg.n_ticks >= 1, "n_ticks must be at least 1");
  require(cfg.warmup_ticks <= cfg.n_ticks, "warmup_ticks must not exceed n_ticks");
  require(cfg.n_ticks < (std::uint64_t{1} << 32), "n_ticks must fit in 32 bits");
  require(cfg.channel_depth >= 1, "channel depth must be at least 1");
  check_transfer_config(net, cfg.transfer);
}

RunResult run_mono(const Network& net, const EngineConfig& cfg) {
  check_engine_config(net, cfg);
  return cfg.precision == Precision::f32 ? mono<float>(net, cfg) : mono<double>(net, cfg);
}

RunResult run_multi(const Network& net, const EngineConfig& cfg) {
  check_engine_config(net, cfg);
  return cfg.precision == Precision::f32 ? multi<float>(net, cfg) : multi<double>(net, cfg);
}

RunResult run(const Network& net, const EngineConfig& cfg) {
  return cfg.exec == ExecMode::mono ? run_mono(net, cfg) : run_multi(net, cfg);
}

std::uint64_t count_events(const Network& net, std::span<const SpikeEvent> spikes) {
  std::uint64_t total = 0;
  for (const auto& s : spikes) total += net.store.real_out_degree(s.neuron);
  return total;
}

}  // namespace pdsim
