#include "pdsim/netgen.hpp"

#include <cmath>
#include <string>

#include "pdsim/error.hpp"
#include "pdsim/rng.hpp"

namespace pdsim {

namespace {

struct Plan {
  std::vector<std::uint32_t> sizes;
  std::vector<std::uint32_t> begins;
  CountMatrix counts;
  std::uint32_t n_neurons = 0;  // includes the sink
  std::uint64_t total = 0;
};

Plan make_plan(const ModelConfig& model, double scale) {
  require_valid(model);
  require(std::isfinite(scale) && scale > 0.0, "scale must be positive");
  Plan plan;
  plan.sizes = scaled_sizes(model, scale);
  const std::size_t np = model.pops.size();
  std::uint64_t total_neurons = 0;
  for (std::size_t r = 0; r < np; ++r) {
    plan.begins.push_back(static_cast<std::uint32_t>(total_neurons));
    total_neurons += plan.sizes[r];
  }
  require(total_neurons + 1 <= kMaxNeurons,
          "network of " + std::to_string(total_neurons) + " neurons exceeds the 17-bit id space");
  plan.n_neurons = static_cast<std::uint32_t>(total_neurons + 1);

  for (std::size_t r = 0; r < np; ++r) {
    if (plan.sizes[r] != 0) continue;
    for (std::size_t c = 0; c < np; ++c)
      require(model.conn.p[r][c] == 0.0 && model.conn.p[c][r] == 0.0,
              "population " + model.pops[r].name +
                  " has no neurons at this scale but nonzero connection probability");
  }
  plan.counts = sample_synapse_counts(model, scale);
  for (const auto& row : plan.counts)
    for (auto v : row) plan.total += v;
  return plan;
}

// Outgoing synapses of every neuron in source population r, grouped by
// source: neuron (begin_r + s) owns out[offsets[s] .. offsets[s+1]).
void generate_population(const ModelConfig& model, const Plan& plan, double w_f, std::uint64_t seed,
                         std::size_t r, std::vector<std::uint64_t>& offsets,
                         std::vector<Synapse>& out) {
  const std::size_t np = model.pops.size();
  const std::uint32_t n_src = plan.sizes[r];
  offsets.assign(static_cast<std::size_t>(n_src) + 1, 0);
  std::uint64_t total = 0;
  for (std::size_t c = 0; c < np; ++c) total += plan.counts[r][c];
  out.resize(total);
  if (total == 0) return;

  for (std::size_t c = 0; c < np; ++c) {
    Rng src(seed, StreamTag::synapse_source, r * np + c);
    for (std::uint64_t k = 0; k < plan.counts[r][c]; ++k) ++offsets[src.below(n_src) + 1];
  }
  for (std::uint32_t s = 0; s < n_src; ++s) offsets[s + 1] += offsets[s];

  std::vector<std::uint64_t> cursor(offsets.begin(), offsets.end() - 1);
  const double dt = model.sim.dt;
  const Gaussian& delay = model.pops[r].delay;
  for (std::size_t c = 0; c < np; ++c) {
    const std::uint64_t count = plan.counts[r][c];
    if (count == 0) continue;
    Rng src(seed, StreamTag::synapse_source, r * np + c);
    Rng attr(seed, StreamTag::synapse_attributes, r * np + c);
    const Gaussian& amp = model.amplitude(r, c);
    const std::uint32_t n_tgt = plan.sizes[c];
    const std::uint32_t tgt_begin = plan.begins[c];
    for (std::uint64_t k = 0; k < count; ++k) {
      const auto s = src.below(n_src);
      const auto target = tgt_begin + static_cast<std::uint32_t>(attr.below(n_tgt));
      const double mv = attr.normal(amp);
      const std::uint32_t ticks = delay_to_ticks(attr.normal(delay), dt);
      out[cursor[s]++] = Synapse::make(target, ticks, static_cast<float>(mv * w_f));
    }
  }
}

}  // namespace

std::vector<std::uint32_t> scaled_sizes(const ModelConfig& model, double scale) {
  std::vector<std::uint32_t> sizes;
  sizes.reserve(model.pops.size());
  for (const auto& p : model.pops)
    sizes.push_back(static_cast<std::uint32_t>(std::llround(scale * static_cast<double>(p.n))));
  return sizes;
}

CountMatrix sample_synapse_counts(const ModelConfig& model, double scale) {
  require(scale > 0.0, "scale must be positive");
  const auto sizes = scaled_sizes(model, scale);
  const std::size_t np = model.pops.size();
  CountMatrix counts(np, std::vector<std::uint64_t>(np, 0));
  for (std::size_t r = 0; r < np; ++r)
    for (std::size_t c = 0; c < np; ++c)
      counts[r][c] = static_cast<std::uint64_t>(std::llround(
          static_cast<double>(sizes[r]) * static_cast<double>(sizes[c]) * model.conn.p[r][c]));
  return counts;
}

std::uint32_t delay_to_ticks(double delay_ms, double dt) noexcept {
  const double ticks = std::round(delay_ms / dt);
  if (!(ticks >= 1.0)) return 1;
  if (ticks > kDMax - 1) return kDMax - 1;
  return static_cast<std::uint32_t>(ticks);
}

Network make_network(std::vector<PopulationRange> pops, SynapseStore store, const SimParams& sim,
                     std::vector<float> u_init, NetworkMeta meta) {
  Network net;
  net.n_neurons = store.n_neurons();
  require(net.n_neurons >= 1, "network needs a sink neuron");
  require(pops.size() < 255, "too many populations");
  require(u_init.size() == net.n_neurons, "u_init must have one entry per neuron");
  std::uint32_t expect = 0;
  net.pop_of.assign(net.n_neurons, static_cast<std::uint8_t>(pops.size()));
  for (std::size_t p = 0; p < pops.size(); ++p) {
    require(pops[p].begin == expect && pops[p].end >= pops[p].begin,
            "population ranges must be contiguous and ordered");
    for (std::uint32_t i = pops[p].begin; i < pops[p].end; ++i)
      net.pop_of[i] = static_cast<std::uint8_t>(p);
    expect = pops[p].end;
  }
  require(expect == net.sink(), "population ranges must end at the sink neuron");
  net.pops = std::move(pops);
  net.store = std::move(store);
  net.sim = sim;
  net.coeffs = derive_coefficients(sim);
  net.u_init = std::move(u_init);
  net.meta = meta;
  return net;
}

Network generate(const ModelConfig& model, const GenerationOptions& opts) {
  require(is_power_of_two(opts.n_classes), "n_classes must be a power of two");
  require(is_power_of_two(opts.bucket) && kDMax % opts.bucket == 0,
          "bucket must be a power of two dividing d_max");
  const Plan plan = make_plan(model, opts.scale);
  const Coefficients coeffs = derive_coefficients(model.sim);
  const std::size_t np = model.pops.size();

  std::vector<std::uint64_t> offsets;
  std::vector<Synapse> out;
  StoreBuilder builder(plan.n_neurons, opts.n_classes, opts.bucket);

  // Large networks are generated twice so the record array can be sized
  // exactly instead of grown.
  if (plan.total * sizeof(Synapse) > (std::uint64_t{256} << 20)) {
    LayoutCounter counter(opts.n_classes, opts.bucket);
    for (std::size_t r = 0; r < np; ++r) {
      generate_population(model, plan, coeffs.w_f, opts.seed, r, offsets, out);
      for (std::uint32_t s = 0; s < plan.sizes[r]; ++s)
        counter.add_neuron(std::span<const Synapse>(out).subspan(offsets[s], offsets[s + 1] - offsets[s]));
    }
    builder.reserve(counter.stored());
  }
  for (std::size_t r = 0; r < np; ++r) {
    generate_population(model, plan, coeffs.w_f, opts.seed, r, offsets, out);
    for (std::uint32_t s = 0; s < plan.sizes[r]; ++s)
      builder.append_neuron(plan.begins[r] + s,
                            std::span<Synapse>(out).subspan(offsets[s], offsets[s + 1] - offsets[s]));
  }
  out = {};

  std::vector<PopulationRange> pops;
  std::vector<float> u_init(plan.n_neurons, 0.0f);
  for (std::size_t r = 0; r < np; ++r) {
    const auto& spec = model.pops[r];
    pops.push_back(PopulationRange{spec.name, plan.begins[r], plan.begins[r] + plan.sizes[r],
                                   spec.k_thalamic});
    Rng rng(opts.seed, StreamTag::initial_potential, r);
    for (std::uint32_t i = pops.back().begin; i < pops.back().end; ++i)
      u_init[i] = static_cast<float>(rng.normal(spec.u_init) - model.sim.u_rest);
  }
  return make_network(std::move(pops), builder.finish(), model.sim, std::move(u_init),
                      NetworkMeta{opts.seed, opts.scale});
}

std::vector<LayoutStats> plan_store_layout(const ModelConfig& model, double scale,
                                           std::uint64_t seed,
                                           std::span<const std::uint32_t> class_counts,
                                           std::uint32_t bucket) {
  const Plan plan = make_plan(model, scale);
  const Coefficients coeffs = derive_coefficients(model.sim);
  std::vector<LayoutCounter> counters;
  for (auto nc : class_counts) counters.emplace_back(nc, bucket);

  std::vector<std::uint64_t> offsets;
  std::vector<Synapse> out;
  for (std::size_t r = 0; r < model.pops.size(); ++r) {
    generate_population(model, plan, coeffs.w_f, seed, r, offsets, out);
    for (std::uint32_t s = 0; s < plan.sizes[r]; ++s) {
      const auto syns =
          std::span<const Synapse>(out).subspan(offsets[s], offsets[s + 1] - offsets[s]);
      for (auto& counter : counters) counter.add_neuron(syns);
    }
  }
  std::vector<LayoutStats> stats;
  for (const auto& c : counters) stats.push_back(LayoutStats{c.n_classes(), c.bucket(), c.real(), c.stored()});
  return stats;
}

}  // namespace pdsim
