#include "pdsim/synapse_store.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "pdsim/error.hpp"

namespace pdsim {

namespace {

void check_layout_params(std::uint32_t n_neurons, std::uint32_t n_classes, std::uint32_t bucket) {
  require(n_neurons >= 1, "a store needs at least the sink neuron");
  require(n_neurons <= kMaxNeurons, "at most " + std::to_string(kMaxNeurons) +
                                        " neurons fit the 17-bit target field");
  require(is_power_of_two(n_classes), "n_classes must be a power of two");
  require(n_classes <= 65535, "n_classes must fit 16 bits");
  require(is_power_of_two(bucket) && bucket <= kDMax, "bucket must be a power of two <= 64");
}

// First bucket whose lower delay bound 1 + k*bucket is >= d.
std::uint32_t first_bucket_at(std::uint32_t d, std::uint32_t bucket) {
  if (d <= 1) return 0;
  return (d - 1 + bucket - 1) / bucket;
}

[[noreturn]] void corrupt(const std::string& what) {
  fail(ErrorKind::format, "synapse store invariant violated: " + what);
}

}  // namespace

RecordRange SynapseStore::range(std::uint32_t n, std::uint32_t d_from, std::uint32_t d_to) const {
  if (n >= n_neurons_)
    fail(ErrorKind::invalid_argument, "neuron id " + std::to_string(n) + " out of range");
  require(d_from < d_to && d_to <= kDMax, "delay range must satisfy 0 <= d_from < d_to <= d_max");
  require(is_aligned(d_from) && is_aligned(d_to), "delay range must lie on bucket boundaries");
  return RecordRange{index_at(n, d_from), index_at(n, d_to)};
}

void SynapseStore::recount() {
  out_degree_.assign(n_neurons_, 0);
  real_count_ = 0;
  for (std::uint32_t n = 0; n < n_neurons_; ++n) {
    std::uint32_t deg = 0;
    for (std::uint64_t o = index_at(n, 0); o < index_at(n, kDMax); ++o)
      deg += records_[o].target() != sink() ? 1u : 0u;
    out_degree_[n] = deg;
    real_count_ += deg;
  }
}

SynapseStore SynapseStore::from_parts(std::uint32_t n_neurons, std::uint32_t n_classes,
                                      std::uint32_t bucket, std::vector<std::uint64_t> index,
                                      std::vector<Synapse> records) {
  try {
    check_layout_params(n_neurons, n_classes, bucket);
  } catch (const Error& e) {
    fail(ErrorKind::format, e.what());
  }
  SynapseStore s;
  s.n_neurons_ = n_neurons;
  s.n_classes_ = n_classes;
  s.bucket_ = bucket;
  s.index_ = std::move(index);
  s.records_ = std::move(records);
  if (s.index_.size() != static_cast<std::size_t>(n_neurons) * (kDMax + 1))
    corrupt("index has wrong size");
  s.check_invariants();
  s.recount();
  return s;
}

void SynapseStore::check_invariants() const {
  const std::size_t row = kDMax + 1;
  if (index_.size() != static_cast<std::size_t>(n_neurons_) * row) corrupt("index size");
  if (n_neurons_ == 0) return;
  if (index_.front() != 0) corrupt("index does not start at 0");
  if (index_.back() != records_.size()) corrupt("index does not end at the record count");

  const std::uint32_t mask = n_classes_ - 1;
  const std::uint32_t nb = n_buckets();
  for (std::uint32_t n = 0; n < n_neurons_; ++n) {
    const std::string who = "neuron " + std::to_string(n);
    for (std::uint32_t d = 1; d <= kDMax; ++d)
      if (index_at(n, d) < index_at(n, d - 1)) corrupt(who + ": index row not monotone");
    if (n + 1 < n_neurons_ && index_at(n, kDMax) != index_at(n + 1, 0))
      corrupt(who + ": X[n][d_max] != X[n+1][0]");
    for (std::uint32_t d = 0; d <= kDMax; ++d) {
      const std::uint32_t k = first_bucket_at(d, bucket_);
      const std::uint64_t expect = k >= nb ? index_at(n, kDMax) : index_at(n, std::min(kDMax, 1 + k * bucket_));
      if (d != kDMax && index_at(n, d) != expect) corrupt(who + ": unaligned index entry inconsistent");
    }
    if (n == sink() && index_at(n, 0) != index_at(n, kDMax)) corrupt("sink neuron has synapses");

    for (std::uint32_t k = 0; k < nb; ++k) {
      const std::uint32_t lo = 1 + k * bucket_;
      const std::uint32_t hi = lo + bucket_;
      const std::uint64_t begin = index_at(n, lo);
      const std::uint64_t end = k + 1 < nb ? index_at(n, hi) : index_at(n, kDMax);
      if ((end - begin) % n_classes_ != 0) corrupt(who + ": block length not a multiple of n_classes");
      for (std::uint64_t o = begin; o < end; ++o) {
        const Synapse& s = records_[o];
        if (s.delay() < lo || s.delay() >= hi || s.delay() == 0)
          corrupt(who + ": record delay outside its bucket");
        if (s.target() >= n_neurons_) corrupt(who + ": target out of range");
        if (s.target() == sink()) {
          if (s.weight != 0.0f) corrupt(who + ": padding record with nonzero weight");
        } else if ((s.target() & mask) != ((o - begin) & mask)) {
          corrupt(who + ": record stored outside its congruence class");
        }
      }
    }
  }
}

StoreBuilder::StoreBuilder(std::uint32_t n_neurons, std::uint32_t n_classes, std::uint32_t bucket) {
  check_layout_params(n_neurons, n_classes, bucket);
  store_.n_neurons_ = n_neurons;
  store_.n_classes_ = n_classes;
  store_.bucket_ = bucket;
  store_.index_.reserve(static_cast<std::size_t>(n_neurons) * (kDMax + 1));
  store_.out_degree_.assign(n_neurons, 0);
  counts_.assign(static_cast<std::size_t>(store_.n_buckets()) * n_classes, 0);
  block_start_.assign(store_.n_buckets(), 0);
}

void StoreBuilder::close_until(std::uint32_t n) {
  const std::uint64_t end = store_.records_.size();
  for (; next_ < n; ++next_) store_.index_.insert(store_.index_.end(), kDMax + 1, end);
}

void StoreBuilder::append_neuron(std::uint32_t source, std::span<Synapse> syns) {
  require(source >= next_, "neurons must be appended in ascending order");
  require(source < store_.sink() || syns.empty(), "the sink neuron cannot have synapses");
  close_until(source);

  const std::uint32_t nc = store_.n_classes_;
  const std::uint32_t mask = nc - 1;
  const std::uint32_t bucket = store_.bucket_;
  const std::uint32_t nb = store_.n_buckets();
  const std::uint32_t sink = store_.sink();

  std::fill(counts_.begin(), counts_.end(), 0u);
  for (const Synapse& s : syns) {
    require(s.delay() >= 1 && s.delay() < kDMax, "synapse delay must lie in [1, d_max - 1]");
    require(s.target() < sink, "synapse target out of range or equal to the sink");
    ++counts_[((s.delay() - 1) / bucket) * nc + (s.target() & mask)];
  }

  auto key = [&](const Synapse& s) -> std::uint64_t {
    const std::uint64_t b = (s.delay() - 1) / bucket;
    return (b << 40) | (static_cast<std::uint64_t>(s.target() & mask) << 23) |
           (static_cast<std::uint64_t>(s.delay()) << 17) | s.target();
  };
  std::stable_sort(syns.begin(), syns.end(),
                   [&](const Synapse& a, const Synapse& b) { return key(a) < key(b); });

  auto& recs = store_.records_;
  for (std::uint32_t b = 0; b < nb; ++b) {
    const auto* row = &counts_[static_cast<std::size_t>(b) * nc];
    const std::uint32_t longest = *std::max_element(row, row + nc);
    block_start_[b] = recs.size();
    recs.insert(recs.end(), static_cast<std::size_t>(longest) * nc,
                Synapse::make(sink, 1 + b * bucket, 0.0f));
  }

  std::size_t i = 0;
  while (i < syns.size()) {
    const std::uint32_t b = (syns[i].delay() - 1) / bucket;
    const std::uint32_t c = syns[i].target() & mask;
    std::uint64_t pos = block_start_[b] + c;
    for (; i < syns.size() && (syns[i].delay() - 1) / bucket == b && (syns[i].target() & mask) == c;
         ++i, pos += nc)
      recs[pos] = syns[i];
  }

  const std::uint64_t end = recs.size();
  for (std::uint32_t d = 0; d <= kDMax; ++d) {
    const std::uint32_t k = first_bucket_at(d, bucket);
    store_.index_.push_back(k >= nb ? end : block_start_[k]);
  }
  store_.out_degree_[source] = static_cast<std::uint32_t>(syns.size());
  store_.real_count_ += syns.size();
  next_ = source + 1;
}

SynapseStore StoreBuilder::finish() {
  close_until(store_.n_neurons_);
  return std::move(store_);
}

LayoutCounter::LayoutCounter(std::uint32_t n_classes, std::uint32_t bucket)
    : n_classes_(n_classes), bucket_(bucket) {
  require(is_power_of_two(n_classes), "n_classes must be a power of two");
  require(is_power_of_two(bucket) && bucket <= kDMax, "bucket must be a power of two <= 64");
  counts_.assign(static_cast<std::size_t>(kDMax / bucket) * n_classes, 0);
}

void LayoutCounter::add_neuron(std::span<const Synapse> syns) {
  std::fill(counts_.begin(), counts_.end(), 0u);
  const std::uint32_t mask = n_classes_ - 1;
  for (const Synapse& s : syns) ++counts_[((s.delay() - 1) / bucket_) * n_classes_ + (s.target() & mask)];
  for (std::size_t b = 0; b < counts_.size(); b += n_classes_)
    stored_ += static_cast<std::uint64_t>(
                   *std::max_element(counts_.begin() + b, counts_.begin() + b + n_classes_)) *
               n_classes_;
  real_ += syns.size();
}

SynapseStore build_store(std::span<const SynapseSpec> synapses, std::uint32_t n_neurons,
                         std::uint32_t n_classes, std::uint32_t bucket) {
  std::vector<std::uint32_t> order(synapses.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return synapses[a].source < synapses[b].source;
  });

  StoreBuilder builder(n_neurons, n_classes, bucket);
  std::vector<Synapse> block;
  std::size_t i = 0;
  while (i < order.size()) {
    const std::uint32_t source = synapses[order[i]].source;
    require(source + 1 < n_neurons, "synapse source out of range or equal to the sink");
    block.clear();
    for (; i < order.size() && synapses[order[i]].source == source; ++i) {
      const auto& s = synapses[order[i]];
      require(s.delay >= 1 && s.delay < kDMax, "synapse delay must lie in [1, d_max - 1]");
      require(s.target + 1 < n_neurons, "synapse target out of range or equal to the sink");
      block.push_back(Synapse::make(s.target, s.delay, s.weight));
    }
    builder.append_neuron(source, block);
  }
  return builder.finish();
}

}  // namespace pdsim
