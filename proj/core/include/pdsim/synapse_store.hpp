#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pdsim {

/// Ring size of every delay-indexed structure; delays live in [1, kDMax - 1].
inline constexpr std::uint32_t kDMax = 64;
inline constexpr std::uint32_t kDMaxMask = kDMax - 1;
inline constexpr std::uint32_t kTargetBits = 17;
inline constexpr std::uint32_t kMaxNeurons = 1u << kTargetBits;

constexpr bool is_power_of_two(std::uint64_t v) noexcept { return v != 0 && (v & (v - 1)) == 0; }

/// 8-byte synapse record: bits 0..16 target, 17..22 delay, rest zero; f32 weight.
struct Synapse {
  std::uint32_t packed = 0;
  float weight = 0.0f;

  static constexpr Synapse make(std::uint32_t target, std::uint32_t delay, float weight) noexcept {
    return Synapse{(target & (kMaxNeurons - 1)) | ((delay & kDMaxMask) << kTargetBits), weight};
  }
  constexpr std::uint32_t target() const noexcept { return packed & (kMaxNeurons - 1); }
  constexpr std::uint32_t delay() const noexcept { return (packed >> kTargetBits) & kDMaxMask; }

  friend bool operator==(const Synapse&, const Synapse&) = default;
};
static_assert(sizeof(Synapse) == 8);

/// A synapse with an explicit source, as input to build_store.
struct SynapseSpec {
  std::uint32_t source = 0;
  std::uint32_t target = 0;
  std::uint32_t delay = 1;
  float weight = 0.0f;
};

struct RecordRange {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
  std::uint64_t size() const noexcept { return end - begin; }
};

/// Synapses sorted by source neuron and delay bucket, class-interleaved.
///
/// Bucket k covers delays [1 + k*bucket, 1 + (k+1)*bucket). Index row n holds
/// kDMax + 1 offsets: X[n][d] is the first record of neuron n whose bucket
/// starts at a delay >= d, so X[n][0] is the start of n's records and
/// X[n][kDMax] == X[n+1][0]. Inside each (neuron, bucket) block, class c
/// (target mod n_classes) occupies positions block_start + n_classes*i + c;
/// vacancies hold zero-weight padding records aimed at the sink neuron.
class SynapseStore {
 public:
  SynapseStore() = default;

  /// Assembles a store from raw parts; throws Error(format) unless every
  /// invariant holds.
  static SynapseStore from_parts(std::uint32_t n_neurons, std::uint32_t n_classes,
                                 std::uint32_t bucket, std::vector<std::uint64_t> index,
                                 std::vector<Synapse> records);

  std::uint32_t n_neurons() const noexcept { return n_neurons_; }
  std::uint32_t n_classes() const noexcept { return n_classes_; }
  std::uint32_t bucket() const noexcept { return bucket_; }
  std::uint32_t n_buckets() const noexcept { return bucket_ ? kDMax / bucket_ : 0; }
  std::uint32_t sink() const noexcept { return n_neurons_ - 1; }

  std::span<const Synapse> records() const noexcept { return records_; }
  std::span<const std::uint64_t> index() const noexcept { return index_; }
  std::uint64_t index_at(std::uint32_t n, std::uint32_t d) const noexcept {
    return index_[static_cast<std::size_t>(n) * (kDMax + 1) + d];
  }

  /// True when d is a valid range boundary: 0, kDMax, or 1 + k*bucket.
  bool is_aligned(std::uint32_t d) const noexcept {
    return d == 0 || d == kDMax || (d <= kDMax && (d - 1) % bucket_ == 0);
  }

  /// Records of neuron n whose delay falls in buckets covering [d_from, d_to).
  RecordRange range(std::uint32_t n, std::uint32_t d_from, std::uint32_t d_to) const;
  std::span<const Synapse> syns_from(std::uint32_t n, std::uint32_t d_from,
                                     std::uint32_t d_to) const {
    const auto r = range(n, d_from, d_to);
    return std::span<const Synapse>(records_).subspan(r.begin, r.size());
  }
  std::span<const Synapse> syns_from(std::uint32_t n) const { return syns_from(n, 0, kDMax); }

  bool is_padding(const Synapse& s) const noexcept { return s.target() == sink(); }

  std::uint64_t real_count() const noexcept { return real_count_; }
  std::uint64_t stored_count() const noexcept { return records_.size(); }
  double occupancy() const noexcept {
    return records_.empty() ? 1.0
                            : static_cast<double>(real_count_) / static_cast<double>(records_.size());
  }
  std::uint32_t real_out_degree(std::uint32_t n) const noexcept { return out_degree_[n]; }

  /// Throws Error(format) naming the first violated invariant.
  void check_invariants() const;

  friend bool operator==(const SynapseStore& a, const SynapseStore& b) {
    return a.n_neurons_ == b.n_neurons_ && a.n_classes_ == b.n_classes_ && a.bucket_ == b.bucket_ &&
           a.index_ == b.index_ && a.records_ == b.records_;
  }

 private:
  friend class StoreBuilder;
  void recount();

  std::uint32_t n_neurons_ = 0;
  std::uint32_t n_classes_ = 1;
  std::uint32_t bucket_ = 1;
  std::vector<std::uint64_t> index_;
  std::vector<Synapse> records_;
  std::vector<std::uint32_t> out_degree_;
  std::uint64_t real_count_ = 0;
};

/// Lays out one neuron's block at a time. Neurons must be appended in
/// ascending order; skipped neurons receive empty blocks.
class StoreBuilder {
 public:
  StoreBuilder(std::uint32_t n_neurons, std::uint32_t n_classes, std::uint32_t bucket);

  void reserve(std::uint64_t records) { store_.records_.reserve(records); }

  /// `syns` are the outgoing synapses of `source` (targets and delays in
  /// Synapse form); their order only breaks ties. The span is reordered.
  void append_neuron(std::uint32_t source, std::span<Synapse> syns);

  SynapseStore finish();

 private:
  void close_until(std::uint32_t n);

  SynapseStore store_;
  std::uint32_t next_ = 0;
  std::vector<std::uint32_t> counts_;
  std::vector<std::uint64_t> block_start_;
};

/// Counts stored records of the interleaved layout without materialising it.
class LayoutCounter {
 public:
  LayoutCounter(std::uint32_t n_classes, std::uint32_t bucket);

  void add_neuron(std::span<const Synapse> syns);

  std::uint32_t n_classes() const noexcept { return n_classes_; }
  std::uint32_t bucket() const noexcept { return bucket_; }
  std::uint64_t real() const noexcept { return real_; }
  std::uint64_t stored() const noexcept { return stored_; }
  double occupancy() const noexcept {
    return stored_ == 0 ? 1.0 : static_cast<double>(real_) / static_cast<double>(stored_);
  }

 private:
  std::uint32_t n_classes_;
  std::uint32_t bucket_;
  std::vector<std::uint32_t> counts_;
  std::uint64_t real_ = 0;
  std::uint64_t stored_ = 0;
};

/// Sorts, pads and indexes an arbitrary synapse list. The sink neuron is
/// n_neurons - 1 and must not appear as a source or target.
SynapseStore build_store(std::span<const SynapseSpec> synapses, std::uint32_t n_neurons,
                         std::uint32_t n_classes, std::uint32_t bucket);

}  // namespace pdsim
