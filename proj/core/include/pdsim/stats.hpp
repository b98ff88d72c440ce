#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdsim/spike_train.hpp"

namespace pdsim {

inline constexpr int kStatsVersion = 1;
inline constexpr std::uint32_t kDefaultGridPoints = 512;
inline constexpr double kKlFloor = 1e-12;

/// One vector per population, in population order.
using PopulationSamples = std::vector<std::vector<double>>;

/// Post-warm-up spike count over post-warm-up duration, Hz, every neuron.
PopulationSamples firing_rates(const SpikeTrain& train);

/// sd/mean of post-warm-up interspike intervals (sample sd); only neurons
/// with at least three spikes contribute.
PopulationSamples cv_isi(const SpikeTrain& train);

/// Within-population Pearson coefficients of binned post-warm-up spike
/// counts for a seeded sample of neurons. Pairs with a constant train are
/// dropped. A sample larger than its population is clipped and reported in
/// `warnings` when given.
PopulationSamples pearson_binned(const SpikeTrain& train, double bin_ms, std::uint32_t sample_size,
                                 std::uint64_t seed, std::vector<std::string>* warnings = nullptr);

struct Kde {
  double bandwidth = 0.0;
  std::vector<double> grid;
  std::vector<double> density;

  double spacing() const noexcept { return grid.size() > 1 ? grid[1] - grid[0] : 0.0; }
  /// Riemann sum of the density over the grid.
  double integral() const noexcept;
  /// Density at x by linear interpolation, 0 outside the grid.
  double at(double x) const noexcept;
};

/// Gaussian KDE, Scott bandwidth sd * n^(-1/5), on grid_points points over
/// [min - 3h, max + 3h], normalised so the grid sum times spacing is 1.
/// Throws Error(invalid_argument) for fewer than two points or zero variance.
Kde kde(std::span<const double> sample, std::uint32_t grid_points = kDefaultGridPoints);

/// KL(p || q) in nats after resampling both curves onto grid_points points
/// spanning the union of their grids, flooring at `floor` and renormalising.
double kl_divergence(const Kde& p, const Kde& q, std::uint32_t grid_points = kDefaultGridPoints,
                     double floor = kKlFloor);

struct StatsOptions {
  double bin_ms = 2.0;
  std::uint32_t sample_size = 200;
  std::uint64_t sample_seed = 0;
  std::uint32_t grid_points = kDefaultGridPoints;
};

/// Free-form run description carried into the report header.
struct RunDescription {
  std::uint64_t seed = 0;
  double scale = 0.0;
  std::string algorithm;
  std::string exec;
  std::string precision;
  std::string thalamic;
};

inline constexpr std::array<std::string_view, 3> kStatisticNames = {"rate", "cv_isi", "pearson"};

struct PopulationStats {
  std::string name;
  std::uint32_t n_neurons = 0;
  std::array<std::vector<double>, 3> samples;  // indexed like kStatisticNames
  std::array<std::optional<Kde>, 3> kde;       // empty when the sample is degenerate
};

struct StatsReport {
  RunDescription run;
  std::uint64_t n_ticks = 0;
  std::uint64_t warmup_ticks = 0;
  double dt = 0.0;
  StatsOptions options;
  double kl_floor = kKlFloor;
  std::vector<PopulationStats> pops;
  std::vector<std::string> warnings;
};

StatsReport compute_stats(const SpikeTrain& train, const StatsOptions& opts,
                          RunDescription run = {});

/// KL(a || b) per population and statistic; nullopt where either side has
/// no density.
struct KlTable {
  std::vector<std::string> pops;
  std::vector<std::array<std::optional<double>, 3>> values;

  /// Median over populations of one statistic, ignoring missing entries.
  std::optional<double> median(std::size_t statistic) const;
};

/// Throws Error(format) unless both reports share populations, binning and grid.
KlTable compare_runs(const StatsReport& a, const StatsReport& b);

std::string report_to_json(const StatsReport& r);
StatsReport report_from_json(std::string_view text);
std::string kl_table_to_json(const KlTable& t);

}  // namespace pdsim
