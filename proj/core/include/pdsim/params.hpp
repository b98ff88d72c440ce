#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pdsim {

struct Gaussian {
  double mean = 0.0;
  double sd = 0.0;

  friend bool operator==(const Gaussian&, const Gaussian&) = default;
};

/// General and simulation parameters. Units: ms, pF, mV, Hz.
struct SimParams {
  double dt = 0.1;
  double c_m = 250.0;
  double tau_m = 10.0;
  double tau_ref = 2.0;
  double tau_syn = 0.5;
  double u_rest = -65.0;
  double u_thr = -50.0;
  double v_th = 8.0;
  double w_ext = 0.15;

  friend bool operator==(const SimParams&, const SimParams&) = default;
};

enum class Polarity : std::uint8_t { excitatory, inhibitory };

struct PopulationSpec {
  int index = 0;        // 1-based, ordering of the population table
  std::string name;     // e.g. "L23/exc"
  std::string key;      // config-file key, e.g. "L23e"
  Polarity polarity = Polarity::excitatory;
  std::int64_t n = 0;
  std::int64_t k_thalamic = 0;
  Gaussian u_init;      // mV, absolute potential
  Gaussian w_amp;       // mV
  Gaussian delay;       // ms

  friend bool operator==(const PopulationSpec&, const PopulationSpec&) = default;
};

/// p[source][target]: probability that a neuron of the row population
/// connects to a neuron of the column population.
struct ConnectivityMatrix {
  std::vector<std::vector<double>> p;

  double at(std::size_t source, std::size_t target) const { return p[source][target]; }
  std::size_t size() const { return p.size(); }

  friend bool operator==(const ConnectivityMatrix&, const ConnectivityMatrix&) = default;
};

/// Overrides the amplitude distribution for one (source, target) pair.
struct AmplitudeException {
  std::size_t source = 0;  // 0-based population position
  std::size_t target = 0;
  Gaussian w_amp;

  friend bool operator==(const AmplitudeException&, const AmplitudeException&) = default;
};

struct ModelConfig {
  SimParams sim;
  std::vector<PopulationSpec> pops;
  ConnectivityMatrix conn;
  std::vector<AmplitudeException> exceptions;

  /// Amplitude distribution for synapses from `source` onto `target`.
  const Gaussian& amplitude(std::size_t source, std::size_t target) const;
  std::size_t find_population(std::string_view name_or_key) const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct Coefficients {
  double p11 = 0.0;
  double p22 = 0.0;
  double p21 = 0.0;
  double w_f = 0.0;
  double u_thr_dev = 0.0;
  std::int32_t ref_ticks = 0;
  double w_thalamic = 0.0;

  friend bool operator==(const Coefficients&, const Coefficients&) = default;
};

struct ValidationError {
  std::string field;
  std::string message;
};

/// The full-scale microcircuit: 8 populations, L23/exc first.
ModelConfig default_model();

/// Throws Error(invalid_argument) when tau_m == tau_syn or dt/tau are not positive.
Coefficients derive_coefficients(const SimParams& sp);

std::vector<ValidationError> validate(const ModelConfig& model);

/// Throws Error(invalid_argument) listing every violation.
void require_valid(const ModelConfig& model);

/// `key = value` text. Keys not present keep the values of `base`.
ModelConfig parse_model_config(std::string_view text, const ModelConfig& base = default_model());
ModelConfig load_model_config(const std::filesystem::path& path,
                              const ModelConfig& base = default_model());
/// Complete key/value dump; parse_model_config(format_model_config(m)) == m.
std::string format_model_config(const ModelConfig& model);

}  // namespace pdsim
