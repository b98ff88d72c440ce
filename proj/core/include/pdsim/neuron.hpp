#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pdsim/netgen.hpp"
#include "pdsim/params.hpp"

namespace pdsim {

enum class Precision { f32, f64 };

/// Per-neuron LIF state. `u` is the deviation from the resting potential,
/// so the reset value is exactly zero.
template <typename Real>
struct NeuronState {
  std::vector<Real> u;
  std::vector<Real> i_syn;
  std::vector<std::int32_t> r;

  NeuronState() = default;
  explicit NeuronState(std::size_t n) : u(n, Real(0)), i_syn(n, Real(0)), r(n, 0) {}
  std::size_t size() const noexcept { return u.size(); }
};

template <typename Real>
NeuronState<Real> initial_state(const Network& net);

/// One tick for neurons [begin, end):
///   i_syn <- p11*i_syn + thalamic*w_thalamic + delivered
///   if r > 0: u <- 0, r <- r - 1
///   else:     u <- p22*u + p21*i_syn; spike when u >= u_thr_dev (u <- 0, r <- ref_ticks)
/// Spiking ids are appended to `spiked` in ascending order.
template <typename Real>
void update_range(NeuronState<Real>& s, const Coefficients& c, std::span<const float> delivered,
                  std::span<const std::uint32_t> thalamic, std::uint32_t begin, std::uint32_t end,
                  std::vector<std::uint32_t>& spiked);

/// As update_range, with a constant external current per neuron instead of
/// thalamic spike counts.
template <typename Real>
void update_range_dc(NeuronState<Real>& s, const Coefficients& c, std::span<const float> delivered,
                     std::span<const double> dc_current, std::uint32_t begin, std::uint32_t end,
                     std::vector<std::uint32_t>& spiked);

/// Whole-network tick; throws Error(invalid_argument) on length mismatch.
template <typename Real>
std::vector<std::uint32_t> update_tick(NeuronState<Real>& s, const Coefficients& c,
                                       std::span<const float> delivered,
                                       std::span<const std::uint32_t> thalamic);

/// Independent Poisson thalamic spike counts, lambda = v_th * K * dt per tick.
class ThalamicSource {
 public:
  ThalamicSource(const Network& net, std::uint64_t seed);

  /// Deterministic in (seed, tick).
  void draw(std::uint64_t tick, std::span<std::uint32_t> out) const;

  double lambda(std::uint32_t neuron) const noexcept;
  std::span<const double> population_lambdas() const noexcept { return lambda_; }

 private:
  std::uint64_t seed_;
  std::uint32_t n_neurons_;
  std::vector<std::uint32_t> begin_, end_;
  std::vector<double> lambda_, exp_neg_lambda_;
  std::vector<std::uint8_t> pop_of_;
};

/// Mean thalamic spikes per tick for fan-in k.
double thalamic_lambda(const SimParams& sp, std::int64_t k_thalamic) noexcept;

/// Constant per-tick current with the same long-run mean as the Poisson
/// drive: v_th * K * dt * w_ext * w_f. Zero for K = 0 or v_th = 0.
double dc_approximation(const Coefficients& c, const SimParams& sp, std::int64_t k_thalamic) noexcept;

/// Per-neuron DC currents for a network (sink gets 0).
std::vector<double> dc_currents(const Network& net);

}  // namespace pdsim
