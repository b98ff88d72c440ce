#include "pdsim/neuron.hpp"

#include <cmath>

#include "pdsim/error.hpp"
#include "pdsim/rng.hpp"

namespace pdsim {

namespace {

template <typename Real, typename External>
void advance(NeuronState<Real>& s, const Coefficients& c, std::span<const float> delivered,
             External external, std::uint32_t begin, std::uint32_t end,
             std::vector<std::uint32_t>& spiked) {
  const Real p11 = static_cast<Real>(c.p11);
  const Real p22 = static_cast<Real>(c.p22);
  const Real p21 = static_cast<Real>(c.p21);
  const Real thr = static_cast<Real>(c.u_thr_dev);
  const std::int32_t ref = c.ref_ticks;
  Real* u = s.u.data();
  Real* cur = s.i_syn.data();
  std::int32_t* r = s.r.data();

  for (std::uint32_t i = begin; i < end; ++i) {
    cur[i] = p11 * cur[i] + external(i) + static_cast<Real>(delivered[i]);
    if (r[i] > 0) {
      u[i] = Real(0);
      --r[i];
      continue;
    }
    const Real x = p22 * u[i] + p21 * cur[i];
    if (x >= thr) {
      u[i] = Real(0);
      r[i] = ref;
      spiked.push_back(i);
    } else {
      u[i] = x;
    }
  }
}

}  // namespace

template <typename Real>
NeuronState<Real> initial_state(const Network& net) {
  NeuronState<Real> s(net.n_neurons);
  for (std::uint32_t i = 0; i < net.n_neurons; ++i) s.u[i] = static_cast<Real>(net.u_init[i]);
  return s;
}

template <typename Real>
void update_range(NeuronState<Real>& s, const Coefficients& c, std::span<const float> delivered,
                  std::span<const std::uint32_t> thalamic, std::uint32_t begin, std::uint32_t end,
                  std::vector<std::uint32_t>& spiked) {
  const Real w = static_cast<Real>(c.w_thalamic);
  const std::uint32_t* t = thalamic.data();
  advance(s, c, delivered, [=](std::uint32_t i) { return static_cast<Real>(t[i]) * w; }, begin, end,
          spiked);
}

template <typename Real>
void update_range_dc(NeuronState<Real>& s, const Coefficients& c, std::span<const float> delivered,
                     std::span<const double> dc_current, std::uint32_t begin, std::uint32_t end,
                     std::vector<std::uint32_t>& spiked) {
  const double* dc = dc_current.data();
  advance(s, c, delivered, [=](std::uint32_t i) { return static_cast<Real>(dc[i]); }, begin, end,
          spiked);
}

template <typename Real>
std::vector<std::uint32_t> update_tick(NeuronState<Real>& s, const Coefficients& c,
                                       std::span<const float> delivered,
                                       std::span<const std::uint32_t> thalamic) {
  const std::size_t n = s.size();
  require(s.i_syn.size() == n && s.r.size() == n, "inconsistent neuron state");
  require(delivered.size() == n, "delivered current must have one entry per neuron");
  require(thalamic.size() == n, "thalamic counts must have one entry per neuron");
  std::vector<std::uint32_t> spiked;
  update_range(s, c, delivered, thalamic, 0, static_cast<std::uint32_t>(n), spiked);
  return spiked;
}

template NeuronState<float> initial_state<float>(const Network&);
template NeuronState<double> initial_state<double>(const Network&);
template void update_range<float>(NeuronState<float>&, const Coefficients&, std::span<const float>,
                                  std::span<const std::uint32_t>, std::uint32_t, std::uint32_t,
                                  std::vector<std::uint32_t>&);
template void update_range<double>(NeuronState<double>&, const Coefficients&, std::span<const float>,
                                   std::span<const std::uint32_t>, std::uint32_t, std::uint32_t,
                                   std::vector<std::uint32_t>&);
template void update_range_dc<float>(NeuronState<float>&, const Coefficients&,
                                     std::span<const float>, std::span<const double>,
                                     std::uint32_t, std::uint32_t, std::vector<std::uint32_t>&);
template void update_range_dc<double>(NeuronState<double>&, const Coefficients&,
                                      std::span<const float>, std::span<const double>,
                                      std::uint32_t, std::uint32_t, std::vector<std::uint32_t>&);
template std::vector<std::uint32_t> update_tick<float>(NeuronState<float>&, const Coefficients&,
                                                       std::span<const float>,
                                                       std::span<const std::uint32_t>);
template std::vector<std::uint32_t> update_tick<double>(NeuronState<double>&, const Coefficients&,
                                                        std::span<const float>,
                                                        std::span<const std::uint32_t>);

double thalamic_lambda(const SimParams& sp, std::int64_t k_thalamic) noexcept {
  return sp.v_th * static_cast<double>(k_thalamic) * sp.dt * 1e-3;
}

double dc_approximation(const Coefficients& c, const SimParams& sp, std::int64_t k_thalamic) noexcept {
  return thalamic_lambda(sp, k_thalamic) * c.w_thalamic;
}

std::vector<double> dc_currents(const Network& net) {
  std::vector<double> out(net.n_neurons, 0.0);
  for (const auto& p : net.pops) {
    const double v = dc_approximation(net.coeffs, net.sim, p.k_thalamic);
    for (std::uint32_t i = p.begin; i < p.end; ++i) out[i] = v;
  }
  return out;
}

ThalamicSource::ThalamicSource(const Network& net, std::uint64_t seed)
    : seed_(seed), n_neurons_(net.n_neurons), pop_of_(net.pop_of) {
  for (const auto& p : net.pops) {
    begin_.push_back(p.begin);
    end_.push_back(p.end);
    const double lam = thalamic_lambda(net.sim, p.k_thalamic);
    lambda_.push_back(lam);
    exp_neg_lambda_.push_back(std::exp(-lam));
  }
}

void ThalamicSource::draw(std::uint64_t tick, std::span<std::uint32_t> out) const {
  require(out.size() == n_neurons_, "thalamic buffer must have one entry per neuron");
  Rng rng(seed_, StreamTag::thalamic, tick);
  for (std::size_t p = 0; p < begin_.size(); ++p) {
    const double lam = lambda_[p];
    const double e = exp_neg_lambda_[p];
    for (std::uint32_t i = begin_[p]; i < end_[p]; ++i) out[i] = rng.poisson(lam, e);
  }
  out[n_neurons_ - 1] = 0;
}

double ThalamicSource::lambda(std::uint32_t neuron) const noexcept {
  const auto p = pop_of_[neuron];
  return p < lambda_.size() ? lambda_[p] : 0.0;
}

}  // namespace pdsim
