#include "pdsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "json.hpp"
#include "pdsim/error.hpp"
#include "pdsim/rng.hpp"

namespace pdsim {

namespace {

using json = nlohmann::json;

double duration_s(const SpikeTrain& t) {
  require(t.warmup_ticks < t.n_ticks, "warm-up must be shorter than the run");
  return static_cast<double>(t.n_ticks - t.warmup_ticks) * t.dt / 1000.0;
}

// Post-warm-up spike ticks grouped by neuron (CSR).
struct PerNeuron {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> ticks;

  std::span<const std::uint32_t> of(std::uint32_t n) const {
    return std::span<const std::uint32_t>(ticks).subspan(offsets[n], offsets[n + 1] - offsets[n]);
  }
};

PerNeuron group_by_neuron(const SpikeTrain& t) {
  PerNeuron g;
  g.offsets.assign(t.n_neurons + 1, 0);
  const std::size_t first = t.first_post_warmup();
  for (std::size_t k = first; k < t.events.size(); ++k) {
    const auto& e = t.events[k];
    if (e.neuron >= t.n_neurons || e.tick >= t.n_ticks)
      fail(ErrorKind::format, "spike (" + std::to_string(e.tick) + ", " + std::to_string(e.neuron) +
                                  ") outside the run");
    ++g.offsets[e.neuron + 1];
  }
  for (std::uint32_t n = 0; n < t.n_neurons; ++n) g.offsets[n + 1] += g.offsets[n];
  g.ticks.resize(g.offsets.back());
  std::vector<std::size_t> fill(g.offsets.begin(), g.offsets.end() - 1);
  for (std::size_t k = first; k < t.events.size(); ++k)
    g.ticks[fill[t.events[k].neuron]++] = t.events[k].tick;
  for (std::uint32_t n = 0; n < t.n_neurons; ++n)
    std::sort(g.ticks.begin() + static_cast<std::ptrdiff_t>(g.offsets[n]),
              g.ticks.begin() + static_cast<std::ptrdiff_t>(g.offsets[n + 1]));
  return g;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

PopulationSamples rates_from(const SpikeTrain& t, const PerNeuron& g) {
  const double dur = duration_s(t);
  PopulationSamples out;
  for (const auto& p : t.pops) {
    auto& v = out.emplace_back();
    v.reserve(p.size());
    for (std::uint32_t n = p.begin; n < p.end; ++n)
      v.push_back(static_cast<double>(g.of(n).size()) / dur);
  }
  return out;
}

PopulationSamples cv_from(const SpikeTrain& t, const PerNeuron& g) {
  PopulationSamples out;
  std::vector<double> isi;
  for (const auto& p : t.pops) {
    auto& v = out.emplace_back();
    for (std::uint32_t n = p.begin; n < p.end; ++n) {
      const auto s = g.of(n);
      if (s.size() < 3) continue;
      isi.clear();
      for (std::size_t k = 1; k < s.size(); ++k) isi.push_back((s[k] - s[k - 1]) * t.dt);
      v.push_back(sample_sd(isi) / mean_of(isi));
    }
  }
  return out;
}

PopulationSamples pearson_from(const SpikeTrain& t, const PerNeuron& g, double bin_ms,
                               std::uint32_t sample_size, std::uint64_t seed,
                               std::vector<std::string>* warnings) {
  require(bin_ms > 0, "bin width must be positive");
  const double ratio = bin_ms / t.dt;
  const auto bin_ticks = static_cast<std::uint64_t>(std::llround(ratio));
  require(bin_ticks >= 1 && std::abs(ratio - static_cast<double>(bin_ticks)) < 1e-9,
          "bin width must be a multiple of dt");
  duration_s(t);
  const std::uint64_t n_bins = (t.n_ticks - t.warmup_ticks) / bin_ticks;

  PopulationSamples out;
  std::vector<std::vector<double>> binned;
  std::vector<double> norm;
  for (std::size_t pi = 0; pi < t.pops.size(); ++pi) {
    const auto& p = t.pops[pi];
    auto& v = out.emplace_back();
    std::uint32_t k = sample_size;
    if (k > p.size()) {
      if (warnings)
        warnings->push_back("population " + p.name + ": sample size " + std::to_string(sample_size) +
                            " clipped to " + std::to_string(p.size()));
      k = p.size();
    }
    std::vector<std::uint32_t> ids(p.size());
    std::iota(ids.begin(), ids.end(), p.begin);
    Rng rng(seed, StreamTag::stats_sample, pi);
    for (std::uint32_t i = 0; i < k; ++i)
      std::swap(ids[i], ids[i + rng.below(ids.size() - i)]);
    ids.resize(k);
    std::sort(ids.begin(), ids.end());

    // Centred bin counts; constant trains are dropped.
    binned.clear();
    norm.clear();
    for (auto n : ids) {
      std::vector<double> b(n_bins, 0.0);
      for (auto tick : g.of(n)) {
        const std::uint64_t bi = (tick - t.warmup_ticks) / bin_ticks;
        if (bi < n_bins) b[bi] += 1.0;
      }
      const double m = n_bins ? mean_of(b) : 0.0;
      double ss = 0.0;
      for (auto& x : b) {
        x -= m;
        ss += x * x;
      }
      if (ss <= 0.0) continue;
      binned.push_back(std::move(b));
      norm.push_back(std::sqrt(ss));
    }
    for (std::size_t i = 0; i < binned.size(); ++i)
      for (std::size_t j = i + 1; j < binned.size(); ++j) {
        const double dot = std::inner_product(binned[i].begin(), binned[i].end(),
                                              binned[j].begin(), 0.0);
        v.push_back(std::clamp(dot / (norm[i] * norm[j]), -1.0, 1.0));
      }
  }
  return out;
}

std::vector<double> resample(const Kde& k, double lo, double step, std::uint32_t points,
                             double floor) {
  std::vector<double> v(points);
  double sum = 0.0;
  for (std::uint32_t i = 0; i < points; ++i) {
    v[i] = std::max(k.at(lo + step * i), floor);
    sum += v[i];
  }
  for (auto& x : v) x /= sum * step;
  return v;
}

json kde_to_json(const std::optional<Kde>& k) {
  if (!k) return nullptr;
  return {{"bandwidth", k->bandwidth},
          {"grid_min", k->grid.front()},
          {"grid_max", k->grid.back()},
          {"density", k->density}};
}

std::optional<Kde> kde_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  Kde k;
  k.bandwidth = j.at("bandwidth").get<double>();
  k.density = j.at("density").get<std::vector<double>>();
  const double lo = j.at("grid_min").get<double>();
  const double hi = j.at("grid_max").get<double>();
  const std::size_t n = k.density.size();
  if (n < 2) fail(ErrorKind::format, "density curve needs at least two points");
  k.grid.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    k.grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return k;
}

}  // namespace

PopulationSamples firing_rates(const SpikeTrain& train) {
  return rates_from(train, group_by_neuron(train));
}

PopulationSamples cv_isi(const SpikeTrain& train) { return cv_from(train, group_by_neuron(train)); }

PopulationSamples pearson_binned(const SpikeTrain& train, double bin_ms, std::uint32_t sample_size,
                                 std::uint64_t seed, std::vector<std::string>* warnings) {
  return pearson_from(train, group_by_neuron(train), bin_ms, sample_size, seed, warnings);
}

double Kde::integral() const noexcept {
  return std::accumulate(density.begin(), density.end(), 0.0) * spacing();
}

double Kde::at(double x) const noexcept {
  if (grid.size() < 2 || x < grid.front() || x > grid.back()) return 0.0;
  const double pos = (x - grid.front()) / spacing();
  const auto i = std::min(static_cast<std::size_t>(pos), grid.size() - 2);
  const double f = pos - static_cast<double>(i);
  return density[i] * (1.0 - f) + density[i + 1] * f;
}

Kde kde(std::span<const double> sample, std::uint32_t grid_points) {
  require(sample.size() >= 2, "density estimate needs at least two values");
  require(grid_points >= 2, "density grid needs at least two points");
  const double sd = sample_sd(sample);
  require(sd > 0.0 && std::isfinite(sd), "density estimate of a sample with zero variance");
  Kde k;
  k.bandwidth = sd * std::pow(static_cast<double>(sample.size()), -0.2);
  const auto [mn, mx] = std::minmax_element(sample.begin(), sample.end());
  const double lo = *mn - 3 * k.bandwidth;
  const double hi = *mx + 3 * k.bandwidth;
  k.grid.resize(grid_points);
  k.density.assign(grid_points, 0.0);
  for (std::uint32_t i = 0; i < grid_points; ++i)
    k.grid[i] = lo + (hi - lo) * static_cast<double>(i) / (grid_points - 1);
  const double inv_h = 1.0 / k.bandwidth;
  for (std::uint32_t i = 0; i < grid_points; ++i) {
    double acc = 0.0;
    for (double s : sample) {
      const double z = (k.grid[i] - s) * inv_h;
      acc += std::exp(-0.5 * z * z);
    }
    k.density[i] = acc;
  }
  const double mass = std::accumulate(k.density.begin(), k.density.end(), 0.0) * k.spacing();
  for (auto& d : k.density) d /= mass;
  return k;
}

double kl_divergence(const Kde& p, const Kde& q, std::uint32_t grid_points, double floor) {
  require(grid_points >= 2, "KL grid needs at least two points");
  require(p.grid.size() >= 2 && q.grid.size() >= 2, "KL needs two density curves");
  const double lo = std::min(p.grid.front(), q.grid.front());
  const double hi = std::max(p.grid.back(), q.grid.back());
  const double step = (hi - lo) / (grid_points - 1);
  const auto pv = resample(p, lo, step, grid_points, floor);
  const auto qv = resample(q, lo, step, grid_points, floor);
  double kl = 0.0;
  for (std::uint32_t i = 0; i < grid_points; ++i) kl += pv[i] * std::log(pv[i] / qv[i]);
  return std::max(0.0, kl * step);
}

StatsReport compute_stats(const SpikeTrain& train, const StatsOptions& opts, RunDescription run) {
  StatsReport r;
  r.run = std::move(run);
  r.n_ticks = train.n_ticks;
  r.warmup_ticks = train.warmup_ticks;
  r.dt = train.dt;
  r.options = opts;
  const auto g = group_by_neuron(train);
  std::array<PopulationSamples, 3> all = {
      rates_from(train, g), cv_from(train, g),
      pearson_from(train, g, opts.bin_ms, opts.sample_size, opts.sample_seed, &r.warnings)};
  for (std::size_t pi = 0; pi < train.pops.size(); ++pi) {
    auto& ps = r.pops.emplace_back();
    ps.name = train.pops[pi].name;
    ps.n_neurons = train.pops[pi].size();
    for (std::size_t s = 0; s < 3; ++s) {
      ps.samples[s] = std::move(all[s][pi]);
      try {
        ps.kde[s] = kde(ps.samples[s], opts.grid_points);
      } catch (const Error&) {
        r.warnings.push_back("population " + ps.name + ": no density for " +
                             std::string(kStatisticNames[s]) + " (" +
                             std::to_string(ps.samples[s].size()) + " values, degenerate)");
      }
    }
  }
  return r;
}

std::optional<double> KlTable::median(std::size_t statistic) const {
  std::vector<double> v;
  for (const auto& row : values)
    if (row[statistic]) v.push_back(*row[statistic]);
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

KlTable compare_runs(const StatsReport& a, const StatsReport& b) {
  if (a.options.bin_ms != b.options.bin_ms || a.options.sample_size != b.options.sample_size ||
      a.options.grid_points != b.options.grid_points || a.kl_floor != b.kl_floor)
    fail(ErrorKind::format, "reports use different binning or grid parameters");
  if (a.pops.size() != b.pops.size())
    fail(ErrorKind::format, "reports have different populations");
  KlTable t;
  for (std::size_t i = 0; i < a.pops.size(); ++i) {
    if (a.pops[i].name != b.pops[i].name)
      fail(ErrorKind::format, "population mismatch: " + a.pops[i].name + " vs " + b.pops[i].name);
    t.pops.push_back(a.pops[i].name);
    auto& row = t.values.emplace_back();
    for (std::size_t s = 0; s < 3; ++s)
      if (a.pops[i].kde[s] && b.pops[i].kde[s])
        row[s] = kl_divergence(*a.pops[i].kde[s], *b.pops[i].kde[s], a.options.grid_points,
                               a.kl_floor);
  }
  return t;
}

std::string report_to_json(const StatsReport& r) {
  json pops = json::array();
  for (const auto& p : r.pops) {
    json j = {{"name", p.name}, {"n_neurons", p.n_neurons}};
    json k = json::object();
    for (std::size_t s = 0; s < 3; ++s) {
      j[std::string(kStatisticNames[s])] = p.samples[s];
      k[std::string(kStatisticNames[s])] = kde_to_json(p.kde[s]);
    }
    j["kde"] = std::move(k);
    pops.push_back(std::move(j));
  }
  json out = {
      {"stats_version", kStatsVersion},
      {"metadata",
       {{"seed", r.run.seed},
        {"scale", r.run.scale},
        {"algorithm", r.run.algorithm},
        {"exec", r.run.exec},
        {"precision", r.run.precision},
        {"thalamic", r.run.thalamic},
        {"n_ticks", r.n_ticks},
        {"warmup_ticks", r.warmup_ticks},
        {"dt", r.dt},
        {"bin_ms", r.options.bin_ms},
        {"sample_size", r.options.sample_size},
        {"sample_seed", r.options.sample_seed},
        {"grid_points", r.options.grid_points},
        {"kl_floor", r.kl_floor}}},
      {"populations", std::move(pops)},
      {"warnings", r.warnings},
  };
  return out.dump(1);
}

StatsReport report_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (!j.contains("stats_version") || j.at("stats_version").get<int>() != kStatsVersion)
      fail(ErrorKind::format, "unsupported or missing stats_version");
    StatsReport r;
    const auto& m = j.at("metadata");
    r.run.seed = m.at("seed").get<std::uint64_t>();
    r.run.scale = m.at("scale").get<double>();
    r.run.algorithm = m.at("algorithm").get<std::string>();
    r.run.exec = m.at("exec").get<std::string>();
    r.run.precision = m.at("precision").get<std::string>();
    r.run.thalamic = m.at("thalamic").get<std::string>();
    r.n_ticks = m.at("n_ticks").get<std::uint64_t>();
    r.warmup_ticks = m.at("warmup_ticks").get<std::uint64_t>();
    r.dt = m.at("dt").get<double>();
    r.options.bin_ms = m.at("bin_ms").get<double>();
    r.options.sample_size = m.at("sample_size").get<std::uint32_t>();
    r.options.sample_seed = m.at("sample_seed").get<std::uint64_t>();
    r.options.grid_points = m.at("grid_points").get<std::uint32_t>();
    r.kl_floor = m.at("kl_floor").get<double>();
    for (const auto& pj : j.at("populations")) {
      auto& p = r.pops.emplace_back();
      p.name = pj.at("name").get<std::string>();
      p.n_neurons = pj.at("n_neurons").get<std::uint32_t>();
      for (std::size_t s = 0; s < 3; ++s) {
        const std::string key(kStatisticNames[s]);
        p.samples[s] = pj.at(key).get<std::vector<double>>();
        p.kde[s] = kde_from_json(pj.at("kde").at(key));
      }
    }
    r.warnings = j.value("warnings", std::vector<std::string>{});
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::format, std::string("malformed stats report: ") + e.what());
  }
}

std::string kl_table_to_json(const KlTable& t) {
  json rows = json::array();
  for (std::size_t i = 0; i < t.pops.size(); ++i) {
    json row = {{"population", t.pops[i]}};
    for (std::size_t s = 0; s < 3; ++s) {
      const std::string key(kStatisticNames[s]);
      row[key] = t.values[i][s] ? json(*t.values[i][s]) : json(nullptr);
    }
    rows.push_back(std::move(row));
  }
  json med = json::object();
  for (std::size_t s = 0; s < 3; ++s) {
    const auto m = t.median(s);
    med[std::string(kStatisticNames[s])] = m ? json(*m) : json(nullptr);
  }
  json out = {{"stats_version", kStatsVersion}, {"kl", std::move(rows)}, {"median", std::move(med)}};
  return out.dump(1);
}

}  // namespace pdsim
