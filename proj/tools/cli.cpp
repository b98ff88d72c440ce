#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pdsim/engine.hpp"
#include "pdsim/error.hpp"
#include "pdsim/netgen.hpp"
#include "pdsim/network_io.hpp"
#include "pdsim/params.hpp"
#include "pdsim/spike_io.hpp"
#include "pdsim/stats.hpp"

namespace pdsim::cli {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return kUsage;
    case ErrorKind::format:
    case ErrorKind::io: return kData;
    default: return kRuntime;
  }
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open " + path + " for writing");
  out << text;
  out.close();
  if (!out) fail(ErrorKind::io, "write failed: " + path);
}

ModelConfig model_from(const std::string& config) {
  return config.empty() ? default_model() : load_model_config(config);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// --- generate --------------------------------------------------------------

struct GenerateArgs {
  std::uint64_t seed = 0;
  double scale = 1.0;
  std::uint32_t classes = 1;
  std::uint32_t bucket = 1;
  std::string config;
  std::string out;
  bool plan_only = false;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
  const auto model = model_from(a.config);
  if (a.plan_only) {
    const std::uint32_t cls[] = {a.classes};
    const auto st = plan_store_layout(model, a.scale, a.seed, cls, a.bucket)[0];
    out << "classes " << st.n_classes << "  bucket " << st.bucket << "\n"
        << "synapses " << st.real << "  stored " << st.stored << "  occupancy "
        << fixed(st.occupancy(), 4) << "\n";
    return kOk;
  }
  require(!a.out.empty(), "generate needs -o/--out (or --plan)");
  const auto t0 = Clock::now();
  const Network net = generate(model, {a.scale, a.seed, a.classes, a.bucket});
  const double gen = seconds_since(t0);
  write_network(net, a.out);
  err << "generated in " << fixed(gen, 2) << " s\n";
  out << "neurons " << net.n_neurons - 1 << " (+1 sink)\n"
      << "synapses " << net.store.real_count() << "  stored " << net.store.stored_count()
      << "  occupancy " << fixed(net.store.occupancy(), 4) << "\n"
      << "classes " << net.store.n_classes() << "  bucket " << net.store.bucket() << "\n";
  return kOk;
}

// --- run -------------------------------------------------------------------

struct EngineArgs {
  std::string algo = "gmem";
  std::string exec = "mono";
  std::string precision = "f32";
  std::string thalamic = "poisson";
  std::uint32_t h = 16;
  std::optional<std::uint32_t> sc;
  std::uint32_t lc = 16;
  std::uint32_t su = 1;
  std::uint32_t uw = 16;
  std::uint64_t ticks = 100000;
  std::uint64_t warmup = 10000;
  std::uint64_t seed = 0;
  std::size_t queue_capacity = 65536;
  std::uint64_t timeout_ms = 60000;
  bool audit = false;
};

void add_engine_options(CLI::App* c, EngineArgs& e, bool with_grid_fields) {
  if (with_grid_fields) {
    c->add_option("--algo", e.algo, "gmem, jit, horiz or pull")->capture_default_str();
    c->add_option("--exec", e.exec, "mono or multi")->capture_default_str();
    c->add_option("--precision", e.precision, "f32 or f64")->capture_default_str();
    c->add_option("--h", e.h, "horizon (horiz)")->capture_default_str();
    c->add_option("--lc", e.lc, "lane count (jit)")->capture_default_str();
    c->add_option("--su", e.su, "synapse unroll hint")->capture_default_str();
    c->add_option("--uw", e.uw, "update width")->capture_default_str();
    c->add_option("--seed", e.seed, "thalamic input seed")->capture_default_str();
  }
  c->add_option("--sc", e.sc, "synapse classes (defaults to the network's)");
  c->add_option("--thalamic", e.thalamic, "poisson or dc")->capture_default_str();
  c->add_option("--ticks", e.ticks, "ticks to simulate")->capture_default_str();
  c->add_option("--warmup", e.warmup, "ticks excluded from statistics")->capture_default_str();
  c->add_option("--queue-capacity", e.queue_capacity, "spike queue capacity")->capture_default_str();
  c->add_option("--timeout-ms", e.timeout_ms, "worker handshake timeout")->capture_default_str();
  c->add_flag("--audit", e.audit, "check class disjointness and wrap safety on every write");
}

EngineConfig engine_config(const EngineArgs& e, const Network& net) {
  EngineConfig c;
  c.exec = parse_exec(e.exec);
  c.precision = parse_precision(e.precision);
  c.thalamic = parse_thalamic(e.thalamic);
  c.transfer.algorithm = parse_algorithm(e.algo);
  c.transfer.h = e.h;
  c.transfer.sc = e.sc.value_or(net.store.n_classes());
  c.transfer.lc = e.lc;
  c.transfer.su = e.su;
  c.transfer.uw = e.uw;
  c.transfer.queue_capacity = e.queue_capacity;
  c.transfer.audit = e.audit;
  c.n_ticks = e.ticks;
  c.warmup_ticks = e.warmup;
  c.seed = e.seed;
  c.handshake_timeout = std::chrono::milliseconds(e.timeout_ms);
  check_engine_config(net, c);
  return c;
}

json bench_record(const EngineConfig& c, const Network& net, const RunResult& r) {
  return {{"algorithm", to_string(c.transfer.algorithm)},
          {"exec", to_string(c.exec)},
          {"precision", to_string(c.precision)},
          {"thalamic", to_string(c.thalamic)},
          {"uw", c.transfer.uw},
          {"su", c.transfer.su},
          {"h", c.transfer.h},
          {"sc", c.transfer.sc},
          {"lc", c.transfer.lc},
          {"queue_capacity", c.transfer.queue_capacity},
          {"scale", net.meta.scale},
          {"net_seed", net.meta.seed},
          {"seed", c.seed},
          {"n_ticks", c.n_ticks},
          {"warmup_ticks", c.warmup_ticks},
          {"n_spikes", r.n_spikes},
          {"rtf", r.rtf},
          {"wall_seconds", r.wall_seconds},
          {"synaptic_events", r.synaptic_events},
          {"events_per_second", r.events_per_second()}};
}

RunDescription describe(const EngineConfig& c, const Network& net) {
  return {c.seed,
          net.meta.scale,
          std::string(to_string(c.transfer.algorithm)),
          std::string(to_string(c.exec)),
          std::string(to_string(c.precision)),
          std::string(to_string(c.thalamic))};
}

struct StatsArgs {
  double bin_ms = 2.0;
  std::uint32_t sample_size = 200;
  std::uint64_t sample_seed = 0;
};

void add_stats_options(CLI::App* c, StatsArgs& s) {
  c->add_option("--bin-ms", s.bin_ms, "correlation bin width (ms)")->capture_default_str();
  c->add_option("--sample-size", s.sample_size, "neurons per population for correlations")
      ->capture_default_str();
  c->add_option("--sample-seed", s.sample_seed, "seed for the correlation sample")
      ->capture_default_str();
}

StatsOptions stats_options(const StatsArgs& s) {
  StatsOptions o;
  o.bin_ms = s.bin_ms;
  o.sample_size = s.sample_size;
  o.sample_seed = s.sample_seed;
  return o;
}

void emit_warnings(const StatsReport& r, std::ostream& err) {
  for (const auto& w : r.warnings) err << "warning: " << w << "\n";
}

struct RunArgs {
  std::string net;
  std::string config;
  EngineArgs engine;
  StatsArgs stats;
  std::string spikes_out;
  bool text = false;
  std::string stats_out;
  std::string bench_out;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  const auto t0 = Clock::now();
  const Network net = read_network(a.net, model_from(a.config));
  err << "loaded " << a.net << " in " << fixed(seconds_since(t0), 2) << " s\n";
  EngineConfig cfg = engine_config(a.engine, net);
  cfg.record = !a.spikes_out.empty() || !a.stats_out.empty();
  const RunResult r = run(net, cfg);

  if (!a.spikes_out.empty()) write_spikes(a.spikes_out, r.spikes.events, a.text);
  if (!a.stats_out.empty()) {
    const auto rep = compute_stats(r.spikes, stats_options(a.stats), describe(cfg, net));
    emit_warnings(rep, err);
    write_text(a.stats_out, report_to_json(rep) + "\n");
  }
  if (!a.bench_out.empty()) write_text(a.bench_out, bench_record(cfg, net, r).dump() + "\n");

  const double per_tick = static_cast<double>(r.n_spikes) / static_cast<double>(cfg.n_ticks);
  out << "ticks " << cfg.n_ticks << "  spikes " << r.n_spikes << "  spikes/tick "
      << fixed(per_tick, 2) << "\n"
      << "wall " << fixed(r.wall_seconds, 3) << " s  rtf " << fixed(r.rtf, 3) << "  events "
      << r.synaptic_events << "\n";
  if (cfg.thalamic == ThalamicMode::dc) out << "thalamic input: dc approximation\n";
  return kOk;
}

// --- stats / compare -------------------------------------------------------

struct StatsCmdArgs {
  std::string spikes;
  std::string net;
  std::string config;
  std::uint64_t ticks = 100000;
  std::uint64_t warmup = 10000;
  StatsArgs stats;
  std::string out;
};

int cmd_stats(const StatsCmdArgs& a, std::ostream& out, std::ostream& err) {
  const Network net = read_network(a.net, model_from(a.config));
  SpikeTrain train = empty_train(net, a.ticks, a.warmup);
  train.events = read_spikes(a.spikes);
  RunDescription d;
  d.seed = 0;
  d.scale = net.meta.scale;
  d.algorithm = "external";
  const auto rep = compute_stats(train, stats_options(a.stats), d);
  emit_warnings(rep, err);
  const std::string j = report_to_json(rep) + "\n";
  if (a.out.empty())
    out << j;
  else
    write_text(a.out, j);
  return kOk;
}

struct CompareArgs {
  std::string a, b, out;
};

int cmd_compare(const CompareArgs& a, std::ostream& out, std::ostream& err) {
  const auto ra = report_from_json(read_text(a.a));
  const auto rb = report_from_json(read_text(a.b));
  const KlTable t = compare_runs(ra, rb);
  const std::string j = kl_table_to_json(t) + "\n";
  if (a.out.empty())
    out << j;
  else
    write_text(a.out, j);
  err << "population      rate        cv_isi      pearson\n";
  for (std::size_t i = 0; i < t.pops.size(); ++i) {
    char line[128];
    auto cell = [&](std::size_t s) {
      return t.values[i][s] ? fixed(*t.values[i][s], 6) : std::string("-");
    };
    std::snprintf(line, sizeof(line), "%-14s  %-10s  %-10s  %-10s\n", t.pops[i].c_str(),
                  cell(0).c_str(), cell(1).c_str(), cell(2).c_str());
    err << line;
  }
  return kOk;
}

// --- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string net;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> algos, execs, precisions;
  std::vector<std::uint32_t> hs{16}, lcs{16}, uws{16}, sus{1};
  EngineArgs engine;
  std::uint32_t repeat = 1;
  std::string out;
};

template <typename T>
std::vector<T> non_empty(const std::vector<T>& v) {
  std::vector<T> r;
  for (const auto& x : v)
    if constexpr (std::is_same_v<T, std::string>) {
      if (!x.empty()) r.push_back(x);
    } else {
      r.push_back(x);
    }
  return r;
}

int cmd_bench(BenchArgs a, std::ostream& out, std::ostream& err) {
  require(a.seed.has_value(), "bench requires an explicit --seed");
  require(a.repeat >= 1, "--repeat must be at least 1");
  const auto algos = non_empty(a.algos);
  const auto execs = a.execs.empty() ? std::vector<std::string>{"mono"} : non_empty(a.execs);
  const auto precs =
      a.precisions.empty() ? std::vector<std::string>{"f32"} : non_empty(a.precisions);
  require(!algos.empty() && !execs.empty() && !precs.empty() && !a.hs.empty() &&
              !a.lcs.empty() && !a.uws.empty() && !a.sus.empty(),
          "empty benchmark grid (give at least one --algo)");

  const Network net = read_network(a.net, model_from(a.config));
  std::ofstream jsonl;
  if (!a.out.empty()) {
    jsonl.open(a.out, std::ios::trunc);
    if (!jsonl) fail(ErrorKind::io, "cannot open " + a.out + " for writing");
  }

  struct Row {
    std::string label;
    double rtf;
    double wall;
    std::uint64_t events;
  };
  std::vector<Row> rows;
  for (const auto& algo : algos) {
    const Algorithm alg = parse_algorithm(algo);
    // Parameters an algorithm ignores are not swept for it.
    const auto hs = alg == Algorithm::horiz ? a.hs : std::vector<std::uint32_t>{a.hs.front()};
    const auto lcs = alg == Algorithm::jit ? a.lcs : std::vector<std::uint32_t>{a.lcs.front()};
    for (const auto& ex : execs)
      for (const auto& pr : precs)
        for (auto h : hs)
          for (auto lc : lcs)
            for (auto uw : a.uws)
              for (auto su : a.sus)
                for (std::uint32_t rep = 0; rep < a.repeat; ++rep) {
                  EngineArgs e = a.engine;
                  e.algo = algo;
                  e.exec = ex;
                  e.precision = pr;
                  e.h = h;
                  e.lc = lc;
                  e.uw = uw;
                  e.su = su;
                  e.seed = *a.seed;
                  EngineConfig cfg = engine_config(e, net);
                  cfg.record = false;
                  const RunResult r = run(net, cfg);
                  const json rec = bench_record(cfg, net, r);
                  if (jsonl.is_open()) {
                    jsonl << rec.dump() << "\n" << std::flush;
                    if (!jsonl) fail(ErrorKind::io, "write failed: " + a.out);
                  } else {
                    out << rec.dump() << "\n";
                  }
                  std::string label = algo + " " + ex + " " + pr + " uw=" + std::to_string(uw) +
                                      " su=" + std::to_string(su) + " sc=" +
                                      std::to_string(cfg.transfer.sc);
                  if (alg == Algorithm::horiz) label += " h=" + std::to_string(h);
                  if (alg == Algorithm::jit) label += " lc=" + std::to_string(lc);
                  rows.push_back({label, r.rtf, r.wall_seconds, r.synaptic_events});
                  err << "done: " << label << "  rtf " << fixed(r.rtf, 3) << "\n";
                }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) { return x.rtf < y.rtf; });
  std::ostream& table = jsonl.is_open() ? out : err;
  table << "rtf        wall_s     events        config\n";
  for (const auto& r : rows) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-9s  %-9s  %-12llu  %s\n", fixed(r.rtf, 4).c_str(),
                  fixed(r.wall, 3).c_str(), static_cast<unsigned long long>(r.events),
                  r.label.c_str());
    table << line;
  }
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cortical microcircuit simulator"};
  app.name(args.empty() ? "pdsim" : args.front());
  app.require_subcommand(1);
  app.set_help_flag("--help", "print this help and exit");  // -h would clash with --h

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "sample a network and write it to a file");
  g->add_option("--seed", gen.seed, "network seed")->capture_default_str();
  g->add_option("--scale", gen.scale, "fraction of the full population sizes")->capture_default_str();
  g->add_option("--classes", gen.classes, "synapse classes (power of two)")->capture_default_str();
  g->add_option("--bucket", gen.bucket, "delay bucket in ticks (power of two)")->capture_default_str();
  g->add_option("--config", gen.config, "model configuration file");
  g->add_option("-o,--out", gen.out, "output network file");
  g->add_flag("--plan", gen.plan_only, "only report the storage layout, write nothing");

  RunArgs ra;
  auto* r = app.add_subcommand("run", "simulate a network");
  r->add_option("--net", ra.net, "network file")->required();
  r->add_option("--config", ra.config, "model configuration file used for generation");
  add_engine_options(r, ra.engine, true);
  add_stats_options(r, ra.stats);
  r->add_option("--spikes", ra.spikes_out, "spike output file");
  r->add_flag("--text", ra.text, "write spikes as text");
  r->add_option("--stats", ra.stats_out, "statistics JSON output");
  r->add_option("--bench", ra.bench_out, "benchmark record JSON output");

  StatsCmdArgs sa;
  auto* s = app.add_subcommand("stats", "statistics of a spike file");
  s->add_option("--spikes", sa.spikes, "spike file (binary or text)")->required();
  s->add_option("--net", sa.net, "network the spikes came from")->required();
  s->add_option("--config", sa.config, "model configuration file");
  s->add_option("--ticks", sa.ticks, "ticks in the run")->capture_default_str();
  s->add_option("--warmup", sa.warmup, "ticks excluded from statistics")->capture_default_str();
  add_stats_options(s, sa.stats);
  s->add_option("-o,--out", sa.out, "output JSON (default stdout)");

  CompareArgs ca;
  auto* c = app.add_subcommand("compare", "KL divergences between two statistics reports");
  c->add_option("a", ca.a, "first report")->required();
  c->add_option("b", ca.b, "second report")->required();
  c->add_option("-o,--out", ca.out, "output JSON (default stdout)");

  BenchArgs ba;
  auto* b = app.add_subcommand("bench", "sweep engine configurations");
  b->add_option("--net", ba.net, "network file")->required();
  b->add_option("--config", ba.config, "model configuration file");
  b->add_option("--seed", ba.seed, "thalamic input seed (required)");
  b->add_option("--algo", ba.algos, "algorithms")->delimiter(',');
  b->add_option("--exec", ba.execs, "execution modes (default mono)")->delimiter(',');
  b->add_option("--precision", ba.precisions, "precisions (default f32)")->delimiter(',');
  b->add_option("--h", ba.hs, "horizons")->delimiter(',');
  b->add_option("--lc", ba.lcs, "lane counts")->delimiter(',');
  b->add_option("--uw", ba.uws, "update widths")->delimiter(',');
  b->add_option("--su", ba.sus, "synapse unroll hints")->delimiter(',');
  b->add_option("--repeat", ba.repeat, "runs per cell")->capture_default_str();
  b->add_option("-o,--out", ba.out, "JSON-lines output (default stdout)");
  ba.engine.ticks = 10000;
  ba.engine.warmup = 0;
  add_engine_options(b, ba.engine, false);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return cmd_generate(gen, out, err);
    if (*r) return cmd_run(ra, out, err);
    if (*s) return cmd_stats(sa, out, err);
    if (*c) return cmd_compare(ca, out, err);
    if (*b) return cmd_bench(ba, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return kRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}

}  // namespace pdsim::cli
