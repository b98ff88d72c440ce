#include "pdsim/params.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "pdsim/error.hpp"

namespace pdsim {

namespace {

PopulationSpec make_pop(int index, const char* name, const char* key, Polarity pol,
                        std::int64_t n, std::int64_t k, Gaussian u, Gaussian w, Gaussian d) {
  return PopulationSpec{index, name, key, pol, n, k, u, w, d};
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& key, const std::string& value) {
  double out = 0.0;
  auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || end != value.data() + value.size())
    fail(ErrorKind::invalid_argument, "config key '" + key + "': not a number: '" + value + "'");
  return out;
}

std::int64_t parse_count(const std::string& key, const std::string& value) {
  std::int64_t out = 0;
  auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || end != value.data() + value.size())
    fail(ErrorKind::invalid_argument, "config key '" + key + "': not an integer: '" + value + "'");
  return out;
}

std::vector<std::string> split_dots(const std::string& key) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    auto dot = key.find('.', start);
    parts.push_back(key.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return parts;
}

}  // namespace

ModelConfig default_model() {
  using P = Polarity;
  ModelConfig m;
  const Gaussian w_exc{0.15, 0.015}, w_inh{-0.6, 0.06};
  const Gaussian d_exc{1.5, 0.75}, d_inh{0.75, 0.325};
  m.pops = {
      make_pop(1, "L23/exc", "L23e", P::excitatory, 20683, 1600, {-68.28, 5.36}, w_exc, d_exc),
      make_pop(2, "L23/inh", "L23i", P::inhibitory, 5834, 1500, {-63.16, 4.57}, w_inh, d_inh),
      make_pop(3, "L4/exc", "L4e", P::excitatory, 21915, 2100, {-63.33, 4.74}, w_exc, d_exc),
      make_pop(4, "L4/inh", "L4i", P::inhibitory, 5479, 1900, {-63.45, 4.94}, w_inh, d_inh),
      make_pop(5, "L5/exc", "L5e", P::excitatory, 4850, 2000, {-63.11, 4.94}, w_exc, d_exc),
      make_pop(6, "L5/inh", "L5i", P::inhibitory, 1065, 1900, {-61.66, 4.55}, w_inh, d_inh),
      make_pop(7, "L6/exc", "L6e", P::excitatory, 14395, 2900, {-66.72, 5.46}, w_exc, d_exc),
      make_pop(8, "L6/inh", "L6i", P::inhibitory, 2948, 2100, {-61.43, 4.48}, w_inh, d_inh),
  };
  m.conn.p = {
      {0.1009, 0.1689, 0.0437, 0.0818, 0.0323, 0.0000, 0.0076, 0.0000},
      {0.1346, 0.1371, 0.0316, 0.0515, 0.0755, 0.0000, 0.0042, 0.0000},
      {0.0077, 0.0059, 0.0497, 0.1350, 0.0067, 0.0003, 0.0453, 0.0000},
      {0.0691, 0.0029, 0.0794, 0.1597, 0.0033, 0.0000, 0.1057, 0.0000},
      {0.1004, 0.0622, 0.0505, 0.0057, 0.0831, 0.3726, 0.0204, 0.0000},
      {0.0548, 0.0269, 0.0257, 0.0022, 0.0600, 0.3158, 0.0086, 0.0000},
      {0.0156, 0.0066, 0.0211, 0.0166, 0.0572, 0.0197, 0.0396, 0.2252},
      {0.0364, 0.0010, 0.0034, 0.0005, 0.0277, 0.0080, 0.0658, 0.1443},
  };
  // Doubled L4/exc -> L23/exc amplitudes.
  m.exceptions = {AmplitudeException{2, 0, Gaussian{0.3, 0.03}}};
  return m;
}

const Gaussian& ModelConfig::amplitude(std::size_t source, std::size_t target) const {
  for (const auto& e : exceptions)
    if (e.source == source && e.target == target) return e.w_amp;
  return pops.at(source).w_amp;
}

std::size_t ModelConfig::find_population(std::string_view name_or_key) const {
  for (std::size_t i = 0; i < pops.size(); ++i)
    if (pops[i].name == name_or_key || pops[i].key == name_or_key) return i;
  fail(ErrorKind::invalid_argument, "unknown population '" + std::string(name_or_key) + "'");
}

Coefficients derive_coefficients(const SimParams& sp) {
  require(sp.dt > 0.0, "dt must be positive");
  require(sp.tau_m > 0.0 && sp.tau_syn > 0.0, "time constants must be positive");
  require(sp.tau_m != sp.tau_syn, "tau_m must differ from tau_syn");
  require(sp.c_m > 0.0, "c_m must be positive");

  Coefficients c;
  c.p11 = std::exp(-sp.dt / sp.tau_syn);
  c.p22 = std::exp(-sp.dt / sp.tau_m);

  const double d = sp.tau_syn - sp.tau_m;
  const double p = sp.tau_syn * sp.tau_m;
  const double q = sp.tau_m / sp.tau_syn;
  c.w_f = sp.c_m * d / (p * (std::pow(q, sp.tau_m / d) - std::pow(q, sp.tau_syn / d)));

  const double beta = sp.tau_syn * sp.tau_m / (sp.tau_m - sp.tau_syn);
  const double gamma = beta / sp.c_m;
  c.p21 = c.p11 * gamma * std::expm1(sp.dt / beta);

  c.u_thr_dev = sp.u_thr - sp.u_rest;
  c.ref_ticks = static_cast<std::int32_t>(std::lround(sp.tau_ref / sp.dt));
  c.w_thalamic = c.w_f * sp.w_ext;
  return c;
}

std::vector<ValidationError> validate(const ModelConfig& m) {
  std::vector<ValidationError> errs;
  auto err = [&](std::string field, std::string msg) {
    errs.push_back({std::move(field), std::move(msg)});
  };
  const auto& s = m.sim;
  if (!(s.dt > 0)) err("dt", "must be > 0");
  if (!(s.c_m > 0)) err("c_m", "must be > 0");
  if (!(s.tau_m > 0)) err("tau_m", "must be > 0");
  if (!(s.tau_syn > 0)) err("tau_syn", "must be > 0");
  if (s.tau_m == s.tau_syn) err("tau_m", "must differ from tau_syn");
  if (!(s.u_thr > s.u_rest)) err("u_thr", "must exceed u_rest");
  if (!(s.tau_ref >= 0)) err("tau_ref", "must be >= 0");
  if (s.dt > 0 && s.tau_ref >= 0) {
    const double ratio = s.tau_ref / s.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-6 * std::max(1.0, ratio))
      err("tau_ref", "must be an integer multiple of dt");
  }
  if (!(s.v_th >= 0)) err("v_th", "must be >= 0");

  if (m.pops.empty()) err("pops", "at least one population required");
  for (const auto& p : m.pops) {
    const std::string f = "pop." + p.key;
    if (p.n < 0) err(f + ".n", "must be >= 0");
    if (p.k_thalamic < 0) err(f + ".k", "must be >= 0");
    if (p.u_init.sd < 0) err(f + ".u_init.sd", "must be >= 0");
    if (p.w_amp.sd < 0) err(f + ".w.sd", "must be >= 0");
    if (p.delay.sd < 0) err(f + ".delay.sd", "must be >= 0");
    if (p.polarity == Polarity::excitatory && !(p.w_amp.mean > 0))
      err(f + ".w.mean", "excitatory population needs a positive amplitude");
    if (p.polarity == Polarity::inhibitory && !(p.w_amp.mean < 0))
      err(f + ".w.mean", "inhibitory population needs a negative amplitude");
  }

  if (m.conn.size() != m.pops.size()) {
    err("conn", "matrix must be " + std::to_string(m.pops.size()) + " x " +
                    std::to_string(m.pops.size()));
  } else {
    for (std::size_t r = 0; r < m.conn.size(); ++r) {
      if (m.conn.p[r].size() != m.pops.size()) {
        err("conn", "row " + std::to_string(r) + " has wrong length");
        continue;
      }
      for (std::size_t c = 0; c < m.conn.p[r].size(); ++c) {
        const double v = m.conn.p[r][c];
        if (!(v >= 0.0 && v <= 1.0))
          err("conn." + m.pops[r].key + "." + m.pops[c].key, "probability must be in [0, 1]");
      }
    }
  }

  for (const auto& e : m.exceptions) {
    if (e.source >= m.pops.size() || e.target >= m.pops.size()) {
      err("except", "population index out of range");
      continue;
    }
    const std::string f = "except." + m.pops[e.source].key + "." + m.pops[e.target].key;
    if (e.w_amp.sd < 0) err(f + ".sd", "must be >= 0");
    const bool exc = m.pops[e.source].polarity == Polarity::excitatory;
    if (exc ? !(e.w_amp.mean > 0) : !(e.w_amp.mean < 0))
      err(f + ".mean", "sign must match the source population");
  }
  return errs;
}

void require_valid(const ModelConfig& model) {
  auto errs = validate(model);
  if (errs.empty()) return;
  std::string msg = "invalid model configuration:";
  for (const auto& e : errs) msg += "\n  " + e.field + ": " + e.message;
  fail(ErrorKind::invalid_argument, msg);
}

ModelConfig parse_model_config(std::string_view text, const ModelConfig& base) {
  ModelConfig m = base;
  std::map<std::pair<std::size_t, std::size_t>, Gaussian> exceptions;
  bool touched_exceptions = false;

  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::invalid_argument,
           "config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    const auto parts = split_dots(key);
    auto unknown = [&]() {
      fail(ErrorKind::invalid_argument,
           "config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    };

    if (parts.size() == 2 && parts[0] == "sim") {
      auto& s = m.sim;
      double* slot = nullptr;
      const std::string& f = parts[1];
      if (f == "dt") slot = &s.dt;
      else if (f == "c_m") slot = &s.c_m;
      else if (f == "tau_m") slot = &s.tau_m;
      else if (f == "tau_ref") slot = &s.tau_ref;
      else if (f == "tau_syn") slot = &s.tau_syn;
      else if (f == "u_rest") slot = &s.u_rest;
      else if (f == "u_thr") slot = &s.u_thr;
      else if (f == "v_th") slot = &s.v_th;
      else if (f == "w_ext") slot = &s.w_ext;
      if (slot == nullptr) unknown();
      *slot = parse_number(key, value);
    } else if (parts[0] == "pop" && (parts.size() == 3 || parts.size() == 4)) {
      std::size_t i = 0;
      for (; i < m.pops.size(); ++i)
        if (m.pops[i].key == parts[1]) break;
      if (i == m.pops.size()) unknown();
      auto& p = m.pops[i];
      if (parts.size() == 3) {
        if (parts[2] == "n") p.n = parse_count(key, value);
        else if (parts[2] == "k") p.k_thalamic = parse_count(key, value);
        else unknown();
      } else {
        Gaussian* g = nullptr;
        if (parts[2] == "u_init") g = &p.u_init;
        else if (parts[2] == "w") g = &p.w_amp;
        else if (parts[2] == "delay") g = &p.delay;
        if (g == nullptr) unknown();
        if (parts[3] == "mean") g->mean = parse_number(key, value);
        else if (parts[3] == "sd") g->sd = parse_number(key, value);
        else unknown();
      }
    } else if (parts[0] == "conn" && parts.size() == 3) {
      std::size_t r = m.pops.size(), c = m.pops.size();
      for (std::size_t i = 0; i < m.pops.size(); ++i) {
        if (m.pops[i].key == parts[1]) r = i;
        if (m.pops[i].key == parts[2]) c = i;
      }
      if (r == m.pops.size() || c == m.pops.size() || r >= m.conn.size()) unknown();
      m.conn.p[r][c] = parse_number(key, value);
    } else if (parts[0] == "except" && parts.size() == 2 && parts[1] == "none") {
      touched_exceptions = true;
    } else if (parts[0] == "except" && parts.size() == 4) {
      std::size_t r = m.pops.size(), c = m.pops.size();
      for (std::size_t i = 0; i < m.pops.size(); ++i) {
        if (m.pops[i].key == parts[1]) r = i;
        if (m.pops[i].key == parts[2]) c = i;
      }
      if (r == m.pops.size() || c == m.pops.size()) unknown();
      touched_exceptions = true;
      auto& g = exceptions[{r, c}];
      if (parts[3] == "mean") g.mean = parse_number(key, value);
      else if (parts[3] == "sd") g.sd = parse_number(key, value);
      else unknown();
    } else {
      unknown();
    }
  }

  if (touched_exceptions) {
    m.exceptions.clear();
    for (const auto& [pair, g] : exceptions)
      m.exceptions.push_back(AmplitudeException{pair.first, pair.second, g});
  }
  return m;
}

ModelConfig load_model_config(const std::filesystem::path& path, const ModelConfig& base) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model_config(ss.str(), base);
}

std::string format_model_config(const ModelConfig& m) {
  std::ostringstream out;
  auto kv = [&](const std::string& k, const std::string& v) { out << k << " = " << v << '\n'; };
  auto num = [&](const std::string& k, double v) { kv(k, format_double(v)); };

  out << "# simulation\n";
  num("sim.dt", m.sim.dt);
  num("sim.c_m", m.sim.c_m);
  num("sim.tau_m", m.sim.tau_m);
  num("sim.tau_ref", m.sim.tau_ref);
  num("sim.tau_syn", m.sim.tau_syn);
  num("sim.u_rest", m.sim.u_rest);
  num("sim.u_thr", m.sim.u_thr);
  num("sim.v_th", m.sim.v_th);
  num("sim.w_ext", m.sim.w_ext);

  out << "# populations\n";
  for (const auto& p : m.pops) {
    const std::string b = "pop." + p.key + ".";
    kv(b + "n", std::to_string(p.n));
    kv(b + "k", std::to_string(p.k_thalamic));
    num(b + "u_init.mean", p.u_init.mean);
    num(b + "u_init.sd", p.u_init.sd);
    num(b + "w.mean", p.w_amp.mean);
    num(b + "w.sd", p.w_amp.sd);
    num(b + "delay.mean", p.delay.mean);
    num(b + "delay.sd", p.delay.sd);
  }

  out << "# connectivity: conn.<source>.<target>\n";
  for (std::size_t r = 0; r < m.conn.size() && r < m.pops.size(); ++r)
    for (std::size_t c = 0; c < m.conn.p[r].size() && c < m.pops.size(); ++c)
      num("conn." + m.pops[r].key + "." + m.pops[c].key, m.conn.p[r][c]);

  out << "# amplitude exceptions\n";
  if (m.exceptions.empty()) kv("except.none", "1");
  for (const auto& e : m.exceptions) {
    const std::string b = "except." + m.pops.at(e.source).key + "." + m.pops.at(e.target).key + ".";
    num(b + "mean", e.w_amp.mean);
    num(b + "sd", e.w_amp.sd);
  }
  return out.str();
}

}  // namespace pdsim
