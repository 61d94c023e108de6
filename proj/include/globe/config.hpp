#pragma once
// Human-editable configuration: a sectioned key/value text format covering
// network generation, environment processes, controller knobs and run
// defaults. Parsing is strict (unknown keys and sections are field-level
// errors); serialization is canonical, so a config's digest is stable across
// comment/whitespace edits of the file it was loaded from.

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "globe/env.hpp"
#include "globe/model.hpp"
#include "globe/util.hpp"

namespace globe {

enum class Topology { Ring, HomeOnly, Full };

inline std::string to_string(Topology t) {
  switch (t) {
    case Topology::Ring: return "ring";
    case Topology::HomeOnly: return "home_only";
    case Topology::Full: return "full";
  }
  return "ring";
}

inline Topology topology_from_string(const std::string& s) {
  if (s == "ring") return Topology::Ring;
  if (s == "home_only") return Topology::HomeOnly;
  if (s == "full") return Topology::Full;
  throw ConfigError("network.topology",
                    "unknown topology '" + s + "' (ring | home_only | full)");
}

// Homogeneous network generator: every BS gets the same hardware, every user
// the same costs; the candidate sets come from the chosen topology.
struct NetworkGen {
  int n_bs = 5;
  int users_per_bs = 1;
  Topology topology = Topology::Ring;

  double cpu_speed = 2.4e9;
  double tx_power = 1.0;
  double grid_cap = 25.0;
  double battery_cap = 700.0;

  double bandwidth = 2e7;
  double noise = 0.01;
  double cycles_per_task = 8e5;
  double delay_bound = 1e-3;
  double energy_coeff = 2.5e-22;
  double harvest_cap = 10.0;
  double mu_max = 10.0;
  double lam_max = 6000.0;

  double c_tx = 10.0;
  double c_com = 0.01;
  double data_size = 1e8;
};

struct GlobeKnobs {
  double V = 20.0;
  double epsilon = 1e7;
  double delta0 = 0.0;        // 0 = auto-scale
  double delta0_scale = 0.001;
  int max_iters = 5000;
  double tol_violation = 1e-6;
  double tol_dual = 1e-8;
  int stall_window = 100;
  bool warm_start = true;
  double warm_step = 5.0;
  double p_min_override = 0.0;  // 0 = use the environment's exact bound
  // Experimental: per-BS perturbation override (empty = derived theta;
  // one value = global override; n_bs values = per-BS). No optimality
  // guarantees are derived for overridden values.
  std::vector<double> theta_override;
};

struct BatteryInit {
  enum Kind { Theta, Zero, Full, Value } kind = Theta;
  double value = 0.0;
};

struct RunDefaults {
  uint64_t seed = 1;
  int64_t horizon = 10000;
  BatteryInit battery_init;
};

struct FullConfig {
  int schema_version = 1;
  std::string name = "default";
  NetworkGen network;
  EnvConfig env;
  GlobeKnobs globe;
  RunDefaults run;
};

// --- building runtime objects from a config ------------------------------------

inline NetworkConfig build_network(const NetworkGen& g) {
  if (g.n_bs <= 0) throw ConfigError("network.n_bs", "must be > 0");
  if (g.users_per_bs <= 0) throw ConfigError("network.users_per_bs", "must be > 0");

  NetworkConfig net;
  net.bandwidth = g.bandwidth;
  net.noise = g.noise;
  net.cycles_per_task = g.cycles_per_task;
  net.delay_bound = g.delay_bound;
  net.energy_coeff = g.energy_coeff;
  net.harvest_cap = g.harvest_cap;
  net.mu_max = g.mu_max;
  net.lam_max = g.lam_max;

  net.bs.resize(g.n_bs);
  for (auto& b : net.bs) {
    b.cpu_speed = g.cpu_speed;
    b.tx_power = g.tx_power;
    b.grid_cap = g.grid_cap;
    b.battery_cap = g.battery_cap;
  }

  const int N = g.n_bs;
  net.users.reserve(static_cast<size_t>(N) * g.users_per_bs);
  for (int i = 0; i < N; ++i) {
    std::vector<int> cand;
    switch (g.topology) {
      case Topology::HomeOnly:
        cand = {i};
        break;
      case Topology::Full:
        for (int j = 0; j < N; ++j) cand.push_back(j);
        break;
      case Topology::Ring:
        cand = {(i + N - 1) % N, i, (i + 1) % N};
        std::sort(cand.begin(), cand.end());
        cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
        break;
    }
    for (int k = 0; k < g.users_per_bs; ++k) {
      UserSpec u;
      u.home = i;
      u.candidates = cand;  // ascending BS index: deterministic tie-breaks
      u.c_tx = g.c_tx;
      u.c_com = g.c_com;
      u.data_size = g.data_size;
      net.users.push_back(std::move(u));
    }
  }
  net.validate();
  return net;
}

// K users per BS split the per-BS arrival rates evenly.
inline Environment make_environment(const FullConfig& cfg,
                                    const NetworkConfig& net, uint64_t seed) {
  EnvConfig e = cfg.env;
  if (cfg.network.users_per_bs > 1) {
    e.tx_rate /= cfg.network.users_per_bs;
    e.comp_rate_mean /= cfg.network.users_per_bs;
  }
  return Environment(net, e, seed);
}

inline GlobeParams make_params(const FullConfig& cfg, const NetworkConfig& net,
                               const Environment& env) {
  const auto& k = cfg.globe;
  double p_min = k.p_min_override > 0.0 ? k.p_min_override : env.p_min_bound();
  DerivedBounds b = derive_bounds(net, p_min, env.pair_p_max());
  GlobeParams p = make_globe_params(net, b, k.V, k.epsilon);
  p.delta0 = k.delta0;
  p.delta0_scale = k.delta0_scale;
  p.max_iters = k.max_iters;
  p.tol_violation = k.tol_violation;
  p.tol_dual = k.tol_dual;
  p.stall_window = k.stall_window;
  p.warm_start = k.warm_start;
  p.warm_step = k.warm_step;
  return p;
}

inline std::vector<double> effective_thetas(const FullConfig& cfg, int n_bs,
                                            double derived_theta) {
  const auto& ov = cfg.globe.theta_override;
  if (ov.empty()) return std::vector<double>(n_bs, derived_theta);
  if (ov.size() == 1) return std::vector<double>(n_bs, ov[0]);
  if (static_cast<int>(ov.size()) == n_bs) return ov;
  throw ConfigError("globe.theta_override",
                    "needs 0, 1 or n_bs values, got " + std::to_string(ov.size()));
}

inline std::vector<double> initial_battery(const FullConfig& cfg,
                                           const NetworkConfig& net,
                                           double theta) {
  std::vector<double> b0(net.n());
  for (int i = 0; i < net.n(); ++i) {
    switch (cfg.run.battery_init.kind) {
      case BatteryInit::Theta: b0[i] = theta; break;
      case BatteryInit::Zero: b0[i] = 0.0; break;
      case BatteryInit::Full: b0[i] = net.bs[i].battery_cap; break;
      case BatteryInit::Value:
        if (cfg.run.battery_init.value < 0.0 ||
            cfg.run.battery_init.value > net.bs[i].battery_cap)
          throw ConfigError("run.battery_init",
                            "initial level outside [0, battery_cap]");
        b0[i] = cfg.run.battery_init.value;
        break;
    }
  }
  return b0;
}

// --- parsing --------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& field, const std::string& v) {
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || v.empty())
    throw ConfigError(field, "'" + v + "' is not a number");
  return x;
}

inline int64_t parse_int(const std::string& field, const std::string& v) {
  char* end = nullptr;
  long long x = std::strtoll(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || v.empty())
    throw ConfigError(field, "'" + v + "' is not an integer");
  return x;
}

inline bool parse_bool(const std::string& field, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(field, "'" + v + "' is not a boolean (true/false)");
}

inline std::vector<double> parse_list(const std::string& field,
                                      const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(parse_double(field, trim(item)));
  return out;
}

inline std::string join_list(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt_g17(v[i]);
  }
  return s;
}

}  // namespace detail

inline BatteryInit battery_init_from_string(const std::string& s) {
  BatteryInit b;
  if (s == "theta") { b.kind = BatteryInit::Theta; return b; }
  if (s == "zero") { b.kind = BatteryInit::Zero; return b; }
  if (s == "full") { b.kind = BatteryInit::Full; return b; }
  b.kind = BatteryInit::Value;
  b.value = detail::parse_double("run.battery_init", s);
  return b;
}

inline std::string to_string(const BatteryInit& b) {
  switch (b.kind) {
    case BatteryInit::Theta: return "theta";
    case BatteryInit::Zero: return "zero";
    case BatteryInit::Full: return "full";
    case BatteryInit::Value: return fmt_g17(b.value);
  }
  return "theta";
}

inline FullConfig parse_config(const std::string& text) {
  FullConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;

  auto fail_line = [&](const std::string& msg) {
    throw ConfigError("line " + std::to_string(lineno), msg);
  };

  while (std::getline(in, line)) {
    ++lineno;
    std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail_line("unterminated section header");
      section = detail::trim(s.substr(1, s.size() - 2));
      if (section != "meta" && section != "network" && section != "env" &&
          section != "globe" && section != "run")
        throw ConfigError(section, "unknown section");
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos) fail_line("expected 'key = value'");
    std::string key = detail::trim(s.substr(0, eq));
    std::string val = detail::trim(s.substr(eq + 1));
    if (key.empty()) fail_line("empty key");
    if (section.empty()) fail_line("key outside any section");
    const std::string field = section + "." + key;

    auto d = [&] { return detail::parse_double(field, val); };
    auto i = [&] { return static_cast<int>(detail::parse_int(field, val)); };
    auto b = [&] { return detail::parse_bool(field, val); };

    if (section == "meta") {
      if (key == "schema_version") {
        if (detail::parse_int(field, val) != 1)
          throw ConfigError(field, "unsupported schema version '" + val + "'");
      } else if (key == "name") cfg.name = val;
      else throw ConfigError(field, "unknown key");
    } else if (section == "network") {
      auto& n = cfg.network;
      if (key == "n_bs") n.n_bs = i();
      else if (key == "users_per_bs") n.users_per_bs = i();
      else if (key == "topology") n.topology = topology_from_string(val);
      else if (key == "cpu_speed") n.cpu_speed = d();
      else if (key == "tx_power") n.tx_power = d();
      else if (key == "grid_cap") n.grid_cap = d();
      else if (key == "battery_cap") n.battery_cap = d();
      else if (key == "bandwidth") n.bandwidth = d();
      else if (key == "noise") n.noise = d();
      else if (key == "cycles_per_task") n.cycles_per_task = d();
      else if (key == "delay_bound") n.delay_bound = d();
      else if (key == "energy_coeff") n.energy_coeff = d();
      else if (key == "harvest_cap") n.harvest_cap = d();
      else if (key == "mu_max") n.mu_max = d();
      else if (key == "lam_max") n.lam_max = d();
      else if (key == "c_tx") n.c_tx = d();
      else if (key == "c_com") n.c_com = d();
      else if (key == "data_size") n.data_size = d();
      else throw ConfigError(field, "unknown key");
    } else if (section == "env") {
      auto& e = cfg.env;
      if (key == "tx_rate") e.tx_rate = d();
      else if (key == "comp_rate_mean") e.comp_rate_mean = d();
      else if (key == "comp_amp") e.comp_amp = d();
      else if (key == "comp_period") e.comp_period = i();
      else if (key == "comp_jitter") e.comp_jitter = d();
      else if (key == "day_fraction") e.day_fraction = d();
      else if (key == "diurnal_period") e.diurnal_period = i();
      else if (key == "price_mean") e.price_mean = d();
      else if (key == "gain_home") e.gain_home = d();
      else if (key == "gain_cross") e.gain_cross = d();
      else if (key == "q_lo") e.q_lo = d();
      else if (key == "q_hi") e.q_hi = d();
      else if (key == "mc_draws") e.mc_draws = i();
      else throw ConfigError(field, "unknown key");
    } else if (section == "globe") {
      auto& g = cfg.globe;
      if (key == "V") g.V = d();
      else if (key == "epsilon") g.epsilon = d();
      else if (key == "delta0") g.delta0 = d();
      else if (key == "delta0_scale") g.delta0_scale = d();
      else if (key == "max_iters") g.max_iters = i();
      else if (key == "tol_violation") g.tol_violation = d();
      else if (key == "tol_dual") g.tol_dual = d();
      else if (key == "stall_window") g.stall_window = i();
      else if (key == "warm_start") g.warm_start = b();
      else if (key == "warm_step") g.warm_step = d();
      else if (key == "p_min_override") g.p_min_override = d();
      else if (key == "theta_override") g.theta_override = detail::parse_list(field, val);
      else throw ConfigError(field, "unknown key");
    } else if (section == "run") {
      auto& r = cfg.run;
      if (key == "seed") r.seed = static_cast<uint64_t>(detail::parse_int(field, val));
      else if (key == "horizon") r.horizon = detail::parse_int(field, val);
      else if (key == "battery_init") r.battery_init = battery_init_from_string(val);
      else throw ConfigError(field, "unknown key");
    }
  }
  return cfg;
}

inline FullConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// Canonical form: fixed section/key order, full-precision numbers. Two
// configs are equivalent iff their serializations (and thus digests) match.
inline std::string serialize_config(const FullConfig& cfg) {
  std::ostringstream o;
  const auto& n = cfg.network;
  const auto& e = cfg.env;
  const auto& g = cfg.globe;
  const auto& r = cfg.run;
  o << "[meta]\n"
    << "schema_version = 1\n"
    << "name = " << cfg.name << "\n\n"
    << "[network]\n"
    << "n_bs = " << n.n_bs << "\n"
    << "users_per_bs = " << n.users_per_bs << "\n"
    << "topology = " << to_string(n.topology) << "\n"
    << "cpu_speed = " << fmt_g17(n.cpu_speed) << "\n"
    << "tx_power = " << fmt_g17(n.tx_power) << "\n"
    << "grid_cap = " << fmt_g17(n.grid_cap) << "\n"
    << "battery_cap = " << fmt_g17(n.battery_cap) << "\n"
    << "bandwidth = " << fmt_g17(n.bandwidth) << "\n"
    << "noise = " << fmt_g17(n.noise) << "\n"
    << "cycles_per_task = " << fmt_g17(n.cycles_per_task) << "\n"
    << "delay_bound = " << fmt_g17(n.delay_bound) << "\n"
    << "energy_coeff = " << fmt_g17(n.energy_coeff) << "\n"
    << "harvest_cap = " << fmt_g17(n.harvest_cap) << "\n"
    << "mu_max = " << fmt_g17(n.mu_max) << "\n"
    << "lam_max = " << fmt_g17(n.lam_max) << "\n"
    << "c_tx = " << fmt_g17(n.c_tx) << "\n"
    << "c_com = " << fmt_g17(n.c_com) << "\n"
    << "data_size = " << fmt_g17(n.data_size) << "\n\n"
    << "[env]\n"
    << "tx_rate = " << fmt_g17(e.tx_rate) << "\n"
    << "comp_rate_mean = " << fmt_g17(e.comp_rate_mean) << "\n"
    << "comp_amp = " << fmt_g17(e.comp_amp) << "\n"
    << "comp_period = " << e.comp_period << "\n"
    << "comp_jitter = " << fmt_g17(e.comp_jitter) << "\n"
    << "day_fraction = " << fmt_g17(e.day_fraction) << "\n"
    << "diurnal_period = " << e.diurnal_period << "\n"
    << "price_mean = " << fmt_g17(e.price_mean) << "\n"
    << "gain_home = " << fmt_g17(e.gain_home) << "\n"
    << "gain_cross = " << fmt_g17(e.gain_cross) << "\n"
    << "q_lo = " << fmt_g17(e.q_lo) << "\n"
    << "q_hi = " << fmt_g17(e.q_hi) << "\n"
    << "mc_draws = " << e.mc_draws << "\n\n"
    << "[globe]\n"
    << "V = " << fmt_g17(g.V) << "\n"
    << "epsilon = " << fmt_g17(g.epsilon) << "\n"
    << "delta0 = " << fmt_g17(g.delta0) << "\n"
    << "delta0_scale = " << fmt_g17(g.delta0_scale) << "\n"
    << "max_iters = " << g.max_iters << "\n"
    << "tol_violation = " << fmt_g17(g.tol_violation) << "\n"
    << "tol_dual = " << fmt_g17(g.tol_dual) << "\n"
    << "stall_window = " << g.stall_window << "\n"
    << "warm_start = " << (g.warm_start ? "true" : "false") << "\n"
    << "warm_step = " << fmt_g17(g.warm_step) << "\n"
    << "p_min_override = " << fmt_g17(g.p_min_override) << "\n"
    << "theta_override = " << detail::join_list(g.theta_override) << "\n\n"
    << "[run]\n"
    << "seed = " << r.seed << "\n"
    << "horizon = " << r.horizon << "\n"
    << "battery_init = " << to_string(r.battery_init) << "\n";
  return o.str();
}

inline uint64_t config_digest(const FullConfig& cfg) {
  return fnv1a(serialize_config(cfg));
}

inline void save_config(const FullConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file '" + path + "'");
  out << serialize_config(cfg);
}

}  // namespace globe
