#pragma once
// File formats: observation traces (record/replay), per-slot metrics CSV,
// sweep tables, per-iteration dual-solver dumps, and the run summary JSON.
// All floating-point output uses full-precision %.17g so files round-trip
// bit-exactly; writes go through a temp file + rename so readers never see
// partial output.

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "globe/comp_lb.hpp"
#include "globe/controller.hpp"
#include "globe/model.hpp"
#include "globe/util.hpp"

namespace globe {

inline void atomic_write_file(const std::string& path,
                              const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << content;
    if (!out.good()) throw IoError("short write to '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("cannot move '" + tmp + "' into place at '" + path + "'");
}

// --- observation traces ----------------------------------------------------------

struct Trace {
  uint64_t config_digest = 0;
  uint64_t seed = 0;
  std::vector<SlotObservation> slots;
};

namespace detail {

inline std::string trace_columns(const NetworkConfig& net) {
  std::string h = "t,price";
  for (int v = 0; v < net.u(); ++v) h += ",mu_u" + std::to_string(v);
  for (int v = 0; v < net.u(); ++v) h += ",lambda_u" + std::to_string(v);
  for (int i = 0; i < net.n(); ++i) h += ",harvest_b" + std::to_string(i);
  for (int v = 0; v < net.u(); ++v)
    for (int j : net.users[v].candidates)
      h += ",p_u" + std::to_string(v) + "_b" + std::to_string(j);
  return h;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline double parse_field(const std::string& s, const std::string& where) {
  char* end = nullptr;
  double x = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw IoError("bad numeric field '" + s + "' in " + where);
  return x;
}

}  // namespace detail

inline std::string serialize_trace(const NetworkConfig& net, const Trace& tr) {
  std::ostringstream o;
  o << "# globe-trace-v1\n"
    << "# config_digest = " << hex64(tr.config_digest) << "\n"
    << "# seed = " << tr.seed << "\n"
    << detail::trace_columns(net) << "\n";
  for (const auto& s : tr.slots) {
    o << s.t << ',' << fmt_g17(s.price);
    for (double x : s.mu) o << ',' << fmt_g17(x);
    for (double x : s.lambda) o << ',' << fmt_g17(x);
    for (double x : s.harvest) o << ',' << fmt_g17(x);
    for (const auto& row : s.p)
      for (double x : row) o << ',' << fmt_g17(x);
    o << '\n';
  }
  return o.str();
}

inline void write_trace(const std::string& path, const NetworkConfig& net,
                        const Trace& tr) {
  atomic_write_file(path, serialize_trace(net, tr));
}

inline Trace read_trace(const std::string& path, const NetworkConfig& net) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace '" + path + "'");
  std::string line;

  auto next_line = [&](const char* what) {
    if (!std::getline(in, line))
      throw IoError(std::string("trace '") + path + "' truncated before " + what);
  };

  next_line("format tag");
  if (line != "# globe-trace-v1")
    throw IoError("'" + path + "' is not a globe-trace-v1 file");

  Trace tr;
  next_line("config digest");
  if (line.rfind("# config_digest = ", 0) != 0)
    throw IoError("trace '" + path + "' missing config_digest header");
  tr.config_digest = std::stoull(line.substr(18), nullptr, 16);

  next_line("seed");
  if (line.rfind("# seed = ", 0) != 0)
    throw IoError("trace '" + path + "' missing seed header");
  tr.seed = std::stoull(line.substr(9));

  next_line("column header");
  const std::string expect = detail::trace_columns(net);
  if (line != expect)
    throw IoError("trace '" + path +
                  "' column layout does not match the configured network");

  const int U = net.u(), N = net.n();
  size_t n_cols = 2 + 2 * static_cast<size_t>(U) + N;
  for (int v = 0; v < U; ++v) n_cols += net.users[v].candidates.size();

  int64_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto f = detail::split_csv(line);
    const std::string where = "trace row " + std::to_string(row);
    if (f.size() != n_cols)
      throw IoError(where + ": expected " + std::to_string(n_cols) +
                    " fields, got " + std::to_string(f.size()));
    SlotObservation s;
    size_t c = 0;
    s.t = static_cast<int64_t>(detail::parse_field(f[c++], where));
    s.price = detail::parse_field(f[c++], where);
    s.mu.resize(U);
    for (int v = 0; v < U; ++v) s.mu[v] = detail::parse_field(f[c++], where);
    s.lambda.resize(U);
    for (int v = 0; v < U; ++v) s.lambda[v] = detail::parse_field(f[c++], where);
    s.harvest.resize(N);
    for (int i = 0; i < N; ++i) s.harvest[i] = detail::parse_field(f[c++], where);
    s.p.resize(U);
    for (int v = 0; v < U; ++v) {
      s.p[v].resize(net.users[v].candidates.size());
      for (auto& x : s.p[v]) x = detail::parse_field(f[c++], where);
    }
    tr.slots.push_back(std::move(s));
  }
  return tr;
}

// Replay a recorded trace as an observation source.
inline ObsSource trace_source(const Trace& tr) {
  return [&tr](int64_t t) -> SlotObservation {
    if (t < 0 || t >= static_cast<int64_t>(tr.slots.size()))
      throw IoError("trace replay: slot " + std::to_string(t) +
                    " beyond recorded horizon " +
                    std::to_string(tr.slots.size()));
    return tr.slots[static_cast<size_t>(t)];
  };
}

// --- per-slot metrics -------------------------------------------------------------

// Columns: t,total_cost,cost_tx,cost_com,cost_grid,B_0..B_{N-1},
//          dropped_tx,dropped_comp,avg_cost,avg_battery
// Battery columns are the levels at the *start* of the slot.
class MetricsCsvWriter {
 public:
  MetricsCsvWriter(std::ostream& out, int n_bs) : out_(out) {
    out_ << "t,total_cost,cost_tx,cost_com,cost_grid";
    for (int i = 0; i < n_bs; ++i) out_ << ",B_" << i;
    out_ << ",dropped_tx,dropped_comp,avg_cost,avg_battery\n";
  }

  void write(const SlotRecord& r) {
    out_ << r.t << ',' << fmt_g17(r.out.total_cost) << ','
         << fmt_g17(r.out.total_cost_tx) << ',' << fmt_g17(r.out.total_cost_com)
         << ',' << fmt_g17(r.out.total_cost_grid);
    for (double b : r.bat_before.level) out_ << ',' << fmt_g17(b);
    out_ << ',' << fmt_g17(r.out.total_dropped_tx) << ','
         << fmt_g17(r.out.total_dropped_comp) << ','
         << fmt_g17(r.running_avg_cost) << ','
         << fmt_g17(r.running_avg_battery) << '\n';
  }

  SlotSink sink() {
    return [this](const SlotRecord& r) { write(r); };
  }

 private:
  std::ostream& out_;
};

// --- sweep tables -----------------------------------------------------------------

struct SweepRow {
  double axis_value = 0;
  double mean_cost = 0;
  double ci95 = 0;
  double mean_battery = 0;
  double theta = 0;
};

inline std::string serialize_sweep(const std::vector<SweepRow>& rows) {
  std::ostringstream o;
  o << "axis_value,mean_cost,ci95,mean_battery,theta\n";
  for (const auto& r : rows)
    o << fmt_g17(r.axis_value) << ',' << fmt_g17(r.mean_cost) << ','
      << fmt_g17(r.ci95) << ',' << fmt_g17(r.mean_battery) << ','
      << fmt_g17(r.theta) << '\n';
  return o.str();
}

// --- dual-solver convergence dumps --------------------------------------------------

// Columns: k,gamma_1..gamma_N,qp_obj,lp_obj,max_violation
class ConvergenceCsvWriter {
 public:
  ConvergenceCsvWriter(std::ostream& out, int n_bs) : out_(out) {
    out_ << "k";
    for (int i = 1; i <= n_bs; ++i) out_ << ",gamma_" << i;
    out_ << ",qp_obj,lp_obj,max_violation\n";
  }

  void write(const ConvergenceRecord& r) {
    out_ << r.k;
    for (double g : r.gamma) out_ << ',' << fmt_g17(g);
    out_ << ',' << fmt_g17(r.qp_obj) << ',' << fmt_g17(r.lp_obj) << ','
         << fmt_g17(r.max_violation) << '\n';
  }

  ConvergenceSink sink() {
    return [this](const ConvergenceRecord& r) { write(r); };
  }

 private:
  std::ostream& out_;
};

// --- run summaries ------------------------------------------------------------------

inline nlohmann::json summary_json(const std::string& policy, uint64_t seed,
                                   uint64_t config_digest,
                                   const RunMetrics& m, double theta,
                                   double V) {
  nlohmann::json j;
  j["policy"] = policy;
  j["seed"] = seed;
  j["config_digest"] = hex64(config_digest);
  j["horizon"] = m.horizon;
  j["theta"] = theta;
  j["V"] = V;
  j["time_avg_cost"] = m.time_avg_cost;
  j["avg_cost_tx"] = m.avg_cost_tx;
  j["avg_cost_com"] = m.avg_cost_com;
  j["avg_cost_grid"] = m.avg_cost_grid;
  j["offered_tx"] = m.offered_tx;
  j["offered_comp"] = m.offered_comp;
  j["dropped_tx"] = m.dropped_tx;
  j["dropped_comp"] = m.dropped_comp;
  j["tx_drop_rate"] = m.tx_drop_rate;
  j["comp_drop_rate"] = m.comp_drop_rate;
  j["mean_battery"] = m.mean_battery;
  j["avg_battery"] = m.avg_battery;
  j["avg_battery_second_half"] = m.avg_battery_second_half;
  j["total_purchased"] = m.total_purchased;
  j["causality_flags"] = m.causality_flags;
  j["solver_mean_iters"] = m.solver_mean_iters;
  j["solver_max_iters"] = m.solver_max_iters;
  j["solver_unconverged"] = m.solver_unconverged;
  j["wall_time_s"] = m.wall_time_s;
  return j;
}

}  // namespace globe
