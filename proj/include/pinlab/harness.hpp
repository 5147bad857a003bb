#pragma once

// Experiment orchestration: replica-averaged quenched free-energy
// estimates, critical-point scans, config ingestion and CSV emission.
//
// Variance control: the same disorder replicas are reused across the whole
// u-grid and N-grid (the length-N sample is a prefix of the length-N'
// sample), so each replica's log Z is exactly monotone in u and the scan
// bracket is a coupled comparison. Replicas run concurrently; results are
// merged by replica index, so the thread count never changes output bytes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "pinlab/annealed.hpp"
#include "pinlab/coarse_grain.hpp"
#include "pinlab/disorder.hpp"
#include "pinlab/errors.hpp"
#include "pinlab/excursion_law.hpp"
#include "pinlab/pinning_dp.hpp"

namespace pinlab {

struct experiment_config {
  // law
  std::string law_preset = "srw2d";
  law_params law;
  // disorder
  std::string disorder_family = "gaussian";
  double disorder_p = 0.5;
  uint64_t seed = 1;
  // model parameters and grids
  double beta = 1.0;
  std::vector<double> u_grid;
  std::vector<double> delta_grid;
  std::vector<int64_t> n_grid;
  int64_t replicas = 8;
  int threads = 1;
  std::string out;
  // block / bound runs
  int64_t blocks_k1 = 10000;
  int64_t blocks_k2 = 100;
  int64_t blocks_replicas = 200;
  std::string scales_mode = "desk";  // desk | compliant
  int64_t scales_k1_max = 10000;
  bool bound_use_surrogate = false;
};

namespace harness_detail {

inline std::string trim(std::string_view sv) {
  size_t a = 0, b = sv.size();
  while (a < b && std::isspace(static_cast<unsigned char>(sv[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(sv[b - 1]))) --b;
  return std::string(sv.substr(a, b - a));
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') { out.push_back(trim(cur)); cur.clear(); }
    else cur.push_back(ch);
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

inline double to_double(const std::string& key, const std::string& s) {
  try { size_t pos = 0; double v = std::stod(s, &pos); if (pos != s.size()) throw 0; return v; }
  catch (...) { throw config_error("config key '" + key + "': bad number '" + s + "'"); }
}

inline int64_t to_int(const std::string& key, const std::string& s) {
  try { size_t pos = 0; long long v = std::stoll(s, &pos); if (pos != s.size()) throw 0; return v; }
  catch (...) { throw config_error("config key '" + key + "': bad integer '" + s + "'"); }
}

inline uint64_t to_uint(const std::string& key, const std::string& s) {
  try { size_t pos = 0; unsigned long long v = std::stoull(s, &pos); if (pos != s.size()) throw 0; return v; }
  catch (...) { throw config_error("config key '" + key + "': bad integer '" + s + "'"); }
}

}  // namespace harness_detail

// Flat "key = value" lines, '#' comments, dotted keys, comma lists.
// Unknown keys are rejected.
inline experiment_config parse_config_text(std::string_view text) {
  using namespace harness_detail;
  experiment_config cfg;
  std::string line;
  std::istringstream in{std::string(text)};
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string val = trim(body.substr(eq + 1));
    if (key == "law.preset") cfg.law_preset = val;
    else if (key == "law.k") cfg.law.k = to_double(key, val);
    else if (key == "law.alpha") cfg.law.alpha = to_double(key, val);
    else if (key == "law.s0") cfg.law.s0 = to_double(key, val);
    else if (key == "law.c") cfg.law.c = to_double(key, val);
    else if (key == "law.n_max") cfg.law.n_max = to_int(key, val);
    else if (key == "law.masses") {
      cfg.law.masses.clear();
      for (const auto& tok : split_list(val)) cfg.law.masses.push_back(to_double(key, tok));
    }
    else if (key == "disorder.family") cfg.disorder_family = val;
    else if (key == "disorder.p") cfg.disorder_p = to_double(key, val);
    else if (key == "disorder.seed") cfg.seed = to_uint(key, val);
    else if (key == "beta") cfg.beta = to_double(key, val);
    else if (key == "u.grid") {
      cfg.u_grid.clear();
      for (const auto& tok : split_list(val)) cfg.u_grid.push_back(to_double(key, tok));
    }
    else if (key == "delta.grid") {
      cfg.delta_grid.clear();
      for (const auto& tok : split_list(val)) cfg.delta_grid.push_back(to_double(key, tok));
    }
    else if (key == "n.grid") {
      cfg.n_grid.clear();
      for (const auto& tok : split_list(val)) cfg.n_grid.push_back(to_int(key, tok));
    }
    else if (key == "replicas") cfg.replicas = to_int(key, val);
    else if (key == "threads") cfg.threads = static_cast<int>(to_int(key, val));
    else if (key == "out") cfg.out = val;
    else if (key == "blocks.k1") cfg.blocks_k1 = to_int(key, val);
    else if (key == "blocks.k2") cfg.blocks_k2 = to_int(key, val);
    else if (key == "blocks.replicas") cfg.blocks_replicas = to_int(key, val);
    else if (key == "scales.mode") cfg.scales_mode = val;
    else if (key == "scales.k1_max") cfg.scales_k1_max = to_int(key, val);
    else if (key == "bound.use_surrogate") cfg.bound_use_surrogate = (val == "true" || val == "1");
    else throw config_error("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  if (!cfg.n_grid.empty()) {
    for (size_t i = 1; i < cfg.n_grid.size(); ++i)
      if (cfg.n_grid[i] <= cfg.n_grid[i - 1])
        throw config_error("n.grid must be strictly increasing");
  }
  if (cfg.replicas < 1) throw config_error("replicas must be >= 1");
  return cfg;
}

inline experiment_config parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline excursion_law make_law(const experiment_config& cfg) {
  return make_preset(cfg.law_preset, cfg.law);
}

inline disorder_model make_model(const experiment_config& cfg) {
  return disorder_model::from_name(cfg.disorder_family, cfg.disorder_p);
}

struct result_row {
  double beta = 0.0;
  double u = 0.0;
  double delta = 0.0;
  int64_t n = 0;
  int64_t replicas = 0;
  double fq_hat = 0.0;
  double stderr_ = 0.0;
  double fa = 0.0;
  double log_m = 0.0;  // +inf when delocalized
  double contact_hat = 0.0;
  double wallclock = 0.0;  // seconds; the one nondeterministic column
};

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string csv_header() {
  return "beta,u,delta,N,replicas,fq_hat,stderr,fa,M_or_logM,contact_fraction_hat,wallclock";
}

// M_or_logM always carries log M (= exp-invertible, never overflows);
// delocalized points print inf.
inline std::string to_csv(const result_row& r) {
  std::string s;
  s += fmt17(r.beta); s += ',';
  s += fmt17(r.u); s += ',';
  s += fmt17(r.delta); s += ',';
  s += std::to_string(r.n); s += ',';
  s += std::to_string(r.replicas); s += ',';
  s += fmt17(r.fq_hat); s += ',';
  s += fmt17(r.stderr_); s += ',';
  s += fmt17(r.fa); s += ',';
  s += fmt17(r.log_m); s += ',';
  s += fmt17(r.contact_hat); s += ',';
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", r.wallclock);
  s += buf;
  return s;
}

struct grid_result {
  std::vector<result_row> rows;  // u-major, then N
  double uc_a = 0.0;
};

namespace harness_detail {

struct replica_cell {
  double log_z = 0.0;        // calibrated
  double mean_contact = 0.0;
};

// One replica's pass over the whole (u, N) grid with shared disorder.
inline void run_replica(const excursion_law& law, const disorder_model& model,
                        double beta, const std::vector<double>& u_grid,
                        const std::vector<int64_t>& n_grid, uint64_t seed, int64_t replica,
                        const std::vector<double>& neutral_refs,
                        std::vector<replica_cell>& cells /* u-major, then N */) {
  const int64_t n_max = n_grid.back();
  const auto v = model.sample(seed, static_cast<uint64_t>(replica), n_max);
  for (size_t iu = 0; iu < u_grid.size(); ++iu) {
    const pinning_params par{beta, u_grid[iu]};
    const auto w = site_log_weights(par, v.values, n_max);
    const auto zc = renewal_log_zc(law, w);
    for (size_t in = 0; in < n_grid.size(); ++in) {
      const int64_t n = n_grid[in];
      const double raw = renewal_log_z_free(law, {zc.data(), static_cast<size_t>(n) + 1}, n);
      const auto lb = renewal_log_zb(law, {w.data(), static_cast<size_t>(n) + 1});
      kahan_sum contact;
      for (int64_t i = 1; i <= n; ++i) {
        double p = std::exp(zc[static_cast<size_t>(i)] + lb[static_cast<size_t>(i)] - raw);
        if (p > 1.0) p = 1.0;
        contact.add(p);
      }
      auto& cell = cells[iu * n_grid.size() + in];
      cell.log_z = raw - neutral_refs[in];
      cell.mean_contact = contact.value() / static_cast<double>(n);
    }
  }
}

}  // namespace harness_detail

// Replica-averaged estimates of (1/(beta N)) log Z_N over a (u, N) grid.
// Deterministic for fixed (config, seed) independent of the thread count.
inline grid_result run_grid(const excursion_law& law, const disorder_model& model,
                            double beta, const std::vector<double>& u_grid,
                            const std::vector<int64_t>& n_grid, int64_t replicas,
                            uint64_t seed, int threads) {
  if (u_grid.empty() || n_grid.empty()) throw invalid_spec("run_grid: empty grid");
  if (replicas < 1) throw invalid_spec("run_grid: need replicas >= 1");
  const auto t_start = std::chrono::steady_clock::now();

  // shared zero-weight references, one forward pass at the largest horizon
  std::vector<double> neutral_refs(n_grid.size());
  {
    const int64_t n_max = n_grid.back();
    std::vector<double> w0(static_cast<size_t>(n_max) + 1, 0.0);
    const auto zc0 = renewal_log_zc(law, w0);
    for (size_t in = 0; in < n_grid.size(); ++in) {
      const int64_t n = n_grid[in];
      neutral_refs[in] = renewal_log_z_free(law, {zc0.data(), static_cast<size_t>(n) + 1}, n);
    }
  }

  const size_t cells_per_replica = u_grid.size() * n_grid.size();
  std::vector<harness_detail::replica_cell> cells(cells_per_replica * static_cast<size_t>(replicas));
  auto run = [&](int64_t r) {
    std::vector<harness_detail::replica_cell> local(cells_per_replica);
    harness_detail::run_replica(law, model, beta, u_grid, n_grid, seed, r, neutral_refs, local);
    std::copy(local.begin(), local.end(),
              cells.begin() + static_cast<size_t>(r) * cells_per_replica);
  };
  const int nt = std::max(1, std::min<int>(threads, static_cast<int>(replicas)));
  if (nt == 1) {
    for (int64_t r = 0; r < replicas; ++r) run(r);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&, t] {
        for (int64_t r = t; r < replicas; r += nt) run(r);
      });
    for (auto& th : pool) th.join();
  }

  grid_result res;
  res.uc_a = u_c_annealed(model, beta);
  res.rows.reserve(cells_per_replica);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  for (size_t iu = 0; iu < u_grid.size(); ++iu) {
    const double u = u_grid[iu];
    const double delta = u - res.uc_a;
    const auto sol = solve_free_energy(law, beta * delta);
    for (size_t in = 0; in < n_grid.size(); ++in) {
      const int64_t n = n_grid[in];
      kahan_sum sum, sumsq, csum;
      for (int64_t r = 0; r < replicas; ++r) {
        const auto& cell = cells[static_cast<size_t>(r) * cells_per_replica + iu * n_grid.size() + in];
        const double f = cell.log_z / (beta * static_cast<double>(n));
        sum.add(f);
        sumsq.add(f * f);
        csum.add(cell.mean_contact);
      }
      const double mean = sum.value() / static_cast<double>(replicas);
      double var = 0.0;
      if (replicas > 1) {
        var = (sumsq.value() - static_cast<double>(replicas) * mean * mean) /
              static_cast<double>(replicas - 1);
        if (var < 0.0) var = 0.0;
      }
      result_row row;
      row.beta = beta;
      row.u = u;
      row.delta = delta;
      row.n = n;
      row.replicas = replicas;
      row.fq_hat = mean;
      row.stderr_ = replicas > 1 ? std::sqrt(var / static_cast<double>(replicas)) : 0.0;
      row.fa = sol.s / beta;  // underflows to 0 deep in the critical window
      row.log_m = sol.log_m;
      row.contact_hat = csum.value() / static_cast<double>(replicas);
      row.wallclock = elapsed;
      res.rows.push_back(row);
    }
  }
  return res;
}

// Single-point estimate (one (beta, u, N) slice).
inline result_row estimate_fq(const excursion_law& law, const disorder_model& model,
                              double beta, double u, int64_t n, int64_t replicas,
                              uint64_t seed, int threads = 1) {
  const auto res = run_grid(law, model, beta, {u}, {n}, replicas, seed, threads);
  return res.rows.front();
}

struct scan_result {
  grid_result grid;
  double uc_a = 0.0;
  double bracket_lo = 0.0;  // largest u not detected as pinned (at largest N)
  double bracket_hi = 0.0;  // smallest u detected as pinned
};

// Scan a u-grid straddling the annealed critical point; "pinned" means
// fq_hat > 3 stderr at the largest horizon.
inline scan_result scan_critical_point(const excursion_law& law, const disorder_model& model,
                                       double beta, std::vector<double> u_grid,
                                       const std::vector<int64_t>& n_grid, int64_t replicas,
                                       uint64_t seed, int threads) {
  std::sort(u_grid.begin(), u_grid.end());
  scan_result out;
  out.grid = run_grid(law, model, beta, u_grid, n_grid, replicas, seed, threads);
  out.uc_a = out.grid.uc_a;

  const size_t n_count = n_grid.size();
  bool have_lo = false, have_hi = false;
  for (size_t iu = 0; iu < u_grid.size(); ++iu) {
    const auto& row = out.grid.rows[iu * n_count + (n_count - 1)];
    const bool pinned = row.fq_hat > 3.0 * row.stderr_;
    if (!pinned) { out.bracket_lo = row.u; have_lo = true; }
    else if (!have_hi) { out.bracket_hi = row.u; have_hi = true; }
  }
  if (!have_lo || !have_hi || !(out.bracket_lo < out.bracket_hi))
    throw inconclusive_bracket("scan_critical_point: grid does not straddle the threshold");
  return out;
}

inline void write_rows_csv(std::ostream& os, const std::vector<result_row>& rows) {
  os << csv_header() << "\n";
  for (const auto& r : rows) os << to_csv(r) << "\n";
}

}  // namespace pinlab
