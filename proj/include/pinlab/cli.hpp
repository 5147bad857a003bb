#pragma once

// Command-line front end. Subcommand first, then
//   --config PATH   flat key = value file (see README for the key set)
//   --out PATH      output CSV (default stdout)
//   --threads N     overrides config
//   --seed S        overrides config
// Exit codes: 0 ok, 1 numeric failure (diagnostic on stderr), 2 usage or
// config errors.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pinlab/coarse_grain.hpp"
#include "pinlab/harness.hpp"

namespace pinlab {

namespace cli_detail {

struct common_opts {
  std::string config_path;
  std::string out_path;
  std::optional<int> threads;
  std::optional<uint64_t> seed;
};

inline void attach(CLI::App* cmd, common_opts& o) {
  cmd->add_option("--config", o.config_path, "config file (key = value lines)");
  cmd->add_option("--out", o.out_path, "output path (default: stdout)");
  cmd->add_option("--threads", o.threads, "worker threads");
  cmd->add_option("--seed", o.seed, "base seed (overrides config)");
}

inline experiment_config load(const common_opts& o) {
  if (o.config_path.empty()) throw config_error("missing --config");
  experiment_config cfg = parse_config_file(o.config_path);
  if (o.threads) cfg.threads = *o.threads;
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out_path.empty()) cfg.out = o.out_path;
  return cfg;
}

struct sink {
  std::ofstream file;
  std::ostream* os = &std::cout;
  explicit sink(const std::string& path) {
    if (!path.empty()) {
      file.open(path, std::ios::binary);
      if (!file) throw config_error("cannot open output path: " + path);
      os = &file;
    }
  }
  std::ostream& out() { return *os; }
};

inline std::vector<double> beta_delta_list(const experiment_config& cfg) {
  std::vector<double> out;
  if (!cfg.delta_grid.empty()) {
    for (double d : cfg.delta_grid) out.push_back(cfg.beta * d);
  } else if (!cfg.u_grid.empty()) {
    const auto model = make_model(cfg);
    const double uc = u_c_annealed(model, cfg.beta);
    for (double u : cfg.u_grid) out.push_back(cfg.beta * (u - uc));
  } else {
    throw config_error("need delta.grid or u.grid");
  }
  return out;
}

inline double single_delta(const experiment_config& cfg) {
  if (!cfg.delta_grid.empty()) return cfg.delta_grid.front();
  if (!cfg.u_grid.empty()) {
    const auto model = make_model(cfg);
    return cfg.u_grid.front() - u_c_annealed(model, cfg.beta);
  }
  throw config_error("need delta.grid or u.grid");
}

inline int cmd_annealed(const experiment_config& cfg) {
  const auto law = make_law(cfg);
  sink s(cfg.out);
  s.out() << "beta_delta,s,M_or_logM,residual,method\n";
  for (double bd : beta_delta_list(cfg)) {
    const auto sol = solve_free_energy(law, bd);
    s.out() << fmt17(sol.beta_delta) << ',' << fmt17(sol.s) << ',' << fmt17(sol.log_m)
            << ',' << fmt17(sol.residual) << ',' << to_string(sol.method) << "\n";
  }
  return 0;
}

inline int cmd_free_energy(const experiment_config& cfg) {
  const auto law = make_law(cfg);
  const auto model = make_model(cfg);
  std::vector<double> u_grid = cfg.u_grid;
  if (u_grid.empty()) {
    const double uc = u_c_annealed(model, cfg.beta);
    for (double d : cfg.delta_grid) u_grid.push_back(uc + d);
  }
  if (u_grid.empty() || cfg.n_grid.empty())
    throw config_error("free-energy needs u.grid (or delta.grid) and n.grid");
  const auto res = run_grid(law, model, cfg.beta, u_grid, cfg.n_grid,
                            cfg.replicas, cfg.seed, cfg.threads);
  sink s(cfg.out);
  write_rows_csv(s.out(), res.rows);
  return 0;
}

inline int cmd_scan_uc(const experiment_config& cfg) {
  const auto law = make_law(cfg);
  const auto model = make_model(cfg);
  if (cfg.u_grid.empty() || cfg.n_grid.empty())
    throw config_error("scan-uc needs u.grid and n.grid");
  const auto res = scan_critical_point(law, model, cfg.beta, cfg.u_grid, cfg.n_grid,
                                       cfg.replicas, cfg.seed, cfg.threads);
  sink s(cfg.out);
  write_rows_csv(s.out(), res.grid.rows);
  s.out() << "uc_a=" << fmt17(res.uc_a) << " bracket=[" << fmt17(res.bracket_lo)
          << "," << fmt17(res.bracket_hi) << "]\n";
  return 0;
}

inline int cmd_blocks(const experiment_config& cfg) {
  const auto law = make_law(cfg);
  const auto model = make_model(cfg);
  const double delta = single_delta(cfg);
  const double uc = u_c_annealed(model, cfg.beta);
  const pinning_params par{cfg.beta, uc + delta};
  const auto sol = solve_free_energy(law, cfg.beta * delta);
  const double m = sol.log_m < 700.0 ? std::exp(sol.log_m) : pos_inf;
  const auto scales = check_scales(law, model, cfg.beta, m, cfg.blocks_k1, cfg.blocks_k2);
  const auto report = estimate_p_good(law, par, model, scales, cfg.blocks_replicas,
                                      cfg.seed, cfg.threads);
  sink s(cfg.out);
  s.out() << "replica,verdict,logW,logRef\n";
  for (const auto& row : report.rows)
    s.out() << row.replica << ',' << (row.good ? 1 : 0) << ',' << fmt17(row.log_w_sum)
            << ',' << fmt17(row.log_ref) << "\n";
  s.out() << "# p_good_hat=" << fmt17(report.p_good_hat) << " stderr=" << fmt17(report.stderr_)
          << " replicas=" << report.replicas << "\n";
  return 0;
}

inline int cmd_bound(const experiment_config& cfg) {
  const auto law = make_law(cfg);
  const auto model = make_model(cfg);
  const double delta = single_delta(cfg);
  const double beta_delta = cfg.beta * delta;
  const auto sol = solve_free_energy(law, beta_delta);
  if (!(sol.log_m < 690.0))
    throw non_convergent("bound: correlation length exceeds double range; "
                         "no desk-computable scales at this delta");
  const double m = std::exp(sol.log_m);
  const auto scales = cfg.scales_mode == "compliant"
                          ? choose_scales(law, model, cfg.beta, m, scale_mode::compliant)
                          : choose_scales(law, model, cfg.beta, m, scale_mode::desk,
                                          cfg.scales_k1_max);
  const double cphi = c_phi_at_scale(law.phi(), scales.log_k1);
  const double log_ref = beta_delta + annealed_log_z_dp(law, beta_delta, scales.k2);
  const auto ref_kind = cfg.bound_use_surrogate ? bound_reference::lemma_surrogate
                                                : bound_reference::dp_value;
  const auto b = fq_lower_bound(law, beta_delta, scales, cphi, log_ref, ref_kind);
  sink s(cfg.out);
  s.out() << "beta,delta,beta_delta,log_M,mode,K2,log_K1,c_phi,log_ref,log_chat,"
             "log_cphi,log_phi_K1,bracket,log_bound,conclusive\n";
  s.out() << fmt17(cfg.beta) << ',' << fmt17(delta) << ',' << fmt17(beta_delta) << ','
          << fmt17(sol.log_m) << ',' << cfg.scales_mode << ',' << scales.k2 << ','
          << fmt17(scales.log_k1) << ',' << fmt17(cphi) << ',' << fmt17(b.log_ref) << ','
          << fmt17(b.log_chat) << ',' << fmt17(b.log_cphi) << ',' << fmt17(b.log_phi_k1)
          << ',' << fmt17(b.bracket) << ','
          << (b.conclusive ? fmt17(b.log_bound) : std::string("nan")) << ','
          << (b.conclusive ? 1 : 0) << "\n";
  return 0;
}

struct suite_tally {
  int passed = 0;
  int total = 0;
  void check(bool ok) { ++total; if (ok) ++passed; }
  bool all() const { return passed == total; }
};

inline int cmd_validate() {
  int bad_suites = 0;
  auto report = [&](const char* name, const suite_tally& t) {
    std::printf("%-14s %d/%d\n", name, t.passed, t.total);
    if (!t.all()) ++bad_suites;
  };

  {  // excursion laws
    suite_tally t;
    law_params lp;
    lp.n_max = 4096;
    std::vector<excursion_law> laws;
    laws.push_back(make_preset("srw2d", lp));
    law_params lp2 = lp; lp2.k = 1.0; lp2.alpha = 1.5;
    laws.push_back(make_preset("logpow", lp2));
    law_params lp3 = lp; lp3.c = 2.0; lp3.k = 1.0;
    laws.push_back(make_preset("power", lp3));
    law_params lp4; lp4.masses = {0.5, 0.3, 0.2};
    laws.push_back(make_preset("table", lp4));
    for (const auto& law : laws) {
      kahan_sum total;
      for (int64_t n = 1; n <= law.n_max(); ++n) total.add(law.mass(n));
      t.check(std::abs(total.value() + law.tail(law.n_max()) - 1.0) <= 1e-12);
      bool exact = law.tail(0) == 1.0;
      for (int64_t n = 1; n <= law.n_max(); ++n)
        exact = exact && (law.tail(n - 1) - law.tail(n) == law.mass(n));
      t.check(exact);
    }
    const auto phi0 = phi_spec::log_power(2.0, 2.0, 0.0);
    bool psi_ok = true;
    for (double x : {0.5, 5.0, 50.0})
      psi_ok = psi_ok && std::abs(psi_integral(phi0, x) * x / 2.0 - 1.0) < 1e-8;
    t.check(psi_ok);
    bool rejected = false;
    try { (void)excursion_law::build(1.0, phi_spec::constant(1.0), 100); }
    catch (const non_summable&) { rejected = true; }
    t.check(rejected);
    report("laws", t);
  }

  {  // disorder
    suite_tally t;
    const auto models = {disorder_model::gaussian(), disorder_model::rademacher(),
                         disorder_model::uniform(), disorder_model::shifted_bernoulli(0.3)};
    bool zeros = true, nonneg = true;
    for (const auto& m : models) {
      zeros = zeros && m.log_mgf(0.0) == 0.0;
      for (double b : {0.25, 0.5, 1.0, 2.0}) nonneg = nonneg && m.lambda_v(b) >= 0.0;
    }
    t.check(zeros);
    t.check(nonneg);
    t.check(std::abs(disorder_model::gaussian().log_mgf(1.0) - 0.5) < 1e-15);
    const auto m = disorder_model::gaussian();
    const auto a = m.sample(7, 3, 64), b = m.sample(7, 3, 64), c = m.sample(7, 4, 64);
    t.check(a.values == b.values);
    t.check(a.values != c.values);
    report("disorder", t);
  }

  {  // dynamic programming
    suite_tally t;
    law_params lp;
    lp.n_max = 1024;
    const auto srw = make_preset("srw2d", lp);
    law_params lpt; lpt.masses = {0.5, 0.3, 0.2};
    const auto table = make_preset("table", lpt);
    const std::vector<double> v0(1000, 0.0);
    t.check(log_z_free(srw, {1.0, 0.0}, v0, 1000) == 0.0);
    t.check(log_z_free(table, {1.7, 0.0}, v0, 1000) == 0.0);
    const auto model = disorder_model::gaussian();
    bool oracle = true;
    for (uint64_t r = 0; r < 5; ++r) {
      const auto v = model.sample(11, r, 12);
      const pinning_params par{1.0 + 0.1 * r, 0.2 - 0.05 * r};
      oracle = oracle && std::abs(log_z_free(table, par, v.values, 12) -
                                  brute_force_log_z(table, par, v.values, 12)) < 1e-9;
    }
    t.check(oracle);
    const auto v = model.sample(13, 0, 64);
    const double z1 = log_z_free(srw, {1.0, -0.2}, v.values, 64);
    const double z2 = log_z_free(srw, {1.0, 0.2}, v.values, 64);
    t.check(z2 > z1);
    report("dp", t);
  }

  {  // annealed
    suite_tally t;
    law_params lpt; lpt.masses = {0.5, 0.3, 0.2};
    const auto table = make_preset("table", lpt);
    const auto sol = solve_free_energy(table, std::log(2.0));
    const double x = std::exp(-sol.s);
    t.check(x > 0.64 && x < 0.65);
    t.check(sol.residual < 1e-12);
    const auto triv = solve_free_energy(table, 0.0);
    t.check(triv.method == annealed_method::trivial_zero && triv.s == 0.0);
    t.check(std::abs(u_c_annealed(disorder_model::gaussian(), 1.0) + 0.5) < 1e-15);
    const int64_t n3 = static_cast<int64_t>(std::llround(200.0 * sol.m));
    const double slope = annealed_log_z_dp(table, std::log(2.0), n3) / static_cast<double>(n3);
    t.check(std::abs(slope / sol.s - 1.0) < 0.02);
    law_params lp; lp.n_max = 2048;
    const auto srw = make_preset("srw2d", lp);
    const auto tiny = solve_free_energy(srw, 3e-3);
    const double pred = predict_log_m_asymptotic(srw.effective_phi(), 3e-3);
    t.check(std::abs(tiny.log_m / pred - 1.0) < 0.3);
    report("annealed", t);
  }

  {  // scales
    suite_tally t;
    law_params lp; lp.n_max = 256;
    const auto srw = make_preset("srw2d", lp);
    const auto model = disorder_model::gaussian();
    t.check(check_scales(srw, model, 1.0, 5.0, std::log(1e6), int64_t{6}).ok_2_5);
    t.check(!check_scales(srw, model, 1.0, 5.0, std::log(1e6), int64_t{4}).ok_2_5);
    const auto worked = check_scales(srw, model, 1.0, 5.0, 505.0, int64_t{250});
    t.check(worked.compliant());
    const auto comp = choose_scales(srw, model, 1.0, 5.0, scale_mode::compliant);
    t.check(comp.compliant() && !comp.k1_feasible());
    const auto desk = choose_scales(srw, model, 1.0, 5.0, scale_mode::desk, 10000);
    t.check(desk.k1_feasible() && *desk.k1 == 10000 && desk.k2 == 100);
    report("scales", t);
  }

  {  // harness
    suite_tally t;
    const char* cfg_text =
        "law.preset = table\nlaw.masses = 0.5, 0.3, 0.2\n"
        "disorder.family = degenerate\ndisorder.seed = 5\nbeta = 1\n"
        "u.grid = 0\nn.grid = 64\nreplicas = 4\n";
    const auto cfg = parse_config_text(cfg_text);
    const auto law = make_law(cfg);
    const auto model = make_model(cfg);
    const auto row = estimate_fq(law, model, 1.0, 0.0, 64, 4, 5);
    t.check(row.fq_hat == 0.0 && row.stderr_ == 0.0);
    const auto g1 = run_grid(law, disorder_model::gaussian(), 1.0, {-0.2, 0.3}, {32, 64}, 8, 42, 1);
    const auto g2 = run_grid(law, disorder_model::gaussian(), 1.0, {-0.2, 0.3}, {32, 64}, 8, 42, 2);
    bool same = g1.rows.size() == g2.rows.size();
    for (size_t i = 0; same && i < g1.rows.size(); ++i) {
      const auto a = g1.rows[i], b = g2.rows[i];
      same = a.fq_hat == b.fq_hat && a.stderr_ == b.stderr_ && a.contact_hat == b.contact_hat;
    }
    t.check(same);
    report("harness", t);
  }

  return bad_suites == 0 ? 0 : 1;
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"pinning-model laboratory"};
  app.require_subcommand(1);

  cli_detail::common_opts opts;
  auto* c_ann = app.add_subcommand("annealed", "free-energy fixed point per beta*Delta");
  auto* c_fe = app.add_subcommand("free-energy", "replica-averaged quenched estimates");
  auto* c_scan = app.add_subcommand("scan-uc", "critical-point scan over a u grid");
  auto* c_blocks = app.add_subcommand("blocks", "good-block probability estimate");
  auto* c_bound = app.add_subcommand("bound", "computable free-energy lower bound");
  auto* c_val = app.add_subcommand("validate", "built-in property suite");
  for (auto* c : {c_ann, c_fe, c_scan, c_blocks, c_bound}) cli_detail::attach(c, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (c_val->parsed()) return cli_detail::cmd_validate();
    const auto cfg = cli_detail::load(opts);
    if (c_ann->parsed()) return cli_detail::cmd_annealed(cfg);
    if (c_fe->parsed()) return cli_detail::cmd_free_energy(cfg);
    if (c_scan->parsed()) return cli_detail::cmd_scan_uc(cfg);
    if (c_blocks->parsed()) return cli_detail::cmd_blocks(cfg);
    if (c_bound->parsed()) return cli_detail::cmd_bound(cfg);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const invalid_spec& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace pinlab
