#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pinlab/cli.hpp"
#include "pinlab/harness.hpp"

using namespace pinlab;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.is_open());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.is_open());
  out << text;
}

// strip the wallclock column (the one legitimately nondeterministic field)
std::string mask_wallclock(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && (std::isdigit(static_cast<unsigned char>(line[0])) || line[0] == '-')) {
      const auto pos = line.rfind(',');
      if (pos != std::string::npos) line.erase(pos);
    }
    out << line << "\n";
  }
  return out.str();
}

int run(std::vector<std::string> args) {
  std::vector<const char*> argv;
  argv.push_back("pinlab");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("config parsing", "[harness]") {
  const char* text =
      "# comment\n"
      "law.preset = logpow\n"
      "law.k = 1.5\n"
      "law.alpha = 2.5\n"
      "law.n_max = 512\n"
      "disorder.family = rademacher\n"
      "disorder.seed = 99\n"
      "beta = 1.25\n"
      "u.grid = -0.5, 0.0, 0.5\n"
      "n.grid = 100, 200\n"
      "replicas = 6\n"
      "threads = 2\n"
      "out = run.csv\n";
  const auto cfg = parse_config_text(text);
  CHECK(cfg.law_preset == "logpow");
  CHECK(cfg.law.k == 1.5);
  CHECK(cfg.law.alpha == 2.5);
  CHECK(cfg.disorder_family == "rademacher");
  CHECK(cfg.seed == 99);
  CHECK(cfg.beta == 1.25);
  CHECK(cfg.u_grid == std::vector<double>{-0.5, 0.0, 0.5});
  CHECK(cfg.n_grid == std::vector<int64_t>{100, 200});
  CHECK(cfg.replicas == 6);
  CHECK(cfg.out == "run.csv");

  CHECK_THROWS_AS(parse_config_text("law.bogus = 1\n"), config_error);
  CHECK_THROWS_AS(parse_config_text("beta 1\n"), config_error);
  CHECK_THROWS_AS(parse_config_text("n.grid = 100, 50\n"), config_error);
  CHECK_THROWS_AS(parse_config_text("replicas = 0\n"), config_error);
  CHECK_THROWS_AS(parse_config_file("/nonexistent/path.cfg"), config_error);
}

TEST_CASE("degenerate weights give an exactly zero estimate", "[harness]") {
  // zero-disorder model at its own critical point: every weight vanishes
  const auto law = excursion_law::from_table(std::vector<double>{0.5, 0.3, 0.2});
  const auto model = disorder_model::degenerate();
  CHECK(u_c_annealed(model, 1.0) == 0.0);
  const auto row = estimate_fq(law, model, 1.0, 0.0, 128, 6, 123);
  CHECK(row.fq_hat == 0.0);
  CHECK(row.stderr_ == 0.0);
  CHECK(row.delta == 0.0);
}

TEST_CASE("grid runs are deterministic and thread-invariant", "[harness]") {
  law_params lp;
  lp.n_max = 256;
  const auto law = make_preset("srw2d", lp);
  const auto model = disorder_model::gaussian();
  const auto a = run_grid(law, model, 1.0, {-0.3, 0.1}, {64, 256}, 10, 777, 1);
  const auto b = run_grid(law, model, 1.0, {-0.3, 0.1}, {64, 256}, 10, 777, 4);
  const auto c = run_grid(law, model, 1.0, {-0.3, 0.1}, {64, 256}, 10, 777, 1);
  REQUIRE(a.rows.size() == b.rows.size());
  for (size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].fq_hat == b.rows[i].fq_hat);
    CHECK(a.rows[i].stderr_ == b.rows[i].stderr_);
    CHECK(a.rows[i].contact_hat == b.rows[i].contact_hat);
    CHECK(a.rows[i].fq_hat == c.rows[i].fq_hat);
  }
}

TEST_CASE("sub-horizon rows match standalone runs (shared replicas)", "[harness]") {
  law_params lp;
  lp.n_max = 200;
  const auto law = make_preset("srw2d", lp);
  const auto model = disorder_model::gaussian();
  const auto joint = run_grid(law, model, 1.0, {0.2}, {100, 200}, 8, 55, 2);
  const auto alone = run_grid(law, model, 1.0, {0.2}, {100}, 8, 55, 1);
  CHECK(joint.rows[0].fq_hat == alone.rows[0].fq_hat);
  CHECK(joint.rows[0].stderr_ == alone.rows[0].stderr_);
}

TEST_CASE("estimates are monotone along the u grid", "[harness]") {
  law_params lp;
  lp.n_max = 400;
  const auto law = make_preset("srw2d", lp);
  const auto model = disorder_model::gaussian();
  const std::vector<double> ug = {-0.8, -0.5, -0.2, 0.1, 0.4};
  const auto res = run_grid(law, model, 1.0, ug, {400}, 12, 2024, 2);
  for (size_t i = 1; i < res.rows.size(); ++i) {
    const auto& lo = res.rows[i - 1];
    const auto& hi = res.rows[i];
    CHECK(hi.fq_hat >= lo.fq_hat - 2.0 * (lo.stderr_ + hi.stderr_));
  }
}

TEST_CASE("jensen ordering against the annealed value", "[harness]") {
  law_params lp;
  lp.n_max = 512;
  const auto law = make_preset("srw2d", lp);
  const auto model = disorder_model::gaussian();
  const double uc = u_c_annealed(model, 1.0);
  const std::vector<double> ug = {uc - 0.2, uc, uc + 0.2, uc + 0.5};
  const int64_t n = 512;
  const auto res = run_grid(law, model, 1.0, ug, {n}, 12, 4711, 2);
  for (const auto& row : res.rows) {
    const double ann = annealed_log_z_dp(law, row.delta, n) / static_cast<double>(n);
    CHECK(row.fq_hat <= ann + 3.0 * row.stderr_ + 1e-12);
  }
}

TEST_CASE("doubling replicas shrinks the standard error like sqrt(2)", "[harness]") {
  law_params lp;
  lp.n_max = 96;
  const auto law = make_preset("srw2d", lp);
  const auto model = disorder_model::gaussian();
  double ratio_sum = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const uint64_t seed = 9000 + 31 * static_cast<uint64_t>(trial);
    const auto small = run_grid(law, model, 1.0, {0.1}, {96}, 48, seed, 2);
    const auto big = run_grid(law, model, 1.0, {0.1}, {96}, 96, seed, 2);
    ratio_sum += small.rows[0].stderr_ / big.rows[0].stderr_;
  }
  const double mean_ratio = ratio_sum / 10.0;
  CHECK(mean_ratio > std::sqrt(2.0) * 0.8);
  CHECK(mean_ratio < std::sqrt(2.0) * 1.2);
}

TEST_CASE("scan finds a bracket around the annealed critical point", "[harness]") {
  law_params lp;
  lp.n_max = 1000;
  const auto law = make_preset("srw2d", lp);
  const auto model = disorder_model::gaussian();
  const double uc = u_c_annealed(model, 1.0);
  const auto res = scan_critical_point(law, model, 1.0, {uc - 0.3, uc, uc + 0.2, uc + 0.5},
                                       {250, 1000}, 12, 31415, 2);
  CHECK(res.bracket_lo < res.bracket_hi);
  CHECK(res.bracket_lo >= uc - 0.3);
  CHECK(res.bracket_hi <= uc + 0.5);
  // all-pinned grids cannot bracket
  CHECK_THROWS_AS(scan_critical_point(law, model, 1.0, {uc + 0.4, uc + 0.6}, {250}, 8, 1, 1),
                  inconclusive_bracket);
}

TEST_CASE("csv shape and 17-digit round trip", "[harness]") {
  CHECK(csv_header() ==
        "beta,u,delta,N,replicas,fq_hat,stderr,fa,M_or_logM,contact_fraction_hat,wallclock");
  result_row r;
  r.beta = 1.0;
  r.u = -0.13136499999999999;
  r.delta = 1.0 / 3.0;
  r.n = 1000;
  r.replicas = 32;
  r.fq_hat = 0.012345678901234567;
  r.stderr_ = 1.9e-5;
  r.fa = 0.037;
  r.log_m = 3.0714612345678901;
  r.contact_hat = 0.25;
  r.wallclock = 1.23456;
  const auto line = to_csv(r);
  // floats round-trip exactly through the 17-digit format
  double u2, fq2;
  std::sscanf(line.c_str(), "%*lf,%lf,%*lf,%*d,%*d,%lf", &u2, &fq2);
  CHECK(u2 == r.u);
  CHECK(fq2 == r.fq_hat);
  CHECK(line.find("1.235") != std::string::npos);  // wallclock trimmed to ms
}

TEST_CASE("cli exit codes and output files", "[harness][cli]") {
  CHECK(run({"validate"}) == 0);
  CHECK(run({"bogus-subcommand"}) == 2);
  CHECK(run({"annealed", "--config", "/no/such/file.cfg"}) == 2);
  CHECK(run({"annealed"}) == 2);  // missing --config

  spit("/tmp/pinlab_t1.cfg",
       "law.preset = table\nlaw.masses = 0.5,0.3,0.2\nbeta = 1\ndelta.grid = 0.693147,0.0\n");
  CHECK(run({"annealed", "--config", "/tmp/pinlab_t1.cfg", "--out", "/tmp/pinlab_t1.csv"}) == 0);
  const auto csv = slurp("/tmp/pinlab_t1.csv");
  CHECK(csv.rfind("beta_delta,s,M_or_logM,residual,method\n", 0) == 0);
  CHECK(csv.find("exact_sum") != std::string::npos);
  CHECK(csv.find("trivial_zero") != std::string::npos);
  CHECK(csv.find("inf") != std::string::npos);  // delocalized log M

  // config errors surface as exit 2, numeric failures as exit 1
  spit("/tmp/pinlab_t2.cfg", "law.preset = table\nlaw.masses = 0.5,0.4\nbeta = 1\n");
  CHECK(run({"annealed", "--config", "/tmp/pinlab_t2.cfg"}) == 2);  // bad table mass sum
  spit("/tmp/pinlab_t3.cfg",
       "law.preset = srw2d\nlaw.n_max = 512\nbeta = 1\nu.grid = 0.2,0.4\nn.grid = 100\n"
       "replicas = 4\ndisorder.family = gaussian\n");
  CHECK(run({"scan-uc", "--config", "/tmp/pinlab_t3.cfg", "--out", "/tmp/pinlab_t3.csv"}) == 1);
}

TEST_CASE("scan-uc output matches the golden file", "[harness][cli]") {
  spit("/tmp/pinlab_gold.cfg",
       "law.preset = srw2d\n"
       "law.n_max = 400\n"
       "disorder.family = gaussian\n"
       "disorder.seed = 424242\n"
       "beta = 1\n"
       "u.grid = -0.8, -0.5, -0.2, 0.2\n"
       "n.grid = 200, 400\n"
       "replicas = 8\n");
  REQUIRE(run({"scan-uc", "--config", "/tmp/pinlab_gold.cfg", "--out", "/tmp/pinlab_gold.csv",
               "--threads", "2"}) == 0);
  const auto got = mask_wallclock(slurp("/tmp/pinlab_gold.csv"));
  std::ifstream in("tests/golden/scan_uc_small.csv", std::ios::binary);
  if (!in.is_open()) in.open("../tests/golden/scan_uc_small.csv", std::ios::binary);
  REQUIRE(in.is_open());
  std::ostringstream want;
  want << in.rdbuf();
  CHECK(got == want.str());
}
