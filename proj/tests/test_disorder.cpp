#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "pinlab/disorder.hpp"

using namespace pinlab;

namespace {

std::vector<disorder_model> all_models() {
  return {disorder_model::gaussian(), disorder_model::rademacher(),
          disorder_model::uniform(), disorder_model::shifted_bernoulli(0.3)};
}

}  // namespace

TEST_CASE("log-mgf closed forms", "[disorder]") {
  const auto g = disorder_model::gaussian();
  for (double t : {-2.0, -0.5, 0.0, 0.5, 1.0, 3.0})
    CHECK(g.log_mgf(t) == 0.5 * t * t);
  const auto r = disorder_model::rademacher();
  for (double t : {0.3, 1.0, 2.0, 40.0})
    CHECK(std::abs(r.log_mgf(t) - std::log(std::cosh(std::min(t, 700.0)))) < 1e-12 * (1 + t));
  // p = 1/2 two-point law coincides with rademacher
  const auto b = disorder_model::shifted_bernoulli(0.5);
  for (double t : {0.7, 1.3}) CHECK(std::abs(b.log_mgf(t) - r.log_mgf(t)) < 1e-14);
  // uniform on [-sqrt(3), sqrt(3)]: direct sinh form vs small-t series
  const auto u = disorder_model::uniform();
  const double a = std::sqrt(3.0) * 1e-5;
  CHECK(std::abs(u.log_mgf(1e-5) - a * a / 6.0) < 1e-18);
  CHECK(std::abs(u.log_mgf(2.0) - std::log(std::sinh(2 * std::sqrt(3.0)) / (2 * std::sqrt(3.0)))) < 1e-13);
  for (const auto& m : all_models()) CHECK(m.log_mgf(0.0) == 0.0);
  CHECK(disorder_model::degenerate().log_mgf(5.0) == 0.0);
}

TEST_CASE("log-mgf is log-convex and lambda is nonnegative", "[disorder]") {
  for (const auto& m : all_models()) {
    for (double s = -2.0; s <= 2.0; s += 0.5) {
      for (double t = -2.0; t <= 2.0; t += 0.5) {
        const double mid = m.log_mgf(0.5 * (s + t));
        CHECK(mid <= 0.5 * (m.log_mgf(s) + m.log_mgf(t)) + 1e-12);
      }
    }
    for (double b : {0.1, 0.5, 1.0, 2.0, 4.0}) CHECK(m.lambda_v(b) >= 0.0);
    CHECK(m.lambda_v(1e-4) < 1e-6);  // continuity at 0
  }
  CHECK(std::abs(disorder_model::gaussian().lambda_v(1.0) - 1.0) < 1e-15);
  const double lr = disorder_model::rademacher().lambda_v(1.0);
  CHECK(std::abs(lr - (std::log(std::cosh(2.0)) - 2.0 * std::log(std::cosh(1.0)))) < 1e-14);
  CHECK(lr >= 0.0);
}

TEST_CASE("sampling is deterministic with prefix structure", "[disorder]") {
  for (const auto& m : all_models()) {
    const auto a = m.sample(0xC0FFEE, 2, 200);
    const auto b = m.sample(0xC0FFEE, 2, 200);
    CHECK(a.values == b.values);
    const auto shorter = m.sample(0xC0FFEE, 2, 77);
    CHECK(std::equal(shorter.values.begin(), shorter.values.end(), a.values.begin()));
  }
  // distinct replicas diverge; no collisions across 100 streams
  const auto g = disorder_model::gaussian();
  std::set<std::vector<double>> seen;
  for (uint64_t r = 0; r < 100; ++r) seen.insert(g.sample(0xC0FFEE, r, 8).values);
  CHECK(seen.size() == 100);
}

TEST_CASE("gaussian sample moments at monte-carlo precision", "[disorder]") {
  const int64_t n = 1000000;
  const auto v = disorder_model::gaussian().sample(17, 0, n).values;
  kahan_sum sum, sumsq;
  for (double x : v) {
    sum.add(x);
    sumsq.add(x * x);
  }
  const double mean = sum.value() / n;
  const double var = sumsq.value() / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 0.01);
}

TEST_CASE("monte-carlo mgf estimate matches the closed form", "[disorder]") {
  const int64_t n = 1000000;
  const auto v = disorder_model::gaussian().sample(29, 1, n).values;
  for (double beta : {0.5, 1.0, 2.0}) {
    kahan_sum sum, sumsq;
    for (double x : v) {
      const double e = std::exp(beta * x);
      sum.add(e);
      sumsq.add(e * e);
    }
    const double mean = sum.value() / n;
    const double var = (sumsq.value() / n - mean * mean) * n / (n - 1.0);
    const double se_log = std::sqrt(var / n) / mean;  // delta method
    CHECK(std::abs(std::log(mean) - 0.5 * beta * beta) < 3.0 * se_log);
  }
}

TEST_CASE("bounded families have standardized moments", "[disorder]") {
  for (const auto& m : {disorder_model::rademacher(), disorder_model::uniform(),
                        disorder_model::shifted_bernoulli(0.25)}) {
    const int64_t n = 200000;
    const auto v = m.sample(99, 5, n).values;
    kahan_sum sum, sumsq;
    for (double x : v) {
      sum.add(x);
      sumsq.add(x * x);
    }
    const double mean = sum.value() / n;
    const double var = sumsq.value() / n - mean * mean;
    CHECK(std::abs(mean) < 5.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 0.03);
  }
  const auto d = disorder_model::degenerate().sample(1, 1, 50);
  for (double x : d.values) CHECK(x == 0.0);
}
