#pragma once

// I.i.d. disorder families, standardized to mean 0 and variance 1, with
// closed-form log moment generating functions and reproducible sampling.
//
// Reproducibility contract: replica r of base seed S draws from an
// mt19937_64 engine seeded with replica_stream_seed(S, r) (numerics.hpp);
// all variate transforms below are explicit, so a (seed, replica, n)
// triple regenerates bit-identical values. The length-n sample is a
// prefix of the length-n' sample for n <= n'.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pinlab/errors.hpp"
#include "pinlab/numerics.hpp"

namespace pinlab {

enum class disorder_family { gaussian, rademacher, uniform, bernoulli, degenerate };

struct disorder_sample {
  std::vector<double> values;
  uint64_t seed = 0;
  uint64_t replica_index = 0;
};

class disorder_model {
 public:
  static disorder_model gaussian() { return disorder_model(disorder_family::gaussian, 0.5); }
  static disorder_model rademacher() { return disorder_model(disorder_family::rademacher, 0.5); }
  static disorder_model uniform() { return disorder_model(disorder_family::uniform, 0.5); }
  // Two-point law taking sqrt((1-p)/p) with probability p and
  // -sqrt(p/(1-p)) otherwise; mean 0, variance 1.
  static disorder_model shifted_bernoulli(double p) {
    if (!(p > 0.0) || !(p < 1.0)) throw invalid_spec("shifted_bernoulli: need 0 < p < 1");
    return disorder_model(disorder_family::bernoulli, p);
  }
  // V identically 0 (variance 0). Not a standardized family; it realizes
  // the zero-disorder model in which quenched and annealed weights agree,
  // which several exactness checks rely on.
  static disorder_model degenerate() { return disorder_model(disorder_family::degenerate, 0.5); }

  static disorder_model from_name(const std::string& name, double p = 0.5) {
    if (name == "gaussian") return gaussian();
    if (name == "rademacher") return rademacher();
    if (name == "uniform") return uniform();
    if (name == "bernoulli") return shifted_bernoulli(p);
    if (name == "degenerate") return degenerate();
    throw invalid_spec("unknown disorder family: " + name);
  }

  disorder_family family() const { return family_; }
  std::string name() const {
    switch (family_) {
      case disorder_family::gaussian: return "gaussian";
      case disorder_family::rademacher: return "rademacher";
      case disorder_family::uniform: return "uniform";
      case disorder_family::bernoulli: return "bernoulli";
      case disorder_family::degenerate: return "degenerate";
    }
    return "?";
  }

  // log E[exp(t V_1)], finite for all real t for every family here.
  double log_mgf(double t) const {
    switch (family_) {
      case disorder_family::gaussian:
        return 0.5 * t * t;
      case disorder_family::rademacher: {
        const double a = std::abs(t);  // log cosh t, overflow-safe
        return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
      }
      case disorder_family::uniform: {
        const double a = std::sqrt(3.0) * std::abs(t);  // log(sinh a / a)
        if (a < 1e-4) return a * a / 6.0 - a * a * a * a / 180.0;
        return a + std::log1p(-std::exp(-2.0 * a)) - std::log(2.0 * a);
      }
      case disorder_family::bernoulli: {
        const double b = std::sqrt((1.0 - p_) / p_);
        const double a = -std::sqrt(p_ / (1.0 - p_));
        return log_add(std::log(p_) + t * b, std::log1p(-p_) + t * a);
      }
      case disorder_family::degenerate:
        return 0.0;
    }
    return 0.0;
  }

  // log M(2b) - 2 log M(b); nonnegative by Cauchy-Schwarz.
  double lambda_v(double beta) const {
    return log_mgf(2.0 * beta) - 2.0 * log_mgf(beta);
  }

  disorder_sample sample(uint64_t seed, uint64_t replica_index, int64_t n) const {
    if (n < 1) throw invalid_spec("sample: need n >= 1");
    disorder_sample out;
    out.seed = seed;
    out.replica_index = replica_index;
    out.values.resize(static_cast<size_t>(n));
    std::mt19937_64 eng(replica_stream_seed(seed, replica_index));
    auto u01 = [&eng]() { return (eng() >> 11) * 0x1.0p-53; };  // [0, 1)
    switch (family_) {
      case disorder_family::gaussian: {
        // Box-Muller pairs; u1 is flipped into (0, 1] so log is safe.
        double cached = 0.0;
        bool have = false;
        for (auto& v : out.values) {
          if (have) {
            v = cached;
            have = false;
          } else {
            const double u1 = 1.0 - u01();
            const double u2 = u01();
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double a = 2.0 * 3.14159265358979323846 * u2;
            v = r * std::cos(a);
            cached = r * std::sin(a);
            have = true;
          }
        }
        break;
      }
      case disorder_family::rademacher:
        for (auto& v : out.values) v = u01() < 0.5 ? -1.0 : 1.0;
        break;
      case disorder_family::uniform:
        for (auto& v : out.values) v = (2.0 * u01() - 1.0) * std::sqrt(3.0);
        break;
      case disorder_family::bernoulli: {
        const double b = std::sqrt((1.0 - p_) / p_);
        const double a = -std::sqrt(p_ / (1.0 - p_));
        for (auto& v : out.values) v = u01() < p_ ? b : a;
        break;
      }
      case disorder_family::degenerate:
        for (auto& v : out.values) v = 0.0;
        break;
    }
    return out;
  }

 private:
  disorder_model(disorder_family f, double p) : family_(f), p_(p) {}
  disorder_family family_;
  double p_;
};

}  // namespace pinlab
