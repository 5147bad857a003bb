#pragma once

// Normalized excursion-length laws p_n = n^{-c} phi(n) / Z with a stored
// table up to n_max and an analytic continuation beyond it. The chain is
// recurrent: masses plus the horizon tail always account for total mass 1.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pinlab/errors.hpp"
#include "pinlab/numerics.hpp"

namespace pinlab {

enum class phi_family { constant, log_power };

// Slowly varying prefactor phi. log_power means
//   phi(x) = k * log(x + s0)^{-alpha}.
// s0 > 0 keeps phi finite at x = 1; s0 = 0 is accepted for the idealized
// closed forms (psi etc.) but rejected by law construction.
struct phi_spec {
  phi_family family = phi_family::constant;
  double k = 1.0;
  double alpha = 0.0;
  double s0 = 0.0;

  static phi_spec constant(double k) {
    if (!(k > 0.0)) throw invalid_spec("phi constant: k must be positive");
    return {phi_family::constant, k, 0.0, 0.0};
  }
  static phi_spec log_power(double k, double alpha, double s0 = std::exp(1.0)) {
    if (!(k > 0.0) || !(alpha > 0.0) || !(s0 >= 0.0))
      throw invalid_spec("phi log_power: need k > 0, alpha > 0, s0 >= 0");
    return {phi_family::log_power, k, alpha, s0};
  }

  double operator()(double x) const {
    if (family == phi_family::constant) return k;
    return k * std::pow(std::log(x + s0), -alpha);
  }
  double log_value(double x) const {
    if (family == phi_family::constant) return std::log(k);
    return std::log(k) - alpha * std::log(std::log(x + s0));
  }
  // log phi at x = e^{log_x}; valid even when x overflows a double.
  double log_value_from_log(double log_x) const {
    if (family == phi_family::constant) return std::log(k);
    const double shift = log_x < 700.0 ? std::log1p(s0 * std::exp(-log_x)) : 0.0;
    return std::log(k) - alpha * std::log(log_x + shift);
  }
  // Is sum_n n^{-c} phi(n) finite?
  bool summable_with(double c) const {
    if (c > 1.0) return true;
    return family == phi_family::log_power && alpha > 1.0;
  }
};

// Psi(t) = \int_t^infty phi(e^s) ds. For log_power this is the exact
// k * g^{1-alpha}/(alpha-1) at g = log(e^t + s0) plus an exponentially
// small shift correction handled by quadrature.
inline double psi_integral(const phi_spec& phi, double t) {
  if (!(t > 0.0)) throw invalid_spec("psi_integral: t must be positive");
  if (phi.family == phi_family::constant)
    throw non_convergent("psi_integral diverges for constant phi");
  if (!(phi.alpha > 1.0))
    throw non_convergent("psi_integral diverges for log_power with alpha <= 1");
  const double a = phi.alpha, k = phi.k, s0 = phi.s0;
  const double g0 = t + (t < 700.0 ? std::log1p(s0 * std::exp(-t)) : 0.0);
  const double main = k * std::pow(g0, 1.0 - a) / (a - 1.0);
  if (s0 == 0.0 || g0 > 45.0) return main;  // correction < 1e-19 relative
  auto corr = [&](double g) {
    const double e = std::exp(-g);
    return std::pow(g, -a) * s0 * e / (1.0 - s0 * e);
  };
  const double c = k * integrate_adaptive(corr, g0, g0 + 60.0, 1e-16 * main + 1e-300, 32);
  return main + c;
}

class excursion_law {
 public:
  // Law with masses n^{-c} phi(n) / Z. The normalizer is a compensated
  // partial sum to n_cut = max(n_max, 1e6) plus the analytic integral of
  // the weight beyond n_cut (midpoint-corrected, so Z tracks the true
  // infinite sum to well below 1e-12).
  static excursion_law build(double c, const phi_spec& phi, int64_t n_max) {
    if (!(c >= 1.0)) throw invalid_spec("excursion_law: need c >= 1");
    if (n_max < 2) throw invalid_spec("excursion_law: need n_max >= 2");
    if (!(phi.k > 0.0)) throw invalid_spec("excursion_law: phi amplitude must be positive");
    if (phi.family == phi_family::log_power && !(phi.s0 > 0.0))
      throw invalid_spec("excursion_law: log_power law needs s0 > 0 so phi(1) is finite");
    if (!phi.summable_with(c))
      throw non_summable("excursion_law: sum n^{-c} phi(n) diverges for this spec");

    excursion_law law;
    law.c_ = c;
    law.phi_ = phi;
    law.n_max_ = n_max;
    law.finite_support_ = false;

    const int64_t n_cut = std::max<int64_t>(n_max, 1000000);
    kahan_sum partial;
    std::vector<double> w(static_cast<size_t>(n_max) + 1, 0.0);
    for (int64_t n = 1; n <= n_cut; ++n) {
      const double wn = law.raw_weight(static_cast<double>(n));
      partial.add(wn);
      if (n <= n_max) w[static_cast<size_t>(n)] = wn;
    }
    const double tail_int = law.weight_tail_integral(static_cast<double>(n_cut) + 0.5);
    law.z_ = partial.value() + tail_int;

    law.init_tables(w);
    return law;
  }

  // Law given by an explicit finite mass table. Must be normalized to 1
  // within 1e-12; the residual is absorbed into the last mass so the
  // stored table is exactly consistent (tail(n) = 0 at and past support).
  static excursion_law from_table(std::span<const double> masses) {
    if (masses.empty()) throw invalid_spec("table law: empty mass table");
    kahan_sum total;
    for (double p : masses) {
      if (!(p >= 0.0)) throw invalid_spec("table law: masses must be nonnegative");
      total.add(p);
    }
    if (std::abs(total.value() - 1.0) > 1e-12)
      throw invalid_spec("table law: masses must sum to 1 within 1e-12");

    excursion_law law;
    law.c_ = 0.0;
    law.n_max_ = static_cast<int64_t>(masses.size());
    law.finite_support_ = true;
    law.z_ = 1.0;
    std::vector<double> w(masses.size() + 1, 0.0);
    for (size_t i = 0; i < masses.size(); ++i) w[i + 1] = masses[i];
    law.init_tables(w);
    return law;
  }

  double c() const { return c_; }
  const phi_spec& phi() const { return phi_; }
  int64_t n_max() const { return n_max_; }
  double normalizer() const { return z_; }
  bool finite_support() const { return finite_support_; }
  std::string tail_model() const {
    if (finite_support_) return "zero";
    return phi_.family == phi_family::constant ? "analytic:power" : "analytic:log_power";
  }

  // The stored law is p_n = n^{-c} phi(n) / Z, i.e. a law of the canonical
  // form with slowly varying prefactor phi / Z. Asymptotic formulas stated
  // for exactly normalized laws should be fed this spec.
  phi_spec effective_phi() const {
    if (finite_support_) throw invalid_spec("effective_phi: table law has no phi");
    phi_spec p = phi_;
    p.k /= z_;
    return p;
  }

  double mass(int64_t n) const {
    if (n < 1) throw invalid_spec("mass: need n >= 1");
    if (n <= n_max_) return mass_[static_cast<size_t>(n)];
    if (finite_support_) return 0.0;
    return raw_weight(static_cast<double>(n)) / z_;
  }
  double log_mass(int64_t n) const {
    if (n < 1) throw invalid_spec("log_mass: need n >= 1");
    if (n <= n_max_) return log_mass_[static_cast<size_t>(n)];
    if (finite_support_) return neg_inf;
    return log_raw_weight(static_cast<double>(n)) - std::log(z_);
  }
  // P(E > n): exact stored complement up to n_max, analytic tail beyond.
  double tail(int64_t n) const {
    if (n < 0) throw invalid_spec("tail: need n >= 0");
    if (n <= n_max_) return tail_[static_cast<size_t>(n)];
    if (finite_support_) return 0.0;
    return weight_tail_integral(static_cast<double>(n) + 0.5) / z_;
  }
  double log_tail(int64_t n) const {
    if (n < 0) throw invalid_spec("log_tail: need n >= 0");
    if (n <= n_max_) return log_tail_[static_cast<size_t>(n)];
    if (finite_support_) return neg_inf;
    const double t = tail(n);
    return t > 0.0 ? std::log(t) : neg_inf;
  }

  std::span<const double> mass_table() const { return {mass_.data(), mass_.size()}; }
  std::span<const double> log_mass_table() const { return {log_mass_.data(), log_mass_.size()}; }
  std::span<const double> log_tail_table() const { return {log_tail_.data(), log_tail_.size()}; }

  // Plain-text dump "n p_n tail_n", 17 significant digits, one line per n.
  void dump(std::ostream& os) const {
    char buf[96];
    for (int64_t n = 1; n <= n_max_; ++n) {
      std::snprintf(buf, sizeof buf, "%lld %.17g %.17g\n",
                    static_cast<long long>(n), mass(n), tail(n));
      os << buf;
    }
  }

  // Raw (unnormalized) weight n^{-c} phi(n) and its analytic tail integral
  // \int_{x0}^infty x^{-c} phi(x) dx; both are the continuation model used
  // past the stored table.
  double raw_weight(double x) const {
    if (c_ == 1.0) return phi_(x) / x;
    return phi_(x) * std::pow(x, -c_);
  }
  double log_raw_weight(double x) const {
    return phi_.log_value(x) - c_ * std::log(x);
  }
  double weight_tail_integral(double x0) const {
    if (phi_.family == phi_family::constant) {
      // c > 1 is guaranteed by the summability check
      return phi_.k * std::pow(x0, 1.0 - c_) / (c_ - 1.0);
    }
    if (c_ == 1.0) return psi_integral(phi_, std::log(x0));
    // substitute x = e^t: integral of phi(e^t) e^{(1-c)t} dt
    const double t0 = std::log(x0);
    const double t1 = t0 + 70.0 / (c_ - 1.0);
    auto f = [&](double t) {
      return std::exp(phi_.log_value_from_log(t) + (1.0 - c_) * t);
    };
    const double scale = f(t0);
    return integrate_adaptive(f, t0, t1, 1e-13 * scale * (t1 - t0) + 1e-300, 32);
  }

 private:
  void init_tables(const std::vector<double>& w) {
    const size_t m = static_cast<size_t>(n_max_);
    mass_.assign(m + 1, 0.0);
    tail_.assign(m + 1, 0.0);
    log_mass_.assign(m + 1, neg_inf);
    log_tail_.assign(m + 1, neg_inf);
    tail_[0] = 1.0;
    log_tail_[0] = 0.0;
    double t_prev = 1.0;
    for (size_t n = 1; n <= m; ++n) {
      const double p_ideal = finite_support_ ? w[n] : w[n] / z_;
      double t = t_prev - p_ideal;
      if (finite_support_ && n == m) t = 0.0;  // absorb table rounding
      if (t < 0.0) t = 0.0;
      // Store the realized difference: tail(n-1) - tail(n) == mass(n) is
      // then an identity of the stored doubles, not just an approximation.
      mass_[n] = t_prev - t;
      tail_[n] = t;
      log_mass_[n] = mass_[n] > 0.0 ? std::log(mass_[n]) : neg_inf;
      log_tail_[n] = t > 0.0 ? std::log(t) : neg_inf;
      t_prev = t;
    }
  }

  double c_ = 1.0;
  phi_spec phi_{};
  int64_t n_max_ = 0;
  double z_ = 1.0;
  bool finite_support_ = false;
  std::vector<double> mass_, tail_, log_mass_, log_tail_;
};

// Named presets addressable from config files.
struct law_params {
  double k = 3.14159265358979323846;
  double alpha = 2.0;
  double s0 = 2.71828182845904523536;
  double c = 2.0;
  int64_t n_max = 20000;
  std::vector<double> masses;
};

inline excursion_law make_preset(const std::string& name, const law_params& p) {
  if (name == "srw2d") {
    // two-dimensional simple random walk: c = 1, phi ~ pi / log(n)^2
    return excursion_law::build(1.0, phi_spec::log_power(3.14159265358979323846, 2.0, p.s0), p.n_max);
  }
  if (name == "logpow")
    return excursion_law::build(1.0, phi_spec::log_power(p.k, p.alpha, p.s0), p.n_max);
  if (name == "power")
    return excursion_law::build(p.c, phi_spec::constant(p.k), p.n_max);
  if (name == "table")
    return excursion_law::from_table(p.masses);
  throw invalid_spec("unknown law preset: " + name);
}

}  // namespace pinlab
