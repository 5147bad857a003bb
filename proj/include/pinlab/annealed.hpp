#pragma once

// Annealed-side quantities. Averaging the Gibbs weight over disorder turns
// the quenched model into a homogeneous one with effective per-visit
// log-weight beta*Delta, Delta = u + log M_V(beta) / beta. Its free energy
// solves the renewal fixed point
//   sum_n p_n e^{-s n} = e^{-beta Delta},   s = beta f_a,
// and the correlation length is M = 1/s. Near criticality M is far beyond
// double range, so the solver works in l = log s throughout and reports
// log M directly.

#include <cmath>
#include <cstdint>
#include <vector>

#include "pinlab/disorder.hpp"
#include "pinlab/errors.hpp"
#include "pinlab/excursion_law.hpp"
#include "pinlab/numerics.hpp"
#include "pinlab/pinning_dp.hpp"

namespace pinlab {

inline double u_c_annealed(const disorder_model& model, double beta) {
  if (!(beta > 0.0)) throw invalid_spec("u_c_annealed: need beta > 0");
  return -model.log_mgf(beta) / beta;
}

inline double delta_of(const pinning_params& par, const disorder_model& model) {
  if (!(par.beta > 0.0)) throw invalid_spec("delta_of: need beta > 0");
  return par.u + model.log_mgf(par.beta) / par.beta;
}

enum class annealed_method { trivial_zero, exact_sum, hybrid_integral };

inline const char* to_string(annealed_method m) {
  switch (m) {
    case annealed_method::trivial_zero: return "trivial_zero";
    case annealed_method::exact_sum: return "exact_sum";
    case annealed_method::hybrid_integral: return "hybrid_integral";
  }
  return "?";
}

struct annealed_solution {
  double beta_delta = 0.0;
  double s = 0.0;       // beta * f_a; may underflow to 0 when log_m is huge
  double m = pos_inf;   // 1/s; may overflow to +inf
  double log_m = pos_inf;
  double residual = 0.0;
  annealed_method method = annealed_method::trivial_zero;
};

namespace annealed_detail {

// Evaluator for G(s) = sum_n p_n e^{-sn} at s = e^l, and for the tilted
// first moment sum_n n p_n e^{-sn} (in log form). Masses up to n0 are an
// exact compensated sum; the remainder is the analytic weight integral
// with the e^{-s x} damping folded in, handled in t = log x coordinates.
struct laplace_transform {
  static constexpr int64_t n0_cap = 1000000;

  const excursion_law& law;
  int64_t n0;
  std::vector<double> mass;   // mass[n], n = 1..n0
  double prefix_mass;         // sum of mass[1..n0], compensated
  bool used_integral = false; // set by the last evaluation

  explicit laplace_transform(const excursion_law& l)
      : law(l), n0(l.finite_support() ? l.n_max() : std::max(l.n_max(), n0_cap)) {
    mass.assign(static_cast<size_t>(n0) + 1, 0.0);
    kahan_sum acc;
    for (int64_t n = 1; n <= n0; ++n) {
      mass[static_cast<size_t>(n)] = law.mass(n);
      acc.add(mass[static_cast<size_t>(n)]);
    }
    prefix_mass = acc.value();
  }

  // G(e^l)
  double operator()(double l) {
    used_integral = false;
    kahan_sum acc;
    bool truncated = false;
    if (l + std::log(static_cast<double>(n0)) < -37.0) {
      // every damping factor rounds to 1
      acc.add(prefix_mass);
    } else {
      const double s = std::exp(l);
      for (int64_t n = 1; n <= n0; ++n) {
        const double arg = s * static_cast<double>(n);
        if (arg > 45.0) { truncated = true; break; }
        acc.add(mass[static_cast<size_t>(n)] * std::exp(-arg));
      }
    }
    if (!truncated && !law.finite_support()) {
      acc.add(tail_integral(l));
      used_integral = true;
    }
    return acc.value();
  }

  // remainder integral over x > n0 + 1/2 of x^{-c} phi(x) e^{-s x} dx / Z
  double tail_integral(double l) const {
    const double t0 = std::log(static_cast<double>(n0) + 0.5);
    double t1 = std::max(t0, -l + 40.0);
    const double c = law.c();
    if (c > 1.0) t1 = std::min(t1, t0 + 80.0 / (c - 1.0));
    if (!(t1 > t0)) return 0.0;
    const auto& phi = law.phi();
    auto f = [&](double t) {
      const double damp = std::exp(l + t);  // s e^t; harmless overflow to inf
      const double expo = phi.log_value_from_log(t) + (1.0 - c) * t - damp;
      return expo > -745.0 ? std::exp(expo) : 0.0;
    };
    const double coarse = integrate_adaptive(f, t0, t1, 1e-6, 64, 24);
    const double eps = std::max(1e-18, 1e-13 * coarse);
    return integrate_adaptive(f, t0, t1, eps, 64) / law.normalizer();
  }

  // log( sum_n n p_n e^{-sn} ), hybrid like above but in log form since
  // the tilted moment blows past double range for tiny s.
  double log_first_moment(double l) const {
    kahan_sum acc;
    bool truncated = false;
    if (l + std::log(static_cast<double>(n0)) < -37.0) {
      for (int64_t n = 1; n <= n0; ++n)
        acc.add(static_cast<double>(n) * mass[static_cast<size_t>(n)]);
    } else {
      const double s = std::exp(l);
      for (int64_t n = 1; n <= n0; ++n) {
        const double arg = s * static_cast<double>(n);
        if (arg > 45.0) { truncated = true; break; }
        acc.add(static_cast<double>(n) * mass[static_cast<size_t>(n)] * std::exp(-arg));
      }
    }
    const double partial = acc.value();
    const double log_partial = partial > 0.0 ? std::log(partial) : neg_inf;
    if (truncated || law.finite_support()) return log_partial;

    const double t0 = std::log(static_cast<double>(n0) + 0.5);
    double t1 = std::max(t0 + 1.0, -l + 40.0);
    const double c = law.c();
    if (c > 2.0) t1 = std::min(t1, t0 + 80.0 / (c - 2.0));
    const auto& phi = law.phi();
    const double log_z = std::log(law.normalizer());
    auto g = [&](double t) {
      const double damp = std::exp(l + t);
      return phi.log_value_from_log(t) + (2.0 - c) * t - damp - log_z;
    };
    return log_add(log_partial, log_integral(g, t0, t1));
  }
};

}  // namespace annealed_detail

// Solve sum_n p_n e^{-sn} = e^{-beta Delta} for s > 0 by bisection in
// l = log s, bracket grown geometrically until the residual changes sign,
// then narrowed to 1e-14 (relative on s). The reported residual is the
// hybrid evaluation at the returned root.
inline annealed_solution solve_free_energy(const excursion_law& law, double beta_delta) {
  annealed_solution sol;
  sol.beta_delta = beta_delta;
  if (beta_delta <= 0.0) {
    sol.s = 0.0;
    sol.m = pos_inf;
    sol.log_m = pos_inf;
    sol.method = annealed_method::trivial_zero;
    sol.residual = 0.0;
    return sol;
  }

  annealed_detail::laplace_transform g(law);
  const double target = std::exp(-beta_delta);
  auto f = [&](double l) { return g(l) - target; };  // decreasing in l

  double hi = std::log(beta_delta) + 1.0;
  double lo = std::log(beta_delta) - 1.0;
  double f_hi = f(hi);
  double f_lo = f(lo);
  double step = 2.0;
  while (f_hi > 0.0) {  // s too small at hi: move up
    lo = hi; f_lo = f_hi;
    hi += step; step *= 2.0;
    f_hi = f(hi);
    if (hi > 800.0) throw non_convergent("solve_free_energy: no upper bracket");
  }
  step = 2.0;
  while (f_lo < 0.0) {  // s too large at lo: move down
    hi = lo; f_hi = f_lo;
    lo -= step; step *= 2.0;
    f_lo = f(lo);
    if (lo < -1.0e7) throw non_convergent("solve_free_energy: no lower bracket");
  }
  // f(lo) >= 0 >= f(hi)
  for (int it = 0; it < 400 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) >= 0.0) lo = mid; else hi = mid;
  }
  const double root = 0.5 * (lo + hi);
  const double resid = std::abs(f(root));
  if (!(resid < 1e-12))
    throw non_convergent("solve_free_energy: residual failed to reach 1e-12");

  sol.s = std::exp(root);
  sol.log_m = -root;
  sol.m = std::exp(sol.log_m);
  sol.residual = resid;
  sol.method = g.used_integral ? annealed_method::hybrid_integral
                               : annealed_method::exact_sum;
  return sol;
}

// log E[exp(beta Delta L_N)] through the quenched DP with constant site
// weights; byte-identical to the quenched path at zero disorder.
inline double annealed_log_z_dp(const excursion_law& law, double beta_delta, int64_t n) {
  if (n == 0) return 0.0;
  std::vector<double> w(static_cast<size_t>(n) + 1, beta_delta);
  w[0] = 0.0;
  const auto zc = renewal_log_zc(law, w);
  return renewal_log_z_free(law, zc, n) - neutral_log_z_free(law, n);
}

// Small-beta*Delta asymptotics of log M for phi(x) ~ k log(x)^{-alpha}:
//   log M ~ ((alpha - 1) beta Delta / k)^{-1/(alpha-1)}.
// Feed the law's effective_phi() when comparing against the solver.
inline double predict_log_m_asymptotic(const phi_spec& phi, double beta_delta) {
  if (phi.family != phi_family::log_power || !(phi.alpha > 1.0))
    throw invalid_spec("predict_log_m_asymptotic: needs log_power phi with alpha > 1");
  if (!(beta_delta > 0.0)) throw invalid_spec("predict_log_m_asymptotic: need beta Delta > 0");
  return std::pow((phi.alpha - 1.0) * beta_delta / phi.k, -1.0 / (phi.alpha - 1.0));
}

// Numeric inversion of beta Delta = Psi(t); the general-phi companion of
// the closed form above.
inline double invert_psi(const phi_spec& phi, double beta_delta) {
  if (!(beta_delta > 0.0)) throw invalid_spec("invert_psi: need beta Delta > 0");
  auto f = [&](double t) { return psi_integral(phi, t) - beta_delta; };  // decreasing
  double lo = 1e-6, hi = 1.0;
  while (f(hi) > 0.0) { lo = hi; hi *= 2.0; if (hi > 1e12) throw non_convergent("invert_psi"); }
  while (f(lo) < 0.0) { hi = lo; lo *= 0.5; if (lo < 1e-300) throw non_convergent("invert_psi"); }
  for (int it = 0; it < 200 && (hi - lo) > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) >= 0.0) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct annealed_contact {
  double value = 0.0;      // may underflow to 0 deep in the critical window
  double log_value = 0.0;  // always meaningful
};

// Contact fraction of the annealed model, d s / d(beta Delta) by implicit
// differentiation of the fixed point:
//   C_a = e^{-beta Delta} / sum_n n p_n e^{-s n}.
inline annealed_contact contact_fraction_annealed(const excursion_law& law, double beta_delta) {
  if (!(beta_delta > 0.0))
    throw invalid_spec("contact_fraction_annealed: need beta Delta > 0");
  const auto sol = solve_free_energy(law, beta_delta);
  annealed_detail::laplace_transform g(law);
  const double log_den = g.log_first_moment(-sol.log_m);
  annealed_contact out;
  out.log_value = -beta_delta - log_den;
  out.value = out.log_value > -745.0 ? std::exp(out.log_value) : 0.0;
  return out;
}

// log of the asymptotic proxy 1 / (M phi_eff(M)), evaluated from log M so
// it stays finite deep in the critical window.
inline double contact_proxy_log(const excursion_law& law, double log_m) {
  const phi_spec eff = law.effective_phi();
  return -log_m - eff.log_value_from_log(log_m);
}

}  // namespace pinlab
