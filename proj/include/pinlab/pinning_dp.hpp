#pragma once

// Exact log-domain renewal dynamic programming for the pinned-polymer
// partition function. A path visits state 0 at renewal times; each visit
// at site n collects the log-weight w_n = beta (u + V_n); gaps between
// visits carry excursion masses p. Everything runs in log domain through
// streaming log-sum-exp, so weights of size e^{+-beta Delta N} never
// overflow. Complexity O(N^2) time, O(N) space.
//
// The free partition is reported relative to the zero-weight run of the
// same kernel: at w == 0 the partition is identically 1, and subtracting
// the kernel's own zero-weight output makes log Z == 0 hold bit-exactly
// in that case while shifting other values by well under 1e-12.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "pinlab/disorder.hpp"
#include "pinlab/errors.hpp"
#include "pinlab/excursion_law.hpp"
#include "pinlab/numerics.hpp"

namespace pinlab {

struct pinning_params {
  double beta = 1.0;
  double u = 0.0;
};

// w[n] = beta (u + V_n) for n = 1..N; w[0] is a placeholder.
inline std::vector<double> site_log_weights(const pinning_params& par,
                                            std::span<const double> v, int64_t n) {
  if (static_cast<int64_t>(v.size()) < n)
    throw invalid_spec("site_log_weights: disorder shorter than horizon");
  std::vector<double> w(static_cast<size_t>(n) + 1, 0.0);
  for (int64_t i = 1; i <= n; ++i)
    w[static_cast<size_t>(i)] = par.beta * (par.u + v[static_cast<size_t>(i - 1)]);
  return w;
}

namespace dp_detail {

inline void require_horizon(const excursion_law& law, int64_t n) {
  if (!law.finite_support() && n > law.n_max())
    throw horizon_exceeded("DP horizon exceeds the law's stored table");
}

// Log-mass lookup padded to the horizon; entries beyond a finite support
// are -inf, which the log-sum-exp stream skips.
inline std::vector<double> padded_log_mass(const excursion_law& law, int64_t n) {
  std::vector<double> lm(static_cast<size_t>(n) + 1, neg_inf);
  const int64_t stored = std::min(n, law.n_max());
  auto table = law.log_mass_table();
  for (int64_t j = 1; j <= stored; ++j) lm[static_cast<size_t>(j)] = table[static_cast<size_t>(j)];
  return lm;
}

inline std::vector<double> padded_log_tail(const excursion_law& law, int64_t n) {
  std::vector<double> lt(static_cast<size_t>(n) + 1, neg_inf);
  auto table = law.log_tail_table();
  const int64_t stored = std::min(n, law.n_max());
  for (int64_t j = 0; j <= stored; ++j) lt[static_cast<size_t>(j)] = table[static_cast<size_t>(j)];
  return lt;
}

}  // namespace dp_detail

// Forward pass: log zc[n] with zc[0] = 1 and
//   zc[n] = sum_{k<n} zc[k] p_{n-k} e^{w_n}.
// zc[n] is the partition over [0, n] constrained to a visit at n. Raw
// kernel output; no reference subtraction.
inline std::vector<double> renewal_log_zc(const excursion_law& law,
                                          std::span<const double> w) {
  const int64_t n_hor = static_cast<int64_t>(w.size()) - 1;
  dp_detail::require_horizon(law, n_hor);
  const auto lm = dp_detail::padded_log_mass(law, n_hor);
  std::vector<double> l(static_cast<size_t>(n_hor) + 1, 0.0);
  for (int64_t n = 1; n <= n_hor; ++n) {
    log_sum_stream acc;
    const double* lp = l.data();
    const double* mp = lm.data() + n;
    for (int64_t k = n - 1; k >= 0; --k) acc.add(lp[k] + mp[-k]);
    l[static_cast<size_t>(n)] = acc.value() + w[static_cast<size_t>(n)];
  }
  return l;
}

// Free-endpoint combination: log sum_k zc[k] tail(N - k), the partition
// whose last visit sits at k with the remaining stretch excursion-free.
inline double renewal_log_z_free(const excursion_law& law,
                                 std::span<const double> log_zc, int64_t n) {
  dp_detail::require_horizon(law, n);
  log_sum_stream acc;
  for (int64_t k = n; k >= 0; --k)
    acc.add(log_zc[static_cast<size_t>(k)] + law.log_tail(n - k));
  return acc.value();
}

// Backward pass: log zb[n], the free partition over [n, N] started from a
// visit at n whose own site weight is excluded:
//   zb[N] = 1,  zb[n] = tail(N-n) + sum_{m>n} p_{m-n} e^{w_m} zb[m].
inline std::vector<double> renewal_log_zb(const excursion_law& law,
                                          std::span<const double> w) {
  const int64_t n_hor = static_cast<int64_t>(w.size()) - 1;
  dp_detail::require_horizon(law, n_hor);
  const auto lm = dp_detail::padded_log_mass(law, n_hor);
  const auto lt = dp_detail::padded_log_tail(law, n_hor);
  std::vector<double> lb(static_cast<size_t>(n_hor) + 1, 0.0);
  for (int64_t n = n_hor - 1; n >= 0; --n) {
    log_sum_stream acc;
    for (int64_t m = n + 1; m <= n_hor; ++m)
      acc.add(lm[static_cast<size_t>(m - n)] + w[static_cast<size_t>(m)] + lb[static_cast<size_t>(m)]);
    acc.add(lt[static_cast<size_t>(n_hor - n)]);
    lb[static_cast<size_t>(n)] = acc.value();
  }
  return lb;
}

// Zero-weight free partition of the same kernel; the calibration
// reference for a given (law, horizon).
inline double neutral_log_z_free(const excursion_law& law, int64_t n) {
  if (n == 0) return 0.0;
  std::vector<double> w(static_cast<size_t>(n) + 1, 0.0);
  const auto zc0 = renewal_log_zc(law, w);
  return renewal_log_z_free(law, zc0, n);
}

// ---- public operations ----

// Constrained log-partition profile log zc[0..N] (raw kernel output).
inline std::vector<double> log_z_constrained(const excursion_law& law,
                                             const pinning_params& par,
                                             std::span<const double> v, int64_t n) {
  const auto w = site_log_weights(par, v, n);
  return renewal_log_zc(law, w);
}

// Free-endpoint log Z_N, reported relative to the zero-weight reference.
inline double log_z_free(const excursion_law& law, const pinning_params& par,
                         std::span<const double> v, int64_t n) {
  if (n == 0) return 0.0;
  const auto w = site_log_weights(par, v, n);
  const auto zc = renewal_log_zc(law, w);
  return renewal_log_z_free(law, zc, n) - neutral_log_z_free(law, n);
}

// Same, with a caller-supplied reference (harness loops amortize it).
inline double log_z_free(const excursion_law& law, const pinning_params& par,
                         std::span<const double> v, int64_t n, double neutral_ref) {
  if (n == 0) return 0.0;
  const auto w = site_log_weights(par, v, n);
  const auto zc = renewal_log_zc(law, w);
  return renewal_log_z_free(law, zc, n) - neutral_ref;
}

struct quenched_profile {
  std::vector<double> log_zc;        // raw forward values, [0..N]
  double log_z_free = 0.0;           // calibrated
  std::vector<double> contact_prob;  // P(x_n = 0), [0..N]; entry 0 is 1
  double mean_contact = 0.0;         // sum over sites 1..N divided by N
};

// Forward-backward contact probabilities: P(x_n = 0) = zc[n] zb[n] / Z.
// The ratio uses raw forward, backward and free values consistently, so
// the calibration shift cancels.
inline quenched_profile contact_profile(const excursion_law& law,
                                        const pinning_params& par,
                                        std::span<const double> v, int64_t n) {
  const auto w = site_log_weights(par, v, n);
  quenched_profile prof;
  prof.log_zc = renewal_log_zc(law, w);
  const auto lb = renewal_log_zb(law, w);
  const double raw_free = renewal_log_z_free(law, prof.log_zc, n);
  prof.log_z_free = raw_free - neutral_log_z_free(law, n);
  prof.contact_prob.assign(static_cast<size_t>(n) + 1, 0.0);
  prof.contact_prob[0] = 1.0;
  kahan_sum total;
  for (int64_t i = 1; i <= n; ++i) {
    double p = std::exp(prof.log_zc[static_cast<size_t>(i)] + lb[static_cast<size_t>(i)] - raw_free);
    if (p > 1.0) p = 1.0;  // trim sub-ulp excess
    prof.contact_prob[static_cast<size_t>(i)] = p;
    total.add(p);
  }
  prof.mean_contact = n > 0 ? total.value() / static_cast<double>(n) : 0.0;
  return prof;
}

// Exhaustive oracle: enumerate every visit set {0 < t_1 < ... <= N} in
// plain (long double) arithmetic. Shares nothing with the DP path.
inline double brute_force_log_z(const excursion_law& law, const pinning_params& par,
                                std::span<const double> v, int64_t n) {
  if (n > 20) throw too_large("brute_force_log_z: horizon capped at 20");
  if (n == 0) return 0.0;
  if (static_cast<int64_t>(v.size()) < n)
    throw invalid_spec("brute_force_log_z: disorder shorter than horizon");
  std::vector<long double> site_weight(static_cast<size_t>(n) + 1, 1.0L);
  for (int64_t i = 1; i <= n; ++i)
    site_weight[static_cast<size_t>(i)] =
        expl(static_cast<long double>(par.beta) * (par.u + v[static_cast<size_t>(i - 1)]));
  long double total = 0.0L;
  const uint64_t count = 1ull << n;
  for (uint64_t mask = 0; mask < count; ++mask) {
    long double wgt = 1.0L;
    int64_t prev = 0;
    for (int64_t t = 1; t <= n; ++t) {
      if (mask & (1ull << (t - 1))) {
        wgt *= static_cast<long double>(law.mass(t - prev)) * site_weight[static_cast<size_t>(t)];
        prev = t;
        if (wgt == 0.0L) break;
      }
    }
    if (wgt != 0.0L) total += wgt * static_cast<long double>(law.tail(n - prev));
  }
  return static_cast<double>(logl(total));
}

inline void dump_log_zc(std::ostream& os, std::span<const double> log_zc) {
  char buf[64];
  for (size_t i = 0; i < log_zc.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu %.17g\n", i, log_zc[i]);
    os << buf;
  }
}

}  // namespace pinlab
