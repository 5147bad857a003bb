#pragma once

// Shared numeric primitives: compensated summation, streaming log-sum-exp,
// adaptive quadrature and the seed mixer used for per-replica RNG streams.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace pinlab {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double pos_inf = std::numeric_limits<double>::infinity();

// Neumaier-compensated accumulator.
struct kahan_sum {
  double s = 0.0;
  double c = 0.0;
  void add(double x) {
    const double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

// Streaming log-sum-exp with a running maximum. Raw sums are never
// exponentiated; terms are folded in as exp(t - max). Terms more than
// |drop_below| under the current maximum are skipped; each skipped term
// contributes < 2.4e-16 of the running total, so the accumulated relative
// error stays below ~1e-11 even for 3e4-term sums.
struct log_sum_stream {
  static constexpr double drop_below = -36.0;
  double m = neg_inf;  // running max
  double s = 0.0;      // sum of exp(t - m)

  void add(double t) {
    if (t == neg_inf) return;
    if (m == neg_inf) {
      m = t;
      s = 1.0;
      return;
    }
    const double d = t - m;
    if (d <= 0.0) {
      if (d > drop_below) s += std::exp(d);
    } else {
      s = s * std::exp(-d) + 1.0;
      m = t;
    }
  }
  double value() const { return m == neg_inf ? neg_inf : m + std::log(s); }
};

// log(e^a + e^b)
inline double log_add(double a, double b) {
  if (a == neg_inf) return b;
  if (b == neg_inf) return a;
  const double m = a > b ? a : b;
  return m + std::log1p(std::exp(-(a > b ? a - b : b - a)));
}

namespace detail {

template <class F>
double simpson_panel(F& f, double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_simpson_rec(F& f, double a, double b, double eps, int depth,
                            double fa, double fm, double fb, double whole) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson_panel(f, a, m, fa, flm, fm);
  const double right = simpson_panel(f, m, b, fm, frm, fb);
  const double diff = std::abs(left + right - whole);
  if (diff <= 15.0 * eps || depth <= 0) {
    return left + right + (left + right - whole) / 15.0;  // Richardson
  }
  return adaptive_simpson_rec(f, a, m, 0.5 * eps, depth - 1, fa, flm, fm, left) +
         adaptive_simpson_rec(f, m, b, 0.5 * eps, depth - 1, fm, frm, fb, right);
}

}  // namespace detail

// Adaptive Simpson with an absolute tolerance. The interval is pre-split
// into equal panels so that long, far-from-polynomial integrands cannot
// fool the first error estimate.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double eps_abs,
                          int pre_split = 16, int max_depth = 48) {
  if (!(b > a)) return 0.0;
  if (pre_split < 1) pre_split = 1;
  const double h = (b - a) / pre_split;
  const double eps = eps_abs / pre_split;
  kahan_sum total;
  for (int i = 0; i < pre_split; ++i) {
    const double x0 = a + i * h;
    const double x1 = (i + 1 == pre_split) ? b : x0 + h;
    const double xm = 0.5 * (x0 + x1);
    double f0 = f(x0), fm = f(xm), f1 = f(x1);
    const double whole = detail::simpson_panel(f, x0, x1, f0, fm, f1);
    total.add(detail::adaptive_simpson_rec(f, x0, x1, eps, max_depth, f0, fm, f1, whole));
  }
  return total.value();
}

// log of \int_a^b exp(g(t)) dt for integrands whose exponent can be far
// outside double range. The exponent is scanned for its maximum, shifted,
// and the shifted integrand handled by adaptive Simpson.
template <class G>
double log_integral(G&& g, double a, double b, double rel_tol = 1e-12,
                    int scan_points = 1024) {
  if (!(b > a)) return neg_inf;
  double gmax = neg_inf;
  for (int i = 0; i <= scan_points; ++i) {
    const double t = a + (b - a) * i / scan_points;
    const double v = g(t);
    if (v > gmax) gmax = v;
  }
  if (gmax == neg_inf) return neg_inf;
  auto shifted = [&](double t) {
    const double v = g(t) - gmax;
    return v > -745.0 ? std::exp(v) : 0.0;
  };
  // coarse magnitude first, then an absolute tolerance relative to it
  const double coarse = integrate_adaptive(shifted, a, b, 1e-3, 64, 20);
  const double eps = std::max(1e-300, rel_tol * std::max(coarse, 1e-30));
  const double val = integrate_adaptive(shifted, a, b, eps, 64);
  if (!(val > 0.0)) return neg_inf;
  return gmax + std::log(val);
}

inline std::vector<double> log_spaced(double a, double b, int n) {
  std::vector<double> g(n);
  const double la = std::log(a), lb = std::log(b);
  for (int i = 0; i < n; ++i)
    g[i] = std::exp(la + (lb - la) * i / (n - 1));
  g.front() = a;  // pin endpoints against rounding
  g.back() = b;
  return g;
}

// SplitMix64 finalizer; the per-replica stream seed is
//   mix64(seed + 0x9E3779B97F4A7C15 * (replica_index + 1)).
// This mapping is part of the reproducibility contract and is frozen.
inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline uint64_t replica_stream_seed(uint64_t seed, uint64_t replica_index) {
  return mix64(seed + 0x9E3779B97F4A7C15ull * (replica_index + 1));
}

}  // namespace pinlab
