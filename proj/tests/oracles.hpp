#pragma once

// Reference values computed straight from the defining formulas with
// brute-force midpoint quadrature. Nothing here shares code with the
// library: integrals run in x (no substitution), transforms evaluate their
// defining integrals. Accuracy on sqrt-edge densities is ~C*(span/n)^{3/2},
// so n = 4e6 gives ~1e-9; tests compare at 1e-7.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

inline double midpoint(double lo, double hi, const std::function<double(double)>& f,
                       long n = 4'000'000) {
  const double h = (hi - lo) / static_cast<double>(n);
  double s = 0.0;
  for (long i = 0; i < n; ++i) s += f(lo + (static_cast<double>(i) + 0.5) * h);
  return s * h;
}

inline double mp_lambda_minus(double r) { return (1.0 - std::sqrt(r)) * (1.0 - std::sqrt(r)); }
inline double mp_lambda_plus(double r) { return (1.0 + std::sqrt(r)) * (1.0 + std::sqrt(r)); }
inline double mp_atom(double r) { return r > 1.0 ? 1.0 - 1.0 / r : 0.0; }

inline double mp_density(double r, double x) {
  const double lm = mp_lambda_minus(r), lp = mp_lambda_plus(r);
  if (x <= lm || x >= lp) return 0.0;
  return std::sqrt((x - lm) * (lp - x)) / (2.0 * 3.14159265358979323846 * x * r);
}

// int f dmuMP(r), atom included
inline double mp_integral(double r, const std::function<double(double)>& f,
                          long n = 4'000'000) {
  double s = mp_atom(r) * f(0.0);
  s += midpoint(mp_lambda_minus(r), mp_lambda_plus(r),
                [&](double x) { return f(x) * mp_density(r, x); }, n);
  return s;
}

// int rho_sc(y)/(y - z) dy over [-2, 2], rho_sc(y) = sqrt(4 - y^2)/(2 pi)
inline std::complex<double> semicircle_stieltjes(std::complex<double> z, long n = 4'000'000) {
  const double h = 4.0 / static_cast<double>(n);
  std::complex<double> s = 0.0;
  for (long i = 0; i < n; ++i) {
    const double y = -2.0 + (static_cast<double>(i) + 0.5) * h;
    s += std::sqrt(4.0 - y * y) / (2.0 * 3.14159265358979323846 * (y - z));
  }
  return s * h;
}

// bisection on a bracketing interval; used to cross-check library root-finders
inline double bisect(const std::function<double(double)>& g, double a, double b,
                     double tol = 1e-13) {
  double fa = g(a);
  for (int it = 0; it < 200 && b - a > tol; ++it) {
    const double m = 0.5 * (a + b), fm = g(m);
    if ((fa < 0.0) == (fm < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// two-sided KS statistic against a reference CDF, tie-aware: each distinct
// sample value is compared to F at the value and just below it, so empirical
// atoms line up with reference atoms instead of being counted as error
template <class F>
double ks_statistic(std::vector<double> samples, F&& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < samples.size();) {
    std::size_t j = i;
    while (j < samples.size() && samples[j] == samples[i]) ++j;
    const double v = samples[i];
    const double f_at = cdf(v);
    const double f_below = cdf(std::nextafter(v, -std::numeric_limits<double>::infinity()));
    ks = std::max({ks, std::abs(static_cast<double>(j) / n - f_at),
                   std::abs(static_cast<double>(i) / n - f_below)});
    i = j;
  }
  return ks;
}

} // namespace oracle
