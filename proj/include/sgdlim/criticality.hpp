#pragma once

// Phase-transition analytics for the Volterra dynamics.
//
// Thresholds for a measure mu and ratio r:
//   gamma0  = 2/(r m1),  m1 = int x dmu          (boundedness threshold)
//   gamma*  = 1/((r/2) int x^2/(x - l-) dmu)     (freezing threshold)
// For gamma in (gamma*, gamma0) the Malthusian exponent lambda*(gamma) is
// the unique root in [0, l-) of (r/2) int x^2/(x - lambda) dmu = 1/gamma.
// The decay envelope of psi - psi_inf is then:
//   gamma < gamma* : e^{-2 gamma l- t} * t^{-alpha}  (alpha = edge exponent)
//   gamma = gamma* : e^{-2 gamma l- t} * t^{-(alpha-1)}
//   gamma > gamma* : e^{-2 gamma lambda* t}
// with l- = 0 a separate convex regime. Closed forms and envelope constants
// are produced for Marchenko-Pastur only; general measures get regime,
// exponential rate and polynomial power.

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "sgdlim/spectral.hpp"

namespace sgdlim::criticality {

enum class Regime { subcritical, critical, supercritical, divergent, convex };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::subcritical: return "subcritical";
    case Regime::critical: return "critical";
    case Regime::supercritical: return "supercritical";
    case Regime::divergent: return "divergent";
    case Regime::convex: return "convex";
  }
  return "?";
}

// relative half-width of the band around gamma* classified as critical
inline constexpr double kGammaStarTol = 1e-9;

struct GammaStar {
  double value;
  // set when int x^2/(x - l-) dmu diverges: an atom sits on l-, or the
  // density's edge exponent is missing or <= 1 while l- > 0. value is 0
  // then: every stepsize below gamma0 carries a proper Malthusian rate.
  bool integral_diverges;
};

struct MPClosedFormParams {
  double rho;
  // signed; omega < 0 for gamma > 8/(1+r)^2, a threshold that sits at or
  // below gamma_star (they differ by (sqrt(r)-1)^4 >= 0), so sqrt(-omega)
  // is always real on the supercritical branch
  double omega;
  double gamma_star;
};

struct CriticalityReport {
  double gamma0;
  double gamma_star;
  bool gamma_star_diverges;
  double lambda_minus;
  double lambda_plus;
  Regime regime;
  std::optional<double> lambda_star; // supercritical root, or l- at critical
  double psi_inf;
  // envelope of psi - psi_inf: constant * e^{-exp_rate t} * t^{-poly_power};
  // constant only for Marchenko-Pastur inputs
  double exp_rate;
  double poly_power;
  std::optional<double> envelope_constant;
};

// 2/(r m1). A point mass at zero has m1 = 0 and never diverges; the
// infinite threshold is returned explicitly rather than thrown.
inline double gamma_max(const spectral::SpectralMeasure& mu, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("gamma_max: r must be > 0");
  const double m1 = spectral::moment(mu, 1);
  if (m1 <= 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 / (r * m1);
}

namespace detail {

// (r/2) int x^2/(x - lambda) dmu, the monotone map whose root is lambda*.
// The x^2 numerator removes the pole at x = 0, so lambda = 0 is always fine.
inline double malthusian_integral(const spectral::SpectralMeasure& mu, double r, double lambda) {
  return 0.5 * r * mu.integrate([lambda](double x) {
    return x == 0.0 ? 0.0 : x * x / (x - lambda);
  });
}

} // namespace detail

inline GammaStar gamma_star(const spectral::SpectralMeasure& mu, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("gamma_star: r must be > 0");
  if (spectral::moment(mu, 1) <= 0.0)
    return {std::numeric_limits<double>::infinity(), false};
  const double lm = mu.lambda_minus();
  if (lm > 0.0) {
    if (mu.has_atom_at(lm)) return {0.0, true};
    if (mu.has_density() && mu.support_lo() == lm) {
      const auto alpha = mu.edge_exponent();
      if (!alpha || *alpha <= 1.0) return {0.0, true};
    }
  }
  return {1.0 / detail::malthusian_integral(mu, r, lm), false};
}

inline double malthusian_lambda(const spectral::SpectralMeasure& mu, double r, double gamma) {
  const double g0 = gamma_max(mu, r);
  const GammaStar gs = gamma_star(mu, r);
  if (!(gamma > gs.value && gamma < g0))
    throw std::domain_error(
        "malthusian_lambda: gamma must lie in (gamma_star, gamma0); below gamma_star the "
        "rate freezes at lambda_minus");
  const double lm = mu.lambda_minus();
  const double target = 1.0 / gamma;
  double lo = 0.0, hi = lm * (1.0 - 1e-12);
  // map is increasing in lambda; at lo it equals 1/gamma0 < target. If even
  // the capped hi undershoots, the root is within 1e-12 lm of the edge and
  // hi is the answer to working precision.
  if (detail::malthusian_integral(mu, r, hi) - target <= 0.0) return hi;
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (detail::malthusian_integral(mu, r, mid) - target < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// psi_0(infinity) = (R_tilde/2)(r mu({0}) + (1-r))/(1 - (gamma r/2) m1);
// +inf flags gamma >= gamma0. The numerator is nonnegative whenever mu
// carries the rank-deficiency atom mu({0}) >= 1 - 1/r that the model
// guarantees; a smaller atom means (mu, r) are inconsistent.
inline double psi_infinity(const spectral::SpectralMeasure& mu, double R_tilde, double r,
                           double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("psi_infinity: gamma must be > 0");
  if (R_tilde < 0.0) throw std::invalid_argument("psi_infinity: R_tilde must be >= 0");
  const double g0 = gamma_max(mu, r);
  if (gamma >= g0) return std::numeric_limits<double>::infinity();
  double num = r * mu.atom_zero_mass() + (1.0 - r);
  if (num < -1e-12)
    throw std::invalid_argument(
        "psi_infinity: mu({0}) < 1 - 1/r, measure inconsistent with the ratio r");
  if (num < 0.0) num = 0.0;
  return 0.5 * R_tilde * num / (1.0 - 0.5 * gamma * r * spectral::moment(mu, 1));
}

namespace detail {

inline MPClosedFormParams mp_params_unchecked(double r, double gamma) {
  const double u = 1.0 - 0.5 * r * gamma;
  const double sr = std::sqrt(r);
  MPClosedFormParams p;
  p.rho = 0.5 * (1.0 + r) * u;
  p.omega = 0.25 * u * u * (8.0 / gamma - (1.0 + r) * (1.0 + r));
  p.gamma_star = 2.0 / (sr * (r - sr + 1.0));
  return p;
}

} // namespace detail

inline MPClosedFormParams mp_constants(double r, double gamma) {
  if (!(r > 0.0)) throw std::invalid_argument("mp_constants: r must be > 0");
  if (!(gamma > 0.0 && gamma < 2.0 / r))
    throw std::invalid_argument("mp_constants: stepsize must lie in (0, 2/r)");
  return detail::mp_params_unchecked(r, gamma);
}

// Exact psi_0(t) for Marchenko-Pastur input. Both stepsize branches; the
// supercritical branch adds the jamming terms e^{-2 gamma (rho+sqrt|omega|) t}.
// gamma inside the relative kGammaStarTol band of gamma* evaluates the
// gamma <= gamma* branch, which is the continuous limit of both. The domain
// is all gamma > 0 except 2/r itself: past gamma0 the jamming exponent
// rho + sqrt|omega| is negative and the expression grows, tracking the
// divergent Volterra solution, while at exactly 2/r the partial-fraction
// denominator rho^2 + omega collapses to zero.
inline double mp_closed_form(const spectral::SpectralMeasure& mu, double r, double gamma, double R,
                             double R_tilde, double t) {
  if (!mu.mp_ratio() || std::abs(*mu.mp_ratio() - r) > 1e-12 * std::max(1.0, r))
    throw std::invalid_argument("mp_closed_form: mu is not the MP measure for this r");
  if (t < 0.0) throw std::invalid_argument("mp_closed_form: t must be >= 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("mp_closed_form: gamma must be > 0");
  const double u = 1.0 - 0.5 * r * gamma;
  if (u == 0.0)
    throw std::invalid_argument("mp_closed_form: gamma = 2/r is a singular point");
  const MPClosedFormParams p = detail::mp_params_unchecked(r, gamma);
  const double rho = p.rho, omega = p.omega;
  const double po = rho * rho + omega; // equals (2/gamma) u^2 > 0
  const double a = 2.0 * gamma * t;

  const double i1 = mu.integrate([&](double x) {
    return x * std::exp(-a * x) / ((x - rho) * (x - rho) + omega);
  });
  const double i2 = mu.integrate([&](double x) {
    return (-r * x + (2.0 * r / gamma) * u) * std::exp(-a * x) /
           ((x - rho) * (x - rho) + omega);
  });

  double psi = R * (u / gamma) * i1 + 0.5 * R_tilde * ((2.0 / gamma) * (1.0 - r) * u / po + i2);

  if (gamma > p.gamma_star * (1.0 + kGammaStarTol)) {
    // the pole is rho + s with s signed like u: +sqrt|omega| on (gamma*,
    // gamma0) where lambda* in (0, lambda_minus), -sqrt|omega| past gamma0
    // where the root goes negative and the term grows. Both roots solve the
    // rationalized quadratic; only this branch solves the renewal equation
    // (r/2) int x^2/(x - lambda) dmu = 1/gamma, and only its residue closes
    // the t = 0 identity psi(0) = R/2 + R_tilde/2.
    const double s = u > 0.0 ? std::sqrt(-omega) : -std::sqrt(-omega);
    const double lam = rho + s;
    const double cR =
        (1.0 / (4.0 * s)) * (lam - (4.0 / (gamma * gamma)) * u * u * (rho - s) / (r * po));
    const double cT = ((-2.0 * s) * r * ((2.0 / gamma) * u - lam) / (4.0 * omega * lam)) *
                      (lam / ((2.0 / gamma) * u) - (2.0 / gamma) * (rho - s) * u / (r * po));
    psi += std::exp(-2.0 * gamma * lam * t) * (R * cR + 0.5 * R_tilde * cT);
  }
  return psi;
}

// convenience overload constructing the measure; prefer the overload above
// inside loops over t
inline double mp_closed_form(double r, double gamma, double R, double R_tilde, double t) {
  const auto mu = spectral::mp_measure(r);
  return mp_closed_form(mu, r, gamma, R, R_tilde, t);
}

inline CriticalityReport asymptotic_rate(const spectral::SpectralMeasure& mu, double r,
                                         double gamma, double R, double R_tilde) {
  if (!(gamma > 0.0)) throw std::invalid_argument("asymptotic_rate: gamma must be > 0");
  CriticalityReport rep;
  rep.gamma0 = gamma_max(mu, r);
  const GammaStar gs = gamma_star(mu, r);
  rep.gamma_star = gs.value;
  rep.gamma_star_diverges = gs.integral_diverges;
  rep.lambda_minus = mu.lambda_minus();
  rep.lambda_plus = mu.lambda_plus();
  rep.psi_inf = psi_infinity(mu, R_tilde, r, gamma);
  rep.exp_rate = 0.0;
  rep.poly_power = 0.0;

  const bool is_mp = mu.mp_ratio() && std::abs(*mu.mp_ratio() - r) <= 1e-12 * std::max(1.0, r);

  if (gamma >= rep.gamma0) {
    rep.regime = Regime::divergent;
    return rep;
  }

  if (rep.lambda_minus == 0.0) {
    // support reaches zero: no spectral gap, sublinear decay. Constants per
    // the MP r=1 formula; the reported power is the slowest surviving term.
    rep.regime = Regime::convex;
    rep.poly_power = R_tilde > 0.0 ? 0.5 : 1.5;
    if (is_mp) {
      const MPClosedFormParams p = mp_constants(r, gamma);
      const double u = 1.0 - 0.5 * r * gamma;
      const double pref = (1.0 / std::pow(gamma, 1.5)) * u *
                          (std::sqrt(rep.lambda_plus) / (2.0 * std::sqrt(2.0 * spectral::kPi))) /
                          (p.rho * p.rho + p.omega);
      rep.envelope_constant =
          R_tilde > 0.0 ? pref * R_tilde * r : pref * R / (4.0 * gamma);
    }
    return rep;
  }

  const double lm = rep.lambda_minus;
  const double alpha = mu.edge_exponent().value_or(1.5);

  if (gamma < gs.value * (1.0 - kGammaStarTol)) {
    rep.regime = Regime::subcritical;
    rep.exp_rate = 2.0 * gamma * lm;
    rep.poly_power = alpha;
  } else if (gamma <= gs.value * (1.0 + kGammaStarTol)) {
    rep.regime = Regime::critical;
    rep.exp_rate = 2.0 * gamma * lm;
    rep.poly_power = alpha - 1.0;
    rep.lambda_star = lm;
  } else {
    rep.regime = Regime::supercritical;
    const double ls = malthusian_lambda(mu, r, gamma);
    rep.lambda_star = ls;
    rep.exp_rate = 2.0 * gamma * ls;
    rep.poly_power = 0.0;
  }

  if (is_mp) {
    const MPClosedFormParams p = mp_constants(r, gamma);
    const double u = 1.0 - 0.5 * r * gamma;
    const double rho = p.rho, omega = p.omega;
    const double lp = rep.lambda_plus;
    const double sq2pi = std::sqrt(2.0 * spectral::kPi);
    if (rep.regime == Regime::subcritical) {
      rep.envelope_constant =
          (1.0 / (8.0 * sq2pi * r)) *
          (std::sqrt(lp - lm) / (std::pow(gamma, 1.5) * ((lm - rho) * (lm - rho) + omega))) *
          (R * u / gamma + 0.5 * R_tilde * ((2.0 * r / (gamma * lm)) * u - r));
    } else if (rep.regime == Regime::critical) {
      // the critical bracket carries R_tilde unhalved, unlike its
      // subcritical counterpart
      const double r2 = 2.0 * std::sqrt(std::abs(omega)) / (lp - lm);
      rep.envelope_constant = (1.0 / (2.0 * sq2pi * r)) *
                              (1.0 / (std::sqrt(gamma) * r2 * std::sqrt(lp - lm))) *
                              (R * u / gamma + R_tilde * ((2.0 * r / (gamma * lm)) * u - r));
    } else {
      const double s = std::sqrt(-omega);
      const double lam = rho + s;
      const double po = rho * rho + omega;
      const double cR =
          (1.0 / (4.0 * s)) * (lam - (4.0 / (gamma * gamma)) * u * u * (rho - s) / (r * po));
      const double cT = ((-2.0 * s) * r * ((2.0 / gamma) * u - lam) / (4.0 * omega * lam)) *
                        (lam / ((2.0 / gamma) * u) - (2.0 / gamma) * (rho - s) * u / (r * po));
      rep.envelope_constant = R * cR + 0.5 * R_tilde * cT;
    }
  }
  return rep;
}

inline std::string report_kv(const CriticalityReport& rep) {
  char buf[768];
  int k = std::snprintf(
      buf, sizeof buf,
      "gamma0=%.17g\ngamma_star=%.17g\ngamma_star_diverges=%d\nlambda_minus=%.17g\n"
      "lambda_plus=%.17g\nregime=%s\npsi_inf=%.17g\nexp_rate=%.17g\npoly_power=%.17g\n",
      rep.gamma0, rep.gamma_star, rep.gamma_star_diverges ? 1 : 0, rep.lambda_minus,
      rep.lambda_plus, regime_name(rep.regime), rep.psi_inf, rep.exp_rate, rep.poly_power);
  std::string out(buf, k);
  if (rep.lambda_star) {
    k = std::snprintf(buf, sizeof buf, "lambda_star=%.17g\n", *rep.lambda_star);
    out.append(buf, k);
  }
  if (rep.envelope_constant) {
    k = std::snprintf(buf, sizeof buf, "envelope_constant=%.17g\n", *rep.envelope_constant);
    out.append(buf, k);
  }
  return out;
}

inline std::string report_csv_header() {
  return "gamma0,gamma_star,gamma_star_diverges,lambda_minus,lambda_plus,regime,"
         "lambda_star,psi_inf,exp_rate,poly_power,envelope_constant";
}

inline std::string report_csv_row(const CriticalityReport& rep) {
  char buf[768];
  int k = std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%.17g,%.17g,%s,", rep.gamma0,
                        rep.gamma_star, rep.gamma_star_diverges ? 1 : 0, rep.lambda_minus,
                        rep.lambda_plus, regime_name(rep.regime));
  std::string out(buf, k);
  if (rep.lambda_star) {
    k = std::snprintf(buf, sizeof buf, "%.17g", *rep.lambda_star);
    out.append(buf, k);
  }
  k = std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,", rep.psi_inf, rep.exp_rate,
                    rep.poly_power);
  out.append(buf, k);
  if (rep.envelope_constant) {
    k = std::snprintf(buf, sizeof buf, "%.17g", *rep.envelope_constant);
    out.append(buf, k);
  }
  return out;
}

} // namespace sgdlim::criticality
