#pragma once

// Limiting spectral measures and their transforms.
//
// A SpectralMeasure is a probability measure on [0, inf):
//
//     mu = m0 * delta_0  +  sum_i m_i * delta_{x_i}  +  rho(x) dx on [lo, hi]
//
// The continuous part is integrated with Chebyshev-Gauss nodes after the
// substitution x = c + h*cos(theta), c = (lo+hi)/2, h = (hi-lo)/2. For
// sqrt-edge densities (Marchenko-Pastur) the theta-integrand extends evenly
// and smoothly across both endpoints, so the midpoint rule in theta is
// spectrally accurate; the same substitution absorbs the integrable
// x^{-1/2}-type singularity of integrands like x^2/(x - lambda_minus).
//
// Transforms:
//   moment(mu, k)        = int x^k dmu
//   h_k(mu, k, gamma, t) = int x^k exp(-2 gamma t x) dmu
//   stieltjes_m(z)       = semicircle Stieltjes transform, branch in the
//                          closed unit disk, m(z) + 1/m(z) = -z
//   mp_resolvent_integral(r, p) = int x/(x+p) dmuMP = m(q)/sqrt(r),
//                          q = -(p+1+r)/sqrt(r)
//
// Atoms are always integrated exactly, never sampled. All types are
// immutable after construction and safe to share across threads.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgdlim::spectral {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// Left-edge exponent conventions for Marchenko-Pastur: mu((l-, l-+t]) ~ t^a
// gives a = 3/2; the convex r=1 analysis instead measures the density
// x^{-1/2} blow-up at zero, a = 1/2. Both are consumed by `criticality`.
inline constexpr double mp_edge_exponent = 1.5;
inline constexpr double mp_convex_edge_exponent = 0.5;

struct Atom {
  double location;
  double mass;
};

struct MarchenkoPasturParams {
  double r;
  double lambda_minus;
  double lambda_plus;
  double atom_zero_mass;

  explicit MarchenkoPasturParams(double ratio) : r(ratio) {
    if (!(r > 0.0)) throw std::invalid_argument("MarchenkoPasturParams: r must be > 0");
    const double sr = std::sqrt(r);
    lambda_minus = (1.0 - sr) * (1.0 - sr);
    lambda_plus = (1.0 + sr) * (1.0 + sr);
    atom_zero_mass = std::max(1.0 - 1.0 / r, 0.0);
  }
};

class SpectralMeasure {
public:
  static SpectralMeasure from_atoms(double atom_zero_mass, std::vector<Atom> atoms) {
    SpectralMeasure mu;
    mu.atom_zero_mass_ = atom_zero_mass;
    mu.atoms_ = std::move(atoms);
    mu.validate_atoms();
    mu.build_support_points();
    return mu;
  }

  static SpectralMeasure point_mass(double location) {
    if (location == 0.0) return from_atoms(1.0, {});
    return from_atoms(0.0, {{location, 1.0}});
  }

  // rho is the density on [lo, hi]; edge_exponent is the a of
  // mu((lo, lo+t]) ~ t^a, needed before gamma_star may trust its quadrature.
  // The theta rule is spectrally accurate for sqrt-edge densities but only
  // second order when rho does not vanish at an endpoint, hence the large
  // default node count; it keeps the mass invariant within 1e-8 for bounded
  // densities. Total mass must come out as 1 within 1e-3 or the input is
  // rejected as not a probability measure.
  static SpectralMeasure from_density(double lo, double hi, std::function<double(double)> rho,
                                      std::optional<double> edge_exponent,
                                      double atom_zero_mass = 0.0, std::vector<Atom> atoms = {},
                                      int nodes = 16384) {
    if (!(lo >= 0.0) || !(hi > lo)) throw std::invalid_argument("SpectralMeasure: bad support");
    if (nodes < 8) throw std::invalid_argument("SpectralMeasure: too few quadrature nodes");
    SpectralMeasure mu;
    mu.atom_zero_mass_ = atom_zero_mass;
    mu.atoms_ = std::move(atoms);
    mu.validate_atoms();
    mu.support_lo_ = lo;
    mu.support_hi_ = hi;
    mu.density_ = std::move(rho);
    mu.edge_exponent_ = edge_exponent;
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    mu.nodes_x_.resize(nodes);
    mu.nodes_w_.resize(nodes);
    for (int j = 0; j < nodes; ++j) {
      const double theta = (j + 0.5) * kPi / nodes;
      const double x = c + h * std::cos(theta);
      const double w = (kPi / nodes) * h * std::sin(theta) * mu.density_(x);
      if (w < 0.0) throw std::invalid_argument("SpectralMeasure: negative density");
      mu.nodes_x_[j] = x;
      mu.nodes_w_[j] = w;
    }
    mu.build_cdf_table();
    mu.build_support_points();
    double mass = mu.atom_zero_mass_;
    for (const Atom& a : mu.atoms_) mass += a.mass;
    for (double w : mu.nodes_w_) mass += w;
    if (std::abs(mass - 1.0) > 1e-3)
      throw std::invalid_argument("SpectralMeasure: total mass " + std::to_string(mass) +
                                  " is not 1; not a probability measure");
    return mu;
  }

  bool has_density() const { return static_cast<bool>(density_); }
  double density_at(double x) const { return density_(x); }
  double atom_zero_mass() const { return atom_zero_mass_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  double support_lo() const { return support_lo_; }
  double support_hi() const { return support_hi_; }
  std::optional<double> edge_exponent() const { return edge_exponent_; }
  std::optional<double> mp_ratio() const { return mp_ratio_; }

  // leftmost point of supp(mu) restricted to (0, inf); 0 when the continuous
  // support touches zero, +inf for delta_0
  double lambda_minus() const {
    double lm = std::numeric_limits<double>::infinity();
    if (has_density()) lm = support_lo_;
    for (const Atom& a : atoms_)
      if (a.location > 0.0) lm = std::min(lm, a.location);
    return lm;
  }

  double lambda_plus() const {
    double lp = 0.0;
    if (has_density()) lp = support_hi_;
    for (const Atom& a : atoms_) lp = std::max(lp, a.location);
    return lp;
  }

  bool is_point_mass_at_zero() const {
    return !has_density() && atoms_.empty();
  }

  // does mu place an atom exactly on lambda_minus? (makes x^2/(x-l-) diverge)
  bool has_atom_at(double x) const {
    for (const Atom& a : atoms_)
      if (a.location == x) return true;
    return false;
  }

  // all support points with weights: atom at zero, atoms, quadrature nodes
  const std::vector<double>& q_loc() const { return q_loc_; }
  const std::vector<double>& q_w() const { return q_w_; }

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < q_loc_.size(); ++i) s += q_w_[i] * f(q_loc_[i]);
    return s;
  }

  // mu([0, x]); continuous part from the cached theta-cumulative table
  double cdf(double x) const {
    if (x < 0.0) return 0.0;
    double s = atom_zero_mass_;
    for (const Atom& a : atoms_)
      if (a.location <= x) s += a.mass;
    if (has_density() && x > support_lo_) s += cdf_continuous(x);
    return s;
  }

private:
  friend SpectralMeasure mp_measure(double, int);

  void validate_atoms() const {
    if (atom_zero_mass_ < 0.0 || atom_zero_mass_ > 1.0)
      throw std::invalid_argument("SpectralMeasure: atom_zero_mass outside [0,1]");
    for (const Atom& a : atoms_) {
      if (a.location < 0.0) throw std::invalid_argument("SpectralMeasure: atom location < 0");
      if (!(a.mass > 0.0)) throw std::invalid_argument("SpectralMeasure: atom mass must be > 0");
    }
  }

  void build_support_points() {
    q_loc_.clear();
    q_w_.clear();
    if (atom_zero_mass_ > 0.0) {
      q_loc_.push_back(0.0);
      q_w_.push_back(atom_zero_mass_);
    }
    for (const Atom& a : atoms_) {
      q_loc_.push_back(a.location);
      q_w_.push_back(a.mass);
    }
    q_loc_.insert(q_loc_.end(), nodes_x_.begin(), nodes_x_.end());
    q_w_.insert(q_w_.end(), nodes_w_.begin(), nodes_w_.end());
  }

  void build_cdf_table() {
    const int m = 4096;
    const double c = 0.5 * (support_lo_ + support_hi_), h = 0.5 * (support_hi_ - support_lo_);
    cdf_cum_.assign(m + 1, 0.0);
    const double dtheta = kPi / m;
    // cdf_cum_[j] = mu_cont([lo, x(pi - j*dtheta)])
    for (int j = 0; j < m; ++j) {
      const double theta = kPi - (j + 0.5) * dtheta;
      const double x = c + h * std::cos(theta);
      cdf_cum_[j + 1] = cdf_cum_[j] + density_(x) * h * std::sin(theta) * dtheta;
    }
  }

  double cdf_continuous(double x) const {
    if (x >= support_hi_) return cdf_cum_.back();
    const double c = 0.5 * (support_lo_ + support_hi_), h = 0.5 * (support_hi_ - support_lo_);
    const double u = std::clamp((x - c) / h, -1.0, 1.0);
    const double pos = (kPi - std::acos(u)) * (cdf_cum_.size() - 1) / kPi;
    const int j = std::clamp(static_cast<int>(pos), 0, static_cast<int>(cdf_cum_.size()) - 2);
    return cdf_cum_[j] + (pos - j) * (cdf_cum_[j + 1] - cdf_cum_[j]);
  }

  double atom_zero_mass_ = 0.0;
  std::vector<Atom> atoms_;
  double support_lo_ = 0.0;
  double support_hi_ = 0.0;
  std::function<double(double)> density_;
  std::optional<double> edge_exponent_;
  std::optional<double> mp_ratio_;
  std::vector<double> nodes_x_, nodes_w_;
  std::vector<double> q_loc_, q_w_;
  std::vector<double> cdf_cum_;
};

// Marchenko-Pastur with ratio r = d/n: density
// sqrt((x - l-)(l+ - x)) / (2 pi x r) on [l-, l+], atom max{1 - 1/r, 0} at 0.
// Node weights use h*sin(theta) for the sqrt factor analytically, which
// avoids endpoint cancellation. 512 nodes resolve every moment and h_k to
// near machine precision for r bounded away from 1 (and exactly at r = 1,
// where the 1/x pole cancels against the edge); raise `nodes` for r within
// ~1% of 1 if h_0 accuracy below 1e-8 matters.
inline SpectralMeasure mp_measure(double r, int nodes = 512) {
  const MarchenkoPasturParams p(r);
  SpectralMeasure mu;
  mu.atom_zero_mass_ = p.atom_zero_mass;
  mu.support_lo_ = p.lambda_minus;
  mu.support_hi_ = p.lambda_plus;
  // r = 1 touches zero with a x^{-1/2} density, so mu((0,t]) ~ t^{1/2}
  mu.edge_exponent_ = (r == 1.0) ? mp_convex_edge_exponent : mp_edge_exponent;
  mu.mp_ratio_ = r;
  const double lm = p.lambda_minus, lp = p.lambda_plus;
  mu.density_ = [lm, lp, r](double x) {
    if (x <= lm || x >= lp) return 0.0;
    return std::sqrt((x - lm) * (lp - x)) / (2.0 * kPi * x * r);
  };
  const double c = 0.5 * (lm + lp), h = 0.5 * (lp - lm);
  mu.nodes_x_.resize(nodes);
  mu.nodes_w_.resize(nodes);
  for (int j = 0; j < nodes; ++j) {
    const double theta = (j + 0.5) * kPi / nodes;
    const double s = std::sin(theta);
    const double x = c + h * std::cos(theta);
    mu.nodes_x_[j] = x;
    mu.nodes_w_[j] = h * h * s * s / (2.0 * nodes * x * r);
  }
  mu.build_cdf_table();
  mu.build_support_points();
  return mu;
}

inline double moment(const SpectralMeasure& mu, int k) {
  if (k < 0) throw std::invalid_argument("moment: k must be >= 0");
  return mu.integrate([k](double x) {
    double p = 1.0;
    for (int i = 0; i < k; ++i) p *= x;
    return p;
  });
}

inline double h_k(const SpectralMeasure& mu, int k, double gamma, double t) {
  if (k < 0) throw std::invalid_argument("h_k: k must be >= 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("h_k: gamma must be > 0");
  if (t < 0.0) throw std::invalid_argument("h_k: t must be >= 0");
  const double a = 2.0 * gamma * t;
  return mu.integrate([k, a](double x) {
    double p = std::exp(-a * x);
    for (int i = 0; i < k; ++i) p *= x;
    return p;
  });
}

// Semicircle Stieltjes transform m(z) = int dmu_sc(y)/(y - z), z off [-2, 2].
// m(z) = (-z + s)/2 with s^2 = z^2 - 4 and the branch s ~ z at infinity,
// which lands m in the closed unit disk.
inline std::complex<double> stieltjes_m(std::complex<double> z) {
  if (z.imag() == 0.0 && std::abs(z.real()) <= 2.0)
    throw std::domain_error("stieltjes_m: z on the branch cut [-2, 2]");
  std::complex<double> s = std::sqrt(z * z - 4.0);
  if ((s * std::conj(z)).real() < 0.0) s = -s;
  return 0.5 * (-z + s);
}

// int x/(x + p) dmuMP(x) = m(q)/sqrt(r), q = -(p + 1 + r)/sqrt(r).
// Requires -p off the support of MP(r) (including the atom at 0 when r > 1).
inline std::complex<double> mp_resolvent_integral(double r, std::complex<double> p) {
  const MarchenkoPasturParams mp(r);
  if (p.imag() == 0.0) {
    const double x = -p.real();
    if (x >= mp.lambda_minus && x <= mp.lambda_plus)
      throw std::domain_error("mp_resolvent_integral: -p inside the MP support");
    if (mp.atom_zero_mass > 0.0 && x == 0.0)
      throw std::domain_error("mp_resolvent_integral: -p on the atom at zero");
  }
  const double sr = std::sqrt(r);
  const std::complex<double> q = -(p + 1.0 + r) / sr;
  return stieltjes_m(q) / sr;
}

// ESM: mass 1/d per eigenvalue. Entries in [-1e-10, 1e-10] snap to the atom
// at zero (zero modes of a Gram matrix surface as +-1e-13 and must not land
// an epsilon past the atom, where a KS comparison would see half the atom
// mass as error); entries below -1e-10 are rejected.
inline SpectralMeasure esm_from_eigenvalues(std::vector<double> eigs) {
  if (eigs.empty()) throw std::invalid_argument("esm_from_eigenvalues: empty eigenvalue list");
  for (double& e : eigs) {
    if (e < -1e-10) throw std::invalid_argument("esm_from_eigenvalues: negative eigenvalue");
    if (e <= 1e-10) e = 0.0;
  }
  std::sort(eigs.begin(), eigs.end());
  const double unit = 1.0 / static_cast<double>(eigs.size());
  double zero_mass = 0.0;
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < eigs.size();) {
    std::size_t j = i;
    while (j < eigs.size() && eigs[j] == eigs[i]) ++j;
    const double mass = unit * static_cast<double>(j - i);
    if (eigs[i] == 0.0)
      zero_mass = mass;
    else
      atoms.push_back({eigs[i], mass});
    i = j;
  }
  return SpectralMeasure::from_atoms(zero_mass, std::move(atoms));
}

} // namespace sgdlim::spectral
