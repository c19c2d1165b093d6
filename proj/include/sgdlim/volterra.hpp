#pragma once

// Solver for the limiting Volterra equation
//
//     psi(t) = z(t) + int_0^t K(t - s) psi(s) ds
//     z(t)   = (R/2) h_1(t) + (R_tilde/2) (r h_0(t) + (1 - r))
//     K(t)   = gamma^2 r h_2(t)
//
// on a uniform grid with trapezoid convolution quadrature. z and K are built
// in one sweep over the measure's support points by updating e_j <- e_j *
// exp(-2 gamma dt x_j) per grid step, so a solve costs O(N nodes + N^2).
// The multiplicative update drifts by at most ~N eps relative, orders below
// the trapezoid error at any admissible N.

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgdlim/criticality.hpp"
#include "sgdlim/spectral.hpp"

namespace sgdlim::volterra {

struct VolterraGrid {
  double t_max = 10.0;
  double dt = 1e-3;

  // nodes t_i = i dt, i = 0..n-1, covering [0, t_max]
  int n_nodes() const {
    validate();
    return static_cast<int>(std::floor(t_max / dt + 1e-9)) + 1;
  }

  void validate() const {
    if (!(dt > 0.0) || !(t_max > 0.0))
      throw std::invalid_argument("VolterraGrid: dt and t_max must be > 0");
    if (t_max / dt >= 1e7) throw std::invalid_argument("VolterraGrid: more than 1e7 nodes");
  }
};

struct VolterraParams {
  std::string mu_tag;
  double R = 0.0, R_tilde = 0.0, r = 1.0, gamma = 0.0;
};

struct VolterraSolution {
  VolterraGrid grid;
  std::vector<double> psi;
  double psi_inf = 0.0; // +inf when gamma >= gamma0
  VolterraParams params;

  double t(int i) const { return i * grid.dt; }
};

inline double forcing_z(const spectral::SpectralMeasure& mu, double R, double R_tilde, double r,
                        double gamma, double t) {
  return 0.5 * R * spectral::h_k(mu, 1, gamma, t) +
         0.5 * R_tilde * (r * spectral::h_k(mu, 0, gamma, t) + (1.0 - r));
}

inline double kernel_K(const spectral::SpectralMeasure& mu, double r, double gamma, double t) {
  return gamma * gamma * r * spectral::h_k(mu, 2, gamma, t);
}

inline VolterraSolution solve(const spectral::SpectralMeasure& mu, double R, double R_tilde,
                              double r, double gamma, const VolterraGrid& grid,
                              const std::string& mu_tag = "custom") {
  if (!(gamma > 0.0)) throw std::invalid_argument("solve: gamma must be > 0");
  if (R < 0.0 || R_tilde < 0.0) throw std::invalid_argument("solve: R, R_tilde must be >= 0");
  if (!(r > 0.0)) throw std::invalid_argument("solve: r must be > 0");
  const int n = grid.n_nodes();

  // one pass builds z[i] and K[i] for all grid points
  std::vector<double> z(n), K(n);
  {
    const auto& xs = mu.q_loc();
    const auto& ws = mu.q_w();
    const std::size_t m = xs.size();
    std::vector<double> e(ws.begin(), ws.end()), f(m);
    for (std::size_t j = 0; j < m; ++j) f[j] = std::exp(-2.0 * gamma * grid.dt * xs[j]);
    for (int i = 0; i < n; ++i) {
      double s0 = 0.0, s1 = 0.0, s2 = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double ex = e[j];
        const double x = xs[j];
        s0 += ex;
        s1 += ex * x;
        s2 += ex * x * x;
        e[j] = ex * f[j];
      }
      z[i] = 0.5 * R * s1 + 0.5 * R_tilde * (r * s0 + (1.0 - r));
      K[i] = gamma * gamma * r * s2;
    }
  }

  const double denom = 1.0 - 0.5 * grid.dt * K[0];
  if (denom <= 0.0)
    throw std::invalid_argument("solve: grid too coarse, 1 - dt K(0)/2 <= 0; decrease dt");

  VolterraSolution sol;
  sol.grid = grid;
  sol.params = {mu_tag, R, R_tilde, r, gamma};
  sol.psi_inf = criticality::psi_infinity(mu, R_tilde, r, gamma);
  sol.psi.resize(n);
  sol.psi[0] = z[0];
  for (int i = 1; i < n; ++i) {
    double conv = 0.5 * K[i] * sol.psi[0];
    for (int j = 1; j < i; ++j) conv += K[i - j] * sol.psi[j];
    sol.psi[i] = (z[i] + grid.dt * conv) / denom;
  }
  return sol;
}

// CSV `t,psi` with a key-value sidecar <path>.meta carrying the parameters
inline void write_csv(const VolterraSolution& sol, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_csv: cannot open " + path);
  std::fprintf(f, "t,psi\n");
  for (std::size_t i = 0; i < sol.psi.size(); ++i)
    std::fprintf(f, "%.17g,%.17g\n", static_cast<double>(i) * sol.grid.dt, sol.psi[i]);
  std::fclose(f);
  f = std::fopen((path + ".meta").c_str(), "w");
  if (!f) throw std::runtime_error("write_csv: cannot open " + path + ".meta");
  std::fprintf(f, "mu=%s\nR=%.17g\nR_tilde=%.17g\nr=%.17g\ngamma=%.17g\ndt=%.17g\nt_max=%.17g\npsi_inf=%.17g\n",
               sol.params.mu_tag.c_str(), sol.params.R, sol.params.R_tilde, sol.params.r,
               sol.params.gamma, sol.grid.dt, sol.grid.t_max, sol.psi_inf);
  std::fclose(f);
}

} // namespace sgdlim::volterra
