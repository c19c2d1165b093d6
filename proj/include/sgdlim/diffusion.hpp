#pragma once

// Euler-Maruyama baselines the objective trace is compared against, both
// integrated in SGD epoch time:
//
//   SDE  dX = -grad f(X) dt + sqrt(gamma sigma^2) dB          (fixed isotropic noise)
//   SME  dX = -gamma grad f(X) dt + (gamma/sqrt n) Sigma(X)^{1/2} dB
//
// with Sigma(X) = (1/n) sum_i (g_i - gbar)(g_i - gbar)^T over the per-sample
// gradients g_i = a_i (a_i.x - b_i). The SDE keeps the conventional unit
// drift; the SME carries the gamma so that one unit of diffusion time has
// exactly the drift and noise covariance of one epoch of minibatch SGD
// (per step of size beta/n: mean -(gamma beta/n) grad f, covariance
// (gamma/n)^2 beta Sigma). This is what makes it track SGD for small gamma
// rather than diverge once gamma*d = O(1).
//
// The SME never factorizes the d x d covariance: with residual rho = Ax - b
// and xi ~ N(0, I_n),
//
//   eta = (1/sqrt n) A^T (rho o xi) - gbar (1^T xi)/sqrt(n)
//
// has covariance exactly Sigma(X), so the whole step collapses to
// x += A^T (rho o u), u = (gamma/n) (sqrt(dt) (xi - mean(xi) 1) - dt 1),
// two mat-vecs per step.

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "sgdlim/datagen.hpp"
#include "sgdlim/rng.hpp"
#include "sgdlim/sgd.hpp"

namespace sgdlim::diffusion {

struct DiffusionConfig {
  double gamma = 0.1;
  double dt = 1e-3;
  double epochs = 5.0;
  double sigma2 = 0.1; // SDE-only isotropic noise level
  double record_every = 0.05;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(gamma >= 0.0)) throw std::invalid_argument("DiffusionConfig: gamma must be >= 0");
    if (!(dt > 0.0) || dt > 1e-2)
      throw std::invalid_argument("DiffusionConfig: dt must lie in (0, 1e-2]");
    if (!(epochs > 0.0)) throw std::invalid_argument("DiffusionConfig: epochs must be > 0");
    if (sigma2 < 0.0) throw std::invalid_argument("DiffusionConfig: sigma2 must be >= 0");
    if (!(record_every > 0.0) || record_every > epochs)
      throw std::invalid_argument("DiffusionConfig: record_every must lie in (0, epochs]");
  }
};

namespace detail {

inline long step_count(const DiffusionConfig& cfg) {
  return static_cast<long>(std::floor(cfg.epochs / cfg.dt + 1e-9));
}

inline long record_stride(const DiffusionConfig& cfg) {
  const long s = static_cast<long>(std::ceil(cfg.record_every / cfg.dt - 1e-9));
  return s < 1 ? 1 : s;
}

template <class Step>
sgd::Trace euler_loop(const datagen::ProblemInstance& inst, const DiffusionConfig& cfg,
                      const char* tag, Step&& step) {
  cfg.validate();
  const long steps = step_count(cfg);
  const long stride = record_stride(cfg);

  sgd::Trace tr;
  tr.meta = {inst.n, inst.d, cfg.gamma, 0, cfg.seed, tag};
  datagen::Vector x = inst.x0;
  tr.times.push_back(0.0);
  tr.values.push_back(sgd::f_value(inst, x));

  for (long k = 1; k <= steps; ++k) {
    step(x);
    if (k % stride == 0) {
      const double f = sgd::f_value(inst, x);
      tr.times.push_back(static_cast<double>(k) * cfg.dt);
      tr.values.push_back(f);
      if (f > sgd::kDivergenceCap) {
        tr.truncated = true;
        break;
      }
    }
  }
  return tr;
}

} // namespace detail

inline sgd::Trace run_sde(const datagen::ProblemInstance& inst, const DiffusionConfig& cfg) {
  rng::Rng gauss(cfg.seed, rng::stream_id::diffusion);
  const double noise_sd = std::sqrt(cfg.gamma * cfg.sigma2 * cfg.dt);
  datagen::Vector xi(inst.d);
  return detail::euler_loop(inst, cfg, "sde", [&](datagen::Vector& x) {
    datagen::Vector grad = inst.A.transpose() * (inst.A * x - inst.b) / inst.n;
    if (noise_sd > 0.0) {
      for (int i = 0; i < inst.d; ++i) xi(i) = gauss.normal();
      x.noalias() += -cfg.dt * grad + noise_sd * xi;
    } else {
      x.noalias() -= cfg.dt * grad;
    }
  });
}

inline sgd::Trace run_sme(const datagen::ProblemInstance& inst, const DiffusionConfig& cfg) {
  rng::Rng gauss(cfg.seed, rng::stream_id::diffusion);
  const double noise_sd = cfg.gamma * std::sqrt(cfg.dt) / inst.n;
  const double drift = cfg.gamma * cfg.dt / inst.n;
  datagen::Vector xi(inst.n), u(inst.n);
  return detail::euler_loop(inst, cfg, "sme", [&](datagen::Vector& x) {
    datagen::Vector rho = inst.A * x - inst.b;
    if (noise_sd > 0.0) {
      for (int i = 0; i < inst.n; ++i) xi(i) = gauss.normal();
      const double xbar = xi.mean();
      u = (noise_sd * (xi.array() - xbar) - drift).matrix();
    } else {
      u.setConstant(-drift);
    }
    x.noalias() += inst.A.transpose() * rho.cwiseProduct(u);
  });
}

} // namespace sgdlim::diffusion
