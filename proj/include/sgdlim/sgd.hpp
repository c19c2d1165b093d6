#pragma once

// Minibatch SGD on a fixed least-squares instance, plus the streaming
// (one-pass) variant. The update is
//
//   x_{k+1} = x_k - (gamma/n) sum_{i in B_k} a_i (a_i.x_k - b_i),
//
// with B_k a fresh uniform batch of beta distinct rows each step. Traces are
// indexed by epoch time t = k beta / n, so one unit of t is one expected pass
// over the data regardless of beta. Iteration counts are deterministic:
// floor((n/beta) epochs) steps, recorded every ceil(record_every n/beta)
// steps, matching the iterate the deterministic limit tracks, f(x_[nt/beta]).

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgdlim/datagen.hpp"
#include "sgdlim/rng.hpp"

namespace sgdlim::sgd {

// objective values above this end the run with Trace::truncated set; runs
// above gamma0 are a studied regime and must terminate, not throw
inline constexpr double kDivergenceCap = 1e12;

struct SGDConfig {
  double gamma = 0.1;
  int beta = 1;
  double epochs = 5.0;
  double record_every = 0.05;
  std::uint64_t seed = 0;

  void validate(int n) const {
    if (!(gamma >= 0.0)) throw std::invalid_argument("SGDConfig: gamma must be >= 0");
    if (beta < 1) throw std::invalid_argument("SGDConfig: beta must be >= 1");
    if (beta > n) throw std::invalid_argument("SGDConfig: beta exceeds the row count");
    if (!(epochs > 0.0)) throw std::invalid_argument("SGDConfig: epochs must be > 0");
    if (!(record_every > 0.0) || record_every > epochs)
      throw std::invalid_argument("SGDConfig: record_every must lie in (0, epochs]");
  }
};

struct TraceMeta {
  int n = 0;
  int d = 0;
  double gamma = 0.0;
  int beta = 0;
  std::uint64_t seed = 0;
  std::string model; // algorithm tag: sgd, streaming, sde, sme
};

struct Trace {
  std::vector<double> times; // epoch time, ascending, times[0] = 0
  std::vector<double> values; // f at those times, >= 0
  TraceMeta meta;
  bool truncated = false; // divergence guard tripped, trace ends early
};

inline double f_value(const datagen::ProblemInstance& inst, const datagen::Vector& x) {
  return (inst.A * x - inst.b).squaredNorm() / (2.0 * inst.n);
}

namespace detail {

// uniform beta-subset via partial Fisher-Yates on a persistent pool; the
// pool's order between draws is irrelevant to uniformity
class BatchSampler {
public:
  BatchSampler(int n, std::uint64_t seed)
      : pool_(n), rng_(seed, rng::stream_id::batches) {
    std::iota(pool_.begin(), pool_.end(), 0);
  }

  const int* draw(int beta) {
    const int n = static_cast<int>(pool_.size());
    for (int j = 0; j < beta; ++j) {
      const int k = j + static_cast<int>(rng_.below(static_cast<std::uint64_t>(n - j)));
      std::swap(pool_[j], pool_[k]);
    }
    return pool_.data();
  }

private:
  std::vector<int> pool_;
  rng::Rng rng_;
};

// residuals are read at the incoming x for the whole batch before any row
// touches x: the projector form P_k (A x_k - b), not a sequential sweep
inline void apply_batch(datagen::Vector& x, const datagen::ProblemInstance& inst,
                        const int* batch, int beta, double gamma,
                        std::vector<double>& rho) {
  for (int j = 0; j < beta; ++j)
    rho[j] = inst.A.row(batch[j]).dot(x) - inst.b(batch[j]);
  const double scale = gamma / inst.n;
  for (int j = 0; j < beta; ++j)
    x.noalias() -= (scale * rho[j]) * inst.A.row(batch[j]).transpose();
}

inline long step_count(int n, const SGDConfig& cfg) {
  return static_cast<long>(std::floor(cfg.epochs * n / cfg.beta + 1e-9));
}

inline long record_stride(int n, const SGDConfig& cfg) {
  const long s = static_cast<long>(std::ceil(cfg.record_every * n / cfg.beta - 1e-9));
  return s < 1 ? 1 : s;
}

} // namespace detail

// one update on a caller-supplied batch (0-based row indices)
inline datagen::Vector sgd_step(const datagen::Vector& x, const datagen::ProblemInstance& inst,
                                const std::vector<int>& batch, double gamma) {
  if (batch.empty()) throw std::invalid_argument("sgd_step: batch is empty");
  for (int i : batch)
    if (i < 0 || i >= inst.n) throw std::invalid_argument("sgd_step: batch index out of range");
  datagen::Vector out = x;
  std::vector<double> rho(batch.size());
  detail::apply_batch(out, inst, batch.data(), static_cast<int>(batch.size()), gamma, rho);
  return out;
}

inline Trace run_sgd(const datagen::ProblemInstance& inst, const SGDConfig& cfg) {
  cfg.validate(inst.n);
  const long steps = detail::step_count(inst.n, cfg);
  const long stride = detail::record_stride(inst.n, cfg);

  Trace tr;
  tr.meta = {inst.n, inst.d, cfg.gamma, cfg.beta, cfg.seed, "sgd"};
  datagen::Vector x = inst.x0;
  tr.times.push_back(0.0);
  tr.values.push_back(f_value(inst, x));

  detail::BatchSampler batches(inst.n, cfg.seed);
  std::vector<double> rho(cfg.beta);
  for (long k = 1; k <= steps; ++k) {
    detail::apply_batch(x, inst, batches.draw(cfg.beta), cfg.beta, cfg.gamma, rho);
    if (k % stride == 0) {
      const double f = f_value(inst, x);
      tr.times.push_back(static_cast<double>(k) * cfg.beta / inst.n);
      tr.values.push_back(f);
      if (f > kDivergenceCap) {
        tr.truncated = true;
        break;
      }
    }
  }
  return tr;
}

// one-pass SGD: every step consumes beta brand-new rows with fresh targets
// b = a.x_tilde + N(0, R_tilde); f is still evaluated on a fixed held
// instance drawn from the same model and seed, so traces are comparable
inline Trace run_streaming(const datagen::DataModel& model, double R, double R_tilde,
                           const SGDConfig& cfg) {
  const auto inst = datagen::gen_instance(model, R, R_tilde, cfg.seed);
  cfg.validate(inst.n);
  const long steps = detail::step_count(inst.n, cfg);
  const long stride = detail::record_stride(inst.n, cfg);

  Trace tr;
  tr.meta = {inst.n, inst.d, cfg.gamma, cfg.beta, cfg.seed, "streaming"};
  datagen::Vector x = inst.x0;
  tr.times.push_back(0.0);
  tr.values.push_back(f_value(inst, x));

  datagen::RowSampler rows(model, cfg.seed);
  rng::Rng target_noise(cfg.seed, rng::stream_id::stream_targets);
  const double noise_sd = std::sqrt(R_tilde);
  const double scale = cfg.gamma / inst.n;

  datagen::Vector row(inst.d);
  datagen::Matrix fresh(cfg.beta, inst.d);
  std::vector<double> rho(cfg.beta);
  for (long k = 1; k <= steps; ++k) {
    for (int j = 0; j < cfg.beta; ++j) {
      rows.next_row(row);
      fresh.row(j) = row.transpose();
      const double target = row.dot(inst.x_tilde) + noise_sd * target_noise.normal();
      rho[j] = row.dot(x) - target;
    }
    for (int j = 0; j < cfg.beta; ++j)
      x.noalias() -= (scale * rho[j]) * fresh.row(j).transpose();
    if (k % stride == 0) {
      const double f = f_value(inst, x);
      tr.times.push_back(static_cast<double>(k) * cfg.beta / inst.n);
      tr.values.push_back(f);
      if (f > kDivergenceCap) {
        tr.truncated = true;
        break;
      }
    }
  }
  return tr;
}

} // namespace sgdlim::sgd
