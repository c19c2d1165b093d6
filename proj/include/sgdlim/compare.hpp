#pragma once

// Comparison metrics between simulated traces and the Volterra reference,
// plus the rate sweep behind the phase-transition figure.
//
// compare() groups traces by their model tag, averages across seeds, and
// reports sup_t |mean(t) - psi_0(t)| raw and normalized by psi_0(0). The
// reference is evaluated by linear interpolation on its grid; trace points
// past the reference horizon are trimmed with a warning rather than
// rejected, matching how truncated (diverged) traces shorten a group.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgdlim/criticality.hpp"
#include "sgdlim/sgd.hpp"
#include "sgdlim/spectral.hpp"
#include "sgdlim/trace_io.hpp"
#include "sgdlim/volterra.hpp"

namespace sgdlim::compare {

struct ModelComparison {
  std::string model;
  std::vector<double> times;
  std::vector<double> mean; // across seeds, in seed-sorted input order
  std::vector<double> sd;   // unbiased; zero band for a single seed
  std::vector<double> psi;  // reference interpolated onto `times`
  double sup_dev = 0.0;
  double sup_dev_norm = 0.0;
};

struct ComparisonResult {
  std::vector<ModelComparison> models;
  std::vector<std::string> warnings;
};

inline double psi_at(const volterra::VolterraSolution& ref, double t) {
  const double dt = ref.grid.dt;
  const std::size_t n = ref.psi.size();
  if (t <= 0.0) return ref.psi.front();
  const double pos = t / dt;
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= n) return ref.psi.back();
  const double frac = pos - static_cast<double>(i);
  return ref.psi[i] + frac * (ref.psi[i + 1] - ref.psi[i]);
}

inline ComparisonResult compare(const std::vector<sgd::Trace>& traces,
                                const volterra::VolterraSolution& ref) {
  ComparisonResult out;
  std::vector<std::string> order;
  for (const auto& tr : traces)
    if (std::find(order.begin(), order.end(), tr.meta.model) == order.end())
      order.push_back(tr.meta.model);

  const double horizon = ref.grid.t_max * (1.0 + 1e-12);
  for (const auto& model : order) {
    std::vector<const sgd::Trace*> group;
    for (const auto& tr : traces)
      if (tr.meta.model == model) group.push_back(&tr);

    std::size_t len = std::numeric_limits<std::size_t>::max();
    for (const auto* tr : group) len = std::min(len, tr->times.size());
    bool trimmed_seed = false;
    for (const auto* tr : group) trimmed_seed |= tr->times.size() != len;
    if (trimmed_seed)
      out.warnings.push_back("model " + model + ": traces trimmed to the shortest seed");

    // drop recorded points past the reference horizon
    std::size_t keep = 0;
    while (keep < len && group.front()->times[keep] <= horizon) ++keep;
    if (keep < len)
      out.warnings.push_back("model " + model + ": trace extends past the reference horizon");

    ModelComparison mc;
    mc.model = model;
    for (std::size_t i = 0; i < keep; ++i) {
      const double t = group.front()->times[i];
      double m = 0.0;
      for (const auto* tr : group) m += tr->values[i];
      m /= static_cast<double>(group.size());
      double v = 0.0;
      for (const auto* tr : group) v += (tr->values[i] - m) * (tr->values[i] - m);
      const double sd = group.size() > 1 ? std::sqrt(v / static_cast<double>(group.size() - 1)) : 0.0;
      mc.times.push_back(t);
      mc.mean.push_back(m);
      mc.sd.push_back(sd);
      mc.psi.push_back(psi_at(ref, t));
      mc.sup_dev = std::max(mc.sup_dev, std::abs(m - mc.psi.back()));
    }
    mc.sup_dev_norm = mc.sup_dev / ref.psi.front();
    out.models.push_back(std::move(mc));
  }
  return out;
}

inline void write_comparison_csv(const std::string& path, const ComparisonResult& res) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("compare: cannot open " + path);
  out << "model,t,mean_f,sd_f,psi,sup_dev,sup_dev_norm\n";
  for (const auto& mc : res.models)
    for (std::size_t i = 0; i < mc.times.size(); ++i)
      out << mc.model << ',' << trace_io::fmt17(mc.times[i]) << ',' << trace_io::fmt17(mc.mean[i])
          << ',' << trace_io::fmt17(mc.sd[i]) << ',' << trace_io::fmt17(mc.psi[i]) << ','
          << trace_io::fmt17(mc.sup_dev) << ',' << trace_io::fmt17(mc.sup_dev_norm) << '\n';
  if (!out) throw std::runtime_error("compare: write failed on " + path);
}

// least-squares slope of log((psi - psi_inf) t^p) over [t_lo, t_hi]; the
// returned rate is the negated slope. Nodes at or below psi_inf end the
// window early (solver noise floor).
inline double fit_decay_rate(const volterra::VolterraSolution& sol, double psi_inf,
                             double poly_power, double t_lo, double t_hi) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  long m = 0;
  for (std::size_t i = 0; i < sol.psi.size(); ++i) {
    const double t = sol.t(i);
    if (t < t_lo || t <= 0.0) continue;
    if (t > t_hi) break;
    const double y = sol.psi[i] - psi_inf;
    if (y <= 0.0) break;
    const double z = std::log(y) + poly_power * std::log(t);
    sx += t;
    sy += z;
    sxx += t * t;
    sxy += t * z;
    ++m;
  }
  if (m < 8) throw std::invalid_argument("fit_decay_rate: window holds fewer than 8 usable nodes");
  const double denom = m * sxx - sx * sx;
  return -(m * sxy - sx * sy) / denom;
}

struct RateSweepRow {
  double gamma = 0.0;
  double fitted = std::numeric_limits<double>::quiet_NaN();
  double predicted = std::numeric_limits<double>::quiet_NaN();
  std::string regime;
};

// For each gamma: solve the Volterra equation on a horizon sized so the
// asymptotic regime dominates (rate * t up to ~30), divide out the
// polynomial envelope the rate taxonomy prescribes, and fit the leftover
// exponential. Divergent entries are kept as flagged rows, not errors.
inline std::vector<RateSweepRow> rate_sweep(const spectral::SpectralMeasure& mu, double r,
                                            const std::vector<double>& gammas, double R = 1.0,
                                            double R_tilde = 0.0) {
  std::vector<RateSweepRow> rows;
  for (const double gamma : gammas) {
    RateSweepRow row;
    row.gamma = gamma;
    const auto rep = criticality::asymptotic_rate(mu, r, gamma, R, R_tilde);
    row.regime = criticality::regime_name(rep.regime);
    if (rep.regime == criticality::Regime::divergent) {
      rows.push_back(std::move(row));
      continue;
    }
    row.predicted = rep.exp_rate;
    const double T = std::clamp(30.0 / rep.exp_rate, 20.0, 600.0);
    const double dt = std::max(1e-3, T / 20000.0);
    const auto sol = volterra::solve(mu, R, R_tilde, r, gamma, volterra::VolterraGrid{T, dt});
    row.fitted = fit_decay_rate(sol, sol.psi_inf, rep.poly_power, 0.6 * T, T);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_rate_sweep_csv(const std::string& path, const std::vector<RateSweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("rate_sweep: cannot open " + path);
  out << "gamma,fitted_rate,predicted_rate,regime\n";
  for (const auto& row : rows)
    out << trace_io::fmt17(row.gamma) << ',' << trace_io::fmt17(row.fitted) << ','
        << trace_io::fmt17(row.predicted) << ',' << row.regime << '\n';
  if (!out) throw std::runtime_error("rate_sweep: write failed on " + path);
}

} // namespace sgdlim::compare
