#pragma once

// Experiment orchestration behind the CLI. A single flat config describes
// the problem (data model, n, r, R, R_tilde), the stepsize (absolute gamma
// or a fraction of gamma_max), the run shape (beta, epochs, repeats, seed),
// and which outputs to produce. cli_run executes everything requested into
// one directory:
//
//   out/
//     traces/<model>_<seed>.csv   per-seed simulation traces
//     volterra.csv (+ .meta)     deterministic reference
//     closed_form.csv            Marchenko-Pastur closed form (isotropic only)
//     criticality.txt            threshold / regime report
//     comparison.csv             seed-mean traces vs the reference
//     rate_sweep.csv             fitted vs predicted decay rates
//     run.log                    warnings and resolved parameters
//
// Exit codes: 0 success (divergence flags are warnings, not failures),
// 1 partial/numerical failure, 2 usage or config errors. Outputs carry no
// timestamps, so a fixed config with fixed seeds is byte-identical.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sgdlim/compare.hpp"
#include "sgdlim/config.hpp"
#include "sgdlim/criticality.hpp"
#include "sgdlim/datagen.hpp"
#include "sgdlim/diffusion.hpp"
#include "sgdlim/sgd.hpp"
#include "sgdlim/spectral.hpp"
#include "sgdlim/trace_io.hpp"
#include "sgdlim/volterra.hpp"

namespace sgdlim::harness {

struct ExperimentConfig {
  datagen::DataModel model = datagen::Isotropic{100, 120};
  int n = 100;
  int d = 120;
  double r = 1.2;
  double R = 1.0;
  double R_tilde = 0.0;
  double gamma = 0.0;          // resolved absolute stepsize
  double gamma_fraction = 0.0; // nonzero iff gamma was given as a fraction
  int beta = 1;
  double epochs = 5.0;
  double record_every = 0.05;
  int repeats = 1;
  std::uint64_t seed = 1;
  double sde_sigma2 = 0.1;
  double diffusion_dt = 1e-3;
  double volterra_dt = 1e-3;
  std::vector<std::string> outputs = {"sgd", "volterra"};
  // rate-sweep grid: explicit stepsizes, or count points spanning
  // [lo, hi] * gamma_max
  std::vector<double> sweep_gammas;
  long sweep_count = 30;
  double sweep_lo = 0.08;
  double sweep_hi = 0.92;
};

inline const std::vector<std::string>& known_outputs() {
  static const std::vector<std::string> k = {"sgd",       "streaming",   "sde",        "sme",
                                             "volterra",  "closed_form", "criticality"};
  return k;
}

// the limiting spectral measure the reference solve uses: exact MP for
// isotropic data, the exact singular-value histogram for planted data, and
// the sampled instance's empirical measure for the remaining models
inline spectral::SpectralMeasure reference_measure(const ExperimentConfig& cfg) {
  if (std::holds_alternative<datagen::Isotropic>(cfg.model)) return spectral::mp_measure(cfg.r);
  if (const auto* p = std::get_if<datagen::Planted>(&cfg.model)) {
    std::vector<double> eigs;
    for (double s : p->singular_values) eigs.push_back(s * s / p->n);
    for (int j = static_cast<int>(eigs.size()); j < p->d; ++j) eigs.push_back(0.0);
    return spectral::esm_from_eigenvalues(std::move(eigs));
  }
  const datagen::Matrix A = datagen::gen_matrix(cfg.model, cfg.seed);
  const Eigen::MatrixXd H = A.transpose() * A / static_cast<double>(cfg.n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("reference_measure: eigensolver failed");
  std::vector<double> eigs(eig.eigenvalues().data(), eig.eigenvalues().data() + cfg.d);
  for (double& e : eigs) e = std::max(e, 0.0);
  return spectral::esm_from_eigenvalues(std::move(eigs));
}

inline ExperimentConfig parse_experiment(const config::KVConfig& kv) {
  ExperimentConfig cfg;
  cfg.n = static_cast<int>(kv.get_int("n"));
  cfg.r = kv.get_double("r");
  if (cfg.n < 1) throw config::ParseError("config: n must be >= 1");
  if (!(cfg.r > 0.0)) throw config::ParseError("config: r must be > 0");
  cfg.d = static_cast<int>(std::ceil(cfg.r * cfg.n - 1e-12));
  if (cfg.d < 1) throw config::ParseError("config: derived d must be >= 1");

  const std::string model = kv.get_string("model", "isotropic");
  if (model == "isotropic") {
    cfg.model = datagen::Isotropic{cfg.n, cfg.d};
  } else if (model == "planted") {
    datagen::Planted p;
    p.n = cfg.n;
    p.d = cfg.d;
    p.singular_values = kv.get_double_list("planted.singular_values");
    cfg.model = p;
  } else if (model == "deep_linear") {
    datagen::DeepLinear dl;
    dl.n = cfg.n;
    dl.d = cfg.d;
    for (double w : kv.get_double_list("deep_linear.widths"))
      dl.inner_widths.push_back(static_cast<int>(w));
    cfg.model = dl;
  } else if (model == "one_hidden_layer") {
    datagen::OneHiddenLayer oh;
    oh.n = cfg.n;
    oh.d = cfg.d;
    oh.m = static_cast<int>(kv.get_int("one_hidden.m"));
    cfg.model = oh;
  } else {
    throw config::ParseError("config: unknown model '" + model + "'");
  }
  datagen::validate_model(cfg.model);

  cfg.R = kv.get_double("R", 1.0);
  cfg.R_tilde = kv.get_double("R_tilde", 0.0);
  if (cfg.R < 0.0 || cfg.R_tilde < 0.0)
    throw config::ParseError("config: R and R_tilde must be >= 0");

  const bool has_abs = kv.has("gamma");
  const bool has_frac = kv.has("gamma_fraction");
  if (has_abs == has_frac)
    throw config::ParseError("config: give exactly one of gamma, gamma_fraction");
  if (has_abs) {
    cfg.gamma = kv.get_double("gamma");
  } else {
    cfg.gamma_fraction = kv.get_double("gamma_fraction");
    if (!(cfg.gamma_fraction > 0.0))
      throw config::ParseError("config: gamma_fraction must be > 0");
    cfg.gamma = cfg.gamma_fraction * criticality::gamma_max(reference_measure(cfg), cfg.r);
  }
  if (cfg.gamma < 0.0) throw config::ParseError("config: gamma must be >= 0");

  cfg.beta = static_cast<int>(kv.get_int("beta", 1));
  cfg.epochs = kv.get_double("epochs", 5.0);
  cfg.record_every = kv.get_double("record_every", 0.05);
  cfg.repeats = static_cast<int>(kv.get_int("repeats", 1));
  if (cfg.repeats < 1) throw config::ParseError("config: repeats must be >= 1");
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", 1));
  cfg.sde_sigma2 = kv.get_double("sde.sigma2", 0.1);
  cfg.diffusion_dt = kv.get_double("diffusion.dt", 1e-3);
  cfg.volterra_dt = kv.get_double("volterra.dt", 1e-3);

  if (kv.has("outputs")) cfg.outputs = kv.get_list("outputs");
  for (const auto& o : cfg.outputs) {
    const auto& k = known_outputs();
    if (std::find(k.begin(), k.end(), o) == k.end())
      throw config::ParseError("config: unknown output '" + o + "'");
  }
  if (kv.has("sweep.gammas")) cfg.sweep_gammas = kv.get_double_list("sweep.gammas");
  cfg.sweep_count = kv.get_int("sweep.count", 30);
  cfg.sweep_lo = kv.get_double("sweep.lo", 0.08);
  cfg.sweep_hi = kv.get_double("sweep.hi", 0.92);
  if (cfg.sweep_count < 1 || !(cfg.sweep_lo > 0.0) || !(cfg.sweep_hi > cfg.sweep_lo))
    throw config::ParseError("config: sweep grid must satisfy 0 < lo < hi, count >= 1");

  const bool wants_closed_form =
      std::find(cfg.outputs.begin(), cfg.outputs.end(), "closed_form") != cfg.outputs.end();
  if (wants_closed_form && !std::holds_alternative<datagen::Isotropic>(cfg.model))
    throw config::ParseError("config: closed_form output requires model = isotropic");

  const auto unknown = kv.unknown_keys();
  if (!unknown.empty()) throw config::ParseError("config: unknown key '" + unknown.front() + "'");
  return cfg;
}

inline ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config::ParseError("config: cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment(config::KVConfig::parse(buf.str()));
}

inline bool wants(const ExperimentConfig& cfg, const std::string& output) {
  return std::find(cfg.outputs.begin(), cfg.outputs.end(), output) != cfg.outputs.end();
}

class RunLog {
 public:
  explicit RunLog(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("run.log: cannot open " + path);
  }
  void line(const std::string& s) { out_ << s << '\n'; }
  void warn(const std::string& s) { out_ << "warning: " << s << '\n'; }
  void error(const std::string& s) { out_ << "error: " << s << '\n'; }

 private:
  std::ofstream out_;
};

inline std::vector<sgd::Trace> run_requested_sims(const ExperimentConfig& cfg, RunLog& log,
                                                  const std::string& traces_dir) {
  std::vector<sgd::Trace> traces;
  sgd::SGDConfig scfg;
  scfg.gamma = cfg.gamma;
  scfg.beta = cfg.beta;
  scfg.epochs = cfg.epochs;
  scfg.record_every = cfg.record_every;
  diffusion::DiffusionConfig dcfg;
  dcfg.gamma = cfg.gamma;
  dcfg.dt = cfg.diffusion_dt;
  dcfg.epochs = cfg.epochs;
  dcfg.sigma2 = cfg.sde_sigma2;
  dcfg.record_every = cfg.record_every;

  for (const auto& which : {std::string("sgd"), std::string("streaming"), std::string("sde"),
                            std::string("sme")}) {
    if (!wants(cfg, which)) continue;
    for (int rep = 0; rep < cfg.repeats; ++rep) {
      const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(rep);
      scfg.seed = seed;
      dcfg.seed = seed;
      sgd::Trace tr;
      if (which == "sgd") {
        const auto inst = datagen::gen_instance(cfg.model, cfg.R, cfg.R_tilde, seed);
        tr = sgd::run_sgd(inst, scfg);
      } else if (which == "streaming") {
        tr = sgd::run_streaming(cfg.model, cfg.R, cfg.R_tilde, scfg);
      } else {
        const auto inst = datagen::gen_instance(cfg.model, cfg.R, cfg.R_tilde, seed);
        tr = which == "sde" ? diffusion::run_sde(inst, dcfg) : diffusion::run_sme(inst, dcfg);
      }
      if (tr.truncated)
        log.warn(which + " seed " + std::to_string(seed) + " diverged; trace truncated");
      trace_io::write_trace_csv(traces_dir + "/" + which + "_" + std::to_string(seed) + ".csv",
                                tr);
      traces.push_back(std::move(tr));
    }
  }
  return traces;
}

inline void write_criticality_txt(const std::string& path, const ExperimentConfig& cfg,
                                  const criticality::CriticalityReport& rep) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("criticality: cannot open " + path);
  out << "gamma=" << trace_io::fmt17(cfg.gamma) << '\n';
  if (cfg.gamma_fraction > 0.0)
    out << "gamma_fraction=" << trace_io::fmt17(cfg.gamma_fraction) << '\n';
  out << criticality::report_kv(rep);
  if (!out) throw std::runtime_error("criticality: write failed on " + path);
}

inline void write_closed_form_csv(const std::string& path, const ExperimentConfig& cfg,
                                  const spectral::SpectralMeasure& mu) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("closed_form: cannot open " + path);
  out << "t,psi\n";
  const auto n = static_cast<long>(std::floor(cfg.epochs / cfg.volterra_dt + 1e-9));
  for (long i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) * cfg.volterra_dt;
    out << trace_io::fmt17(t) << ','
        << trace_io::fmt17(
               criticality::mp_closed_form(mu, cfg.r, cfg.gamma, cfg.R, cfg.R_tilde, t))
        << '\n';
  }
  if (!out) throw std::runtime_error("closed_form: write failed on " + path);
}

// the simulate subcommand: every requested output into out_dir
inline int cli_run(const std::string& config_path, const std::string& out_dir,
                   std::optional<std::uint64_t> seed_override, int threads) {
  ExperimentConfig cfg;
  try {
    cfg = load_experiment(config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }
  if (seed_override) cfg.seed = *seed_override;

  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "traces");
  RunLog log(out_dir + "/run.log");
  log.line("config: " + config_path);
  log.line("model: " + std::string(datagen::model_tag(cfg.model)));
  log.line("n: " + std::to_string(cfg.n) + "  d: " + std::to_string(cfg.d));
  if (cfg.gamma_fraction > 0.0)
    log.line("gamma: " + trace_io::fmt17(cfg.gamma) + " (fraction " +
             trace_io::fmt17(cfg.gamma_fraction) + " of gamma_max)");
  else
    log.line("gamma: " + trace_io::fmt17(cfg.gamma));
  if (threads > 1)
    log.line("threads: " + std::to_string(threads) +
             " requested; running sequentially in seed order");

  int failures = 0;
  std::optional<spectral::SpectralMeasure> mu;
  auto measure = [&]() -> const spectral::SpectralMeasure& {
    if (!mu) mu = reference_measure(cfg);
    return *mu;
  };

  std::optional<volterra::VolterraSolution> ref;
  if (wants(cfg, "volterra")) {
    try {
      ref = volterra::solve(measure(), cfg.R, cfg.R_tilde, cfg.r, cfg.gamma,
                            volterra::VolterraGrid{cfg.epochs, cfg.volterra_dt},
                            datagen::model_tag(cfg.model));
      volterra::write_csv(*ref, out_dir + "/volterra.csv");
      if (std::isinf(ref->psi_inf))
        log.warn("volterra: stepsize at or above gamma_0, psi diverges");
    } catch (const std::exception& e) {
      log.error(std::string("volterra: ") + e.what());
      ++failures;
    }
  }

  if (wants(cfg, "criticality")) {
    try {
      const auto rep = criticality::asymptotic_rate(measure(), cfg.r, cfg.gamma, cfg.R, cfg.R_tilde);
      write_criticality_txt(out_dir + "/criticality.txt", cfg, rep);
      if (rep.gamma_star_diverges)
        log.warn("criticality: gamma_star integral diverges for this measure");
    } catch (const std::exception& e) {
      log.error(std::string("criticality: ") + e.what());
      ++failures;
    }
  }

  if (wants(cfg, "closed_form")) {
    try {
      write_closed_form_csv(out_dir + "/closed_form.csv", cfg, measure());
    } catch (const std::exception& e) {
      log.error(std::string("closed_form: ") + e.what());
      ++failures;
    }
  }

  std::vector<sgd::Trace> traces;
  try {
    traces = run_requested_sims(cfg, log, out_dir + "/traces");
  } catch (const std::exception& e) {
    log.error(std::string("simulate: ") + e.what());
    ++failures;
  }

  if (ref && !traces.empty()) {
    try {
      const auto res = compare::compare(traces, *ref);
      for (const auto& w : res.warnings) log.warn(w);
      compare::write_comparison_csv(out_dir + "/comparison.csv", res);
      for (const auto& mc : res.models)
        log.line("sup_dev[" + mc.model + "] = " + trace_io::fmt17(mc.sup_dev) +
                 " (normalized " + trace_io::fmt17(mc.sup_dev_norm) + ")");
    } catch (const std::exception& e) {
      log.error(std::string("compare: ") + e.what());
      ++failures;
    }
  }

  return failures == 0 ? 0 : 1;
}

inline int cli_solve_volterra(const std::string& config_path, const std::string& out_dir) {
  ExperimentConfig cfg;
  try {
    cfg = load_experiment(config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }
  std::filesystem::create_directories(out_dir);
  const auto sol = volterra::solve(reference_measure(cfg), cfg.R, cfg.R_tilde, cfg.r, cfg.gamma,
                                   volterra::VolterraGrid{cfg.epochs, cfg.volterra_dt},
                                   datagen::model_tag(cfg.model));
  volterra::write_csv(sol, out_dir + "/volterra.csv");
  return 0;
}

inline int cli_closed_form(const std::string& config_path, const std::string& out_dir) {
  ExperimentConfig cfg;
  try {
    cfg = load_experiment(config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }
  if (!std::holds_alternative<datagen::Isotropic>(cfg.model)) {
    std::fprintf(stderr, "closed-form requires model = isotropic\n");
    return 2;
  }
  std::filesystem::create_directories(out_dir);
  write_closed_form_csv(out_dir + "/closed_form.csv", cfg, reference_measure(cfg));
  return 0;
}

inline int cli_criticality(const std::string& config_path, const std::string& out_dir) {
  ExperimentConfig cfg;
  try {
    cfg = load_experiment(config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }
  std::filesystem::create_directories(out_dir);
  const auto rep =
      criticality::asymptotic_rate(reference_measure(cfg), cfg.r, cfg.gamma, cfg.R, cfg.R_tilde);
  write_criticality_txt(out_dir + "/criticality.txt", cfg, rep);
  std::printf("%s", criticality::report_kv(rep).c_str());
  return 0;
}

inline int cli_rate_sweep(const std::string& config_path, const std::string& out_dir) {
  ExperimentConfig cfg;
  try {
    cfg = load_experiment(config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }
  std::filesystem::create_directories(out_dir);
  const auto mu = reference_measure(cfg);
  std::vector<double> gammas = cfg.sweep_gammas;
  if (gammas.empty()) {
    const double g0 = criticality::gamma_max(mu, cfg.r);
    for (long i = 0; i < cfg.sweep_count; ++i) {
      const double f =
          cfg.sweep_count == 1
              ? cfg.sweep_lo
              : cfg.sweep_lo + (cfg.sweep_hi - cfg.sweep_lo) * static_cast<double>(i) /
                                   static_cast<double>(cfg.sweep_count - 1);
      gammas.push_back(f * g0);
    }
  }
  const auto rows = compare::rate_sweep(mu, cfg.r, gammas, cfg.R, cfg.R_tilde);
  compare::write_rate_sweep_csv(out_dir + "/rate_sweep.csv", rows);
  return 0;
}

// rebuild comparison.csv from the traces and reference already on disk
inline int cli_compare(const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path vcsv = fs::path(out_dir) / "volterra.csv";
  if (!fs::exists(vcsv)) {
    std::fprintf(stderr, "compare: %s not found\n", vcsv.string().c_str());
    return 1;
  }
  volterra::VolterraSolution ref;
  {
    std::ifstream in(vcsv);
    std::string line;
    std::getline(in, line);
    if (line != "t,psi") {
      std::fprintf(stderr, "compare: bad header in volterra.csv\n");
      return 1;
    }
    std::vector<double> ts;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto comma = line.find(',');
      ts.push_back(std::stod(line.substr(0, comma)));
      ref.psi.push_back(std::stod(line.substr(comma + 1)));
    }
    if (ref.psi.size() < 2) {
      std::fprintf(stderr, "compare: volterra.csv holds fewer than 2 nodes\n");
      return 1;
    }
    ref.grid.dt = ts[1] - ts[0];
    ref.grid.t_max = ts.back();
  }
  std::vector<sgd::Trace> traces;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(fs::path(out_dir) / "traces"))
    if (e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) traces.push_back(trace_io::read_trace_csv(f.string()));
  if (traces.empty()) {
    std::fprintf(stderr, "compare: no traces under %s/traces\n", out_dir.c_str());
    return 1;
  }
  const auto res = compare::compare(traces, ref);
  compare::write_comparison_csv(out_dir + "/comparison.csv", res);
  return 0;
}

// self-contained gnuplot scripts over the CSVs a run produced
inline std::string emit_plot_script(const std::string& kind,
                                    const std::vector<std::string>& rel_csvs,
                                    std::optional<double> gamma_star) {
  std::string s;
  s += "set datafile separator ','\n";
  s += "set terminal pngcairo size 900,600\n";
  s += "set key top right\n";
  if (kind == "volterra") {
    s += "set output 'volterra.png'\n";
    s += "set logscale y\n";
    s += "set xlabel 'epochs'\nset ylabel 'psi'\n";
    s += "plot '" + rel_csvs.front() + "' every ::1 using 1:2 with lines lw 2 title 'Volterra'\n";
  } else if (kind == "traces") {
    s += "set output 'traces.png'\n";
    s += "set logscale y\n";
    s += "set xlabel 'epochs'\nset ylabel 'f'\n";
    s += "plot ";
    bool first = true;
    for (const auto& p : rel_csvs) {
      if (!first) s += ", \\\n     ";
      first = false;
      if (p.find("volterra") != std::string::npos)
        s += "'" + p + "' every ::1 using 1:2 with lines lw 3 lc 'black' title 'Volterra'";
      else
        s += "'" + p + "' every ::1 using 1:2 with lines title '" +
             std::filesystem::path(p).stem().string() + "'";
    }
    s += "\n";
  } else if (kind == "comparison") {
    s += "set output 'comparison.png'\n";
    s += "set logscale y\n";
    s += "set xlabel 'epochs'\nset ylabel 'f'\n";
    const std::string c = rel_csvs.front();
    // one band + mean per model, reference once
    s += "plot '" + c + "' every ::1 using 2:($3-$4):($3+$4) with filledcurves fs transparent "
         "solid 0.2 notitle, \\\n     '" +
         c + "' every ::1 using 2:3 with lines title 'seed mean', \\\n     '" + c +
         "' every ::1 using 2:5 with lines lw 2 lc 'black' title 'Volterra'\n";
  } else if (kind == "rate") {
    s += "set output 'rate_sweep.png'\n";
    s += "set xlabel 'gamma'\nset ylabel 'decay rate'\n";
    if (gamma_star)
      s += "set arrow from " + trace_io::fmt17(*gamma_star) +
           ",graph 0 to " + trace_io::fmt17(*gamma_star) + ",graph 1 nohead dashtype 2\n";
    s += "plot '" + rel_csvs.front() +
         "' every ::1 using 1:2 with points pt 7 title 'fitted', \\\n     '" + rel_csvs.front() +
         "' every ::1 using 1:3 with lines title 'predicted'\n";
  } else {
    throw std::invalid_argument("plot: unknown kind '" + kind + "'");
  }
  return s;
}

inline int cli_plot(const std::string& out_dir, const std::string& kind) {
  namespace fs = std::filesystem;
  std::vector<std::string> csvs;
  auto need = [&](const std::string& name) {
    if (!fs::exists(fs::path(out_dir) / name)) {
      std::fprintf(stderr, "plot: missing %s/%s\n", out_dir.c_str(), name.c_str());
      return false;
    }
    csvs.push_back(name);
    return true;
  };
  std::optional<double> gamma_star;
  if (kind == "volterra") {
    if (!need("volterra.csv")) return 1;
  } else if (kind == "comparison") {
    if (!need("comparison.csv")) return 1;
  } else if (kind == "rate") {
    if (!need("rate_sweep.csv")) return 1;
    const fs::path crit = fs::path(out_dir) / "criticality.txt";
    if (fs::exists(crit)) {
      std::ifstream in(crit);
      std::string line;
      while (std::getline(in, line))
        if (line.rfind("gamma_star=", 0) == 0) gamma_star = std::stod(line.substr(11));
    }
  } else if (kind == "traces") {
    std::vector<fs::path> files;
    if (fs::exists(fs::path(out_dir) / "traces"))
      for (const auto& e : fs::directory_iterator(fs::path(out_dir) / "traces"))
        if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) csvs.push_back("traces/" + f.filename().string());
    if (fs::exists(fs::path(out_dir) / "volterra.csv")) csvs.push_back("volterra.csv");
    if (csvs.empty()) {
      std::fprintf(stderr, "plot: no trace CSVs under %s\n", out_dir.c_str());
      return 1;
    }
  } else {
    std::fprintf(stderr, "plot: unknown kind '%s'\n", kind.c_str());
    return 2;
  }
  std::ofstream out(fs::path(out_dir) / "plot.gp");
  out << emit_plot_script(kind, csvs, gamma_star);
  return out ? 0 : 1;
}

} // namespace sgdlim::harness
