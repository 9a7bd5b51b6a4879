// sparsecd: command-line front end for the simulator.

#include "sparsecd/sparsecd.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <optional>
#include <sstream>

using namespace sparsecd;

namespace {

struct CommonOpts {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<unsigned> threads;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool need_config = true) {
  auto* c = cmd->add_option("--config", o.config, "JSON config file");
  if (need_config) c->required();
  cmd->add_option("--seed", o.seed, "master seed (overrides the config)");
  cmd->add_option("--trials", o.trials, "trials per point (overrides the config)");
  cmd->add_option("--threads", o.threads, "worker threads");
  cmd->add_option("--out", o.out, "output path");
}

ExperimentConfig load_experiment(const CommonOpts& o) {
  ExperimentConfig cfg = experiment_from_json(load_json_file(o.config));
  if (o.seed) cfg.seed = *o.seed;
  if (o.trials) cfg.trials = *o.trials;
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

void emit(const std::string& out, const std::string& body, const json& sidecar) {
  if (out.empty()) {
    std::cout << body;
    return;
  }
  write_text_file(out, body);
  write_text_file(out + ".json", sidecar.dump(2) + "\n");
}

json stopping_report_json(const StoppingReport& r) {
  json j;
  j["stopping_time"] = r.T ? json(*r.T) : json(nullptr);
  j["censored"] = r.censored;
  j["support_estimate"] = r.support_estimate;
  j["true_support"] = r.true_support;
  j["final_metric"] = r.trace.empty() ? 0.0 : r.trace.back();
  j["steps"] = r.trace.size();
  return j;
}

int cmd_matrix_build(const CommonOpts& o, const std::string& kind, Index M, Index N) {
  MatrixSpec spec;
  std::uint64_t seed = o.seed.value_or(1);
  if (!o.config.empty()) {
    const json j = load_json_file(o.config);
    if (j.contains("scenario")) {
      const ExperimentConfig cfg = experiment_from_json(j);
      spec = cfg.matrix;
      if (!o.seed) seed = cfg.seed;
    } else {
      spec = matrix_spec_from_json(j);
    }
  } else {
    detail::require(!kind.empty() && M > 0, ErrorKind::config, "give --config or --kind with --M");
    spec.kind = matrix_kind_from_string(kind);
    spec.M = M;
    spec.N = N > 0 ? N : M;
  }
  const SensingMatrix A = build_matrix(spec, seed);
  json report = matrix_summary(A);
  report["welch_bound"] = A.cols() > A.rows()
                              ? std::sqrt(static_cast<double>(A.cols() - A.rows()) /
                                          (static_cast<double>(A.rows()) * static_cast<double>(A.cols() - 1)))
                              : 0.0;
  if (!o.out.empty()) {
    save_matrix(o.out, A);
    report["file"] = o.out;
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_matrix_info(const std::string& file) {
  const SensingMatrix A = load_matrix(file);
  std::cout << matrix_summary(A).dump(2) << "\n";
  return 0;
}

int cmd_detect(const CommonOpts& o, std::size_t detector, std::size_t trial, bool no_change, std::optional<double> tau) {
  const ExperimentConfig cfg = load_experiment(o);
  detail::require(detector < cfg.detectors.size(), ErrorKind::config, "detector index out of range");
  DetectorSpec spec = cfg.detectors[detector];
  if (tau) spec.threshold = *tau;
  const SensingMatrix A = build_matrix(cfg.matrix, cfg.seed);
  const auto rep = run_trial(cfg, A, spec, no_change ? std::nullopt : std::optional<std::size_t>(cfg.scenario.nu), trial);
  json j = stopping_report_json(rep);
  j["detector"] = spec.name();
  j["threshold"] = spec.threshold;
  j["change_point"] = no_change ? json("never") : json(cfg.scenario.nu);
  j["trial"] = trial;
  emit(o.out, j.dump(2) + "\n", provenance(to_json(cfg)));
  return 0;
}

int cmd_sweep(const CommonOpts& o) {
  const ExperimentConfig cfg = load_experiment(o);
  const SensingMatrix A = build_matrix(cfg.matrix, cfg.seed);
  const auto curves = sweep(cfg, A);
  std::ostringstream csv;
  write_curves_csv(csv, curves);
  json side = provenance(to_json(cfg));
  side["matrix"] = matrix_summary(A);
  emit(o.out, csv.str(), side);
  return 0;
}

int cmd_recovery(const CommonOpts& o, std::optional<double> target) {
  ExperimentConfig cfg = load_experiment(o);
  if (target) cfg.target_arl = *target;
  detail::require(cfg.target_arl.has_value(), ErrorKind::config, "recovery needs target_arl (config or --target-arl)");
  const SensingMatrix A = build_matrix(cfg.matrix, cfg.seed);
  const auto res = recovery_study(cfg, A, *cfg.target_arl);
  std::ostringstream csv;
  csv << "detector,tau,arl,arl_stderr,delay,delay_stderr,recovery_pct\n";
  for (const auto& r : res)
    csv << r.detector << ',' << fmt(r.point.tau) << ',' << fmt(r.point.arl.mean) << ',' << fmt(r.point.arl.stderr_)
        << ',' << fmt(r.point.delay.mean) << ',' << fmt(r.point.delay.stderr_) << ',' << fmt(r.recovery_pct) << '\n';
  json side = provenance(to_json(cfg));
  side["matrix"] = matrix_summary(A);
  emit(o.out, csv.str(), side);
  return 0;
}

int cmd_ra(const CommonOpts& o) {
  RandomAccessConfig cfg = random_access_from_json(load_json_file(o.config));
  if (o.seed) cfg.seed = *o.seed;
  if (o.trials) cfg.trials = *o.trials;
  if (o.threads) cfg.threads = *o.threads;
  const auto res = random_access_experiment(cfg);
  std::ostringstream csv;
  csv << "family,rows,cols,coherence,tau,arl,arl_stderr,delay,delay_stderr,identification_pct\n";
  for (const auto& r : res)
    csv << to_string(r.family) << ',' << r.rows << ',' << r.cols << ',' << fmt(r.coherence) << ','
        << fmt(r.point.tau) << ',' << fmt(r.point.arl.mean) << ',' << fmt(r.point.arl.stderr_) << ','
        << fmt(r.point.delay.mean) << ',' << fmt(r.point.delay.stderr_) << ',' << fmt(r.identification_pct) << '\n';
  emit(o.out, csv.str(), provenance(to_json(cfg)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quickest detection of sparse changes under compressive measurements"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string kind;
  Index M = 0, N = 0;
  std::string info_file;
  std::size_t detector = 0, trial = 0;
  bool no_change = false;
  std::optional<double> tau, target;

  auto* matrix = app.add_subcommand("matrix", "build or inspect sensing matrices");
  matrix->require_subcommand(1);
  auto* build = matrix->add_subcommand("build", "construct a matrix and report its coherence");
  add_common(build, opts, false);
  build->add_option("--kind", kind, "matrix kind");
  build->add_option("--M", M, "rows");
  build->add_option("--N", N, "columns");
  auto* info = matrix->add_subcommand("info", "report on a saved matrix");
  info->add_option("file", info_file, "matrix file")->required();

  auto* detect = app.add_subcommand("detect", "one run, prints the stopping report");
  add_common(detect, opts);
  detect->add_option("--detector", detector, "index into the config's detector list");
  detect->add_option("--trial", trial, "trial index");
  detect->add_option("--tau", tau, "threshold (overrides the detector's)");
  detect->add_flag("--no-change", no_change, "run without a change point");

  auto* sw = app.add_subcommand("sweep", "threshold sweep, emits the tradeoff curve CSV");
  add_common(sw, opts);
  auto* rec = app.add_subcommand("recovery", "support recovery at a calibrated T_r");
  add_common(rec, opts);
  rec->add_option("--target-arl", target, "T_r target");
  auto* ra = app.add_subcommand("ra", "massive random access experiment");
  add_common(ra, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const auto start = std::chrono::steady_clock::now();
  int rc = 0;
  try {
    if (*build) rc = cmd_matrix_build(opts, kind, M, N);
    else if (*info) rc = cmd_matrix_info(info_file);
    else if (*detect) rc = cmd_detect(opts, detector, trial, no_change, tau);
    else if (*sw) rc = cmd_sweep(opts);
    else if (*rec) rc = cmd_recovery(opts, target);
    else if (*ra) rc = cmd_ra(opts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "wall time: " << secs << " s\n";
  return rc;
}
