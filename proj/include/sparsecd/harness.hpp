#pragma once

#include "sparsecd/augment.hpp"
#include "sparsecd/bases.hpp"
#include "sparsecd/detectors.hpp"
#include "sparsecd/gold.hpp"
#include "sparsecd/matrix_io.hpp"
#include "sparsecd/model.hpp"
#include "sparsecd/random_matrices.hpp"
#include "sparsecd/recovery.hpp"
#include "sparsecd/rng.hpp"
#include "sparsecd/sic_povm.hpp"
#include "sparsecd/statistics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

namespace sparsecd {

// ---------------------------------------------------------------------------
// Specs.

struct MatrixSpec {
  MatrixKind kind = MatrixKind::unitary;
  Index M = 0;
  Index N = 0;
  /// Fiducial file for SIC matrices beyond the bundled dimensions.
  std::string fiducial_file;
  /// Matrix file for kind = custom.
  std::string file;
  /// Offset-augmented code matrices (random access): max delay, number of
  /// codes P, and the Gold degree. Used when kind is gold_augmented, or when
  /// kind is sic_povm and delta is set.
  std::optional<Index> delta;
  Index codes = 0;
  int gold_degree = 5;
};

enum class VarianceModel { common, uniform };

struct ScenarioSpec {
  Index M = 0;
  Index N = 0;
  Index K = 1;
  /// When set, sigma_x^2 follows from the SNR over M dimensions.
  std::optional<double> snr_db;
  double sigma_x_sq = 1.0;
  double noise_variance = 1.0;
  VarianceModel variances = VarianceModel::common;
  VarianceBounds bounds{0.1, 1.0};
  /// Fixed support; empty draws a fresh one per trial.
  std::vector<Index> support;
  /// Columns come in groups of this size (offset-augmented matrices); a random
  /// support then takes one column from each of K distinct groups.
  Index group_size = 1;
  std::size_t nu = 20;

  double signal_variance() const {
    return snr_db ? snr_to_sigma_x(*snr_db, M, K, noise_variance) : sigma_x_sq;
  }

  void validate() const {
    using detail::require;
    require(M >= 1 && N >= 1, ErrorKind::config, "scenario needs M, N >= 1");
    require(K >= 1 && K <= N, ErrorKind::config, "scenario needs 1 <= K <= N");
    require(noise_variance > 0.0, ErrorKind::config, "noise variance must be positive");
    require(signal_variance() > 0.0, ErrorKind::config, "signal variance must be positive");
    require(group_size >= 1 && N % group_size == 0, ErrorKind::config, "group size must divide N");
    require(K <= N / group_size, ErrorKind::config, "more active groups than groups");
    if (variances == VarianceModel::uniform) bounds.validate();
    if (!support.empty()) require(static_cast<Index>(support.size()) == K, ErrorKind::config, "support size differs from K");
  }
};

struct DetectorSpec {
  Variant variant = Variant::aggregate;
  std::string label;
  /// Used by `detect` and as the default single threshold.
  double threshold = 10.0;
  /// false: models plug in sigma_min^2 from the scenario bounds.
  bool known_variance = true;
  /// false: sparsity-agnostic forms (parallel rule, unknown-K energy SGD).
  bool known_sparsity = true;
  /// Statistic run per k by the parallel rule.
  Variant inner = Variant::aggregate;
  Index K_max = 10;
  /// PSE partial support size; 0 means K.
  Index K_p = 0;
  SgdParams sgd{};
  std::size_t optimal_cap = OptimalDetector::kDefaultCap;

  std::string name() const { return label.empty() ? std::string(to_string(variant)) : label; }
};

struct ExperimentConfig {
  ScenarioSpec scenario;
  MatrixSpec matrix;
  std::vector<DetectorSpec> detectors;
  std::vector<double> thresholds;
  std::size_t trials = 1000;
  /// Trials for the no-change runs; 0 means `trials`.
  std::size_t arl_trials = 0;
  std::size_t horizon = 1'000'000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  /// When set, sweep reports one point per detector at this matched T_r.
  std::optional<double> target_arl;

  std::size_t no_change_trials() const { return arl_trials ? arl_trials : trials; }

  void validate() const {
    using detail::require;
    scenario.validate();
    require(trials >= 1, ErrorKind::config, "trials must be at least 1");
    require(horizon > scenario.nu, ErrorKind::config, "horizon must exceed the change point");
    require(!detectors.empty(), ErrorKind::config, "no detectors configured");
    for (std::size_t i = 1; i < thresholds.size(); ++i)
      require(thresholds[i] > thresholds[i - 1], ErrorKind::config, "thresholds must be strictly increasing");
    for (double t : thresholds) require(t > 0.0, ErrorKind::config, "thresholds must be positive");
    if (target_arl) require(*target_arl > 1.0, ErrorKind::config, "target ARL must exceed 1");
  }
};

// ---------------------------------------------------------------------------
// Parallel trials. Results land in index order, so the thread count never
// changes the output.

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  for (unsigned w = 0; w < count; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(n);
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Construction.

inline Fiducial resolve_fiducial(Index d, const std::string& file, std::uint64_t seed) {
  if (!file.empty()) {
    Fiducial f = load_fiducial(file);
    if (f.d != d)
      throw Error(ErrorKind::config, "fiducial file has dimension " + std::to_string(f.d) + ", expected " +
                                         std::to_string(d));
    return f;
  }
  if (has_bundled_fiducial(d)) return bundled_fiducial(d);
  Rng rng = Rng::stream(seed, {0x51C});
  return find_fiducial(d, rng);
}

inline SensingMatrix build_matrix(const MatrixSpec& spec, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, {0xA11, static_cast<std::uint64_t>(spec.kind)});
  const Index M = spec.M;
  const Index N = spec.N;
  switch (spec.kind) {
    case MatrixKind::unitary:
      detail::require(M == N && M >= 1, ErrorKind::config, "unitary matrix needs M == N");
      return unitary_dft(M);
    case MatrixKind::sic_povm: {
      const Fiducial f = resolve_fiducial(M, spec.fiducial_file, seed);
      if (spec.delta) {
        const CMat codes = sic_codes_for_offsets(f, *spec.delta);
        detail::require(spec.codes >= 1 && spec.codes <= codes.cols(), ErrorKind::invalid_input,
                        "SIC code capacity " + std::to_string(codes.cols()) + " below requested " +
                            std::to_string(spec.codes));
        return augment_with_offsets(codes.leftCols(spec.codes), *spec.delta, MatrixKind::sic_povm);
      }
      detail::require(N >= 1 && N <= M * M, ErrorKind::config, "SIC matrix needs N <= M^2");
      return sic_povm(f, N);
    }
    case MatrixKind::mub: return mub_select_columns(mub(M), N);
    case MatrixKind::amub: return amub_select_columns(amub(M), N);
    case MatrixKind::dft_rows: return random_matrix(RandomKind::dft_rows, M, N, rng);
    case MatrixKind::gaussian: return random_matrix(RandomKind::gaussian, M, N, rng);
    case MatrixKind::bernoulli: return random_matrix(RandomKind::bernoulli, M, N, rng);
    case MatrixKind::gold_augmented: {
      const Index delta = spec.delta.value_or(0);
      const CMat codes = gold_codes_for_offsets(gold_family(spec.gold_degree), delta);
      detail::require(spec.codes >= 1 && spec.codes <= codes.cols(), ErrorKind::invalid_input,
                      "Gold code capacity " + std::to_string(codes.cols()) + " below requested " +
                          std::to_string(spec.codes));
      return augment_with_offsets(codes.leftCols(spec.codes), delta, MatrixKind::gold_augmented);
    }
    case MatrixKind::custom:
      detail::require(!spec.file.empty(), ErrorKind::config, "custom matrix needs a file");
      return load_matrix(spec.file);
  }
  throw Error(ErrorKind::config, "unknown matrix kind");
}

/// Draws the trial's support and variances.
inline Scenario make_trial_scenario(const ScenarioSpec& spec, Rng& rng, ChangePoint change) {
  Scenario s;
  s.M = spec.M;
  s.N = spec.N;
  s.K = spec.K;
  s.noise_variance = spec.noise_variance;
  s.change_point = change;
  if (!spec.support.empty()) {
    s.support = spec.support;
  } else if (spec.group_size == 1) {
    s.support = random_support(spec.N, spec.K, rng);
  } else {
    const auto groups = random_support(spec.N / spec.group_size, spec.K, rng);
    for (Index g : groups) s.support.push_back(g * spec.group_size + rng.index(spec.group_size));
  }
  s.signal_variances.resize(spec.K);
  if (spec.variances == VarianceModel::common) {
    s.signal_variances.setConstant(spec.signal_variance());
  } else {
    for (Index k = 0; k < spec.K; ++k)
      s.signal_variances(k) = rng.uniform(spec.bounds.sigma_min_sq, spec.bounds.sigma_max_sq);
  }
  return s;
}

/// Everything a detector needs from the experiment.
struct DetectorContext {
  const SensingMatrix* A = nullptr;
  ScenarioSpec scenario;
  /// For PSE: A A* = c I.
  double row_scale = 0.0;
};

inline DetectorPtr build_single_k(const DetectorSpec& spec, Variant v, Index K, const DetectorContext& ctx,
                                  const Scenario* trial) {
  const SensingMatrix& A = *ctx.A;
  const ScenarioSpec& sc = ctx.scenario;
  const double alpha = A.coherence();
  const double sn = sc.noise_variance;
  const double sx = spec.known_variance ? sc.signal_variance() : sc.bounds.sigma_min_sq;
  const auto knowledge = spec.known_variance ? VarianceKnowledge::known : VarianceKnowledge::bounds;
  const std::optional<Index> k_opt = spec.known_sparsity ? std::optional<Index>(K) : std::nullopt;
  switch (v) {
    case Variant::ideal: {
      detail::require(trial != nullptr, ErrorKind::invalid_input, "ideal detector needs the trial scenario");
      CMat C0 = CMat::Identity(A.rows(), A.rows()) * sn;
      const CMat C1 = post_change_covariance(A, trial->support, trial->signal_variances, sn);
      return std::make_unique<IdealDetector>(GaussianVecModel(std::move(C0)), GaussianVecModel(C1));
    }
    case Variant::optimal:
      return std::make_unique<OptimalDetector>(A, K, sx, sn, spec.optimal_cap);
    case Variant::aggregate:
      return std::make_unique<AggregateDetector>(aggregate_model(alpha, K, sx, sn), K, A.cols());
    case Variant::energy:
      return std::make_unique<EnergyDetector>(energy_model(alpha, K, sx, sn, A.rows(), knowledge));
    case Variant::correlator:
      return std::make_unique<CorrelatorDetector>(correlator_model(alpha, K, A.cols(), sx, sn));
    case Variant::pse: {
      detail::require(ctx.row_scale > 0.0, ErrorKind::unsupported, "PSE needs a matrix with A A* = c I");
      const Index kp = spec.K_p ? spec.K_p : K;
      const double energy = ctx.row_scale * static_cast<double>(K) * sx;
      return std::make_unique<PseDetector>(pse_model(A.rows(), A.cols(), K, kp, energy, sn), sn);
    }
    case Variant::sgd_aggregate:
      return std::make_unique<SgdAggregateDetector>(K, A.cols(), sn, spec.sgd);
    case Variant::sgd_energy:
      return std::make_unique<SgdEnergyDetector>(A.rows(), sn, k_opt, sc.bounds.sigma_min_sq, spec.sgd);
    case Variant::sgd_correlator:
      return std::make_unique<SgdCorrelatorDetector>(alpha, k_opt, A.cols(), sc.bounds.sigma_min_sq, sn, spec.sgd);
    case Variant::parallel_k: break;
  }
  throw Error(ErrorKind::config, "cannot nest the parallel rule");
}

/// Builds a detector for one trial. Only the ideal detector depends on the
/// trial's support; callers may build once and reuse otherwise.
inline DetectorPtr build_detector(const DetectorSpec& spec, const DetectorContext& ctx, const Scenario* trial = nullptr) {
  if (spec.variant == Variant::parallel_k) {
    detail::require(spec.K_max >= 1 && spec.K_max <= ctx.A->cols(), ErrorKind::config, "K_max out of range");
    std::vector<DetectorPtr> per_k;
    for (Index k = 1; k <= spec.K_max; ++k) per_k.push_back(build_single_k(spec, spec.inner, k, ctx, trial));
    return std::make_unique<ParallelKDetector>(std::move(per_k));
  }
  return build_single_k(spec, spec.variant, ctx.scenario.K, ctx, trial);
}

inline bool needs_trial_scenario(const DetectorSpec& spec) {
  return spec.variant == Variant::ideal || (spec.variant == Variant::parallel_k && spec.inner == Variant::ideal);
}

inline bool uses_pse(const DetectorSpec& spec) {
  return spec.variant == Variant::pse || (spec.variant == Variant::parallel_k && spec.inner == Variant::pse);
}

// ---------------------------------------------------------------------------
// Record-high paths. The metric path does not depend on tau, so one run kept
// until the metric passes tau_cap gives the stopping time for every tau below
// it: T(tau) is the time of the first running-maximum record above tau.

struct PathRecord {
  std::vector<std::pair<std::size_t, double>> records;
  bool censored = false;
  std::size_t steps = 0;
  std::vector<Index> truth;
  /// Support estimate when the metric first passed each capture threshold.
  std::vector<std::vector<Index>> captures;

  /// Stopping time for tau below the cap, or nullopt when censored.
  std::optional<std::size_t> stop(double tau) const {
    const auto it = std::upper_bound(records.begin(), records.end(), tau,
                                     [](double v, const std::pair<std::size_t, double>& r) { return v < r.second; });
    if (it == records.end()) return std::nullopt;
    return it->first;
  }
};

enum class Phase : std::uint64_t { no_change = 1, delay = 2, pilot = 3 };

struct RunPlan {
  std::size_t nu = 0;  // ignored when no_change
  bool no_change = true;
  double tau_cap = std::numeric_limits<double>::infinity();
  std::size_t horizon = 1'000'000;
  std::vector<double> capture;  // sorted ascending, all <= tau_cap
};

class TrialRunner {
 public:
  TrialRunner(const ExperimentConfig& cfg, const SensingMatrix& A) : cfg_(cfg), A_(A) {
    ctx_.A = &A;
    ctx_.scenario = cfg.scenario;
    detail::require(A.rows() == cfg.scenario.M && A.cols() == cfg.scenario.N, ErrorKind::config,
                    "matrix is " + std::to_string(A.rows()) + "x" + std::to_string(A.cols()) + " but scenario is " +
                        std::to_string(cfg.scenario.M) + "x" + std::to_string(cfg.scenario.N));
    bool any_pse = false;
    for (const auto& d : cfg.detectors) any_pse = any_pse || uses_pse(d);
    if (any_pse) ctx_.row_scale = row_orthonormalize(A).second;
  }

  const DetectorContext& context() const { return ctx_; }
  const SensingMatrix& matrix() const { return A_; }

  /// Prototype for detectors that do not depend on the trial.
  DetectorPtr prototype(const DetectorSpec& spec) const {
    return needs_trial_scenario(spec) ? nullptr : build_detector(spec, ctx_);
  }

  /// Observation streams depend on (seed, phase, trial) only, so every
  /// detector sees the same observation paths.
  PathRecord run(const DetectorSpec& spec, const Detector* proto, Phase phase, std::size_t trial,
                 const RunPlan& plan) const {
    Rng rng = Rng::stream(cfg_.seed, {static_cast<std::uint64_t>(phase), trial});
    const ChangePoint change = plan.no_change ? ChangePoint::never() : ChangePoint::at(plan.nu);
    const Scenario sc = make_trial_scenario(cfg_.scenario, rng, change);
    const ObservationSource source(sc, A_);
    DetectorPtr det = proto ? proto->clone() : build_detector(spec, ctx_, &sc);
    det->reset();

    PathRecord rec;
    rec.truth = sc.support;
    rec.captures.resize(plan.capture.size());
    std::size_t next_capture = 0;
    Frame frame(A_.data());
    CVec y;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < plan.horizon; ++t) {
      source.next(t, rng, y);
      frame.reset(y);
      const double m = det->step(frame);
      if (m > best) {
        best = m;
        rec.records.emplace_back(t, m);
        while (next_capture < plan.capture.size() && m > plan.capture[next_capture]) {
          rec.captures[next_capture] = estimate_support(*det, y);
          ++next_capture;
        }
      }
      rec.steps = t + 1;
      if (m > plan.tau_cap) return rec;
    }
    rec.censored = true;
    return rec;
  }

  std::vector<PathRecord> run_many(const DetectorSpec& spec, Phase phase, std::size_t trials, const RunPlan& plan) const {
    const DetectorPtr proto = prototype(spec);
    std::vector<PathRecord> out(trials);
    parallel_for(trials, cfg_.threads, [&](std::size_t i) { out[i] = run(spec, proto.get(), phase, i, plan); });
    return out;
  }

  /// Aggregate-type detectors report their own estimate; the others run OMP
  /// on the observation at the stopping time.
  std::vector<Index> estimate_support(const Detector& det, const CVec& y) const {
    if (det.has_support_estimate()) return det.support_estimate();
    return omp(A_.data(), y, std::min(cfg_.scenario.K, A_.rows())).indices;
  }

 private:
  const ExperimentConfig& cfg_;
  const SensingMatrix& A_;
  DetectorContext ctx_;
};

// ---------------------------------------------------------------------------
// Estimates.

struct ArlEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t runs = 0;
  std::size_t censored = 0;
  /// Any censored run makes the mean a lower bound.
  bool lower_bound() const { return censored > 0; }
};

struct DelayEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t retained = 0;
  std::size_t false_alarms = 0;
  std::size_t censored = 0;
};

inline constexpr std::size_t kMinRetained = 10;

inline std::pair<double, double> mean_and_stderr(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

/// Censored runs count as the horizon.
inline ArlEstimate arl_from_paths(const std::vector<PathRecord>& paths, double tau, std::size_t horizon) {
  ArlEstimate est;
  std::vector<double> xs;
  xs.reserve(paths.size());
  for (const auto& p : paths) {
    const auto T = p.stop(tau);
    if (T) {
      xs.push_back(static_cast<double>(*T));
    } else {
      xs.push_back(static_cast<double>(horizon));
      ++est.censored;
    }
  }
  est.runs = paths.size();
  std::tie(est.mean, est.stderr_) = mean_and_stderr(xs);
  return est;
}

/// Mean of T - nu over runs with T >= nu.
inline DelayEstimate delay_from_paths(const std::vector<PathRecord>& paths, double tau, std::size_t nu,
                                      std::size_t horizon) {
  DelayEstimate est;
  std::vector<double> xs;
  for (const auto& p : paths) {
    const auto T = p.stop(tau);
    if (T && *T < nu) {
      ++est.false_alarms;
      continue;
    }
    if (!T) ++est.censored;
    xs.push_back(static_cast<double>(T ? *T : horizon) - static_cast<double>(nu));
  }
  est.retained = xs.size();
  if (est.retained < kMinRetained)
    throw Error(ErrorKind::insufficient_data, "only " + std::to_string(est.retained) +
                                                  " runs survived past the change point at tau=" + std::to_string(tau));
  std::tie(est.mean, est.stderr_) = mean_and_stderr(xs);
  return est;
}

struct StoppingReport {
  std::optional<std::size_t> T;
  bool censored = false;
  std::vector<Index> support_estimate;
  std::vector<Index> true_support;
  std::vector<double> trace;
};

/// One run at the detector's own threshold with a per-step trace.
inline StoppingReport run_trial(const ExperimentConfig& cfg, const SensingMatrix& A, const DetectorSpec& spec,
                                std::optional<std::size_t> nu, std::size_t trial_index) {
  cfg.validate();
  TrialRunner runner(cfg, A);
  Rng rng = Rng::stream(cfg.seed, {static_cast<std::uint64_t>(nu ? Phase::delay : Phase::no_change), trial_index});
  const Scenario sc = make_trial_scenario(cfg.scenario, rng, nu ? ChangePoint::at(*nu) : ChangePoint::never());
  const ObservationSource source(sc, A);
  DetectorPtr det = build_detector(spec, runner.context(), &sc);
  StoppingReport rep;
  rep.true_support = sc.support;
  Frame frame(A.data());
  CVec y;
  for (std::size_t t = 0; t < cfg.horizon; ++t) {
    source.next(t, rng, y);
    frame.reset(y);
    const double m = det->step(frame);
    rep.trace.push_back(m);
    if (det->fired(spec.threshold)) {
      rep.T = t;
      rep.support_estimate = runner.estimate_support(*det, y);
      return rep;
    }
  }
  rep.censored = true;
  return rep;
}

inline ArlEstimate estimate_arl(const ExperimentConfig& cfg, const SensingMatrix& A, const DetectorSpec& spec,
                                double tau, std::size_t trials) {
  TrialRunner runner(cfg, A);
  RunPlan plan;
  plan.no_change = true;
  plan.tau_cap = tau;
  plan.horizon = cfg.horizon;
  return arl_from_paths(runner.run_many(spec, Phase::no_change, trials, plan), tau, cfg.horizon);
}

inline DelayEstimate estimate_delay(const ExperimentConfig& cfg, const SensingMatrix& A, const DetectorSpec& spec,
                                    double tau, std::size_t trials, std::size_t nu = 20) {
  TrialRunner runner(cfg, A);
  RunPlan plan;
  plan.no_change = false;
  plan.nu = nu;
  plan.tau_cap = tau;
  plan.horizon = cfg.horizon;
  return delay_from_paths(runner.run_many(spec, Phase::delay, trials, plan), tau, nu, cfg.horizon);
}

// ---------------------------------------------------------------------------
// Curves.

struct CurvePoint {
  double tau = 0.0;
  ArlEstimate arl;
  DelayEstimate delay;
  /// Mean support recovery percentage at the stopping time (runs with T >= nu).
  std::optional<double> recovery_pct;
};

struct TradeoffCurve {
  std::string detector;
  std::vector<CurvePoint> points;
};

inline std::optional<double> recovery_from_paths(const std::vector<PathRecord>& paths, double tau, std::size_t nu,
                                                 std::size_t capture_slot) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : paths) {
    const auto T = p.stop(tau);
    if (!T || *T < nu || capture_slot >= p.captures.size() || p.captures[capture_slot].empty()) continue;
    sum += support_recovery_pct(p.captures[capture_slot], p.truth);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

/// All thresholds share one set of no-change paths and one set of change
/// paths; points along a curve therefore use common random numbers.
inline TradeoffCurve sweep_detector(const ExperimentConfig& cfg, const SensingMatrix& A, const DetectorSpec& spec) {
  detail::require(!cfg.thresholds.empty(), ErrorKind::config, "threshold grid is empty");
  TrialRunner runner(cfg, A);
  const double cap = cfg.thresholds.back();
  RunPlan arl_plan;
  arl_plan.no_change = true;
  arl_plan.tau_cap = cap;
  arl_plan.horizon = cfg.horizon;
  const auto arl_paths = runner.run_many(spec, Phase::no_change, cfg.no_change_trials(), arl_plan);

  RunPlan delay_plan = arl_plan;
  delay_plan.no_change = false;
  delay_plan.nu = cfg.scenario.nu;
  delay_plan.capture = cfg.thresholds;
  const auto delay_paths = runner.run_many(spec, Phase::delay, cfg.trials, delay_plan);

  TradeoffCurve curve;
  curve.detector = spec.name();
  for (std::size_t k = 0; k < cfg.thresholds.size(); ++k) {
    CurvePoint pt;
    pt.tau = cfg.thresholds[k];
    pt.arl = arl_from_paths(arl_paths, pt.tau, cfg.horizon);
    pt.delay = delay_from_paths(delay_paths, pt.tau, cfg.scenario.nu, cfg.horizon);
    pt.recovery_pct = recovery_from_paths(delay_paths, pt.tau, cfg.scenario.nu, k);
    curve.points.push_back(pt);
  }
  return curve;
}

struct MatchOptions {
  std::size_t pilot_trials = 100;
  double pilot_horizon_factor = 5.0;
  double pilot_overshoot = 1.5;
  int max_widen = 6;
};

/// Smallest tau on the (step-function) ARL curve with ARL(tau) >= target.
inline double bisect_arl(const std::vector<PathRecord>& paths, double target, double lo, double hi,
                         std::size_t horizon) {
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (arl_from_paths(paths, mid, horizon).mean >= target)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

/// Finds the threshold whose estimated T_r meets `target` (from above, to the
/// resolution of the step-function estimate) and measures the delay there.
inline CurvePoint match_arl(const ExperimentConfig& cfg, const SensingMatrix& A, const DetectorSpec& spec, double target,
                            const MatchOptions& opt = {}) {
  TrialRunner runner(cfg, A);
  const std::size_t pilot_horizon =
      std::min(cfg.horizon, static_cast<std::size_t>(std::ceil(opt.pilot_horizon_factor * target)));

  RunPlan pilot;
  pilot.no_change = true;
  pilot.horizon = pilot_horizon;
  const auto pilot_paths =
      runner.run_many(spec, Phase::pilot, std::min(opt.pilot_trials, cfg.no_change_trials()), pilot);
  double top = 0.0;
  for (const auto& p : pilot_paths)
    if (!p.records.empty()) top = std::max(top, p.records.back().second);
  double tau_hi = bisect_arl(pilot_paths, std::min(opt.pilot_overshoot * target, 0.9 * pilot_horizon), 0.0,
                             std::max(top, 1e-9), pilot_horizon);

  RunPlan main;
  main.no_change = true;
  main.horizon = cfg.horizon;
  std::vector<PathRecord> arl_paths;
  for (int widen = 0;; ++widen) {
    main.tau_cap = tau_hi;
    arl_paths = runner.run_many(spec, Phase::no_change, cfg.no_change_trials(), main);
    // Just below the cap every path has stopped, so this is the largest
    // reliable ARL the paths can answer for.
    const double at_cap = arl_from_paths(arl_paths, tau_hi * (1.0 - 1e-12), cfg.horizon).mean;
    if (at_cap >= target) break;
    if (widen == opt.max_widen)
      throw Error(ErrorKind::numeric, "threshold calibration failed: ARL " + std::to_string(at_cap) +
                                          " at tau=" + std::to_string(tau_hi) + " below target " +
                                          std::to_string(target));
    tau_hi = tau_hi * 1.5 + 1.0;
  }
  const double tau = bisect_arl(arl_paths, target, 0.0, tau_hi * (1.0 - 1e-12), cfg.horizon);

  RunPlan delay;
  delay.no_change = false;
  delay.nu = cfg.scenario.nu;
  delay.tau_cap = tau;
  delay.horizon = cfg.horizon;
  delay.capture = {tau};
  const auto delay_paths = runner.run_many(spec, Phase::delay, cfg.trials, delay);

  CurvePoint pt;
  pt.tau = tau;
  pt.arl = arl_from_paths(arl_paths, tau, cfg.horizon);
  pt.delay = delay_from_paths(delay_paths, tau, cfg.scenario.nu, cfg.horizon);
  pt.recovery_pct = recovery_from_paths(delay_paths, tau, cfg.scenario.nu, 0);
  return pt;
}

/// Threshold sweep, or one matched point per detector when target_arl is set.
inline std::vector<TradeoffCurve> sweep(const ExperimentConfig& cfg, const SensingMatrix& A) {
  cfg.validate();
  std::vector<TradeoffCurve> out;
  for (const auto& spec : cfg.detectors) {
    if (cfg.target_arl) {
      TradeoffCurve c;
      c.detector = spec.name();
      c.points.push_back(match_arl(cfg, A, spec, *cfg.target_arl));
      out.push_back(std::move(c));
    } else {
      out.push_back(sweep_detector(cfg, A, spec));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Support recovery at a fixed T_r.

struct RecoveryResult {
  std::string detector;
  CurvePoint point;
  double recovery_pct = 0.0;
};

inline constexpr double kCalibrationTolerance = 0.2;

inline std::vector<RecoveryResult> recovery_study(const ExperimentConfig& cfg, const SensingMatrix& A,
                                                  double target_arl) {
  cfg.validate();
  std::vector<RecoveryResult> out;
  for (const auto& spec : cfg.detectors) {
    RecoveryResult r;
    r.detector = spec.name();
    r.point = match_arl(cfg, A, spec, target_arl);
    if (std::abs(r.point.arl.mean - target_arl) > kCalibrationTolerance * target_arl)
      throw Error(ErrorKind::numeric, "calibration for " + r.detector + " reached T_r=" +
                                          std::to_string(r.point.arl.mean) + " against target " +
                                          std::to_string(target_arl));
    if (!r.point.recovery_pct) throw Error(ErrorKind::insufficient_data, "no runs to score support recovery");
    r.recovery_pct = *r.point.recovery_pct;
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Massive random access with timing offsets.

enum class CodeFamily { sic_povm, gold };

struct RandomAccessConfig {
  std::vector<CodeFamily> families{CodeFamily::sic_povm, CodeFamily::gold};
  /// Code length: SIC dimension d, or 2^n - 1 for Gold degree n.
  Index sic_dimension = 31;
  int gold_degree = 5;
  std::string fiducial_file;
  Index users = 300;
  Index delta = 2;
  Index active = 3;
  double snr_db = -10.0;
  double noise_variance = 1.0;
  std::size_t nu = 20;
  DetectorSpec detector{};
  double target_arl = 1000.0;
  std::size_t trials = 500;
  std::size_t arl_trials = 0;
  std::size_t horizon = 1'000'000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

inline std::string_view to_string(CodeFamily f) { return f == CodeFamily::sic_povm ? "sic_povm" : "gold"; }

inline Index code_capacity(CodeFamily f, const RandomAccessConfig& cfg) {
  if (f == CodeFamily::sic_povm) return cfg.sic_dimension * (cfg.sic_dimension / (cfg.delta + 1));
  const Index L = (Index{1} << cfg.gold_degree) - 1;
  return (L + 2) * (L / (cfg.delta + 1));
}

struct RandomAccessResult {
  CodeFamily family = CodeFamily::sic_povm;
  Index rows = 0;
  Index cols = 0;
  double coherence = 0.0;
  CurvePoint point;
  double identification_pct = 0.0;
};

inline MatrixSpec random_access_matrix_spec(CodeFamily f, const RandomAccessConfig& cfg) {
  MatrixSpec m;
  m.delta = cfg.delta;
  m.codes = cfg.users;
  if (f == CodeFamily::sic_povm) {
    m.kind = MatrixKind::sic_povm;
    m.M = cfg.sic_dimension;
    m.fiducial_file = cfg.fiducial_file;
  } else {
    m.kind = MatrixKind::gold_augmented;
    m.gold_degree = cfg.gold_degree;
  }
  return m;
}

inline std::vector<RandomAccessResult> random_access_experiment(const RandomAccessConfig& cfg) {
  detail::require(cfg.delta >= 0 && cfg.users >= 1 && cfg.active >= 1 && cfg.active <= cfg.users,
                  ErrorKind::config, "random access needs delta >= 0 and 1 <= active <= users");
  std::vector<RandomAccessResult> out;
  for (CodeFamily f : cfg.families) {
    const Index cap = code_capacity(f, cfg);
    if (cfg.users > cap)
      throw Error(ErrorKind::invalid_input, std::string(to_string(f)) + " codes support " + std::to_string(cap) +
                                                " users, " + std::to_string(cfg.users) + " requested");
    const SensingMatrix A = build_matrix(random_access_matrix_spec(f, cfg), cfg.seed);
    ExperimentConfig ec;
    ec.scenario.M = A.rows();
    ec.scenario.N = A.cols();
    ec.scenario.K = cfg.active;
    ec.scenario.snr_db = cfg.snr_db;
    ec.scenario.noise_variance = cfg.noise_variance;
    ec.scenario.group_size = cfg.delta + 1;
    ec.scenario.nu = cfg.nu;
    ec.detectors = {cfg.detector};
    ec.trials = cfg.trials;
    ec.arl_trials = cfg.arl_trials;
    ec.horizon = cfg.horizon;
    ec.seed = cfg.seed;
    ec.threads = cfg.threads;
    ec.validate();
    RandomAccessResult r;
    r.family = f;
    r.rows = A.rows();
    r.cols = A.cols();
    r.coherence = A.coherence();
    r.point = match_arl(ec, A, cfg.detector, cfg.target_arl);
    // A user counts when the selected column is its code at its true offset.
    r.identification_pct = r.point.recovery_pct.value_or(0.0);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace sparsecd
