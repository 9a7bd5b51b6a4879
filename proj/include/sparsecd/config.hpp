#pragma once

#include "sparsecd/harness.hpp"
#include "sparsecd/matrix_io.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>

namespace sparsecd {

using json = nlohmann::json;

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::config, where + " must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw Error(ErrorKind::config, "unknown key '" + key + "' in " + where);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace detail

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Scenario (the model's own type).

inline json to_json(const Scenario& s) {
  json j;
  j["M"] = s.M;
  j["N"] = s.N;
  j["K"] = s.K;
  j["support"] = s.support;
  j["signal_variances"] = std::vector<double>(s.signal_variances.data(), s.signal_variances.data() + s.signal_variances.size());
  j["noise_variance"] = s.noise_variance;
  j["change_point"] = s.change_point.is_never() ? json("never") : json(s.change_point.time());
  return j;
}

inline Scenario scenario_from_json(const json& j) {
  detail::check_keys(j, {"M", "N", "K", "support", "signal_variances", "noise_variance", "change_point"}, "scenario");
  Scenario s;
  s.M = detail::get_or<Index>(j, "M", 0);
  s.N = detail::get_or<Index>(j, "N", 0);
  s.K = detail::get_or<Index>(j, "K", 0);
  s.support = detail::get_or<std::vector<Index>>(j, "support", {});
  const auto v = detail::get_or<std::vector<double>>(j, "signal_variances", {});
  s.signal_variances = Eigen::Map<const RVec>(v.data(), static_cast<Index>(v.size()));
  s.noise_variance = detail::get_or<double>(j, "noise_variance", 1.0);
  if (!j.contains("change_point") || j.at("change_point") == "never")
    s.change_point = ChangePoint::never();
  else
    s.change_point = ChangePoint::at(detail::get_or<std::size_t>(j, "change_point", 0));
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::config, e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Experiment specs.

inline json to_json(const ScenarioSpec& s) {
  json j;
  j["M"] = s.M;
  j["N"] = s.N;
  j["K"] = s.K;
  if (s.snr_db) j["snr_db"] = *s.snr_db;
  else j["sigma_x_sq"] = s.sigma_x_sq;
  j["noise_variance"] = s.noise_variance;
  j["variances"] = s.variances == VarianceModel::common ? "common" : "uniform";
  j["sigma_min_sq"] = s.bounds.sigma_min_sq;
  j["sigma_max_sq"] = s.bounds.sigma_max_sq;
  if (!s.support.empty()) j["support"] = s.support;
  if (s.group_size != 1) j["group_size"] = s.group_size;
  j["nu"] = s.nu;
  return j;
}

inline ScenarioSpec scenario_spec_from_json(const json& j) {
  detail::check_keys(j,
                     {"M", "N", "K", "snr_db", "sigma_x_sq", "noise_variance", "variances", "sigma_min_sq",
                      "sigma_max_sq", "support", "group_size", "nu"},
                     "scenario");
  ScenarioSpec s;
  s.M = detail::get_or<Index>(j, "M", 0);
  s.N = detail::get_or<Index>(j, "N", s.M);
  s.K = detail::get_or<Index>(j, "K", 1);
  if (j.contains("snr_db") && j.contains("sigma_x_sq"))
    throw Error(ErrorKind::config, "give either snr_db or sigma_x_sq, not both");
  if (j.contains("snr_db")) s.snr_db = detail::get_or<double>(j, "snr_db", 0.0);
  s.sigma_x_sq = detail::get_or<double>(j, "sigma_x_sq", 1.0);
  s.noise_variance = detail::get_or<double>(j, "noise_variance", 1.0);
  const auto v = detail::get_or<std::string>(j, "variances", "common");
  if (v == "common") s.variances = VarianceModel::common;
  else if (v == "uniform") s.variances = VarianceModel::uniform;
  else throw Error(ErrorKind::config, "variances must be 'common' or 'uniform'");
  s.bounds.sigma_min_sq = detail::get_or<double>(j, "sigma_min_sq", 0.1);
  s.bounds.sigma_max_sq = detail::get_or<double>(j, "sigma_max_sq", 1.0);
  s.support = detail::get_or<std::vector<Index>>(j, "support", {});
  s.group_size = detail::get_or<Index>(j, "group_size", 1);
  s.nu = detail::get_or<std::size_t>(j, "nu", 20);
  return s;
}

inline json to_json(const MatrixSpec& m) {
  json j;
  j["kind"] = std::string(to_string(m.kind));
  j["M"] = m.M;
  j["N"] = m.N;
  if (!m.fiducial_file.empty()) j["fiducial_file"] = m.fiducial_file;
  if (!m.file.empty()) j["file"] = m.file;
  if (m.delta) {
    j["delta"] = *m.delta;
    j["codes"] = m.codes;
  }
  if (m.kind == MatrixKind::gold_augmented) j["gold_degree"] = m.gold_degree;
  return j;
}

inline MatrixSpec matrix_spec_from_json(const json& j, const ScenarioSpec* scenario = nullptr) {
  detail::check_keys(j, {"kind", "M", "N", "fiducial_file", "file", "delta", "codes", "gold_degree"}, "matrix");
  MatrixSpec m;
  m.kind = matrix_kind_from_string(detail::get_or<std::string>(j, "kind", "unitary"));
  m.M = detail::get_or<Index>(j, "M", scenario ? scenario->M : 0);
  m.N = detail::get_or<Index>(j, "N", scenario ? scenario->N : 0);
  m.fiducial_file = detail::get_or<std::string>(j, "fiducial_file", "");
  m.file = detail::get_or<std::string>(j, "file", "");
  if (j.contains("delta")) m.delta = detail::get_or<Index>(j, "delta", 0);
  m.codes = detail::get_or<Index>(j, "codes", 0);
  m.gold_degree = detail::get_or<int>(j, "gold_degree", 5);
  return m;
}

inline json to_json(const DetectorSpec& d) {
  json j;
  j["variant"] = std::string(to_string(d.variant));
  if (!d.label.empty()) j["label"] = d.label;
  j["threshold"] = d.threshold;
  j["known_variance"] = d.known_variance;
  j["known_sparsity"] = d.known_sparsity;
  if (d.variant == Variant::parallel_k) {
    j["inner"] = std::string(to_string(d.inner));
    j["K_max"] = d.K_max;
  }
  if (d.variant == Variant::pse) j["K_p"] = d.K_p;
  if (d.variant == Variant::sgd_aggregate || d.variant == Variant::sgd_energy || d.variant == Variant::sgd_correlator) {
    j["sgd_a"] = d.sgd.a;
    j["sgd_c"] = d.sgd.c;
  }
  if (d.variant == Variant::optimal) j["optimal_cap"] = d.optimal_cap;
  return j;
}

inline DetectorSpec detector_spec_from_json(const json& j) {
  detail::check_keys(j,
                     {"variant", "label", "threshold", "known_variance", "known_sparsity", "inner", "K_max", "K_p",
                      "sgd_a", "sgd_c", "optimal_cap"},
                     "detector");
  DetectorSpec d;
  d.variant = variant_from_string(detail::get_or<std::string>(j, "variant", "aggregate"));
  d.label = detail::get_or<std::string>(j, "label", "");
  d.threshold = detail::get_or<double>(j, "threshold", 10.0);
  d.known_variance = detail::get_or<bool>(j, "known_variance", true);
  d.known_sparsity = detail::get_or<bool>(j, "known_sparsity", true);
  d.inner = variant_from_string(detail::get_or<std::string>(j, "inner", "aggregate"));
  d.K_max = detail::get_or<Index>(j, "K_max", 10);
  d.K_p = detail::get_or<Index>(j, "K_p", 0);
  d.sgd.a = detail::get_or<double>(j, "sgd_a", 0.01);
  d.sgd.c = detail::get_or<double>(j, "sgd_c", 0.05);
  d.optimal_cap = detail::get_or<std::size_t>(j, "optimal_cap", OptimalDetector::kDefaultCap);
  if (!(d.threshold > 0.0)) throw Error(ErrorKind::config, "threshold must be positive");
  if (!(d.sgd.a >= 0.0 && d.sgd.c > 0.0)) throw Error(ErrorKind::config, "need sgd_a >= 0 and sgd_c > 0");
  return d;
}

inline json to_json(const ExperimentConfig& c) {
  json j;
  j["scenario"] = to_json(c.scenario);
  j["matrix"] = to_json(c.matrix);
  j["detectors"] = json::array();
  for (const auto& d : c.detectors) j["detectors"].push_back(to_json(d));
  j["thresholds"] = c.thresholds;
  j["trials"] = c.trials;
  j["arl_trials"] = c.arl_trials;
  j["horizon"] = c.horizon;
  j["seed"] = c.seed;
  if (c.target_arl) j["target_arl"] = *c.target_arl;
  return j;
}

inline ExperimentConfig experiment_from_json(const json& j) {
  detail::check_keys(j,
                     {"scenario", "matrix", "detectors", "thresholds", "trials", "arl_trials", "horizon", "seed",
                      "threads", "target_arl"},
                     "experiment");
  ExperimentConfig c;
  if (!j.contains("scenario")) throw Error(ErrorKind::config, "missing 'scenario'");
  c.scenario = scenario_spec_from_json(j.at("scenario"));
  c.matrix = matrix_spec_from_json(j.contains("matrix") ? j.at("matrix") : json::object(), &c.scenario);
  if (j.contains("detectors")) {
    if (!j.at("detectors").is_array()) throw Error(ErrorKind::config, "'detectors' must be a list");
    for (const auto& d : j.at("detectors")) c.detectors.push_back(detector_spec_from_json(d));
  }
  c.thresholds = detail::get_or<std::vector<double>>(j, "thresholds", {});
  c.trials = detail::get_or<std::size_t>(j, "trials", 1000);
  c.arl_trials = detail::get_or<std::size_t>(j, "arl_trials", 0);
  c.horizon = detail::get_or<std::size_t>(j, "horizon", 1'000'000);
  c.seed = detail::get_or<std::uint64_t>(j, "seed", 1);
  c.threads = detail::get_or<unsigned>(j, "threads", 1);
  if (j.contains("target_arl")) c.target_arl = detail::get_or<double>(j, "target_arl", 0.0);
  return c;
}

inline json to_json(const RandomAccessConfig& c) {
  json j;
  j["families"] = json::array();
  for (auto f : c.families) j["families"].push_back(std::string(to_string(f)));
  j["sic_dimension"] = c.sic_dimension;
  j["gold_degree"] = c.gold_degree;
  if (!c.fiducial_file.empty()) j["fiducial_file"] = c.fiducial_file;
  j["users"] = c.users;
  j["delta"] = c.delta;
  j["active"] = c.active;
  j["snr_db"] = c.snr_db;
  j["noise_variance"] = c.noise_variance;
  j["nu"] = c.nu;
  j["detector"] = to_json(c.detector);
  j["target_arl"] = c.target_arl;
  j["trials"] = c.trials;
  j["arl_trials"] = c.arl_trials;
  j["horizon"] = c.horizon;
  j["seed"] = c.seed;
  return j;
}

inline RandomAccessConfig random_access_from_json(const json& j) {
  detail::check_keys(j,
                     {"families", "sic_dimension", "gold_degree", "fiducial_file", "users", "delta", "active",
                      "snr_db", "noise_variance", "nu", "detector", "target_arl", "trials", "arl_trials", "horizon",
                      "seed", "threads"},
                     "random access config");
  RandomAccessConfig c;
  if (j.contains("families")) {
    c.families.clear();
    for (const auto& f : detail::get_or<std::vector<std::string>>(j, "families", {})) {
      if (f == "sic_povm") c.families.push_back(CodeFamily::sic_povm);
      else if (f == "gold") c.families.push_back(CodeFamily::gold);
      else throw Error(ErrorKind::config, "unknown code family '" + f + "'");
    }
  }
  c.sic_dimension = detail::get_or<Index>(j, "sic_dimension", 31);
  c.gold_degree = detail::get_or<int>(j, "gold_degree", 5);
  c.fiducial_file = detail::get_or<std::string>(j, "fiducial_file", "");
  c.users = detail::get_or<Index>(j, "users", 300);
  c.delta = detail::get_or<Index>(j, "delta", 2);
  c.active = detail::get_or<Index>(j, "active", 3);
  c.snr_db = detail::get_or<double>(j, "snr_db", -10.0);
  c.noise_variance = detail::get_or<double>(j, "noise_variance", 1.0);
  c.nu = detail::get_or<std::size_t>(j, "nu", 20);
  if (j.contains("detector")) c.detector = detector_spec_from_json(j.at("detector"));
  c.target_arl = detail::get_or<double>(j, "target_arl", 1000.0);
  c.trials = detail::get_or<std::size_t>(j, "trials", 500);
  c.arl_trials = detail::get_or<std::size_t>(j, "arl_trials", 0);
  c.horizon = detail::get_or<std::size_t>(j, "horizon", 1'000'000);
  c.seed = detail::get_or<std::uint64_t>(j, "seed", 1);
  c.threads = detail::get_or<unsigned>(j, "threads", 1);
  return c;
}

inline json load_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::config, "cannot open config '" + path + "'");
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, "cannot parse '" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Results.

inline std::string fmt(double v) { return detail::format_double(v); }

inline void write_curves_csv(std::ostream& os, const std::vector<TradeoffCurve>& curves) {
  os << "detector,tau,arl,arl_stderr,arl_runs,arl_censored,arl_lower_bound,delay,delay_stderr,delay_retained,"
        "false_alarms,delay_censored,recovery_pct\n";
  for (const auto& c : curves)
    for (const auto& p : c.points) {
      os << c.detector << ',' << fmt(p.tau) << ',' << fmt(p.arl.mean) << ',' << fmt(p.arl.stderr_) << ','
         << p.arl.runs << ',' << p.arl.censored << ',' << (p.arl.lower_bound() ? 1 : 0) << ',' << fmt(p.delay.mean)
         << ',' << fmt(p.delay.stderr_) << ',' << p.delay.retained << ',' << p.delay.false_alarms << ','
         << p.delay.censored << ',' << (p.recovery_pct ? fmt(*p.recovery_pct) : std::string()) << '\n';
    }
}

inline json matrix_summary(const SensingMatrix& A) {
  return {{"kind", std::string(to_string(A.kind()))}, {"rows", A.rows()}, {"cols", A.cols()}, {"coherence", A.coherence()}};
}

/// Sidecar with the canonical config, its hash and the seed. Wall time is
/// deliberately left out so reruns are byte-identical.
inline json provenance(const json& config) {
  const std::string canonical = config.dump();
  return {{"config", config}, {"config_hash", hex64(fnv1a(canonical))}, {"seed", config.value("seed", 0)},
          {"tool", "sparsecd"}};
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::config, "cannot write '" + path + "'");
  os << content;
  if (!os) throw Error(ErrorKind::config, "failed writing '" + path + "'");
}

}  // namespace sparsecd
