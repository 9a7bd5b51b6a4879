#pragma once

#include "sparsecd/rng.hpp"
#include "sparsecd/sensing_matrix.hpp"
#include "sparsecd/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace sparsecd {

/// Change point ν; `never()` models a run without change (ν = ∞).
class ChangePoint {
 public:
  static ChangePoint never() { return ChangePoint(); }
  static ChangePoint at(std::size_t t) { return ChangePoint(t); }

  bool is_never() const noexcept { return !time_; }

  std::size_t time() const {
    detail::require(time_.has_value(), ErrorKind::invalid_input, "change point is never");
    return *time_;
  }

  /// True when the observation at time t is drawn after the change.
  bool changed_by(std::size_t t) const noexcept { return time_ && t >= *time_; }

  friend bool operator==(const ChangePoint&, const ChangePoint&) = default;

 private:
  ChangePoint() = default;
  explicit ChangePoint(std::size_t t) : time_(t) {}

  std::optional<std::size_t> time_;
};

struct VarianceBounds {
  double sigma_min_sq = 0.0;
  double sigma_max_sq = 0.0;

  void validate() const {
    detail::require(sigma_min_sq > 0.0, ErrorKind::invalid_input, "sigma_min_sq must be positive");
    detail::require(sigma_max_sq >= sigma_min_sq, ErrorKind::invalid_input, "sigma_max_sq below sigma_min_sq");
  }
};

/// Generative description of one change-detection run. Support indices are
/// zero-based column indices of the sensing matrix.
struct Scenario {
  Index M = 0;
  Index N = 0;
  Index K = 0;
  std::vector<Index> support;
  RVec signal_variances;
  double noise_variance = 1.0;
  ChangePoint change_point = ChangePoint::never();

  /// `allow_zero_signal` admits σ_i² = 0, used only to test the degenerate limit.
  void validate(bool allow_zero_signal = false) const {
    using detail::require;
    require(M >= 1, ErrorKind::invalid_input, "M must be positive");
    require(N >= 1, ErrorKind::invalid_input, "N must be positive");
    require(K >= 1 && K <= N, ErrorKind::invalid_input, "K must lie in [1, N]");
    require(static_cast<Index>(support.size()) == K, ErrorKind::invalid_input, "support size differs from K");
    std::vector<Index> sorted = support;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), ErrorKind::invalid_input,
            "support indices must be distinct");
    require(sorted.front() >= 0 && sorted.back() < N, ErrorKind::invalid_input, "support index out of range");
    require(signal_variances.size() == K, ErrorKind::invalid_input, "need one signal variance per support index");
    for (Index i = 0; i < K; ++i) {
      const double v = signal_variances(i);
      require(allow_zero_signal ? v >= 0.0 : v > 0.0, ErrorKind::invalid_input, "signal variances must be positive");
    }
    require(noise_variance > 0.0, ErrorKind::invalid_input, "noise variance must be positive");
  }

  double signal_energy() const { return signal_variances.sum(); }
};

struct Observation {
  std::size_t t = 0;
  CVec y;
};

/// Common σ_x² with 10·log10(K σ_x² / (M σ_n²)) = snr_db.
inline double snr_to_sigma_x(double snr_db, Index M, Index K, double sigma_n_sq) {
  return static_cast<double>(M) * sigma_n_sq * std::pow(10.0, snr_db / 10.0) / static_cast<double>(K);
}

inline double snr_of_scenario(const Scenario& s, Index M) {
  return 10.0 * std::log10(s.signal_energy() / (static_cast<double>(M) * s.noise_variance));
}

inline double snr_of_scenario(const Scenario& s) { return snr_of_scenario(s, s.M); }

/// Draws K distinct indices from {0..N-1} (sorted).
inline std::vector<Index> random_support(Index N, Index K, Rng& rng) {
  std::vector<Index> pool(static_cast<std::size_t>(N));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < K; ++i) std::swap(pool[i], pool[i + rng.index(N - i)]);
  std::vector<Index> out(pool.begin(), pool.begin() + K);
  std::sort(out.begin(), out.end());
  return out;
}

/// Streams observations for one scenario. Holds the support columns scaled
/// by their standard deviations so each step costs O(M K) plus noise.
class ObservationSource {
 public:
  ObservationSource(const Scenario& scenario, const SensingMatrix& A, bool allow_zero_signal = false)
      : change_(scenario.change_point), noise_sd_(std::sqrt(scenario.noise_variance / 2.0)) {
    if (A.rows() != scenario.M || A.cols() != scenario.N)
      throw Error(ErrorKind::config, "sensing matrix is " + std::to_string(A.rows()) + "x" + std::to_string(A.cols()) +
                                         " but scenario needs " + std::to_string(scenario.M) + "x" +
                                         std::to_string(scenario.N));
    scenario.validate(allow_zero_signal);
    columns_.resize(scenario.M, scenario.K);
    for (Index k = 0; k < scenario.K; ++k)
      columns_.col(k) = A.col(scenario.support[static_cast<std::size_t>(k)]) *
                        std::sqrt(scenario.signal_variances(k) / 2.0);
  }

  Index dimension() const noexcept { return columns_.rows(); }

  /// Writes y[t] into `y` (resized as needed).
  void next(std::size_t t, Rng& rng, CVec& y) const {
    const Index m = columns_.rows();
    y.resize(m);
    for (Index i = 0; i < m; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      y(i) = cplx(noise_sd_ * re, noise_sd_ * im);
    }
    if (change_.changed_by(t)) {
      for (Index k = 0; k < columns_.cols(); ++k) {
        const double re = rng.normal();
        const double im = rng.normal();
        y.noalias() += columns_.col(k) * cplx(re, im);
      }
    }
  }

 private:
  ChangePoint change_;
  double noise_sd_;
  CMat columns_;  // a_i · sqrt(σ_i²/2) for i in S
};

inline Observation generate_observation(const Scenario& scenario, const SensingMatrix& A, std::size_t t, Rng& rng) {
  Observation obs{t, {}};
  ObservationSource(scenario, A).next(t, rng, obs.y);
  return obs;
}

}  // namespace sparsecd
