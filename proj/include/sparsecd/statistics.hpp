#pragma once

#include "sparsecd/model.hpp"
#include "sparsecd/projection.hpp"
#include "sparsecd/sensing_matrix.hpp"
#include "sparsecd/types.hpp"

#include <Eigen/Cholesky>

#include <cfloat>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sparsecd {

/// g = A* y.
inline CVec correlate(const SensingMatrix& A, const CVec& y) {
  detail::require(y.size() == A.rows(), ErrorKind::invalid_input, "observation length differs from matrix rows");
  return A.data().adjoint() * y;
}

/// log(1 - e^{-x}) for x > 0 without cancellation.
inline double log1mexp(double x) {
  return x < std::numbers::ln2 ? std::log(-std::expm1(-x)) : std::log1p(-std::exp(-x));
}

/// Real Gaussian N(mean, var).
struct Normal {
  double mean = 0.0;
  double var = 1.0;

  double log_pdf(double x) const {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
  }
};

/// log N(x; f1) - log N(x; f0).
inline double normal_llr(double x, const Normal& f0, const Normal& f1) {
  const double d0 = x - f0.mean;
  const double d1 = x - f1.mean;
  return 0.5 * (std::log(f0.var / f1.var) + d0 * d0 / f0.var - d1 * d1 / f1.var);
}

/// log CN(g; 0, var1) - log CN(g; 0, var0) as a function of |g|^2.
inline double cn_llr(double abs_sq, double var0, double var1) {
  return abs_sq * (1.0 / var0 - 1.0 / var1) + std::log(var0 / var1);
}

inline double cn_log_pdf(double abs_sq, double var) { return -std::log(std::numbers::pi * var) - abs_sq / var; }

// ---------------------------------------------------------------------------
// Full-vector Gaussian.

class GaussianVecModel {
 public:
  explicit GaussianVecModel(CMat covariance) : cov_(std::move(covariance)), llt_(cov_) {
    detail::require(cov_.rows() == cov_.cols(), ErrorKind::invalid_input, "covariance must be square");
    if (llt_.info() != Eigen::Success) throw Error(ErrorKind::numeric, "covariance is not positive definite");
    const auto L = llt_.matrixL();
    logdet_ = 0.0;
    for (Index i = 0; i < cov_.rows(); ++i) {
      const double d = L(i, i).real();
      if (!(d > 0.0)) throw Error(ErrorKind::numeric, "covariance is not positive definite");
      logdet_ += 2.0 * std::log(d);
    }
  }

  const CMat& covariance() const noexcept { return cov_; }
  double log_det() const noexcept { return logdet_; }
  Index dim() const noexcept { return cov_.rows(); }

  /// y* C^{-1} y.
  double quad(const CVec& y) const {
    const CVec w = llt_.matrixL().solve(y);
    return w.squaredNorm();
  }

  /// Complex Gaussian log density including the -M log(pi) term.
  double log_pdf(const CVec& y) const {
    return -static_cast<double>(dim()) * std::log(std::numbers::pi) - logdet_ - quad(y);
  }

  CMat inverse() const { return llt_.solve(CMat::Identity(dim(), dim())); }

 private:
  CMat cov_;
  Eigen::LLT<CMat> llt_;
  double logdet_ = 0.0;
};

inline double llr_gaussian_vec(const CVec& y, const GaussianVecModel& f0, const GaussianVecModel& f1) {
  detail::require(f0.dim() == f1.dim() && y.size() == f0.dim(), ErrorKind::invalid_input, "dimension mismatch");
  return f0.quad(y) - f1.quad(y) + f0.log_det() - f1.log_det();
}

/// The same LLR with (C0^{-1} - C1^{-1}) formed once, for per-step use.
class QuadraticLlr {
 public:
  QuadraticLlr(const GaussianVecModel& f0, const GaussianVecModel& f1)
      : Q_(f0.inverse() - f1.inverse()), offset_(f0.log_det() - f1.log_det()) {
    Q_ = (0.5 * (Q_ + Q_.adjoint())).eval();
  }

  double operator()(const CVec& y) const { return y.dot(Q_ * y).real() + offset_; }

  const CMat& matrix() const noexcept { return Q_; }
  double offset() const noexcept { return offset_; }

 private:
  CMat Q_;
  double offset_;
};

/// C1 = A_S C_x A_S* + sigma_n^2 I.
inline CMat post_change_covariance(const SensingMatrix& A, std::span<const Index> support, const RVec& variances,
                                   double sigma_n_sq) {
  CMat AS(A.rows(), static_cast<Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) AS.col(static_cast<Index>(k)) = A.col(support[k]);
  CMat C = AS * variances.asDiagonal() * AS.adjoint();
  C.diagonal().array() += sigma_n_sq;
  return C;
}

// ---------------------------------------------------------------------------
// Aggregate: per-entry model of g_i.

struct AggregateEntryModel {
  double var0 = 1.0;
  double var1_in = 1.0;
  double var1_out = 1.0;

  double log_f0(double abs_sq) const { return cn_log_pdf(abs_sq, var0); }
  double log_f1(double abs_sq) const { return cn_log_pdf(abs_sq, var1_in); }
  /// Per-entry LLR assuming the entry is in the support.
  double llr(double abs_sq) const { return cn_llr(abs_sq, var0, var1_in); }
  double slope() const { return 1.0 / var0 - 1.0 / var1_in; }
  double intercept() const { return std::log(var0 / var1_in); }
};

/// sigma_sq is the common signal variance, or sigma_min^2 when only bounds are known.
inline AggregateEntryModel aggregate_model(double alpha, Index K, double sigma_sq, double sigma_n_sq) {
  detail::require(alpha >= 0.0 && alpha <= 1.0, ErrorKind::invalid_input, "coherence must lie in [0, 1]");
  detail::require(sigma_n_sq > 0.0 && sigma_sq >= 0.0 && K >= 1, ErrorKind::invalid_input, "bad aggregate model inputs");
  const double a2 = alpha * alpha;
  AggregateEntryModel m;
  m.var0 = sigma_n_sq;
  m.var1_out = sigma_n_sq + static_cast<double>(K) * a2 * sigma_sq;
  m.var1_in = m.var1_out + (1.0 - a2) * sigma_sq;
  return m;
}

// ---------------------------------------------------------------------------
// Energy e = ||y||^2.

struct EnergyModel {
  double mu0 = 0.0;
  double var0 = 1.0;
  double mu1 = 0.0;
  double var1 = 1.0;
  double phi_min = 0.0;

  Normal f0() const { return {mu0, var0}; }
  Normal f1() const { return {mu1, var1}; }
  double log_f0(double e) const { return f0().log_pdf(e); }
  double log_f1(double e) const { return f1().log_pdf(e); }
  double llr(double e) const { return normal_llr(e, f0(), f1()); }
};

enum class VarianceKnowledge { known, bounds };

inline double gershgorin_phi_min(double sigma_sq, double alpha, Index K) {
  return std::max(0.0, sigma_sq * (1.0 - alpha * static_cast<double>(K - 1)));
}

/// Known: sigma_sq = sigma_x^2 and mu1 = K sigma_x^2 + M sigma_n^2 (trace).
/// Bounds: sigma_sq = sigma_min^2 and mu1 = K phi_min + M sigma_n^2.
/// Either way var1 = K phi_min^2 + 2 sigma_n^2 K phi_min + M sigma_n^4.
inline EnergyModel energy_model(double alpha, Index K, double sigma_sq, double sigma_n_sq, Index M,
                                VarianceKnowledge knowledge = VarianceKnowledge::known) {
  detail::require(sigma_n_sq > 0.0 && sigma_sq >= 0.0 && K >= 1 && M >= 1, ErrorKind::invalid_input,
                  "bad energy model inputs");
  const double k = static_cast<double>(K);
  const double m = static_cast<double>(M);
  EnergyModel e;
  e.mu0 = m * sigma_n_sq;
  e.var0 = m * sigma_n_sq * sigma_n_sq;
  e.phi_min = gershgorin_phi_min(sigma_sq, alpha, K);
  e.mu1 = (knowledge == VarianceKnowledge::known ? k * sigma_sq : k * e.phi_min) + m * sigma_n_sq;
  e.var1 = k * e.phi_min * e.phi_min + 2.0 * sigma_n_sq * k * e.phi_min + m * sigma_n_sq * sigma_n_sq;
  return e;
}

/// Energy post-change family indexed by theta. With known K, theta = phi_min;
/// with unknown K, theta = K phi_min and K phi_min^2 is replaced by theta sigma_min^2.
inline EnergyModel energy_model_theta(double theta, Index M, double sigma_n_sq, std::optional<Index> K,
                                      double sigma_min_sq) {
  const double m = static_cast<double>(M);
  EnergyModel e;
  e.mu0 = m * sigma_n_sq;
  e.var0 = m * sigma_n_sq * sigma_n_sq;
  if (K) {
    const double k = static_cast<double>(*K);
    e.phi_min = theta;
    e.mu1 = k * theta + m * sigma_n_sq;
    e.var1 = k * theta * theta + 2.0 * sigma_n_sq * k * theta + e.var0;
  } else {
    e.phi_min = theta;
    e.mu1 = theta + m * sigma_n_sq;
    e.var1 = sigma_min_sq * theta + 2.0 * sigma_n_sq * theta + e.var0;
  }
  return e;
}

/// Exact mean and variance of ||y||^2 given the non-zero eigenvalues of A_S C_x A_S*.
inline std::pair<double, double> energy_moments(const RVec& eigenvalues, double sigma_n_sq, Index M) {
  const double m = static_cast<double>(M);
  const double mean = eigenvalues.sum() + m * sigma_n_sq;
  const double var = eigenvalues.squaredNorm() + 2.0 * sigma_n_sq * eigenvalues.sum() + m * sigma_n_sq * sigma_n_sq;
  return {mean, var};
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x, double slack = 0.0) const { return x >= lo - slack && x <= hi + slack; }
};

inline std::vector<Interval> gershgorin_bounds(const RVec& signal_variances, double alpha) {
  const Index K = signal_variances.size();
  std::vector<Interval> out;
  out.reserve(static_cast<std::size_t>(K));
  for (Index i = 0; i < K; ++i) {
    detail::require(signal_variances(i) > 0.0, ErrorKind::invalid_input, "variances must be positive");
    double radius = 0.0;
    for (Index l = 0; l < K; ++l)
      if (l != i) radius += std::sqrt(signal_variances(i) * signal_variances(l));
    radius *= alpha;
    out.push_back({signal_variances(i) - radius, signal_variances(i) + radius});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Correlator c = max_i |g_i|^2.

struct CorrelatorModel {
  double lambda_n = 1.0;
  double lambda_0 = 1.0;
  double lambda_S = 1.0;
  Index N = 1;
  Index K = 1;

  static double clamp(double c) { return std::max(c, DBL_MIN); }

  double log_f0(double c) const {
    c = clamp(c);
    const double n = static_cast<double>(N);
    return std::log(n) + (n - 1.0) * log1mexp(lambda_n * c) + std::log(lambda_n) - lambda_n * c;
  }

  double log_f1(double c) const {
    c = clamp(c);
    const double k = static_cast<double>(K);
    const double rest = static_cast<double>(N - K);
    const double lS = log1mexp(lambda_S * c);
    const double l0 = log1mexp(lambda_0 * c);
    const double t1 = std::log(k) + (k - 1.0) * lS + std::log(lambda_S) - lambda_S * c + rest * l0;
    if (N == K) return t1;
    const double t2 = std::log(rest) + (rest - 1.0) * l0 + std::log(lambda_0) - lambda_0 * c + k * lS;
    const double hi = std::max(t1, t2);
    return hi + std::log1p(std::exp(std::min(t1, t2) - hi));
  }

  double llr(double c) const {
    detail::require(c >= 0.0, ErrorKind::invalid_input, "correlation statistic must be non-negative");
    return log_f1(c) - log_f0(c);
  }
};

inline CorrelatorModel correlator_model(double alpha, Index K, Index N, double sigma_sq, double sigma_n_sq) {
  detail::require(N >= K && K >= 1, ErrorKind::invalid_input, "need N >= K >= 1");
  detail::require(sigma_n_sq > 0.0 && sigma_sq >= 0.0, ErrorKind::invalid_input, "bad correlator model inputs");
  const double a2 = alpha * alpha;
  const double base = sigma_n_sq + static_cast<double>(K) * a2 * sigma_sq;
  CorrelatorModel m;
  m.lambda_n = 1.0 / sigma_n_sq;
  m.lambda_0 = 1.0 / base;
  m.lambda_S = 1.0 / (base + (1.0 - a2) * sigma_sq);
  m.N = N;
  m.K = K;
  return m;
}

/// Correlator family with theta the in-support variance inside lambda_S.
inline CorrelatorModel correlator_model_theta(double theta, double alpha, Index K, Index N, double sigma_min_sq,
                                              double sigma_n_sq) {
  CorrelatorModel m = correlator_model(alpha, K, N, sigma_min_sq, sigma_n_sq);
  const double a2 = alpha * alpha;
  m.lambda_S = 1.0 / (sigma_n_sq + static_cast<double>(K) * a2 * sigma_min_sq + (1.0 - a2) * theta);
  return m;
}

// ---------------------------------------------------------------------------
// Partial support estimation.

struct PseModel {
  Index K_p = 1;
  double noncentrality = 0.0;

  Normal f0() const { return {static_cast<double>(K_p), 2.0 * static_cast<double>(K_p)}; }
  Normal f1() const {
    const double kp = static_cast<double>(K_p);
    return {kp + noncentrality, 2.0 * (kp + 2.0 * noncentrality)};
  }
  double log_f0(double p) const { return f0().log_pdf(p); }
  double log_f1(double p) const { return f1().log_pdf(p); }
  double llr(double p) const { return normal_llr(p, f0(), f1()); }
};

inline PseModel pse_model(Index M, Index N, Index K, Index K_p, double expected_signal_energy, double sigma_n_sq) {
  if (K_p < 1 || K_p > K)
    throw Error(ErrorKind::invalid_input, "partial support size " + std::to_string(K_p) + " outside [1, K]");
  const double m = static_cast<double>(M);
  const double kp = static_cast<double>(K_p);
  const double k = static_cast<double>(K);
  PseModel p;
  p.K_p = K_p;
  p.noncentrality = (m * kp / (static_cast<double>(N) * k)) * (1.0 + (k - kp) / m) * expected_signal_energy / sigma_n_sq;
  return p;
}

/// ||P y||^2 / sigma_n^2 with P the projector onto span(A_S).
inline double pse_statistic(const CMat& A, const CVec& y, std::span<const Index> partial_support, double sigma_n_sq) {
  detail::require(!partial_support.empty(), ErrorKind::invalid_input, "partial support is empty");
  CMat AS(A.rows(), static_cast<Index>(partial_support.size()));
  for (std::size_t k = 0; k < partial_support.size(); ++k) AS.col(static_cast<Index>(k)) = A.col(partial_support[k]);
  const CMat Q = orthonormal_span(AS);
  return (Q.adjoint() * y).squaredNorm() / sigma_n_sq;
}

/// Returns A / sqrt(c) when A A* = c I (to tolerance), together with c. The
/// rescaled columns have norm 1/sqrt(c), so the result is a plain matrix.
inline std::pair<CMat, double> row_orthonormalize(const SensingMatrix& A, double tol = 1e-6) {
  const CMat G = A.data() * A.data().adjoint();
  const double c = G.diagonal().real().mean();
  const double dev = (G - c * CMat::Identity(A.rows(), A.rows())).cwiseAbs().maxCoeff();
  if (!(c > 0.0) || dev > tol * c)
    throw Error(ErrorKind::unsupported, "PSE needs a matrix with A A* proportional to I (deviation " +
                                            std::to_string(dev / c) + ")");
  return {A.data() / std::sqrt(c), c};
}

}  // namespace sparsecd
