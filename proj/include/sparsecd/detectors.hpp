#pragma once

#include "sparsecd/recovery.hpp"
#include "sparsecd/statistics.hpp"
#include "sparsecd/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sparsecd {

enum class Variant {
  ideal,
  optimal,
  aggregate,
  energy,
  correlator,
  pse,
  sgd_aggregate,
  sgd_energy,
  sgd_correlator,
  parallel_k,
};

inline constexpr std::array<std::pair<Variant, std::string_view>, 10> kVariantNames{{
    {Variant::ideal, "ideal"},
    {Variant::optimal, "optimal"},
    {Variant::aggregate, "aggregate"},
    {Variant::energy, "energy"},
    {Variant::correlator, "correlator"},
    {Variant::pse, "pse"},
    {Variant::sgd_aggregate, "sgd_aggregate"},
    {Variant::sgd_energy, "sgd_energy"},
    {Variant::sgd_correlator, "sgd_correlator"},
    {Variant::parallel_k, "parallel_k"},
}};

inline std::string_view to_string(Variant v) {
  for (const auto& [k, name] : kVariantNames)
    if (k == v) return name;
  return "unknown";
}

inline Variant variant_from_string(std::string_view name) {
  for (const auto& [k, n] : kVariantNames)
    if (n == name) return k;
  throw Error(ErrorKind::config, "unknown detector variant '" + std::string(name) + "'");
}

inline double cusum_step(double W, double llr) { return std::max(W + llr, 0.0); }

/// theta + a (L(theta + c) - L(theta - c)) / c. For variance-like parameters
/// the lower evaluation point and the result are clamped at zero.
template <class LlrFn>
double sgd_update(double theta, LlrFn&& llr_at, double a, double c, bool nonnegative = true) {
  const double lo = nonnegative ? std::max(theta - c, 0.0) : theta - c;
  const double next = theta + a * (llr_at(theta + c) - llr_at(lo)) / c;
  return nonnegative ? std::max(next, 0.0) : next;
}

/// One observation with the derived statistics computed on demand, so that a
/// detector touching only the energy never pays for A* y.
class Frame {
 public:
  explicit Frame(const CMat& A) : A_(&A) {}

  void reset(const CVec& y) {
    y_ = &y;
    have_g_ = have_abs2_ = false;
  }

  const CMat& matrix() const { return *A_; }
  const CVec& y() const { return *y_; }

  const CVec& g() {
    if (!have_g_) {
      g_.noalias() = A_->adjoint() * *y_;
      have_g_ = true;
    }
    return g_;
  }

  const RVec& g_abs2() {
    if (!have_abs2_) {
      abs2_ = g().cwiseAbs2();
      have_abs2_ = true;
    }
    return abs2_;
  }

  double energy() const { return y_->squaredNorm(); }
  double max_corr() { return g_abs2().maxCoeff(); }

 private:
  const CMat* A_;
  const CVec* y_ = nullptr;
  CVec g_;
  RVec abs2_;
  bool have_g_ = false;
  bool have_abs2_ = false;
};

/// A CUSUM stopping rule. step() consumes one observation and returns the
/// decision metric; the rule fires at the first t with metric > tau.
class Detector {
 public:
  virtual ~Detector() = default;

  virtual Variant variant() const = 0;
  virtual void reset() = 0;
  virtual double step(Frame& frame) = 0;
  virtual std::unique_ptr<Detector> clone() const = 0;

  /// Every CUSUM component (for invariant checks).
  virtual std::vector<double> tracks() const { return {metric_}; }

  virtual bool has_support_estimate() const { return false; }
  virtual std::vector<Index> support_estimate() const { return {}; }

  /// Last LLR fed to the scalar track (NaN for multi-track variants).
  double last_llr() const noexcept { return last_llr_; }
  double metric() const noexcept { return metric_; }
  bool fired(double tau) const noexcept { return metric_ > tau; }

 protected:
  double metric_ = 0.0;
  double last_llr_ = std::numeric_limits<double>::quiet_NaN();
};

using DetectorPtr = std::unique_ptr<Detector>;

namespace detail {

template <class Derived>
class DetectorBase : public Detector {
 public:
  DetectorPtr clone() const override { return std::make_unique<Derived>(static_cast<const Derived&>(*this)); }
};

/// Indices of the k largest values, larger first, ties by ascending index.
inline std::vector<Index> top_k_indices(const RVec& W, Index k) {
  std::vector<Index> idx(static_cast<std::size_t>(W.size()));
  for (Index i = 0; i < W.size(); ++i) idx[static_cast<std::size_t>(i)] = i;
  const auto kk = static_cast<std::size_t>(std::min(k, W.size()));
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(kk), idx.end(),
                    [&](Index a, Index b) { return W(a) > W(b) || (W(a) == W(b) && a < b); });
  idx.resize(kk);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Sum of the k largest entries via partial selection.
inline double top_k_sum(const RVec& W, Index k, std::vector<double>& scratch) {
  const Index n = W.size();
  if (k >= n) return W.sum();
  scratch.assign(W.data(), W.data() + n);
  std::nth_element(scratch.begin(), scratch.begin() + (k - 1), scratch.end(), std::greater<>());
  double s = 0.0;
  for (Index i = 0; i < k; ++i) s += scratch[static_cast<std::size_t>(i)];
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Known support and covariance: full-vector Gaussian LLR.
class IdealDetector final : public detail::DetectorBase<IdealDetector> {
 public:
  IdealDetector(const GaussianVecModel& f0, const GaussianVecModel& f1) : llr_(f0, f1) {}
  explicit IdealDetector(QuadraticLlr llr) : llr_(std::move(llr)) {}

  Variant variant() const override { return Variant::ideal; }
  void reset() override { metric_ = 0.0; }
  double step(Frame& f) override {
    last_llr_ = llr_(f.y());
    metric_ = cusum_step(metric_, last_llr_);
    return metric_;
  }

 private:
  QuadraticLlr llr_;
};

/// One CUSUM per candidate support of size K (lexicographic order).
class OptimalDetector final : public detail::DetectorBase<OptimalDetector> {
 public:
  static constexpr std::size_t kDefaultCap = 10'000;

  static double binomial(Index n, Index k) {
    double r = 1.0;
    for (Index i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
  }

  OptimalDetector(const SensingMatrix& A, Index K, double sigma_x_sq, double sigma_n_sq,
                  std::size_t cap = kDefaultCap)
      : K_(K) {
    const Index N = A.cols();
    detail::require(K >= 1 && K <= N, ErrorKind::invalid_input, "need 1 <= K <= N");
    detail::require(sigma_x_sq > 0.0 && sigma_n_sq > 0.0, ErrorKind::invalid_input, "variances must be positive");
    const double count = binomial(N, K);
    if (count > static_cast<double>(cap))
      throw Error(ErrorKind::capacity, std::to_string(static_cast<long long>(count)) +
                                           " candidate supports exceed the cap of " + std::to_string(cap) +
                                           "; use the aggregate detector instead");
    // LLR(S) = g_S* H_S g_S + offset_S with H_S = (sigma_n^2/sigma_x^2 I + G_S)^{-1} / sigma_n^2
    // and offset_S = -log det(I + sigma_x^2/sigma_n^2 G_S), by the Woodbury identity.
    std::vector<Index> cand(static_cast<std::size_t>(K));
    for (Index i = 0; i < K; ++i) cand[static_cast<std::size_t>(i)] = i;
    const CMat& D = A.data();
    for (;;) {
      CMat AS(A.rows(), K);
      for (Index i = 0; i < K; ++i) AS.col(i) = D.col(cand[static_cast<std::size_t>(i)]);
      const CMat G = AS.adjoint() * AS;
      CMat inner = G;
      inner.diagonal().array() += sigma_n_sq / sigma_x_sq;
      Eigen::LLT<CMat> llt(inner);
      if (llt.info() != Eigen::Success) throw Error(ErrorKind::numeric, "candidate Gram matrix not positive definite");
      H_.push_back(llt.solve(CMat::Identity(K, K)) / sigma_n_sq);
      CMat B = (sigma_x_sq / sigma_n_sq) * G;
      B.diagonal().array() += 1.0;
      Eigen::LLT<CMat> lb(B);
      double logdet = 0.0;
      for (Index i = 0; i < K; ++i) logdet += 2.0 * std::log(lb.matrixL()(i, i).real());
      offset_.push_back(-logdet);
      candidates_.insert(candidates_.end(), cand.begin(), cand.end());
      // next combination
      Index i = K - 1;
      while (i >= 0 && cand[static_cast<std::size_t>(i)] == N - K + i) --i;
      if (i < 0) break;
      ++cand[static_cast<std::size_t>(i)];
      for (Index j = i + 1; j < K; ++j) cand[static_cast<std::size_t>(j)] = cand[static_cast<std::size_t>(j - 1)] + 1;
    }
    W_ = RVec::Zero(static_cast<Index>(H_.size()));
    gS_.resize(K);
  }

  Variant variant() const override { return Variant::optimal; }
  void reset() override {
    W_.setZero();
    metric_ = 0.0;
    best_ = 0;
  }

  double step(Frame& f) override {
    const CVec& g = f.g();
    double best = -1.0;
    for (std::size_t s = 0; s < H_.size(); ++s) {
      const Index* idx = &candidates_[s * static_cast<std::size_t>(K_)];
      for (Index i = 0; i < K_; ++i) gS_(i) = g(idx[i]);
      const double llr = gS_.dot(H_[s] * gS_).real() + offset_[s];
      const double w = cusum_step(W_(static_cast<Index>(s)), llr);
      W_(static_cast<Index>(s)) = w;
      if (w > best) {
        best = w;
        best_ = s;
      }
    }
    metric_ = best;
    return metric_;
  }

  std::size_t candidate_count() const noexcept { return H_.size(); }
  std::vector<Index> candidate(std::size_t s) const {
    const auto* p = &candidates_[s * static_cast<std::size_t>(K_)];
    return {p, p + K_};
  }
  /// Instantaneous LLR of candidate s (used by tests).
  double candidate_llr(std::size_t s, const CVec& g) const {
    CVec gS(K_);
    const Index* idx = &candidates_[s * static_cast<std::size_t>(K_)];
    for (Index i = 0; i < K_; ++i) gS(i) = g(idx[i]);
    return gS.dot(H_[s] * gS).real() + offset_[s];
  }

  std::vector<double> tracks() const override { return {W_.data(), W_.data() + W_.size()}; }
  bool has_support_estimate() const override { return true; }
  std::vector<Index> support_estimate() const override { return candidate(best_); }

 private:
  Index K_;
  std::vector<Index> candidates_;
  std::vector<CMat> H_;
  std::vector<double> offset_;
  RVec W_;
  CVec gS_;
  std::size_t best_ = 0;
};

/// Per-entry CUSUM tracks on |g_i|^2; metric is the sum of the K largest.
class AggregateDetector final : public detail::DetectorBase<AggregateDetector> {
 public:
  AggregateDetector(const AggregateEntryModel& model, Index K, Index N)
      : slope_(model.slope()), intercept_(model.intercept()), K_(K), W_(RVec::Zero(N)) {
    detail::require(K >= 1 && K <= N, ErrorKind::invalid_input, "need 1 <= K <= N");
  }

  Variant variant() const override { return Variant::aggregate; }
  void reset() override {
    W_.setZero();
    metric_ = 0.0;
  }

  double step(Frame& f) override {
    const RVec& a = f.g_abs2();
    W_ = (W_.array() + slope_ * a.array() + intercept_).cwiseMax(0.0);
    metric_ = detail::top_k_sum(W_, K_, scratch_);
    return metric_;
  }

  const RVec& entry_tracks() const noexcept { return W_; }
  std::vector<double> tracks() const override { return {W_.data(), W_.data() + W_.size()}; }
  bool has_support_estimate() const override { return true; }
  std::vector<Index> support_estimate() const override { return detail::top_k_indices(W_, K_); }

 private:
  double slope_;
  double intercept_;
  Index K_;
  RVec W_;
  std::vector<double> scratch_;
};

class EnergyDetector final : public detail::DetectorBase<EnergyDetector> {
 public:
  explicit EnergyDetector(const EnergyModel& model) : model_(model) {}

  Variant variant() const override { return Variant::energy; }
  void reset() override { metric_ = 0.0; }
  double step(Frame& f) override {
    last_llr_ = model_.llr(f.energy());
    metric_ = cusum_step(metric_, last_llr_);
    return metric_;
  }
  const EnergyModel& model() const noexcept { return model_; }

 private:
  EnergyModel model_;
};

class CorrelatorDetector final : public detail::DetectorBase<CorrelatorDetector> {
 public:
  explicit CorrelatorDetector(const CorrelatorModel& model) : model_(model) {}

  Variant variant() const override { return Variant::correlator; }
  void reset() override { metric_ = 0.0; }
  double step(Frame& f) override {
    last_llr_ = model_.llr(f.max_corr());
    metric_ = cusum_step(metric_, last_llr_);
    return metric_;
  }
  const CorrelatorModel& model() const noexcept { return model_; }

 private:
  CorrelatorModel model_;
};

/// Per-step OMP partial support, projection energy statistic. OMP runs on the
/// frame's matrix; scaling A to orthonormal rows changes neither the greedy
/// choices nor the projector, only the model's signal energy.
class PseDetector final : public detail::DetectorBase<PseDetector> {
 public:
  PseDetector(const PseModel& model, double sigma_n_sq, std::vector<Index> oracle_support = {})
      : model_(model), sigma_n_sq_(sigma_n_sq), oracle_(std::move(oracle_support)) {}

  Variant variant() const override { return Variant::pse; }
  void reset() override {
    metric_ = 0.0;
    support_.clear();
  }

  double step(Frame& f) override {
    double p = 0.0;
    if (oracle_.empty()) {
      const SupportEstimate est = omp_.solve(f.matrix(), f.y(), model_.K_p);
      p = omp_.projected_energy(f.y()) / sigma_n_sq_;
      support_ = est.indices;
    } else {
      p = pse_statistic(f.matrix(), f.y(), oracle_, sigma_n_sq_);
      support_ = oracle_;
    }
    last_stat_ = p;
    last_llr_ = model_.llr(p);
    metric_ = cusum_step(metric_, last_llr_);
    return metric_;
  }

  double last_statistic() const noexcept { return last_stat_; }
  bool has_support_estimate() const override { return true; }
  std::vector<Index> support_estimate() const override { return support_; }

 private:
  PseModel model_;
  double sigma_n_sq_;
  std::vector<Index> oracle_;
  OmpSolver omp_;
  std::vector<Index> support_;
  double last_stat_ = 0.0;
};

struct SgdParams {
  double a = 0.01;
  double c = 0.05;
};

/// Aggregate with one adaptive in-support variance theta_i per entry:
/// f1 = CN(0, sigma_n^2 + theta_i).
class SgdAggregateDetector final : public detail::DetectorBase<SgdAggregateDetector> {
 public:
  SgdAggregateDetector(Index K, Index N, double sigma_n_sq, SgdParams p)
      : K_(K), sigma_n_sq_(sigma_n_sq), p_(p), W_(RVec::Zero(N)), theta_(RVec::Zero(N)) {
    detail::require(K >= 1 && K <= N, ErrorKind::invalid_input, "need 1 <= K <= N");
  }

  Variant variant() const override { return Variant::sgd_aggregate; }
  void reset() override {
    W_.setZero();
    theta_.setZero();
    metric_ = 0.0;
  }

  double step(Frame& f) override {
    const RVec& a = f.g_abs2();
    for (Index i = 0; i < W_.size(); ++i) {
      const double u = a(i);
      auto L = [&](double th) { return cn_llr(u, sigma_n_sq_, sigma_n_sq_ + th); };
      W_(i) = cusum_step(W_(i), L(theta_(i)));
      theta_(i) = sgd_update(theta_(i), L, p_.a, p_.c);
    }
    metric_ = detail::top_k_sum(W_, K_, scratch_);
    return metric_;
  }

  const RVec& theta() const noexcept { return theta_; }
  std::vector<double> tracks() const override { return {W_.data(), W_.data() + W_.size()}; }
  bool has_support_estimate() const override { return true; }
  std::vector<Index> support_estimate() const override { return detail::top_k_indices(W_, K_); }

 private:
  Index K_;
  double sigma_n_sq_;
  SgdParams p_;
  RVec W_;
  RVec theta_;
  std::vector<double> scratch_;
};

class SgdEnergyDetector final : public detail::DetectorBase<SgdEnergyDetector> {
 public:
  /// K empty selects the unknown-sparsity parameterization.
  SgdEnergyDetector(Index M, double sigma_n_sq, std::optional<Index> K, double sigma_min_sq, SgdParams p)
      : M_(M), sigma_n_sq_(sigma_n_sq), K_(K), sigma_min_sq_(sigma_min_sq), p_(p) {}

  Variant variant() const override { return Variant::sgd_energy; }
  void reset() override {
    metric_ = 0.0;
    theta_ = 0.0;
  }

  double step(Frame& f) override {
    const double e = f.energy();
    auto L = [&](double th) { return energy_model_theta(th, M_, sigma_n_sq_, K_, sigma_min_sq_).llr(e); };
    last_llr_ = L(theta_);
    metric_ = cusum_step(metric_, last_llr_);
    theta_ = sgd_update(theta_, L, p_.a, p_.c);
    return metric_;
  }

  double theta() const noexcept { return theta_; }

 private:
  Index M_;
  double sigma_n_sq_;
  std::optional<Index> K_;
  double sigma_min_sq_;
  SgdParams p_;
  double theta_ = 0.0;
};

class SgdCorrelatorDetector final : public detail::DetectorBase<SgdCorrelatorDetector> {
 public:
  SgdCorrelatorDetector(double alpha, std::optional<Index> K, Index N, double sigma_min_sq, double sigma_n_sq,
                        SgdParams p)
      : alpha_(alpha), N_(N), sigma_min_sq_(sigma_min_sq), sigma_n_sq_(sigma_n_sq), p_(p) {
    if (!K) throw Error(ErrorKind::unsupported, "the correlator SGD detector needs a known sparsity level");
    K_ = *K;
  }

  Variant variant() const override { return Variant::sgd_correlator; }
  void reset() override {
    metric_ = 0.0;
    theta_ = 0.0;
  }

  double step(Frame& f) override {
    const double c = f.max_corr();
    auto L = [&](double th) {
      return correlator_model_theta(th, alpha_, K_, N_, sigma_min_sq_, sigma_n_sq_).llr(c);
    };
    last_llr_ = L(theta_);
    metric_ = cusum_step(metric_, last_llr_);
    theta_ = sgd_update(theta_, L, p_.a, p_.c);
    return metric_;
  }

  double theta() const noexcept { return theta_; }

 private:
  double alpha_;
  Index K_ = 1;
  Index N_;
  double sigma_min_sq_;
  double sigma_n_sq_;
  SgdParams p_;
  double theta_ = 0.0;
};

/// Runs one sub-detector per sparsity hypothesis k = 1..K_max; metric is the max.
class ParallelKDetector final : public Detector {
 public:
  explicit ParallelKDetector(std::vector<DetectorPtr> per_k) : tracks_(std::move(per_k)) {
    detail::require(!tracks_.empty(), ErrorKind::invalid_input, "parallel rule needs K_max >= 1");
  }

  ParallelKDetector(const ParallelKDetector& o) : Detector(o), best_(o.best_) {
    for (const auto& d : o.tracks_) tracks_.push_back(d->clone());
  }

  Variant variant() const override { return Variant::parallel_k; }
  DetectorPtr clone() const override { return std::make_unique<ParallelKDetector>(*this); }

  void reset() override {
    for (auto& d : tracks_) d->reset();
    metric_ = 0.0;
    best_ = 0;
  }

  double step(Frame& f) override {
    double best = -1.0;
    for (std::size_t k = 0; k < tracks_.size(); ++k) {
      const double m = tracks_[k]->step(f);
      if (m > best) {
        best = m;
        best_ = k;
      }
    }
    metric_ = best;
    return metric_;
  }

  std::size_t k_max() const noexcept { return tracks_.size(); }
  const Detector& track(std::size_t k) const { return *tracks_[k]; }
  /// 1-based sparsity hypothesis of the leading track.
  std::size_t leading_k() const noexcept { return best_ + 1; }

  std::vector<double> tracks() const override {
    std::vector<double> out;
    for (const auto& d : tracks_) {
      const auto t = d->tracks();
      out.insert(out.end(), t.begin(), t.end());
    }
    return out;
  }
  bool has_support_estimate() const override { return tracks_[best_]->has_support_estimate(); }
  std::vector<Index> support_estimate() const override { return tracks_[best_]->support_estimate(); }

 private:
  std::vector<DetectorPtr> tracks_;
  std::size_t best_ = 0;
};

}  // namespace sparsecd
