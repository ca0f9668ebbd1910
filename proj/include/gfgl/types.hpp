#ifndef GFGL_TYPES_HPP_
#define GFGL_TYPES_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gfgl {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

//! Thrown on malformed or out-of-contract input (CLI maps this to exit 2).
class invalid_input : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

//! Thrown when a computation fails numerically (CLI maps this to exit 3).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! T x p observation matrix, rows are time-indexed observations x^(t).
template <typename Scalar = double>
struct TimeSeries {
  MatrixX<Scalar> data;

  Index time_points() const { return data.rows(); }
  Index dim() const { return data.cols(); }

  void validate() const {
    if (data.rows() < 1) throw invalid_input("time series needs at least one observation");
    if (data.cols() < 2) throw invalid_input("time series needs dimension p >= 2");
    if (!data.allFinite()) throw invalid_input("time series contains non-finite entries");
  }
};

//! Sequence of per-time rank-one empirical covariances S^(t) = x^(t) x^(t)'.
template <typename Scalar = double>
struct LocalCovarianceSeq {
  std::vector<MatrixX<Scalar>> matrices;

  Index time_points() const { return static_cast<Index>(matrices.size()); }
  Index dim() const { return matrices.empty() ? 0 : matrices.front().rows(); }
};

//! Sequence of T symmetric positive-definite precision matrices, optionally
//! annotated with the solver's exact jump pattern (entry t true means the
//! group-thresholded difference variable at t is nonzero; entry 0 is never set).
template <typename Scalar = double>
struct PrecisionSequence {
  std::vector<MatrixX<Scalar>> matrices;
  std::vector<bool> jump_indicators;  // empty when absent

  Index time_points() const { return static_cast<Index>(matrices.size()); }
  Index dim() const { return matrices.empty() ? 0 : matrices.front().rows(); }
  bool has_jump_indicators() const { return !jump_indicators.empty(); }
};

//! Ordered changepoints over a series of length T, stored 1-based: a
//! changepoint tau means the model at time tau differs from time tau-1,
//! so tau lies in [2, T]. Block separators are {1} u changepoints u {T+1}.
class Segmentation {
 public:
  Segmentation() = default;

  Segmentation(std::vector<int> changepoints, int t_len)
      : changepoints_(std::move(changepoints)), t_len_(t_len) {
    if (t_len_ < 1) throw invalid_input("segmentation needs T >= 1");
    int prev = 1;
    for (int cp : changepoints_) {
      if (cp <= prev || cp > t_len_)
        throw invalid_input("changepoints must be strictly increasing within [2, T]");
      prev = cp;
    }
  }

  const std::vector<int>& changepoints() const { return changepoints_; }
  int time_points() const { return t_len_; }
  int block_count() const { return static_cast<int>(changepoints_.size()) + 1; }

  //! {1, tau_1, ..., tau_K, T+1}
  std::vector<int> separators() const {
    std::vector<int> sep;
    sep.reserve(changepoints_.size() + 2);
    sep.push_back(1);
    sep.insert(sep.end(), changepoints_.begin(), changepoints_.end());
    sep.push_back(t_len_ + 1);
    return sep;
  }

  //! Length of block k (0-based), blocks partition [1, T].
  int block_length(int k) const {
    const auto sep = separators();
    return sep[k + 1] - sep[k];
  }

 private:
  std::vector<int> changepoints_;
  int t_len_ = 1;
};

//! Penalty weights: lambda1 on off-diagonal entries, lambda2 on the
//! Frobenius norm of consecutive differences.
template <typename Scalar = double>
struct RegularizationConfig {
  Scalar lambda1 = Scalar(0.1);
  Scalar lambda2 = Scalar(0.1);

  Scalar ratio() const { return lambda2 / lambda1; }

  void validate() const {
    if (!(lambda1 > Scalar(0))) throw invalid_input("lambda1 must be positive");
    if (!(lambda2 >= Scalar(0))) throw invalid_input("lambda2 must be nonnegative");
  }
};

//! Simulator output: per-block ground truth plus realized diagnostics.
//! Edge sets hold the off-diagonal support as 0-based (i, j) pairs with i < j.
template <typename Scalar = double>
struct GroundTruth {
  std::vector<MatrixX<Scalar>> block_covariances;
  std::vector<MatrixX<Scalar>> block_precisions;
  std::vector<int> true_changepoints;  // 1-based, strictly increasing
  std::vector<std::vector<std::pair<int, int>>> edge_sets;
  int t_len = 0;

  std::optional<Scalar> eta_min;   // min_k ||Sigma^(k) - Sigma^(k-1)||_F, absent when K = 0
  std::optional<Scalar> max_jump;  // max over block pairs, absent when K = 0
  Scalar phi_max = Scalar(0);      // max_k Lambda_max(Sigma^(k))

  int block_count() const { return static_cast<int>(block_precisions.size()); }
  Index dim() const { return block_precisions.empty() ? 0 : block_precisions.front().rows(); }
  Segmentation segmentation() const { return Segmentation(true_changepoints, t_len); }
};

//! S^(t) = x^(t) x^(t)', one rank-one outer product per observation.
template <typename Scalar>
LocalCovarianceSeq<Scalar> local_covariances(const TimeSeries<Scalar>& x) {
  x.validate();
  LocalCovarianceSeq<Scalar> out;
  out.matrices.reserve(static_cast<std::size_t>(x.time_points()));
  for (Index t = 0; t < x.time_points(); ++t) {
    const VectorX<Scalar> row = x.data.row(t).transpose();
    out.matrices.emplace_back(row * row.transpose());
  }
  return out;
}

namespace detail {

//! log det of a PD matrix via Cholesky; throws numerical_error naming t on failure.
template <typename Scalar>
Scalar logdet_pd(const MatrixX<Scalar>& a, Index t) {
  Eigen::LLT<MatrixX<Scalar>> llt(a);
  if (llt.info() != Eigen::Success)
    throw numerical_error("matrix at time index " + std::to_string(t + 1) +
                          " is not positive definite");
  return Scalar(2) * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

template <typename Scalar>
Scalar l1_offdiag(const MatrixX<Scalar>& a) {
  return a.cwiseAbs().sum() - a.diagonal().cwiseAbs().sum();
}

//! Objective over a raw matrix sequence (shared by solver history and oracles).
template <typename Scalar>
Scalar gfgl_objective_raw(const std::vector<MatrixX<Scalar>>& u,
                          const std::vector<MatrixX<Scalar>>& s,
                          const RegularizationConfig<Scalar>& reg) {
  Scalar value = Scalar(0);
  for (std::size_t t = 0; t < u.size(); ++t) {
    value += -logdet_pd(u[t], static_cast<Index>(t)) + s[t].cwiseProduct(u[t]).sum();
    value += reg.lambda1 * l1_offdiag(u[t]);
    if (t > 0) value += reg.lambda2 * (u[t] - u[t - 1]).norm();
  }
  return value;
}

}  // namespace detail

//! Full cost: sum_t [-log det U^(t) + tr(S^(t) U^(t))]
//!            + lambda1 sum_t sum_{i != j} |U^(t)_ij|
//!            + lambda2 sum_{t >= 2} ||U^(t) - U^(t-1)||_F.
//! Diagonals are never l1-penalized; the fusion term includes them.
template <typename Scalar>
Scalar gfgl_objective(const PrecisionSequence<Scalar>& u, const LocalCovarianceSeq<Scalar>& s,
                      const RegularizationConfig<Scalar>& reg) {
  reg.validate();
  if (u.time_points() != s.time_points())
    throw invalid_input("precision and covariance sequences differ in length");
  if (u.time_points() == 0) throw invalid_input("empty sequence");
  return detail::gfgl_objective_raw(u.matrices, s.matrices, reg);
}

}  // namespace gfgl

#endif  // GFGL_TYPES_HPP_
