#ifndef GFGL_REFERENCE_HPP_
#define GFGL_REFERENCE_HPP_

#include <cmath>
#include <limits>
#include <vector>

#include "gfgl/rng.hpp"
#include "gfgl/types.hpp"

namespace gfgl {

template <typename Scalar = double>
struct OracleConfig {
  int restarts = 3;
  int subgrad_iters = 30000;
  Scalar tol = Scalar(1e-4);  // the oracle's own convergence tolerance
  std::uint64_t seed = 987654321;
};

template <typename Scalar = double>
struct OracleResult {
  Scalar objective = std::numeric_limits<Scalar>::infinity();
  std::vector<MatrixX<Scalar>> precisions;
  bool stabilized = true;  // false when the search budget ran out while still improving
};

namespace detail {

template <typename Scalar>
Scalar objective_or_inf(const std::vector<MatrixX<Scalar>>& u,
                        const std::vector<MatrixX<Scalar>>& s,
                        const RegularizationConfig<Scalar>& reg) {
  Scalar value = Scalar(0);
  for (std::size_t t = 0; t < u.size(); ++t) {
    Eigen::LLT<MatrixX<Scalar>> llt(u[t]);
    if (llt.info() != Eigen::Success) return std::numeric_limits<Scalar>::infinity();
    const Scalar logdet =
        Scalar(2) * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    if (!std::isfinite(logdet)) return std::numeric_limits<Scalar>::infinity();
    value += -logdet + s[t].cwiseProduct(u[t]).sum();
    value += reg.lambda1 * l1_offdiag(u[t]);
    if (t > 0) value += reg.lambda2 * (u[t] - u[t - 1]).norm();
  }
  return value;
}

//! Symmetrize and clamp eigenvalues to a small positive floor.
template <typename Scalar>
MatrixX<Scalar> project_pd(const MatrixX<Scalar>& a, Scalar floor = Scalar(1e-8)) {
  const MatrixX<Scalar> sym = Scalar(0.5) * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(sym);
  VectorX<Scalar> vals = es.eigenvalues();
  for (Index i = 0; i < vals.size(); ++i) vals(i) = std::max(vals(i), floor);
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

//! One subgradient of the full cost at the current point.
template <typename Scalar>
std::vector<MatrixX<Scalar>> full_subgradient(const std::vector<MatrixX<Scalar>>& u,
                                              const std::vector<MatrixX<Scalar>>& s,
                                              const RegularizationConfig<Scalar>& reg) {
  const std::size_t t_len = u.size();
  const Index p = u.front().rows();
  std::vector<MatrixX<Scalar>> g(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    Eigen::LLT<MatrixX<Scalar>> llt(u[t]);
    g[t] = -llt.solve(MatrixX<Scalar>::Identity(p, p)) + s[t];
    for (Index j = 0; j < p; ++j)
      for (Index i = 0; i < p; ++i)
        if (i != j && u[t](i, j) != Scalar(0))
          g[t](i, j) += reg.lambda1 * (u[t](i, j) > Scalar(0) ? Scalar(1) : Scalar(-1));
  }
  for (std::size_t t = 1; t < t_len; ++t) {
    const MatrixX<Scalar> diff = u[t] - u[t - 1];
    const Scalar norm = diff.norm();
    if (norm > Scalar(0)) {
      g[t] += reg.lambda2 * diff / norm;
      g[t - 1] -= reg.lambda2 * diff / norm;
    }
  }
  return g;
}

//! Derivative-free refinement: symmetric single-entry moves and synchronized
//! moves over contiguous time ranges (the latter walk along fused segments),
//! with geometrically shrinking steps. Returns false when a step level hit the
//! sweep cap while still improving.
template <typename Scalar>
bool pattern_polish(std::vector<MatrixX<Scalar>>& u, const std::vector<MatrixX<Scalar>>& s,
                    const RegularizationConfig<Scalar>& reg, Scalar& value) {
  const Index t_len = static_cast<Index>(u.size());
  const Index p = u.front().rows();
  bool stabilized = true;
  for (Scalar h = Scalar(0.25); h > Scalar(1e-9); h *= Scalar(0.5)) {
    bool improved = true;
    int sweeps = 0;
    while (improved && sweeps < 200) {
      improved = false;
      ++sweeps;
      for (Index i = 0; i < p; ++i) {
        for (Index j = i; j < p; ++j) {
          for (Index a = 0; a < t_len; ++a) {
            for (Index b = a; b < t_len; ++b) {
              for (const Scalar dir : {h, -h}) {
                for (Index t = a; t <= b; ++t) {
                  u[t](i, j) += dir;
                  if (i != j) u[t](j, i) += dir;
                }
                const Scalar cand = objective_or_inf(u, s, reg);
                if (cand < value) {
                  value = cand;
                  improved = true;
                } else {
                  for (Index t = a; t <= b; ++t) {
                    u[t](i, j) -= dir;
                    if (i != j) u[t](j, i) -= dir;
                  }
                }
              }
            }
          }
        }
      }
    }
    if (sweeps >= 200) stabilized = false;
  }
  return stabilized;
}

}  // namespace detail

//! Independent minimizer for desk-scale instances (p <= 3, T <= 10):
//! projected subgradient descent on the product of PD cones with diminishing
//! steps and several starts, then a shrinking-step pattern search. The result
//! is an upper bound on the minimum, accurate to about the configured
//! tolerance on these sizes.
template <typename Scalar>
OracleResult<Scalar> oracle_gfgl(const LocalCovarianceSeq<Scalar>& s,
                                 const RegularizationConfig<Scalar>& reg,
                                 const OracleConfig<Scalar>& cfg = {}) {
  reg.validate();
  const Index t_len = s.time_points();
  const Index p = s.dim();
  if (t_len < 1 || t_len > 10 || p > 3) throw invalid_input("oracle_gfgl: supports p <= 3, T <= 10");

  MatrixX<Scalar> pooled = MatrixX<Scalar>::Zero(p, p);
  for (const auto& m : s.matrices) pooled += m;
  pooled /= Scalar(t_len);
  MatrixX<Scalar> pooled_diag_inv = MatrixX<Scalar>::Identity(p, p);
  for (Index i = 0; i < p; ++i) {
    const Scalar d = pooled(i, i);
    pooled_diag_inv(i, i) = d > Scalar(1e-3) ? Scalar(1) / d : Scalar(1);
  }

  Rng rng(cfg.seed);
  OracleResult<Scalar> best;
  const std::vector<Scalar> step_scales = {Scalar(0.5), Scalar(0.1), Scalar(0.02)};
  for (int r = 0; r < cfg.restarts; ++r) {
    std::vector<MatrixX<Scalar>> u;
    if (r == 0) {
      u.assign(t_len, MatrixX<Scalar>::Identity(p, p));
    } else if (r == 1) {
      u.assign(t_len, pooled_diag_inv);
    } else {
      u.assign(t_len, MatrixX<Scalar>::Identity(p, p));
      for (auto& m : u)
        for (Index j = 0; j < p; ++j)
          for (Index i = 0; i <= j; ++i) {
            const Scalar jitter = Scalar(0.2) * Scalar(rng.normal());
            m(i, j) += jitter;
            if (i != j) m(j, i) += jitter;
          }
      for (auto& m : u) m = detail::project_pd(m, Scalar(0.05));
    }

    Scalar value = detail::objective_or_inf(u, s.matrices, reg);
    std::vector<MatrixX<Scalar>> best_u = u;
    Scalar best_value = value;
    const Scalar c = step_scales[static_cast<std::size_t>(r) % step_scales.size()];
    for (int k = 1; k <= cfg.subgrad_iters; ++k) {
      const auto g = detail::full_subgradient(u, s.matrices, reg);
      const Scalar step = c / std::sqrt(Scalar(k));
      for (Index t = 0; t < t_len; ++t)
        u[static_cast<std::size_t>(t)] =
            detail::project_pd<Scalar>(u[static_cast<std::size_t>(t)] - step * g[static_cast<std::size_t>(t)]);
      value = detail::objective_or_inf(u, s.matrices, reg);
      if (value < best_value) {
        best_value = value;
        best_u = u;
      }
    }
    if (best_value < best.objective) {
      best.objective = best_value;
      best.precisions = std::move(best_u);
    }
  }

  best.stabilized = detail::pattern_polish(best.precisions, s.matrices, reg, best.objective);
  return best;
}

//! Minimum over constant sequences: T times the single-block problem on the
//! pooled covariance with penalty lambda1 (the fusion term vanishes).
template <typename Scalar>
OracleResult<Scalar> oracle_constant_sequence(const LocalCovarianceSeq<Scalar>& s,
                                              const RegularizationConfig<Scalar>& reg,
                                              const OracleConfig<Scalar>& cfg = {}) {
  const Index t_len = s.time_points();
  const Index p = s.dim();
  MatrixX<Scalar> pooled = MatrixX<Scalar>::Zero(p, p);
  for (const auto& m : s.matrices) pooled += m;
  pooled /= Scalar(t_len);

  LocalCovarianceSeq<Scalar> single;
  single.matrices.push_back(pooled);
  OracleResult<Scalar> one = oracle_gfgl(single, reg, cfg);
  OracleResult<Scalar> out;
  out.objective = Scalar(t_len) * one.objective;
  out.precisions.assign(static_cast<std::size_t>(t_len), one.precisions.front());
  out.stabilized = one.stabilized;
  return out;
}

//! Value of the diagonal-restricted pooled problem; its minimizer is
//! diag(1 / pooled_ii) and the value is T * (sum_i log pooled_ii + p).
template <typename Scalar>
Scalar pooled_diagonal_objective(const LocalCovarianceSeq<Scalar>& s) {
  const Index t_len = s.time_points();
  const Index p = s.dim();
  MatrixX<Scalar> pooled = MatrixX<Scalar>::Zero(p, p);
  for (const auto& m : s.matrices) pooled += m;
  pooled /= Scalar(t_len);
  Scalar value = Scalar(0);
  for (Index i = 0; i < p; ++i) {
    if (!(pooled(i, i) > Scalar(0)))
      throw invalid_input("pooled_diagonal_objective: pooled diagonal must be positive");
    value += std::log(pooled(i, i)) + Scalar(1);
  }
  return Scalar(t_len) * value;
}

//! Closed form for the 2x2 single-block problem: the estimated covariance is
//! the sample covariance with its off-diagonal soft-thresholded by lambda1.
template <typename Scalar>
MatrixX<Scalar> glasso2x2_exact(const MatrixX<Scalar>& s, Scalar lambda1) {
  if (s.rows() != 2 || s.cols() != 2) throw invalid_input("glasso2x2_exact: need a 2x2 matrix");
  if (!(lambda1 > Scalar(0))) throw invalid_input("glasso2x2_exact: lambda1 must be positive");
  const Scalar off = s(0, 1);
  const Scalar mag = std::abs(off) - lambda1;
  const Scalar shrunk = mag > Scalar(0) ? (off > Scalar(0) ? mag : -mag) : Scalar(0);
  MatrixX<Scalar> w(2, 2);
  w << s(0, 0), shrunk, shrunk, s(1, 1);
  const Scalar det = w(0, 0) * w(1, 1) - shrunk * shrunk;
  if (!(det > Scalar(0)))
    throw numerical_error("glasso2x2_exact: shrunk covariance is not positive definite");
  MatrixX<Scalar> theta(2, 2);
  theta << w(1, 1) / det, -shrunk / det, -shrunk / det, w(0, 0) / det;
  return theta;
}

}  // namespace gfgl

#endif  // GFGL_REFERENCE_HPP_
