#ifndef GFGL_SOLVER_HPP_
#define GFGL_SOLVER_HPP_

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gfgl/matops.hpp"
#include "gfgl/types.hpp"

namespace gfgl {

template <typename Scalar = double>
struct SolverConfig {
  RegularizationConfig<Scalar> reg;
  Scalar gamma_v1 = Scalar(1);
  Scalar gamma_v2 = Scalar(1);
  Scalar gamma_w = Scalar(1);
  Scalar tol_primal = Scalar(1e-5);
  Scalar tol_dual = Scalar(1e-5);
  int max_iter = 2000;
  bool record_history = false;
  int threads = 1;

  void validate() const {
    reg.validate();
    if (!(tol_primal > Scalar(0)) || !(tol_dual > Scalar(0)))
      throw invalid_input("solver tolerances must be positive");
    if (max_iter < 1) throw invalid_input("max_iter must be positive");
    if (threads < 1) throw invalid_input("threads must be at least 1");
    // The closed-form eigenvalue update is derived for unit weights; other
    // settings are not supported.
    if (gamma_v1 != Scalar(1) || gamma_v2 != Scalar(1) || gamma_w != Scalar(1))
      throw invalid_input("only gamma_v1 = gamma_v2 = gamma_w = 1 is supported");
  }
};

//! All iterates of the splitting. Consensus variables V1 (length T) and V2
//! (length T-1) shadow the primal U; W (length T, slot 0 unused) carries the
//! group-thresholded differences V1^(t) - V2^(t-1). Slot i holds time t = i+1.
template <typename Scalar = double>
struct SolverState {
  std::vector<MatrixX<Scalar>> U, V1, V2, W;
  std::vector<MatrixX<Scalar>> dual_V1, dual_V2, dual_W;
  std::vector<MatrixX<Scalar>> prev_V1, prev_V2, prev_W;  // previous iterate
  int iteration = 0;
  Scalar eps_primal = std::numeric_limits<Scalar>::infinity();
  Scalar eps_dual = std::numeric_limits<Scalar>::infinity();

  Index time_points() const { return static_cast<Index>(U.size()); }
  Index dim() const { return U.empty() ? 0 : U.front().rows(); }

  static SolverState cold_start(Index t_len, Index p) {
    SolverState st;
    const MatrixX<Scalar> eye = MatrixX<Scalar>::Identity(p, p);
    const MatrixX<Scalar> zero = MatrixX<Scalar>::Zero(p, p);
    st.U.assign(t_len, eye);
    st.V1.assign(t_len, eye);
    st.V2.assign(t_len > 0 ? t_len - 1 : 0, eye);
    st.W.assign(t_len, eye);
    st.dual_V1.assign(t_len, zero);
    st.dual_V2.assign(st.V2.size(), zero);
    st.dual_W.assign(t_len, zero);
    st.prev_V1 = st.V1;
    st.prev_V2 = st.V2;
    st.prev_W = st.W;
    return st;
  }

  void validate_shapes(Index t_len, Index p) const {
    auto check = [&](const std::vector<MatrixX<Scalar>>& v, std::size_t n, const char* name) {
      if (v.size() != n) throw invalid_input(std::string("solver state: bad length for ") + name);
      for (const auto& m : v)
        if (m.rows() != p || m.cols() != p)
          throw invalid_input(std::string("solver state: bad shape in ") + name);
    };
    const auto t = static_cast<std::size_t>(t_len);
    check(U, t, "U");
    check(V1, t, "V1");
    check(V2, t - 1, "V2");
    check(W, t, "W");
    check(dual_V1, t, "dual_V1");
    check(dual_V2, t - 1, "dual_V2");
    check(dual_W, t, "dual_W");
    check(prev_V1, t, "prev_V1");
    check(prev_V2, t - 1, "prev_V2");
    check(prev_W, t, "prev_W");
  }
};

template <typename Scalar = double>
struct SolveResult {
  PrecisionSequence<Scalar> precisions;
  Segmentation segmentation;
  int iterations = 0;
  bool converged = false;
  Scalar final_objective = Scalar(0);
  Scalar eps_primal = std::numeric_limits<Scalar>::infinity();
  Scalar eps_dual = std::numeric_limits<Scalar>::infinity();
  std::vector<Scalar> jump_norms;  // ||W^(t)||_F per time, 0 at t = 1
  std::vector<std::pair<Scalar, Scalar>> residual_history;  // (eps_primal, eps_dual)
  std::vector<Scalar> objective_history;                    // evaluated at the primal U
};

//! Residuals of the current state.
//! Primal: worst violation of U = V1, U = V2 and the chain V1^(t) = V2^(t-1) + W^(t).
//! Dual: worst weighted change of (V1, V2, W) since the previous iteration.
template <typename Scalar>
std::pair<Scalar, Scalar> compute_residuals(const SolverState<Scalar>& st,
                                            Scalar gamma_v1 = Scalar(1),
                                            Scalar gamma_v2 = Scalar(1),
                                            Scalar gamma_w = Scalar(1)) {
  const Index t_len = st.time_points();
  Scalar ep = Scalar(0);
  Scalar ed = Scalar(0);
  for (Index i = 0; i < t_len; ++i) {
    ep = std::max(ep, (st.U[i] - st.V1[i]).norm());
    if (i + 1 < t_len) ep = std::max(ep, (st.U[i] - st.V2[i]).norm());
    if (i >= 1) ep = std::max(ep, (st.V1[i] - st.V2[i - 1] - st.W[i]).norm());
    ed = std::max(ed, gamma_v1 * (st.V1[i] - st.prev_V1[i]).norm());
    if (i + 1 < t_len) ed = std::max(ed, gamma_v2 * (st.V2[i] - st.prev_V2[i]).norm());
    if (i >= 1) ed = std::max(ed, gamma_w * (st.W[i] - st.prev_W[i]).norm());
  }
  return {ep, ed};
}

namespace detail {

//! Positive root of w u^2 + eta u - 1 = 0; the weight-2 case is the map in
//! matops, weight 1 covers a single quadratic target.
template <typename Scalar>
Scalar prox_eigenvalue_map(Scalar eta, Scalar weight) {
  return (-eta + std::sqrt(eta * eta + Scalar(4) * weight)) / (Scalar(2) * weight);
}

//! Primal update at slot i: closed-form log-det prox through the eigenvalue
//! map. Interior time points carry two consensus targets (quadratic weight 2),
//! the last one only the V1 target (weight 1).
template <typename Scalar>
void primal_update(const std::vector<MatrixX<Scalar>>& s, SolverState<Scalar>& st, Index i) {
  const Index t_len = st.time_points();
  MatrixX<Scalar> p = st.V1[i] - st.dual_V1[i];
  Scalar weight = Scalar(1);
  if (i + 1 < t_len) {
    p += st.V2[i] - st.dual_V2[i];
    weight = Scalar(2);
  }
  const EigenPair<Scalar> es = sym_eigen(s[i] - p);
  const VectorX<Scalar> mapped = es.values.unaryExpr(
      [weight](Scalar eta) { return prox_eigenvalue_map(eta, weight); });
  st.U[i] = es.vectors * mapped.asDiagonal() * es.vectors.transpose();
}

//! One full sweep: primal eigen-updates, V1/V2/W proximal updates in the
//! listed order (V2 reads the pre-sweep V1), then exact dual ascent.
template <typename Scalar>
void admm_iterate(const std::vector<MatrixX<Scalar>>& s, const SolverConfig<Scalar>& cfg,
                  SolverState<Scalar>& st) {
  const Index t_len = st.time_points();
  const Scalar l1 = cfg.reg.lambda1;
  const Scalar l2 = cfg.reg.lambda2;

  st.prev_V1 = st.V1;
  st.prev_V2 = st.V2;
  st.prev_W = st.W;

  if (cfg.threads > 1 && t_len > 1) {
    const Index n_workers = std::min<Index>(cfg.threads, t_len);
    const Index chunk = (t_len + n_workers - 1) / n_workers;
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(n_workers));
    for (Index w = 0; w < n_workers; ++w) {
      const Index lo = w * chunk;
      const Index hi = std::min(t_len, lo + chunk);
      workers.emplace_back([&, lo, hi] {
        for (Index i = lo; i < hi; ++i) primal_update(s, st, i);
      });
    }
    for (auto& th : workers) th.join();
  } else {
    for (Index i = 0; i < t_len; ++i) primal_update(s, st, i);
  }

  // First time point sees only the consensus target, so the plain threshold.
  st.V1[0] = soft_threshold_offdiag(st.U[0] + st.dual_V1[0], l1);
  for (Index i = 1; i < t_len; ++i) {
    const MatrixX<Scalar> target =
        Scalar(0.5) * ((st.U[i] + st.dual_V1[i]) + (st.V2[i - 1] + st.W[i] - st.dual_W[i]));
    // Two unit-weight quadratic terms, so the effective threshold halves.
    st.V1[i] = soft_threshold_offdiag(target, l1 / Scalar(2));
    st.V2[i - 1] = Scalar(0.5) * ((st.U[i - 1] + st.dual_V2[i - 1]) +
                                  (st.V1[i] - st.W[i] + st.dual_W[i]));
    const MatrixX<Scalar> q = st.V1[i] - st.V2[i - 1] + st.dual_W[i];
    st.W[i] = group_soft_threshold(q, l2);
  }

  for (Index i = 0; i < t_len; ++i) st.dual_V1[i] += st.U[i] - st.V1[i];
  for (Index i = 0; i + 1 < t_len; ++i) st.dual_V2[i] += st.U[i] - st.V2[i];
  for (Index i = 1; i < t_len; ++i) st.dual_W[i] += st.V1[i] - st.V2[i - 1] - st.W[i];

  st.iteration += 1;
  const auto [ep, ed] = compute_residuals(st, cfg.gamma_v1, cfg.gamma_v2, cfg.gamma_w);
  st.eps_primal = ep;
  st.eps_dual = ed;
}

//! Run to convergence from the given state, mutating it in place.
template <typename Scalar>
SolveResult<Scalar> solve_with_state(const LocalCovarianceSeq<Scalar>& s,
                                     const SolverConfig<Scalar>& cfg, SolverState<Scalar>& st) {
  cfg.validate();
  const Index t_len = s.time_points();
  if (t_len < 1) throw invalid_input("admm_solve: empty covariance sequence");
  const Index p = s.dim();
  st.validate_shapes(t_len, p);

  SolveResult<Scalar> result;
  bool converged = false;
  int iters = 0;
  for (; iters < cfg.max_iter;) {
    try {
      admm_iterate(s.matrices, cfg, st);
    } catch (const numerical_error& e) {
      throw numerical_error("iteration " + std::to_string(st.iteration + 1) + ": " + e.what());
    }
    ++iters;
    for (Index i = 0; i < t_len; ++i)
      if (!st.U[i].allFinite())
        throw numerical_error("non-finite iterate at iteration " + std::to_string(st.iteration));
    if (cfg.record_history) {
      result.residual_history.emplace_back(st.eps_primal, st.eps_dual);
      result.objective_history.push_back(detail::gfgl_objective_raw(st.U, s.matrices, cfg.reg));
    }
    if (st.eps_primal <= cfg.tol_primal && st.eps_dual <= cfg.tol_dual) {
      converged = true;
      break;
    }
  }

  // Report from V1: soft-thresholding leaves exact zeros there, and the group
  // step leaves an exact jump pattern in W.
  PrecisionSequence<Scalar> theta;
  theta.matrices.reserve(static_cast<std::size_t>(t_len));
  theta.jump_indicators.assign(static_cast<std::size_t>(t_len), false);
  result.jump_norms.assign(static_cast<std::size_t>(t_len), Scalar(0));
  std::vector<int> cps;
  for (Index i = 0; i < t_len; ++i) {
    MatrixX<Scalar> th = Scalar(0.5) * (st.V1[i] + st.V1[i].transpose());
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(th, Eigen::EigenvaluesOnly);
    const Scalar min_eig = es.eigenvalues().minCoeff();
    if (min_eig < Scalar(-1e-8))
      throw numerical_error("returned precision at time " + std::to_string(i + 1) +
                            " is not positive semidefinite (min eigenvalue " +
                            std::to_string(static_cast<double>(min_eig)) + ")");
    if (min_eig <= Scalar(0)) th += Scalar(1e-8) * MatrixX<Scalar>::Identity(p, p);
    theta.matrices.push_back(std::move(th));
    if (i >= 1) {
      result.jump_norms[static_cast<std::size_t>(i)] = st.W[i].norm();
      if (!(st.W[i].array() == Scalar(0)).all()) {
        theta.jump_indicators[static_cast<std::size_t>(i)] = true;
        cps.push_back(static_cast<int>(i) + 1);
      }
    }
  }

  result.precisions = std::move(theta);
  result.segmentation = Segmentation(std::move(cps), static_cast<int>(t_len));
  result.iterations = iters;
  result.converged = converged;
  result.eps_primal = st.eps_primal;
  result.eps_dual = st.eps_dual;
  result.final_objective = gfgl_objective(result.precisions, s, cfg.reg);
  return result;
}

}  // namespace detail

//! Minimize the GFGL objective by the multi-block splitting, starting cold
//! (U = V = W = I, duals zero).
template <typename Scalar>
SolveResult<Scalar> admm_solve(const LocalCovarianceSeq<Scalar>& s,
                               const SolverConfig<Scalar>& cfg) {
  auto st = SolverState<Scalar>::cold_start(s.time_points(), s.dim());
  return detail::solve_with_state(s, cfg, st);
}

//! Same contract as admm_solve but starting from a caller-supplied state.
template <typename Scalar>
SolveResult<Scalar> warm_start_solve(const LocalCovarianceSeq<Scalar>& s,
                                     const SolverConfig<Scalar>& cfg,
                                     SolverState<Scalar> init) {
  return detail::solve_with_state(s, cfg, init);
}

template <typename Scalar = double>
struct PathPoint {
  Scalar lambda2 = Scalar(0);
  int k_hat = 0;
  Scalar objective = Scalar(0);
  Scalar eps_primal = Scalar(0);
  Scalar eps_dual = Scalar(0);
  int iterations = 0;
  bool converged = false;
};

template <typename Scalar = double>
struct PathResult {
  std::vector<PathPoint<Scalar>> points;             // descending lambda2
  std::optional<Scalar> selected_lambda2;            // largest grid value with k_hat == target
  int total_iterations = 0;
};

//! Sweep a lambda2 grid from largest to smallest with warm starts. When
//! target_k is given, also report the largest grid value whose solution has
//! exactly that many changepoints.
template <typename Scalar>
PathResult<Scalar> sweep_lambda2(const LocalCovarianceSeq<Scalar>& s, SolverConfig<Scalar> cfg,
                                 std::vector<Scalar> lambda2_grid,
                                 std::optional<int> target_k = std::nullopt) {
  if (lambda2_grid.empty()) throw invalid_input("lambda2 grid is empty");
  std::sort(lambda2_grid.begin(), lambda2_grid.end(), std::greater<Scalar>());
  PathResult<Scalar> out;
  auto st = SolverState<Scalar>::cold_start(s.time_points(), s.dim());
  for (const Scalar l2 : lambda2_grid) {
    cfg.reg.lambda2 = l2;
    const SolveResult<Scalar> res = detail::solve_with_state(s, cfg, st);
    PathPoint<Scalar> pt;
    pt.lambda2 = l2;
    pt.k_hat = static_cast<int>(res.segmentation.changepoints().size());
    pt.objective = res.final_objective;
    pt.eps_primal = st.eps_primal;
    pt.eps_dual = st.eps_dual;
    pt.iterations = res.iterations;
    pt.converged = res.converged;
    out.total_iterations += res.iterations;
    if (target_k && !out.selected_lambda2 && pt.k_hat == *target_k) out.selected_lambda2 = l2;
    out.points.push_back(pt);
  }
  return out;
}

}  // namespace gfgl

#endif  // GFGL_SOLVER_HPP_
