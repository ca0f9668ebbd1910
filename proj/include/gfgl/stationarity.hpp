#ifndef GFGL_STATIONARITY_HPP_
#define GFGL_STATIONARITY_HPP_

#include <string>
#include <vector>

#include "gfgl/types.hpp"

namespace gfgl {

//! Subgradients of the two non-smooth penalty pieces evaluated at a candidate
//! solution. Entries whose value the candidate forces (nonzero entry, nonzero
//! difference) carry that value; the rest are marked free and set to zero,
//! which always lies inside the subdifferential. R2 slot 0 is identically
//! zero: the first difference carries no fusion penalty.
template <typename Scalar = double>
struct SubgradientPair {
  std::vector<MatrixX<Scalar>> R1;  // T matrices, entries in [-1, 1], zero diagonal
  std::vector<MatrixX<Scalar>> R2;  // T matrices, Frobenius norm <= 1
  std::vector<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>> free1;
  std::vector<bool> free2;
  std::vector<MatrixX<Scalar>> gamma;  // differences, gamma[0] = Theta^(1)

  bool within_bounds(Scalar slack = Scalar(1e-12)) const {
    for (const auto& r : R1)
      if (r.cwiseAbs().maxCoeff() > Scalar(1) + slack) return false;
    for (const auto& r : R2)
      if (r.norm() > Scalar(1) + slack) return false;
    return true;
  }
};

//! Classify every subgradient entry as forced or free at the candidate theta.
//! An l1 entry is forced to sign(Theta^(t)_ij) when |Theta^(t)_ij| > zero_tol
//! (the cumulative sum of differences up to t is exactly Theta^(t)); a fusion
//! matrix is forced to Gamma^(l)/||Gamma^(l)||_F when the difference is
//! nonzero. Solver output carries the exact activity pattern of the fusion
//! variables in jump_indicators; when present it overrides the tolerance test,
//! since consecutive matrices within a block agree only up to the solver
//! tolerance while the thresholded difference variable is exactly zero.
template <typename Scalar>
SubgradientPair<Scalar> build_subgradients(const PrecisionSequence<Scalar>& theta,
                                           Scalar zero_tol = Scalar(1e-9)) {
  if (zero_tol < Scalar(0)) throw invalid_input("build_subgradients: zero_tol must be >= 0");
  const Index t_len = theta.time_points();
  const Index p = theta.dim();
  SubgradientPair<Scalar> sg;
  sg.R1.reserve(t_len);
  sg.R2.reserve(t_len);
  sg.free1.reserve(t_len);
  sg.free2.assign(static_cast<std::size_t>(t_len), false);
  sg.gamma.reserve(t_len);

  for (Index t = 0; t < t_len; ++t) {
    const MatrixX<Scalar>& th = theta.matrices[t];
    MatrixX<Scalar> r1 = MatrixX<Scalar>::Zero(p, p);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> f1(p, p);
    f1.setConstant(false);
    for (Index j = 0; j < p; ++j) {
      for (Index i = 0; i < p; ++i) {
        if (i == j) continue;  // diagonal is unpenalized
        const Scalar v = th(i, j);
        if (std::abs(v) > zero_tol) {
          r1(i, j) = v > Scalar(0) ? Scalar(1) : Scalar(-1);
        } else {
          f1(i, j) = true;
        }
      }
    }
    sg.R1.push_back(std::move(r1));
    sg.free1.push_back(std::move(f1));

    sg.gamma.push_back(t == 0 ? th : MatrixX<Scalar>(th - theta.matrices[t - 1]));
    if (t == 0) {
      sg.R2.push_back(MatrixX<Scalar>::Zero(p, p));  // no fusion term at l = 1
    } else {
      const Scalar norm = sg.gamma[t].norm();
      const bool active =
          norm > zero_tol &&
          (!theta.has_jump_indicators() || theta.jump_indicators[static_cast<std::size_t>(t)]);
      if (active) {
        sg.R2.push_back(sg.gamma[t] / norm);
      } else {
        sg.R2.push_back(MatrixX<Scalar>::Zero(p, p));
        sg.free2[static_cast<std::size_t>(t)] = true;
      }
    }
  }
  return sg;
}

template <typename Scalar = double>
struct KktResult {
  Scalar max_residual = Scalar(0);
  std::vector<Scalar> per_l;  // element-max residual of the l-th condition
  bool feasible = true;
};

//! First-order optimality residual: for every l the empirical stationarity
//! condition
//!   sum_{t=l..T} (S^(t) - inv(Theta^(t))) + lambda1 sum_{t=l..T} R1^(t)
//!     + lambda2 R2^(l) = 0
//! must admit feasible subgradients. Forced entries are fixed by the
//! candidate; free l1 entries absorb up to lambda1 each and a free fusion
//! matrix absorbs up to lambda2 in Frobenius norm (implied values clipped into
//! the interval / unit ball). What remains is the reported violation.
template <typename Scalar>
KktResult<Scalar> kkt_residual(const PrecisionSequence<Scalar>& theta,
                               const LocalCovarianceSeq<Scalar>& s,
                               const RegularizationConfig<Scalar>& reg,
                               Scalar zero_tol = Scalar(1e-9)) {
  reg.validate();
  const Index t_len = theta.time_points();
  if (t_len != s.time_points())
    throw invalid_input("kkt_residual: sequence lengths differ");
  if (t_len == 0) throw invalid_input("kkt_residual: empty sequence");
  const Index p = theta.dim();

  std::vector<MatrixX<Scalar>> inv(static_cast<std::size_t>(t_len));
  for (Index t = 0; t < t_len; ++t) {
    Eigen::LLT<MatrixX<Scalar>> llt(theta.matrices[t]);
    if (llt.info() != Eigen::Success)
      throw numerical_error("kkt_residual: precision at time " + std::to_string(t + 1) +
                            " is singular or not positive definite");
    inv[static_cast<std::size_t>(t)] = llt.solve(MatrixX<Scalar>::Identity(p, p));
  }

  const SubgradientPair<Scalar> sg = build_subgradients(theta, zero_tol);

  KktResult<Scalar> out;
  out.per_l.assign(static_cast<std::size_t>(t_len), Scalar(0));
  out.feasible = sg.within_bounds();

  // Suffix sums of the smooth part, the forced l1 subgradients and the free
  // entry counts, walked from l = T down to 1.
  MatrixX<Scalar> smooth = MatrixX<Scalar>::Zero(p, p);
  MatrixX<Scalar> forced1 = MatrixX<Scalar>::Zero(p, p);
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> free_count =
      Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>::Zero(p, p);

  for (Index l = t_len - 1; l >= 0; --l) {
    smooth += s.matrices[l] - inv[static_cast<std::size_t>(l)];
    forced1 += sg.R1[static_cast<std::size_t>(l)];
    free_count += sg.free1[static_cast<std::size_t>(l)].template cast<int>();

    MatrixX<Scalar> z = smooth + reg.lambda1 * forced1;
    if (l >= 1) z += reg.lambda2 * sg.R2[static_cast<std::size_t>(l)];

    for (Index j = 0; j < p; ++j) {
      for (Index i = 0; i < p; ++i) {
        if (i == j) continue;
        const Scalar cap = reg.lambda1 * Scalar(free_count(i, j));
        const Scalar v = z(i, j);
        const Scalar mag = std::abs(v) - cap;
        z(i, j) = mag > Scalar(0) ? (v > Scalar(0) ? mag : -mag) : Scalar(0);
      }
    }

    if (l >= 1 && sg.free2[static_cast<std::size_t>(l)] && reg.lambda2 > Scalar(0)) {
      MatrixX<Scalar> r2 = -z / reg.lambda2;
      const Scalar norm = r2.norm();
      if (norm > Scalar(1)) r2 /= norm;
      z += reg.lambda2 * r2;
    }

    out.per_l[static_cast<std::size_t>(l)] = z.cwiseAbs().maxCoeff();
  }

  Scalar worst = Scalar(0);
  for (const Scalar r : out.per_l) worst = std::max(worst, r);
  out.max_residual = worst;
  return out;
}

}  // namespace gfgl

#endif  // GFGL_STATIONARITY_HPP_
