#ifndef GFGL_MATOPS_HPP_
#define GFGL_MATOPS_HPP_

#include <cmath>

#include "gfgl/types.hpp"

namespace gfgl {

//! Spectral decomposition of a symmetric matrix: values ascending, columns
//! of `vectors` are the matching orthonormal eigenvectors.
template <typename Scalar = double>
struct EigenPair {
  VectorX<Scalar> values;
  MatrixX<Scalar> vectors;
};

//! Eigen-decomposition of (A + A')/2. Input is symmetrized first so callers
//! may pass matrices that are symmetric only up to roundoff.
template <typename Derived>
EigenPair<typename Derived::Scalar> sym_eigen(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() != a.cols()) throw invalid_input("sym_eigen: matrix must be square");
  const MatrixX<Scalar> sym = Scalar(0.5) * (a + a.transpose());
  if (!sym.allFinite()) throw numerical_error("sym_eigen: non-finite entries");
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(sym);
  if (es.info() != Eigen::Success) throw numerical_error("sym_eigen: decomposition failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

//! Per-eigenvalue update of the log-det proximal step,
//!   u = (-eta + sqrt(eta^2 + 8)) / 4,
//! the positive root of 2u^2 + eta*u - 1 = 0 (total quadratic weight 2,
//! unit algorithm weights). Always strictly positive.
template <typename Scalar>
Scalar logdet_prox_eigenvalue_map(Scalar eta) {
  return (-eta + std::sqrt(eta * eta + Scalar(8))) / Scalar(4);
}

//! Entrywise soft threshold on off-diagonal entries; the diagonal passes
//! through untouched.
template <typename Derived>
MatrixX<typename Derived::Scalar> soft_threshold_offdiag(const Eigen::MatrixBase<Derived>& a,
                                                         typename Derived::Scalar kappa) {
  using Scalar = typename Derived::Scalar;
  if (kappa < Scalar(0)) throw invalid_input("soft_threshold_offdiag: negative threshold");
  MatrixX<Scalar> out(a.rows(), a.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      const Scalar v = a(i, j);
      if (i == j) {
        out(i, j) = v;
      } else {
        const Scalar mag = std::abs(v) - kappa;
        out(i, j) = mag > Scalar(0) ? (v > Scalar(0) ? mag : -mag) : Scalar(0);
      }
    }
  }
  return out;
}

//! Frobenius-norm shrinkage of the whole matrix: Q * max(||Q||_F - kappa, 0) / ||Q||_F.
//! Returns an exactly zero matrix when ||Q||_F <= kappa (and for Q = 0).
template <typename Derived>
MatrixX<typename Derived::Scalar> group_soft_threshold(const Eigen::MatrixBase<Derived>& q,
                                                       typename Derived::Scalar kappa) {
  using Scalar = typename Derived::Scalar;
  if (kappa < Scalar(0)) throw invalid_input("group_soft_threshold: negative threshold");
  const Scalar norm = q.norm();
  if (norm <= kappa) return MatrixX<Scalar>::Zero(q.rows(), q.cols());
  return q * ((norm - kappa) / norm);
}

template <typename Scalar = double>
struct MatrixNorms {
  Scalar frobenius;
  Scalar max_abs;       // ||A||_inf, largest |entry|
  Scalar l1_offdiag;    // sum of |off-diagonal entries|
  Scalar operator_inf;  // max row absolute sum
};

template <typename Derived>
MatrixNorms<typename Derived::Scalar> matrix_norms(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  MatrixNorms<Scalar> n;
  n.frobenius = a.norm();
  n.max_abs = a.size() == 0 ? Scalar(0) : a.cwiseAbs().maxCoeff();
  n.l1_offdiag = a.cwiseAbs().sum() - a.diagonal().cwiseAbs().sum();
  n.operator_inf = a.size() == 0 ? Scalar(0) : a.cwiseAbs().rowwise().sum().maxCoeff();
  return n;
}

}  // namespace gfgl

#endif  // GFGL_MATOPS_HPP_
