#ifndef GFGL_EVALUATE_HPP_
#define GFGL_EVALUATE_HPP_

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "gfgl/matops.hpp"
#include "gfgl/rng.hpp"
#include "gfgl/segmentation.hpp"
#include "gfgl/types.hpp"

namespace gfgl {

template <typename Scalar = double>
struct ChangepointErrors {
  std::optional<int> max_error;  // present only when the counts agree
  int count_error = 0;           // K_hat - K
  int hausdorff_onesided = 0;    // worst distance from a true point to the estimate
};

template <typename Scalar = double>
ChangepointErrors<Scalar> changepoint_errors(const Segmentation& est, const Segmentation& truth) {
  if (est.time_points() != truth.time_points())
    throw invalid_input("changepoint_errors: segmentations cover different T");
  const auto& e = est.changepoints();
  const auto& t = truth.changepoints();
  ChangepointErrors<Scalar> out;
  out.count_error = static_cast<int>(e.size()) - static_cast<int>(t.size());
  if (e.size() == t.size()) {
    int worst = 0;
    for (std::size_t k = 0; k < t.size(); ++k) worst = std::max(worst, std::abs(e[k] - t[k]));
    out.max_error = worst;
  }
  int h = 0;
  for (const int tau : t) {
    int nearest = est.time_points();  // encodes "no estimate"
    for (const int hat : e) nearest = std::min(nearest, std::abs(hat - tau));
    h = std::max(h, nearest);
  }
  out.hausdorff_onesided = h;
  return out;
}

//! Sign agreement on the true support; `second` additionally demands exact
//! zeros (within zero_tol) off the support.
template <typename Scalar>
std::pair<bool, bool> sign_consistency(const MatrixX<Scalar>& theta_hat,
                                       const MatrixX<Scalar>& theta_true,
                                       Scalar zero_tol = Scalar(1e-9)) {
  if (theta_hat.rows() != theta_true.rows() || theta_hat.cols() != theta_true.cols())
    throw invalid_input("sign_consistency: dimension mismatch");
  bool event = true;
  bool exact_support = true;
  for (Index j = 0; j < theta_true.cols(); ++j) {
    for (Index i = 0; i < theta_true.rows(); ++i) {
      const Scalar truth = theta_true(i, j);
      const Scalar est = theta_hat(i, j);
      if (truth != Scalar(0)) {
        const bool est_zero = std::abs(est) <= zero_tol;
        if (est_zero || (est > Scalar(0)) != (truth > Scalar(0))) event = false;
      } else if (std::abs(est) > zero_tol) {
        exact_support = false;
      }
    }
  }
  return {event, event && exact_support};
}

namespace detail {

inline Index pair_count(Index p) { return p * (p + 1) / 2; }

//! Enumeration of unordered pairs (i <= j), row order.
inline std::vector<std::pair<Index, Index>> unordered_pairs(Index p) {
  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(pair_count(p)));
  for (Index i = 0; i < p; ++i)
    for (Index j = i; j < p; ++j) pairs.emplace_back(i, j);
  return pairs;
}

//! Fisher matrix over edge variables Z_(i,j) = X_i X_j - E[X_i X_j]:
//! entry ((i,j),(l,m)) = Sigma_il Sigma_jm + Sigma_im Sigma_jl.
template <typename Scalar>
MatrixX<Scalar> fisher_edge_matrix(const MatrixX<Scalar>& sigma) {
  const auto pairs = unordered_pairs(sigma.rows());
  const Index n = static_cast<Index>(pairs.size());
  MatrixX<Scalar> gamma(n, n);
  for (Index a = 0; a < n; ++a) {
    const auto [i, j] = pairs[static_cast<std::size_t>(a)];
    for (Index b = 0; b < n; ++b) {
      const auto [l, m] = pairs[static_cast<std::size_t>(b)];
      gamma(a, b) = sigma(i, l) * sigma(j, m) + sigma(i, m) * sigma(j, l);
    }
  }
  return gamma;
}

}  // namespace detail

template <typename Scalar = double>
struct IncoherenceResult {
  Scalar alpha = Scalar(1);
  Scalar k_gamma0 = Scalar(0);  // |||inv(Gamma_MM)|||_inf
  Scalar k_sigma0 = Scalar(0);  // |||Sigma|||_inf
};

//! Incoherence margin of one true block:
//!   alpha = 1 - max_{e in M-perp} || Gamma_{eM} inv(Gamma_MM) ||_1,
//! where Gamma is the Fisher matrix over edge variables and M is the support
//! of Theta (diagonal pairs included). An empty complement gives alpha = 1.
template <typename Scalar>
IncoherenceResult<Scalar> incoherence_alpha(const MatrixX<Scalar>& theta0,
                                            Scalar zero_tol = Scalar(0)) {
  const Index p = theta0.rows();
  if (p != theta0.cols()) throw invalid_input("incoherence_alpha: matrix must be square");
  if (p > 60) throw invalid_input("incoherence_alpha: p exceeds the supported limit of 60");
  Eigen::LLT<MatrixX<Scalar>> llt(theta0);
  if (llt.info() != Eigen::Success)
    throw invalid_input("incoherence_alpha: theta0 must be positive definite");
  MatrixX<Scalar> sigma = llt.solve(MatrixX<Scalar>::Identity(p, p));
  sigma = Scalar(0.5) * (sigma + sigma.transpose()).eval();

  const auto pairs = detail::unordered_pairs(p);
  const MatrixX<Scalar> gamma = detail::fisher_edge_matrix(sigma);

  std::vector<Index> in_support, out_support;
  for (Index a = 0; a < static_cast<Index>(pairs.size()); ++a) {
    const auto [i, j] = pairs[static_cast<std::size_t>(a)];
    if (std::abs(theta0(i, j)) > zero_tol)
      in_support.push_back(a);
    else
      out_support.push_back(a);
  }

  const Index m = static_cast<Index>(in_support.size());
  MatrixX<Scalar> gamma_mm(m, m);
  for (Index a = 0; a < m; ++a)
    for (Index b = 0; b < m; ++b) gamma_mm(a, b) = gamma(in_support[a], in_support[b]);

  Eigen::FullPivLU<MatrixX<Scalar>> lu(gamma_mm);
  if (!lu.isInvertible())
    throw numerical_error("incoherence_alpha: Gamma_MM is singular");
  const MatrixX<Scalar> gamma_mm_inv = lu.inverse();

  IncoherenceResult<Scalar> out;
  out.k_sigma0 = matrix_norms(sigma).operator_inf;
  out.k_gamma0 = matrix_norms(gamma_mm_inv).operator_inf;

  Scalar worst = Scalar(0);
  for (const Index e : out_support) {
    VectorX<Scalar> row(m);
    for (Index b = 0; b < m; ++b) row(b) = gamma(e, in_support[b]);
    worst = std::max(worst, (gamma_mm_inv.transpose() * row).cwiseAbs().sum());
  }
  out.alpha = Scalar(1) - worst;
  return out;
}

//! Monte-Carlo covariance of two edge variables under N(0, Sigma); the
//! independent check on the Fisher matrix entries.
template <typename Scalar>
Scalar edge_covariance_mc(const MatrixX<Scalar>& sigma, std::pair<Index, Index> e,
                          std::pair<Index, Index> f, int samples, std::uint64_t seed) {
  if (samples < 100) throw invalid_input("edge_covariance_mc: too few samples");
  Eigen::LLT<MatrixX<Scalar>> llt(sigma);
  if (llt.info() != Eigen::Success) throw invalid_input("edge_covariance_mc: sigma must be PD");
  const MatrixX<Scalar> chol = llt.matrixL();
  const Index p = sigma.rows();
  Rng rng(seed);
  VectorX<Scalar> z(p);
  Scalar sum_e = 0, sum_f = 0, sum_ef = 0;
  for (int s = 0; s < samples; ++s) {
    for (Index i = 0; i < p; ++i) z(i) = static_cast<Scalar>(rng.normal());
    const VectorX<Scalar> x = chol * z;
    const Scalar ze = x(e.first) * x(e.second);
    const Scalar zf = x(f.first) * x(f.second);
    sum_e += ze;
    sum_f += zf;
    sum_ef += ze * zf;
  }
  const Scalar n = Scalar(samples);
  return sum_ef / n - (sum_e / n) * (sum_f / n);
}

//! Constants and ratio diagnostics of one ground truth. Optional entries are
//! absent when undefined (no jumps, empty off-diagonal support, p too large
//! for the Fisher construction, or missing regularizers).
template <typename Scalar = double>
struct TheoryConstants {
  Scalar phi_max = Scalar(0);
  std::optional<Scalar> eta_min;
  std::optional<Scalar> max_jump;
  std::optional<Scalar> theta_min;  // min |Theta_ij| over off-diagonal support
  int max_degree = 0;
  int d_min = 0;  // smallest true block length
  Scalar k_sigma0 = Scalar(0);
  std::vector<Scalar> k_sigma0_blocks;
  std::optional<Scalar> k_gamma0;
  std::vector<Scalar> k_gamma0_blocks;
  std::vector<Scalar> alpha_blocks;
  std::optional<Scalar> alpha_min;
  std::optional<Scalar> beta1, beta2, beta3;  // regularization ratio diagnostics
  std::optional<Scalar> c_k, v_c, v_theta;    // rate-constant diagnostics
};

template <typename Scalar>
TheoryConstants<Scalar> theory_constants(
    const GroundTruth<Scalar>& truth,
    std::optional<RegularizationConfig<Scalar>> reg = std::nullopt,
    std::optional<Scalar> delta_t = std::nullopt) {
  TheoryConstants<Scalar> c;
  const Index p = truth.dim();
  const int blocks = truth.block_count();

  Scalar phi = Scalar(0);
  for (const auto& sigma : truth.block_covariances) {
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(sigma, Eigen::EigenvaluesOnly);
    phi = std::max(phi, es.eigenvalues().maxCoeff());
    c.k_sigma0_blocks.push_back(matrix_norms(sigma).operator_inf);
  }
  c.phi_max = phi;
  c.k_sigma0 = *std::max_element(c.k_sigma0_blocks.begin(), c.k_sigma0_blocks.end());

  c.eta_min = truth.eta_min;
  c.max_jump = truth.max_jump;
  if (!c.eta_min && blocks > 1) {
    Scalar eta = std::numeric_limits<Scalar>::infinity();
    for (int k = 1; k < blocks; ++k)
      eta = std::min(eta,
                     (truth.block_covariances[k] - truth.block_covariances[k - 1]).norm());
    c.eta_min = eta;
  }

  int degree = 0;
  Scalar tmin = std::numeric_limits<Scalar>::infinity();
  bool any_edge = false;
  for (const auto& theta : truth.block_precisions) {
    for (Index i = 0; i < p; ++i) {
      int deg = 0;
      for (Index j = 0; j < p; ++j) {
        if (i == j || theta(i, j) == Scalar(0)) continue;
        ++deg;
        any_edge = true;
        tmin = std::min(tmin, std::abs(theta(i, j)));
      }
      degree = std::max(degree, deg);
    }
  }
  c.max_degree = degree;
  if (any_edge) c.theta_min = tmin;

  {
    const auto sep = truth.segmentation().separators();
    int dmin = truth.t_len;
    for (std::size_t k = 0; k + 1 < sep.size(); ++k) dmin = std::min(dmin, sep[k + 1] - sep[k]);
    c.d_min = dmin;
  }

  if (p <= 60) {
    Scalar kg = Scalar(0), amin = Scalar(1);
    for (const auto& theta : truth.block_precisions) {
      const auto inc = incoherence_alpha(theta);
      c.k_gamma0_blocks.push_back(inc.k_gamma0);
      c.alpha_blocks.push_back(inc.alpha);
      kg = std::max(kg, inc.k_gamma0);
      amin = std::min(amin, inc.alpha);
    }
    c.k_gamma0 = kg;
    c.alpha_min = amin;
  }

  if (reg && c.eta_min) {
    reg->validate();
    const Scalar eta = *c.eta_min;
    if (reg->lambda2 > Scalar(0)) c.beta1 = eta * Scalar(c.d_min) / reg->lambda2;
    c.beta2 = eta / (reg->lambda1 * std::sqrt(Scalar(p * (p - 1))));
    if (delta_t && reg->lambda2 > Scalar(0))
      c.beta3 = eta * Scalar(truth.t_len) * (*delta_t) / reg->lambda2;
  }

  const int k_cp = blocks - 1;
  if (k_cp >= 1)
    c.c_k = Scalar(k_cp) * (Scalar(k_cp) * Scalar(k_cp) * std::pow(Scalar(2), Scalar(k_cp + 1)) +
                            Scalar(4));
  if (reg && c.alpha_min && *c.alpha_min > Scalar(0) && c.k_gamma0) {
    const Scalar rho = reg->ratio();
    const Scalar nk = Scalar(std::max(c.d_min, 1));
    const Scalar inner = Scalar(1) + Scalar(16) / *c.alpha_min * (Scalar(1) + Scalar(2) * rho / nk);
    const Scalar ks = c.k_sigma0, kg = *c.k_gamma0;
    c.v_c = Scalar(6) * inner * Scalar(c.max_degree) *
            std::max(ks * kg, kg * kg * ks * ks * ks);
    if (c.theta_min) c.v_theta = Scalar(2) * ks * inner / *c.theta_min;
  }
  return c;
}

//! Everything cmd-evaluate reports for one fit against one ground truth.
template <typename Scalar = double>
struct EvalReport {
  std::optional<int> cp_max_error;
  int cp_count_error = 0;
  int hausdorff_onesided = 0;
  std::vector<int> aligned_true_block;  // 0-based k_max per estimated block
  std::vector<bool> sign_event;
  std::vector<bool> support_recovered;
  std::vector<Scalar> err_max;  // ||Theta_hat^(k) - Theta0^(k_max)||_inf
  std::vector<Scalar> err_fro;
  std::vector<Scalar> alpha;  // per true block, empty when p > 60
  TheoryConstants<Scalar> constants;
};

template <typename Scalar>
EvalReport<Scalar> evaluate_fit(const Segmentation& est_seg,
                                const std::vector<MatrixX<Scalar>>& est_blocks,
                                const GroundTruth<Scalar>& truth,
                                std::optional<RegularizationConfig<Scalar>> reg = std::nullopt,
                                std::optional<Scalar> delta_t = std::nullopt) {
  if (static_cast<int>(est_blocks.size()) != est_seg.block_count())
    throw invalid_input("evaluate_fit: block count mismatch");
  const Segmentation truth_seg = truth.segmentation();
  if (est_seg.time_points() != truth_seg.time_points())
    throw invalid_input("evaluate_fit: fit and truth cover different T");

  EvalReport<Scalar> rep;
  const auto cp = changepoint_errors<Scalar>(est_seg, truth_seg);
  rep.cp_max_error = cp.max_error;
  rep.cp_count_error = cp.count_error;
  rep.hausdorff_onesided = cp.hausdorff_onesided;

  const OverlapAlignment align = max_overlap_alignment(est_seg, truth_seg);
  rep.aligned_true_block = align.k_max;
  for (std::size_t k = 0; k < est_blocks.size(); ++k) {
    const auto& target = truth.block_precisions[static_cast<std::size_t>(align.k_max[k])];
    const auto [event, exact] = sign_consistency(est_blocks[k], target);
    rep.sign_event.push_back(event);
    rep.support_recovered.push_back(exact);
    const MatrixX<Scalar> diff = est_blocks[k] - target;
    rep.err_max.push_back(diff.cwiseAbs().maxCoeff());
    rep.err_fro.push_back(diff.norm());
  }

  rep.constants = theory_constants(truth, reg, delta_t);
  rep.alpha = rep.constants.alpha_blocks;
  return rep;
}

}  // namespace gfgl

#endif  // GFGL_EVALUATE_HPP_
