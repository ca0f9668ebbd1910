#ifndef GFGL_SEGMENTATION_HPP_
#define GFGL_SEGMENTATION_HPP_

#include <vector>

#include "gfgl/types.hpp"

namespace gfgl {

//! Changepoints of a precision sequence: {t >= 2 : ||Theta^(t) - Theta^(t-1)||_F > tol_cp}.
//! With tol_cp = 0 and solver jump indicators present, the indicators are used
//! verbatim (they carry the exact pattern of the group-thresholded variables).
template <typename Scalar>
Segmentation extract_changepoints(const PrecisionSequence<Scalar>& theta,
                                  Scalar tol_cp = Scalar(1e-6)) {
  if (tol_cp < Scalar(0)) throw invalid_input("extract_changepoints: tol_cp must be >= 0");
  const Index t_len = theta.time_points();
  if (t_len < 1) throw invalid_input("extract_changepoints: empty sequence");
  std::vector<int> cps;
  if (tol_cp == Scalar(0) && theta.has_jump_indicators()) {
    for (Index i = 1; i < t_len; ++i)
      if (theta.jump_indicators[static_cast<std::size_t>(i)]) cps.push_back(static_cast<int>(i) + 1);
  } else {
    for (Index i = 1; i < t_len; ++i)
      if ((theta.matrices[i] - theta.matrices[i - 1]).norm() > tol_cp)
        cps.push_back(static_cast<int>(i) + 1);
  }
  return Segmentation(std::move(cps), static_cast<int>(t_len));
}

//! Element-wise average of Theta^(t) over each block.
template <typename Scalar>
std::vector<MatrixX<Scalar>> block_precisions(const PrecisionSequence<Scalar>& theta,
                                              const Segmentation& seg) {
  if (seg.time_points() != static_cast<int>(theta.time_points()))
    throw invalid_input("block_precisions: segmentation length mismatch");
  const auto sep = seg.separators();
  std::vector<MatrixX<Scalar>> blocks;
  blocks.reserve(static_cast<std::size_t>(seg.block_count()));
  for (int k = 0; k < seg.block_count(); ++k) {
    MatrixX<Scalar> acc = MatrixX<Scalar>::Zero(theta.dim(), theta.dim());
    for (int t = sep[k]; t < sep[k + 1]; ++t) acc += theta.matrices[t - 1];
    blocks.push_back(acc / Scalar(sep[k + 1] - sep[k]));
  }
  return blocks;
}

//! Overlap counts between estimated and true blocks, and for each estimated
//! block the true block sharing the most time points (lowest index on ties).
struct OverlapAlignment {
  Eigen::MatrixXi overlap;     // rows: estimated blocks, cols: true blocks
  std::vector<int> k_max;      // 0-based true block index per estimated block
};

inline OverlapAlignment max_overlap_alignment(const Segmentation& est, const Segmentation& truth) {
  if (est.time_points() != truth.time_points())
    throw invalid_input("max_overlap_alignment: segmentations cover different T");
  const auto es = est.separators();
  const auto ts = truth.separators();
  OverlapAlignment out;
  out.overlap.setZero(est.block_count(), truth.block_count());
  out.k_max.assign(static_cast<std::size_t>(est.block_count()), 0);
  for (int k = 0; k < est.block_count(); ++k) {
    int best = -1, best_l = 0;
    for (int l = 0; l < truth.block_count(); ++l) {
      const int lo = std::max(es[k], ts[l]);
      const int hi = std::min(es[k + 1], ts[l + 1]);
      const int n = std::max(hi - lo, 0);
      out.overlap(k, l) = n;
      if (n > best) {
        best = n;
        best_l = l;
      }
    }
    out.k_max[static_cast<std::size_t>(k)] = best_l;
  }
  return out;
}

}  // namespace gfgl

#endif  // GFGL_SEGMENTATION_HPP_
