#ifndef GFGL_SIMULATE_HPP_
#define GFGL_SIMULATE_HPP_

#include <algorithm>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "gfgl/rng.hpp"
#include "gfgl/types.hpp"

namespace gfgl {

enum class GraphKind { ErdosRenyiCount, ErdosRenyiProb, Chain, Identity };

struct GraphModel {
  GraphKind kind = GraphKind::ErdosRenyiCount;
  int edge_count = 0;         // ErdosRenyiCount
  double edge_prob = 0.0;     // ErdosRenyiProb
  double chain_weight = 0.4;  // Chain

  static GraphModel erdos_renyi_count(int m) { return {GraphKind::ErdosRenyiCount, m, 0.0, 0.0}; }
  static GraphModel erdos_renyi_prob(double q) { return {GraphKind::ErdosRenyiProb, 0, q, 0.0}; }
  static GraphModel chain(double w = 0.4) { return {GraphKind::Chain, 0, 0.0, w}; }
  static GraphModel identity() { return {GraphKind::Identity, 0, 0.0, 0.0}; }
};

enum class StructureChangeKind { RedrawAll, PerturbSubset };

struct StructureChange {
  StructureChangeKind kind = StructureChangeKind::RedrawAll;
  int perturb_edges = 0;

  static StructureChange redraw_all() { return {StructureChangeKind::RedrawAll, 0}; }
  static StructureChange perturb_subset(int m) { return {StructureChangeKind::PerturbSubset, m}; }
};

//! Everything needed to generate one piecewise-constant model and its data.
template <typename Scalar = double>
struct SimSpec {
  Index p = 10;
  Index t_len = 100;
  std::vector<int> true_changepoints;  // 1-based, each in (1, T]
  GraphModel graph;
  Scalar base_diagonal = Scalar(1.0);
  Scalar edge_weight_min = Scalar(0.3);  // magnitude range, sign is random
  Scalar edge_weight_max = Scalar(0.6);
  StructureChange change;
  std::uint64_t seed = 0;

  void validate() const {
    if (p < 2) throw invalid_input("sim spec: p must be >= 2");
    if (t_len < 1) throw invalid_input("sim spec: T must be >= 1");
    if (!(base_diagonal > Scalar(0))) throw invalid_input("sim spec: base_diagonal must be > 0");
    if (!(edge_weight_min > Scalar(0)) || edge_weight_max < edge_weight_min)
      throw invalid_input("sim spec: bad edge weight range");
    int prev = 1;
    for (int cp : true_changepoints) {
      if (cp <= prev || cp > static_cast<int>(t_len))
        throw invalid_input("sim spec: changepoints must be strictly increasing in (1, T]");
      prev = cp;
    }
    if (graph.kind == GraphKind::ErdosRenyiCount &&
        (graph.edge_count < 0 || graph.edge_count > p * (p - 1) / 2))
      throw invalid_input("sim spec: edge_count out of range");
    if (graph.kind == GraphKind::ErdosRenyiProb &&
        (graph.edge_prob < 0.0 || graph.edge_prob > 1.0))
      throw invalid_input("sim spec: edge_prob out of range");
    if (change.kind == StructureChangeKind::PerturbSubset && change.perturb_edges < 1)
      throw invalid_input("sim spec: perturb_subset needs at least one edge");
  }
};

namespace detail {

using EdgeWeights = std::map<std::pair<int, int>, double>;  // (i < j) -> weight

inline std::pair<int, int> nth_pair(int p, std::uint64_t n) {
  // enumerate (i, j) with i < j in row order
  for (int i = 0; i < p - 1; ++i) {
    const std::uint64_t row = static_cast<std::uint64_t>(p - 1 - i);
    if (n < row) return {i, i + 1 + static_cast<int>(n)};
    n -= row;
  }
  throw invalid_input("pair index out of range");
}

template <typename Scalar>
EdgeWeights draw_graph(const SimSpec<Scalar>& spec, Rng& rng) {
  EdgeWeights edges;
  const int p = static_cast<int>(spec.p);
  auto draw_weight = [&] {
    return rng.sign() * rng.uniform(static_cast<double>(spec.edge_weight_min),
                                    static_cast<double>(spec.edge_weight_max));
  };
  switch (spec.graph.kind) {
    case GraphKind::ErdosRenyiCount: {
      const std::uint64_t total = static_cast<std::uint64_t>(p) * (p - 1) / 2;
      while (static_cast<int>(edges.size()) < spec.graph.edge_count) {
        const auto pr = nth_pair(p, rng.below(total));
        if (!edges.count(pr)) edges[pr] = draw_weight();
      }
      break;
    }
    case GraphKind::ErdosRenyiProb:
      for (int i = 0; i < p - 1; ++i)
        for (int j = i + 1; j < p; ++j)
          if (rng.uniform01() < spec.graph.edge_prob) edges[{i, j}] = draw_weight();
      break;
    case GraphKind::Chain:
      for (int i = 0; i < p - 1; ++i) edges[{i, i + 1}] = spec.graph.chain_weight;
      break;
    case GraphKind::Identity:
      break;
  }
  return edges;
}

template <typename Scalar>
EdgeWeights perturb_graph(const SimSpec<Scalar>& spec, EdgeWeights edges, Rng& rng) {
  const int p = static_cast<int>(spec.p);
  const std::uint64_t total = static_cast<std::uint64_t>(p) * (p - 1) / 2;
  std::vector<std::pair<int, int>> chosen;
  while (static_cast<int>(chosen.size()) < spec.change.perturb_edges) {
    const auto pr = nth_pair(p, rng.below(total));
    if (std::find(chosen.begin(), chosen.end(), pr) == chosen.end()) chosen.push_back(pr);
  }
  for (const auto& pr : chosen) {
    auto it = edges.find(pr);
    if (it != edges.end()) {
      edges.erase(it);  // toggle off
    } else {
      edges[pr] = rng.sign() * rng.uniform(static_cast<double>(spec.edge_weight_min),
                                           static_cast<double>(spec.edge_weight_max));
    }
  }
  return edges;
}

//! Assemble the precision matrix and, if needed, load the diagonal until it
//! clears the PD floor.
template <typename Scalar>
MatrixX<Scalar> precision_from_edges(const SimSpec<Scalar>& spec, const EdgeWeights& edges) {
  const Index p = spec.p;
  MatrixX<Scalar> theta = spec.base_diagonal * MatrixX<Scalar>::Identity(p, p);
  for (const auto& [pr, w] : edges) {
    theta(pr.first, pr.second) = Scalar(w);
    theta(pr.second, pr.first) = Scalar(w);
  }
  const Scalar floor = Scalar(0.05);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(theta, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < floor) {
    for (Index i = 0; i < p; ++i) {
      const Scalar row_sum = theta.row(i).cwiseAbs().sum() - std::abs(theta(i, i));
      theta(i, i) = row_sum + spec.base_diagonal;
    }
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es2(theta, Eigen::EigenvaluesOnly);
    if (es2.eigenvalues().minCoeff() < floor)
      throw numerical_error("simulator: diagonal loading failed to reach the PD floor; "
                            "increase base_diagonal");
  }
  return theta;
}

}  // namespace detail

//! Draw the K+1 block models. Deterministic per seed.
template <typename Scalar>
GroundTruth<Scalar> generate_truth(const SimSpec<Scalar>& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const int blocks = static_cast<int>(spec.true_changepoints.size()) + 1;

  GroundTruth<Scalar> truth;
  truth.true_changepoints = spec.true_changepoints;
  truth.t_len = static_cast<int>(spec.t_len);

  detail::EdgeWeights edges;
  for (int k = 0; k < blocks; ++k) {
    if (k == 0 || spec.change.kind == StructureChangeKind::RedrawAll) {
      edges = detail::draw_graph(spec, rng);
    } else {
      edges = detail::perturb_graph(spec, std::move(edges), rng);
    }
    MatrixX<Scalar> theta = detail::precision_from_edges(spec, edges);
    Eigen::LLT<MatrixX<Scalar>> llt(theta);
    if (llt.info() != Eigen::Success) throw numerical_error("simulator: precision not PD");
    MatrixX<Scalar> sigma = llt.solve(MatrixX<Scalar>::Identity(spec.p, spec.p));
    sigma = Scalar(0.5) * (sigma + sigma.transpose()).eval();

    std::vector<std::pair<int, int>> support;
    support.reserve(edges.size());
    for (const auto& [pr, w] : edges) support.push_back(pr);
    truth.block_precisions.push_back(std::move(theta));
    truth.block_covariances.push_back(std::move(sigma));
    truth.edge_sets.push_back(std::move(support));
  }

  Scalar phi = Scalar(0);
  for (const auto& sigma : truth.block_covariances) {
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(sigma, Eigen::EigenvaluesOnly);
    phi = std::max(phi, es.eigenvalues().maxCoeff());
  }
  truth.phi_max = phi;

  if (blocks > 1) {
    Scalar eta = std::numeric_limits<Scalar>::infinity();
    Scalar jump = Scalar(0);
    for (int k = 1; k < blocks; ++k)
      eta = std::min(eta, (truth.block_covariances[k] - truth.block_covariances[k - 1]).norm());
    for (int k = 0; k < blocks; ++k)
      for (int l = k + 1; l < blocks; ++l)
        jump = std::max(jump, (truth.block_covariances[l] - truth.block_covariances[k]).norm());
    truth.eta_min = eta;
    truth.max_jump = jump;
  }
  return truth;
}

//! Draw row t from the zero-mean Gaussian of its block (Cholesky factor times
//! a standard normal vector). Deterministic per seed.
template <typename Scalar>
TimeSeries<Scalar> sample_timeseries(const GroundTruth<Scalar>& truth, Index t_len,
                                     std::uint64_t seed) {
  if (t_len < 1) throw invalid_input("sample_timeseries: T must be >= 1");
  if (!truth.true_changepoints.empty() &&
      truth.true_changepoints.back() > static_cast<int>(t_len))
    throw invalid_input("sample_timeseries: blocks do not cover [1, T]");
  const Index p = truth.dim();

  std::vector<MatrixX<Scalar>> chol;
  chol.reserve(truth.block_covariances.size());
  for (const auto& sigma : truth.block_covariances) {
    Eigen::LLT<MatrixX<Scalar>> llt(sigma);
    if (llt.info() != Eigen::Success)
      throw numerical_error("sample_timeseries: block covariance not PD");
    chol.push_back(llt.matrixL());
  }

  Rng rng(seed);
  TimeSeries<Scalar> x;
  x.data.resize(t_len, p);
  Segmentation seg(truth.true_changepoints, static_cast<int>(t_len));
  const auto sep = seg.separators();
  int block = 0;
  for (Index t = 0; t < t_len; ++t) {
    while (static_cast<int>(t) + 1 >= sep[block + 1]) ++block;
    VectorX<Scalar> z(p);
    for (Index i = 0; i < p; ++i) z(i) = static_cast<Scalar>(rng.normal());
    x.data.row(t) = (chol[static_cast<std::size_t>(block)] * z).transpose();
  }
  return x;
}

//! Monte-Carlo tail of the empirical covariance error against the two
//! analytic bounds, both clipped at 1. Replicate r uses seed + r.
template <typename Scalar = double>
struct CovTailExperiment {
  std::vector<Scalar> epsilon;
  std::vector<Scalar> frequency;  // P_hat(||W_n||_F > eps)
  std::vector<Scalar> bound_hd;   // 4 p^2 exp(-n eps^2 / (2^7 c^2 p^2))
  std::vector<Scalar> bound_sd;   // spectral-concentration bound (needs p <= n)
  std::vector<Scalar> realized;   // one Frobenius error per replicate
  Scalar c_sigma = Scalar(0);
  Scalar phi_max = Scalar(0);
};

template <typename Scalar>
CovTailExperiment<Scalar> empirical_cov_error_experiment(const MatrixX<Scalar>& sigma, int n,
                                                         int reps, std::uint64_t seed,
                                                         std::vector<Scalar> grid = {}) {
  if (n < 1) throw invalid_input("empirical_cov_error_experiment: n must be >= 1");
  if (reps < 100) throw invalid_input("empirical_cov_error_experiment: reps must be >= 100");
  const Index p = sigma.rows();
  Eigen::LLT<MatrixX<Scalar>> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw invalid_input("empirical_cov_error_experiment: sigma must be PD");
  const MatrixX<Scalar> chol = llt.matrixL();

  CovTailExperiment<Scalar> out;
  out.c_sigma = Scalar(5) * sigma.diagonal().maxCoeff();  // Gaussian sampling
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(sigma, Eigen::EigenvaluesOnly);
  out.phi_max = es.eigenvalues().maxCoeff();

  out.realized.reserve(static_cast<std::size_t>(reps));
  Scalar max_realized = Scalar(0);
  for (int r = 0; r < reps; ++r) {
    Rng rng(seed + static_cast<std::uint64_t>(r));
    MatrixX<Scalar> acc = MatrixX<Scalar>::Zero(p, p);
    VectorX<Scalar> z(p);
    for (int t = 0; t < n; ++t) {
      for (Index i = 0; i < p; ++i) z(i) = static_cast<Scalar>(rng.normal());
      const VectorX<Scalar> x = chol * z;
      acc += x * x.transpose();
    }
    const Scalar err = (acc / Scalar(n) - sigma).norm();
    out.realized.push_back(err);
    max_realized = std::max(max_realized, err);
  }

  if (grid.empty()) {
    // cover the realized errors and the point where the HD bound drops below 1
    const Scalar pp = Scalar(static_cast<double>(p));
    const Scalar crossover =
        std::sqrt(Scalar(128) * out.c_sigma * out.c_sigma * pp * pp *
                  std::log(Scalar(4) * pp * pp) / Scalar(n));
    const Scalar hi = Scalar(1.2) * std::max(crossover, max_realized);
    for (int i = 0; i <= 60; ++i) grid.push_back(hi * Scalar(i) / Scalar(60));
  }
  out.epsilon = grid;

  const Scalar pp = Scalar(static_cast<double>(p));
  for (const Scalar eps : out.epsilon) {
    int count = 0;
    for (const Scalar err : out.realized)
      if (err > eps) ++count;
    out.frequency.push_back(Scalar(count) / Scalar(reps));

    const Scalar hd = Scalar(4) * pp * pp *
                      std::exp(-Scalar(n) * eps * eps /
                               (Scalar(128) * out.c_sigma * out.c_sigma * pp * pp));
    out.bound_hd.push_back(std::min(Scalar(1), hd));

    Scalar sd = Scalar(1);
    if (p <= n && eps > Scalar(0)) {
      const Scalar b = std::sqrt(Scalar(1) + eps / (std::sqrt(pp) * out.phi_max)) - Scalar(1);
      const Scalar a = b - std::sqrt(pp / Scalar(n));
      if (a > Scalar(0)) sd = std::min(Scalar(1), Scalar(2) * std::exp(-Scalar(n) * a * a / Scalar(2)));
    }
    out.bound_sd.push_back(sd);
  }
  return out;
}

}  // namespace gfgl

#endif  // GFGL_SIMULATE_HPP_
