#include <doctest.h>

#include <cmath>

#include "gfgl/evaluate.hpp"
#include "gfgl/simulate.hpp"

using gfgl::Index;
using Mat = gfgl::MatrixX<double>;

namespace {

Mat chain_precision(Index p, double w) {
  Mat theta = Mat::Identity(p, p);
  for (Index i = 0; i + 1 < p; ++i) theta(i, i + 1) = theta(i + 1, i) = w;
  return theta;
}

}  // namespace

TEST_CASE("changepoint_errors") {
  const gfgl::Segmentation both({50}, 100);
  const auto same = gfgl::changepoint_errors<double>(both, both);
  CHECK(same.max_error == 0);
  CHECK(same.count_error == 0);
  CHECK(same.hausdorff_onesided == 0);

  const auto off = gfgl::changepoint_errors<double>(gfgl::Segmentation({48}, 100), both);
  CHECK(off.max_error == 2);
  CHECK(off.count_error == 0);
  CHECK(off.hausdorff_onesided == 2);

  const auto none = gfgl::changepoint_errors<double>(gfgl::Segmentation({}, 100), both);
  CHECK_FALSE(none.max_error.has_value());
  CHECK(none.count_error == -1);
  CHECK(none.hausdorff_onesided == 100);
}

TEST_CASE("changepoint_errors of a segmentation against itself is zero") {
  const gfgl::Segmentation seg({7, 31, 59}, 80);
  const auto e = gfgl::changepoint_errors<double>(seg, seg);
  CHECK(e.max_error == 0);
  CHECK(e.count_error == 0);
  CHECK(e.hausdorff_onesided == 0);
}

TEST_CASE("sign_consistency") {
  Mat truth = chain_precision(3, 0.4);
  CHECK(gfgl::sign_consistency(truth, truth) == std::pair<bool, bool>{true, true});

  Mat flipped = truth;
  flipped(0, 1) = flipped(1, 0) = -0.4;
  CHECK_FALSE(gfgl::sign_consistency(flipped, truth).first);

  Mat spurious = truth;
  spurious(0, 2) = spurious(2, 0) = 1e-3;
  const auto r = gfgl::sign_consistency(spurious, truth);
  CHECK(r.first);
  CHECK_FALSE(r.second);

  Mat zeroed = truth;
  zeroed(0, 1) = zeroed(1, 0) = 0.0;  // zero estimate on the support
  CHECK_FALSE(gfgl::sign_consistency(zeroed, truth).first);
}

TEST_CASE("incoherence of a diagonal model is exactly 1") {
  Mat theta = Mat::Identity(4, 4);
  theta(2, 2) = 3.0;
  const auto r = gfgl::incoherence_alpha(theta);
  CHECK(r.alpha == 1.0);
  CHECK(r.k_sigma0 > 0.0);
}

TEST_CASE("incoherence with a full support has an empty complement") {
  Mat theta(2, 2);
  theta << 1.0, 0.4, 0.4, 1.0;
  const auto r = gfgl::incoherence_alpha(theta);
  CHECK(r.alpha == 1.0);
}

TEST_CASE("incoherence guard rejects large p") {
  CHECK_THROWS_AS(gfgl::incoherence_alpha(Mat(Mat::Identity(61, 61))), gfgl::invalid_input);
}

TEST_CASE("incoherence is invariant under variable permutation") {
  const Mat theta = chain_precision(4, 0.4);
  std::vector<int> perm = {2, 0, 3, 1};
  Mat pm = Mat::Zero(4, 4);
  for (Index i = 0; i < 4; ++i) pm(perm[static_cast<std::size_t>(i)], i) = 1.0;
  const auto a = gfgl::incoherence_alpha(theta);
  const auto b = gfgl::incoherence_alpha<double>(pm * theta * pm.transpose());
  CHECK(a.alpha == doctest::Approx(b.alpha).epsilon(1e-10));
  CHECK(a.k_gamma0 == doctest::Approx(b.k_gamma0).epsilon(1e-10));
  CHECK(a.k_sigma0 == doctest::Approx(b.k_sigma0).epsilon(1e-10));
}

TEST_CASE("Fisher matrix entries match the Monte-Carlo edge covariance") {
  const Mat theta = chain_precision(4, 0.4);
  Eigen::LLT<Mat> llt(theta);
  Mat sigma = llt.solve(Mat::Identity(4, 4));
  sigma = 0.5 * (sigma + sigma.transpose()).eval();

  // three entry pairs, including a variance entry
  const std::vector<std::pair<std::pair<Index, Index>, std::pair<Index, Index>>> pairs = {
      {{0, 1}, {1, 2}}, {{0, 0}, {1, 1}}, {{0, 3}, {0, 3}}};
  for (const auto& [e, f] : pairs) {
    const double analytic = sigma(e.first, f.first) * sigma(e.second, f.second) +
                            sigma(e.first, f.second) * sigma(e.second, f.first);
    const double mc = gfgl::edge_covariance_mc(sigma, e, f, 100000, 321);
    CHECK(std::abs(mc - analytic) < 5e-2);
  }
}

TEST_CASE("theory constants on identity blocks") {
  gfgl::SimSpec<double> spec;
  spec.p = 4;
  spec.t_len = 20;
  spec.graph = gfgl::GraphModel::identity();
  spec.seed = 9;
  const auto truth = gfgl::generate_truth(spec);
  const auto c = gfgl::theory_constants(truth);
  CHECK(c.phi_max == doctest::Approx(1.0));
  CHECK(c.max_degree == 0);
  CHECK_FALSE(c.theta_min.has_value());
  CHECK_FALSE(c.eta_min.has_value());
  CHECK(c.d_min == 20);
  REQUIRE(c.alpha_min.has_value());
  CHECK(*c.alpha_min == 1.0);
}

TEST_CASE("theory constants on a chain") {
  gfgl::SimSpec<double> spec;
  spec.p = 3;
  spec.t_len = 10;
  spec.graph = gfgl::GraphModel::chain(0.4);
  spec.seed = 2;
  const auto truth = gfgl::generate_truth(spec);
  const auto c = gfgl::theory_constants(truth);
  CHECK(c.max_degree == 2);
  REQUIRE(c.theta_min.has_value());
  CHECK(*c.theta_min == doctest::Approx(0.4));
}

TEST_CASE("theory constants on a two-block simulation") {
  gfgl::SimSpec<double> spec;
  spec.p = 5;
  spec.t_len = 30;
  spec.true_changepoints = {11};
  spec.graph = gfgl::GraphModel::erdos_renyi_count(4);
  spec.seed = 31;
  const auto truth = gfgl::generate_truth(spec);
  const auto c = gfgl::theory_constants(truth, std::optional<gfgl::RegularizationConfig<double>>({0.1, 0.5}),
                                        std::optional<double>(0.1));
  REQUIRE(c.eta_min.has_value());
  const double by_hand = (truth.block_covariances[1] - truth.block_covariances[0]).norm();
  CHECK(*c.eta_min == doctest::Approx(by_hand).epsilon(1e-12));
  CHECK(c.d_min == 10);
  REQUIRE(c.beta1.has_value());
  CHECK(*c.beta1 == doctest::Approx(by_hand * 10 / 0.5));
  REQUIRE(c.beta2.has_value());
  CHECK(*c.beta2 == doctest::Approx(by_hand / (0.1 * std::sqrt(20.0))));
  REQUIRE(c.beta3.has_value());
  CHECK(*c.beta3 == doctest::Approx(by_hand * 30 * 0.1 / 0.5));
  REQUIRE(c.c_k.has_value());
  CHECK(*c.c_k == doctest::Approx(1.0 * (1.0 * 4.0 + 4.0)));  // K = 1
  CHECK(c.v_c.has_value());
}

TEST_CASE("evaluate_fit end to end on an exact fit") {
  gfgl::SimSpec<double> spec;
  spec.p = 4;
  spec.t_len = 12;
  spec.true_changepoints = {7};
  spec.graph = gfgl::GraphModel::erdos_renyi_count(3);
  spec.seed = 15;
  const auto truth = gfgl::generate_truth(spec);

  const auto rep = gfgl::evaluate_fit<double>(truth.segmentation(), truth.block_precisions, truth);
  CHECK(rep.cp_max_error == 0);
  CHECK(rep.cp_count_error == 0);
  for (const bool ev : rep.sign_event) CHECK(ev);
  for (const bool sr : rep.support_recovered) CHECK(sr);
  for (const double e : rep.err_max) CHECK(e == 0.0);
  CHECK(rep.aligned_true_block == std::vector<int>{0, 1});
  CHECK(rep.alpha.size() == 2);
  for (const double a : rep.alpha) CHECK(a <= 1.0);
}
