#include <doctest.h>

#include <cmath>

#include "gfgl/matops.hpp"
#include "gfgl/rng.hpp"

using gfgl::Index;
using gfgl::MatrixX;
using Mat = MatrixX<double>;

namespace {

Mat random_symmetric(Index p, gfgl::Rng& rng) {
  Mat a(p, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i <= j; ++i) {
      a(i, j) = rng.normal();
      a(j, i) = a(i, j);
    }
  return a;
}

Mat permutation_matrix(const std::vector<int>& perm) {
  const Index p = static_cast<Index>(perm.size());
  Mat pm = Mat::Zero(p, p);
  for (Index i = 0; i < p; ++i) pm(perm[static_cast<std::size_t>(i)], i) = 1.0;
  return pm;
}

}  // namespace

TEST_CASE("sym_eigen on known spectra") {
  Mat a(2, 2);
  a << 3, 0, 0, 1;
  const auto ep = gfgl::sym_eigen(a);
  CHECK(ep.values(0) == doctest::Approx(1.0));
  CHECK(ep.values(1) == doctest::Approx(3.0));
  // columns are signed unit basis vectors
  for (Index c = 0; c < 2; ++c) CHECK(ep.vectors.col(c).cwiseAbs().maxCoeff() == doctest::Approx(1.0));

  Mat b(2, 2);
  b << 0, 1, 1, 0;
  const auto eb = gfgl::sym_eigen(b);
  CHECK(eb.values(0) == doctest::Approx(-1.0));
  CHECK(eb.values(1) == doctest::Approx(1.0));
}

TEST_CASE("sym_eigen reconstruction and orthogonality on random input") {
  gfgl::Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const Mat a = random_symmetric(5, rng);
    const auto ep = gfgl::sym_eigen(a);
    const Mat rebuilt = ep.vectors * ep.values.asDiagonal() * ep.vectors.transpose();
    CHECK((rebuilt - a).norm() < 1e-10 * std::max(1.0, a.norm()));
    CHECK((ep.vectors.transpose() * ep.vectors - Mat::Identity(5, 5)).norm() < 1e-8);
  }
}

TEST_CASE("sym_eigen rejects non-finite input") {
  Mat a = Mat::Zero(2, 2);
  a(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(gfgl::sym_eigen(a), gfgl::numerical_error);
}

TEST_CASE("logdet prox eigenvalue map") {
  CHECK(gfgl::logdet_prox_eigenvalue_map(0.0) == doctest::Approx(std::sqrt(8.0) / 4.0).epsilon(1e-12));
  CHECK(gfgl::logdet_prox_eigenvalue_map(1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(gfgl::logdet_prox_eigenvalue_map(-2.0) ==
        doctest::Approx((2.0 + std::sqrt(12.0)) / 4.0).epsilon(1e-12));

  // positive root of 2u^2 + eta*u - 1 = 0, always strictly positive
  for (const double eta : {-50.0, -2.0, -0.1, 0.0, 0.3, 5.0, 80.0}) {
    const double u = gfgl::logdet_prox_eigenvalue_map(eta);
    CHECK(u > 0.0);
    CHECK(std::abs(2 * u * u + eta * u - 1) < 1e-12);
  }
}

TEST_CASE("logdet prox composed update satisfies its first-order condition") {
  // with (eta, L) = eig(A) and U = L diag(map(eta)) L', we need -inv(U) + 2U + A = 0
  gfgl::Rng rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    const Mat a = random_symmetric(4, rng);
    const auto ep = gfgl::sym_eigen(a);
    const auto mapped = ep.values.unaryExpr([](double e) { return gfgl::logdet_prox_eigenvalue_map(e); });
    const Mat u = ep.vectors * mapped.asDiagonal() * ep.vectors.transpose();
    const Mat resid = -u.inverse() + 2 * u + a;
    CHECK(resid.norm() < 1e-8);
  }
}

TEST_CASE("soft_threshold_offdiag") {
  Mat a(2, 2);
  a << 5.0, 0.5, -0.1, 2.0;
  const Mat out = gfgl::soft_threshold_offdiag(a, 0.2);
  CHECK(out(0, 1) == doctest::Approx(0.3));
  CHECK(out(1, 0) == 0.0);
  CHECK(out(0, 0) == 5.0);  // diagonals untouched
  CHECK(out(1, 1) == 2.0);

  const Mat identity_map = gfgl::soft_threshold_offdiag(a, 0.0);
  CHECK((identity_map - a).norm() == 0.0);

  CHECK_THROWS_AS(gfgl::soft_threshold_offdiag(a, -1.0), gfgl::invalid_input);
}

TEST_CASE("soft_threshold_offdiag commutes with symmetric permutation") {
  gfgl::Rng rng(3);
  const Mat a = random_symmetric(4, rng);
  const Mat pm = permutation_matrix({2, 0, 3, 1});
  const Mat lhs = gfgl::soft_threshold_offdiag(pm * a * pm.transpose(), 0.3);
  const Mat rhs = pm * gfgl::soft_threshold_offdiag(a, 0.3) * pm.transpose();
  CHECK((lhs - rhs).norm() < 1e-14);
}

TEST_CASE("group_soft_threshold") {
  const Mat eye = Mat::Identity(2, 2);
  const Mat zero_out = gfgl::group_soft_threshold(eye, std::sqrt(2.0));
  CHECK((zero_out.array() == 0.0).all());

  const Mat keep = gfgl::group_soft_threshold(eye, 0.0);
  CHECK((keep - eye).norm() == 0.0);

  Mat q(2, 2);
  q << 2, 0, 0, 0;  // Frobenius norm 2
  const Mat half = gfgl::group_soft_threshold(q, 1.0);
  CHECK((half - q / 2).norm() < 1e-15);
  CHECK(half.norm() == doctest::Approx(1.0));

  const Mat from_zero = gfgl::group_soft_threshold(Mat::Zero(3, 3), 0.0);
  CHECK((from_zero.array() == 0.0).all());

  CHECK_THROWS_AS(gfgl::group_soft_threshold(q, -0.5), gfgl::invalid_input);
}

TEST_CASE("group_soft_threshold is non-expansive") {
  gfgl::Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const Mat q1 = random_symmetric(3, rng);
    const Mat q2 = random_symmetric(3, rng);
    const double kappa = std::abs(rng.normal());
    const Mat p1 = gfgl::group_soft_threshold(q1, kappa);
    const Mat p2 = gfgl::group_soft_threshold(q2, kappa);
    CHECK((p1 - p2).norm() <= (q1 - q2).norm() + 1e-12);
  }
}

TEST_CASE("matrix_norms") {
  Mat a(2, 2);
  a << 1, -2, 3, 0;
  const auto n = gfgl::matrix_norms(a);
  CHECK(n.frobenius == doctest::Approx(std::sqrt(14.0)));
  CHECK(n.max_abs == 3.0);
  CHECK(n.l1_offdiag == 5.0);
  CHECK(n.operator_inf == 3.0);

  const auto z = gfgl::matrix_norms(Mat::Zero(3, 3));
  CHECK(z.frobenius == 0.0);
  CHECK(z.max_abs == 0.0);
  CHECK(z.l1_offdiag == 0.0);
  CHECK(z.operator_inf == 0.0);

  const auto id = gfgl::matrix_norms(Mat::Identity(3, 3));
  CHECK(id.frobenius == doctest::Approx(std::sqrt(3.0)));
  CHECK(id.max_abs == 1.0);
  CHECK(id.l1_offdiag == 0.0);
  CHECK(id.operator_inf == 1.0);
}
