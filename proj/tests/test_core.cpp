#include <doctest.h>

#include <cmath>

#include "gfgl/rng.hpp"
#include "gfgl/types.hpp"

using gfgl::Index;
using Mat = gfgl::MatrixX<double>;
using Vec = gfgl::VectorX<double>;

namespace {

gfgl::TimeSeries<double> random_series(Index t_len, Index p, std::uint64_t seed) {
  gfgl::Rng rng(seed);
  gfgl::TimeSeries<double> x;
  x.data.resize(t_len, p);
  for (Index t = 0; t < t_len; ++t)
    for (Index j = 0; j < p; ++j) x.data(t, j) = rng.normal();
  return x;
}

// scalar-by-scalar evaluation, independent of the library path
double objective_by_hand(const std::vector<Mat>& u, const std::vector<Mat>& s, double l1,
                         double l2) {
  double total = 0;
  for (std::size_t t = 0; t < u.size(); ++t) {
    total += -std::log(u[t].determinant());
    for (Index i = 0; i < u[t].rows(); ++i)
      for (Index j = 0; j < u[t].cols(); ++j) {
        total += s[t](i, j) * u[t](j, i);
        if (i != j) total += l1 * std::abs(u[t](i, j));
      }
    if (t > 0) {
      double sq = 0;
      for (Index i = 0; i < u[t].rows(); ++i)
        for (Index j = 0; j < u[t].cols(); ++j) sq += std::pow(u[t](i, j) - u[t - 1](i, j), 2);
      total += l2 * std::sqrt(sq);
    }
  }
  return total;
}

}  // namespace

TEST_CASE("local_covariances outer products") {
  gfgl::TimeSeries<double> x;
  x.data.resize(2, 2);
  x.data << 1, 2, 0, 0;
  const auto s = gfgl::local_covariances(x);
  Mat expected(2, 2);
  expected << 1, 2, 2, 4;
  CHECK((s.matrices[0] - expected).norm() == 0.0);
  CHECK((s.matrices[1].array() == 0.0).all());
  // exactly symmetric by construction
  CHECK((s.matrices[0] - s.matrices[0].transpose()).norm() == 0.0);
}

TEST_CASE("local_covariances rank and trace") {
  const auto x = random_series(5, 3, 42);
  const auto s = gfgl::local_covariances(x);
  for (Index t = 0; t < 5; ++t) {
    Eigen::FullPivLU<Mat> lu(s.matrices[t]);
    CHECK(lu.rank() <= 1);
    CHECK(s.matrices[t].trace() == doctest::Approx(x.data.row(t).squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("local_covariances input validation") {
  gfgl::TimeSeries<double> bad;
  bad.data.resize(2, 1);
  bad.data << 1, 2;
  CHECK_THROWS_AS(gfgl::local_covariances(bad), gfgl::invalid_input);
}

TEST_CASE("gfgl_objective identity case") {
  const Index t_len = 4, p = 3;
  gfgl::PrecisionSequence<double> u;
  gfgl::LocalCovarianceSeq<double> s;
  for (Index t = 0; t < t_len; ++t) {
    u.matrices.push_back(Mat::Identity(p, p));
    s.matrices.push_back(Mat::Identity(p, p));
  }
  const gfgl::RegularizationConfig<double> reg{0.7, 2.5};
  CHECK(gfgl::gfgl_objective(u, s, reg) == doctest::Approx(static_cast<double>(t_len * p)));
}

TEST_CASE("gfgl_objective with T = 1 ignores lambda2") {
  gfgl::PrecisionSequence<double> u;
  u.matrices.push_back((Mat(2, 2) << 1.5, 0.2, 0.2, 0.9).finished());
  gfgl::LocalCovarianceSeq<double> s;
  s.matrices.push_back((Mat(2, 2) << 1.0, 0.3, 0.3, 1.0).finished());
  const double a = gfgl::gfgl_objective(u, s, {0.1, 0.0});
  const double b = gfgl::gfgl_objective(u, s, {0.1, 1e6});
  CHECK(a == b);
}

TEST_CASE("gfgl_objective matches term-by-term evaluation") {
  gfgl::Rng rng(5);
  std::vector<Mat> u, s;
  for (int t = 0; t < 3; ++t) {
    Mat m = Mat::Identity(2, 2);
    m(0, 1) = m(1, 0) = 0.3 * rng.normal();
    m(0, 0) += std::abs(rng.normal());
    m(1, 1) += std::abs(rng.normal());
    u.push_back(m);
    Vec x(2);
    x << rng.normal(), rng.normal();
    s.push_back(x * x.transpose());
  }
  gfgl::PrecisionSequence<double> useq{u, {}};
  gfgl::LocalCovarianceSeq<double> sseq{s};
  const gfgl::RegularizationConfig<double> reg{0.17, 0.45};
  CHECK(gfgl::gfgl_objective(useq, sseq, reg) ==
        doctest::Approx(objective_by_hand(u, s, reg.lambda1, reg.lambda2)).epsilon(1e-12));
}

TEST_CASE("gfgl_objective rejects non-PD input naming the index") {
  gfgl::PrecisionSequence<double> u;
  u.matrices.push_back(Mat::Identity(2, 2));
  u.matrices.push_back((Mat(2, 2) << 1, 2, 2, 1).finished());  // indefinite
  gfgl::LocalCovarianceSeq<double> s;
  s.matrices.assign(2, Mat::Identity(2, 2));
  try {
    gfgl::gfgl_objective(u, s, {0.1, 0.1});
    FAIL("expected numerical_error");
  } catch (const gfgl::numerical_error& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("gfgl_objective invariant under simultaneous symmetric permutation") {
  gfgl::Rng rng(9);
  const Index p = 3;
  std::vector<int> perm = {2, 0, 1};
  Mat pm = Mat::Zero(p, p);
  for (Index i = 0; i < p; ++i) pm(perm[static_cast<std::size_t>(i)], i) = 1.0;

  gfgl::PrecisionSequence<double> u, up;
  gfgl::LocalCovarianceSeq<double> s, sp;
  for (int t = 0; t < 4; ++t) {
    Mat m = Mat::Identity(p, p) * (2.0 + std::abs(rng.normal()));
    m(0, 1) = m(1, 0) = 0.4 * rng.normal();
    m(1, 2) = m(2, 1) = 0.4 * rng.normal();
    u.matrices.push_back(m);
    up.matrices.push_back(pm * m * pm.transpose());
    Vec x(p);
    for (Index i = 0; i < p; ++i) x(i) = rng.normal();
    s.matrices.push_back(x * x.transpose());
    sp.matrices.push_back(pm * s.matrices.back() * pm.transpose());
  }
  const gfgl::RegularizationConfig<double> reg{0.2, 0.6};
  CHECK(gfgl::gfgl_objective(u, s, reg) ==
        doctest::Approx(gfgl::gfgl_objective(up, sp, reg)).epsilon(1e-12));
}

TEST_CASE("gfgl_objective with lambda2 = 0 sums independent single-time objectives") {
  gfgl::Rng rng(17);
  gfgl::PrecisionSequence<double> u;
  gfgl::LocalCovarianceSeq<double> s;
  for (int t = 0; t < 5; ++t) {
    Mat m = Mat::Identity(2, 2) * (1.0 + std::abs(rng.normal()));
    m(0, 1) = m(1, 0) = 0.2 * rng.normal();
    u.matrices.push_back(m);
    Vec x(2);
    x << rng.normal(), rng.normal();
    s.matrices.push_back(x * x.transpose());
  }
  const gfgl::RegularizationConfig<double> reg{0.3, 0.0};
  double sum = 0;
  for (int t = 0; t < 5; ++t) {
    gfgl::PrecisionSequence<double> ut{{u.matrices[static_cast<std::size_t>(t)]}, {}};
    gfgl::LocalCovarianceSeq<double> st{{s.matrices[static_cast<std::size_t>(t)]}};
    sum += gfgl::gfgl_objective(ut, st, reg);
  }
  CHECK(gfgl::gfgl_objective(u, s, reg) == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("segmentation round trip") {
  const gfgl::Segmentation seg({3, 7}, 10);
  const auto sep = seg.separators();
  CHECK(sep == std::vector<int>{1, 3, 7, 11});
  CHECK(seg.block_count() == 3);
  int total = 0;
  for (int k = 0; k < seg.block_count(); ++k) {
    CHECK(seg.block_length(k) >= 1);
    total += seg.block_length(k);
  }
  CHECK(total == 10);

  CHECK_THROWS_AS(gfgl::Segmentation({1}, 10), gfgl::invalid_input);   // cp must be >= 2
  CHECK_THROWS_AS(gfgl::Segmentation({11}, 10), gfgl::invalid_input);  // cp must be <= T
  CHECK_THROWS_AS(gfgl::Segmentation({5, 5}, 10), gfgl::invalid_input);
}

TEST_CASE("regularization config validation") {
  gfgl::RegularizationConfig<double> reg{0.0, 0.1};
  CHECK_THROWS_AS(reg.validate(), gfgl::invalid_input);
  reg = {0.1, -0.1};
  CHECK_THROWS_AS(reg.validate(), gfgl::invalid_input);
  reg = {0.1, 0.0};
  CHECK_NOTHROW(reg.validate());
  CHECK(gfgl::RegularizationConfig<double>{0.2, 0.5}.ratio() == doctest::Approx(2.5));
}
