#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "yieldopt/distributions.hpp"

using namespace yieldopt;

namespace {

UncertainInput input4() {
  UncertainInput u;
  u.mean.resize(4);
  u.mean << 10.36, 4.76, 0.58, 0.64;
  u.std.resize(4);
  u.std << 0.7, 0.7, 0.3, 0.3;
  u.trunc.resize(4);
  u.trunc << 3, 3, 0.3, 0.3;
  return u;
}

}  // namespace

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {1e-12, 1e-6, 0.02, 0.3, 0.5, 0.7, 0.975, 1 - 1e-9}) {
    const double x = normal_quantile(p);
    CHECK(normal_cdf(x) == doctest::Approx(p).epsilon(1e-11));
  }
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK_THROWS(normal_quantile(0.0));
  CHECK_THROWS(normal_quantile(1.0));
}

TEST_CASE("draw_offsets basics") {
  const UncertainInput u = input4();

  SUBCASE("empty draw") {
    const SampleSet s = draw_offsets(u, 0, 7);
    CHECK(s.count() == 0);
    CHECK(s.dim() == 4);
  }

  SUBCASE("truncation holds on every component") {
    const SampleSet s = draw_offsets(u, 100000, 3);
    for (Eigen::Index j = 0; j < 4; ++j)
      CHECK(s.offsets.col(j).cwiseAbs().maxCoeff() <= u.trunc[j]);
  }

  SUBCASE("determinism and prefix stability") {
    const SampleSet a = draw_offsets(u, 500, 42);
    const SampleSet b = draw_offsets(u, 500, 42);
    CHECK((a.offsets - b.offsets).cwiseAbs().maxCoeff() == 0.0);
    const SampleSet longer = draw_offsets(u, 1200, 42);
    CHECK((longer.offsets.topRows(500) - a.offsets).cwiseAbs().maxCoeff() == 0.0);
    const SampleSet grown = extend_offsets(u, a, 1200);
    CHECK((grown.offsets - longer.offsets).cwiseAbs().maxCoeff() == 0.0);
    const SampleSet other = draw_offsets(u, 500, 43);
    CHECK((other.offsets - a.offsets).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("sample std matches truncated-normal quadrature") {
  UncertainInput u;
  u.mean = Eigen::VectorXd::Zero(1);
  u.std = Eigen::VectorXd::Constant(1, 0.7);
  u.trunc = Eigen::VectorXd::Constant(1, 3.0);
  const long n = 100000;
  const SampleSet s = draw_offsets(u, n, 11);
  const double mean = s.offsets.col(0).mean();
  const double var = (s.offsets.col(0).array() - mean).square().sum() / (n - 1);
  const double ref = testoracle::truncated_normal_std(0.7, 3.0);
  CHECK(std::sqrt(var) == doctest::Approx(ref).epsilon(0.01));
}

TEST_CASE("empirical mean vanishes at the MC rate") {
  const UncertainInput u = input4();
  const long n = 100000;
  const SampleSet s = draw_offsets(u, n, 5);
  for (Eigen::Index j = 0; j < 4; ++j) {
    const double m = s.offsets.col(j).mean();
    CHECK(std::abs(m) <= 5.0 * u.std[j] / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("realize shifts by the mean") {
  const UncertainInput u = input4();
  const SampleSet s = draw_offsets(u, 50, 9);

  SUBCASE("zero offsets give the mean back") {
    SampleSet zero = s;
    zero.offsets.setZero();
    const Eigen::MatrixXd pts = realize(zero, u.mean);
    for (int i = 0; i < 50; ++i)
      CHECK((pts.row(i).transpose() - u.mean).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("zero mean returns the offsets") {
    const Eigen::MatrixXd pts = realize(s, Eigen::VectorXd::Zero(4));
    CHECK((pts - s.offsets).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("shifting the mean shifts every point") {
    const Eigen::MatrixXd a = realize(s, u.mean);
    Eigen::VectorXd delta(4);
    delta << 0.5, -0.25, 0.1, 0.0;
    const Eigen::MatrixXd b = realize(s, u.mean + delta);
    for (int i = 0; i < 50; ++i)
      CHECK((b.row(i) - a.row(i) - delta.transpose()).cwiseAbs().maxCoeff() < 1e-15);
  }

  SUBCASE("dimension mismatch") { CHECK_THROWS(realize(s, Eigen::VectorXd::Zero(3))); }
}

TEST_CASE("pdf closed-form spot checks") {
  UncertainInput u1;
  u1.mean = Eigen::VectorXd::Zero(1);
  u1.std = Eigen::VectorXd::Ones(1);
  u1.trunc = Eigen::VectorXd::Ones(1);
  CHECK(pdf(u1, Eigen::VectorXd::Zero(1)) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-14));

  UncertainInput u2;
  u2.mean = Eigen::VectorXd::Zero(2);
  u2.std.resize(2);
  u2.std << 1.0, 2.0;
  u2.trunc = Eigen::VectorXd::Ones(2);
  CHECK(pdf(u2, Eigen::VectorXd::Zero(2)) ==
        doctest::Approx(1.0 / (2.0 * M_PI * 2.0)).epsilon(1e-14));

  // symmetry about the mean
  Eigen::VectorXd d(2);
  d << 0.3, -1.2;
  CHECK(pdf(u2, Eigen::VectorXd(d)) == doctest::Approx(pdf(u2, Eigen::VectorXd(-d))));
  CHECK_THROWS(pdf(u2, Eigen::VectorXd::Zero(3)));
}
