#include <doctest.h>

#include "helpers.hpp"
#include "jkoflow/datagen.hpp"
#include "jkoflow/density.hpp"
#include "jkoflow/error.hpp"

using namespace jkoflow;

namespace {

EmpiricalSnapshot two_clusters(Eigen::Index n) {
  Eigen::MatrixXd x = 0.3 * standard_normal_noise(5, 0, n, 2);
  for (Eigen::Index i = 0; i < n; ++i) x(i, 0) += i % 2 ? 3.0 : -3.0;
  return EmpiricalSnapshot::uniform(std::move(x), 0);
}

}  // namespace

TEST_CASE("EM separates two well-spaced clusters") {
  GmmFitReport rep;
  const GaussianMixture g = fit_gmm(two_clusters(600), 2, 1, {}, &rep);
  CHECK(rep.converged);
  const double lo = std::min(g.means()(0, 0), g.means()(1, 0));
  const double hi = std::max(g.means()(0, 0), g.means()(1, 0));
  CHECK(lo == doctest::Approx(-3.0).epsilon(0.05));
  CHECK(hi == doctest::Approx(3.0).epsilon(0.05));
  CHECK(g.weights().sum() == doctest::Approx(1.0));
  for (std::size_t k = 1; k < rep.log_likelihood.size(); ++k)
    CHECK(rep.log_likelihood[k] >= rep.log_likelihood[k - 1] - 1e-9);
}

TEST_CASE("score is the gradient of the log density") {
  const GaussianMixture g = fit_gmm(two_clusters(300), 3, 2);
  const Eigen::MatrixXd pts = testing::random_points(3, 5, 2, -4.0, 4.0);
  for (Eigen::Index r = 0; r < pts.rows(); ++r) {
    const Eigen::VectorXd x = pts.row(r).transpose();
    const Eigen::VectorXd s = score(g, x);
    for (Eigen::Index k = 0; k < 2; ++k) {
      Eigen::VectorXd xp = x, xm = x;
      xp(k) += 1e-6;
      xm(k) -= 1e-6;
      CHECK(s(k) == doctest::Approx((log_density(g, xp) - log_density(g, xm)) / 2e-6).epsilon(1e-5));
    }
  }
}

TEST_CASE("single Gaussian log density") {
  std::vector<Eigen::MatrixXd> cov{Eigen::Matrix2d::Identity() * 2.0};
  const GaussianMixture g(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(1, 2), cov);
  const double want = -std::log(2 * M_PI * 2.0) - 0.25 * 2.0;
  CHECK(log_density(g, Eigen::Vector2d(1, 1)) == doctest::Approx(want));
  CHECK(score(g, Eigen::Vector2d(1, 1))(0) == doctest::Approx(-0.5));
}

TEST_CASE("mixture JSON round-trip and validation") {
  const GaussianMixture g = fit_gmm(two_clusters(100), 2, 3);
  const GaussianMixture b = GaussianMixture::from_json(g.to_json());
  CHECK((b.means() - g.means()).norm() < 1e-12);
  CHECK((b.covariance(1) - g.covariance(1)).norm() < 1e-12);
  std::vector<Eigen::MatrixXd> bad{-Eigen::Matrix2d::Identity()};
  CHECK_THROWS_AS(GaussianMixture(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(1, 2), bad),
                  ValidationError);
}

TEST_CASE("fit is deterministic and handles duplicate points") {
  const auto s = two_clusters(200);
  const GaussianMixture a = fit_gmm(s, 4, 9), b = fit_gmm(s, 4, 9);
  CHECK(a.means() == b.means());
  const auto dup = EmpiricalSnapshot::uniform(Eigen::MatrixXd::Ones(20, 2), 0);
  const GaussianMixture d = fit_gmm(dup, 1, 1);
  CHECK(d.covariance(0).allFinite());
  CHECK_THROWS_AS(fit_gmm(s, 0, 1), ValidationError);
}
