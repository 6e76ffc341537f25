#include <doctest.h>

#include "helpers.hpp"
#include "jkoflow/error.hpp"
#include "jkoflow/features.hpp"

using namespace jkoflow;

TEST_CASE("feature counts") {
  const FeatureMap d2 = build_default(2);
  CHECK(d2.polynomial_count() == 8);
  CHECK(d2.rbf_count() == 100);
  const FeatureMap d5 = build_default(5);
  CHECK(d5.rbf_count() == 200);
  CHECK(polynomial_features(3, 2, true).size() == 6 + 3);
}

TEST_CASE("polynomial layout is degree-major") {
  const FeatureMap fm = polynomial_features(2, 3);
  const Eigen::VectorXd v = eval_features(fm, Eigen::Vector2d(2, 3));
  Eigen::VectorXd want(6);
  want << 2, 3, 4, 9, 8, 27;
  CHECK(v == want);
}

TEST_CASE("jacobian matches finite differences") {
  FeatureOptions o;
  o.cross = true;
  o.rbf_grid = 3;
  for (Index d : {1, 2, 3}) {
    const FeatureMap fm = build_features(d, o);
    const Eigen::VectorXd x = testing::random_points(d, 1, d).row(0).transpose();
    const Eigen::MatrixXd J = jacobian_features(fm, x);
    REQUIRE(J.rows() == fm.size());
    for (Index k = 0; k < d; ++k) {
      Eigen::VectorXd xp = x, xm = x;
      xp(k) += 1e-6;
      xm(k) -= 1e-6;
      const Eigen::VectorXd fd = (eval_features(fm, xp) - eval_features(fm, xm)) / 2e-6;
      CHECK((J.col(k) - fd).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("feature list parsing") {
  const FeatureOptions a = parse_feature_list("poly2");
  CHECK(a.polynomial);
  CHECK_FALSE(a.rbf);
  CHECK(a.max_degree == 2);
  const FeatureOptions b = parse_feature_list("rbf");
  CHECK_FALSE(b.polynomial);
  CHECK(b.rbf);
  CHECK_THROWS_AS(parse_feature_list("fourier"), ValidationError);
  CHECK_THROWS_AS(parse_feature_list(""), ValidationError);
}

TEST_CASE("feature map JSON round-trip") {
  const FeatureMap fm = build_default(3);
  const FeatureMap b = FeatureMap::from_json(fm.to_json());
  CHECK(b.size() == fm.size());
  const Eigen::VectorXd x = Eigen::Vector3d(0.1, -0.2, 0.3);
  CHECK((eval_features(b, x) - eval_features(fm, x)).norm() < 1e-14);
}
