#include <doctest.h>

#include "helpers.hpp"
#include "jkoflow/datagen.hpp"
#include "jkoflow/density.hpp"
#include "jkoflow/error.hpp"
#include "jkoflow/linear_solver.hpp"
#include "jkoflow/ot.hpp"

using namespace jkoflow;

namespace {

PopulationTrajectory quadratic_data(Scheme scheme, Index dim = 1) {
  GenConfig gen;
  gen.spec.potential = GroundTruthFunction{FunctionKind::quadratic, dim};
  gen.dim = dim;
  gen.n_particles = 200;
  gen.timesteps = 3;
  gen.scheme = scheme;
  gen.seed = 1;
  return generate(gen).first;
}

}  // namespace

TEST_CASE("implicit quadratic data is recovered exactly") {
  const auto train = quadratic_data(Scheme::implicit);
  LinearEnergyModel m(polynomial_features(1, 2), std::nullopt, true, false);
  m.ridge_lambda = {0.0, 0.0, 0.0};
  solve_into(m, accumulate(m, train, couple_trajectory(train, OtConfig{})));
  CHECK(std::abs(m.theta(0)) < 1e-6);
  CHECK(std::abs(m.theta(1) - 1.0) < 1e-6);
}

TEST_CASE("flat data gives a zero model") {
  GenConfig gen;
  gen.spec.potential = GroundTruthFunction{FunctionKind::flat, 2};
  gen.n_particles = 100;
  gen.seed = 2;
  const auto train = generate(gen).first;
  LinearEnergyModel m(build_default(2), std::nullopt, true, false);
  const auto stats = accumulate(m, train, couple_trajectory(train, OtConfig{}));
  solve_into(m, stats);
  CHECK(m.theta.cwiseAbs().maxCoeff() == 0.0);
  CHECK(stats.displacement == 0.0);
}

TEST_CASE("pinned blocks stay zero and theta keeps its full length") {
  const auto train = quadratic_data(Scheme::explicit_euler);
  LinearEnergyModel m(polynomial_features(1, 2), polynomial_features(1, 2), true, false);
  CHECK(m.theta.size() == 2 + 2 + 1);
  CHECK(m.active_size() == 4);
  solve_into(m, accumulate(m, train, couple_trajectory(train, OtConfig{})));
  CHECK(m.theta(4) == 0.0);
  CHECK(m.beta() == 0.0);
}

TEST_CASE("residual loss from the statistic matches the direct sum") {
  const auto train = quadratic_data(Scheme::explicit_euler);
  const auto couplings = couple_trajectory(train, OtConfig{});
  std::vector<std::optional<GaussianMixture>> gmms(train.size());
  for (std::size_t t = 1; t < train.size(); ++t) gmms[t] = fit_gmm(train[t], 2, 1);
  LinearEnergyModel m(polynomial_features(1, 3), polynomial_features(1, 2), true, true);
  const auto stats = accumulate(m, train, couplings, gmms);
  const Eigen::VectorXd theta = Eigen::VectorXd::LinSpaced(m.active_size(), -0.5, 0.7);
  double direct = 0.0;
  const double tau = train.tau();
  for (std::size_t t = 0; t + 1 < train.size(); ++t)
    for (const auto& p : couplings[t].pairs) {
      const Eigen::VectorXd x = train[t].points().row(p.source).transpose();
      const Eigen::VectorXd y = train[t + 1].points().row(p.target).transpose();
      const Eigen::MatrixXd row = build_row(m, y, &train[t + 1], &*gmms[t + 1]);
      direct += p.mass * (row.transpose() * theta + (y - x) / tau).squaredNorm();
    }
  CHECK(residual_loss(stats, theta) == doctest::Approx(direct).epsilon(1e-9));
}

TEST_CASE("ridge and pseudo-inverse paths") {
  FeatureStatistic s(2);
  s.gram << 1, 1, 1, 1;  // singular
  s.moment << -1, -1;
  const Eigen::VectorXd pinv = solve(s, Eigen::Vector2d::Zero());
  CHECK(pinv(0) == doctest::Approx(0.5));
  CHECK(pinv(1) == doctest::Approx(0.5));
  const Eigen::VectorXd ridge = solve(s, Eigen::Vector2d(1.0, 1.0));
  CHECK(ridge(0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("internal block requires densities") {
  const auto train = quadratic_data(Scheme::explicit_euler);
  LinearEnergyModel m(polynomial_features(1, 2), std::nullopt, true, true);
  CHECK_THROWS_AS(accumulate(m, train, couple_trajectory(train, OtConfig{})), ValidationError);
}

TEST_CASE("linear model JSON round-trip") {
  LinearEnergyModel m(polynomial_features(2, 2), build_default(2), true, true);
  m.theta.setLinSpaced(m.theta.size(), -1.0, 1.0);
  const LinearEnergyModel b = LinearEnergyModel::from_json(m.to_json());
  CHECK(b.theta == m.theta);
  CHECK(b.use_interaction());
  const Eigen::Vector2d x(0.3, -0.1);
  CHECK((b.potential_gradient(x) - m.potential_gradient(x)).norm() < 1e-14);
  CHECK((b.interaction_gradient(x) - m.interaction_gradient(x)).norm() < 1e-14);
}
