#include <doctest.h>

#include "helpers.hpp"
#include "jkoflow/datagen.hpp"
#include "jkoflow/error.hpp"

using namespace jkoflow;

TEST_CASE("explicit step without noise is a gradient step") {
  EnergySpec spec;
  spec.potential = GroundTruthFunction{FunctionKind::styblinski_tang, 2};
  const Eigen::MatrixXd x = testing::random_points(1, 10, 2);
  const Eigen::MatrixXd next = explicit_step(x, spec, 0.01, Eigen::MatrixXd::Zero(10, 2));
  CHECK((next - (x - 0.01 * gradient_rows(*spec.potential, x))).norm() < 1e-14);
}

TEST_CASE("interaction mean includes every particle") {
  const GroundTruthFunction q{FunctionKind::quadratic, 1};
  Eigen::MatrixXd x(3, 1);
  x << 0, 1, 5;
  const Eigen::MatrixXd g = interaction_mean_gradient(q, x);
  // grad U(z) = 2 z, mean over j of 2 (x_i - x_j) = 2 (x_i - mean)
  CHECK(g(0, 0) == doctest::Approx(-4.0));
  CHECK(g(2, 0) == doctest::Approx(2 * (5 - 2.0)));
}

TEST_CASE("implicit step solves the proximal fixed point") {
  const GroundTruthFunction f{FunctionKind::wavy_plateau, 2};
  PotentialGradient g = [&](const Eigen::VectorXd& x, double) { return gradient(f, x); };
  const Eigen::MatrixXd x = testing::random_points(2, 20, 2);
  const double tau = 0.01;
  const Eigen::MatrixXd y = implicit_step(x, g, tau, 1.0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd yi = y.row(i).transpose();
    CHECK((yi - x.row(i).transpose() + tau * g(yi, 1.0)).norm() < 1e-7);
  }
  ImplicitOptions tight;
  tight.max_iters = 1;
  tight.tolerance = 1e-30;
  CHECK_THROWS_AS(implicit_step(x, g, tau, 1.0, tight), SolverError);
}

TEST_CASE("generation is deterministic and splits halves") {
  GenConfig cfg;
  cfg.spec.potential = GroundTruthFunction{FunctionKind::flowers, 2};
  cfg.spec.beta = 0.1;
  cfg.n_particles = 100;
  cfg.timesteps = 3;
  cfg.seed = 11;
  const auto [tr, te] = generate(cfg);
  const auto [tr2, te2] = generate(cfg);
  CHECK(tr.size() == 4);
  CHECK(tr[0].size() == 50);
  CHECK(te[3].size() == 50);
  CHECK(tr[3].points() == tr2[3].points());
  CHECK(te[2].points() == te2[2].points());
  cfg.seed = 12;
  CHECK(generate(cfg).first[3].points() != tr[3].points());
}

TEST_CASE("noise streams do not depend on request size") {
  const Eigen::MatrixXd a = standard_normal_noise(3, 2, 5, 2);
  const Eigen::MatrixXd b = standard_normal_noise(3, 2, 9, 2);
  CHECK(a == b.topRows(5));
}

TEST_CASE("larger beta spreads a flat-potential cloud more") {
  auto variance = [](double beta) {
    GenConfig cfg;
    cfg.spec.potential = GroundTruthFunction{FunctionKind::flat, 1};
    cfg.spec.beta = beta;
    cfg.dim = 1;
    cfg.n_particles = 2000;
    cfg.timesteps = 5;
    cfg.init_low = -0.5;
    cfg.init_high = 0.5;
    cfg.seed = 13;
    const Eigen::MatrixXd x = generate(cfg).first[5].points();
    return (x.array() - x.mean()).square().mean();
  };
  CHECK(variance(0.2) > variance(0.0));
}

TEST_CASE("generator config validation") {
  GenConfig cfg;
  cfg.spec.potential = GroundTruthFunction{FunctionKind::flat, 3};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.spec.potential = GroundTruthFunction{FunctionKind::flat, 2};
  cfg.spec.interaction = GroundTruthFunction{FunctionKind::quadratic, 2};
  cfg.scheme = Scheme::implicit;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK(parse_scheme("implicit") == Scheme::implicit);
}

TEST_CASE("piecewise time-varying potential") {
  CHECK(time_varying_potential(1.0, 0.25) == 0.0);
  CHECK(time_varying_potential(1.0, 0.75) == 0.0);
  CHECK(time_varying_potential(2.0, 0.5) == doctest::Approx(-3.0));
  CHECK(time_varying_gradient(2.0, 0.1) == doctest::Approx(-3.0));
  const PopulationTrajectory t = generate_time_varying_1d(1, 50);
  CHECK(t.size() == kTimeVaryingSteps + 1);
  CHECK(t.tau() == doctest::Approx(0.1));
  CHECK(t[0].points().maxCoeff() <= 1.0);
}
