#include <doctest.h>

#include "helpers.hpp"
#include "jkoflow/error.hpp"
#include "jkoflow/functionals.hpp"

using namespace jkoflow;

TEST_CASE("analytic gradients match central differences") {
  for (FunctionKind kind : all_function_kinds()) {
    for (Eigen::Index d : {1, 2, 5}) {
      const GroundTruthFunction f{kind, d};
      const Eigen::MatrixXd pts = testing::random_points(static_cast<std::uint64_t>(kind) * 10 + d, 6, d, -3.0, 3.0);
      for (Eigen::Index r = 0; r < pts.rows(); ++r) {
        const Eigen::VectorXd x = pts.row(r).transpose();
        const Eigen::VectorXd g = gradient(f, x);
        for (Eigen::Index k = 0; k < d; ++k) {
          const double h = 1e-6;
          Eigen::VectorXd xp = x, xm = x;
          xp(k) += h;
          xm(k) -= h;
          const double fd = (evaluate(f, xp) - evaluate(f, xm)) / (2 * h);
          INFO(to_string(kind), " d=", d, " coord ", k);
          CHECK(g(k) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
        }
      }
    }
  }
}

TEST_CASE("names round-trip and unknown names fail") {
  for (FunctionKind k : all_function_kinds()) CHECK(parse_function_kind(to_string(k)) == k);
  CHECK(benchmark_potentials().size() == 15);
  CHECK_THROWS_AS(parse_function_kind("rosenbrock"), ValidationError);
}

TEST_CASE("known values") {
  const GroundTruthFunction st{FunctionKind::styblinski_tang, 2};
  CHECK(evaluate(st, Eigen::Vector2d(0, 0)) == doctest::Approx(0.0));
  CHECK(evaluate(st, Eigen::Vector2d(1, 1)) == doctest::Approx(2 * 0.5 * (1 - 16 + 5)));
  CHECK(evaluate(GroundTruthFunction{FunctionKind::sphere, 3}, Eigen::Vector3d(1, 1, 1)) ==
        doctest::Approx(-30.0));
  CHECK(evaluate(GroundTruthFunction{FunctionKind::flat, 2}, Eigen::Vector2d(3, 4)) == 0.0);
  CHECK(gradient(GroundTruthFunction{FunctionKind::relu, 2}, Eigen::Vector2d(0, 1)) ==
        Eigen::Vector2d(0, -50));
}

TEST_CASE("energy spec JSON round-trip") {
  EnergySpec s;
  s.potential = GroundTruthFunction{FunctionKind::wavy_plateau, 2};
  s.interaction = GroundTruthFunction{FunctionKind::flowers, 2};
  s.beta = 0.2;
  const EnergySpec b = EnergySpec::from_json(s.to_json());
  REQUIRE(b.potential);
  CHECK(b.potential->kind == FunctionKind::wavy_plateau);
  CHECK(b.interaction->kind == FunctionKind::flowers);
  CHECK(b.beta == 0.2);
  s.beta = -1.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("row-wise gradients") {
  const GroundTruthFunction f{FunctionKind::oakley_ohagan, 3};
  const Eigen::MatrixXd x = testing::random_points(3, 4, 3);
  const Eigen::MatrixXd g = gradient_rows(f, x);
  for (Eigen::Index i = 0; i < 4; ++i)
    CHECK((g.row(i).transpose() - gradient(f, Eigen::VectorXd(x.row(i).transpose()))).norm() < 1e-14);
}
