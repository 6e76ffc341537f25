#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "jkoflow/error.hpp"
#include "jkoflow/ot.hpp"

using namespace jkoflow;

TEST_CASE("cost matrix exponents") {
  Eigen::MatrixXd a(1, 2), b(1, 2);
  a << 0, 0;
  b << 3, 4;
  CHECK(cost_matrix(a, b, 1)(0, 0) == doctest::Approx(5.0));
  CHECK(cost_matrix(a, b, 2)(0, 0) == doctest::Approx(25.0));
  CHECK_THROWS_AS(cost_matrix(a, b, 3), ValidationError);
}

TEST_CASE("exact plan has exact marginals on non-uniform weights") {
  const EmpiricalSnapshot mu(testing::random_points(1, 30, 2), testing::random_weights(2, 30), 0);
  const EmpiricalSnapshot nu(testing::random_points(3, 45, 2), testing::random_weights(4, 45), 1);
  const OtSolution sol = solve_exact(mu, nu, 2);
  CHECK(marginal_violation(sol.coupling, mu, nu) < 1e-12);
  CHECK(sol.coupling.cost(mu, nu, 2) == doctest::Approx(sol.objective).epsilon(1e-12));
  // a basic solution has at most n + m - 1 positive cells
  CHECK(sol.coupling.pairs.size() <= 30 + 45 - 1);
}

TEST_CASE("1-D W1 equals the sorted-sample difference") {
  const Eigen::MatrixXd a = testing::random_points(5, 40, 1);
  const Eigen::MatrixXd b = testing::random_points(6, 40, 1);
  std::vector<double> sa(a.data(), a.data() + 40), sb(b.data(), b.data() + 40);
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double want = 0.0;
  for (int i = 0; i < 40; ++i) want += std::abs(sa[i] - sb[i]) / 40.0;
  CHECK(emd(EmpiricalSnapshot::uniform(a, 0), EmpiricalSnapshot::uniform(b, 1)) ==
        doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("transport solver rejects unbalanced totals") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Ones(2, 2);
  CHECK_THROWS_AS(solve_transport(c, Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.5, 0.6)),
                  ValidationError);
}

TEST_CASE("degenerate instances with zero weights and ties") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(4, 4);
  Eigen::Vector4d a(0.25, 0.25, 0.25, 0.25), b(0.5, 0.0, 0.5, 0.0);
  const OtSolution s = solve_transport(c, a, b);
  CHECK(s.objective == doctest::Approx(0.0));
  double m = 0.0;
  for (const auto& p : s.coupling.pairs) m += p.mass;
  CHECK(m == doctest::Approx(1.0));
}

TEST_CASE("Sinkhorn approaches the exact cost and rounds marginals exactly") {
  const EmpiricalSnapshot mu(testing::random_points(7, 25, 2), testing::random_weights(8, 25), 0);
  const EmpiricalSnapshot nu = EmpiricalSnapshot::uniform(testing::random_points(9, 20, 2), 1);
  const double exact = solve_exact(mu, nu, 2).objective;
  const OtSolution s = solve_sinkhorn(mu, nu, 2, 0.01, 5000, 1e-9);
  CHECK(marginal_violation(s.coupling, mu, nu) < 1e-12);
  CHECK(s.objective >= exact - 1e-9);
  CHECK(s.objective == doctest::Approx(exact).epsilon(0.05));
  const OtSolution loose = solve_sinkhorn(mu, nu, 2, 1.0, 3, 1e-12);
  CHECK_FALSE(loose.converged);
}

TEST_CASE("batched coupling keeps marginals and counts sub-problems") {
  std::vector<EmpiricalSnapshot> snaps;
  for (int t = 0; t < 3; ++t)
    snaps.push_back(EmpiricalSnapshot::uniform(testing::random_points(20 + t, 250, 2), t));
  const PopulationTrajectory traj(snaps, 0.1);
  OtConfig cfg;
  cfg.batch_size = 100;
  cfg.seed = 4;
  reset_solver_invocations();
  const auto couplings = couple_trajectory(traj, cfg);
  REQUIRE(couplings.size() == 2);
  CHECK(solver_invocations() == 2 * 3);
  for (std::size_t t = 0; t < 2; ++t) CHECK_NOTHROW(check_coupling(couplings[t], traj[t], traj[t + 1]));
  const auto again = couple_trajectory(traj, cfg);
  CHECK(again[1].pairs.size() == couplings[1].pairs.size());
}

TEST_CASE("EMD summary statistics") {
  const EmdSummary s = summarize({1.0, 2.0, 3.0});
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.std == doctest::Approx(std::sqrt(2.0 / 3.0)));
}
