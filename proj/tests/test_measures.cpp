#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "jkoflow/error.hpp"
#include "jkoflow/measures.hpp"

using namespace jkoflow;

TEST_CASE("snapshot rejects bad weights and shapes") {
  Eigen::MatrixXd x = testing::random_points(1, 4, 2);
  CHECK_THROWS_AS(EmpiricalSnapshot(x, Eigen::VectorXd::Constant(3, 1.0 / 3), 0), ValidationError);
  CHECK_THROWS_AS(EmpiricalSnapshot(x, Eigen::VectorXd::Constant(4, 0.3), 0), ValidationError);
  Eigen::VectorXd neg(4);
  neg << 0.5, 0.5, 0.5, -0.5;
  CHECK_THROWS_AS(EmpiricalSnapshot(x, neg, 0), ValidationError);
  x(1, 1) = std::nan("");
  CHECK_THROWS_AS(EmpiricalSnapshot::uniform(x, 0), ValidationError);
}

TEST_CASE("uniform snapshot and relabelling") {
  const auto s = EmpiricalSnapshot::uniform(testing::random_points(2, 5, 3), 2);
  CHECK(s.size() == 5);
  CHECK(s.dim() == 3);
  CHECK(s.weights().sum() == doctest::Approx(1.0));
  CHECK(s.with_time_index(7).time_index() == 7);
}

TEST_CASE("trajectory requires a consistent dimension") {
  std::vector<EmpiricalSnapshot> snaps{EmpiricalSnapshot::uniform(testing::random_points(3, 4, 2), 0),
                                       EmpiricalSnapshot::uniform(testing::random_points(4, 4, 3), 1)};
  CHECK_THROWS_AS(PopulationTrajectory(snaps, 0.1), ValidationError);
}

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789, 6.02214076e23}) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
}

TEST_CASE("snapshot, trajectory and coupling files round-trip") {
  const auto dir = testing::scratch_dir("measures_io");
  const Eigen::MatrixXd x = testing::random_points(5, 7, 2);
  const EmpiricalSnapshot s(x, testing::random_weights(6, 7), 0);
  save_snapshot(s, dir / "s.csv");
  const EmpiricalSnapshot back = load_snapshot(dir / "s.csv", 0, 2);
  CHECK(back.points() == s.points());
  CHECK(back.weights() == s.weights());

  std::vector<EmpiricalSnapshot> snaps{s, s.with_time_index(1)};
  save_trajectory(PopulationTrajectory(snaps, 0.25), dir / "traj");
  const PopulationTrajectory t = load_trajectory(dir / "traj");
  CHECK(t.size() == 2);
  CHECK(t.tau() == 0.25);
  CHECK(t[1].points() == x);

  Coupling c;
  c.pairs = {{0, 1, 0.25}, {2, 0, 0.75}};
  save_coupling(c, dir / "c.csv");
  const Coupling cb = load_coupling(dir / "c.csv", 3);
  REQUIRE(cb.pairs.size() == 2);
  CHECK(cb.pairs[1].source == 2);
  CHECK(cb.pairs[1].mass == 0.75);
  CHECK(cb.target_time == 4);
}

TEST_CASE("headerless snapshot files default to uniform weights") {
  const auto dir = testing::scratch_dir("measures_plain");
  {
    std::ofstream out(dir / "p.csv");
    out << "1,2\n3,4\n5,6\n";
  }
  const EmpiricalSnapshot s = load_snapshot(dir / "p.csv", 0, 2);
  CHECK(s.size() == 3);
  CHECK(s.weights()(0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("malformed files name the file and row") {
  const auto dir = testing::scratch_dir("measures_bad");
  {
    std::ofstream out(dir / "bad.csv");
    out << "x0,x1,weight\n1,2,0.5\n1,abc,0.5\n";
  }
  try {
    load_snapshot(dir / "bad.csv", 0);
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("bad.csv") != std::string::npos);
    CHECK(msg.find("3") != std::string::npos);
  }
  CHECK_THROWS_AS(load_trajectory(dir / "missing"), ValidationError);
}

TEST_CASE("check_coupling catches marginal violations") {
  const auto a = EmpiricalSnapshot::uniform(testing::random_points(7, 2, 1), 0);
  const auto b = EmpiricalSnapshot::uniform(testing::random_points(8, 2, 1), 1);
  Coupling good;
  good.pairs = {{0, 0, 0.5}, {1, 1, 0.5}};
  CHECK_NOTHROW(check_coupling(good, a, b));
  CHECK(marginal_violation(good, a, b) == doctest::Approx(0.0));
  Coupling bad;
  bad.pairs = {{0, 0, 0.5}, {0, 1, 0.5}};
  CHECK_THROWS_AS(check_coupling(bad, a, b), ValidationError);
  Coupling oob;
  oob.pairs = {{0, 5, 1.0}};
  CHECK_THROWS_AS(check_coupling(oob, a, b), ValidationError);
}

TEST_CASE("train/test split partitions each snapshot") {
  std::vector<EmpiricalSnapshot> snaps;
  for (int t = 0; t < 3; ++t)
    snaps.push_back(EmpiricalSnapshot::uniform(testing::random_points(10 + t, 20, 2), t));
  const PopulationTrajectory traj(snaps, 0.1);
  const auto [tr, te] = split_train_test(traj, 0.75, 3);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(tr[t].size() == 15);
    CHECK(te[t].size() == 5);
    CHECK(tr[t].weights().sum() == doctest::Approx(1.0));
  }
  const auto [tr2, te2] = split_train_test(traj, 0.75, 3);
  CHECK(tr2[1].points() == tr[1].points());
  CHECK_THROWS_AS(split_train_test(traj, 1.0, 3), ValidationError);
}
