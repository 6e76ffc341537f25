#include <doctest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "jkoflow/error.hpp"
#include "jkoflow/experiments.hpp"
#include "jkoflow/parallel.hpp"

using namespace jkoflow;

TEST_CASE("result table CSV quoting and JSON rows") {
  ResultTable t;
  t.columns = {"name", "value", "note"};
  t.add({"a", 0.1, nullptr});
  t.add({"b,c", 2, "say \"hi\""});
  CHECK_THROWS_AS(t.add({"short"}), ValidationError);
  const auto dir = testing::scratch_dir("results");
  t.write_csv(dir / "t.csv");
  std::ifstream in(dir / "t.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == "name,value,note\na,0.1,\n\"b,c\",2,\"say \"\"hi\"\"\"\n");
  CHECK(t.to_json()[1]["value"] == 2);
}

TEST_CASE("lightspeed table layout and flat linear baseline") {
  LightspeedOptions o;
  o.potentials = {FunctionKind::flat, FunctionKind::wavy_plateau};
  o.particles = 200;
  o.epochs = 3;
  const ExperimentReport r = run_lightspeed(o);
  CHECK(r.table.rows.size() == 4);
  for (const auto& row : r.table.rows) {
    CHECK(row.back().is_null());
    if (row[0] == "flat" && row[1] == "star_linear_potential") CHECK(row[2].get<double>() < 1e-6);
  }
  const auto dir = testing::scratch_dir("lightspeed");
  write_report(r, dir);
  CHECK(std::filesystem::exists(dir / "lightspeed.csv"));
  CHECK(std::filesystem::exists(dir / "lightspeed.json"));
  CHECK(std::filesystem::exists(dir / "summary.txt"));
}

TEST_CASE("scaling grid shape") {
  ScalingOptions o;
  o.dims = {1, 2};
  o.particle_counts = {40, 80, 120};
  o.epochs = 2;
  const ExperimentReport r = run_scaling(o);
  CHECK(r.table.rows.size() == 6);
  REQUIRE(r.extras.size() == 1);
  CHECK(r.extras[0].second.rows.size() == 2);
  CHECK(r.extras[0].second.columns.size() == 4);
}

TEST_CASE("general energies skip density fits when beta is zero") {
  GeneralOptions o;
  o.betas = {0.0, 0.1};
  o.particles = 80;
  o.epochs = 2;
  o.interaction_subsample = 10;
  const ExperimentReport r = run_general(o);
  CHECK(r.table.rows.size() == 4);
  for (const auto& row : r.table.rows) {
    REQUIRE(row[7].is_number());
    if (row[2].get<double>() == 0.0) CHECK(row[7].get<int>() == 0);
    else CHECK(row[7].get<int>() > 0);
  }
  o.interaction = FunctionKind::holder_table;
  CHECK_THROWS_AS(run_general(o), ValidationError);
}

TEST_CASE("observability datasets share the second-snapshot variance") {
  ObservabilityOptions o;
  o.particles = 400;
  const ExperimentReport r = run_observability(o);
  REQUIRE(r.table.rows.size() == 4);
  const double va = r.table.rows[0][4].get<double>();
  const double vb = r.table.rows[1][4].get<double>();
  CHECK(va == doctest::Approx(vb).epsilon(0.15));
}

TEST_CASE("experiments are deterministic apart from timing") {
  ScalingOptions o;
  o.dims = {1};
  o.particle_counts = {30};
  o.epochs = 2;
  const auto a = run_scaling(o), b = run_scaling(o);
  CHECK(a.table.rows[0][2] == b.table.rows[0][2]);
}

TEST_CASE("parallel_for rethrows the lowest failing index and nests serially") {
  const std::size_t saved = max_jobs();
  set_max_jobs(4);
  std::vector<int> hits(100, 0);
  parallel_for(10, [&](std::size_t i) {
    parallel_for(10, [&](std::size_t j) { hits[i * 10 + j] += 1; });
  });
  for (int h : hits) CHECK(h == 1);
  try {
    parallel_for(20, [](std::size_t i) {
      if (i == 7 || i == 15) throw std::runtime_error(std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "7");
  }
  set_max_jobs(saved);
}
