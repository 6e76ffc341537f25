#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "jkoflow/functionals.hpp"
#include "jkoflow/trainer.hpp"

namespace jkoflow {

/// Column-oriented result table; cells are JSON scalars (numbers, strings, null).
struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;

  void add(std::vector<nlohmann::json> row);
  nlohmann::json to_json() const;
  void write_csv(const std::filesystem::path& file) const;
};

struct ExperimentReport {
  std::string name;
  ResultTable table;
  nlohmann::json summary;
  /// Extra plot-ready tables, written as <name>_<key>.csv.
  std::vector<std::pair<std::string, ResultTable>> extras;
};

/// Writes <name>.csv, <name>.json and summary.txt (plus extras) into `dir`.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

struct LightspeedOptions {
  std::vector<FunctionKind> potentials = benchmark_potentials();
  std::uint64_t seed = 0;
  Index particles = 2000;  // 2N; half train, half test
  int epochs = 100;
  bool full = false;  // paper budget: 1000 epochs
};
ExperimentReport run_lightspeed(const LightspeedOptions& opts);

struct ScalingOptions {
  FunctionKind potential = FunctionKind::styblinski_tang;
  std::vector<Index> dims{2, 5, 10};
  std::vector<Index> particle_counts{500, 1000, 2000};  // N per side
  std::uint64_t seed = 0;
  int epochs = 100;
  bool full = false;  // d in {10..50}, N in {1000..10000}, 1000 epochs
};
ExperimentReport run_scaling(const ScalingOptions& opts);

struct GeneralOptions {
  FunctionKind potential = FunctionKind::styblinski_tang;
  FunctionKind interaction = FunctionKind::flowers;
  std::vector<double> betas{0.0, 0.1, 0.2};
  std::uint64_t seed = 0;
  Index particles = 400;
  int epochs = 50;
  Index interaction_subsample = 100;
  bool full = false;  // 2000 particles, 1000 epochs, full interaction means
};
ExperimentReport run_general(const GeneralOptions& opts);

struct TimeVaryingOptions {
  std::uint64_t seed = 0;
  Index particles = 200;
  int epochs = 1000;
};
ExperimentReport run_time_varying(const TimeVaryingOptions& opts);

struct ObservabilityOptions {
  std::uint64_t seed = 0;
  Index particles = 2000;  // per side
  double tau = 0.5;
};
ExperimentReport run_observability(const ObservabilityOptions& opts);

}  // namespace jkoflow
