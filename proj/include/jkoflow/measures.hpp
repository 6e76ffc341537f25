#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace jkoflow {

using Eigen::Index;

/// Weighted point cloud at one timestep. Rows of `points` are particles.
/// Validated on construction and immutable afterwards.
class EmpiricalSnapshot {
 public:
  EmpiricalSnapshot(Eigen::MatrixXd points, Eigen::VectorXd weights, int time_index);

  /// Uniform weights 1/N.
  static EmpiricalSnapshot uniform(Eigen::MatrixXd points, int time_index);

  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  int time_index() const { return time_index_; }
  Index size() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }

  /// Same particles relabelled with a different time index.
  EmpiricalSnapshot with_time_index(int t) const;

 private:
  Eigen::MatrixXd points_;
  Eigen::VectorXd weights_;
  int time_index_;
};

/// Optional description of how a dataset was produced, echoed to metadata.json.
struct Provenance {
  nlohmann::json generator;  // null when absent
  std::optional<std::uint64_t> seed;
};

/// Ordered snapshots mu_0..mu_T sampled every `tau` time units.
class PopulationTrajectory {
 public:
  PopulationTrajectory(std::vector<EmpiricalSnapshot> snapshots, double tau,
                       Provenance provenance = {});

  const std::vector<EmpiricalSnapshot>& snapshots() const { return snapshots_; }
  const EmpiricalSnapshot& operator[](std::size_t t) const { return snapshots_[t]; }
  std::size_t size() const { return snapshots_.size(); }
  /// Number of transitions T (= snapshots - 1).
  std::size_t steps() const { return snapshots_.size() - 1; }
  double tau() const { return tau_; }
  Index dim() const { return dim_; }
  const Provenance& provenance() const { return provenance_; }

 private:
  std::vector<EmpiricalSnapshot> snapshots_;
  double tau_;
  Index dim_;
  Provenance provenance_;
};

struct TransportPair {
  Index source;
  Index target;
  double mass;
};

/// Sparse transport plan between snapshot `source_time` and `source_time + 1`.
struct Coupling {
  std::vector<TransportPair> pairs;
  int source_time = 0;
  int target_time = 1;

  double total_mass() const;
  /// sum mass * ||x_i - y_j||^p
  double cost(const EmpiricalSnapshot& source, const EmpiricalSnapshot& target,
              int exponent) const;
};

/// Largest absolute deviation of either marginal from the snapshot weights.
double marginal_violation(const Coupling& coupling, const EmpiricalSnapshot& source,
                          const EmpiricalSnapshot& target);

/// Throws ValidationError when a marginal deviates by more than tol, when a
/// mass is negative, or when an index is out of range.
void check_coupling(const Coupling& coupling, const EmpiricalSnapshot& source,
                    const EmpiricalSnapshot& target, double tol = 1e-8);

// --- on-disk formats ------------------------------------------------------

std::string snapshot_filename(int t);
std::string coupling_filename(int t);

void save_snapshot(const EmpiricalSnapshot& snapshot, const std::filesystem::path& file);
EmpiricalSnapshot load_snapshot(const std::filesystem::path& file, int time_index,
                                std::optional<Index> expected_dim = std::nullopt);

void save_trajectory(const PopulationTrajectory& traj, const std::filesystem::path& dir);
PopulationTrajectory load_trajectory(const std::filesystem::path& dir);

void save_coupling(const Coupling& coupling, const std::filesystem::path& file);
Coupling load_coupling(const std::filesystem::path& file, int source_time);

/// Per-snapshot random partition; `fraction` of each snapshot goes to the
/// first trajectory (rounded, at least one particle on each side).
std::pair<PopulationTrajectory, PopulationTrajectory> split_train_test(
    const PopulationTrajectory& traj, double fraction, std::uint64_t seed);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace jkoflow
