#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jkoflow/measures.hpp"

namespace jkoflow {

enum class OtMethod { exact, sinkhorn };

OtMethod parse_ot_method(const std::string& name);
std::string to_string(OtMethod method);

struct OtConfig {
  OtMethod method = OtMethod::exact;
  double epsilon = 1.0;       // entropic regularization, cost units
  int max_iters = 2000;       // Sinkhorn iterations
  double tolerance = 1e-6;    // Sinkhorn marginal L1 violation
  Index batch_size = 1000;    // particles per sub-problem
  std::uint64_t seed = 0;     // batch shuffling
  int cost_exponent = 2;

  void validate() const;
};

struct OtSolution {
  Coupling coupling;
  double objective = 0.0;  // sum mass * cost, without the entropy term
  std::size_t iterations = 0;
  bool converged = true;
};

/// Dense ground cost ||x_i - y_j||^exponent, exponent in {1, 2}.
Eigen::MatrixXd cost_matrix(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target,
                            int exponent);

/// Exact transport plan on a cost matrix with supplies a and demands b (equal
/// totals). Network simplex with block pricing over strongly feasible trees;
/// switches to Bland's rule while degenerate pivots pile up. Throws
/// SolverError past `max_pivots` (0 picks a default).
OtSolution solve_transport(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a,
                           const Eigen::VectorXd& b, std::size_t max_pivots = 0);

/// Log-domain Sinkhorn on a cost matrix, followed by a rounding pass that
/// makes both marginals exact. `converged` is false when max_iters ran out.
OtSolution solve_entropic(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a,
                          const Eigen::VectorXd& b, double epsilon, int max_iters,
                          double tolerance);

OtSolution solve_exact(const EmpiricalSnapshot& mu, const EmpiricalSnapshot& nu,
                       int cost_exponent = 2);

OtSolution solve_sinkhorn(const EmpiricalSnapshot& mu, const EmpiricalSnapshot& nu,
                          int cost_exponent, double epsilon, int max_iters = 2000,
                          double tolerance = 1e-6);

/// One coupling per consecutive snapshot pair. Snapshots larger than
/// cfg.batch_size are cut into ceil(N / batch_size) aligned batches of equal
/// mass (a particle straddling a cut is split between the two batches); each
/// sub-plan is solved on its own and scaled by 1 / #batches.
std::vector<Coupling> couple_trajectory(const PopulationTrajectory& traj, const OtConfig& cfg);

/// Exact W1 between two snapshots (Euclidean ground cost).
double emd(const EmpiricalSnapshot& mu, const EmpiricalSnapshot& nu);

struct EmdSummary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::vector<double> per_step;
};

/// EMD between predicted and observed snapshots t = 1..T.
EmdSummary trajectory_emd(const PopulationTrajectory& predicted,
                          const PopulationTrajectory& observed);

/// Mean and population standard deviation of a list of values.
EmdSummary summarize(std::vector<double> values);

/// Process-wide count of transport sub-problems solved (exact and entropic).
std::size_t solver_invocations();
void reset_solver_invocations();

}  // namespace jkoflow
