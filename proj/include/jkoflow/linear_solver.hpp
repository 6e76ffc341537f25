#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "jkoflow/density.hpp"
#include "jkoflow/features.hpp"
#include "jkoflow/measures.hpp"

namespace jkoflow {

/// Energy J(mu) = int theta1^T phi1 dmu + int int theta2^T phi2(x - y) dmu dmu
///              + theta3 int rho log rho.
/// theta always has length n1 + n2 + 1; inactive blocks stay exactly 0.
struct LinearEnergyModel {
  FeatureMap potential_features;
  std::optional<FeatureMap> interaction_features;
  bool use_potential = true;
  bool use_internal = false;
  Eigen::VectorXd theta;
  std::array<double, 3> ridge_lambda{0.01, 0.01, 0.01};
  bool negative_beta = false;  // theta3 < -1e-6 after the last solve

  LinearEnergyModel() = default;
  LinearEnergyModel(FeatureMap potential, std::optional<FeatureMap> interaction, bool use_potential,
                    bool use_internal);

  Index n1() const { return potential_features.size(); }
  Index n2() const { return interaction_features ? interaction_features->size() : 0; }
  bool use_interaction() const { return interaction_features.has_value(); }
  /// Number of unknowns in the active blocks.
  Index active_size() const;
  /// Indices into theta of the active unknowns, in row order of build_row.
  std::vector<Index> active_indices() const;

  Eigen::VectorXd potential_gradient(const Eigen::VectorXd& x) const;
  Eigen::VectorXd interaction_gradient(const Eigen::VectorXd& z) const;
  double beta() const { return use_internal ? theta(n1() + n2()) : 0.0; }

  nlohmann::json to_json() const;
  static LinearEnergyModel from_json(const nlohmann::json& j);
};

/// y^T stacked over active blocks: p x d with p = active_size().
Eigen::MatrixXd build_row(const LinearEnergyModel& model, const Eigen::VectorXd& x,
                          const EmpiricalSnapshot* snapshot, const GaussianMixture* gmm);

struct FeatureStatistic {
  Eigen::MatrixXd gram;    // p x p
  Eigen::VectorXd moment;  // (1/tau) sum_pairs mass * y(x') (x' - x), length p
  double displacement = 0.0;  // sum_pairs mass * ||(x' - x) / tau||^2

  explicit FeatureStatistic(Index p = 0)
      : gram(Eigen::MatrixXd::Zero(p, p)), moment(Eigen::VectorXd::Zero(p)) {}
  FeatureStatistic& operator+=(const FeatureStatistic& other);
};

/// Gram over snapshots t = 1..T weighted by mu_t, moment over the couplings
/// gamma_t with rows evaluated at the target particle against mu_{t+1}.
/// `gmms[t]` is required for t >= 1 when the internal block is active.
FeatureStatistic accumulate(const LinearEnergyModel& model, const PopulationTrajectory& train,
                            const std::vector<Coupling>& couplings,
                            const std::vector<std::optional<GaussianMixture>>& gmms = {});

/// Minimizer of theta^T G theta + 2 theta^T m + lambda ||theta||^2 over the
/// active block, i.e. (G + Lambda) theta = -m. Cholesky when every lambda is
/// positive, otherwise an SVD pseudo-inverse with cutoff 1e-10 * sigma_max.
Eigen::VectorXd solve(const FeatureStatistic& stats, const Eigen::VectorXd& lambda_diag);

/// Solves and writes theta into `model` (scattered over the active blocks).
void solve_into(LinearEnergyModel& model, const FeatureStatistic& stats);

/// Residual loss sum_pairs mass ||y^T theta + (x' - x)/tau||^2 from the statistic.
double residual_loss(const FeatureStatistic& stats, const Eigen::VectorXd& active_theta);

}  // namespace jkoflow
