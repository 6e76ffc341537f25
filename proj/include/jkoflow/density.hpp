#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "jkoflow/measures.hpp"

namespace jkoflow {

/// Full-covariance Gaussian mixture. Covariances are stored together with
/// their lower Cholesky factors; immutable once built.
class GaussianMixture {
 public:
  GaussianMixture(Eigen::VectorXd weights, Eigen::MatrixXd means,
                  std::vector<Eigen::MatrixXd> covariances);

  Index components() const { return weights_.size(); }
  Index dim() const { return means_.cols(); }
  const Eigen::VectorXd& weights() const { return weights_; }
  /// k x d, one mean per row.
  const Eigen::MatrixXd& means() const { return means_; }
  const Eigen::MatrixXd& covariance(Index j) const { return covs_[static_cast<std::size_t>(j)]; }
  const Eigen::MatrixXd& cholesky(Index j) const { return chols_[static_cast<std::size_t>(j)]; }

  /// log N(x | m_j, S_j) for every component.
  Eigen::VectorXd component_log_densities(const Eigen::VectorXd& x) const;

  nlohmann::json to_json() const;
  static GaussianMixture from_json(const nlohmann::json& j);

 private:
  Eigen::VectorXd weights_;
  Eigen::MatrixXd means_;
  std::vector<Eigen::MatrixXd> covs_;
  std::vector<Eigen::MatrixXd> chols_;
  Eigen::VectorXd log_norm_;
};

/// log of the mixture density, via log-sum-exp.
double log_density(const GaussianMixture& gmm, const Eigen::VectorXd& x);

/// grad log rho(x) = sum_j r_j(x) S_j^{-1} (m_j - x).
Eigen::VectorXd score(const GaussianMixture& gmm, const Eigen::VectorXd& x);

struct GmmFitOptions {
  int max_iters = 200;
  double tolerance = 1e-6;      // change in weighted mean log-likelihood
  double covariance_reg = 1e-6;   // diagonal jitter, also the variance floor
  double collapse_weight = 1e-10;
  int max_reinitializations = 3;
};

struct GmmFitReport {
  /// Weighted mean log-likelihood before each M-step, restarted after a
  /// component re-initialization.
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
  int reinitializations = 0;
};

/// Weighted EM with k-means++ seeding. Deterministic for a fixed seed.
GaussianMixture fit_gmm(const EmpiricalSnapshot& snapshot, int k, std::uint64_t seed,
                        const GmmFitOptions& opts = {}, GmmFitReport* report = nullptr);

}  // namespace jkoflow
