#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "jkoflow/measures.hpp"

namespace jkoflow {

/// Polynomial and Gaussian RBF features. Layout of the feature vector:
///   x_i^p for p = 1..max_degree, i = 1..d (degree-major),
///   then x_i x_j for i < j when `cross` is set,
///   then exp(-||x - c_k||^2 / sigma) for each center row c_k.
struct FeatureMap {
  Index dim = 1;
  int max_degree = 0;  // 0 disables the polynomial block
  bool cross = false;
  double rbf_sigma = 0.5;
  Eigen::MatrixXd centers;  // m x d, empty disables the RBF block

  Index polynomial_count() const;
  Index cross_count() const;
  Index rbf_count() const { return centers.rows(); }
  Index size() const { return polynomial_count() + cross_count() + rbf_count(); }

  void validate() const;
  nlohmann::json to_json() const;
  static FeatureMap from_json(const nlohmann::json& j);
};

/// Seed of the random RBF centers used when the tensor grid is too large.
inline constexpr std::uint64_t kRbfCenterSeed = 20240611;

struct FeatureOptions {
  bool polynomial = true;
  int max_degree = 4;
  bool cross = false;
  bool rbf = true;
  double rbf_sigma = 0.5;
  int rbf_grid = 10;          // points per dimension
  Index random_centers = 200;  // used for d > 2
  double box_low = -4.0;
  double box_high = 4.0;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Parses a list like "poly4,rbf" or "poly2" into the feature switches of `base`.
FeatureOptions parse_feature_list(const std::string& list, FeatureOptions base = {});

FeatureMap build_features(Index dim, const FeatureOptions& opts);

/// Degree-4 per-coordinate monomials plus sigma = 0.5 RBFs on the box: a
/// 10-per-dim grid when d <= 2, otherwise 200 uniform random centers.
FeatureMap build_default(Index dim, double box_low = -4.0, double box_high = 4.0);

/// Monomials only (no RBF block).
FeatureMap polynomial_features(Index dim, int max_degree, bool cross = false);

Eigen::VectorXd eval_features(const FeatureMap& fm, const Eigen::VectorXd& x);

/// n x d; row i is the gradient of feature i.
Eigen::MatrixXd jacobian_features(const FeatureMap& fm, const Eigen::VectorXd& x);

}  // namespace jkoflow
