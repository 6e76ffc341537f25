#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "jkoflow/measures.hpp"

namespace jkoflow {

double softplus(double z);
double sigmoid(double z);

/// Scalar-output MLP: softplus hidden layers, linear output layer.
/// weights[l] is widths[l+1] x widths[l].
struct Mlp {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  Mlp() = default;
  /// Zero-initialized net with the given widths; widths.back() must be 1.
  explicit Mlp(const std::vector<Index>& widths);
  /// Gaussian weights with std sqrt(1 / fan_in), zero biases.
  static Mlp random(const std::vector<Index>& widths, std::uint64_t seed, std::uint64_t stream);

  Index input_dim() const { return weights.front().cols(); }
  std::vector<Index> widths() const;
  Index parameter_count() const;

  /// Column-wise evaluation of a d x B input block.
  Eigen::RowVectorXd forward(const Eigen::MatrixXd& x) const;
  double forward(const Eigen::VectorXd& x) const;
  /// d x B block of input gradients.
  Eigen::MatrixXd input_gradient(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd input_gradient(const Eigen::VectorXd& x) const;

  /// Adds d/dparams of sum_b v_b . grad_x f(x_b) to `grad`, which must have
  /// the same shapes as this net. Returns the input gradients as a by-product.
  Eigen::MatrixXd backprop_input_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& v,
                                          Mlp& grad) const;

  /// Zero net of identical shape.
  Mlp zeros_like() const;
  void pack(Eigen::VectorXd& out, Index& offset) const;
  void unpack(const Eigen::VectorXd& in, Index& offset);

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);
};

/// V (optionally time-conditioned), U and a nonnegative beta = softplus(raw).
struct MlpEnergyModel {
  Index dim = 1;
  std::optional<Mlp> potential;
  bool time_conditioned = false;  // potential input is (x, t / time_horizon)
  double time_horizon = 1.0;
  std::optional<Mlp> interaction;
  std::optional<double> beta_raw;

  double beta() const { return beta_raw ? softplus(*beta_raw) : 0.0; }
  /// t is the unnormalized time index; divided by time_horizon internally.
  Eigen::VectorXd potential_gradient(const Eigen::VectorXd& x, double t) const;
  Eigen::VectorXd interaction_gradient(const Eigen::VectorXd& z) const;
  double potential_value(const Eigen::VectorXd& x, double t) const;

  Index parameter_count() const;
  Eigen::VectorXd pack() const;
  void unpack(const Eigen::VectorXd& params);

  nlohmann::json to_json() const;
  static MlpEnergyModel from_json(const nlohmann::json& j);
};

/// hidden = {64, 64} gives d -> 64 -> 64 -> 1.
MlpEnergyModel make_mlp_model(Index dim, bool potential, bool interaction, bool internal,
                              bool time_conditioned, const std::vector<Index>& hidden,
                              std::uint64_t seed, double time_horizon = 1.0,
                              double beta_init = 0.1);

/// One term of the residual loss. `next` is the snapshot mu_{t+1} the
/// interaction mean runs over; `score` is grad log rho_{t+1}(target).
struct ResidualPair {
  Eigen::VectorXd source;
  Eigen::VectorXd target;
  double mass = 0.0;
  double time = 0.0;  // unnormalized time index of the target
  const EmpiricalSnapshot* next = nullptr;
  Eigen::VectorXd score;
};

struct LossAndGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;  // packed like MlpEnergyModel::pack
};

/// sum mass ||grad V(x') + sum_j w_j grad U(x' - x_j) + beta score(x') + (x' - x)/tau||^2
/// and its exact gradient with respect to every packed parameter.
LossAndGradient loss_and_param_gradient(const MlpEnergyModel& model,
                                        const std::vector<const ResidualPair*>& batch,
                                        double tau);

/// The loss alone.
double residual_loss(const MlpEnergyModel& model, const std::vector<const ResidualPair*>& batch,
                     double tau);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 10.0;

  AdamState() = default;
  explicit AdamState(Index n) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

/// Clips grads to global norm <= clip_norm, then applies a bias-corrected
/// Adam update in place. Returns the pre-clip gradient norm.
double adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads);

}  // namespace jkoflow
