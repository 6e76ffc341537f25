#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "jkoflow/datagen.hpp"
#include "jkoflow/density.hpp"
#include "jkoflow/features.hpp"
#include "jkoflow/functionals.hpp"
#include "jkoflow/linear_solver.hpp"
#include "jkoflow/measures.hpp"
#include "jkoflow/nn.hpp"
#include "jkoflow/ot.hpp"

namespace jkoflow {

enum class Variant { star, star_potential, star_linear, star_linear_potential, star_time_potential };

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);
bool is_linear(Variant v);

/// Known energy used as a reference model. With `piecewise_time_varying` the
/// potential is the piecewise 1-D V(x, t / time_horizon) from datagen and
/// `spec` is ignored.
struct GroundTruthEnergy {
  EnergySpec spec;
  bool piecewise_time_varying = false;
  double time_horizon = 1.0;
};

using EnergyModel = std::variant<LinearEnergyModel, MlpEnergyModel, GroundTruthEnergy>;

/// grad V(x, t) with t the unnormalized time index.
Eigen::VectorXd potential_gradient(const EnergyModel& model, const Eigen::VectorXd& x, double t);
/// Row i: grad V(x_i, t) + sum_j w_j grad U(x_i - x_j).
Eigen::MatrixXd drift(const EnergyModel& model, const EmpiricalSnapshot& snapshot, double t);
double model_beta(const EnergyModel& model);
bool potential_only(const EnergyModel& model);

nlohmann::json model_to_json(const EnergyModel& model);
EnergyModel model_from_json(const nlohmann::json& j);
void save_model(const EnergyModel& model, const std::filesystem::path& file);
EnergyModel load_model(const std::filesystem::path& file);

struct TrainConfig {
  Variant variant = Variant::star_potential;
  int epochs = 1000;
  Index batch_pairs = 250;
  std::uint64_t seed = 0;
  OtConfig ot;
  int gmm_k = 10;
  std::array<double, 3> ridge_lambda{0.01, 0.01, 0.01};
  bool pin_interaction = false;
  bool pin_internal = false;
  std::vector<Index> hidden{64, 64};
  double learning_rate = 1e-3;
  FeatureOptions features;
  Index interaction_subsample = 0;  // 0 = full next snapshot

  void validate() const;
  nlohmann::json to_json() const;
  bool uses_interaction() const;
  bool uses_internal() const;
};

struct FitResult {
  EnergyModel model;
  std::vector<double> loss_history;
  double couple_seconds = 0.0;
  double gmm_seconds = 0.0;
  double train_seconds = 0.0;
  std::size_t coupling_solves = 0;
  std::size_t gmm_fits = 0;

  nlohmann::json summary() const;
};

/// Couples once, fits densities when the internal term is active, then runs
/// either the closed-form solve or epochs of Adam over shuffled pair batches.
/// Pass `couplings` to skip the coupling step.
FitResult fit(const PopulationTrajectory& train, const TrainConfig& cfg,
              const std::vector<Coupling>* couplings = nullptr);

enum class Prediction { explicit_euler, implicit };
Prediction parse_prediction(const std::string& name);
std::string to_string(Prediction p);

/// One explicit step from `snapshot` at time index t.
EmpiricalSnapshot step_explicit(const EnergyModel& model, const EmpiricalSnapshot& snapshot,
                                double tau, int t, bool noise = false, std::uint64_t seed = 0);
/// One implicit step x' = x - tau grad V(x', t + 1); potential-only models.
EmpiricalSnapshot step_implicit(const EnergyModel& model, const EmpiricalSnapshot& snapshot,
                                double tau, int t);

/// Rollouts of `steps` steps; the initial snapshot is taken to sit at time
/// index `start_time` and the result is re-indexed from 0.
PopulationTrajectory predict_explicit(const EnergyModel& model, const EmpiricalSnapshot& initial,
                                      int steps, double tau, bool noise = false,
                                      std::uint64_t seed = 0, int start_time = 0);
PopulationTrajectory predict_implicit(const EnergyModel& model, const EmpiricalSnapshot& initial,
                                      int steps, double tau, int start_time = 0);

/// One-step-ahead EMD from each observed test snapshot.
EmdSummary evaluate(const EnergyModel& model, const PopulationTrajectory& test,
                    Prediction prediction = Prediction::explicit_euler);

}  // namespace jkoflow
