#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <json.hpp>

#include "jkoflow/functionals.hpp"
#include "jkoflow/measures.hpp"

namespace jkoflow {

enum class Scheme { explicit_euler, implicit };

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme scheme);

struct GenConfig {
  EnergySpec spec;
  Index n_particles = 2000;  // 2N: first half train, second half test
  Index dim = 2;
  int timesteps = 5;
  double tau = 0.01;
  double init_low = -4.0;
  double init_high = 4.0;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::explicit_euler;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Gradient of a (possibly time-dependent) potential: grad(x, t).
using PotentialGradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>;

struct ImplicitOptions {
  int max_iters = 200;
  double tolerance = 1e-8;
  double damping = 0.5;
};

/// N x d standard normals; row i is drawn from the stream keyed by (seed, t, i).
Eigen::MatrixXd standard_normal_noise(std::uint64_t seed, int t, Index n, Index d);

/// N x d uniform samples in [low, high)^d, row i from stream (seed, i).
Eigen::MatrixXd uniform_box(std::uint64_t seed, Index n, Index d, double low, double high);

/// Row i: sum_j w_j grad U(x_i - x_j) over all particles including i itself.
/// Uniform weights when `weights` is empty.
Eigen::MatrixXd interaction_mean_gradient(const GroundTruthFunction& kernel,
                                          const Eigen::MatrixXd& points,
                                          const Eigen::VectorXd& weights = {});

/// Euler-Maruyama step
///   x' = x - tau grad V(x) - tau mean_j grad U(x - x_j) + sqrt(2 tau beta) n.
Eigen::MatrixXd explicit_step(const Eigen::MatrixXd& points, const EnergySpec& spec, double tau,
                              const Eigen::MatrixXd& noise);

/// Solves x' = x - tau grad V(x', t_next) row by row with damped fixed-point
/// iterations warm-started at x; the damping is halved whenever the residual
/// grows, which makes each update a gradient step on the proximal objective
/// 0.5||x' - x||^2 + tau V(x'). Throws SolverError if any row misses the
/// tolerance after max_iters.
Eigen::MatrixXd implicit_step(const Eigen::MatrixXd& points, const PotentialGradient& grad,
                              double tau, double t_next, const ImplicitOptions& opts = {});

/// Samples 2N particles in the init box and evolves them for `timesteps`
/// steps. Returns (train, test) built from the first and second halves.
std::pair<PopulationTrajectory, PopulationTrajectory> generate(const GenConfig& cfg);

/// Piecewise potential V(x, t): 0 on t in [0.2, 0.3] and [0.7, 0.8],
/// -0.75 x^2 otherwise.
double time_varying_potential(double x, double t);
double time_varying_gradient(double x, double t);

/// Number of implicit steps over t in [0, 1] in the piecewise experiment.
inline constexpr int kTimeVaryingSteps = 10;

/// 1-D particles, uniform in [-1, 1], evolved with the implicit scheme
/// under the piecewise potential at times t_k = k / 10. Deterministic.
PopulationTrajectory generate_time_varying_1d(std::uint64_t seed, Index particles = 200);

}  // namespace jkoflow
