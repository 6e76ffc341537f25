#include "jkoflow/datagen.hpp"

#include <cmath>

#include "jkoflow/error.hpp"
#include "jkoflow/parallel.hpp"
#include "jkoflow/random.hpp"

namespace jkoflow {

namespace {

constexpr std::uint64_t kInitStream = 0x1a17;
constexpr std::uint64_t kNoiseStream = 0x7015e;

bool in_rest_window(double t) { return (t >= 0.2 && t <= 0.3) || (t >= 0.7 && t <= 0.8); }

}  // namespace

Scheme parse_scheme(const std::string& name) {
  if (name == "explicit") return Scheme::explicit_euler;
  if (name == "implicit") return Scheme::implicit;
  throw ValidationError("unknown scheme '" + name + "' (expected explicit|implicit)");
}

std::string to_string(Scheme scheme) {
  return scheme == Scheme::implicit ? "implicit" : "explicit";
}

void GenConfig::validate() const {
  spec.validate();
  if (timesteps < 1) throw ValidationError("timesteps must be at least 1");
  if (n_particles < 2) throw ValidationError("need at least 2 particles");
  if (dim < 1) throw ValidationError("dim must be positive");
  if (!(tau > 0.0)) throw ValidationError("tau must be positive");
  if (!(init_low < init_high)) throw ValidationError("init_low must be below init_high");
  if (spec.potential && spec.potential->dim != dim)
    throw ValidationError("potential dimension does not match dim");
  if (spec.interaction && spec.interaction->dim != dim)
    throw ValidationError("interaction dimension does not match dim");
  if (scheme == Scheme::implicit && (spec.interaction || spec.beta > 0.0))
    throw ValidationError("the implicit scheme supports potential-only energies");
}

nlohmann::json GenConfig::to_json() const {
  return {{"spec", spec.to_json()},   {"n_particles", n_particles},
          {"dim", dim},               {"timesteps", timesteps},
          {"tau", tau},               {"init_low", init_low},
          {"init_high", init_high},   {"seed", seed},
          {"scheme", to_string(scheme)}};
}

Eigen::MatrixXd standard_normal_noise(std::uint64_t seed, int t, Index n, Index d) {
  Eigen::MatrixXd z(n, d);
  for (Index i = 0; i < n; ++i) {
    CounterRng rng(stream_key(seed, kNoiseStream), static_cast<std::uint64_t>(t),
                   static_cast<std::uint64_t>(i));
    for (Index k = 0; k < d; ++k) z(i, k) = rng.normal();
  }
  return z;
}

Eigen::MatrixXd uniform_box(std::uint64_t seed, Index n, Index d, double low, double high) {
  Eigen::MatrixXd x(n, d);
  for (Index i = 0; i < n; ++i) {
    CounterRng rng(seed, kInitStream, static_cast<std::uint64_t>(i));
    for (Index k = 0; k < d; ++k) x(i, k) = rng.uniform(low, high);
  }
  return x;
}

Eigen::MatrixXd interaction_mean_gradient(const GroundTruthFunction& kernel,
                                          const Eigen::MatrixXd& points,
                                          const Eigen::VectorXd& weights) {
  const Index n = points.rows();
  Eigen::VectorXd w =
      weights.size() == 0 ? Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)) : weights;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, points.cols());
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
    const Index i = static_cast<Index>(ii);
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(points.cols());
    for (Index j = 0; j < n; ++j)
      acc += w(j) * gradient(kernel, (points.row(i) - points.row(j)).transpose()).transpose();
    out.row(i) = acc;
  });
  return out;
}

Eigen::MatrixXd explicit_step(const Eigen::MatrixXd& points, const EnergySpec& spec, double tau,
                              const Eigen::MatrixXd& noise) {
  Eigen::MatrixXd next = points;
  if (spec.potential) next -= tau * gradient_rows(*spec.potential, points);
  if (spec.interaction) next -= tau * interaction_mean_gradient(*spec.interaction, points);
  if (spec.beta > 0.0) {
    if (noise.rows() != points.rows() || noise.cols() != points.cols())
      throw ValidationError("noise shape does not match points");
    next += std::sqrt(2.0 * tau * spec.beta) * noise;
  }
  if (!next.allFinite())
    throw SolverError("explicit step produced non-finite state (tau too large for this energy)");
  return next;
}

Eigen::MatrixXd implicit_step(const Eigen::MatrixXd& points, const PotentialGradient& grad,
                              double tau, double t_next, const ImplicitOptions& opts) {
  Eigen::MatrixXd next = points;
  std::vector<double> worst(static_cast<std::size_t>(points.rows()), 0.0);
  parallel_for(static_cast<std::size_t>(points.rows()), [&](std::size_t ii) {
    const Index i = static_cast<Index>(ii);
    const Eigen::VectorXd x0 = points.row(i).transpose();
    Eigen::VectorXd x = x0;
    auto residual = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
      return y - x0 + tau * grad(y, t_next);
    };
    Eigen::VectorXd r = residual(x);
    double rn = r.norm();
    double omega = opts.damping;
    for (int it = 0; it < opts.max_iters && rn >= opts.tolerance; ++it) {
      Eigen::VectorXd trial = x - omega * r;
      Eigen::VectorXd rt = residual(trial);
      double rtn = rt.norm();
      while (!(rtn < rn) && omega > 1e-8) {
        omega *= 0.5;
        trial = x - omega * r;
        rt = residual(trial);
        rtn = rt.norm();
      }
      if (!(rtn < rn)) break;
      x = std::move(trial);
      r = std::move(rt);
      rn = rtn;
      omega = std::min(opts.damping, 2.0 * omega);
    }
    next.row(i) = x.transpose();
    worst[ii] = std::isfinite(rn) ? rn : std::numeric_limits<double>::infinity();
  });
  double w = 0.0;
  for (double v : worst) w = std::max(w, v);
  if (!(w < opts.tolerance))
    throw SolverError("implicit step did not converge: worst residual " + format_double(w));
  return next;
}

std::pair<PopulationTrajectory, PopulationTrajectory> generate(const GenConfig& cfg) {
  cfg.validate();
  const Index n = cfg.n_particles;
  std::vector<Eigen::MatrixXd> states;
  states.push_back(uniform_box(cfg.seed, n, cfg.dim, cfg.init_low, cfg.init_high));
  for (int t = 0; t < cfg.timesteps; ++t) {
    const Eigen::MatrixXd& x = states.back();
    try {
      if (cfg.scheme == Scheme::implicit) {
        PotentialGradient g = [&](const Eigen::VectorXd& y, double) -> Eigen::VectorXd {
          return cfg.spec.potential ? gradient(*cfg.spec.potential, y)
                                    : Eigen::VectorXd::Zero(y.size());
        };
        states.push_back(implicit_step(x, g, cfg.tau, static_cast<double>(t + 1)));
      } else {
        const Eigen::MatrixXd noise = cfg.spec.beta > 0.0
                                          ? standard_normal_noise(cfg.seed, t, n, cfg.dim)
                                          : Eigen::MatrixXd();
        states.push_back(explicit_step(x, cfg.spec, cfg.tau, noise));
      }
    } catch (const SolverError& e) {
      throw SolverError("generation step " + std::to_string(t) + "->" + std::to_string(t + 1) +
                        ": " + e.what());
    }
  }
  const Index n_train = n / 2;
  std::vector<EmpiricalSnapshot> train, test;
  for (std::size_t t = 0; t < states.size(); ++t) {
    train.push_back(EmpiricalSnapshot::uniform(states[t].topRows(n_train), static_cast<int>(t)));
    test.push_back(
        EmpiricalSnapshot::uniform(states[t].bottomRows(n - n_train), static_cast<int>(t)));
  }
  Provenance prov{cfg.to_json(), cfg.seed};
  return {PopulationTrajectory(std::move(train), cfg.tau, prov),
          PopulationTrajectory(std::move(test), cfg.tau, prov)};
}

double time_varying_potential(double x, double t) {
  return in_rest_window(t) ? 0.0 : -0.75 * x * x;
}

double time_varying_gradient(double x, double t) { return in_rest_window(t) ? 0.0 : -1.5 * x; }

PopulationTrajectory generate_time_varying_1d(std::uint64_t seed, Index particles) {
  if (particles < 1) throw ValidationError("need at least one particle");
  const double tau = 1.0 / kTimeVaryingSteps;
  PotentialGradient g = [](const Eigen::VectorXd& y, double t) -> Eigen::VectorXd {
    Eigen::VectorXd out(1);
    out(0) = time_varying_gradient(y(0), t);
    return out;
  };
  std::vector<EmpiricalSnapshot> snaps;
  Eigen::MatrixXd x = uniform_box(seed, particles, 1, -1.0, 1.0);
  snaps.push_back(EmpiricalSnapshot::uniform(x, 0));
  for (int k = 0; k < kTimeVaryingSteps; ++k) {
    const double t_next = static_cast<double>(k + 1) / kTimeVaryingSteps;
    x = implicit_step(x, g, tau, t_next);
    snaps.push_back(EmpiricalSnapshot::uniform(x, k + 1));
  }
  nlohmann::json gen = {{"experiment", "time_varying_1d"},
                        {"particles", particles},
                        {"steps", kTimeVaryingSteps},
                        {"scheme", "implicit"}};
  return PopulationTrajectory(std::move(snaps), tau, Provenance{gen, seed});
}

}  // namespace jkoflow
