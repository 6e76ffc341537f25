#include "jkoflow/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <spdlog/spdlog.h>

#include "jkoflow/error.hpp"
#include "jkoflow/parallel.hpp"
#include "jkoflow/random.hpp"

namespace jkoflow {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Eigen::VectorXd truth_potential_gradient(const GroundTruthEnergy& g, const Eigen::VectorXd& x,
                                         double t) {
  if (g.piecewise_time_varying) {
    Eigen::VectorXd out(x.size());
    for (Index i = 0; i < x.size(); ++i) out(i) = time_varying_gradient(x(i), t / g.time_horizon);
    return out;
  }
  if (!g.spec.potential) return Eigen::VectorXd::Zero(x.size());
  return gradient(*g.spec.potential, x);
}

// Subsampled copy of a snapshot for the interaction mean (reweighted).
EmpiricalSnapshot subsample(const EmpiricalSnapshot& s, Index k, std::uint64_t seed) {
  if (k <= 0 || k >= s.size()) return s;
  CounterRng rng(seed, 0x5ab5, static_cast<std::uint64_t>(s.time_index()));
  const auto perm = random_permutation(s.size(), rng);
  Eigen::MatrixXd pts(k, s.dim());
  Eigen::VectorXd w(k);
  for (Index i = 0; i < k; ++i) {
    pts.row(i) = s.points().row(perm[static_cast<std::size_t>(i)]);
    w(i) = s.weights()(perm[static_cast<std::size_t>(i)]);
  }
  if (!(w.sum() > 0.0)) w.setConstant(1.0);
  return EmpiricalSnapshot(std::move(pts), w / w.sum(), s.time_index());
}

}  // namespace

Variant parse_variant(const std::string& name) {
  if (name == "star") return Variant::star;
  if (name == "star_potential") return Variant::star_potential;
  if (name == "star_linear") return Variant::star_linear;
  if (name == "star_linear_potential") return Variant::star_linear_potential;
  if (name == "star_time_potential") return Variant::star_time_potential;
  throw ValidationError("unknown variant '" + name +
                        "' (expected star|star_potential|star_linear|star_linear_potential|"
                        "star_time_potential)");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::star: return "star";
    case Variant::star_potential: return "star_potential";
    case Variant::star_linear: return "star_linear";
    case Variant::star_linear_potential: return "star_linear_potential";
    case Variant::star_time_potential: return "star_time_potential";
  }
  return "?";
}

bool is_linear(Variant v) { return v == Variant::star_linear || v == Variant::star_linear_potential; }

Prediction parse_prediction(const std::string& name) {
  if (name == "explicit") return Prediction::explicit_euler;
  if (name == "implicit") return Prediction::implicit;
  throw ValidationError("unknown prediction scheme '" + name + "' (expected explicit|implicit)");
}

std::string to_string(Prediction p) { return p == Prediction::implicit ? "implicit" : "explicit"; }

Eigen::VectorXd potential_gradient(const EnergyModel& model, const Eigen::VectorXd& x, double t) {
  return std::visit(overloaded{
                        [&](const LinearEnergyModel& m) { return m.potential_gradient(x); },
                        [&](const MlpEnergyModel& m) { return m.potential_gradient(x, t); },
                        [&](const GroundTruthEnergy& g) { return truth_potential_gradient(g, x, t); },
                    },
                    model);
}

Eigen::MatrixXd drift(const EnergyModel& model, const EmpiricalSnapshot& snapshot, double t) {
  const Eigen::MatrixXd& x = snapshot.points();
  const Index n = x.rows(), d = x.cols();
  Eigen::MatrixXd out(n, d);
  std::visit(
      overloaded{
          [&](const LinearEnergyModel& m) {
            parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
              const Index i = static_cast<Index>(ii);
              const Eigen::VectorXd xi = x.row(i).transpose();
              Eigen::VectorXd g = m.potential_gradient(xi);
              if (m.use_interaction())
                for (Index j = 0; j < n; ++j)
                  g += snapshot.weights()(j) * m.interaction_gradient(xi - x.row(j).transpose());
              out.row(i) = g.transpose();
            });
          },
          [&](const MlpEnergyModel& m) {
            out.setZero();
            if (m.potential) {
              Eigen::MatrixXd in(d + (m.time_conditioned ? 1 : 0), n);
              in.topRows(d) = x.transpose();
              if (m.time_conditioned) in.row(d).setConstant(t / m.time_horizon);
              out = m.potential->input_gradient(in).topRows(d).transpose();
            }
            if (m.interaction) {
              parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
                const Index i = static_cast<Index>(ii);
                const Eigen::MatrixXd z = (-x.transpose()).colwise() + x.row(i).transpose();
                out.row(i) += (m.interaction->input_gradient(z) * snapshot.weights()).transpose();
              });
            }
          },
          [&](const GroundTruthEnergy& g) {
            for (Index i = 0; i < n; ++i)
              out.row(i) = truth_potential_gradient(g, x.row(i).transpose(), t).transpose();
            if (!g.piecewise_time_varying && g.spec.interaction)
              out += interaction_mean_gradient(*g.spec.interaction, x, snapshot.weights());
          },
      },
      model);
  return out;
}

double model_beta(const EnergyModel& model) {
  return std::visit(overloaded{
                        [](const LinearEnergyModel& m) { return m.beta(); },
                        [](const MlpEnergyModel& m) { return m.beta(); },
                        [](const GroundTruthEnergy& g) {
                          return g.piecewise_time_varying ? 0.0 : g.spec.beta;
                        },
                    },
                    model);
}

bool potential_only(const EnergyModel& model) {
  return std::visit(
      overloaded{
          [](const LinearEnergyModel& m) { return !m.use_interaction() && !m.use_internal; },
          [](const MlpEnergyModel& m) { return !m.interaction && !m.beta_raw; },
          [](const GroundTruthEnergy& g) {
            return g.piecewise_time_varying || (!g.spec.interaction && g.spec.beta == 0.0);
          },
      },
      model);
}

nlohmann::json model_to_json(const EnergyModel& model) {
  return std::visit(overloaded{
                        [](const LinearEnergyModel& m) { return m.to_json(); },
                        [](const MlpEnergyModel& m) { return m.to_json(); },
                        [](const GroundTruthEnergy& g) {
                          nlohmann::json j{{"type", "ground_truth"},
                                           {"piecewise_time_varying", g.piecewise_time_varying},
                                           {"time_horizon", g.time_horizon}};
                          if (!g.piecewise_time_varying) j["spec"] = g.spec.to_json();
                          return j;
                        },
                    },
                    model);
}

EnergyModel model_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "linear") return LinearEnergyModel::from_json(j);
  if (type == "mlp") return MlpEnergyModel::from_json(j);
  if (type == "ground_truth") {
    GroundTruthEnergy g;
    g.piecewise_time_varying = j.value("piecewise_time_varying", false);
    g.time_horizon = j.value("time_horizon", 1.0);
    if (!g.piecewise_time_varying) {
      g.spec = EnergySpec::from_json(j.at("spec"));
      g.spec.validate();
    }
    return g;
  }
  throw ValidationError("unknown model type '" + type + "'");
}

void save_model(const EnergyModel& model, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write model file " + file.string());
  out << model_to_json(model).dump(2) << "\n";
}

EnergyModel load_model(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open model file " + file.string());
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(file.string() + ": " + e.what());
  }
}

bool TrainConfig::uses_interaction() const {
  return (variant == Variant::star || variant == Variant::star_linear) && !pin_interaction;
}

bool TrainConfig::uses_internal() const {
  return (variant == Variant::star || variant == Variant::star_linear) && !pin_internal;
}

void TrainConfig::validate() const {
  ot.validate();
  if (!is_linear(variant) && epochs < 1) throw ValidationError("epochs must be at least 1");
  if (batch_pairs < 1) throw ValidationError("batch size must be at least 1");
  if (uses_internal() && gmm_k < 1) throw ValidationError("gmm k must be at least 1");
  for (double l : ridge_lambda)
    if (!(l >= 0.0)) throw ValidationError("ridge lambda must be nonnegative");
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  for (Index h : hidden)
    if (h < 1) throw ValidationError("hidden widths must be positive");
  if (interaction_subsample < 0) throw ValidationError("interaction subsample must be >= 0");
  if (is_linear(variant)) features.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return {{"variant", to_string(variant)},
          {"epochs", epochs},
          {"batch_pairs", batch_pairs},
          {"seed", seed},
          {"ot",
           {{"method", to_string(ot.method)},
            {"epsilon", ot.epsilon},
            {"max_iters", ot.max_iters},
            {"tolerance", ot.tolerance},
            {"batch_size", ot.batch_size},
            {"seed", ot.seed}}},
          {"gmm_k", gmm_k},
          {"ridge_lambda", ridge_lambda},
          {"pin_interaction", pin_interaction},
          {"pin_internal", pin_internal},
          {"hidden", hidden},
          {"learning_rate", learning_rate},
          {"features", features.to_json()},
          {"interaction_subsample", interaction_subsample}};
}

nlohmann::json FitResult::summary() const {
  return {{"loss_history", loss_history},     {"couple_seconds", couple_seconds},
          {"gmm_seconds", gmm_seconds},       {"train_seconds", train_seconds},
          {"coupling_solves", coupling_solves}, {"gmm_fits", gmm_fits}};
}

FitResult fit(const PopulationTrajectory& train, const TrainConfig& cfg,
              const std::vector<Coupling>* given) {
  cfg.validate();
  if (train.size() < 2) throw ValidationError("training needs at least two snapshots");
  const std::size_t T = train.steps();
  const Index d = train.dim();
  const double tau = train.tau();
  FitResult res;

  // couplings, once
  auto t0 = std::chrono::steady_clock::now();
  const std::size_t solves_before = solver_invocations();
  std::vector<Coupling> own;
  if (!given) own = couple_trajectory(train, cfg.ot);
  const std::vector<Coupling>& couplings = given ? *given : own;
  if (couplings.size() != T) throw ValidationError("coupling count does not match trajectory");
  res.coupling_solves = solver_invocations() - solves_before;
  res.couple_seconds = seconds_since(t0);

  // densities for the internal term, snapshots 1..T
  const bool internal = cfg.uses_internal();
  std::vector<std::optional<GaussianMixture>> gmms(T + 1);
  t0 = std::chrono::steady_clock::now();
  if (internal) {
    parallel_for(T, [&](std::size_t k) {
      const std::size_t t = k + 1;
      const int kk = static_cast<int>(std::min<Index>(cfg.gmm_k, train[t].size()));
      gmms[t] = fit_gmm(train[t], kk, cfg.seed);
    });
    res.gmm_fits = T;
  }
  res.gmm_seconds = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  if (is_linear(cfg.variant)) {
    std::optional<FeatureMap> inter;
    if (cfg.uses_interaction()) {
      FeatureOptions io = cfg.features;
      io.box_low = cfg.features.box_low - cfg.features.box_high;
      io.box_high = cfg.features.box_high - cfg.features.box_low;
      inter = build_features(d, io);
    }
    LinearEnergyModel model(build_features(d, cfg.features), inter, true, internal);
    model.ridge_lambda = cfg.ridge_lambda;
    const FeatureStatistic stats = accumulate(model, train, couplings, gmms);
    solve_into(model, stats);
    Eigen::VectorXd active(model.active_size());
    const auto idx = model.active_indices();
    for (std::size_t k = 0; k < idx.size(); ++k) active(static_cast<Index>(k)) = model.theta(idx[k]);
    res.loss_history.push_back(residual_loss(stats, active));
    res.model = std::move(model);
    res.train_seconds = seconds_since(t0);
    return res;
  }

  const bool time_cond = cfg.variant == Variant::star_time_potential;
  MlpEnergyModel model = make_mlp_model(d, true, cfg.uses_interaction(), internal, time_cond,
                                        cfg.hidden, cfg.seed, static_cast<double>(T));

  std::vector<EmpiricalSnapshot> inter_snaps;
  if (model.interaction)
    for (std::size_t t = 0; t <= T; ++t)
      inter_snaps.push_back(subsample(train[t], cfg.interaction_subsample, cfg.seed));

  std::vector<ResidualPair> pairs;
  for (std::size_t t = 0; t < T; ++t) {
    const EmpiricalSnapshot& src = train[t];
    const EmpiricalSnapshot& tgt = train[t + 1];
    std::vector<Eigen::VectorXd> scores;
    if (internal) {
      scores.resize(static_cast<std::size_t>(tgt.size()));
      parallel_for(scores.size(), [&](std::size_t j) {
        scores[j] = score(*gmms[t + 1], tgt.points().row(static_cast<Index>(j)).transpose());
      });
    }
    for (const auto& p : couplings[t].pairs) {
      if (p.mass <= 0.0) continue;
      ResidualPair rp;
      rp.source = src.points().row(p.source).transpose();
      rp.target = tgt.points().row(p.target).transpose();
      rp.mass = p.mass;
      rp.time = static_cast<double>(t + 1);
      if (model.interaction) rp.next = &inter_snaps[t + 1];
      if (internal) rp.score = scores[static_cast<std::size_t>(p.target)];
      pairs.push_back(std::move(rp));
    }
  }
  if (pairs.empty()) throw ValidationError("couplings carry no mass");

  AdamState adam(model.parameter_count());
  adam.lr = cfg.learning_rate;
  Eigen::VectorXd params = model.pack();
  std::vector<std::size_t> order(pairs.size());
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_pairs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    CounterRng rng(cfg.seed, 0xe90c, static_cast<std::uint64_t>(epoch));
    shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t lo = 0, b = 0; lo < order.size(); lo += bs, ++b) {
      const std::size_t hi = std::min(order.size(), lo + bs);
      std::vector<const ResidualPair*> batch;
      double mass = 0.0;
      for (std::size_t k = lo; k < hi; ++k) {
        batch.push_back(&pairs[order[k]]);
        mass += pairs[order[k]].mass;
      }
      LossAndGradient lg;
      try {
        lg = loss_and_param_gradient(model, batch, tau);
      } catch (const SolverError& e) {
        throw SolverError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                          ", batch " + std::to_string(b));
      }
      epoch_loss += lg.loss;
      adam_step(adam, params, lg.gradient / mass);
      if (!params.allFinite())
        throw SolverError("parameters became non-finite at epoch " + std::to_string(epoch) +
                          ", batch " + std::to_string(b));
      model.unpack(params);
    }
    res.loss_history.push_back(epoch_loss);
    if (epoch % 100 == 0 || epoch + 1 == cfg.epochs)
      spdlog::debug("epoch {} loss {}", epoch, epoch_loss);
  }
  res.model = std::move(model);
  res.train_seconds = seconds_since(t0);
  return res;
}

EmpiricalSnapshot step_explicit(const EnergyModel& model, const EmpiricalSnapshot& snapshot,
                                double tau, int t, bool noise, std::uint64_t seed) {
  Eigen::MatrixXd next = snapshot.points() - tau * drift(model, snapshot, t);
  const double beta = model_beta(model);
  if (noise && beta > 0.0)
    next += std::sqrt(2.0 * tau * beta) *
            standard_normal_noise(seed, t, snapshot.size(), snapshot.dim());
  if (!next.allFinite())
    throw SolverError("explicit prediction produced a non-finite state at step " +
                      std::to_string(t));
  return EmpiricalSnapshot(std::move(next), snapshot.weights(), t + 1);
}

EmpiricalSnapshot step_implicit(const EnergyModel& model, const EmpiricalSnapshot& snapshot,
                                double tau, int t) {
  if (!potential_only(model))
    throw ValidationError("implicit prediction needs a potential-only model");
  PotentialGradient g = [&](const Eigen::VectorXd& x, double tn) {
    return potential_gradient(model, x, tn);
  };
  try {
    return EmpiricalSnapshot(implicit_step(snapshot.points(), g, tau, static_cast<double>(t + 1)),
                             snapshot.weights(), t + 1);
  } catch (const SolverError& e) {
    throw SolverError("implicit prediction at step " + std::to_string(t) + ": " + e.what());
  }
}

PopulationTrajectory predict_explicit(const EnergyModel& model, const EmpiricalSnapshot& initial,
                                      int steps, double tau, bool noise, std::uint64_t seed,
                                      int start_time) {
  std::vector<EmpiricalSnapshot> out{initial.with_time_index(0)};
  EmpiricalSnapshot cur = initial;
  for (int k = 0; k < steps; ++k) {
    cur = step_explicit(model, cur, tau, start_time + k, noise, seed);
    out.push_back(cur.with_time_index(k + 1));
  }
  return PopulationTrajectory(std::move(out), tau, Provenance{{{"predicted", "explicit"}}, seed});
}

PopulationTrajectory predict_implicit(const EnergyModel& model, const EmpiricalSnapshot& initial,
                                      int steps, double tau, int start_time) {
  std::vector<EmpiricalSnapshot> out{initial.with_time_index(0)};
  EmpiricalSnapshot cur = initial;
  for (int k = 0; k < steps; ++k) {
    cur = step_implicit(model, cur, tau, start_time + k);
    out.push_back(cur.with_time_index(k + 1));
  }
  return PopulationTrajectory(std::move(out), tau, Provenance{{{"predicted", "implicit"}}, std::nullopt});
}

EmdSummary evaluate(const EnergyModel& model, const PopulationTrajectory& test,
                    Prediction prediction) {
  if (test.size() < 2) throw ValidationError("evaluation needs at least two test snapshots");
  std::vector<double> per(test.steps());
  parallel_for(per.size(), [&](std::size_t t) {
    const int ti = static_cast<int>(t);
    const EmpiricalSnapshot pred = prediction == Prediction::implicit
                                       ? step_implicit(model, test[t], test.tau(), ti)
                                       : step_explicit(model, test[t], test.tau(), ti);
    per[t] = emd(pred, test[t + 1]);
  });
  return summarize(per);
}

}  // namespace jkoflow
