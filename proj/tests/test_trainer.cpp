#include <doctest.h>

#include "helpers.hpp"
#include "jkoflow/error.hpp"
#include "jkoflow/trainer.hpp"

using namespace jkoflow;

namespace {

std::pair<PopulationTrajectory, PopulationTrajectory> small_data(FunctionKind kind, double beta = 0.0,
                                                                 Index n = 200) {
  GenConfig gen;
  gen.spec.potential = GroundTruthFunction{kind, 2};
  gen.spec.beta = beta;
  gen.n_particles = n;
  gen.timesteps = 3;
  gen.seed = 3;
  return generate(gen);
}

}  // namespace

TEST_CASE("variant names") {
  for (Variant v : {Variant::star, Variant::star_potential, Variant::star_linear,
                    Variant::star_linear_potential, Variant::star_time_potential})
    CHECK(parse_variant(to_string(v)) == v);
  CHECK_THROWS_AS(parse_variant("jkonet"), ValidationError);
  CHECK(parse_prediction("implicit") == Prediction::implicit);
}

TEST_CASE("flat data through the linear pipeline has zero EMD") {
  const auto [train, test] = small_data(FunctionKind::flat);
  TrainConfig cfg;
  cfg.variant = Variant::star_linear_potential;
  const FitResult r = fit(train, cfg);
  CHECK(evaluate(r.model, test).mean < 1e-6);
}

TEST_CASE("linear fit echoes inductive-bias pinning") {
  const auto [train, test] = small_data(FunctionKind::wavy_plateau, 0.1);
  TrainConfig cfg;
  cfg.variant = Variant::star_linear;
  cfg.features = parse_feature_list("poly3");
  cfg.pin_interaction = true;
  cfg.gmm_k = 3;
  const FitResult r = fit(train, cfg);
  const auto& m = std::get<LinearEnergyModel>(r.model);
  CHECK_FALSE(m.use_interaction());
  CHECK(m.use_internal);
  CHECK(r.gmm_fits == train.steps());
  cfg.pin_internal = true;
  const FitResult p = fit(train, cfg);
  CHECK(p.gmm_fits == 0);
  CHECK(model_beta(p.model) == 0.0);
}

TEST_CASE("MLP training reduces the loss and is deterministic") {
  const auto [train, test] = small_data(FunctionKind::styblinski_tang);
  TrainConfig cfg;
  cfg.variant = Variant::star_potential;
  cfg.epochs = 30;
  cfg.hidden = {16, 16};
  cfg.seed = 2;
  const FitResult a = fit(train, cfg);
  const FitResult b = fit(train, cfg);
  CHECK(a.loss_history.size() == 30);
  CHECK(a.loss_history.back() < a.loss_history.front());
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.coupling_solves == train.steps());
}

TEST_CASE("full MLP variant with interaction and internal terms trains") {
  GenConfig gen;
  gen.spec.potential = GroundTruthFunction{FunctionKind::flowers, 2};
  gen.spec.interaction = GroundTruthFunction{FunctionKind::quadratic, 2};
  gen.spec.beta = 0.1;
  gen.n_particles = 120;
  gen.timesteps = 2;
  gen.seed = 4;
  const auto [train, test] = generate(gen);
  TrainConfig cfg;
  cfg.variant = Variant::star;
  cfg.epochs = 5;
  cfg.hidden = {8};
  cfg.gmm_k = 2;
  cfg.interaction_subsample = 20;
  const FitResult r = fit(train, cfg);
  CHECK(std::isfinite(r.loss_history.back()));
  CHECK(model_beta(r.model) > 0.0);
  CHECK(std::isfinite(evaluate(r.model, test).mean));
  CHECK_THROWS_AS(step_implicit(r.model, test[0], 0.01, 0), ValidationError);
}

TEST_CASE("ground truth reproduces its own implicit data") {
  GenConfig gen;
  gen.spec.potential = GroundTruthFunction{FunctionKind::wavy_plateau, 2};
  gen.n_particles = 100;
  gen.timesteps = 3;
  gen.scheme = Scheme::implicit;
  gen.seed = 5;
  const auto [train, test] = generate(gen);
  const GroundTruthEnergy truth{gen.spec, false, 1.0};
  CHECK(evaluate(truth, test, Prediction::implicit).mean < 1e-6);
  const PopulationTrajectory roll = predict_implicit(truth, test[0], 3, gen.tau);
  CHECK((roll[3].points() - test[3].points()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("models round-trip through JSON") {
  const auto dir = testing::scratch_dir("trainer_models");
  GroundTruthEnergy g;
  g.spec.potential = GroundTruthFunction{FunctionKind::relu, 2};
  g.spec.beta = 0.3;
  save_model(g, dir / "g.json");
  const EnergyModel gb = load_model(dir / "g.json");
  CHECK(model_beta(gb) == 0.3);

  const MlpEnergyModel m = make_mlp_model(2, true, false, false, true, {4}, 1, 5.0);
  save_model(m, dir / "m.json");
  const EnergyModel mb = load_model(dir / "m.json");
  const Eigen::Vector2d x(0.1, 0.4);
  CHECK((potential_gradient(mb, x, 2.0) - potential_gradient(m, x, 2.0)).norm() < 1e-14);
  CHECK_THROWS_AS(load_model(dir / "missing.json"), ValidationError);
}

TEST_CASE("noisy explicit rollout is seeded") {
  GroundTruthEnergy g;
  g.spec.potential = GroundTruthFunction{FunctionKind::flat, 2};
  g.spec.beta = 0.5;
  const auto start = EmpiricalSnapshot::uniform(Eigen::MatrixXd::Zero(50, 2), 0);
  const auto a = predict_explicit(g, start, 2, 0.1, true, 7);
  const auto b = predict_explicit(g, start, 2, 0.1, true, 7);
  CHECK(a[2].points() == b[2].points());
  CHECK(a[2].points().norm() > 0.0);
  CHECK(predict_explicit(g, start, 2, 0.1, false)[2].points().norm() == 0.0);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = TrainConfig{};
  cfg.ridge_lambda = {0.01, -1.0, 0.0};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
