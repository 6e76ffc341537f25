#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "jkoflow/error.hpp"
#include "jkoflow/experiments.hpp"
#include "jkoflow/parallel.hpp"
#include "jkoflow/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace jkoflow;

namespace {

const std::vector<std::string> kSubcommands{"generate", "couple",  "train",
                                            "evaluate", "predict", "experiment"};

struct OtFlags {
  std::string method = "exact";
  double epsilon = 1.0;
  Index batch_size = 1000;
  int max_iters = 2000;
  double tolerance = 1e-6;

  void add(CLI::App* app) {
    app->add_option("--ot-method", method, "exact | sinkhorn")->capture_default_str();
    app->add_option("--ot-epsilon", epsilon, "Sinkhorn regularization")->capture_default_str();
    app->add_option("--ot-batch-size", batch_size, "particles per OT sub-problem")
        ->capture_default_str();
    app->add_option("--ot-max-iters", max_iters, "Sinkhorn iteration cap")->capture_default_str();
    app->add_option("--ot-tolerance", tolerance, "Sinkhorn marginal tolerance")
        ->capture_default_str();
  }
  OtConfig config(std::uint64_t seed) const {
    OtConfig c;
    c.method = parse_ot_method(method);
    c.epsilon = epsilon;
    c.batch_size = batch_size;
    c.max_iters = max_iters;
    c.tolerance = tolerance;
    c.seed = seed;
    return c;
  }
};

struct GenerateFlags {
  std::string potential = "flat";
  std::string interaction;
  double beta = 0.0;
  Index dim = 2;
  Index particles = 2000;
  int steps = 5;
  double tau = 0.01;
  double init_low = -4.0;
  double init_high = 4.0;
  std::string scheme = "explicit";
  std::uint64_t seed = 0;
  std::string out;
};

struct CoupleFlags {
  std::string data;
  std::string out;
  std::uint64_t seed = 0;
  OtFlags ot;
};

struct TrainFlags {
  std::string data;
  std::string out;
  std::string variant = "star_potential";
  std::string solver;
  std::string couplings;
  int epochs = 1000;
  Index batch_pairs = 250;
  std::uint64_t seed = 0;
  int gmm_k = 10;
  std::vector<double> ridge_lambda{0.01};
  bool pin_interaction = false;
  bool pin_internal = false;
  std::vector<Index> hidden{64, 64};
  double learning_rate = 1e-3;
  std::string features = "poly4,rbf";
  double rbf_sigma = 0.5;
  int rbf_grid = 10;
  bool features_cross = false;
  Index interaction_subsample = 0;
  double train_fraction = 0.0;
  OtFlags ot;
};

struct EvaluateFlags {
  std::string data;
  std::string model;
  std::string report;
  std::string prediction = "explicit";
  double train_fraction = 0.0;
  std::uint64_t seed = 0;
};

struct PredictFlags {
  std::string data;
  std::string model;
  std::string out;
  std::string prediction = "explicit";
  int steps = 0;
  double tau = 0.0;
  int start_time = 0;
  bool noise = false;
  std::uint64_t seed = 0;
};

struct ExperimentFlags {
  std::string name;
  std::uint64_t seed = 0;
  bool full = false;
  std::string out;
  int epochs = 0;
  Index particles = 0;
};

// Flag tokens from a flat JSON object: {"epochs": 10, "full": true} -> --epochs 10 --full.
std::vector<std::string> config_tokens(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot read config " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(file.string() + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw ValidationError(file.string() + ": config must be a JSON object");
  if (j.contains("options")) j = j["options"];
  std::vector<std::string> out;
  auto scalar = [](const json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return format_double(v.get<double>());
    return v.dump();
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "config" || key == "command") continue;
    const std::string flag = "--" + key;
    if (v.is_boolean()) {
      if (v.get<bool>()) out.push_back(flag);
    } else if (v.is_array()) {
      if (v.empty()) continue;
      out.push_back(flag);
      for (const auto& e : v) out.push_back(scalar(e));
    } else if (!v.is_null()) {
      out.push_back(flag);
      out.push_back(scalar(v));
    }
  }
  return out;
}

// Config values go right after the subcommand so later command-line flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::optional<fs::path> cfg;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) cfg = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) cfg = args[i].substr(9);
  }
  if (!cfg) return args;
  const auto tokens = config_tokens(*cfg);
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (std::find(kSubcommands.begin(), kSubcommands.end(), args[i]) != kSubcommands.end()) {
      args.insert(args.begin() + static_cast<std::ptrdiff_t>(i + 1), tokens.begin(), tokens.end());
      break;
    }
  }
  return args;
}

json resolved_config(const CLI::App& app, const CLI::App& sub) {
  json opts = json::object();
  json positional = json::object();
  auto collect = [&](const CLI::App& a) {
    for (const CLI::Option* o : a.get_options()) {
      if (o->get_lnames().empty()) {
        if (!o->results().empty()) positional[o->get_name()] = o->results().back();
        continue;
      }
      const std::string name = o->get_lnames().front();
      if (name.empty() || name == "help" || name == "config") continue;
      if (o->get_type_size() == 0) {
        opts[name] = o->count() > 0;
        continue;
      }
      const auto& res = o->results();
      if (res.empty()) {
        const std::string def = o->get_default_str();
        if (def.empty()) continue;
        if (def.front() == '[' && def.back() == ']') {
          json items = json::array();
          std::stringstream ss(def.substr(1, def.size() - 2));
          for (std::string item; std::getline(ss, item, ',');) items.push_back(item);
          opts[name] = items;
        } else {
          opts[name] = def;
        }
      } else if (o->get_expected_max() > 1) {
        opts[name] = res;
      } else {
        opts[name] = res.back();
      }
    }
  };
  collect(app);
  collect(sub);
  json out = {{"command", sub.get_name()}, {"options", opts}};
  if (!positional.empty()) out["positional"] = positional;
  return out;
}

void write_json(const json& j, const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

// File outputs get <stem>.config.json next to them; directories get resolved_config.json.
fs::path config_echo_for_file(const fs::path& file) {
  fs::path p = file;
  return p.replace_extension(".config.json");
}

fs::path train_summary_for(const fs::path& model) {
  fs::path p = model;
  return p.replace_extension(".train.json");
}

struct Dataset {
  PopulationTrajectory train;
  std::optional<PopulationTrajectory> test;
};

// d/ holds the training snapshots; d/test/ the held-out ones when present.
// With a train fraction the directory is split per snapshot instead.
Dataset load_dataset(const fs::path& dir, double train_fraction, std::uint64_t seed) {
  PopulationTrajectory all = load_trajectory(dir);
  if (train_fraction > 0.0) {
    auto [tr, te] = split_train_test(all, train_fraction, seed);
    return {std::move(tr), std::move(te)};
  }
  std::optional<PopulationTrajectory> test;
  if (fs::exists(dir / "test" / "metadata.json")) test = load_trajectory(dir / "test");
  return {std::move(all), std::move(test)};
}

void cmd_generate(const GenerateFlags& f, const json& echo) {
  GenConfig cfg;
  if (f.potential != "none") cfg.spec.potential = GroundTruthFunction{parse_function_kind(f.potential), f.dim};
  if (!f.interaction.empty() && f.interaction != "none") {
    const FunctionKind k = parse_function_kind(f.interaction);
    if (k == FunctionKind::holder_table)
      throw ValidationError("holder_table is not supported as an interaction kernel");
    cfg.spec.interaction = GroundTruthFunction{k, f.dim};
  }
  cfg.spec.beta = f.beta;
  cfg.dim = f.dim;
  cfg.n_particles = f.particles;
  cfg.timesteps = f.steps;
  cfg.tau = f.tau;
  cfg.init_low = f.init_low;
  cfg.init_high = f.init_high;
  cfg.scheme = parse_scheme(f.scheme);
  cfg.seed = f.seed;
  const auto [train, test] = generate(cfg);
  const fs::path out = f.out;
  save_trajectory(train, out);
  save_trajectory(test, out / "test");
  write_json(echo, out / "resolved_config.json");
  spdlog::info("wrote {} train and {} test snapshots to {}", train.size(), test.size(), out.string());
}

void cmd_couple(const CoupleFlags& f, const json& echo) {
  const PopulationTrajectory traj = load_trajectory(f.data);
  const fs::path out = f.out.empty() ? fs::path(f.data) / "couplings" : fs::path(f.out);
  const auto couplings = couple_trajectory(traj, f.ot.config(f.seed));
  fs::create_directories(out);
  for (std::size_t t = 0; t < couplings.size(); ++t) {
    check_coupling(couplings[t], traj[t], traj[t + 1], 1e-6);
    save_coupling(couplings[t], out / coupling_filename(static_cast<int>(t)));
  }
  write_json(echo, out / "resolved_config.json");
  spdlog::info("wrote {} couplings to {}", couplings.size(), out.string());
}

Variant resolve_variant(const std::string& variant, const std::string& solver) {
  Variant v = parse_variant(variant);
  if (solver.empty()) return v;
  if (solver == "linear") {
    if (v == Variant::star) return Variant::star_linear;
    if (v == Variant::star_potential) return Variant::star_linear_potential;
    if (v == Variant::star_time_potential)
      throw ValidationError("the time-conditioned variant has no linear solver");
    return v;
  }
  if (solver == "nn" || solver == "mlp") {
    if (v == Variant::star_linear) return Variant::star;
    if (v == Variant::star_linear_potential) return Variant::star_potential;
    return v;
  }
  throw ValidationError("unknown solver '" + solver + "' (expected linear or nn)");
}

void cmd_train(const TrainFlags& f, const json& echo) {
  TrainConfig cfg;
  cfg.variant = resolve_variant(f.variant, f.solver);
  cfg.epochs = f.epochs;
  cfg.batch_pairs = f.batch_pairs;
  cfg.seed = f.seed;
  cfg.ot = f.ot.config(f.seed);
  cfg.gmm_k = f.gmm_k;
  if (f.ridge_lambda.size() == 1)
    cfg.ridge_lambda = {f.ridge_lambda[0], f.ridge_lambda[0], f.ridge_lambda[0]};
  else if (f.ridge_lambda.size() == 3)
    cfg.ridge_lambda = {f.ridge_lambda[0], f.ridge_lambda[1], f.ridge_lambda[2]};
  else
    throw ValidationError("--ridge-lambda takes one or three values");
  cfg.pin_interaction = f.pin_interaction;
  cfg.pin_internal = f.pin_internal;
  cfg.hidden = f.hidden;
  cfg.learning_rate = f.learning_rate;
  FeatureOptions fo;
  fo.rbf_sigma = f.rbf_sigma;
  fo.rbf_grid = f.rbf_grid;
  fo.cross = f.features_cross;
  cfg.features = parse_feature_list(f.features, fo);
  cfg.interaction_subsample = f.interaction_subsample;

  const Dataset ds = load_dataset(f.data, f.train_fraction, f.seed);
  std::vector<Coupling> given;
  if (!f.couplings.empty()) {
    for (std::size_t t = 0; t < ds.train.steps(); ++t) {
      given.push_back(load_coupling(fs::path(f.couplings) / coupling_filename(static_cast<int>(t)),
                                    static_cast<int>(t)));
      check_coupling(given.back(), ds.train[t], ds.train[t + 1], 1e-6);
    }
  }
  const FitResult r = fit(ds.train, cfg, f.couplings.empty() ? nullptr : &given);
  const fs::path out = f.out;
  save_model(r.model, out);
  json summary = r.summary();
  summary["config"] = cfg.to_json();
  write_json(summary, train_summary_for(out));
  write_json(echo, config_echo_for_file(out));
  spdlog::info("trained {} in {:.3f}s (final loss {})", to_string(cfg.variant), r.train_seconds,
               r.loss_history.empty() ? 0.0 : r.loss_history.back());
}

void cmd_evaluate(const EvaluateFlags& f, const json& echo) {
  const EnergyModel model = load_model(f.model);
  const Dataset ds = load_dataset(f.data, f.train_fraction, f.seed);
  const PopulationTrajectory& test = ds.test ? *ds.test : ds.train;
  if (!ds.test) spdlog::warn("no held-out snapshots found; evaluating on {}", f.data);
  const auto t0 = std::chrono::steady_clock::now();
  const EmdSummary s = evaluate(model, test, parse_prediction(f.prediction));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json report = {{"mean_emd", s.mean},
                 {"std_emd", s.std},
                 {"per_step_emd", s.per_step},
                 {"prediction", f.prediction},
                 {"eval_seconds", secs}};
  const fs::path summary_file = train_summary_for(f.model);
  if (fs::exists(summary_file)) {
    std::ifstream in(summary_file);
    json t = json::parse(in, nullptr, false);
    if (!t.is_discarded())
      for (const char* k :
           {"loss_history", "couple_seconds", "gmm_seconds", "train_seconds", "coupling_solves"})
        if (t.contains(k)) report[k] = t[k];
  }
  const fs::path out = f.report;
  write_json(report, out);
  write_json(echo, config_echo_for_file(out));
  std::cout << "mean_emd " << format_double(s.mean) << " std_emd " << format_double(s.std) << '\n';
}

void cmd_predict(const PredictFlags& f, const json& echo) {
  const EnergyModel model = load_model(f.model);
  const PopulationTrajectory data = load_trajectory(f.data);
  const int steps = f.steps > 0 ? f.steps : static_cast<int>(data.steps());
  const double tau = f.tau > 0.0 ? f.tau : data.tau();
  const PopulationTrajectory pred =
      parse_prediction(f.prediction) == Prediction::implicit
          ? predict_implicit(model, data[0], steps, tau, f.start_time)
          : predict_explicit(model, data[0], steps, tau, f.noise, f.seed, f.start_time);
  save_trajectory(pred, f.out);
  if (static_cast<std::size_t>(steps) <= data.steps()) {
    std::vector<EmpiricalSnapshot> obs(data.snapshots().begin(),
                                       data.snapshots().begin() + steps + 1);
    const EmdSummary s = trajectory_emd(pred, PopulationTrajectory(std::move(obs), tau));
    write_json({{"mean_emd", s.mean}, {"std_emd", s.std}, {"per_step_emd", s.per_step}},
               fs::path(f.out) / "rollout_emd.json");
  }
  write_json(echo, fs::path(f.out) / "resolved_config.json");
}

void cmd_experiment(const ExperimentFlags& f, const json& echo) {
  ExperimentReport rep;
  if (f.name == "lightspeed") {
    LightspeedOptions o;
    o.seed = f.seed;
    o.full = f.full;
    if (f.epochs > 0) o.epochs = f.epochs;
    if (f.particles > 0) o.particles = f.particles;
    rep = run_lightspeed(o);
  } else if (f.name == "scaling") {
    ScalingOptions o;
    o.seed = f.seed;
    o.full = f.full;
    if (f.epochs > 0) o.epochs = f.epochs;
    rep = run_scaling(o);
  } else if (f.name == "general") {
    GeneralOptions o;
    o.seed = f.seed;
    o.full = f.full;
    if (f.epochs > 0) o.epochs = f.epochs;
    if (f.particles > 0) o.particles = f.particles;
    rep = run_general(o);
  } else if (f.name == "time-varying") {
    TimeVaryingOptions o;
    o.seed = f.seed;
    if (f.epochs > 0) o.epochs = f.epochs;
    if (f.particles > 0) o.particles = f.particles;
    rep = run_time_varying(o);
  } else if (f.name == "observability") {
    ObservabilityOptions o;
    o.seed = f.seed;
    if (f.particles > 0) o.particles = f.particles;
    rep = run_observability(o);
  } else {
    throw ValidationError("unknown experiment '" + f.name + "'");
  }
  write_report(rep, f.out);
  write_json(echo, fs::path(f.out) / "resolved_config.json");
  std::cout << rep.name << ' ' << rep.summary.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn diffusion energies from population snapshots", "jko-flow"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.fallthrough();

  std::string verbosity = "info";
  std::size_t jobs = 0;
  std::string config;
  app.add_option("--verbosity", verbosity, "error | warn | info | debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}))
      ->capture_default_str();
  app.add_option("--jobs", jobs, "worker cap (default: JKO_FLOW_JOBS or hardware threads)");
  app.add_option("--config", config, "JSON file of flag values; explicit flags override it");

  GenerateFlags gen;
  auto* g = app.add_subcommand("generate", "simulate train and test trajectories");
  g->add_option("--potential", gen.potential, "potential functional or 'none'")->capture_default_str();
  g->add_option("--interaction", gen.interaction, "interaction kernel (optional)");
  g->add_option("--beta", gen.beta, "internal energy weight")->capture_default_str();
  g->add_option("--dim", gen.dim, "dimension")->capture_default_str();
  g->add_option("--particles", gen.particles, "2N particles, split evenly into train and test")
      ->capture_default_str();
  g->add_option("--steps", gen.steps, "timesteps T")->capture_default_str();
  g->add_option("--tau", gen.tau, "time step")->capture_default_str();
  g->add_option("--init-low", gen.init_low, "initial box lower bound")->capture_default_str();
  g->add_option("--init-high", gen.init_high, "initial box upper bound")->capture_default_str();
  g->add_option("--scheme", gen.scheme, "explicit | implicit")->capture_default_str();
  g->add_option("--seed", gen.seed, "random seed")->required();
  g->add_option("--out", gen.out, "output directory")->required();

  CoupleFlags cpl;
  auto* c = app.add_subcommand("couple", "compute transport plans between consecutive snapshots");
  c->add_option("--data", cpl.data, "trajectory directory")->required();
  c->add_option("--out", cpl.out, "output directory (default <data>/couplings)");
  c->add_option("--seed", cpl.seed, "batch shuffling seed")->capture_default_str();
  cpl.ot.add(c);

  TrainFlags tr;
  auto* t = app.add_subcommand("train", "fit an energy model");
  t->add_option("--data", tr.data, "trajectory directory")->required();
  t->add_option("--out", tr.out, "model JSON file")->required();
  t->add_option("--variant", tr.variant,
                "star | star_potential | star_linear | star_linear_potential | star_time_potential")
      ->capture_default_str();
  t->add_option("--solver", tr.solver, "linear | nn; maps the variant to that family");
  t->add_option("--couplings", tr.couplings, "directory of precomputed coupling files");
  t->add_option("--epochs", tr.epochs, "training epochs")->capture_default_str();
  t->add_option("--batch-pairs", tr.batch_pairs, "coupling pairs per batch")->capture_default_str();
  t->add_option("--seed", tr.seed, "random seed")->required();
  t->add_option("--gmm-k", tr.gmm_k, "mixture components per snapshot")->capture_default_str();
  t->add_option("--ridge-lambda", tr.ridge_lambda, "one value or three (potential, interaction, beta)")
      ->expected(1, 3)
      ->capture_default_str();
  t->add_flag("--pin-interaction", tr.pin_interaction, "fix the interaction term to zero");
  t->add_flag("--pin-internal", tr.pin_internal, "fix beta to zero");
  t->add_option("--hidden", tr.hidden, "hidden layer widths")
      ->expected(1, 16)
      ->capture_default_str();
  t->add_option("--learning-rate", tr.learning_rate, "Adam step size")->capture_default_str();
  t->add_option("--features", tr.features, "feature families, e.g. poly4,rbf")->capture_default_str();
  t->add_option("--rbf-sigma", tr.rbf_sigma, "RBF bandwidth")->capture_default_str();
  t->add_option("--rbf-grid", tr.rbf_grid, "RBF grid points per dimension")->capture_default_str();
  t->add_flag("--features-cross", tr.features_cross, "add x_i x_j cross terms");
  t->add_option("--interaction-subsample", tr.interaction_subsample,
                "particles in the interaction mean (0 = all)")
      ->capture_default_str();
  t->add_option("--train-fraction", tr.train_fraction,
                "split the data per snapshot and train on this fraction");
  tr.ot.add(t);

  EvaluateFlags ev;
  auto* e = app.add_subcommand("evaluate", "one-step-ahead EMD on held-out snapshots");
  e->add_option("--data", ev.data, "trajectory directory")->required();
  e->add_option("--model", ev.model, "model JSON file")->required();
  e->add_option("--report", ev.report, "report JSON file")->required();
  e->add_option("--prediction", ev.prediction, "explicit | implicit")->capture_default_str();
  e->add_option("--train-fraction", ev.train_fraction, "evaluate on the complement of this split");
  e->add_option("--seed", ev.seed, "split seed (with --train-fraction)")->capture_default_str();

  PredictFlags pr;
  auto* p = app.add_subcommand("predict", "roll a model out from the first snapshot");
  p->add_option("--data", pr.data, "trajectory directory")->required();
  p->add_option("--model", pr.model, "model JSON file")->required();
  p->add_option("--out", pr.out, "output directory")->required();
  p->add_option("--prediction", pr.prediction, "explicit | implicit")->capture_default_str();
  p->add_option("--steps", pr.steps, "rollout length (default: data length)");
  p->add_option("--tau", pr.tau, "time step (default: data tau)");
  p->add_option("--start-time", pr.start_time, "time index of the first snapshot")
      ->capture_default_str();
  p->add_flag("--noise", pr.noise, "add diffusion noise in explicit rollouts");
  p->add_option("--seed", pr.seed, "noise seed")->required();

  ExperimentFlags ex;
  auto* x = app.add_subcommand("experiment", "run a scripted experiment");
  x->add_option("name", ex.name, "lightspeed | scaling | general | time-varying | observability")
      ->required()
      ->check(CLI::IsMember({"lightspeed", "scaling", "general", "time-varying", "observability"}));
  x->add_option("--seed", ex.seed, "random seed")->required();
  x->add_flag("--full", ex.full, "paper-scale grid and budgets");
  x->add_option("--out", ex.out, "output directory")->required();
  x->add_option("--epochs", ex.epochs, "override the epoch budget");
  x->add_option("--particles", ex.particles, "override the particle count");

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::vector<char*> cargs;
    for (auto& a : args) cargs.push_back(a.data());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }

  auto logger = spdlog::stderr_color_mt("jko-flow");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(verbosity));
  if (jobs > 0) set_max_jobs(jobs);

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const json echo = resolved_config(app, *sub);
    if (sub == g) cmd_generate(gen, echo);
    else if (sub == c) cmd_couple(cpl, echo);
    else if (sub == t) cmd_train(tr, echo);
    else if (sub == e) cmd_evaluate(ev, echo);
    else if (sub == p) cmd_predict(pr, echo);
    else if (sub == x) cmd_experiment(ex, echo);
  } catch (const ValidationError& err) {
    spdlog::error("{}", err.what());
    return 1;
  } catch (const std::exception& err) {
    spdlog::error("{}", err.what());
    return 2;
  }
  return 0;
}
