#include "jkoflow/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

#include <spdlog/spdlog.h>

#include "jkoflow/error.hpp"
#include "jkoflow/parallel.hpp"
#include "jkoflow/random.hpp"

namespace jkoflow {
namespace {

using nlohmann::json;

std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_number() || v.is_boolean()) return v.dump();
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string error_text(const std::exception& e) { return e.what(); }

TrainConfig base_config(Variant v, std::uint64_t seed, int epochs) {
  TrainConfig cfg;
  cfg.variant = v;
  cfg.seed = seed;
  cfg.ot.seed = seed;
  cfg.epochs = epochs;
  return cfg;
}

double time_per_epoch(const FitResult& r, const TrainConfig& cfg) {
  return r.train_seconds / static_cast<double>(is_linear(cfg.variant) ? 1 : cfg.epochs);
}

// Largest |x_i(t) - y_i(t)| over particles and times; rows stay aligned in rollouts.
double max_deviation(const PopulationTrajectory& a, const PopulationTrajectory& b) {
  double m = 0.0;
  for (std::size_t t = 0; t < std::min(a.size(), b.size()); ++t)
    m = std::max(m, (a[t].points() - b[t].points()).rowwise().norm().maxCoeff());
  return m;
}

double mean_deviation(const PopulationTrajectory& a, const PopulationTrajectory& b) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 1; t < std::min(a.size(), b.size()); ++t) {
    s += (a[t].points() - b[t].points()).rowwise().norm().sum();
    n += static_cast<std::size_t>(a[t].size());
  }
  return n ? s / static_cast<double>(n) : 0.0;
}

double variance_1d(const EmpiricalSnapshot& s) {
  const Eigen::VectorXd x = s.points().col(0);
  const double mean = s.weights().dot(x);
  return s.weights().dot((x.array() - mean).square().matrix());
}

}  // namespace

void ResultTable::add(std::vector<json> row) {
  if (row.size() != columns.size())
    throw ValidationError("row has " + std::to_string(row.size()) + " cells, table has " +
                          std::to_string(columns.size()) + " columns");
  rows.push_back(std::move(row));
}

json ResultTable::to_json() const {
  json out = json::array();
  for (const auto& row : rows) {
    json obj = json::object();
    for (std::size_t c = 0; c < columns.size(); ++c) obj[columns[c]] = row[c];
    out.push_back(std::move(obj));
  }
  return out;
}

void ResultTable::write_csv(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write " + file.string());
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << csv_cell(columns[c]);
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << csv_cell(row[c]);
    out << '\n';
  }
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  report.table.write_csv(dir / (report.name + ".csv"));
  json j = {{"experiment", report.name}, {"rows", report.table.to_json()},
            {"summary", report.summary}};
  for (const auto& [key, table] : report.extras) {
    table.write_csv(dir / (report.name + "_" + key + ".csv"));
    j["extras"][key] = table.to_json();
  }
  std::ofstream(dir / (report.name + ".json")) << j.dump(2) << '\n';
  std::ofstream txt(dir / "summary.txt");
  txt << report.name << '\n';
  for (const auto& [k, v] : report.summary.items()) txt << "  " << k << ": " << v.dump() << '\n';
}

ExperimentReport run_lightspeed(const LightspeedOptions& opts) {
  const int epochs = opts.full ? 1000 : opts.epochs;
  const std::vector<Variant> variants{Variant::star_potential, Variant::star_linear_potential};
  const std::size_t P = opts.potentials.size();
  std::vector<std::vector<json>> rows(P * variants.size());

  parallel_for(P, [&](std::size_t p) {
    const FunctionKind kind = opts.potentials[p];
    const std::string name = to_string(kind);
    auto failed = [&](const std::string& why) {
      for (std::size_t v = 0; v < variants.size(); ++v)
        rows[p * variants.size() + v] = {name, to_string(variants[v]), nullptr, nullptr, nullptr,
                                         nullptr, nullptr, nullptr, nullptr, nullptr, why};
      spdlog::warn("lightspeed {}: {}", name, why);
    };
    try {
      GenConfig gen;
      gen.spec.potential = GroundTruthFunction{kind, 2};
      gen.n_particles = opts.particles;
      gen.dim = 2;
      gen.timesteps = 5;
      gen.tau = 0.01;
      gen.seed = opts.seed;
      const auto [train, test] = generate(gen);
      const EmdSummary truth = evaluate(GroundTruthEnergy{gen.spec, false, 1.0}, test);

      OtConfig ot;
      ot.seed = opts.seed;
      const auto t0 = std::chrono::steady_clock::now();
      const std::vector<Coupling> couplings = couple_trajectory(train, ot);
      const double couple_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      for (std::size_t v = 0; v < variants.size(); ++v) {
        const TrainConfig cfg = base_config(variants[v], opts.seed, epochs);
        auto& row = rows[p * variants.size() + v];
        try {
          const FitResult r = fit(train, cfg, &couplings);
          const EmdSummary s = evaluate(r.model, test);
          row = {name, to_string(variants[v]), s.mean, s.std, truth.mean, time_per_epoch(r, cfg),
                 couple_seconds, r.train_seconds, nullptr,
                 couple_seconds / std::max(r.train_seconds, 1e-12), nullptr};
        } catch (const std::exception& e) {
          row = {name, to_string(variants[v]), nullptr, nullptr, truth.mean, nullptr,
                 couple_seconds, nullptr, nullptr, nullptr, error_text(e)};
          spdlog::warn("lightspeed {} {}: {}", name, to_string(variants[v]), e.what());
        }
      }
    } catch (const std::exception& e) {
      failed(error_text(e));
    }
  });

  // Normalize by the largest error among this run's own rows.
  double worst = 0.0;
  for (const auto& r : rows)
    if (r[2].is_number()) worst = std::max(worst, r[2].get<double>());
  for (auto& r : rows)
    if (r[2].is_number()) r[8] = worst > 0.0 ? r[2].get<double>() / worst : 0.0;

  ExperimentReport rep;
  rep.name = "lightspeed";
  rep.table.columns = {"potential",  "variant",        "mean_emd",   "std_emd",
                       "truth_emd",  "time_per_epoch", "couple_time", "train_time",
                       "normalized_emd", "couple_train_ratio", "error"};
  std::size_t failures = 0;
  for (auto& r : rows) {
    if (!r[10].is_null()) ++failures;
    rep.table.add(std::move(r));
  }
  rep.summary = {{"potentials", P},       {"variants", variants.size()},
                 {"epochs", epochs},      {"particles", opts.particles},
                 {"seed", opts.seed},     {"failures", failures},
                 {"full", opts.full},     {"normalization", "max mean_emd within this run"}};
  return rep;
}

ExperimentReport run_scaling(const ScalingOptions& opts) {
  const std::vector<Index> dims = opts.full ? std::vector<Index>{10, 20, 30, 40, 50} : opts.dims;
  const std::vector<Index> counts =
      opts.full ? std::vector<Index>{1000, 2500, 5000, 7500, 10000} : opts.particle_counts;
  const int epochs = opts.full ? 1000 : opts.epochs;
  const std::size_t cells = dims.size() * counts.size();
  std::vector<std::vector<json>> rows(cells);

  parallel_for(cells, [&](std::size_t c) {
    const Index d = dims[c / counts.size()];
    const Index n = counts[c % counts.size()];
    try {
      GenConfig gen;
      gen.spec.potential = GroundTruthFunction{opts.potential, d};
      gen.n_particles = 2 * n;
      gen.dim = d;
      gen.seed = opts.seed;
      const auto [train, test] = generate(gen);
      const TrainConfig cfg = base_config(Variant::star_potential, opts.seed, epochs);
      const FitResult r = fit(train, cfg);
      const EmdSummary s = evaluate(r.model, test);
      rows[c] = {d, n, s.mean, s.std, time_per_epoch(r, cfg), r.couple_seconds, nullptr};
    } catch (const std::exception& e) {
      rows[c] = {d, n, nullptr, nullptr, nullptr, nullptr, error_text(e)};
      spdlog::warn("scaling d={} N={}: {}", d, n, e.what());
    }
  });

  ExperimentReport rep;
  rep.name = "scaling";
  rep.table.columns = {"dim", "particles", "mean_emd", "std_emd", "time_per_epoch", "couple_time",
                       "error"};
  ResultTable grid;
  grid.columns = {"dim"};
  for (Index n : counts) grid.columns.push_back("N=" + std::to_string(n));
  for (std::size_t i = 0; i < dims.size(); ++i) {
    std::vector<json> g{dims[i]};
    for (std::size_t k = 0; k < counts.size(); ++k) g.push_back(rows[i * counts.size() + k][2]);
    grid.add(std::move(g));
  }
  // Per dimension: how many consecutive N increments did not raise the EMD.
  json monotone = json::object();
  for (std::size_t i = 0; i < dims.size(); ++i) {
    int held = 0, pairs = 0;
    for (std::size_t a = 0; a < counts.size(); ++a)
      for (std::size_t b = a + 1; b < counts.size(); ++b) {
        const json& ea = rows[i * counts.size() + a][2];
        const json& eb = rows[i * counts.size() + b][2];
        if (!ea.is_number() || !eb.is_number()) continue;
        ++pairs;
        if (eb.get<double>() <= ea.get<double>()) ++held;
      }
    monotone[std::to_string(dims[i])] = {{"orderings_held", held}, {"orderings", pairs}};
  }
  for (auto& r : rows) rep.table.add(std::move(r));
  rep.extras.emplace_back("grid", std::move(grid));
  rep.summary = {{"potential", to_string(opts.potential)},
                 {"dims", dims},
                 {"particle_counts", counts},
                 {"epochs", epochs},
                 {"seed", opts.seed},
                 {"full", opts.full},
                 {"emd_non_increasing_in_N", monotone}};
  return rep;
}

ExperimentReport run_general(const GeneralOptions& opts) {
  if (opts.interaction == FunctionKind::holder_table)
    throw ValidationError("holder_table is not supported as an interaction kernel");
  const Index particles = opts.full ? 2000 : opts.particles;
  const int epochs = opts.full ? 1000 : opts.epochs;
  const Index subsample = opts.full ? 0 : opts.interaction_subsample;
  const std::vector<Variant> variants{Variant::star, Variant::star_linear};
  const std::size_t B = opts.betas.size();
  std::vector<std::vector<json>> rows(B * variants.size());

  parallel_for(B, [&](std::size_t b) {
    const double beta = opts.betas[b];
    try {
      GenConfig gen;
      gen.spec.potential = GroundTruthFunction{opts.potential, 2};
      gen.spec.interaction = GroundTruthFunction{opts.interaction, 2};
      gen.spec.beta = beta;
      gen.n_particles = particles;
      gen.seed = opts.seed;
      const auto [train, test] = generate(gen);
      for (std::size_t v = 0; v < variants.size(); ++v) {
        TrainConfig cfg = base_config(variants[v], opts.seed, epochs);
        cfg.pin_internal = beta == 0.0;
        cfg.interaction_subsample = subsample;
        auto& row = rows[b * variants.size() + v];
        try {
          const FitResult r = fit(train, cfg);
          const EmdSummary s = evaluate(r.model, test);
          row = {to_string(opts.potential), to_string(opts.interaction), beta,
                 to_string(variants[v]),    s.mean,   s.std,   model_beta(r.model),
                 r.gmm_fits,                r.train_seconds,    nullptr};
        } catch (const std::exception& e) {
          row = {to_string(opts.potential), to_string(opts.interaction), beta,
                 to_string(variants[v]),    nullptr, nullptr, nullptr, nullptr, nullptr,
                 error_text(e)};
          spdlog::warn("general beta={} {}: {}", beta, to_string(variants[v]), e.what());
        }
      }
    } catch (const std::exception& e) {
      for (std::size_t v = 0; v < variants.size(); ++v)
        rows[b * variants.size() + v] = {to_string(opts.potential), to_string(opts.interaction),
                                         beta, to_string(variants[v]), nullptr, nullptr, nullptr,
                                         nullptr, nullptr, error_text(e)};
    }
  });

  ExperimentReport rep;
  rep.name = "general";
  rep.table.columns = {"potential", "interaction", "beta",     "variant",    "mean_emd",
                       "std_emd",   "fitted_beta", "gmm_fits", "train_time", "error"};
  for (auto& r : rows) rep.table.add(std::move(r));
  rep.summary = {{"potential", to_string(opts.potential)},
                 {"interaction", to_string(opts.interaction)},
                 {"betas", opts.betas},
                 {"particles", particles},
                 {"epochs", epochs},
                 {"interaction_subsample", subsample},
                 {"seed", opts.seed},
                 {"full", opts.full}};
  return rep;
}

ExperimentReport run_time_varying(const TimeVaryingOptions& opts) {
  const PopulationTrajectory data = generate_time_varying_1d(opts.seed, opts.particles);
  const int steps = static_cast<int>(data.steps());
  const double tau = data.tau();

  TrainConfig cfg = base_config(Variant::star_time_potential, opts.seed, opts.epochs);
  const FitResult r = fit(data, cfg);

  const GroundTruthEnergy truth{EnergySpec{}, true, static_cast<double>(steps)};
  const PopulationTrajectory learned_implicit = predict_implicit(r.model, data[0], steps, tau);
  const PopulationTrajectory learned_explicit = predict_explicit(r.model, data[0], steps, tau);
  const PopulationTrajectory truth_implicit = predict_implicit(truth, data[0], steps, tau);

  ExperimentReport rep;
  rep.name = "time_varying";
  rep.table.columns = {"model", "loss", "prediction", "max_deviation", "mean_deviation",
                       "mean_emd"};
  auto row = [&](const std::string& model, const PopulationTrajectory& p, const std::string& pred) {
    rep.table.add({model, "implicit", pred, max_deviation(p, data), mean_deviation(p, data),
                   trajectory_emd(p, data).mean});
  };
  row("learned", learned_implicit, "implicit");
  row("learned", learned_explicit, "explicit");
  row("ground_truth", truth_implicit, "implicit");

  ResultTable paths;
  paths.columns = {"time", "particle", "observed", "learned_implicit", "learned_explicit"};
  const Index shown = std::min<Index>(data[0].size(), 20);
  for (int t = 0; t <= steps; ++t)
    for (Index i = 0; i < shown; ++i)
      paths.add({static_cast<double>(t) * tau, i, data[static_cast<std::size_t>(t)].points()(i, 0),
                 learned_implicit[static_cast<std::size_t>(t)].points()(i, 0),
                 learned_explicit[static_cast<std::size_t>(t)].points()(i, 0)});
  rep.extras.emplace_back("paths", std::move(paths));

  rep.summary = {{"seed", opts.seed},
                 {"particles", opts.particles},
                 {"epochs", opts.epochs},
                 {"final_loss", r.loss_history.back()},
                 {"initial_loss", r.loss_history.front()},
                 {"implicit_max_deviation", max_deviation(learned_implicit, data)},
                 {"explicit_max_deviation", max_deviation(learned_explicit, data)},
                 {"truth_max_deviation", max_deviation(truth_implicit, data)}};
  return rep;
}

ExperimentReport run_observability(const ObservabilityOptions& opts) {
  struct Pair {
    std::string name;
    double alpha;
    double beta;
  };
  // e^{2 alpha tau} + 2 beta tau = e for both.
  const double tau = opts.tau;
  const double target = std::exp(2.0 * tau);
  const std::vector<Pair> pairs{{"A", 1.0, 0.0}, {"B", 0.0, (target - 1.0) / (2.0 * tau)}};
  const Index n = opts.particles;

  // Common random numbers: both datasets share x0 and the noise draws.
  auto make = [&](const Pair& p, int snapshots) {
    std::vector<EmpiricalSnapshot> tr, te;
    Eigen::MatrixXd x(2 * n, 1);
    CounterRng rng(opts.seed, 0x0b5e);
    for (Index i = 0; i < 2 * n; ++i) x(i, 0) = rng.normal();
    for (int t = 0; t < snapshots; ++t) {
      if (t > 0)
        x = std::exp(p.alpha * tau) * x +
            std::sqrt(2.0 * p.beta * tau) * standard_normal_noise(opts.seed, t, 2 * n, 1);
      tr.push_back(EmpiricalSnapshot::uniform(x.topRows(n), t));
      te.push_back(EmpiricalSnapshot::uniform(x.bottomRows(n), t));
    }
    return std::make_pair(PopulationTrajectory(std::move(tr), tau),
                          PopulationTrajectory(std::move(te), tau));
  };

  TrainConfig cfg = base_config(Variant::star_linear, opts.seed, 1);
  cfg.pin_interaction = true;
  cfg.gmm_k = 1;
  cfg.features.rbf = false;
  cfg.features.max_degree = 2;

  ExperimentReport rep;
  rep.name = "observability";
  rep.table.columns = {"pair",          "alpha",  "beta",     "snapshots", "var_t1",
                       "var_t2",        "theta_linear", "theta_quadratic", "theta3",
                       "test_emd"};
  std::map<std::pair<std::string, int>, std::pair<double, double>> fits;  // (theta3, emd)
  for (int snapshots : {2, 3}) {
    for (const Pair& p : pairs) {
      const auto [train, test] = make(p, snapshots);
      const FitResult r = fit(train, cfg);
      const auto& lin = std::get<LinearEnergyModel>(r.model);
      std::vector<double> per;
      for (std::size_t t = 0; t + 1 < test.size(); ++t) {
        const EmpiricalSnapshot pred = step_explicit(r.model, test[t], tau, static_cast<int>(t),
                                                     true, opts.seed ^ 0x7e57);
        per.push_back(emd(pred, test[t + 1]));
      }
      const double e = summarize(per).mean;
      fits[{p.name, snapshots}] = {lin.beta(), e};
      rep.table.add({p.name, p.alpha, p.beta, snapshots, variance_1d(train[1]),
                     snapshots > 2 ? json(variance_1d(train[2])) : json(nullptr), lin.theta(0),
                     lin.theta(1), lin.beta(), e});
    }
  }
  const auto [a2, ea2] = fits[{"A", 2}];
  const auto [b2, eb2] = fits[{"B", 2}];
  const auto [a3, ea3] = fits[{"A", 3}];
  const auto [b3, eb3] = fits[{"B", 3}];
  const double ratio = ea2 / eb2;
  const double gap2 = std::abs(a2 - b2);
  const double gap3 = std::abs(a3 - b3);
  rep.summary = {{"seed", opts.seed},
                 {"tau", tau},
                 {"particles", n},
                 {"emd_ratio_two_snapshots", ratio},
                 {"ambiguous", ratio >= 0.5 && ratio <= 2.0},
                 {"theta3_gap_two_snapshots", gap2},
                 {"theta3_gap_three_snapshots", gap3},
                 {"resolved_by_third_snapshot", gap3 >= 0.5 && gap3 > 5.0 * gap2},
                 {"emd_ratio_three_snapshots", ea3 / eb3}};
  return rep;
}

}  // namespace jkoflow
