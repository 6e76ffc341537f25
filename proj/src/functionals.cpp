#include "jkoflow/functionals.hpp"

#include "jkoflow/error.hpp"

namespace jkoflow {

namespace {

struct NamedKind {
  FunctionKind kind;
  const char* name;
};

constexpr NamedKind kNames[] = {
    {FunctionKind::styblinski_tang, "styblinski_tang"},
    {FunctionKind::holder_table, "holder_table"},
    {FunctionKind::flowers, "flowers"},
    {FunctionKind::oakley_ohagan, "oakley_ohagan"},
    {FunctionKind::watershed, "watershed"},
    {FunctionKind::ishigami, "ishigami"},
    {FunctionKind::friedman, "friedman"},
    {FunctionKind::sphere, "sphere"},
    {FunctionKind::bohachevsky, "bohachevsky"},
    {FunctionKind::wavy_plateau, "wavy_plateau"},
    {FunctionKind::zigzag_ridge, "zigzag_ridge"},
    {FunctionKind::double_exp, "double_exp"},
    {FunctionKind::relu, "relu"},
    {FunctionKind::rotational, "rotational"},
    {FunctionKind::flat, "flat"},
    {FunctionKind::quadratic, "quadratic"},
};

nlohmann::json function_json(const GroundTruthFunction& f) {
  return {{"kind", to_string(f.kind)}, {"dim", f.dim}};
}

GroundTruthFunction function_from_json(const nlohmann::json& j) {
  return {parse_function_kind(j.at("kind").get<std::string>()), j.at("dim").get<Eigen::Index>()};
}

}  // namespace

const std::vector<FunctionKind>& all_function_kinds() {
  static const std::vector<FunctionKind> kinds = [] {
    std::vector<FunctionKind> v;
    for (const auto& n : kNames) v.push_back(n.kind);
    return v;
  }();
  return kinds;
}

const std::vector<FunctionKind>& benchmark_potentials() {
  static const std::vector<FunctionKind> kinds = [] {
    std::vector<FunctionKind> v;
    for (const auto& n : kNames)
      if (n.kind != FunctionKind::quadratic) v.push_back(n.kind);
    return v;
  }();
  return kinds;
}

std::string to_string(FunctionKind kind) {
  for (const auto& n : kNames)
    if (n.kind == kind) return n.name;
  return "unknown";
}

FunctionKind parse_function_kind(const std::string& name) {
  for (const auto& n : kNames)
    if (name == n.name) return n.kind;
  std::string known;
  for (const auto& n : kNames) known += std::string(known.empty() ? "" : ", ") + n.name;
  throw ValidationError("unknown functional '" + name + "' (known: " + known + ")");
}

void EnergySpec::validate() const {
  if (!potential && !interaction && beta == 0.0)
    throw ValidationError("energy needs a potential, an interaction, or beta > 0");
  if (!(beta >= 0.0)) throw ValidationError("beta must be nonnegative");
  if (interaction && interaction->kind == FunctionKind::holder_table)
    throw ValidationError("holder_table is not supported as an interaction kernel");
  if (potential && interaction && potential->dim != interaction->dim)
    throw ValidationError("potential and interaction dimensions differ");
}

nlohmann::json EnergySpec::to_json() const {
  nlohmann::json j;
  j["potential"] = potential ? function_json(*potential) : nlohmann::json();
  j["interaction"] = interaction ? function_json(*interaction) : nlohmann::json();
  j["beta"] = beta;
  return j;
}

EnergySpec EnergySpec::from_json(const nlohmann::json& j) {
  EnergySpec s;
  if (j.contains("potential") && !j["potential"].is_null())
    s.potential = function_from_json(j["potential"]);
  if (j.contains("interaction") && !j["interaction"].is_null())
    s.interaction = function_from_json(j["interaction"]);
  s.beta = j.value("beta", 0.0);
  return s;
}

Eigen::MatrixXd gradient_rows(const GroundTruthFunction& f, const Eigen::MatrixXd& points) {
  Eigen::MatrixXd g(points.rows(), points.cols());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    g.row(i) = gradient(f, points.row(i).transpose()).transpose();
  return g;
}

}  // namespace jkoflow
