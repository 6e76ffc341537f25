#include "jkoflow/linear_solver.hpp"

#include <spdlog/spdlog.h>

#include "jkoflow/error.hpp"
#include "jkoflow/parallel.hpp"

namespace jkoflow {

namespace {

constexpr Index kChunk = 64;

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

LinearEnergyModel::LinearEnergyModel(FeatureMap potential, std::optional<FeatureMap> interaction,
                                     bool use_potential_, bool use_internal_)
    : potential_features(std::move(potential)),
      interaction_features(std::move(interaction)),
      use_potential(use_potential_),
      use_internal(use_internal_) {
  potential_features.validate();
  if (interaction_features) {
    interaction_features->validate();
    if (interaction_features->dim != potential_features.dim)
      throw ValidationError("potential and interaction feature dimensions differ");
  }
  if (active_size() == 0) throw ValidationError("linear model has no active energy component");
  theta = Eigen::VectorXd::Zero(n1() + n2() + 1);
}

Index LinearEnergyModel::active_size() const {
  return (use_potential ? n1() : 0) + n2() + (use_internal ? 1 : 0);
}

std::vector<Index> LinearEnergyModel::active_indices() const {
  std::vector<Index> idx;
  if (use_potential)
    for (Index i = 0; i < n1(); ++i) idx.push_back(i);
  for (Index i = 0; i < n2(); ++i) idx.push_back(n1() + i);
  if (use_internal) idx.push_back(n1() + n2());
  return idx;
}

Eigen::VectorXd LinearEnergyModel::potential_gradient(const Eigen::VectorXd& x) const {
  if (!use_potential) return Eigen::VectorXd::Zero(x.size());
  return jacobian_features(potential_features, x).transpose() * theta.head(n1());
}

Eigen::VectorXd LinearEnergyModel::interaction_gradient(const Eigen::VectorXd& z) const {
  if (!interaction_features) return Eigen::VectorXd::Zero(z.size());
  return jacobian_features(*interaction_features, z).transpose() * theta.segment(n1(), n2());
}

nlohmann::json LinearEnergyModel::to_json() const {
  nlohmann::json j;
  j["type"] = "linear";
  j["potential_features"] = potential_features.to_json();
  j["use_potential"] = use_potential;
  j["interaction_features"] =
      interaction_features ? interaction_features->to_json() : nlohmann::json(nullptr);
  j["use_internal"] = use_internal;
  j["theta"] = vector_json(theta);
  j["ridge_lambda"] = ridge_lambda;
  j["negative_beta"] = negative_beta;
  return j;
}

LinearEnergyModel LinearEnergyModel::from_json(const nlohmann::json& j) {
  std::optional<FeatureMap> inter;
  if (j.contains("interaction_features") && !j.at("interaction_features").is_null())
    inter = FeatureMap::from_json(j.at("interaction_features"));
  LinearEnergyModel m(FeatureMap::from_json(j.at("potential_features")), inter,
                      j.value("use_potential", true), j.at("use_internal").get<bool>());
  const auto theta = j.at("theta").get<std::vector<double>>();
  if (static_cast<Index>(theta.size()) != m.theta.size())
    throw ValidationError("theta has length " + std::to_string(theta.size()) + ", expected " +
                          std::to_string(m.theta.size()));
  m.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), m.theta.size());
  if (j.contains("ridge_lambda")) m.ridge_lambda = j.at("ridge_lambda").get<std::array<double, 3>>();
  m.negative_beta = j.value("negative_beta", false);
  return m;
}

Eigen::MatrixXd build_row(const LinearEnergyModel& model, const Eigen::VectorXd& x,
                          const EmpiricalSnapshot* snapshot, const GaussianMixture* gmm) {
  const Index d = x.size();
  Eigen::MatrixXd rows(model.active_size(), d);
  Index r = 0;
  if (model.use_potential) {
    rows.topRows(model.n1()) = jacobian_features(model.potential_features, x);
    r += model.n1();
  }
  if (model.interaction_features) {
    if (!snapshot) throw ValidationError("interaction block needs the current snapshot");
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(model.n2(), d);
    const Eigen::MatrixXd& pts = snapshot->points();
    for (Index j = 0; j < pts.rows(); ++j)
      acc += snapshot->weights()(j) *
             jacobian_features(*model.interaction_features, x - pts.row(j).transpose());
    rows.middleRows(r, model.n2()) = acc;
    r += model.n2();
  }
  if (model.use_internal) {
    if (!gmm) throw ValidationError("internal block needs a fitted density");
    rows.row(r) = score(*gmm, x).transpose();
  }
  return rows;
}

FeatureStatistic& FeatureStatistic::operator+=(const FeatureStatistic& other) {
  gram += other.gram;
  moment += other.moment;
  displacement += other.displacement;
  return *this;
}

FeatureStatistic accumulate(const LinearEnergyModel& model, const PopulationTrajectory& train,
                            const std::vector<Coupling>& couplings,
                            const std::vector<std::optional<GaussianMixture>>& gmms) {
  const std::size_t T = train.steps();
  if (couplings.size() != T)
    throw ValidationError("expected " + std::to_string(T) + " couplings, got " +
                          std::to_string(couplings.size()));
  if (model.use_internal && gmms.size() < T + 1)
    throw ValidationError("internal block needs one density per snapshot");
  const Index p = model.active_size();
  const double tau = train.tau();
  FeatureStatistic total(p);

  for (std::size_t t = 1; t <= T; ++t) {
    const EmpiricalSnapshot& prev = train[t - 1];
    const EmpiricalSnapshot& cur = train[t];
    const Coupling& c = couplings[t - 1];
    if (c.source_time != static_cast<int>(t - 1) || c.target_time != static_cast<int>(t))
      throw ValidationError("coupling " + std::to_string(t - 1) + " is misaligned with the trajectory");
    const GaussianMixture* gmm = nullptr;
    if (model.use_internal) {
      if (!gmms[t]) throw ValidationError("missing density for snapshot " + std::to_string(t));
      gmm = &*gmms[t];
    }

    // displacement aggregated per target particle j: sum_i gamma_ij (x_j - x_i)
    Eigen::MatrixXd disp = Eigen::MatrixXd::Zero(cur.size(), cur.dim());
    for (const auto& pr : c.pairs) {
      if (pr.source < 0 || pr.source >= prev.size() || pr.target < 0 || pr.target >= cur.size())
        throw ValidationError("coupling " + std::to_string(t - 1) + " references a missing particle");
      const Eigen::RowVectorXd step = cur.points().row(pr.target) - prev.points().row(pr.source);
      disp.row(pr.target) += pr.mass * step;
      total.displacement += pr.mass * step.squaredNorm() / (tau * tau);
    }

    const Index n = cur.size();
    const std::size_t chunks = static_cast<std::size_t>((n + kChunk - 1) / kChunk);
    std::vector<FeatureStatistic> partial(chunks, FeatureStatistic(p));
    parallel_for(chunks, [&](std::size_t ch) {
      FeatureStatistic& part = partial[ch];
      const Index lo = static_cast<Index>(ch) * kChunk, hi = std::min(n, lo + kChunk);
      for (Index j = lo; j < hi; ++j) {
        const Eigen::MatrixXd y = build_row(model, cur.points().row(j).transpose(), &cur, gmm);
        part.gram.noalias() += cur.weights()(j) * y * y.transpose();
        part.moment.noalias() += y * disp.row(j).transpose() / tau;
      }
    });
    for (const auto& part : partial) {
      total.gram += part.gram;
      total.moment += part.moment;
    }
  }
  return total;
}

Eigen::VectorXd solve(const FeatureStatistic& stats, const Eigen::VectorXd& lambda_diag) {
  const Index p = stats.gram.rows();
  if (lambda_diag.size() != p) throw ValidationError("ridge vector has the wrong length");
  if ((lambda_diag.array() < 0.0).any()) throw ValidationError("ridge lambda must be nonnegative");
  const Eigen::MatrixXd a = stats.gram + Eigen::MatrixXd(lambda_diag.asDiagonal());
  Eigen::VectorXd theta;
  bool solved = false;
  if ((lambda_diag.array() > 0.0).all()) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      theta = -llt.solve(stats.moment);
      solved = true;
    }
  }
  if (!solved) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double cutoff = s.size() > 0 ? 1e-10 * s(0) : 0.0;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i)
      if (s(i) > cutoff) inv(i) = 1.0 / s(i);
    theta = -(svd.matrixV() * (inv.asDiagonal() * (svd.matrixU().transpose() * stats.moment)));
  }
  if (!theta.allFinite())
    throw SolverError("closed-form solve produced non-finite coefficients (badly scaled features?)");
  return theta;
}

void solve_into(LinearEnergyModel& model, const FeatureStatistic& stats) {
  const auto idx = model.active_indices();
  Eigen::VectorXd lam(static_cast<Index>(idx.size()));
  Index r = 0;
  if (model.use_potential)
    for (Index i = 0; i < model.n1(); ++i) lam(r++) = model.ridge_lambda[0];
  for (Index i = 0; i < model.n2(); ++i) lam(r++) = model.ridge_lambda[1];
  if (model.use_internal) lam(r++) = model.ridge_lambda[2];
  const Eigen::VectorXd active = solve(stats, lam);
  model.theta.setZero();
  for (std::size_t k = 0; k < idx.size(); ++k) model.theta(idx[k]) = active(static_cast<Index>(k));
  model.negative_beta = model.use_internal && model.beta() < -1e-6;
  if (model.negative_beta)
    spdlog::warn("fitted internal-energy weight is negative ({}); the data may not identify the "
                 "diffusion term",
                 model.beta());
}

double residual_loss(const FeatureStatistic& stats, const Eigen::VectorXd& active_theta) {
  return active_theta.dot(stats.gram * active_theta) + 2.0 * active_theta.dot(stats.moment) +
         stats.displacement;
}

}  // namespace jkoflow
