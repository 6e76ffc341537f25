#include "jkoflow/density.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "jkoflow/error.hpp"
#include "jkoflow/random.hpp"

namespace jkoflow {

namespace {

double log_sum_exp(const Eigen::VectorXd& v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

Eigen::MatrixXd weighted_covariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& w) {
  const Eigen::RowVectorXd mean = (w.transpose() * x) / w.sum();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  return (centered.transpose() * w.asDiagonal() * centered) / w.sum();
}

std::vector<Index> kmeans_pp(const Eigen::MatrixXd& x, const Eigen::VectorXd& w, int k,
                             CounterRng& rng) {
  const Index n = x.rows();
  auto draw = [&](const Eigen::VectorXd& p) {
    const double total = p.sum();
    if (!(total > 0.0)) return static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    double u = rng.uniform() * total;
    for (Index i = 0; i < n; ++i) {
      u -= p(i);
      if (u < 0.0) return i;
    }
    return n - 1;
  };
  std::vector<Index> centers{draw(w)};
  Eigen::VectorXd d2 = (x.rowwise() - x.row(centers[0])).rowwise().squaredNorm();
  while (static_cast<int>(centers.size()) < k) {
    const Index c = draw(w.cwiseProduct(d2));
    centers.push_back(c);
    d2 = d2.cwiseMin((x.rowwise() - x.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

}  // namespace

GaussianMixture::GaussianMixture(Eigen::VectorXd weights, Eigen::MatrixXd means,
                                 std::vector<Eigen::MatrixXd> covariances)
    : weights_(std::move(weights)), means_(std::move(means)), covs_(std::move(covariances)) {
  const Index k = weights_.size();
  if (k < 1 || means_.rows() != k || static_cast<Index>(covs_.size()) != k)
    throw ValidationError("mixture component counts disagree");
  if (std::abs(weights_.sum() - 1.0) > 1e-9 || (weights_.array() < 0.0).any())
    throw ValidationError("mixture weights must be nonnegative and sum to 1");
  const Index d = means_.cols();
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  log_norm_.resize(k);
  for (Index j = 0; j < k; ++j) {
    const auto& c = covs_[static_cast<std::size_t>(j)];
    if (c.rows() != d || c.cols() != d) throw ValidationError("covariance shape mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success)
      throw ValidationError("covariance " + std::to_string(j) + " is not positive definite");
    chols_.push_back(llt.matrixL());
    log_norm_(j) = -static_cast<double>(d) * half_log_2pi -
                   chols_.back().diagonal().array().log().sum();
  }
}

Eigen::VectorXd GaussianMixture::component_log_densities(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(components());
  for (Index j = 0; j < components(); ++j) {
    const Eigen::VectorXd diff = x - means_.row(j).transpose();
    const Eigen::VectorXd z =
        chols_[static_cast<std::size_t>(j)].triangularView<Eigen::Lower>().solve(diff);
    out(j) = log_norm_(j) - 0.5 * z.squaredNorm();
  }
  return out;
}

nlohmann::json GaussianMixture::to_json() const {
  nlohmann::json j;
  j["weights"] = std::vector<double>(weights_.data(), weights_.data() + weights_.size());
  nlohmann::json means = nlohmann::json::array(), chols = nlohmann::json::array();
  for (Index c = 0; c < components(); ++c) {
    const Eigen::VectorXd m = means_.row(c).transpose();
    means.push_back(std::vector<double>(m.data(), m.data() + m.size()));
    // lower factor, row-major
    std::vector<double> l;
    const auto& L = chols_[static_cast<std::size_t>(c)];
    for (Index r = 0; r < dim(); ++r)
      for (Index s = 0; s < dim(); ++s) l.push_back(L(r, s));
    chols.push_back(l);
  }
  j["dim"] = dim();
  j["means"] = means;
  j["cholesky"] = chols;
  return j;
}

GaussianMixture GaussianMixture::from_json(const nlohmann::json& j) {
  const auto w = j.at("weights").get<std::vector<double>>();
  const Index k = static_cast<Index>(w.size());
  const Index d = j.at("dim").get<Index>();
  Eigen::MatrixXd means(k, d);
  std::vector<Eigen::MatrixXd> covs;
  for (Index c = 0; c < k; ++c) {
    const auto m = j.at("means").at(static_cast<std::size_t>(c)).get<std::vector<double>>();
    const auto l = j.at("cholesky").at(static_cast<std::size_t>(c)).get<std::vector<double>>();
    if (static_cast<Index>(m.size()) != d || static_cast<Index>(l.size()) != d * d)
      throw ValidationError("mixture JSON has inconsistent shapes");
    Eigen::MatrixXd L(d, d);
    for (Index r = 0; r < d; ++r) {
      means(c, r) = m[static_cast<std::size_t>(r)];
      for (Index s = 0; s < d; ++s) L(r, s) = l[static_cast<std::size_t>(r * d + s)];
    }
    covs.push_back(L * L.transpose());
  }
  return GaussianMixture(Eigen::Map<const Eigen::VectorXd>(w.data(), k), std::move(means),
                         std::move(covs));
}

double log_density(const GaussianMixture& gmm, const Eigen::VectorXd& x) {
  return log_sum_exp(gmm.component_log_densities(x) + gmm.weights().array().log().matrix());
}

Eigen::VectorXd score(const GaussianMixture& gmm, const Eigen::VectorXd& x) {
  Eigen::VectorXd lr = gmm.component_log_densities(x) + gmm.weights().array().log().matrix();
  const double lse = log_sum_exp(lr);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(x.size());
  for (Index j = 0; j < gmm.components(); ++j) {
    const double r = std::exp(lr(j) - lse);
    if (r == 0.0) continue;
    const Eigen::VectorXd diff = gmm.means().row(j).transpose() - x;
    s += r * gmm.cholesky(j).transpose().triangularView<Eigen::Upper>().solve(
                 gmm.cholesky(j).triangularView<Eigen::Lower>().solve(diff));
  }
  return s;
}

GaussianMixture fit_gmm(const EmpiricalSnapshot& snapshot, int k, std::uint64_t seed,
                        const GmmFitOptions& opts, GmmFitReport* report) {
  const Eigen::MatrixXd& x = snapshot.points();
  const Eigen::VectorXd& w = snapshot.weights();
  const Index n = x.rows(), d = x.cols();
  if (k < 1) throw ValidationError("mixture needs at least one component");
  if (k > n)
    throw ValidationError("cannot fit " + std::to_string(k) + " components to " +
                          std::to_string(n) + " particles");

  CounterRng rng(seed, 0x6a11, static_cast<std::uint64_t>(snapshot.time_index()));
  const Eigen::MatrixXd reg = opts.covariance_reg * Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd global_cov = weighted_covariance(x, w) + reg;

  Eigen::VectorXd pi = Eigen::VectorXd::Constant(k, 1.0 / k);
  Eigen::MatrixXd means(k, d);
  const auto centers = kmeans_pp(x, w, k, rng);
  for (int j = 0; j < k; ++j) means.row(j) = x.row(centers[static_cast<std::size_t>(j)]);
  std::vector<Eigen::MatrixXd> covs(static_cast<std::size_t>(k), global_cov);

  GmmFitReport rep;
  Eigen::MatrixXd resp(n, k);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iters; ++it) {
    const GaussianMixture current(pi, means, covs);
    // E-step
    double ll = 0.0;
    Eigen::VectorXd logpi = pi.array().log().matrix();
    for (Index i = 0; i < n; ++i) {
      Eigen::VectorXd lr = current.component_log_densities(x.row(i).transpose()) + logpi;
      const double lse = log_sum_exp(lr);
      ll += w(i) * lse;
      resp.row(i) = (lr.array() - lse).exp().transpose();
    }
    rep.log_likelihood.push_back(ll);
    rep.iterations = it + 1;
    if (std::abs(ll - prev_ll) < opts.tolerance) {
      rep.converged = true;
      break;
    }
    prev_ll = ll;

    // M-step
    const Eigen::MatrixXd wr = resp.array().colwise() * w.array();
    const Eigen::VectorXd nk = wr.colwise().sum().transpose();
    bool reinit = false;
    for (int j = 0; j < k; ++j) {
      if (nk(j) < opts.collapse_weight) {
        if (++rep.reinitializations > opts.max_reinitializations)
          throw SolverError("EM collapse: component " + std::to_string(j) +
                            " lost its mass after " +
                            std::to_string(opts.max_reinitializations) + " re-initializations");
        means.row(j) = x.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
        covs[static_cast<std::size_t>(j)] = global_cov;
        pi(j) = 1.0 / k;
        reinit = true;
        continue;
      }
      pi(j) = nk(j);
      means.row(j) = (wr.col(j).transpose() * x) / nk(j);
      const Eigen::MatrixXd centered = x.rowwise() - means.row(j);
      covs[static_cast<std::size_t>(j)] =
          (centered.transpose() * wr.col(j).asDiagonal() * centered) / nk(j) + reg;
    }
    pi /= pi.sum();
    if (reinit) {
      rep.log_likelihood.clear();
      prev_ll = -std::numeric_limits<double>::infinity();
    }
  }
  if (report) *report = rep;
  return GaussianMixture(pi, means, covs);
}

}  // namespace jkoflow
