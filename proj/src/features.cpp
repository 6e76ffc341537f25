#include "jkoflow/features.hpp"

#include <cmath>
#include <sstream>

#include "jkoflow/error.hpp"
#include "jkoflow/random.hpp"

namespace jkoflow {

Index FeatureMap::polynomial_count() const { return static_cast<Index>(max_degree) * dim; }

Index FeatureMap::cross_count() const { return cross ? dim * (dim - 1) / 2 : 0; }

void FeatureMap::validate() const {
  if (dim < 1) throw ValidationError("feature dimension must be positive");
  if (max_degree < 0) throw ValidationError("max_degree must be nonnegative");
  if (centers.rows() > 0) {
    if (centers.cols() != dim) throw ValidationError("RBF centers have the wrong dimension");
    if (!(rbf_sigma > 0.0)) throw ValidationError("rbf sigma must be positive");
  }
  if (size() < 1) throw ValidationError("feature map is empty");
}

nlohmann::json FeatureMap::to_json() const {
  nlohmann::json c = nlohmann::json::array();
  for (Index k = 0; k < centers.rows(); ++k) {
    std::vector<double> row(static_cast<std::size_t>(dim));
    for (Index i = 0; i < dim; ++i) row[static_cast<std::size_t>(i)] = centers(k, i);
    c.push_back(row);
  }
  return {{"dim", dim}, {"max_degree", max_degree}, {"cross", cross},
          {"rbf_sigma", rbf_sigma}, {"centers", c}};
}

FeatureMap FeatureMap::from_json(const nlohmann::json& j) {
  FeatureMap fm;
  fm.dim = j.at("dim").get<Index>();
  fm.max_degree = j.at("max_degree").get<int>();
  fm.cross = j.value("cross", false);
  fm.rbf_sigma = j.value("rbf_sigma", 0.5);
  const auto& c = j.at("centers");
  fm.centers.resize(static_cast<Index>(c.size()), fm.dim);
  for (std::size_t k = 0; k < c.size(); ++k) {
    const auto row = c[k].get<std::vector<double>>();
    if (static_cast<Index>(row.size()) != fm.dim)
      throw ValidationError("RBF center " + std::to_string(k) + " has the wrong dimension");
    for (Index i = 0; i < fm.dim; ++i)
      fm.centers(static_cast<Index>(k), i) = row[static_cast<std::size_t>(i)];
  }
  fm.validate();
  return fm;
}

void FeatureOptions::validate() const {
  if (!polynomial && !rbf) throw ValidationError("at least one feature family is required");
  if (polynomial && max_degree < 1) throw ValidationError("polynomial degree must be >= 1");
  if (rbf && !(rbf_sigma > 0.0)) throw ValidationError("--rbf-sigma must be positive");
  if (rbf && rbf_grid < 1) throw ValidationError("--rbf-grid must be positive");
  if (rbf && random_centers < 1) throw ValidationError("need at least one random RBF center");
  if (!(box_low < box_high)) throw ValidationError("feature box is empty");
}

nlohmann::json FeatureOptions::to_json() const {
  return {{"polynomial", polynomial}, {"max_degree", max_degree}, {"cross", cross},
          {"rbf", rbf},               {"rbf_sigma", rbf_sigma},   {"rbf_grid", rbf_grid},
          {"random_centers", random_centers}, {"box_low", box_low}, {"box_high", box_high}};
}

FeatureOptions parse_feature_list(const std::string& list, FeatureOptions base) {
  base.polynomial = false;
  base.rbf = false;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "rbf") {
      base.rbf = true;
    } else if (item.rfind("poly", 0) == 0) {
      base.polynomial = true;
      const std::string deg = item.substr(4);
      if (!deg.empty()) {
        try {
          base.max_degree = std::stoi(deg);
        } catch (const std::exception&) {
          throw ValidationError("bad polynomial degree in feature list: '" + item + "'");
        }
      }
    } else if (!item.empty()) {
      throw ValidationError("unknown feature family '" + item + "' (expected polyK or rbf)");
    }
  }
  base.validate();
  return base;
}

FeatureMap build_features(Index dim, const FeatureOptions& opts) {
  if (dim < 1) throw ValidationError("feature dimension must be positive");
  opts.validate();
  FeatureMap fm;
  fm.dim = dim;
  fm.max_degree = opts.polynomial ? opts.max_degree : 0;
  fm.cross = opts.polynomial && opts.cross;
  fm.rbf_sigma = opts.rbf_sigma;
  if (opts.rbf) {
    if (dim <= 2) {
      const Index g = opts.rbf_grid;
      const Eigen::VectorXd axis =
          g == 1 ? Eigen::VectorXd(Eigen::VectorXd::Constant(1, 0.5 * (opts.box_low + opts.box_high)))
                 : Eigen::VectorXd(Eigen::VectorXd::LinSpaced(g, opts.box_low, opts.box_high));
      const Index m = dim == 1 ? g : g * g;
      fm.centers.resize(m, dim);
      for (Index k = 0; k < m; ++k) {
        fm.centers(k, 0) = axis(k % g);
        if (dim == 2) fm.centers(k, 1) = axis(k / g);
      }
    } else {
      fm.centers.resize(opts.random_centers, dim);
      for (Index k = 0; k < opts.random_centers; ++k) {
        CounterRng rng(kRbfCenterSeed, static_cast<std::uint64_t>(dim),
                       static_cast<std::uint64_t>(k));
        for (Index i = 0; i < dim; ++i) fm.centers(k, i) = rng.uniform(opts.box_low, opts.box_high);
      }
    }
  }
  fm.validate();
  return fm;
}

FeatureMap build_default(Index dim, double box_low, double box_high) {
  FeatureOptions opts;
  opts.box_low = box_low;
  opts.box_high = box_high;
  return build_features(dim, opts);
}

FeatureMap polynomial_features(Index dim, int max_degree, bool cross) {
  FeatureOptions opts;
  opts.rbf = false;
  opts.max_degree = max_degree;
  opts.cross = cross;
  return build_features(dim, opts);
}

Eigen::VectorXd eval_features(const FeatureMap& fm, const Eigen::VectorXd& x) {
  const Index d = fm.dim;
  Eigen::VectorXd out(fm.size());
  Index k = 0;
  Eigen::VectorXd power = Eigen::VectorXd::Ones(d);
  for (int p = 1; p <= fm.max_degree; ++p) {
    power = power.cwiseProduct(x);
    out.segment(k, d) = power;
    k += d;
  }
  if (fm.cross)
    for (Index i = 0; i < d; ++i)
      for (Index j = i + 1; j < d; ++j) out(k++) = x(i) * x(j);
  for (Index c = 0; c < fm.centers.rows(); ++c)
    out(k++) = std::exp(-(x.transpose() - fm.centers.row(c)).squaredNorm() / fm.rbf_sigma);
  return out;
}

Eigen::MatrixXd jacobian_features(const FeatureMap& fm, const Eigen::VectorXd& x) {
  const Index d = fm.dim;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(fm.size(), d);
  Index k = 0;
  Eigen::VectorXd lower = Eigen::VectorXd::Ones(d);  // x^(p-1)
  for (int p = 1; p <= fm.max_degree; ++p) {
    for (Index i = 0; i < d; ++i) jac(k + i, i) = p * lower(i);
    lower = lower.cwiseProduct(x);
    k += d;
  }
  if (fm.cross)
    for (Index i = 0; i < d; ++i)
      for (Index j = i + 1; j < d; ++j) {
        jac(k, i) = x(j);
        jac(k, j) = x(i);
        ++k;
      }
  for (Index c = 0; c < fm.centers.rows(); ++c) {
    const Eigen::RowVectorXd diff = x.transpose() - fm.centers.row(c);
    const double e = std::exp(-diff.squaredNorm() / fm.rbf_sigma);
    jac.row(k++) = (-2.0 * e / fm.rbf_sigma) * diff;
  }
  return jac;
}

}  // namespace jkoflow
