#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace jkoflow {

/// Benchmark energies from the optimization-test literature, plus a plain
/// quadratic ||x||^2 used as a well-conditioned interaction kernel.
enum class FunctionKind {
  styblinski_tang,
  holder_table,
  flowers,
  oakley_ohagan,
  watershed,
  ishigami,
  friedman,
  sphere,
  bohachevsky,
  wavy_plateau,
  zigzag_ridge,
  double_exp,
  relu,
  rotational,
  flat,
  quadratic,
};

/// Every kind in declaration order.
const std::vector<FunctionKind>& all_function_kinds();
/// The fifteen benchmark potentials (everything except `quadratic`).
const std::vector<FunctionKind>& benchmark_potentials();

std::string to_string(FunctionKind kind);
FunctionKind parse_function_kind(const std::string& name);

struct GroundTruthFunction {
  FunctionKind kind = FunctionKind::flat;
  Eigen::Index dim = 1;
};

/// Ground-truth energy used to generate data: potential V, interaction
/// kernel U (applied to x - y), and internal-energy weight beta.
struct EnergySpec {
  std::optional<GroundTruthFunction> potential;
  std::optional<GroundTruthFunction> interaction;
  double beta = 0.0;

  void validate() const;
  nlohmann::json to_json() const;
  static EnergySpec from_json(const nlohmann::json& j);
};

namespace detail {

// Block averages z1 over the first floor(d/2) coordinates and z2 over the
// rest. For d = 1 both equal the single coordinate.
template <typename Derived>
std::array<typename Derived::Scalar, 2> block_means(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  const Eigen::Index d = v.size();
  if (d == 1) return {v(0), v(0)};
  const Eigen::Index h = d / 2;
  return {v.head(h).sum() / S(h), v.tail(d - h).sum() / S(d - h)};
}

// Chain rule through the block averages.
template <typename Derived, typename S>
Eigen::Matrix<S, Eigen::Dynamic, 1> spread_block_grad(const Eigen::MatrixBase<Derived>& v, S dz1,
                                                      S dz2) {
  const Eigen::Index d = v.size();
  Eigen::Matrix<S, Eigen::Dynamic, 1> g(d);
  if (d == 1) {
    g(0) = dz1 + dz2;
    return g;
  }
  const Eigen::Index h = d / 2;
  g.head(h).setConstant(dz1 / S(h));
  g.tail(d - h).setConstant(dz2 / S(d - h));
  return g;
}

template <typename S>
S sign(S x) {
  return S((x > S(0)) - (x < S(0)));
}

}  // namespace detail

/// Value of the functional at x (length f.dim).
template <typename Derived>
typename Derived::Scalar evaluate(const GroundTruthFunction& f, const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  using std::abs, std::cos, std::exp, std::pow, std::sin, std::atan2, std::sqrt;
  constexpr S pi = std::numbers::pi_v<S>;
  const Eigen::Index d = x.size();
  switch (f.kind) {
    case FunctionKind::styblinski_tang: {
      const auto v = x.array();
      return S(0.5) * (v.square().square() - S(16) * v.square() + S(5) * v).sum();
    }
    case FunctionKind::holder_table: {
      const auto [z1, z2] = detail::block_means(x);
      return S(10) * abs(sin(z1) * cos(z2) * exp(abs(S(1) - x.norm() / pi)));
    }
    case FunctionKind::flowers: {
      S s = 0;
      for (Eigen::Index i = 0; i < d; ++i) s += x(i) + S(2) * sin(pow(abs(x(i)), S(1.2)));
      return s;
    }
    case FunctionKind::oakley_ohagan: {
      const auto v = x.array();
      return S(5) * (v.sin() + v.cos() + v.square() + v).sum();
    }
    case FunctionKind::watershed: {
      S s = 0;
      for (Eigen::Index i = 0; i + 1 < d; ++i) s += x(i) + x(i) * x(i) * (x(i + 1) + S(4));
      return s / S(10);
    }
    case FunctionKind::ishigami: {
      const auto [z1, z2] = detail::block_means(x);
      const S m = (z1 + z2) / S(2);
      return sin(z1) + S(7) * sin(z2) * sin(z2) + S(0.1) * pow(m, 4) * sin(z1);
    }
    case FunctionKind::friedman: {
      const auto [z1, z2] = detail::block_means(x);
      const S a = z1 - S(7), b = z2 - S(7);
      const S p = S(2) * a * sin(b) - S(0.5);
      const S q = S(2) * a * cos(b) - S(1);
      return (S(10) * sin(S(2) * pi * a * b) + S(20) * p * p + S(10) * q * q +
              S(0.1) * b * sin(S(2) * a)) /
             S(100);
    }
    case FunctionKind::sphere:
      return S(-10) * x.squaredNorm();
    case FunctionKind::bohachevsky: {
      const auto [z1, z2] = detail::block_means(x);
      return S(10) * (z1 * z1 + S(2) * z2 * z2 - S(0.3) * cos(S(3) * pi * z1) -
                      S(0.4) * cos(S(4) * pi * z2));
    }
    case FunctionKind::wavy_plateau: {
      const auto v = x.array();
      return ((pi * v).cos() + S(0.5) * v.square().square() - S(3) * v.square() + S(1)).sum();
    }
    case FunctionKind::zigzag_ridge: {
      S s = 0;
      for (Eigen::Index i = 0; i + 1 < d; ++i) {
        const S u = x(i), w = x(i + 1);
        s += (u - w) * (u - w) + cos(u) * (u + w) + u * u * w;
      }
      return s;
    }
    case FunctionKind::double_exp: {
      constexpr S sigma = 20, m = 3;
      const S near = (x.array() - m).matrix().squaredNorm();
      const S far = (x.array() + m).matrix().norm();
      return S(200) * exp(-near / sigma) + exp(-far / sigma);
    }
    case FunctionKind::relu:
      return S(-50) * x.array().max(S(0)).sum();
    case FunctionKind::rotational: {
      const auto [z1, z2] = detail::block_means(x);
      return S(10) * std::max(S(0), atan2(z2 + S(5), z1 + S(5)) + pi);
    }
    case FunctionKind::flat:
      return S(0);
    case FunctionKind::quadratic:
      return x.squaredNorm();
  }
  return S(0);
}

/// Analytic gradient. Kinks use fixed subgradient choices: relu contributes 0
/// at v_i = 0, |v|^1.2 in flowers has derivative 0 at v = 0, the norms in
/// holder_table and double_exp contribute 0 at their singular points, and
/// rotational returns 0 where atan2 is undefined.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> gradient(
    const GroundTruthFunction& f, const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
  using std::abs, std::cos, std::exp, std::pow, std::sin, std::sqrt;
  constexpr S pi = std::numbers::pi_v<S>;
  const Eigen::Index d = x.size();
  Vec g = Vec::Zero(d);
  switch (f.kind) {
    case FunctionKind::styblinski_tang:
      g = (S(0.5) * (S(4) * x.array().cube() - S(32) * x.array() + S(5))).matrix();
      break;
    case FunctionKind::holder_table: {
      const auto [z1, z2] = detail::block_means(x);
      const S r = x.norm();
      const S inner = S(1) - r / pi;
      const S e = exp(abs(inner));
      const S val = sin(z1) * cos(z2) * e;
      const S sg = detail::sign(val);
      g = detail::spread_block_grad(x, S(10) * sg * cos(z1) * cos(z2) * e,
                                    S(-10) * sg * sin(z1) * sin(z2) * e);
      if (r > S(0)) g += (S(10) * sg * val * detail::sign(inner) * (S(-1) / pi) / r) * x;
      break;
    }
    case FunctionKind::flowers:
      for (Eigen::Index i = 0; i < d; ++i) {
        const S a = abs(x(i));
        g(i) = S(1);
        if (a > S(0))
          g(i) += S(2) * cos(pow(a, S(1.2))) * S(1.2) * pow(a, S(0.2)) * detail::sign(x(i));
      }
      break;
    case FunctionKind::oakley_ohagan:
      g = (S(5) * (x.array().cos() - x.array().sin() + S(2) * x.array() + S(1))).matrix();
      break;
    case FunctionKind::watershed:
      for (Eigen::Index i = 0; i + 1 < d; ++i) {
        g(i) += (S(1) + S(2) * x(i) * (x(i + 1) + S(4))) / S(10);
        g(i + 1) += x(i) * x(i) / S(10);
      }
      break;
    case FunctionKind::ishigami: {
      const auto [z1, z2] = detail::block_means(x);
      const S m = (z1 + z2) / S(2);
      const S dm = S(0.1) * S(4) * m * m * m * S(0.5) * sin(z1);
      g = detail::spread_block_grad(x, cos(z1) + S(0.1) * pow(m, 4) * cos(z1) + dm,
                                    S(14) * sin(z2) * cos(z2) + dm);
      break;
    }
    case FunctionKind::friedman: {
      const auto [z1, z2] = detail::block_means(x);
      const S a = z1 - S(7), b = z2 - S(7);
      const S p = S(2) * a * sin(b) - S(0.5);
      const S q = S(2) * a * cos(b) - S(1);
      const S c = cos(S(2) * pi * a * b) * S(2) * pi;
      const S da = S(10) * c * b + S(80) * p * sin(b) + S(40) * q * cos(b) +
                   S(0.2) * b * cos(S(2) * a);
      const S db = S(10) * c * a + S(80) * p * a * cos(b) - S(40) * q * a * sin(b) +
                   S(0.1) * sin(S(2) * a);
      g = detail::spread_block_grad(x, da / S(100), db / S(100));
      break;
    }
    case FunctionKind::sphere:
      g = S(-20) * x;
      break;
    case FunctionKind::bohachevsky: {
      const auto [z1, z2] = detail::block_means(x);
      g = detail::spread_block_grad(x, S(10) * (S(2) * z1 + S(0.9) * pi * sin(S(3) * pi * z1)),
                                    S(10) * (S(4) * z2 + S(1.6) * pi * sin(S(4) * pi * z2)));
      break;
    }
    case FunctionKind::wavy_plateau:
      g = (-pi * (pi * x.array()).sin() + S(2) * x.array().cube() - S(6) * x.array()).matrix();
      break;
    case FunctionKind::zigzag_ridge:
      for (Eigen::Index i = 0; i + 1 < d; ++i) {
        const S u = x(i), w = x(i + 1);
        g(i) += S(2) * (u - w) - sin(u) * (u + w) + cos(u) + S(2) * u * w;
        g(i + 1) += S(-2) * (u - w) + cos(u) + u * u;
      }
      break;
    case FunctionKind::double_exp: {
      constexpr S sigma = 20, m = 3;
      const Vec dn = (x.array() - m).matrix();
      const Vec df = (x.array() + m).matrix();
      g = S(200) * exp(-dn.squaredNorm() / sigma) * (S(-2) / sigma) * dn;
      const S r = df.norm();
      if (r > S(0)) g += exp(-r / sigma) * (S(-1) / (sigma * r)) * df;
      break;
    }
    case FunctionKind::relu:
      for (Eigen::Index i = 0; i < d; ++i) g(i) = x(i) > S(0) ? S(-50) : S(0);
      break;
    case FunctionKind::rotational: {
      const auto [z1, z2] = detail::block_means(x);
      const S u = z1 + S(5), w = z2 + S(5);
      const S r2 = u * u + w * w;
      if (r2 > S(0)) g = detail::spread_block_grad(x, S(-10) * w / r2, S(10) * u / r2);
      break;
    }
    case FunctionKind::flat:
      break;
    case FunctionKind::quadratic:
      g = S(2) * x;
      break;
  }
  return g;
}

/// Row-wise gradients of f for an N x d matrix of points.
Eigen::MatrixXd gradient_rows(const GroundTruthFunction& f, const Eigen::MatrixXd& points);

}  // namespace jkoflow
