#include "jkoflow/nn.hpp"

#include <cmath>

#include "jkoflow/error.hpp"
#include "jkoflow/parallel.hpp"
#include "jkoflow/random.hpp"

namespace jkoflow {

namespace {

constexpr std::size_t kPairChunk = 32;

Eigen::MatrixXd softplus_m(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return softplus(v); });
}

Eigen::MatrixXd sigmoid_m(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return sigmoid(v); });
}

void add_into(Mlp& acc, const Mlp& g) {
  for (std::size_t l = 0; l < acc.weights.size(); ++l) {
    acc.weights[l] += g.weights[l];
    acc.biases[l] += g.biases[l];
  }
}

}  // namespace

double softplus(double z) { return std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Mlp::Mlp(const std::vector<Index>& widths) {
  if (widths.size() < 2) throw ValidationError("an MLP needs an input and an output width");
  if (widths.back() != 1) throw ValidationError("energy nets must have a scalar output");
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    if (widths[l] < 1 || widths[l + 1] < 1) throw ValidationError("layer widths must be positive");
    weights.push_back(Eigen::MatrixXd::Zero(widths[l + 1], widths[l]));
    biases.push_back(Eigen::VectorXd::Zero(widths[l + 1]));
  }
}

Mlp Mlp::random(const std::vector<Index>& widths, std::uint64_t seed, std::uint64_t stream) {
  Mlp net(widths);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    CounterRng rng(seed, stream, l);
    const double sd = std::sqrt(1.0 / static_cast<double>(net.weights[l].cols()));
    for (Index r = 0; r < net.weights[l].rows(); ++r)
      for (Index c = 0; c < net.weights[l].cols(); ++c) net.weights[l](r, c) = sd * rng.normal();
  }
  return net;
}

std::vector<Index> Mlp::widths() const {
  std::vector<Index> w{input_dim()};
  for (const auto& m : weights) w.push_back(m.rows());
  return w;
}

Index Mlp::parameter_count() const {
  Index n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

Eigen::RowVectorXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd h = x;
  const std::size_t L = weights.size();
  for (std::size_t l = 0; l + 1 < L; ++l)
    h = softplus_m((weights[l] * h).colwise() + biases[l]);
  return (weights[L - 1] * h).array() + biases[L - 1](0);
}

double Mlp::forward(const Eigen::VectorXd& x) const {
  return forward(Eigen::MatrixXd(x))(0);
}

Eigen::MatrixXd Mlp::input_gradient(const Eigen::MatrixXd& x) const {
  const std::size_t L = weights.size();
  std::vector<Eigen::MatrixXd> s(L);
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l + 1 < L; ++l) {
    const Eigen::MatrixXd z = (weights[l] * h).colwise() + biases[l];
    s[l] = sigmoid_m(z);
    h = softplus_m(z);
  }
  Eigen::MatrixXd g = weights[L - 1].transpose().replicate(1, x.cols());
  for (std::size_t l = L - 1; l-- > 0;) g = weights[l].transpose() * g.cwiseProduct(s[l]);
  return g;
}

Eigen::VectorXd Mlp::input_gradient(const Eigen::VectorXd& x) const {
  return input_gradient(Eigen::MatrixXd(x)).col(0);
}

Eigen::MatrixXd Mlp::backprop_input_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& v,
                                             Mlp& grad) const {
  const std::size_t L = weights.size();
  const Index B = x.cols();
  // forward
  std::vector<Eigen::MatrixXd> h(L), s(L);
  h[0] = x;
  for (std::size_t l = 0; l + 1 < L; ++l) {
    const Eigen::MatrixXd z = (weights[l] * h[l]).colwise() + biases[l];
    s[l] = sigmoid_m(z);
    h[l + 1] = softplus_m(z);
  }
  // input gradient: g[l] = d out / d h[l]
  std::vector<Eigen::MatrixXd> g(L), delta(L);
  g[L - 1] = weights[L - 1].transpose().replicate(1, B);
  for (std::size_t l = L - 1; l-- > 0;) {
    delta[l] = g[l + 1].cwiseProduct(s[l]);
    g[l] = weights[l].transpose() * delta[l];
  }
  // reverse through the gradient computation, seeded with v = d q / d g[0]
  std::vector<Eigen::MatrixXd> zbar(L);
  Eigen::MatrixXd gbar = v;
  for (std::size_t l = 0; l + 1 < L; ++l) {
    grad.weights[l].noalias() += delta[l] * gbar.transpose();
    const Eigen::MatrixXd dbar = weights[l] * gbar;
    zbar[l] = dbar.cwiseProduct(g[l + 1])
                  .cwiseProduct(s[l].cwiseProduct((1.0 - s[l].array()).matrix()));
    gbar = dbar.cwiseProduct(s[l]);
  }
  grad.weights[L - 1] += gbar.rowwise().sum().transpose();
  // reverse through the forward pass; the output itself carries no cotangent
  Eigen::MatrixXd hbar;
  for (std::size_t l = L - 1; l-- > 0;) {
    Eigen::MatrixXd zt = zbar[l];
    if (hbar.size() > 0) zt += hbar.cwiseProduct(s[l]);
    grad.weights[l].noalias() += zt * h[l].transpose();
    grad.biases[l] += zt.rowwise().sum();
    if (l > 0) hbar = weights[l].transpose() * zt;
  }
  return g[0];
}

Mlp Mlp::zeros_like() const { return Mlp(widths()); }

void Mlp::pack(Eigen::VectorXd& out, Index& offset) const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.segment(offset, weights[l].size()) =
        Eigen::Map<const Eigen::VectorXd>(weights[l].data(), weights[l].size());
    offset += weights[l].size();
    out.segment(offset, biases[l].size()) = biases[l];
    offset += biases[l].size();
  }
}

void Mlp::unpack(const Eigen::VectorXd& in, Index& offset) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::Map<Eigen::VectorXd>(weights[l].data(), weights[l].size()) =
        in.segment(offset, weights[l].size());
    offset += weights[l].size();
    biases[l] = in.segment(offset, biases[l].size());
    offset += biases[l].size();
  }
}

nlohmann::json Mlp::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < weights.size(); ++l) {
    std::vector<double> w;
    for (Index r = 0; r < weights[l].rows(); ++r)
      for (Index c = 0; c < weights[l].cols(); ++c) w.push_back(weights[l](r, c));
    layers.push_back({{"rows", weights[l].rows()},
                      {"cols", weights[l].cols()},
                      {"weights", w},
                      {"bias", std::vector<double>(biases[l].data(),
                                                   biases[l].data() + biases[l].size())}});
  }
  return {{"activation", "softplus"}, {"layers", layers}};
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  Mlp net;
  for (const auto& layer : j.at("layers")) {
    const Index rows = layer.at("rows").get<Index>(), cols = layer.at("cols").get<Index>();
    const auto w = layer.at("weights").get<std::vector<double>>();
    const auto b = layer.at("bias").get<std::vector<double>>();
    if (static_cast<Index>(w.size()) != rows * cols || static_cast<Index>(b.size()) != rows)
      throw ValidationError("MLP layer arrays do not match the declared shape");
    if (!net.weights.empty() && net.weights.back().rows() != cols)
      throw ValidationError("MLP layer widths do not chain");
    Eigen::MatrixXd m(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m(r, c) = w[static_cast<std::size_t>(r * cols + c)];
    net.weights.push_back(m);
    net.biases.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), rows));
  }
  if (net.weights.empty() || net.weights.back().rows() != 1)
    throw ValidationError("MLP must end in a scalar output layer");
  return net;
}

Eigen::VectorXd MlpEnergyModel::potential_gradient(const Eigen::VectorXd& x, double t) const {
  if (!potential) return Eigen::VectorXd::Zero(x.size());
  if (!time_conditioned) return potential->input_gradient(x);
  Eigen::VectorXd in(x.size() + 1);
  in << x, t / time_horizon;
  return potential->input_gradient(in).head(x.size());
}

Eigen::VectorXd MlpEnergyModel::interaction_gradient(const Eigen::VectorXd& z) const {
  if (!interaction) return Eigen::VectorXd::Zero(z.size());
  return interaction->input_gradient(z);
}

double MlpEnergyModel::potential_value(const Eigen::VectorXd& x, double t) const {
  if (!potential) return 0.0;
  if (!time_conditioned) return potential->forward(x);
  Eigen::VectorXd in(x.size() + 1);
  in << x, t / time_horizon;
  return potential->forward(in);
}

Index MlpEnergyModel::parameter_count() const {
  return (potential ? potential->parameter_count() : 0) +
         (interaction ? interaction->parameter_count() : 0) + (beta_raw ? 1 : 0);
}

Eigen::VectorXd MlpEnergyModel::pack() const {
  Eigen::VectorXd out(parameter_count());
  Index off = 0;
  if (potential) potential->pack(out, off);
  if (interaction) interaction->pack(out, off);
  if (beta_raw) out(off++) = *beta_raw;
  return out;
}

void MlpEnergyModel::unpack(const Eigen::VectorXd& params) {
  if (params.size() != parameter_count()) throw ValidationError("parameter vector length mismatch");
  Index off = 0;
  if (potential) potential->unpack(params, off);
  if (interaction) interaction->unpack(params, off);
  if (beta_raw) beta_raw = params(off++);
}

nlohmann::json MlpEnergyModel::to_json() const {
  nlohmann::json j;
  j["type"] = "mlp";
  j["dim"] = dim;
  j["potential"] = potential ? potential->to_json() : nlohmann::json(nullptr);
  j["time_conditioned"] = time_conditioned;
  j["time_horizon"] = time_horizon;
  j["interaction"] = interaction ? interaction->to_json() : nlohmann::json(nullptr);
  j["beta_raw"] = beta_raw ? nlohmann::json(*beta_raw) : nlohmann::json(nullptr);
  j["beta"] = beta();
  return j;
}

MlpEnergyModel MlpEnergyModel::from_json(const nlohmann::json& j) {
  MlpEnergyModel m;
  m.dim = j.at("dim").get<Index>();
  m.time_conditioned = j.value("time_conditioned", false);
  m.time_horizon = j.value("time_horizon", 1.0);
  if (!j.at("potential").is_null()) m.potential = Mlp::from_json(j.at("potential"));
  if (j.contains("interaction") && !j.at("interaction").is_null())
    m.interaction = Mlp::from_json(j.at("interaction"));
  if (j.contains("beta_raw") && !j.at("beta_raw").is_null()) m.beta_raw = j.at("beta_raw").get<double>();
  if (m.potential && m.potential->input_dim() != m.dim + (m.time_conditioned ? 1 : 0))
    throw ValidationError("potential net input width does not match dim");
  if (m.interaction && m.interaction->input_dim() != m.dim)
    throw ValidationError("interaction net input width does not match dim");
  if (!m.potential && !m.interaction && !m.beta_raw)
    throw ValidationError("model has no active energy component");
  return m;
}

MlpEnergyModel make_mlp_model(Index dim, bool potential, bool interaction, bool internal,
                              bool time_conditioned, const std::vector<Index>& hidden,
                              std::uint64_t seed, double time_horizon, double beta_init) {
  if (!potential && !interaction && !internal)
    throw ValidationError("at least one energy component must be active");
  if (time_conditioned && !potential)
    throw ValidationError("time conditioning needs a potential net");
  MlpEnergyModel m;
  m.dim = dim;
  m.time_conditioned = time_conditioned;
  m.time_horizon = time_horizon;
  auto widths = [&](Index in) {
    std::vector<Index> w{in};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(1);
    return w;
  };
  if (potential) m.potential = Mlp::random(widths(dim + (time_conditioned ? 1 : 0)), seed, 0x9071);
  if (interaction) m.interaction = Mlp::random(widths(dim), seed, 0x1e7a);
  if (internal) {
    if (!(beta_init > 0.0)) throw ValidationError("initial beta must be positive");
    m.beta_raw = std::log(std::expm1(beta_init));
  }
  return m;
}

namespace {

struct ChunkResult {
  double loss = 0.0;
  std::optional<Mlp> gp, gi;
  double gbeta = 0.0;
};

// Residual columns for a block of pairs, as a d x B matrix.
Eigen::MatrixXd residuals(const MlpEnergyModel& m, const std::vector<const ResidualPair*>& batch,
                          std::size_t lo, std::size_t hi, double tau, Eigen::MatrixXd* vin) {
  const Index d = m.dim, B = static_cast<Index>(hi - lo);
  Eigen::MatrixXd r(d, B);
  for (Index k = 0; k < B; ++k) {
    const ResidualPair& p = *batch[lo + static_cast<std::size_t>(k)];
    r.col(k) = (p.target - p.source) / tau;
  }
  if (m.potential) {
    Eigen::MatrixXd in(d + (m.time_conditioned ? 1 : 0), B);
    for (Index k = 0; k < B; ++k) {
      const ResidualPair& p = *batch[lo + static_cast<std::size_t>(k)];
      in.col(k).head(d) = p.target;
      if (m.time_conditioned) in(d, k) = p.time / m.time_horizon;
    }
    r += m.potential->input_gradient(in).topRows(d);
    if (vin) *vin = std::move(in);
  }
  for (Index k = 0; k < B; ++k) {
    const ResidualPair& p = *batch[lo + static_cast<std::size_t>(k)];
    if (m.interaction) {
      if (!p.next) throw ValidationError("interaction term needs the next snapshot");
      const Eigen::MatrixXd z = (-p.next->points().transpose()).colwise() + p.target;
      r.col(k) += m.interaction->input_gradient(z) * p.next->weights();
    }
    if (m.beta_raw) {
      if (p.score.size() != d) throw ValidationError("internal term needs a score per pair");
      r.col(k) += m.beta() * p.score;
    }
  }
  return r;
}

}  // namespace

LossAndGradient loss_and_param_gradient(const MlpEnergyModel& model,
                                        const std::vector<const ResidualPair*>& batch,
                                        double tau) {
  const Index d = model.dim;
  const std::size_t chunks = (batch.size() + kPairChunk - 1) / kPairChunk;
  std::vector<ChunkResult> parts(chunks);
  parallel_for(chunks, [&](std::size_t ch) {
    const std::size_t lo = ch * kPairChunk, hi = std::min(batch.size(), lo + kPairChunk);
    ChunkResult& out = parts[ch];
    Eigen::MatrixXd vin;
    const Eigen::MatrixXd r = residuals(model, batch, lo, hi, tau, &vin);
    Eigen::MatrixXd v(d, r.cols());
    for (Index k = 0; k < r.cols(); ++k) {
      const double mass = batch[lo + static_cast<std::size_t>(k)]->mass;
      out.loss += mass * r.col(k).squaredNorm();
      v.col(k) = 2.0 * mass * r.col(k);
    }
    if (model.potential) {
      out.gp = model.potential->zeros_like();
      Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(vin.rows(), v.cols());
      seed.topRows(d) = v;
      model.potential->backprop_input_gradient(vin, seed, *out.gp);
    }
    if (model.interaction) {
      out.gi = model.interaction->zeros_like();
      for (Index k = 0; k < r.cols(); ++k) {
        const ResidualPair& p = *batch[lo + static_cast<std::size_t>(k)];
        const Eigen::MatrixXd z = (-p.next->points().transpose()).colwise() + p.target;
        const Eigen::MatrixXd seed = v.col(k) * p.next->weights().transpose();
        model.interaction->backprop_input_gradient(z, seed, *out.gi);
      }
    }
    if (model.beta_raw) {
      for (Index k = 0; k < r.cols(); ++k)
        out.gbeta += v.col(k).dot(batch[lo + static_cast<std::size_t>(k)]->score);
      out.gbeta *= sigmoid(*model.beta_raw);
    }
  });

  LossAndGradient res;
  std::optional<Mlp> gp, gi;
  if (model.potential) gp = model.potential->zeros_like();
  if (model.interaction) gi = model.interaction->zeros_like();
  double gbeta = 0.0;
  for (const auto& part : parts) {
    res.loss += part.loss;
    if (gp) add_into(*gp, *part.gp);
    if (gi) add_into(*gi, *part.gi);
    gbeta += part.gbeta;
  }
  if (!std::isfinite(res.loss)) throw SolverError("residual loss is not finite");
  res.gradient.resize(model.parameter_count());
  Index off = 0;
  if (gp) gp->pack(res.gradient, off);
  if (gi) gi->pack(res.gradient, off);
  if (model.beta_raw) res.gradient(off++) = gbeta;
  return res;
}

double residual_loss(const MlpEnergyModel& model, const std::vector<const ResidualPair*>& batch,
                     double tau) {
  const std::size_t chunks = (batch.size() + kPairChunk - 1) / kPairChunk;
  std::vector<double> parts(chunks, 0.0);
  parallel_for(chunks, [&](std::size_t ch) {
    const std::size_t lo = ch * kPairChunk, hi = std::min(batch.size(), lo + kPairChunk);
    const Eigen::MatrixXd r = residuals(model, batch, lo, hi, tau, nullptr);
    for (Index k = 0; k < r.cols(); ++k)
      parts[ch] += batch[lo + static_cast<std::size_t>(k)]->mass * r.col(k).squaredNorm();
  });
  double loss = 0.0;
  for (double p : parts) loss += p;
  return loss;
}

double adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads) {
  if (grads.size() != params.size() || state.m.size() != params.size())
    throw ValidationError("Adam state, parameters and gradients must have the same length");
  const double norm = grads.norm();
  const double scale = norm > state.clip_norm ? state.clip_norm / norm : 1.0;
  const Eigen::VectorXd g = scale * grads;
  ++state.step;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * g;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  params.array() -= state.lr * (state.m.array() / c1) /
                    ((state.v.array() / c2).sqrt() + state.eps);
  return norm;
}

}  // namespace jkoflow
