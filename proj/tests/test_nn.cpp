#include <doctest.h>

#include "helpers.hpp"
#include "jkoflow/error.hpp"
#include "jkoflow/nn.hpp"

using namespace jkoflow;

TEST_CASE("softplus and sigmoid are stable") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == doctest::Approx(1.0));
  CHECK(sigmoid(-800.0) == doctest::Approx(0.0));
}

TEST_CASE("input gradient matches finite differences") {
  const Mlp net = Mlp::random({3, 5, 4, 1}, 1, 0);
  const Eigen::MatrixXd x = testing::random_points(2, 4, 3).transpose();
  const Eigen::MatrixXd g = net.input_gradient(x);
  for (Eigen::Index b = 0; b < 4; ++b)
    for (Eigen::Index k = 0; k < 3; ++k) {
      Eigen::VectorXd xp = x.col(b), xm = x.col(b);
      xp(k) += 1e-6;
      xm(k) -= 1e-6;
      CHECK(g(k, b) == doctest::Approx((net.forward(xp) - net.forward(xm)) / 2e-6).epsilon(1e-6));
    }
}

TEST_CASE("pack and unpack are inverse") {
  MlpEnergyModel m = make_mlp_model(2, true, true, true, true, {4, 3}, 5, 10.0);
  const Eigen::VectorXd p = m.pack();
  CHECK(p.size() == m.parameter_count());
  Eigen::VectorXd q = p;
  q.array() += 0.5;
  m.unpack(q);
  CHECK(m.pack() == q);
  CHECK(m.beta() > 0.0);
  CHECK(make_mlp_model(2, false, false, true, false, {4}, 1).beta() == doctest::Approx(0.1));
}

TEST_CASE("time-conditioned gradient excludes the time input") {
  const MlpEnergyModel m = make_mlp_model(2, true, false, false, true, {6}, 2, 10.0);
  const Eigen::Vector2d x(0.2, -0.4);
  const Eigen::VectorXd g = m.potential_gradient(x, 3.0);
  CHECK(g.size() == 2);
  for (Eigen::Index k = 0; k < 2; ++k) {
    Eigen::Vector2d xp = x, xm = x;
    xp(k) += 1e-6;
    xm(k) -= 1e-6;
    CHECK(g(k) == doctest::Approx((m.potential_value(xp, 3.0) - m.potential_value(xm, 3.0)) / 2e-6)
                      .epsilon(1e-6));
  }
  CHECK((m.potential_gradient(x, 3.0) - m.potential_gradient(x, 7.0)).norm() > 0.0);
}

TEST_CASE("Adam clips and descends a quadratic") {
  AdamState st(2);
  st.lr = 0.1;
  Eigen::VectorXd p(2);
  p << 5.0, -3.0;
  for (int i = 0; i < 500; ++i) {
    const Eigen::VectorXd g = 2.0 * p;
    adam_step(st, p, g);
  }
  CHECK(p.norm() < 1e-2);
  AdamState big(1);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(1);
  CHECK(adam_step(big, q, Eigen::VectorXd::Constant(1, 1000.0)) == doctest::Approx(1000.0));
}

TEST_CASE("MLP model JSON round-trip") {
  const MlpEnergyModel m = make_mlp_model(3, true, true, true, false, {5}, 3);
  const MlpEnergyModel b = MlpEnergyModel::from_json(m.to_json());
  CHECK((b.pack() - m.pack()).norm() == 0.0);
  const Eigen::Vector3d z(0.1, 0.2, -0.3);
  CHECK((b.interaction_gradient(z) - m.interaction_gradient(z)).norm() < 1e-15);
}

TEST_CASE("loss gradient of a potential-only model matches central differences") {
  const MlpEnergyModel m = make_mlp_model(1, true, false, false, false, {4, 4}, 4);
  std::vector<ResidualPair> pairs(3);
  for (int i = 0; i < 3; ++i) {
    pairs[i].source = Eigen::VectorXd::Constant(1, 0.3 * i - 0.2);
    pairs[i].target = Eigen::VectorXd::Constant(1, 0.25 * i);
    pairs[i].mass = 1.0 / 3.0;
  }
  std::vector<const ResidualPair*> batch{&pairs[0], &pairs[1], &pairs[2]};
  const auto lg = loss_and_param_gradient(m, batch, 0.05);
  CHECK(lg.loss == doctest::Approx(residual_loss(m, batch, 0.05)));
  const Eigen::VectorXd p = m.pack();
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    MlpEnergyModel a = m, b = m;
    Eigen::VectorXd pa = p, pb = p;
    pa(k) += 1e-6;
    pb(k) -= 1e-6;
    a.unpack(pa);
    b.unpack(pb);
    const double fd = (residual_loss(a, batch, 0.05) - residual_loss(b, batch, 0.05)) / 2e-6;
    CHECK(lg.gradient(k) == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
  }
}
