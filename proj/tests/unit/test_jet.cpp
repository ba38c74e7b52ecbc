#include <gtest/gtest.h>

#include <random>

#include <cpinn/error.hpp>
#include <cpinn/jet.hpp>
#include <cpinn/network.hpp>

#include "oracles.hpp"

using namespace cpinn;

namespace {

MlpParams random_net(std::vector<int> sizes, std::uint64_t seed) {
    MlpParams p = MlpParams::zeros(std::move(sizes));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 0.6);
    for (auto& w : p.weights) w = w.unaryExpr([&](double) { return n(rng); });
    for (auto& b : p.biases) b = b.unaryExpr([&](double) { return n(rng); });
    return p;
}

constexpr JetComponent kAll[] = {JetComponent::Value, JetComponent::Dx,  JetComponent::Dt,
                                 JetComponent::Dxx,   JetComponent::Dxt, JetComponent::Dtt};

} // namespace

TEST(Jet, SeedInputs) {
    const auto [x, t] = seed_inputs(0.25, 2.0);
    EXPECT_EQ(x, (Jet2{0.25, 1, 0, 0, 0, 0}));
    EXPECT_EQ(t, (Jet2{2.0, 0, 1, 0, 0, 0}));
}

TEST(Jet, LinearNetworkHasNoCurvature) {
    // u = 3x - 2t + 1
    MlpParams p = MlpParams::zeros({2, 1});
    p.weights[0] << 3, -2;
    p.biases[0] << 1;
    const Jet2 j = forward_jet(p, 0.5, 0.25).first;
    EXPECT_DOUBLE_EQ(j.value, 2.0);
    EXPECT_DOUBLE_EQ(j.d_x, 3.0);
    EXPECT_DOUBLE_EQ(j.d_t, -2.0);
    EXPECT_EQ(j.d_xx, 0.0);
    EXPECT_EQ(j.d_xt, 0.0);
    EXPECT_EQ(j.d_tt, 0.0);
}

TEST(Jet, SingleTanhUnitClosedForm) {
    // u = tanh(a x + b t)
    MlpParams p = MlpParams::zeros({2, 1, 1});
    const double a = 0.7, b = -1.3, x = 0.4, t = 0.9;
    p.weights[0] << a, b;
    p.weights[1] << 1;
    const Jet2 j = forward_jet(p, x, t).first;
    const double s = std::tanh(a * x + b * t), s1 = 1 - s * s, s2 = -2 * s * s1;
    EXPECT_NEAR(j.value, s, 1e-15);
    EXPECT_NEAR(j.d_x, a * s1, 1e-15);
    EXPECT_NEAR(j.d_t, b * s1, 1e-15);
    EXPECT_NEAR(j.d_xx, a * a * s2, 1e-15);
    EXPECT_NEAR(j.d_xt, a * b * s2, 1e-15);
    EXPECT_NEAR(j.d_tt, b * b * s2, 1e-15);
}

TEST(Jet, ComponentsMatchFiniteDifferences) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> pos(-1.5, 1.5);
    for (int net = 0; net < 5; ++net) {
        const MlpParams p = random_net({2, 16, 16, 1}, 100 + net);
        for (int k = 0; k < 10; ++k) {
            const double x = pos(rng), t = pos(rng);
            const Jet2 j = forward_jet(p, x, t).first;
            const Jet2 ref = oracle::fd_jet(p, x, t);
            for (auto c : kAll) EXPECT_TRUE(oracle::close(j[c], ref[c], 1e-6, 1e-9)) << static_cast<int>(c);
        }
    }
}

TEST(Jet, BatchMatchesSinglePoint) {
    const MlpParams p = random_net({2, 7, 7, 1}, 3);
    const std::vector<double> xs{0.1, -0.4, 1.2}, ts{0.0, 0.5, -0.3};
    const JetTape tape = forward_jet(p, seed_batch(xs, ts));
    for (Eigen::Index i = 0; i < 3; ++i) {
        const Jet2 single = forward_jet(p, xs[i], ts[i]).first;
        for (auto c : kAll) EXPECT_NEAR(tape.output_jet(i)[c], single[c], 1e-15);
    }
}

TEST(Jet, ConstantInputsCarryNoDerivatives) {
    const MlpParams p = random_net({3, 6, 1}, 4);
    const std::vector<double> xs{0.3}, ts{0.8};
    Eigen::MatrixXd lag(1, 1);
    lag << 0.6;
    const JetBatch in = seed_batch(xs, ts, &lag);
    EXPECT_EQ(in.rows(), 3);
    EXPECT_EQ(in.at(2, 0), (Jet2{0.6, 0, 0, 0, 0, 0}));
    const Jet2 j = forward_jet(p, in).output_jet(0);
    const Jet2 ref = oracle::fd_jet(p, 0.3, 0.8, {0.6L});
    for (auto c : kAll) EXPECT_TRUE(oracle::close(j[c], ref[c], 1e-6, 1e-9));
}

TEST(Jet, ParameterGradientMatchesFiniteDifferences) {
    const MlpParams p = random_net({2, 5, 4, 1}, 8);
    const std::vector<double> xs{0.2, -0.7, 0.9, 0.0}, ts{0.3, 0.1, -0.5, 1.0};
    JetCotangent w;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n;
    for (auto& r : w) r = Eigen::RowVectorXd::NullaryExpr(4, [&] { return n(rng); });
    auto objective = [&](const MlpParams& q) {
        const JetTape tape = forward_jet(q, seed_batch(xs, ts));
        double s = 0;
        for (std::size_t c = 0; c < kJetComponents; ++c) s += tape.output().c[c].row(0).dot(w[c]);
        return s;
    };
    const Eigen::VectorXd g = grad_wrt_params(p, forward_jet(p, seed_batch(xs, ts)), w);
    const Eigen::VectorXd x = flatten(p);
    ASSERT_EQ(g.size(), x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        Eigen::VectorXd xp = x, xm = x;
        xp(k) += 1e-6;
        xm(k) -= 1e-6;
        const double fd = (objective(unflatten(p.layer_sizes, xp)) - objective(unflatten(p.layer_sizes, xm))) / 2e-6;
        EXPECT_TRUE(oracle::close(g(k), fd, 1e-5, 1e-8)) << "parameter " << k << ": " << g(k) << " vs " << fd;
    }
}

TEST(Jet, SinglePointCotangentOverload) {
    const MlpParams p = random_net({2, 4, 1}, 6);
    const auto [jet, tape] = forward_jet(p, 0.3, -0.2);
    const Jet2 up{1.0, 0.5, -0.25, 2.0, 0.0, 1.5};
    JetCotangent w;
    for (std::size_t c = 0; c < kJetComponents; ++c) w[c] = Eigen::RowVectorXd::Constant(1, up[kAll[c]]);
    EXPECT_TRUE(grad_wrt_params(p, tape, up).isApprox(grad_wrt_params(p, tape, w)));
}

TEST(Jet, LayoutMismatchThrows) {
    const MlpParams p = random_net({2, 4, 1}, 6);
    const MlpParams q = random_net({2, 5, 1}, 6);
    const auto tape = forward_jet(p, 0.3, -0.2).second;
    EXPECT_THROW(grad_wrt_params(q, tape, Jet2{1, 0, 0, 0, 0, 0}), ConfigError);
}
