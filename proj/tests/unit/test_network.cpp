#include <gtest/gtest.h>

#include <random>

#include <cpinn/error.hpp>
#include <cpinn/network.hpp>

#include "oracles.hpp"

using namespace cpinn;

namespace {

MlpParams random_net(std::vector<int> sizes, std::uint64_t seed) {
    MlpParams p = MlpParams::zeros(std::move(sizes));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 0.5);
    for (auto& w : p.weights) w = w.unaryExpr([&](double) { return n(rng); });
    for (auto& b : p.biases) b = b.unaryExpr([&](double) { return n(rng); });
    return p;
}

} // namespace

TEST(Network, DefaultLayout) {
    NetworkConfig c;
    EXPECT_EQ(c.layer_sizes(), (std::vector<int>{2, 20, 20, 20, 20, 1}));
    const MlpParams p = init(c);
    EXPECT_EQ(p.parameter_count(), 60u + 3 * 420u + 21u);
    EXPECT_EQ(p.parameter_count(), parameter_count(p.layer_sizes));
}

TEST(Network, InitIsPureInSeed) {
    NetworkConfig c;
    c.seed = 7;
    EXPECT_EQ(init(c), init(c));
    NetworkConfig d = c;
    d.seed = 8;
    EXPECT_FALSE(init(c) == init(d));
}

TEST(Network, XavierBoundsAndZeroBias) {
    NetworkConfig c;
    c.seed = 3;
    const MlpParams p = init(c);
    for (int l = 0; l < p.layer_count(); ++l) {
        const double a = std::sqrt(6.0 / (p.layer_sizes[l] + p.layer_sizes[l + 1]));
        EXPECT_LE(p.weights[l].cwiseAbs().maxCoeff(), a);
        EXPECT_EQ(p.biases[l].squaredNorm(), 0.0);
    }
}

TEST(Network, FlattenRoundTrip) {
    const MlpParams p = random_net({3, 5, 4, 1}, 11);
    const Eigen::VectorXd flat = flatten(p);
    ASSERT_EQ(static_cast<std::size_t>(flat.size()), p.parameter_count());
    EXPECT_EQ(unflatten(p.layer_sizes, flat), p);
    // Row-major weights of layer 0, then its biases.
    EXPECT_EQ(flat(1), p.weights[0](0, 1));
    EXPECT_EQ(flat(3), p.weights[0](1, 0));
    EXPECT_EQ(flat(15), p.biases[0](0));
    MlpParams q = MlpParams::zeros(p.layer_sizes);
    assign_flat(q, flat);
    EXPECT_EQ(q, p);
}

TEST(Network, ValidateRejectsVectorOutput) {
    MlpParams p = MlpParams::zeros({2, 3, 1});
    EXPECT_NO_THROW(p.validate());
    p.layer_sizes.back() = 2;
    EXPECT_THROW(p.validate(), ConfigError);
    EXPECT_THROW(unflatten(std::vector<int>{2, 3, 1}, Eigen::VectorXd::Zero(3)), ConfigError);
}

TEST(Network, ForwardMatchesScalarLoops) {
    const MlpParams p = random_net({2, 8, 8, 1}, 5);
    Eigen::MatrixXd in(2, 20);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2, 2);
    for (Eigen::Index i = 0; i < in.size(); ++i) in.data()[i] = u(rng);
    const Eigen::RowVectorXd out = forward_batch(p, in);
    for (Eigen::Index i = 0; i < 20; ++i) {
        const double ref = static_cast<double>(oracle::forward_xt(p, in(0, i), in(1, i)));
        EXPECT_NEAR(out(i), ref, 1e-14);
        const double one = forward(p, std::vector<double>{in(0, i), in(1, i)});
        EXPECT_NEAR(one, ref, 1e-14);
    }
}

TEST(Network, ValueGradientMatchesFiniteDifferences) {
    const MlpParams p = random_net({2, 6, 5, 1}, 9);
    Eigen::MatrixXd in(2, 7);
    in.setRandom();
    Eigen::RowVectorXd w(7);
    w.setRandom();
    const Eigen::VectorXd g = value_gradient(p, in, w);
    const Eigen::VectorXd x = flatten(p);
    auto f = [&](const Eigen::VectorXd& v) { return forward_batch(unflatten(p.layer_sizes, v), in).dot(w); };
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        Eigen::VectorXd xp = x, xm = x;
        xp(k) += 1e-6;
        xm(k) -= 1e-6;
        EXPECT_NEAR(g(k), (f(xp) - f(xm)) / 2e-6, 1e-7) << "parameter " << k;
    }
}
