#include <gtest/gtest.h>

#include <random>

#include <cpinn/data.hpp>
#include <cpinn/losses.hpp>
#include <cpinn/network.hpp>
#include <cpinn/operators.hpp>

#include "oracles.hpp"

using namespace cpinn;

namespace {

struct Fixture {
    TrainingData data;
    CollocationSet colloc;
    MlpParams u;
    MlpParams g;
    Combination comb;
};

Fixture make(std::uint64_t seed, std::uint32_t mask = 5) {
    Fixture f;
    HeatConfig hc;
    Generator gen = [hc](double x, double t) { return manufactured_heat(hc, x, t); };
    std::tie(f.data, f.colloc) = sample_dataset(hc.domain(), gen, {9, 21}, 0.0, seed);
    f.u = init({2, 2, 6, seed + 1});
    f.g = init({2, 2, 6, seed + 2});
    f.comb = enumerate(heat_library())[mask - 1];
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1, 1);
    for (auto& l : f.comb.lambda) l = d(rng);
    return f;
}

} // namespace

TEST(Losses, MseDnMatchesNaive) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Fixture f = make(s);
        EXPECT_NEAR(mse_dn(f.u, f.data), oracle::mse_dn(f.u, f.data.all()), 1e-12);
    }
}

TEST(Losses, MsePnMatchesNaive) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Fixture f = make(s, static_cast<std::uint32_t>(1 + s % 15));
        EXPECT_NEAR(mse_pn(f.u, f.g, f.comb, f.colloc), oracle::mse_pn(f.u, f.g, f.comb, f.colloc.all()), 1e-12);
    }
}

TEST(Losses, HybridIsSum) {
    const Fixture f = make(3);
    const LossReport r = evaluate_losses(f.u, f.g, f.comb, f.data, f.colloc);
    EXPECT_DOUBLE_EQ(r.mse_n, r.mse_dn + r.mse_pn);
}

TEST(Losses, DataLossIgnoresSourceNetwork) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const Fixture f = make(s);
        const Eigen::VectorXd g = grad_mse(LossKind::DataDriven, Block::NetG, f.u, f.g, f.comb, f.data, f.colloc);
        EXPECT_EQ(static_cast<std::size_t>(g.size()), f.g.parameter_count());
        EXPECT_EQ(g.cwiseAbs().maxCoeff(), 0.0);
        const Eigen::VectorXd l = grad_mse(LossKind::DataDriven, Block::Lambda, f.u, f.g, f.comb, f.data, f.colloc);
        EXPECT_EQ(l.cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Losses, GradientsMatchFiniteDifferences) {
    const Fixture f = make(7, 15);
    const double h = 1e-6;
    for (auto kind : {LossKind::DataDriven, LossKind::Physics, LossKind::Hybrid}) {
        auto loss = [&](const MlpParams& u, const MlpParams& g, const Combination& c) {
            const LossReport r = evaluate_losses(u, g, c, f.data, f.colloc);
            return kind == LossKind::DataDriven ? r.mse_dn : kind == LossKind::Physics ? r.mse_pn : r.mse_n;
        };
        for (auto block : {Block::NetU, Block::NetG, Block::Lambda}) {
            const Eigen::VectorXd grad = grad_mse(kind, block, f.u, f.g, f.comb, f.data, f.colloc);
            const Eigen::VectorXd x = block == Block::NetU   ? flatten(f.u)
                                      : block == Block::NetG ? flatten(f.g)
                                                             : to_vector(f.comb.lambda);
            ASSERT_EQ(grad.size(), x.size());
            auto eval = [&](const Eigen::VectorXd& v) {
                MlpParams u = f.u, g = f.g;
                Combination c = f.comb;
                if (block == Block::NetU) assign_flat(u, v);
                else if (block == Block::NetG) assign_flat(g, v);
                else c.lambda = to_std(v);
                return loss(u, g, c);
            };
            for (Eigen::Index k = 0; k < x.size(); k += 3) {
                Eigen::VectorXd xp = x, xm = x;
                xp(k) += h;
                xm(k) -= h;
                const double fd = (eval(xp) - eval(xm)) / (2 * h);
                EXPECT_TRUE(oracle::close(grad(k), fd, 1e-4, 1e-8)) << static_cast<int>(kind) << '/' << static_cast<int>(block) << " k=" << k;
            }
        }
    }
}

TEST(Losses, OperatorMatrixColumns) {
    const Fixture f = make(2, 5);
    const HybridInputs in = HybridInputs::build(f.data, f.colloc);
    const Eigen::MatrixXd phi = operator_matrix(f.u, f.comb, in);
    const auto pts = f.colloc.all();
    ASSERT_EQ(phi.rows(), static_cast<Eigen::Index>(pts.size()));
    ASSERT_EQ(phi.cols(), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Jet2 j = forward_jet(f.u, pts[i].x, pts[i].t).first;
        EXPECT_NEAR(phi(static_cast<Eigen::Index>(i), 0), j.d_t, 1e-15);
        EXPECT_NEAR(phi(static_cast<Eigen::Index>(i), 1), j.d_xx, 1e-15);
    }
}

TEST(Losses, LambdaLossIsQuadratic) {
    Eigen::MatrixXd phi(3, 2);
    phi << 1, 0, 0, 1, 1, 1;
    Eigen::RowVectorXd g(3);
    g << 1, 2, 3;
    Eigen::VectorXd lam(2);
    lam << 1, 2;
    Eigen::VectorXd grad;
    EXPECT_DOUBLE_EQ(physics_loss_lambda(phi, lam, g, &grad), 0.0);
    EXPECT_EQ(grad.norm(), 0.0);
    lam << 0, 0;
    EXPECT_DOUBLE_EQ(physics_loss_lambda(phi, lam, g, &grad), 14.0 / 3.0);
}
