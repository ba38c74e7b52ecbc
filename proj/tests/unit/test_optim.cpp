#include <gtest/gtest.h>

#include <cmath>

#include <cpinn/error.hpp>
#include <cpinn/optim.hpp>

using namespace cpinn;

namespace {

double rosenbrock(const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double a = 1 - x(0), b = x(1) - x(0) * x(0);
    g.resize(2);
    g(0) = -2 * a - 400 * x(0) * b;
    g(1) = 200 * b;
    return a * a + 100 * b * b;
}

} // namespace

TEST(Lbfgs, Quadratic) {
    Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = 2 * (x.array() - 3).matrix();
        return (x.array() - 3).square().sum();
    };
    const LbfgsResult r = lbfgs_minimize(f, Eigen::VectorXd::Zero(1), {});
    EXPECT_NEAR(r.x(0), 3.0, 1e-8);
    EXPECT_LE(r.iterations, 5);
    EXPECT_FALSE(r.soft_failure());
}

TEST(Lbfgs, Rosenbrock) {
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    LbfgsConfig c;
    c.max_iterations = 200;
    const LbfgsResult r = lbfgs_minimize(rosenbrock, x0, c);
    EXPECT_NEAR(r.x(0), 1.0, 1e-6);
    EXPECT_NEAR(r.x(1), 1.0, 1e-6);
    EXPECT_LE(r.iterations, 200);
}

TEST(Lbfgs, ValuesNeverIncrease) {
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    const LbfgsResult r = lbfgs_minimize(rosenbrock, x0, {});
    ASSERT_GE(r.values.size(), 2u);
    for (std::size_t i = 1; i < r.values.size(); ++i) EXPECT_LE(r.values[i], r.values[i - 1]);
}

TEST(Lbfgs, ZeroBudgetReturnsStart) {
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    LbfgsConfig c;
    c.max_iterations = 0;
    const LbfgsResult r = lbfgs_minimize(rosenbrock, x0, c);
    EXPECT_EQ(r.x, x0);
    EXPECT_EQ(r.status, LbfgsStatus::MaxIterations);
}

TEST(Lbfgs, NonFiniteStart) {
    Objective f = [](const Eigen::VectorXd&, Eigen::VectorXd& g) {
        g = Eigen::VectorXd::Zero(1);
        return std::nan("");
    };
    const LbfgsResult r = lbfgs_minimize(f, Eigen::VectorXd::Zero(1), {});
    EXPECT_EQ(r.status, LbfgsStatus::NonFiniteObjective);
}

TEST(Adam, MatchesRecurrence) {
    AdamConfig c;
    c.lr = 0.05;
    AdamState s{c};
    Eigen::VectorXd x(2);
    x << 1.0, -2.0;
    double m0 = 0, v0 = 0, x0 = 1.0;
    for (int k = 1; k <= 25; ++k) {
        Eigen::VectorXd g = 2 * x;
        const double g0 = 2 * x0;
        adam_step(s, x, g);
        m0 = c.beta1 * m0 + (1 - c.beta1) * g0;
        v0 = c.beta2 * v0 + (1 - c.beta2) * g0 * g0;
        const double mh = m0 / (1 - std::pow(c.beta1, k)), vh = v0 / (1 - std::pow(c.beta2, k));
        x0 -= c.lr * mh / (std::sqrt(vh) + c.eps);
        EXPECT_NEAR(x(0), x0, 1e-15);
    }
    EXPECT_EQ(s.step, 25);
}

TEST(Adam, Parabola) {
    AdamConfig c;
    c.lr = 0.1;
    AdamState s{c};
    Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
    int steps = 0;
    while (x(0) * x(0) >= 1e-6 && steps < 2000) {
        Eigen::VectorXd g = 2 * x;
        adam_step(s, x, g);
        ++steps;
    }
    EXPECT_LT(x(0) * x(0), 1e-6);
    EXPECT_LE(steps, 2000);
}

TEST(Adam, NonFiniteGradientNamesIndex) {
    AdamState s{AdamConfig{}};
    Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd g(3);
    g << 0.0, 1.0, std::nan("");
    try {
        adam_step(s, x, g);
        FAIL();
    } catch (const OptimizerError& e) {
        EXPECT_EQ(e.index(), 2u);
    }
}
