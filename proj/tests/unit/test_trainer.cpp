#include <gtest/gtest.h>

#include <limits>

#include <cpinn/error.hpp>
#include <cpinn/trainer.hpp>

using namespace cpinn;

namespace {

struct Small {
    TrainingData data;
    CollocationSet colloc;
    TrainConfig cfg;
};

Small small_problem() {
    Small s;
    HeatConfig hc;
    Generator gen = [hc](double x, double t) { return manufactured_heat(hc, x, t); };
    std::tie(s.data, s.colloc) = sample_dataset(hc.domain(), gen, {12, 30}, 0.0, 4);
    s.cfg.net_u = {2, 2, 8, 0};
    s.cfg.net_g = {2, 2, 8, 0};
    s.cfg.max_outer = 4;
    s.cfg.netg_iterations = 30;
    s.cfg.netu_iterations = 30;
    s.cfg.adam_steps = 30;
    s.cfg.seed = 17;
    return s;
}

} // namespace

TEST(Trainer, DeriveSeedIsStable) {
    EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
    EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
    EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
}

TEST(Trainer, InitialStateDependsOnMask) {
    const Small s = small_problem();
    const auto combos = enumerate(heat_library());
    const TrainerState a = initial_state(combos[0], s.cfg);
    const TrainerState b = initial_state(combos[1], s.cfg);
    EXPECT_FALSE(a.u == b.u);
    EXPECT_EQ(a.lambda.size(), 1);
    EXPECT_LE(a.lambda.cwiseAbs().maxCoeff(), 1.0);
    EXPECT_EQ(initial_state(combos[0], s.cfg).u, a.u);
}

TEST(Trainer, PhasesAreMonotone) {
    const Small s = small_problem();
    const auto r = train_combination(enumerate(heat_library())[4], s.data, s.colloc, s.cfg);
    ASSERT_FALSE(r.state.aborted);
    ASSERT_FALSE(r.state.history.empty());
    for (const auto& rec : r.state.history) {
        EXPECT_LE(rec.netg_pn_after, rec.netg_pn_before);
        EXPECT_LE(rec.netu_n_after, rec.netu_n_before);
        EXPECT_DOUBLE_EQ(rec.mse_n, rec.mse_dn + rec.mse_pn);
    }
    EXPECT_EQ(r.combination.lambda.size(), 2u);
    EXPECT_EQ(r.combination.lambda[0], r.state.lambda(0));
}

TEST(Trainer, Deterministic) {
    const Small s = small_problem();
    const Combination c = enumerate(heat_library())[2];
    const auto a = train_combination(c, s.data, s.colloc, s.cfg);
    const auto b = train_combination(c, s.data, s.colloc, s.cfg);
    EXPECT_EQ(a.state.u, b.state.u);
    EXPECT_EQ(a.state.g, b.state.g);
    EXPECT_EQ(a.combination.lambda, b.combination.lambda);
}

TEST(Trainer, InfiniteToleranceStopsAfterOneIteration) {
    Small s = small_problem();
    s.cfg.tol = std::numeric_limits<double>::infinity();
    const auto r = train_combination(enumerate(heat_library())[0], s.data, s.colloc, s.cfg);
    EXPECT_EQ(r.state.history.size(), 1u);
    EXPECT_TRUE(r.state.converged);
}

TEST(Trainer, MaxOuterBoundsIterations) {
    Small s = small_problem();
    s.cfg.tol = 0.0;
    s.cfg.max_outer = 2;
    const auto r = train_combination(enumerate(heat_library())[0], s.data, s.colloc, s.cfg);
    EXPECT_EQ(r.state.history.size(), 2u);
    EXPECT_FALSE(r.state.converged);
}

TEST(Trainer, NonFiniteDataAborts) {
    Small s = small_problem();
    s.data.interior[0].u = std::numeric_limits<double>::quiet_NaN();
    const auto r = train_combination(enumerate(heat_library())[0], s.data, s.colloc, s.cfg);
    EXPECT_TRUE(r.state.aborted);
    EXPECT_FALSE(r.state.diagnostic.empty());
}

TEST(Trainer, ValidateRejectsBadConfig) {
    TrainConfig c;
    c.patience = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.max_outer = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}
