#include <benchmark/benchmark.h>

#include <random>

#include <cpinn/data.hpp>
#include <cpinn/jet.hpp>
#include <cpinn/losses.hpp>
#include <cpinn/network.hpp>
#include <cpinn/trainer.hpp>

using namespace cpinn;

namespace {

std::pair<std::vector<double>, std::vector<double>> points(int n) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(0, 3);
    std::vector<double> x(n), t(n);
    for (int i = 0; i < n; ++i) {
        x[i] = d(rng);
        t[i] = d(rng);
    }
    return {x, t};
}

void BM_ForwardBatch(benchmark::State& state) {
    const MlpParams p = init(NetworkConfig{});
    Eigen::MatrixXd in = Eigen::MatrixXd::Random(2, state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(forward_batch(p, in));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBatch)->Arg(260)->Arg(10000);

void BM_ForwardJet(benchmark::State& state) {
    const MlpParams p = init(NetworkConfig{});
    const auto [x, t] = points(static_cast<int>(state.range(0)));
    const JetBatch in = seed_batch(x, t);
    for (auto _ : state) benchmark::DoNotOptimize(forward_jet(p, in));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardJet)->Arg(1)->Arg(260);

void BM_JetParameterGradient(benchmark::State& state) {
    const MlpParams p = init(NetworkConfig{});
    const auto [x, t] = points(static_cast<int>(state.range(0)));
    const JetTape tape = forward_jet(p, seed_batch(x, t));
    JetCotangent w;
    for (auto& r : w) r = Eigen::RowVectorXd::Ones(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(grad_wrt_params(p, tape, w));
}
BENCHMARK(BM_JetParameterGradient)->Arg(260);

void BM_PhysicsLossWithGradient(benchmark::State& state) {
    HeatConfig hc;
    Generator gen = [hc](double x, double t) { return manufactured_heat(hc, x, t); };
    const auto [data, colloc] = sample_dataset(hc.domain(), gen, {60, 200}, 0.0, 1);
    const HybridInputs in = HybridInputs::build(data, colloc);
    const MlpParams u = init(NetworkConfig{});
    const Combination c = enumerate(heat_library())[4];
    const Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(colloc.size()));
    Eigen::VectorXd grad;
    for (auto _ : state) benchmark::DoNotOptimize(physics_loss_u(u, c, g, in, &grad));
}
BENCHMARK(BM_PhysicsLossWithGradient);

void BM_OuterIteration(benchmark::State& state) {
    HeatConfig hc;
    Generator gen = [hc](double x, double t) { return manufactured_heat(hc, x, t); };
    const auto [data, colloc] = sample_dataset(hc.domain(), gen, {60, 200}, 0.0, 1);
    const HybridInputs in = HybridInputs::build(data, colloc);
    TrainConfig cfg;
    cfg.netg_iterations = 20;
    cfg.netu_iterations = 20;
    cfg.adam_steps = 20;
    const Combination c = enumerate(heat_library())[4];
    for (auto _ : state) {
        TrainerState s = initial_state(c, cfg);
        OuterRecord r;
        netg_step(s, c, in, cfg, r);
        netu_step(s, c, in, cfg, r);
        benchmark::DoNotOptimize(s.lambda);
    }
}
BENCHMARK(BM_OuterIteration)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
