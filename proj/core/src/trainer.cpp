#include "cpinn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#include "cpinn/error.hpp"

namespace cpinn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Combination with_lambda(const Combination& comb, const Eigen::VectorXd& lambda) {
    Combination c = comb;
    c.lambda = to_std(lambda);
    return c;
}

bool finite_report(const LossReport& r) {
    return std::isfinite(r.mse_dn) && std::isfinite(r.mse_pn) && std::isfinite(r.mse_n);
}

} // namespace

void TrainConfig::validate() const {
    if (max_outer < 1) throw ConfigError("max_outer must be >= 1");
    if (netg_iterations < 1 || netu_iterations < 1) throw ConfigError("L-BFGS iteration caps must be >= 1");
    if (adam_steps < 0) throw ConfigError("adam_steps must be >= 0");
    if (!(tol >= 0.0)) throw ConfigError("tolerance must be >= 0");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (!(physics_weight >= 0.0)) throw ConfigError("physics_weight must be >= 0");
    if (!(adam.lr > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
        throw ConfigError("invalid Adam hyperparameters");
    }
    if (!(lbfgs.c1 > 0.0 && lbfgs.c1 < lbfgs.c2 && lbfgs.c2 < 1.0)) throw ConfigError("need 0 < c1 < c2 < 1");
    if (net_u.input_width != 2 || net_g.input_width != 2) throw ConfigError("NetU and NetG take (x, t) inputs");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

TrainerState initial_state(const Combination& comb, const TrainConfig& config) {
    comb.validate();
    const std::uint64_t base = config.seed ^ static_cast<std::uint64_t>(comb.index());
    TrainerState s;
    NetworkConfig cu = config.net_u;
    cu.seed = derive_seed(base, 1);
    NetworkConfig cg = config.net_g;
    cg.seed = derive_seed(base, 2);
    s.u = init(cu);
    s.g = init(cg);
    std::mt19937_64 rng(derive_seed(base, 3));
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    s.lambda.resize(comb.term_count());
    for (Eigen::Index i = 0; i < s.lambda.size(); ++i) s.lambda(i) = dist(rng);
    s.adam = AdamState(config.adam);
    return s;
}

LossReport state_losses(const TrainerState& state, const Combination& comb, const HybridInputs& in) {
    const Combination c = with_lambda(comb, state.lambda);
    LossReport r;
    r.mse_dn = data_loss(state.u, in);
    r.mse_pn = physics_loss_u(state.u, c, forward_batch(state.g, in.colloc_xt), in);
    r.mse_n = r.mse_dn + r.mse_pn;
    return r;
}

void netg_step(TrainerState& state, const Combination& comb, const HybridInputs& in, const TrainConfig& config,
               OuterRecord& record) {
    const auto start = Clock::now();
    const Eigen::MatrixXd phi = operator_matrix(state.u, with_lambda(comb, state.lambda), in);
    const Eigen::RowVectorXd target = (phi * state.lambda).transpose();

    MlpParams work = state.g;
    const Objective obj = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        assign_flat(work, theta);
        return physics_loss_g(work, target, in, &grad);
    };
    LbfgsConfig lc = config.lbfgs;
    lc.max_iterations = config.netg_iterations;
    const LbfgsResult res = lbfgs_minimize(obj, flatten(state.g), lc);

    assign_flat(state.g, res.x);
    record.netg_pn_before = res.values.front();
    record.netg_pn_after = res.value;
    record.netg_status = res.status;
    state.seconds_netg += seconds_since(start);
}

void netu_step(TrainerState& state, const Combination& comb, const HybridInputs& in, const TrainConfig& config,
               OuterRecord& record) {
    const auto start = Clock::now();
    const double w = config.physics_weight;
    const Eigen::RowVectorXd g_hat = forward_batch(state.g, in.colloc_xt);
    const Combination c = with_lambda(comb, state.lambda);

    MlpParams work = state.u;
    Eigen::VectorXd part;
    const Objective obj = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        assign_flat(work, theta);
        const double dn = data_loss(work, in, &grad);
        const double pn = physics_loss_u(work, c, g_hat, in, &part);
        grad += w * part;
        return dn + w * pn;
    };
    LbfgsConfig lc = config.lbfgs;
    lc.max_iterations = config.netu_iterations;
    const LbfgsResult res = lbfgs_minimize(obj, flatten(state.u), lc);
    assign_flat(state.u, res.x);
    record.netu_n_before = res.values.front();
    record.netu_status = res.status;

    double best = res.value;
    if (config.adam_steps > 0 && state.lambda.size() > 0) {
        const double dn = data_loss(state.u, in);
        const Eigen::MatrixXd phi = operator_matrix(state.u, c, in);
        Eigen::VectorXd lambda = state.lambda;
        Eigen::VectorXd best_lambda = lambda;
        Eigen::VectorXd grad;
        best = dn + w * physics_loss_lambda(phi, lambda, g_hat);
        for (int i = 0; i < config.adam_steps; ++i) {
            const double loss = dn + w * physics_loss_lambda(phi, lambda, g_hat, &grad);
            if (loss < best) {
                best = loss;
                best_lambda = lambda;
            }
            grad *= w;
            adam_step(state.adam, lambda, grad);
        }
        const double last = dn + w * physics_loss_lambda(phi, lambda, g_hat);
        if (last < best) {
            best = last;
            best_lambda = lambda;
        }
        state.lambda = best_lambda;
    }
    record.netu_n_after = best;
    state.seconds_netu += seconds_since(start);
}

TrainResult train_combination(const Combination& comb, const TrainingData& data, const CollocationSet& colloc,
                              const TrainConfig& config) {
    return train_combination(comb, HybridInputs::build(data, colloc), config);
}

TrainResult train_combination(const Combination& comb, const HybridInputs& in, const TrainConfig& config) {
    config.validate();
    TrainResult out{comb, initial_state(comb, config)};
    TrainerState& s = out.state;

    double prev = state_losses(s, comb, in).mse_n;
    try {
        while (s.k < config.max_outer) {
            OuterRecord rec;
            rec.k = s.k + 1;
            netg_step(s, comb, in, config, rec);
            netu_step(s, comb, in, config, rec);
            const LossReport r = state_losses(s, comb, in);
            rec.mse_dn = r.mse_dn;
            rec.mse_pn = r.mse_pn;
            rec.mse_n = r.mse_n;
            rec.lambda_norm = s.lambda.norm();
            s.history.push_back(rec);
            ++s.k;

            if (!finite_report(r) || !s.lambda.allFinite()) {
                s.aborted = true;
                s.diagnostic = "non-finite loss at outer iteration " + std::to_string(s.k);
                break;
            }
            const bool small = std::abs(r.mse_n - prev) < config.tol * (1.0 + prev);
            s.stable_count = small ? s.stable_count + 1 : 0;
            prev = r.mse_n;
            if (s.stable_count >= config.patience || std::isinf(config.tol)) {
                s.converged = true;
                break;
            }
        }
    } catch (const OptimizerError& e) {
        s.aborted = true;
        s.diagnostic = e.what();
    }
    out.combination.lambda = to_std(s.lambda);
    return out;
}

void write_training_log(const std::filesystem::path& path, const TrainerState& state) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "k,mse_dn,mse_pn,mse_n,lambda_norm\n";
    for (const auto& r : state.history) {
        out << r.k << ',' << format_exact(r.mse_dn) << ',' << format_exact(r.mse_pn) << ','
            << format_exact(r.mse_n) << ',' << format_exact(r.lambda_norm) << '\n';
    }
}

} // namespace cpinn
