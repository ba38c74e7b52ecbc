#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpinn/data.hpp"
#include "cpinn/losses.hpp"
#include "cpinn/network.hpp"
#include "cpinn/operators.hpp"
#include "cpinn/optim.hpp"

namespace cpinn {

struct TrainConfig {
    int max_outer = 50;
    /// L-BFGS iteration caps for the source-network and solution-network phases.
    int netg_iterations = 200;
    int netu_iterations = 200;
    /// Adam steps on lambda after each solution-network L-BFGS run.
    int adam_steps = 200;
    /// Converged once |dMSE_N| < tol * (1 + MSE_N_prev) for `patience` consecutive outer iterations.
    double tol = 1e-7;
    int patience = 3;
    /// Weight on MSE_PN in the solution-network objective.
    double physics_weight = 1.0;
    AdamConfig adam;
    /// History, line search and tolerances; max_iterations is replaced per phase.
    LbfgsConfig lbfgs;
    NetworkConfig net_u;
    NetworkConfig net_g;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Losses after outer iteration k plus the before/after values of each phase.
struct OuterRecord {
    int k = 0;
    double mse_dn = 0.0;
    double mse_pn = 0.0;
    double mse_n = 0.0;
    double lambda_norm = 0.0;
    double netg_pn_before = 0.0;
    double netg_pn_after = 0.0;
    double netu_n_before = 0.0;
    double netu_n_after = 0.0;
    LbfgsStatus netg_status = LbfgsStatus::MaxIterations;
    LbfgsStatus netu_status = LbfgsStatus::MaxIterations;
};

struct TrainerState {
    int k = 0;
    MlpParams u;
    MlpParams g;
    Eigen::VectorXd lambda;
    AdamState adam;
    std::vector<OuterRecord> history;
    bool converged = false;
    bool aborted = false;
    std::string diagnostic;
    int stable_count = 0;
    double seconds_netg = 0.0;
    double seconds_netu = 0.0;
};

/// Deterministic 64-bit mix used to derive independent seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Fresh random networks and lambda ~ U[-1, 1] for one combination; seeds derive from config.seed ^ m.
TrainerState initial_state(const Combination& comb, const TrainConfig& config);

/// Source-network phase: minimizes MSE_PN over Theta_G with Theta_U and lambda frozen.
void netg_step(TrainerState& state, const Combination& comb, const HybridInputs& in, const TrainConfig& config,
               OuterRecord& record);

/// Solution-network phase: L-BFGS on Theta_U, then Adam on lambda, both on MSE_DN + MSE_PN with Theta_G frozen.
/// The best lambda seen during the Adam steps is kept, so MSE_N does not increase.
void netu_step(TrainerState& state, const Combination& comb, const HybridInputs& in, const TrainConfig& config,
               OuterRecord& record);

/// Hybrid losses of a state; the weighted objective uses config.physics_weight.
LossReport state_losses(const TrainerState& state, const Combination& comb, const HybridInputs& in);

struct TrainResult {
    Combination combination;  // lambda holds the trained coefficients
    TrainerState state;
};

/// Alternates netg_step and netu_step until the stop rule holds or max_outer is reached.
/// A non-finite loss aborts the run (state.aborted) without throwing.
TrainResult train_combination(const Combination& comb, const TrainingData& data, const CollocationSet& colloc,
                              const TrainConfig& config);
TrainResult train_combination(const Combination& comb, const HybridInputs& in, const TrainConfig& config);

/// CSV with columns k,mse_dn,mse_pn,mse_n,lambda_norm.
void write_training_log(const std::filesystem::path& path, const TrainerState& state);

} // namespace cpinn
