#pragma once

#include <Eigen/Dense>

#include "cpinn/data.hpp"
#include "cpinn/jet.hpp"
#include "cpinn/network.hpp"
#include "cpinn/operators.hpp"

namespace cpinn {

struct LossReport {
    double mse_dn = 0.0;
    double mse_pn = 0.0;
    double mse_n = 0.0;
};

/// Network inputs for the measurement set D and the collocation set E.
///
/// Rows 0 and 1 are x and t. Extra rows hold inputs that are constant with
/// respect to (x, t), such as lagged field values.
struct HybridInputs {
    Eigen::MatrixXd data_inputs;      // (width x |D|)
    Eigen::RowVectorXd data_targets;  // (1 x |D|)
    JetBatch colloc_inputs;           // (width x |E|)
    Eigen::MatrixXd colloc_xt;        // (2 x |E|), inputs for the source network

    static HybridInputs build(const TrainingData& data, const CollocationSet& colloc,
                              const Eigen::MatrixXd* data_extra = nullptr,
                              const Eigen::MatrixXd* colloc_extra = nullptr);
};

/// MSE_DN and, when `grad` is non-null, its gradient w.r.t. the solution network.
double data_loss(const MlpParams& u, const HybridInputs& in, Eigen::VectorXd* grad = nullptr);

/// Values of the active operators at every collocation point, (|E| x p).
Eigen::MatrixXd operator_matrix(const MlpParams& u, const Combination& comb, const HybridInputs& in);

/// MSE_PN as a function of the solution network, with the source values `g_hat` frozen.
double physics_loss_u(const MlpParams& u, const Combination& comb, const Eigen::RowVectorXd& g_hat,
                      const HybridInputs& in, Eigen::VectorXd* grad = nullptr);

/// MSE_PN as a function of the source network, with phi(u)^T lambda frozen as `target`.
double physics_loss_g(const MlpParams& g, const Eigen::RowVectorXd& target, const HybridInputs& in,
                      Eigen::VectorXd* grad = nullptr);

/// MSE_PN as a function of lambda, with phi and g_hat frozen.
double physics_loss_lambda(const Eigen::MatrixXd& phi, const Eigen::VectorXd& lambda,
                           const Eigen::RowVectorXd& g_hat, Eigen::VectorXd* grad = nullptr);

double mse_dn(const MlpParams& u, const TrainingData& data);
double mse_pn(const MlpParams& u, const MlpParams& g, const Combination& comb, const CollocationSet& colloc);
LossReport evaluate_losses(const MlpParams& u, const MlpParams& g, const Combination& comb,
                           const TrainingData& data, const CollocationSet& colloc);

enum class LossKind { DataDriven, Physics, Hybrid };
enum class Block { NetU, NetG, Lambda };

/// Exact gradient of the selected loss w.r.t. one variable block.
Eigen::VectorXd grad_mse(LossKind kind, Block block, const MlpParams& u, const MlpParams& g,
                         const Combination& comb, const TrainingData& data, const CollocationSet& colloc);

Eigen::VectorXd to_vector(const std::vector<double>& v);
std::vector<double> to_std(const Eigen::VectorXd& v);

} // namespace cpinn
