#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cpinn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::int64_t step = 0;
    Eigen::VectorXd m;
    Eigen::VectorXd v;

    explicit AdamState(AdamConfig c = {}) : config(c) {}
};

/// One bias-corrected Adam update of `x` in place.
/// Throws OptimizerError naming the first non-finite gradient entry.
void adam_step(AdamState& state, Eigen::VectorXd& x, const Eigen::VectorXd& grad);

struct LbfgsConfig {
    int history = 20;
    int max_iterations = 500;
    /// Stop when the gradient infinity norm drops below this.
    double grad_tol = 1e-8;
    /// Stop when (f_prev - f) <= value_tol * max(|f_prev|, |f|, 1).
    double value_tol = 1e-15;
    double c1 = 1e-4;
    double c2 = 0.9;
    /// Objective evaluations allowed per line search (bracketing plus zoom).
    int max_linesearch = 25;
};

enum class LbfgsStatus {
    GradientTolerance,
    ValueTolerance,
    MaxIterations,
    LineSearchFailed,
    NonFiniteObjective,
};

std::string_view status_name(LbfgsStatus s);

struct LbfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    Eigen::VectorXd gradient;
    int iterations = 0;
    int evaluations = 0;
    LbfgsStatus status = LbfgsStatus::MaxIterations;
    /// Objective at x0 followed by the value at each accepted iterate.
    std::vector<double> values;

    /// True when the run ended on a line-search failure or a non-finite objective.
    bool soft_failure() const {
        return status == LbfgsStatus::LineSearchFailed || status == LbfgsStatus::NonFiniteObjective;
    }
};

/// Returns f(x) and writes the gradient into the second argument.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Limited-memory BFGS with a strong-Wolfe line search (bracketing + cubic zoom).
/// Iterates are accepted only on sufficient decrease, so `values` is non-increasing.
/// A failed line search stops the run and returns the best iterate with a status
/// flag rather than throwing.
LbfgsResult lbfgs_minimize(const Objective& objective, const Eigen::VectorXd& x0, const LbfgsConfig& config = {});

} // namespace cpinn
