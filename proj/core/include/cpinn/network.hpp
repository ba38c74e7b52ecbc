#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cpinn {

/// Weights and biases of a fully connected tanh network with a scalar affine output.
///
/// Layer `i` maps `layer_sizes[i]` inputs to `layer_sizes[i+1]` outputs;
/// `weights[i]` is (layer_sizes[i+1] x layer_sizes[i]). Every layer but the last
/// is followed by tanh.
struct MlpParams {
    std::vector<int> layer_sizes;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    int input_width() const { return layer_sizes.empty() ? 0 : layer_sizes.front(); }
    int layer_count() const { return static_cast<int>(weights.size()); }
    std::size_t parameter_count() const;

    /// Throws ConfigError unless shapes agree with layer_sizes and the output is scalar.
    void validate() const;

    /// All-zero parameters with the given layout.
    static MlpParams zeros(std::vector<int> layer_sizes);

    friend bool operator==(const MlpParams& a, const MlpParams& b);
};

struct NetworkConfig {
    int input_width = 2;
    int hidden_layers = 4;
    int hidden_width = 20;
    std::uint64_t seed = 0;

    std::vector<int> layer_sizes() const;
};

std::size_t parameter_count(std::span<const int> layer_sizes);

/// Xavier-uniform weights, zero biases. Pure in (config, seed).
MlpParams init(const NetworkConfig& config);

/// Scalar output for one input vector.
double forward(const MlpParams& params, std::span<const double> inputs);

/// Scalar outputs for a batch; `inputs` is (input_width x N), one column per point.
Eigen::RowVectorXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& inputs);

/// Value and parameter gradient of sum_i upstream[i] * net(inputs[:, i]).
/// Returns the flat gradient in flatten() order.
Eigen::VectorXd value_gradient(const MlpParams& params, const Eigen::MatrixXd& inputs,
                               const Eigen::RowVectorXd& upstream);

/// Layer-major; within a layer the row-major weights, then the biases.
Eigen::VectorXd flatten(const MlpParams& params);
MlpParams unflatten(std::span<const int> layer_sizes, const Eigen::VectorXd& flat);

/// Writes `flat` into `params` in place (shape taken from params).
void assign_flat(MlpParams& params, const Eigen::VectorXd& flat);

} // namespace cpinn
