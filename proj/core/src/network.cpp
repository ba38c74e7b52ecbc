#include "cpinn/network.hpp"

#include <cmath>
#include <random>
#include <string>

#include "cpinn/error.hpp"

namespace cpinn {

std::size_t parameter_count(std::span<const int> layer_sizes) {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
        n += static_cast<std::size_t>(layer_sizes[i + 1]) * (layer_sizes[i] + 1);
    }
    return n;
}

std::size_t MlpParams::parameter_count() const { return cpinn::parameter_count(layer_sizes); }

void MlpParams::validate() const {
    if (layer_sizes.size() < 2) {
        throw ConfigError("network needs at least an input and an output layer");
    }
    if (layer_sizes.back() != 1) {
        throw ConfigError("network output width must be 1, got " + std::to_string(layer_sizes.back()));
    }
    if (weights.size() + 1 != layer_sizes.size() || biases.size() != weights.size()) {
        throw ConfigError("layer count does not match layer_sizes");
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (layer_sizes[i] < 1 || layer_sizes[i + 1] < 1) {
            throw ConfigError("layer widths must be positive");
        }
        if (weights[i].rows() != layer_sizes[i + 1] || weights[i].cols() != layer_sizes[i]) {
            throw ConfigError("weight matrix " + std::to_string(i) + " has shape " +
                              std::to_string(weights[i].rows()) + "x" + std::to_string(weights[i].cols()) +
                              ", expected " + std::to_string(layer_sizes[i + 1]) + "x" +
                              std::to_string(layer_sizes[i]));
        }
        if (biases[i].size() != layer_sizes[i + 1]) {
            throw ConfigError("bias vector " + std::to_string(i) + " has wrong length");
        }
    }
}

MlpParams MlpParams::zeros(std::vector<int> layer_sizes) {
    MlpParams p;
    p.layer_sizes = std::move(layer_sizes);
    for (std::size_t i = 0; i + 1 < p.layer_sizes.size(); ++i) {
        p.weights.push_back(Eigen::MatrixXd::Zero(p.layer_sizes[i + 1], p.layer_sizes[i]));
        p.biases.push_back(Eigen::VectorXd::Zero(p.layer_sizes[i + 1]));
    }
    return p;
}

bool operator==(const MlpParams& a, const MlpParams& b) {
    if (a.layer_sizes != b.layer_sizes || a.weights.size() != b.weights.size()) return false;
    for (std::size_t i = 0; i < a.weights.size(); ++i) {
        if (a.weights[i] != b.weights[i] || a.biases[i] != b.biases[i]) return false;
    }
    return true;
}

std::vector<int> NetworkConfig::layer_sizes() const {
    if (input_width < 1) throw ConfigError("input_width must be >= 1");
    if (hidden_layers < 1) throw ConfigError("hidden_layers must be >= 1");
    if (hidden_width < 1) throw ConfigError("hidden_width must be >= 1");
    std::vector<int> sizes{input_width};
    for (int i = 0; i < hidden_layers; ++i) sizes.push_back(hidden_width);
    sizes.push_back(1);
    return sizes;
}

MlpParams init(const NetworkConfig& config) {
    MlpParams p = MlpParams::zeros(config.layer_sizes());
    std::mt19937_64 rng(config.seed);
    for (auto& w : p.weights) {
        const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
        }
    }
    return p;
}

double forward(const MlpParams& params, std::span<const double> inputs) {
    if (static_cast<int>(inputs.size()) != params.input_width()) {
        throw ConfigError("network expects " + std::to_string(params.input_width()) + " inputs, got " +
                          std::to_string(inputs.size()));
    }
    Eigen::MatrixXd x(inputs.size(), 1);
    for (std::size_t i = 0; i < inputs.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = inputs[i];
    return forward_batch(params, x)(0);
}

Eigen::RowVectorXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& inputs) {
    params.validate();
    if (inputs.rows() != params.input_width()) {
        throw ConfigError("input batch has " + std::to_string(inputs.rows()) + " rows, network expects " +
                          std::to_string(params.input_width()));
    }
    Eigen::MatrixXd a = inputs;
    const int layers = params.layer_count();
    for (int l = 0; l < layers; ++l) {
        Eigen::MatrixXd z = params.weights[l] * a;
        z.colwise() += params.biases[l];
        if (l + 1 < layers) {
            a = z.array().tanh().matrix();
        } else {
            a = std::move(z);
        }
    }
    return a.row(0);
}

Eigen::VectorXd value_gradient(const MlpParams& params, const Eigen::MatrixXd& inputs,
                               const Eigen::RowVectorXd& upstream) {
    params.validate();
    if (inputs.rows() != params.input_width() || upstream.size() != inputs.cols()) {
        throw ConfigError("value_gradient: input/upstream shape mismatch");
    }
    const int layers = params.layer_count();
    std::vector<Eigen::MatrixXd> acts;
    acts.reserve(layers);
    acts.push_back(inputs);
    for (int l = 0; l + 1 < layers; ++l) {
        Eigen::MatrixXd z = params.weights[l] * acts.back();
        z.colwise() += params.biases[l];
        acts.push_back(z.array().tanh().matrix());
    }

    Eigen::VectorXd grad(params.parameter_count());
    std::vector<Eigen::Index> offsets(layers);
    Eigen::Index off = 0;
    for (int l = 0; l < layers; ++l) {
        offsets[l] = off;
        off += params.weights[l].size() + params.biases[l].size();
    }

    Eigen::MatrixXd delta = upstream;
    for (int l = layers - 1; l >= 0; --l) {
        const Eigen::MatrixXd gw = delta * acts[l].transpose();
        const Eigen::Index rows = gw.rows();
        const Eigen::Index cols = gw.cols();
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) grad(offsets[l] + r * cols + c) = gw(r, c);
        }
        grad.segment(offsets[l] + rows * cols, rows) = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = params.weights[l].transpose() * delta;
            delta = (back.array() * (1.0 - acts[l].array().square())).matrix();
        }
    }
    return grad;
}

Eigen::VectorXd flatten(const MlpParams& params) {
    Eigen::VectorXd flat(params.parameter_count());
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        const auto& w = params.weights[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) flat(k++) = w(r, c);
        }
        for (Eigen::Index r = 0; r < params.biases[l].size(); ++r) flat(k++) = params.biases[l](r);
    }
    return flat;
}

void assign_flat(MlpParams& params, const Eigen::VectorXd& flat) {
    if (static_cast<std::size_t>(flat.size()) != params.parameter_count()) {
        throw ConfigError("flat parameter vector has length " + std::to_string(flat.size()) + ", expected " +
                          std::to_string(params.parameter_count()));
    }
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        auto& w = params.weights[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat(k++);
        }
        for (Eigen::Index r = 0; r < params.biases[l].size(); ++r) params.biases[l](r) = flat(k++);
    }
}

MlpParams unflatten(std::span<const int> layer_sizes, const Eigen::VectorXd& flat) {
    MlpParams p = MlpParams::zeros(std::vector<int>(layer_sizes.begin(), layer_sizes.end()));
    p.validate();
    assign_flat(p, flat);
    return p;
}

} // namespace cpinn
