#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cpinn/network.hpp"

namespace cpinn {

enum class JetComponent : int { Value = 0, Dx, Dt, Dxx, Dxt, Dtt };

inline constexpr std::size_t kJetComponents = 6;

/// A scalar field value and its partial derivatives up to order two in (x, t).
struct Jet2 {
    double value = 0.0;
    double d_x = 0.0;
    double d_t = 0.0;
    double d_xx = 0.0;
    double d_xt = 0.0;
    double d_tt = 0.0;

    double operator[](JetComponent c) const;
    double& operator[](JetComponent c);

    bool is_finite() const;

    friend bool operator==(const Jet2&, const Jet2&) = default;
};

/// Canonical input jets: (x, dx = 1) and (t, dt = 1).
std::pair<Jet2, Jet2> seed_inputs(double x, double t);

/// Jets for a batch of points. Each component is (width x N).
struct JetBatch {
    std::array<Eigen::MatrixXd, kJetComponents> c;

    Eigen::Index rows() const { return c[0].rows(); }
    Eigen::Index cols() const { return c[0].cols(); }

    Eigen::MatrixXd& operator[](JetComponent k) { return c[static_cast<int>(k)]; }
    const Eigen::MatrixXd& operator[](JetComponent k) const { return c[static_cast<int>(k)]; }

    /// Jet of row `row` at column `col`.
    Jet2 at(Eigen::Index row, Eigen::Index col) const;
};

/// Input jets for N points: row 0 is x, row 1 is t, and any rows of `constants`
/// follow as inputs with zero derivatives (e.g. lagged field values).
JetBatch seed_batch(std::span<const double> x, std::span<const double> t,
                    const Eigen::MatrixXd* constants = nullptr);

/// Upstream cotangent per output component, each (1 x N).
using JetCotangent = std::array<Eigen::RowVectorXd, kJetComponents>;

/// Intermediate jets of one forward pass, enough to run reverse accumulation.
class JetTape {
public:
    const JetBatch& input() const { return activations_.front(); }
    const JetBatch& output() const { return output_; }
    Eigen::Index points() const { return output_.cols(); }
    const std::vector<int>& layer_sizes() const { return layer_sizes_; }

    /// Output jet of point `i`.
    Jet2 output_jet(Eigen::Index i) const { return output_.at(0, i); }

private:
    friend JetTape forward_jet(const MlpParams&, const JetBatch&);
    friend Eigen::VectorXd grad_wrt_params(const MlpParams&, const JetTape&, const JetCotangent&);

    std::vector<int> layer_sizes_;
    // activations_[l] is the input jet of layer l; pre_activations_[l] the
    // affine output of hidden layer l before tanh.
    std::vector<JetBatch> activations_;
    std::vector<JetBatch> pre_activations_;
    JetBatch output_;
};

/// Propagates input jets through the network. Affine layers act linearly on
/// every component; tanh layers apply the closed-form second-order chain rule.
JetTape forward_jet(const MlpParams& params, const JetBatch& inputs);

/// Single-point convenience: output jet at (x, t) and its tape. Requires input width 2.
std::pair<Jet2, JetTape> forward_jet(const MlpParams& params, double x, double t);

/// Gradient of sum_points sum_c upstream_c * output_c with respect to every
/// parameter, in flatten() order.
Eigen::VectorXd grad_wrt_params(const MlpParams& params, const JetTape& tape,
                                const JetCotangent& upstream);

/// Single-point cotangent given as a Jet2 (each field is the weight of that component).
Eigen::VectorXd grad_wrt_params(const MlpParams& params, const JetTape& tape, const Jet2& upstream);

} // namespace cpinn
