#include "cpinn/jet.hpp"

#include <cmath>
#include <string>

#include "cpinn/error.hpp"

namespace cpinn {

namespace {

constexpr int kV = 0, kX = 1, kT = 2, kXX = 3, kXT = 4, kTT = 5;

void check_tape(const MlpParams& params, const std::vector<int>& recorded) {
    if (params.layer_sizes != recorded) {
        throw ConfigError("jet tape was recorded for a network with a different layout");
    }
}

} // namespace

double Jet2::operator[](JetComponent c) const {
    switch (c) {
    case JetComponent::Value: return value;
    case JetComponent::Dx: return d_x;
    case JetComponent::Dt: return d_t;
    case JetComponent::Dxx: return d_xx;
    case JetComponent::Dxt: return d_xt;
    case JetComponent::Dtt: return d_tt;
    }
    return value;
}

double& Jet2::operator[](JetComponent c) {
    switch (c) {
    case JetComponent::Value: return value;
    case JetComponent::Dx: return d_x;
    case JetComponent::Dt: return d_t;
    case JetComponent::Dxx: return d_xx;
    case JetComponent::Dxt: return d_xt;
    case JetComponent::Dtt: return d_tt;
    }
    return value;
}

bool Jet2::is_finite() const {
    return std::isfinite(value) && std::isfinite(d_x) && std::isfinite(d_t) && std::isfinite(d_xx) &&
           std::isfinite(d_xt) && std::isfinite(d_tt);
}

std::pair<Jet2, Jet2> seed_inputs(double x, double t) {
    Jet2 jx;
    jx.value = x;
    jx.d_x = 1.0;
    Jet2 jt;
    jt.value = t;
    jt.d_t = 1.0;
    return {jx, jt};
}

Jet2 JetBatch::at(Eigen::Index row, Eigen::Index col) const {
    Jet2 j;
    j.value = c[kV](row, col);
    j.d_x = c[kX](row, col);
    j.d_t = c[kT](row, col);
    j.d_xx = c[kXX](row, col);
    j.d_xt = c[kXT](row, col);
    j.d_tt = c[kTT](row, col);
    return j;
}

JetBatch seed_batch(std::span<const double> x, std::span<const double> t, const Eigen::MatrixXd* constants) {
    if (x.size() != t.size()) throw ConfigError("seed_batch: x and t differ in length");
    const auto n = static_cast<Eigen::Index>(x.size());
    const Eigen::Index extra = constants ? constants->rows() : 0;
    if (constants && constants->cols() != n) throw ConfigError("seed_batch: constant inputs have wrong column count");
    JetBatch b;
    for (auto& m : b.c) m = Eigen::MatrixXd::Zero(2 + extra, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        b.c[kV](0, i) = x[static_cast<std::size_t>(i)];
        b.c[kV](1, i) = t[static_cast<std::size_t>(i)];
        b.c[kX](0, i) = 1.0;
        b.c[kT](1, i) = 1.0;
    }
    if (extra > 0) b.c[kV].bottomRows(extra) = *constants;
    return b;
}

JetTape forward_jet(const MlpParams& params, const JetBatch& inputs) {
    params.validate();
    if (inputs.rows() != params.input_width()) {
        throw ConfigError("forward_jet: input jets have " + std::to_string(inputs.rows()) +
                          " rows, network expects " + std::to_string(params.input_width()));
    }
    JetTape tape;
    tape.layer_sizes_ = params.layer_sizes;
    tape.activations_.reserve(params.weights.size());
    tape.activations_.push_back(inputs);

    const int layers = params.layer_count();
    for (int l = 0; l < layers; ++l) {
        const JetBatch& a = tape.activations_.back();
        const auto& w = params.weights[l];
        JetBatch z;
        for (int k = 0; k < 6; ++k) z.c[k].noalias() = w * a.c[k];
        z.c[kV].colwise() += params.biases[l];

        if (l + 1 == layers) {
            tape.output_ = std::move(z);
            break;
        }

        JetBatch h;
        const Eigen::ArrayXXd s = z.c[kV].array().tanh();
        const Eigen::ArrayXXd s1 = 1.0 - s.square();
        const Eigen::ArrayXXd s2 = -2.0 * s * s1;
        const auto zx = z.c[kX].array();
        const auto zt = z.c[kT].array();
        h.c[kV] = s.matrix();
        h.c[kX] = (s1 * zx).matrix();
        h.c[kT] = (s1 * zt).matrix();
        h.c[kXX] = (s2 * zx.square() + s1 * z.c[kXX].array()).matrix();
        h.c[kXT] = (s2 * zx * zt + s1 * z.c[kXT].array()).matrix();
        h.c[kTT] = (s2 * zt.square() + s1 * z.c[kTT].array()).matrix();

        tape.pre_activations_.push_back(std::move(z));
        tape.activations_.push_back(std::move(h));
    }
    return tape;
}

std::pair<Jet2, JetTape> forward_jet(const MlpParams& params, double x, double t) {
    const double xs[1] = {x};
    const double ts[1] = {t};
    JetTape tape = forward_jet(params, seed_batch(xs, ts));
    const Jet2 out = tape.output_jet(0);
    return {out, std::move(tape)};
}

Eigen::VectorXd grad_wrt_params(const MlpParams& params, const JetTape& tape, const JetCotangent& upstream) {
    check_tape(params, tape.layer_sizes_);
    const Eigen::Index n = tape.points();
    for (const auto& u : upstream) {
        if (u.size() != n) throw ConfigError("grad_wrt_params: cotangent length does not match tape");
    }

    const int layers = params.layer_count();
    std::vector<Eigen::Index> offsets(layers);
    Eigen::Index off = 0;
    for (int l = 0; l < layers; ++l) {
        offsets[l] = off;
        off += params.weights[l].size() + params.biases[l].size();
    }
    Eigen::VectorXd grad(off);

    // Cotangents of the affine output of layer l.
    std::array<Eigen::MatrixXd, 6> zbar;
    for (int k = 0; k < 6; ++k) zbar[k] = upstream[k];

    for (int l = layers - 1; l >= 0; --l) {
        const JetBatch& a = tape.activations_[l];
        Eigen::MatrixXd gw = zbar[0] * a.c[0].transpose();
        for (int k = 1; k < 6; ++k) gw.noalias() += zbar[k] * a.c[k].transpose();
        const Eigen::Index rows = gw.rows();
        const Eigen::Index cols = gw.cols();
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) grad(offsets[l] + r * cols + c) = gw(r, c);
        }
        grad.segment(offsets[l] + rows * cols, rows) = zbar[kV].rowwise().sum();

        if (l == 0) break;

        std::array<Eigen::ArrayXXd, 6> hbar;
        for (int k = 0; k < 6; ++k) hbar[k] = (params.weights[l].transpose() * zbar[k]).array();

        const JetBatch& z = tape.pre_activations_[l - 1];
        const Eigen::ArrayXXd s = a.c[kV].array();
        const Eigen::ArrayXXd s1 = 1.0 - s.square();
        const Eigen::ArrayXXd s2 = -2.0 * s * s1;
        const Eigen::ArrayXXd s3 = -2.0 * (s1.square() + s * s2);
        const auto zx = z.c[kX].array();
        const auto zt = z.c[kT].array();

        zbar[kV] = (hbar[kV] * s1 +
                    s2 * (hbar[kX] * zx + hbar[kT] * zt + hbar[kXX] * z.c[kXX].array() +
                          hbar[kXT] * z.c[kXT].array() + hbar[kTT] * z.c[kTT].array()) +
                    s3 * (hbar[kXX] * zx.square() + hbar[kXT] * zx * zt + hbar[kTT] * zt.square()))
                       .matrix();
        zbar[kX] = (hbar[kX] * s1 + s2 * (2.0 * hbar[kXX] * zx + hbar[kXT] * zt)).matrix();
        zbar[kT] = (hbar[kT] * s1 + s2 * (2.0 * hbar[kTT] * zt + hbar[kXT] * zx)).matrix();
        zbar[kXX] = (hbar[kXX] * s1).matrix();
        zbar[kXT] = (hbar[kXT] * s1).matrix();
        zbar[kTT] = (hbar[kTT] * s1).matrix();
    }
    return grad;
}

Eigen::VectorXd grad_wrt_params(const MlpParams& params, const JetTape& tape, const Jet2& upstream) {
    if (tape.points() != 1) throw ConfigError("grad_wrt_params: Jet2 cotangent requires a single-point tape");
    JetCotangent cot;
    cot[kV] = Eigen::RowVectorXd::Constant(1, upstream.value);
    cot[kX] = Eigen::RowVectorXd::Constant(1, upstream.d_x);
    cot[kT] = Eigen::RowVectorXd::Constant(1, upstream.d_t);
    cot[kXX] = Eigen::RowVectorXd::Constant(1, upstream.d_xx);
    cot[kXT] = Eigen::RowVectorXd::Constant(1, upstream.d_xt);
    cot[kTT] = Eigen::RowVectorXd::Constant(1, upstream.d_tt);
    return grad_wrt_params(params, tape, cot);
}

} // namespace cpinn
