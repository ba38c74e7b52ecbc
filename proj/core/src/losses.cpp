#include "cpinn/losses.hpp"

#include "cpinn/error.hpp"

namespace cpinn {

namespace {

Eigen::MatrixXd xt_matrix(const std::vector<Point>& pts) {
    Eigen::MatrixXd m(2, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        m(0, static_cast<Eigen::Index>(i)) = pts[i].x;
        m(1, static_cast<Eigen::Index>(i)) = pts[i].t;
    }
    return m;
}

} // namespace

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

HybridInputs HybridInputs::build(const TrainingData& data, const CollocationSet& colloc,
                                  const Eigen::MatrixXd* data_extra, const Eigen::MatrixXd* colloc_extra) {
    if (data.empty()) throw ConfigError("measurement set D is empty");
    if (colloc.size() == 0) throw ConfigError("collocation set E is empty");
    const auto samples = data.all();
    const auto n = static_cast<Eigen::Index>(samples.size());
    const Eigen::Index extra = data_extra ? data_extra->rows() : 0;
    if ((colloc_extra ? colloc_extra->rows() : 0) != extra) {
        throw ConfigError("extra input rows differ between D and E");
    }

    HybridInputs in;
    in.data_inputs.resize(2 + extra, n);
    in.data_targets.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        in.data_inputs(0, i) = samples[static_cast<std::size_t>(i)].x;
        in.data_inputs(1, i) = samples[static_cast<std::size_t>(i)].t;
        in.data_targets(i) = samples[static_cast<std::size_t>(i)].u;
    }
    if (extra > 0) {
        if (data_extra->cols() != n) throw ConfigError("extra data inputs have wrong column count");
        in.data_inputs.bottomRows(extra) = *data_extra;
    }

    const auto pts = colloc.all();
    in.colloc_xt = xt_matrix(pts);
    std::vector<double> xs(pts.size()), ts(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        xs[i] = pts[i].x;
        ts[i] = pts[i].t;
    }
    in.colloc_inputs = seed_batch(xs, ts, colloc_extra);
    return in;
}

double data_loss(const MlpParams& u, const HybridInputs& in, Eigen::VectorXd* grad) {
    const Eigen::RowVectorXd pred = forward_batch(u, in.data_inputs);
    const Eigen::RowVectorXd diff = pred - in.data_targets;
    const double n = static_cast<double>(diff.size());
    if (grad) *grad = value_gradient(u, in.data_inputs, (2.0 / n) * diff);
    return diff.squaredNorm() / n;
}

Eigen::MatrixXd operator_matrix(const MlpParams& u, const Combination& comb, const HybridInputs& in) {
    comb.validate();
    const JetTape tape = forward_jet(u, in.colloc_inputs);
    const auto ops = comb.active();
    Eigen::MatrixXd phi(tape.points(), static_cast<Eigen::Index>(ops.size()));
    for (std::size_t k = 0; k < ops.size(); ++k) {
        phi.col(static_cast<Eigen::Index>(k)) = tape.output()[jet_component(ops[k])].row(0).transpose();
    }
    return phi;
}

double physics_loss_u(const MlpParams& u, const Combination& comb, const Eigen::RowVectorXd& g_hat,
                      const HybridInputs& in, Eigen::VectorXd* grad) {
    comb.validate();
    const JetTape tape = forward_jet(u, in.colloc_inputs);
    const Eigen::Index n = tape.points();
    if (g_hat.size() != n) throw ConfigError("g_hat length does not match collocation set");
    const auto ops = comb.active();
    Eigen::RowVectorXd r = -g_hat;
    for (std::size_t k = 0; k < ops.size(); ++k) r += comb.lambda[k] * tape.output()[jet_component(ops[k])].row(0);
    const double dn = static_cast<double>(n);
    if (grad) {
        JetCotangent cot;
        for (auto& c : cot) c = Eigen::RowVectorXd::Zero(n);
        for (std::size_t k = 0; k < ops.size(); ++k) {
            cot[static_cast<int>(jet_component(ops[k]))] += (2.0 * comb.lambda[k] / dn) * r;
        }
        *grad = grad_wrt_params(u, tape, cot);
    }
    return r.squaredNorm() / dn;
}

double physics_loss_g(const MlpParams& g, const Eigen::RowVectorXd& target, const HybridInputs& in,
                      Eigen::VectorXd* grad) {
    const Eigen::RowVectorXd g_hat = forward_batch(g, in.colloc_xt);
    if (target.size() != g_hat.size()) throw ConfigError("target length does not match collocation set");
    const Eigen::RowVectorXd r = target - g_hat;
    const double n = static_cast<double>(r.size());
    if (grad) *grad = value_gradient(g, in.colloc_xt, (-2.0 / n) * r);
    return r.squaredNorm() / n;
}

double physics_loss_lambda(const Eigen::MatrixXd& phi, const Eigen::VectorXd& lambda,
                           const Eigen::RowVectorXd& g_hat, Eigen::VectorXd* grad) {
    if (phi.cols() != lambda.size() || phi.rows() != g_hat.size()) {
        throw ConfigError("physics_loss_lambda: shape mismatch");
    }
    const Eigen::VectorXd r = phi * lambda - g_hat.transpose();
    const double n = static_cast<double>(r.size());
    if (grad) *grad = (2.0 / n) * (phi.transpose() * r);
    return r.squaredNorm() / n;
}

double mse_dn(const MlpParams& u, const TrainingData& data) {
    if (data.empty()) throw ConfigError("measurement set D is empty");
    double s = 0.0;
    const auto samples = data.all();
    Eigen::MatrixXd in(2, static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        in(0, static_cast<Eigen::Index>(i)) = samples[i].x;
        in(1, static_cast<Eigen::Index>(i)) = samples[i].t;
    }
    const Eigen::RowVectorXd pred = forward_batch(u, in);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double d = pred(static_cast<Eigen::Index>(i)) - samples[i].u;
        s += d * d;
    }
    return s / static_cast<double>(samples.size());
}

double mse_pn(const MlpParams& u, const MlpParams& g, const Combination& comb, const CollocationSet& colloc) {
    if (colloc.size() == 0) throw ConfigError("collocation set E is empty");
    const auto pts = colloc.all();
    const Eigen::MatrixXd xt = xt_matrix(pts);
    const Eigen::RowVectorXd g_hat = forward_batch(g, xt);
    std::vector<double> xs(pts.size()), ts(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        xs[i] = pts[i].x;
        ts[i] = pts[i].t;
    }
    const JetTape tape = forward_jet(u, seed_batch(xs, ts));
    double s = 0.0;
    for (Eigen::Index i = 0; i < tape.points(); ++i) {
        const double r = residual(comb, tape.output_jet(i), g_hat(i));
        s += r * r;
    }
    return s / static_cast<double>(pts.size());
}

LossReport evaluate_losses(const MlpParams& u, const MlpParams& g, const Combination& comb,
                           const TrainingData& data, const CollocationSet& colloc) {
    LossReport r;
    r.mse_dn = mse_dn(u, data);
    r.mse_pn = mse_pn(u, g, comb, colloc);
    r.mse_n = r.mse_dn + r.mse_pn;
    return r;
}

Eigen::VectorXd grad_mse(LossKind kind, Block block, const MlpParams& u, const MlpParams& g,
                         const Combination& comb, const TrainingData& data, const CollocationSet& colloc) {
    const HybridInputs in = HybridInputs::build(data, colloc);
    const bool with_data = kind != LossKind::Physics;
    const bool with_physics = kind != LossKind::DataDriven;

    switch (block) {
    case Block::NetU: {
        Eigen::VectorXd total = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(u.parameter_count()));
        Eigen::VectorXd part;
        if (with_data) {
            data_loss(u, in, &part);
            total += part;
        }
        if (with_physics) {
            physics_loss_u(u, comb, forward_batch(g, in.colloc_xt), in, &part);
            total += part;
        }
        return total;
    }
    case Block::NetG: {
        Eigen::VectorXd total = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.parameter_count()));
        if (with_physics) {
            const Eigen::MatrixXd phi = operator_matrix(u, comb, in);
            const Eigen::RowVectorXd target = (phi * to_vector(comb.lambda)).transpose();
            physics_loss_g(g, target, in, &total);
        }
        return total;
    }
    case Block::Lambda: {
        Eigen::VectorXd total = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(comb.lambda.size()));
        if (with_physics) {
            const Eigen::MatrixXd phi = operator_matrix(u, comb, in);
            physics_loss_lambda(phi, to_vector(comb.lambda), forward_batch(g, in.colloc_xt), &total);
        }
        return total;
    }
    }
    return {};
}

} // namespace cpinn
