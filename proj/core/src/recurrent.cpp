#include "cpinn/recurrent.hpp"

#include <cmath>

#include "cpinn/error.hpp"
#include "cpinn/losses.hpp"

namespace cpinn {

namespace {

constexpr double kMatchTol = 1e-9;

template <class Map>
auto find_close(Map& m, double key) -> decltype(m.begin()) {
    const double tol = kMatchTol * std::max(1.0, std::abs(key));
    auto it = m.lower_bound(key - tol);
    if (it != m.end() && std::abs(it->first - key) <= tol) return it;
    return m.end();
}

// Split of a point set into those with a full lag history and the rest.
struct Split {
    std::vector<std::size_t> with_history;
    std::vector<std::size_t> without_history;
};

template <class P>
Split split_by_history(const RpModel& model, const std::vector<P>& pts) {
    Split s;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        (has_history(model, pts[i].t) ? s.with_history : s.without_history).push_back(i);
    }
    return s;
}

Eigen::MatrixXd lag_matrix(const RpModel& model, const RpConfig& config, const MeasurementTable& meas,
                           const std::vector<Point>& pts, std::vector<ProvenanceRecord>* log) {
    Eigen::MatrixXd m(model.lags, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        DelayedInputs d = delayed_inputs(pts[i].x, pts[i].t, config, meas, model);
        m.col(static_cast<Eigen::Index>(i)) = d.values;
        if (log) log->push_back({pts[i].x, pts[i].t, std::move(d.sources)});
    }
    return m;
}

// Everything needed to evaluate the recurrent hybrid loss on a fixed data set.
struct RpProblem {
    std::vector<Point> data_pts;
    std::vector<Point> colloc_pts;
    Split data_split;
    Split colloc_split;
    TrainingData eligible_data;
    CollocationSet eligible_colloc;
    HybridInputs inputs;
    bool any_eligible = false;
    Eigen::RowVectorXd g_hat;       // source values at eligible collocation points
    std::vector<double> targets;    // u at every data point
    double const_dn = 0.0;          // summed squared error of points answered by the base network
    double const_pn = 0.0;
    std::vector<double> base_pred;  // base prediction per data point (only meaningful without history)
    std::vector<double> base_res;   // base residual per collocation point (only meaningful without history)
};

RpProblem build_problem(const RpModel& model, const RpConfig& config, const MeasurementTable& meas,
                        const TrainingData& data, const CollocationSet& colloc, const Combination& comb,
                        const MlpParams& netg, std::vector<ProvenanceRecord>* log) {
    RpProblem p;
    const auto samples = data.all();
    for (const auto& s : samples) {
        p.data_pts.push_back({s.x, s.t});
        p.targets.push_back(s.u);
    }
    p.colloc_pts = colloc.all();
    p.data_split = split_by_history(model, p.data_pts);
    p.colloc_split = split_by_history(model, p.colloc_pts);

    p.base_pred.assign(samples.size(), 0.0);
    for (auto i : p.data_split.without_history) {
        const double xt[2] = {samples[i].x, samples[i].t};
        p.base_pred[i] = forward(model.base, xt);
        const double d = p.base_pred[i] - samples[i].u;
        p.const_dn += d * d;
    }
    p.base_res.assign(p.colloc_pts.size(), 0.0);
    for (auto i : p.colloc_split.without_history) {
        const auto [jet, tape] = forward_jet(model.base, p.colloc_pts[i].x, p.colloc_pts[i].t);
        const double xt[2] = {p.colloc_pts[i].x, p.colloc_pts[i].t};
        p.base_res[i] = residual(comb, jet, forward(netg, xt));
        p.const_pn += p.base_res[i] * p.base_res[i];
    }

    if (p.data_split.with_history.empty() || p.colloc_split.with_history.empty()) return p;
    p.any_eligible = true;
    std::vector<Point> dpts, cpts;
    for (auto i : p.data_split.with_history) {
        p.eligible_data.interior.push_back(samples[i]);
        dpts.push_back(p.data_pts[i]);
    }
    for (auto i : p.colloc_split.with_history) {
        p.eligible_colloc.interior.push_back(p.colloc_pts[i]);
        cpts.push_back(p.colloc_pts[i]);
    }
    const Eigen::MatrixXd dl = lag_matrix(model, config, meas, dpts, log);
    const Eigen::MatrixXd cl = lag_matrix(model, config, meas, cpts, log);
    p.inputs = HybridInputs::build(p.eligible_data, p.eligible_colloc, &dl, &cl);
    p.g_hat = forward_batch(netg, p.inputs.colloc_xt);
    return p;
}

} // namespace

void RpConfig::validate(const DomainSpec& domain) const {
    if (lags < 1) throw ConfigError("RP lag count must be >= 1");
    if (!(dt > 0.0)) throw ConfigError("RP time step must be > 0");
    if (!(lags * dt < domain.t_hi - domain.t_lo)) throw ConfigError("RP lag window lags*dt must be shorter than T");
    if (iterations < 0) throw ConfigError("RP iterations must be >= 0");
}

void MeasurementTable::add(double x, double t, double u) {
    auto it = find_close(rows_, x);
    if (it == rows_.end()) it = rows_.emplace(x, std::map<double, double>{}).first;
    auto& times = it->second;
    auto jt = find_close(times, t);
    if (jt != times.end()) {
        jt->second = u;
    } else {
        times.emplace(t, u);
    }
}

std::optional<double> MeasurementTable::find(double x, double t) const {
    const auto it = find_close(rows_, x);
    if (it == rows_.end()) return std::nullopt;
    const auto jt = find_close(it->second, t);
    if (jt == it->second.end()) return std::nullopt;
    return jt->second;
}

std::size_t MeasurementTable::size() const {
    std::size_t n = 0;
    for (const auto& [x, times] : rows_) n += times.size();
    return n;
}

MeasurementTable MeasurementTable::from_samples(const std::vector<Sample>& samples,
                                                const std::vector<double>& sensor_positions) {
    MeasurementTable table;
    for (const auto& s : samples) {
        for (double pos : sensor_positions) {
            if (std::abs(s.x - pos) <= kMatchTol * std::max(1.0, std::abs(pos))) {
                table.add(pos, s.t, s.u);
                break;
            }
        }
    }
    return table;
}

RpModel warm_start(const MlpParams& netu, const RpConfig& config, double t_lo) {
    netu.validate();
    if (netu.input_width() != 2) throw ConfigError("warm start expects a solution network with (x, t) inputs");
    if (config.lags < 1) throw ConfigError("RP lag count must be >= 1");
    RpModel m;
    m.base = netu;
    m.params = netu;
    m.lags = config.lags;
    m.dt = config.dt;
    m.t_lo = t_lo;
    m.params.layer_sizes.front() = 2 + config.lags;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(netu.weights.front().rows(), 2 + config.lags);
    w.leftCols(2) = netu.weights.front();
    m.params.weights.front() = std::move(w);
    return m;
}

bool has_history(const RpModel& model, double t) {
    return t - model.lags * model.dt >= model.t_lo - 1e-12 * std::max(1.0, std::abs(t));
}

DelayedInputs delayed_inputs(double x, double t, const RpConfig& config, const MeasurementTable& measurements,
                             const RpModel& model) {
    if (!has_history(model, t)) {
        throw ConfigError("t = " + format_exact(t) + " has no lag history (t - lags*dt < " + format_exact(model.t_lo) +
                          "); reduce the lag count or start later");
    }
    (void)config;
    DelayedInputs d;
    d.values.resize(model.lags);
    d.sources.reserve(static_cast<std::size_t>(model.lags));
    for (int j = 1; j <= model.lags; ++j) {
        const double tj = t - j * model.dt;
        if (auto m = measurements.find(x, tj)) {
            d.values(j - 1) = *m;
            d.sources.push_back(LagSource::Measurement);
        } else {
            const double xt[2] = {x, tj};
            d.values(j - 1) = forward(model.base, xt);
            d.sources.push_back(LagSource::Prediction);
        }
    }
    return d;
}

RpPrediction rp_predict(const RpModel& model, const RpConfig& config, const MeasurementTable& measurements,
                        double x, double t) {
    if (!has_history(model, t)) {
        const double xt[2] = {x, t};
        return {forward(model.base, xt), "-"};
    }
    const DelayedInputs d = delayed_inputs(x, t, config, measurements, model);
    std::vector<double> in{x, t};
    for (Eigen::Index j = 0; j < d.values.size(); ++j) in.push_back(d.values(j));
    RpPrediction p;
    p.value = forward(model.params, in);
    for (auto s : d.sources) p.provenance.push_back(static_cast<char>(s));
    return p;
}

std::vector<RpPrediction> rp_predict(const RpModel& model, const RpConfig& config,
                                     const MeasurementTable& measurements, const std::vector<Point>& points) {
    std::vector<RpPrediction> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(rp_predict(model, config, measurements, p.x, p.t));
    return out;
}

RpFit evaluate_rp(const RpModel& model, const RpConfig& config, const MeasurementTable& measurements,
                  const TrainingData& data, const CollocationSet& colloc, const Combination& comb,
                  const MlpParams& netg) {
    const RpProblem p = build_problem(model, config, measurements, data, colloc, comb, netg, nullptr);
    RpFit fit;
    fit.predictions = p.base_pred;
    fit.residuals = p.base_res;
    double dn = p.const_dn;
    double pn = p.const_pn;
    if (p.any_eligible) {
        const Eigen::RowVectorXd pred = forward_batch(model.params, p.inputs.data_inputs);
        for (std::size_t k = 0; k < p.data_split.with_history.size(); ++k) {
            const auto i = p.data_split.with_history[k];
            fit.predictions[i] = pred(static_cast<Eigen::Index>(k));
            const double d = fit.predictions[i] - p.targets[i];
            dn += d * d;
        }
        const JetTape tape = forward_jet(model.params, p.inputs.colloc_inputs);
        for (std::size_t k = 0; k < p.colloc_split.with_history.size(); ++k) {
            const auto i = p.colloc_split.with_history[k];
            fit.residuals[i] = residual(comb, tape.output_jet(static_cast<Eigen::Index>(k)),
                                        p.g_hat(static_cast<Eigen::Index>(k)));
            pn += fit.residuals[i] * fit.residuals[i];
        }
    }
    fit.mse_dn = dn / static_cast<double>(p.data_pts.size());
    fit.mse_pn = pn / static_cast<double>(p.colloc_pts.size());
    return fit;
}

RpModel train_rp(RpModel model, const TrainingData& data, const CollocationSet& colloc, const Combination& comb,
                 const MlpParams& netg, const RpConfig& config, const MeasurementTable& measurements) {
    comb.validate();
    if (model.params.input_width() != 2 + model.lags) throw ConfigError("RP model input width does not match lags");
    const RpProblem p = build_problem(model, config, measurements, data, colloc, comb, netg, &model.provenance);
    if (config.iterations == 0 || !p.any_eligible) return model;

    const double nd = static_cast<double>(p.data_pts.size());
    const double nc = static_cast<double>(p.colloc_pts.size());
    const double wd = static_cast<double>(p.data_split.with_history.size()) / nd;
    const double wc = static_cast<double>(p.colloc_split.with_history.size()) / nc;
    const double constant = p.const_dn / nd + p.const_pn / nc;

    MlpParams work = model.params;
    Eigen::VectorXd part;
    const Objective obj = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        assign_flat(work, theta);
        const double dn = data_loss(work, p.inputs, &grad);
        const double pn = physics_loss_u(work, comb, p.g_hat, p.inputs, &part);
        grad = wd * grad + wc * part;
        return wd * dn + wc * pn + constant;
    };
    LbfgsConfig lc = config.lbfgs;
    lc.max_iterations = config.iterations;
    const LbfgsResult res = lbfgs_minimize(obj, flatten(model.params), lc);
    assign_flat(model.params, res.x);
    return model;
}

} // namespace cpinn
