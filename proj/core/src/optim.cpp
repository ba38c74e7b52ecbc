#include "cpinn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "cpinn/error.hpp"

namespace cpinn {

void adam_step(AdamState& state, Eigen::VectorXd& x, const Eigen::VectorXd& grad) {
    if (grad.size() != x.size()) throw ConfigError("adam_step: gradient and variable differ in length");
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
        if (!std::isfinite(grad(i))) throw OptimizerError(static_cast<std::size_t>(i), "non-finite gradient");
    }
    if (state.m.size() != x.size()) {
        if (state.step != 0) throw ConfigError("adam_step: variable length changed mid-run");
        state.m = Eigen::VectorXd::Zero(x.size());
        state.v = Eigen::VectorXd::Zero(x.size());
    }
    const AdamConfig& c = state.config;
    ++state.step;
    state.m = c.beta1 * state.m + (1.0 - c.beta1) * grad;
    state.v = c.beta2 * state.v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double m_hat = state.m(i) / bc1;
        const double v_hat = state.v(i) / bc2;
        x(i) -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
}

std::string_view status_name(LbfgsStatus s) {
    switch (s) {
    case LbfgsStatus::GradientTolerance: return "gradient_tolerance";
    case LbfgsStatus::ValueTolerance: return "value_tolerance";
    case LbfgsStatus::MaxIterations: return "max_iterations";
    case LbfgsStatus::LineSearchFailed: return "line_search_failed";
    case LbfgsStatus::NonFiniteObjective: return "non_finite_objective";
    }
    return "unknown";
}

namespace {

struct Probe {
    double alpha = 0.0;
    double f = 0.0;
    double dphi = 0.0;
    Eigen::VectorXd g;
};

// Minimizer of the cubic through (x1, f1, g1), (x2, f2, g2), clamped to [lo, hi].
double cubic_minimizer(double x1, double f1, double g1, double x2, double f2, double g2, double lo, double hi) {
    const double d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
    const double d2sq = d1 * d1 - g1 * g2;
    if (d2sq >= 0.0) {
        const double d2 = std::sqrt(d2sq);
        double pos;
        if (x1 <= x2) {
            pos = x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2));
        } else {
            pos = x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2));
        }
        if (std::isfinite(pos)) return std::clamp(pos, lo, hi);
    }
    return 0.5 * (lo + hi);
}

struct LineSearchOutcome {
    bool ok = false;
    Probe point;
};

class StrongWolfe {
public:
    StrongWolfe(const Objective& obj, const LbfgsConfig& cfg, int& evals) : obj_(obj), cfg_(cfg), evals_(evals) {}

    LineSearchOutcome run(const Eigen::VectorXd& x, double f0, double dphi0, const Eigen::VectorXd& d,
                          double alpha0) {
        x_ = &x;
        d_ = &d;
        f0_ = f0;
        dphi0_ = dphi0;
        budget_ = cfg_.max_linesearch;
        best_ = {};
        best_.f = f0;

        Probe prev{0.0, f0, dphi0, {}};
        double alpha = alpha0;
        for (int i = 0; budget_ > 0; ++i) {
            Probe cur = eval(alpha);
            if (!std::isfinite(cur.f) || cur.f > f0 + cfg_.c1 * alpha * dphi0 || (i > 0 && cur.f >= prev.f)) {
                return zoom(prev, cur);
            }
            if (std::abs(cur.dphi) <= -cfg_.c2 * dphi0) return {true, cur};
            if (cur.dphi >= 0.0) return zoom(cur, prev);
            const double lo = alpha + 0.01 * (alpha - prev.alpha);
            const double hi = alpha * 10.0;
            const double next = cubic_minimizer(prev.alpha, prev.f, prev.dphi, alpha, cur.f, cur.dphi, lo, hi);
            prev = std::move(cur);
            alpha = next;
        }
        return fallback();
    }

private:
    Probe eval(double alpha) {
        --budget_;
        ++evals_;
        Probe p;
        p.alpha = alpha;
        const Eigen::VectorXd xa = *x_ + alpha * *d_;
        p.g.resize(xa.size());
        p.f = obj_(xa, p.g);
        if (!std::isfinite(p.f) || !p.g.allFinite()) {
            p.f = std::numeric_limits<double>::infinity();
            p.dphi = std::numeric_limits<double>::quiet_NaN();
            return p;
        }
        p.dphi = p.g.dot(*d_);
        if (p.f <= f0_ + cfg_.c1 * alpha * dphi0_ && p.f < best_.f) best_ = p;
        return p;
    }

    // lo satisfies sufficient decrease with the lowest value seen; hi brackets a minimizer.
    LineSearchOutcome zoom(Probe lo, Probe hi) {
        while (budget_ > 0) {
            const double a = lo.alpha;
            const double b = hi.alpha;
            const double width = std::abs(b - a);
            if (width * d_->lpNorm<Eigen::Infinity>() < 1e-16 * std::max(1.0, x_->lpNorm<Eigen::Infinity>())) break;
            double trial;
            if (std::isfinite(hi.f) && std::isfinite(hi.dphi)) {
                trial = cubic_minimizer(a, lo.f, lo.dphi, b, hi.f, hi.dphi, std::min(a, b), std::max(a, b));
            } else {
                trial = 0.5 * (a + b);
            }
            if (std::abs(trial - a) < 0.1 * width || std::abs(trial - b) < 0.1 * width) trial = 0.5 * (a + b);

            Probe cur = eval(trial);
            if (!std::isfinite(cur.f) || cur.f > f0_ + cfg_.c1 * trial * dphi0_ || cur.f >= lo.f) {
                hi = std::move(cur);
            } else {
                if (std::abs(cur.dphi) <= -cfg_.c2 * dphi0_) return {true, cur};
                if (cur.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = std::move(cur);
            }
        }
        return fallback();
    }

    // No strong-Wolfe point found: accept the best sufficient-decrease point, if any.
    LineSearchOutcome fallback() const {
        if (best_.alpha > 0.0 && best_.f < f0_) return {true, best_};
        return {false, {}};
    }

    const Objective& obj_;
    const LbfgsConfig& cfg_;
    int& evals_;
    const Eigen::VectorXd* x_ = nullptr;
    const Eigen::VectorXd* d_ = nullptr;
    double f0_ = 0.0;
    double dphi0_ = 0.0;
    int budget_ = 0;
    Probe best_;
};

} // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, const Eigen::VectorXd& x0, const LbfgsConfig& config) {
    if (config.history < 0 || config.max_iterations < 0 || config.max_linesearch < 1) {
        throw ConfigError("invalid L-BFGS configuration");
    }
    if (!x0.allFinite()) throw ConfigError("lbfgs_minimize: x0 is not finite");

    LbfgsResult res;
    res.x = x0;
    res.gradient.resize(x0.size());
    res.value = objective(res.x, res.gradient);
    res.evaluations = 1;
    res.values.push_back(res.value);
    if (!std::isfinite(res.value) || !res.gradient.allFinite()) {
        res.status = LbfgsStatus::NonFiniteObjective;
        return res;
    }
    if (res.gradient.lpNorm<Eigen::Infinity>() < config.grad_tol) {
        res.status = LbfgsStatus::GradientTolerance;
        return res;
    }

    struct Pair {
        Eigen::VectorXd s, y;
        double rho;
    };
    std::deque<Pair> hist;
    StrongWolfe search(objective, config, res.evaluations);
    std::vector<double> alpha_buf;

    res.status = LbfgsStatus::MaxIterations;
    while (res.iterations < config.max_iterations) {
        // Two-loop recursion.
        Eigen::VectorXd q = -res.gradient;
        alpha_buf.assign(hist.size(), 0.0);
        for (std::size_t i = hist.size(); i-- > 0;) {
            alpha_buf[i] = hist[i].rho * hist[i].s.dot(q);
            q -= alpha_buf[i] * hist[i].y;
        }
        if (!hist.empty()) {
            const auto& last = hist.back();
            q *= last.s.dot(last.y) / last.y.squaredNorm();
        }
        for (std::size_t i = 0; i < hist.size(); ++i) {
            const double beta = hist[i].rho * hist[i].y.dot(q);
            q += (alpha_buf[i] - beta) * hist[i].s;
        }
        Eigen::VectorXd d = std::move(q);
        double dphi0 = res.gradient.dot(d);
        if (!(dphi0 < 0.0)) {
            hist.clear();
            d = -res.gradient;
            dphi0 = -res.gradient.squaredNorm();
        }
        const double alpha0 = hist.empty() ? std::min(1.0, 1.0 / res.gradient.lpNorm<1>()) : 1.0;

        auto outcome = search.run(res.x, res.value, dphi0, d, alpha0);
        if (!outcome.ok) {
            res.status = LbfgsStatus::LineSearchFailed;
            break;
        }

        Eigen::VectorXd s = outcome.point.alpha * d;
        Eigen::VectorXd y = outcome.point.g - res.gradient;
        const double sy = s.dot(y);
        if (config.history > 0 && sy > 1e-12 * y.squaredNorm() && sy > 0.0) {
            if (static_cast<int>(hist.size()) == config.history) hist.pop_front();
            hist.push_back({std::move(s), std::move(y), 1.0 / sy});
        }

        const double f_prev = res.value;
        res.x += outcome.point.alpha * d;
        res.value = outcome.point.f;
        res.gradient = std::move(outcome.point.g);
        ++res.iterations;
        res.values.push_back(res.value);

        if (res.gradient.lpNorm<Eigen::Infinity>() < config.grad_tol) {
            res.status = LbfgsStatus::GradientTolerance;
            break;
        }
        const double scale = std::max({std::abs(f_prev), std::abs(res.value), 1.0});
        if (f_prev - res.value <= config.value_tol * scale) {
            res.status = LbfgsStatus::ValueTolerance;
            break;
        }
    }
    return res;
}

} // namespace cpinn
