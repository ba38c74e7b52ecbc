#include "cpinn/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cpinn/error.hpp"
#include "cpinn/losses.hpp"

namespace cpinn {

double aic(const AicInput& input) {
    if (input.p < 1) throw DomainError("AIC requires p >= 1");
    if (input.n < 1) throw DomainError("AIC requires n >= 1");
    if (!(input.sigma2_hat > 0.0)) throw DomainError("AIC requires a positive fit variance");
    return 2.0 * input.p + static_cast<double>(input.n) * std::log(input.sigma2_hat);
}

double clamp_sigma2(double sigma2) { return std::max(sigma2, kSigma2Floor); }

double sigma2_from_fit(const MlpParams& u, const TrainingData& data) { return mse_dn(u, data); }

double rmse(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size() || pred.empty()) throw DomainError("rmse needs equal, non-zero lengths");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(pred.size()));
}

double cc(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size() || pred.empty()) throw DomainError("cc needs equal, non-zero lengths");
    const double n = static_cast<double>(pred.size());
    double mp = 0.0, mt = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        mp += pred[i];
        mt += truth[i];
    }
    mp /= n;
    mt /= n;
    double spp = 0.0, stt = 0.0, spt = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double a = pred[i] - mp;
        const double b = truth[i] - mt;
        spp += a * a;
        stt += b * b;
        spt += a * b;
    }
    if (!(spp > 0.0) || !(stt > 0.0)) throw DomainError("cc is undefined for a constant argument");
    return spt / std::sqrt(spp * stt);
}

Metrics compare(std::span<const double> pred, std::span<const double> truth) {
    Metrics m;
    m.rmse = rmse(pred, truth);
    try {
        m.cc = cc(pred, truth);
    } catch (const DomainError&) {
        m.cc = std::numeric_limits<double>::quiet_NaN();
    }
    return m;
}

double CandidateResult::lambda_norm() const {
    double s = 0.0;
    for (double v : combination.lambda) s += v * v;
    return std::sqrt(s);
}

bool ranks_before(const CandidateResult& a, const CandidateResult& b) {
    if (a.aic != b.aic) return a.aic < b.aic;
    if (a.p() != b.p()) return a.p() < b.p();
    return a.combination.mask < b.combination.mask;
}

DiscoveryReport select(std::vector<CandidateResult> results) {
    if (results.empty()) throw ConfigError("no candidates to select from");
    DiscoveryReport report;
    for (auto& r : results) {
        if (r.aborted || !std::isfinite(r.aic)) {
            report.aborted.push_back(std::move(r));
        } else {
            report.ranked.push_back(std::move(r));
        }
    }
    if (report.ranked.empty()) throw TrainingFailure("every candidate combination aborted");
    std::stable_sort(report.ranked.begin(), report.ranked.end(), ranks_before);
    std::stable_sort(report.aborted.begin(), report.aborted.end(),
                     [](const auto& a, const auto& b) { return a.combination.mask < b.combination.mask; });
    report.winner = report.ranked.front();
    for (std::size_t i = 0; i < report.ranked.size(); ++i) {
        report.best_by_terms.try_emplace(report.ranked[i].p(), i);
    }
    return report;
}

} // namespace cpinn
