#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cpinn/data.hpp"
#include "cpinn/network.hpp"
#include "cpinn/operators.hpp"

namespace cpinn {

/// Inputs of the information criterion: p active operators, n measurements, fit variance.
struct AicInput {
    int p = 1;
    std::size_t n = 1;
    double sigma2_hat = 1.0;
};

/// Lower clamp applied to the fit variance before taking its logarithm.
inline constexpr double kSigma2Floor = 1e-30;

/// 2p + n ln(sigma2_hat). Throws DomainError for sigma2_hat <= 0, p < 1 or n < 1.
double aic(const AicInput& input);

double clamp_sigma2(double sigma2);

/// Mean squared fitting error of the solution network over D (equals MSE_DN).
double sigma2_from_fit(const MlpParams& u, const TrainingData& data);

double rmse(std::span<const double> pred, std::span<const double> truth);

/// Pearson correlation. Throws DomainError if either argument has zero variance.
double cc(std::span<const double> pred, std::span<const double> truth);

struct Metrics {
    double rmse = 0.0;
    double cc = 0.0;
};

/// rmse and cc together; cc is NaN when undefined.
Metrics compare(std::span<const double> pred, std::span<const double> truth);

struct SnapshotMetrics {
    double t = 0.0;
    Metrics metrics;
};

struct CandidateResult {
    Combination combination;  // lambda holds the trained coefficients
    std::size_t n = 0;
    double sigma2_hat = 0.0;
    double aic = 0.0;
    Metrics train;
    /// Held-out data (held-out sensor, or the test grid for synthetic heat data).
    Metrics test;
    /// Test metrics of the solution network before the recurrent phase.
    Metrics test_before_rp;
    /// Dense grid against the generating field; NaN when no ground truth exists.
    Metrics grid;
    std::vector<SnapshotMetrics> snapshots;
    /// RMSE of the residual over the collocation points.
    double residual_rmse = 0.0;
    int outer_iterations = 0;
    bool converged = false;
    bool aborted = false;
    bool rp_used = false;
    std::string diagnostic;
    std::string checkpoint;

    int p() const { return combination.term_count(); }
    double lambda_norm() const;
};

struct DiscoveryReport {
    /// Non-aborted candidates, ascending AIC (ties: smaller p, then smaller mask).
    std::vector<CandidateResult> ranked;
    std::vector<CandidateResult> aborted;
    CandidateResult winner;
    /// Term count -> index into `ranked` of the best candidate of that size.
    std::map<int, std::size_t> best_by_terms;
};

/// Strict ordering used for ranking.
bool ranks_before(const CandidateResult& a, const CandidateResult& b);

/// Throws ConfigError for an empty list and TrainingFailure when every candidate aborted.
DiscoveryReport select(std::vector<CandidateResult> results);

/// Fixed scientific formatting shared by every report artifact.
std::string format_number(double v);

void write_candidates_csv(const std::filesystem::path& path, const DiscoveryReport& report);

struct ReportContext {
    std::string title = "PDE structure discovery";
    std::string data_description;
    std::string library;
};

void write_summary_markdown(const std::filesystem::path& path, const DiscoveryReport& report,
                            const ReportContext& context);

/// Bar chart of the best AIC per term count.
void write_aic_svg(const std::filesystem::path& path, const DiscoveryReport& report);

} // namespace cpinn
