#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpinn/data.hpp"
#include "cpinn/network.hpp"
#include "cpinn/operators.hpp"
#include "cpinn/optim.hpp"

namespace cpinn {

struct RpConfig {
    int lags = 1;
    double dt = 0.1;
    /// x positions of hard sensors; lagged values there come from measurements when sampled.
    std::vector<double> sensor_positions;
    /// L-BFGS iteration budget for the recurrent phase (0 leaves the model untouched).
    int iterations = 200;
    LbfgsConfig lbfgs;

    void validate(const DomainSpec& domain) const;
};

enum class LagSource : char { Measurement = 'M', Prediction = 'P' };

/// Sensor readings indexed by (x, t) with a small absolute matching tolerance.
class MeasurementTable {
public:
    void add(double x, double t, double u);
    std::optional<double> find(double x, double t) const;
    std::size_t size() const;

    /// Samples of `data` whose x coincides with one of `sensor_positions`.
    static MeasurementTable from_samples(const std::vector<Sample>& samples,
                                         const std::vector<double>& sensor_positions);

private:
    std::map<double, std::map<double, double>> rows_;
};

struct ProvenanceRecord {
    double x = 0.0;
    double t = 0.0;
    std::vector<LagSource> sources;
};

/// Recurrent-prediction network: inputs (x, t, u(x, t - dt), ..., u(x, t - lags*dt)).
///
/// `base` is the trained solution network the model was warm-started from; it
/// supplies prediction-fed lag values and answers for times before the lag
/// history exists.
struct RpModel {
    MlpParams params;
    MlpParams base;
    int lags = 1;
    double dt = 0.1;
    double t_lo = 0.0;
    std::vector<ProvenanceRecord> provenance;
};

/// Copies every layer of `netu`, widening the first layer with zero columns for the lag inputs.
RpModel warm_start(const MlpParams& netu, const RpConfig& config, double t_lo = 0.0);

struct DelayedInputs {
    Eigen::VectorXd values;
    std::vector<LagSource> sources;
};

/// Lag j uses the measurement at (x, t - j dt) when one exists, else the base prediction there.
/// Throws ConfigError when t - lags*dt falls before the model's t_lo.
DelayedInputs delayed_inputs(double x, double t, const RpConfig& config, const MeasurementTable& measurements,
                             const RpModel& model);

/// Whether (x, t) has a full lag history.
bool has_history(const RpModel& model, double t);

struct RpPrediction {
    double value = 0.0;
    /// One character per lag ('M' or 'P'); "-" when the base network answered.
    std::string provenance;
};

RpPrediction rp_predict(const RpModel& model, const RpConfig& config, const MeasurementTable& measurements,
                        double x, double t);

std::vector<RpPrediction> rp_predict(const RpModel& model, const RpConfig& config,
                                     const MeasurementTable& measurements, const std::vector<Point>& points);

/// Hybrid losses of the recurrent model; residuals[i] belongs to collocation point i.
struct RpFit {
    double mse_dn = 0.0;
    double mse_pn = 0.0;
    std::vector<double> predictions;
    std::vector<double> residuals;
};

RpFit evaluate_rp(const RpModel& model, const RpConfig& config, const MeasurementTable& measurements,
                  const TrainingData& data, const CollocationSet& colloc, const Combination& comb,
                  const MlpParams& netg);

/// L-BFGS on MSE_DN + MSE_PN over the recurrent parameters. Jets differentiate the
/// (x, t) inputs only; lag inputs are constants per evaluation. Every lag lookup is
/// appended to model.provenance.
RpModel train_rp(RpModel model, const TrainingData& data, const CollocationSet& colloc, const Combination& comb,
                 const MlpParams& netg, const RpConfig& config, const MeasurementTable& measurements);

} // namespace cpinn
