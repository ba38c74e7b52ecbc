#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cpinn/checkpoint.hpp"
#include "cpinn/data.hpp"
#include "cpinn/losses.hpp"
#include "cpinn/operators.hpp"
#include "cpinn/recurrent.hpp"
#include "cpinn/selection.hpp"
#include "cpinn/trainer.hpp"

namespace cpinn {

inline constexpr int kRunConfigVersion = 1;

enum class SourceKind { Heat, Wave, Csv };

std::string_view source_name(SourceKind kind);

struct WaveSource {
    WaveConfig wave;
    SensorLayout layout;
    int samples_per_sensor = 41;
};

struct CsvSource {
    std::filesystem::path path;
    std::filesystem::path layout;
};

/// Batch run description. Loaded from a JSON document; absent fields keep the
/// defaults of the selected data source (see heat_defaults / wave_defaults).
struct RunConfig {
    int version = kRunConfigVersion;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "cpinn-out";
    SourceKind source = SourceKind::Heat;
    HeatConfig heat;
    WaveSource wave;
    CsvSource csv;
    Library library;
    TrainConfig train;
    bool rp_enabled = true;
    RpConfig rp;
    int grid_nx = 100;
    int grid_nt = 100;
    std::vector<double> snapshots;
    int parallel = 1;

    static RunConfig heat_defaults();
    static RunConfig wave_defaults();

    /// Relative csv paths resolve against `base_dir`. Throws ConfigError.
    static RunConfig from_json(std::string_view text, const std::filesystem::path& base_dir = {});
    static RunConfig load(const std::filesystem::path& path);

    /// Canonical JSON of every field.
    std::string to_json() const;
    /// FNV-1a of the canonical JSON without output_dir and parallel, as 16 hex digits.
    std::string hash() const;
    void validate() const;
    /// Training configuration with the run seed applied.
    TrainConfig train_config() const;
};

/// Everything a discovery run consumes.
struct PreparedData {
    DomainSpec domain;
    TrainingData train;
    CollocationSet colloc;
    /// Held-out sensor rows, or the uniform test grid for heat data.
    std::vector<Sample> test;
    /// Dense grid of the generating field; empty for CSV sources.
    std::vector<Sample> grid;
    std::optional<Generator> truth;
    std::vector<double> sensor_positions;
    std::vector<Sample> measurements;
    std::string description;
};

/// Builds the data set. Wave data pass through the CSV ingestion path; the sensor
/// CSV and layout are written to `work_dir`.
PreparedData prepare_data(const RunConfig& config, const std::filesystem::path& work_dir);

/// Recurrent-phase configuration for a data set (dt defaults to the sensor sample spacing).
RpConfig rp_config_for(const RunConfig& config, const PreparedData& data);

struct CandidateRun {
    CandidateResult result;
    TrainerState state;
    std::optional<RpModel> rp;
};

/// Trains one combination, runs the recurrent phase when enabled and computes every metric.
CandidateRun run_candidate(const Combination& comb, const PreparedData& data, const HybridInputs& inputs,
                           const RunConfig& config);

CandidateCheckpoint make_checkpoint(const CandidateRun& run, const PreparedData& data, const RunConfig& config);

struct GenerateOutcome {
    std::filesystem::path train_csv;
    std::filesystem::path test_csv;
    std::filesystem::path manifest;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
};

/// Writes data/train.csv, data/test.csv and data/manifest.json under the output directory.
GenerateOutcome cmd_generate_data(const RunConfig& config);

struct DiscoverOptions {
    /// Reuse per-combination checkpoints whose config hash matches.
    bool resume = true;
    /// Stop after this many newly trained combinations (negative: no limit).
    int max_new = -1;
    std::function<void(const std::string&)> log;
};

struct DiscoverOutcome {
    DiscoveryReport report;
    int trained = 0;
    int resumed = 0;
    /// Outer-iteration logs of every candidate trained in this call, keyed by mask.
    std::vector<std::pair<std::uint32_t, std::vector<OuterRecord>>> histories;
    bool complete = true;
};

/// Trains all 2^p - 1 combinations and writes candidates.csv, summary.md, aic.svg,
/// winner.json and per-combination checkpoints. Throws TrainingFailure when every candidate aborts.
DiscoverOutcome cmd_discover(const RunConfig& config, const DiscoverOptions& options = {});

struct PredictRow {
    double x = 0.0;
    double t = 0.0;
    double u_hat = 0.0;
    std::string provenance;
};

/// Predictions of a candidate checkpoint at the given points (recurrent model when present).
std::vector<PredictRow> predict_points(const CandidateCheckpoint& ckpt, const std::vector<Point>& points);

void write_predictions_csv(const std::filesystem::path& path, const std::vector<PredictRow>& rows);

struct PredictRequest {
    std::filesystem::path checkpoint;
    /// Points to evaluate; when empty, a uniform grid over the checkpoint domain.
    std::optional<std::filesystem::path> points_csv;
    int nx = 100;
    int nt = 100;
    std::vector<double> snapshots;
    int snapshot_nx = 100;
    std::filesystem::path out_dir;
};

/// Writes predictions.csv plus snapshot_t<t>.csv per snapshot time. Returns the number of grid rows.
std::size_t cmd_predict(const PredictRequest& request);

/// Rebuilds candidates.csv, summary.md and aic.svg from the checkpoints of a finished run.
DiscoveryReport cmd_report(const RunConfig& config);

std::string mask_tag(std::uint32_t mask);

} // namespace cpinn
