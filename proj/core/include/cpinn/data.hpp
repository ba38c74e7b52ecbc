#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cpinn {

/// Space-time domain [x_lo, x_hi] x [t_lo, t_hi]; only one spatial dimension is supported.
struct DomainSpec {
    int d = 1;
    double x_lo = 0.0;
    double x_hi = 1.0;
    double t_lo = 0.0;
    double t_hi = 1.0;

    void validate() const;
    bool on_boundary(double x, double t) const;
    bool strictly_interior(double x, double t) const;
};

struct Sample {
    double x = 0.0;
    double t = 0.0;
    double u = 0.0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct Point {
    double x = 0.0;
    double t = 0.0;
};

/// Measurements split into boundary/initial samples (D_B) and interior samples (D_I).
struct TrainingData {
    std::vector<Sample> boundary;
    std::vector<Sample> interior;

    std::size_t size() const { return boundary.size() + interior.size(); }
    bool empty() const { return size() == 0; }
    /// Boundary samples first, then interior samples.
    std::vector<Sample> all() const;

    /// Throws DataError if a boundary sample is off the boundary or an interior sample is not strictly interior.
    void validate(const DomainSpec& domain) const;
};

/// Collocation points; coordinates mirror the training samples.
struct CollocationSet {
    std::vector<Point> boundary;
    std::vector<Point> interior;

    std::size_t size() const { return boundary.size() + interior.size(); }
    std::vector<Point> all() const;

    static CollocationSet from_data(const TrainingData& data);
};

/// Field value and source term of a manufactured process.
struct FieldSample {
    double u = 0.0;
    double g = 0.0;
};

using Generator = std::function<FieldSample(double x, double t)>;

struct HeatConfig {
    double a2 = 1.0;
    double length = 3.14159265358979323846;
    double t_end = 10.0;
    int boundary_count = 60;
    int interior_count = 200;
    double noise_sd = 0.0;
    std::uint64_t seed = 0;

    DomainSpec domain() const;
};

/// u = exp(-t) sin(x/2), g = (a2/4 - 1) u, so u_t - a2 u_xx = g. Requires length == pi.
FieldSample manufactured_heat(const HeatConfig& config, double x, double t);

struct WaveConfig {
    double c2 = 1.0;
    double length = 5.2;
    double t_end = 2.0;
    double damping = 0.3;
    double angular_frequency = 4.0 * 3.14159265358979323846;
    double noise_sd = 0.0;
    std::uint64_t seed = 0;

    DomainSpec domain() const;
};

/// Damped standing wave u = exp(-damping t) sin(pi x / length) cos(angular_frequency t),
/// g = u_tt - c2 u_xx.
FieldSample synthetic_wave(const WaveConfig& config, double x, double t);

struct SampleCounts {
    int boundary = 60;
    int interior = 200;
};

/// Uniform random sampling. Boundary samples are split equally over
/// {t = t_lo}, {x = x_lo} and {x = x_hi}; Gaussian noise of sd `noise_sd` is added to u.
std::pair<TrainingData, CollocationSet> sample_dataset(const DomainSpec& domain, const Generator& generator,
                                                       SampleCounts counts, double noise_sd,
                                                       std::uint64_t seed);

/// Uniform nx x nt grid including the domain corners, x varying fastest.
std::vector<Point> uniform_grid(const DomainSpec& domain, int nx, int nt);

/// nx uniformly spaced points at a fixed time.
std::vector<Point> time_slice(const DomainSpec& domain, double t, int nx);

std::vector<Sample> evaluate(const Generator& generator, const std::vector<Point>& points);

/// Sensor id -> x position, plus the id whose readings are held out for testing.
struct SensorLayout {
    std::map<std::string, double> sensors;
    std::string held_out;

    void validate() const;
    static SensorLayout load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

struct IngestResult {
    TrainingData training;
    TrainingData held_out;
    DomainSpec domain;
};

/// Reads `x,t,u` rows. Rows of the held-out sensor go to `held_out`; the rest
/// are split into boundary (t = t_min or an extreme-x sensor) and interior.
IngestResult ingest_csv(const std::filesystem::path& path, const SensorLayout& layout);

/// Plain `x,t,u` reader without sensor semantics.
std::vector<Sample> read_samples_csv(const std::filesystem::path& path);

/// Writes `x,t,u` with round-trip precision and LF line endings.
void write_samples_csv(const std::filesystem::path& path, const std::vector<Sample>& samples);

/// Formats a double so that parsing it back yields the same value.
std::string format_exact(double v);

/// Samples of a generator on a sensor grid: every sensor x at `samples_per_sensor`
/// uniformly spaced times over [t_lo, t_hi].
std::vector<Sample> sensor_readings(const Generator& generator, const SensorLayout& layout,
                                    const DomainSpec& domain, int samples_per_sensor, double noise_sd,
                                    std::uint64_t seed);

} // namespace cpinn
