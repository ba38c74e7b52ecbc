#include "cpinn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cpinn/error.hpp"

namespace cpinn {

namespace {

bool same_coordinate(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

bool parse_double(std::string_view text, double& out) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc() && res.ptr == text.data() + text.size() && std::isfinite(out);
}

struct CsvRow {
    std::size_t line;
    Sample sample;
};

std::vector<CsvRow> read_rows(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string line;
    std::size_t lineno = 0;
    std::vector<CsvRow> rows;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header_seen) {
            if (line != "x,t,u") throw IngestError(lineno, "expected header 'x,t,u', got '" + line + "'");
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        std::string_view view(line);
        std::array<double, 3> vals{};
        std::size_t field = 0;
        while (true) {
            const auto comma = view.find(',');
            const std::string_view cell = view.substr(0, comma);
            if (field >= 3) throw IngestError(lineno, "too many fields");
            if (!parse_double(cell, vals[field])) {
                throw IngestError(lineno, "field " + std::to_string(field + 1) + " is not a finite number: '" +
                                              std::string(cell) + "'");
            }
            ++field;
            if (comma == std::string_view::npos) break;
            view.remove_prefix(comma + 1);
        }
        if (field != 3) throw IngestError(lineno, "expected 3 fields, got " + std::to_string(field));
        rows.push_back({lineno, {vals[0], vals[1], vals[2]}});
    }
    if (!header_seen) throw IngestError(1, "empty file, expected header 'x,t,u'");
    return rows;
}

} // namespace

void DomainSpec::validate() const {
    if (d != 1) throw ConfigError("only one spatial dimension is supported");
    if (!(x_lo < x_hi)) throw ConfigError("domain requires x_lo < x_hi");
    if (!(t_lo < t_hi)) throw ConfigError("domain requires t_lo < t_hi");
}

bool DomainSpec::on_boundary(double x, double t) const {
    const bool in_range = x >= x_lo && x <= x_hi && t >= t_lo && t <= t_hi;
    return in_range && (same_coordinate(x, x_lo) || same_coordinate(x, x_hi) || same_coordinate(t, t_lo));
}

bool DomainSpec::strictly_interior(double x, double t) const {
    return x > x_lo && x < x_hi && t > t_lo && t <= t_hi && !on_boundary(x, t);
}

std::vector<Sample> TrainingData::all() const {
    std::vector<Sample> out(boundary);
    out.insert(out.end(), interior.begin(), interior.end());
    return out;
}

void TrainingData::validate(const DomainSpec& domain) const {
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        if (!domain.on_boundary(boundary[i].x, boundary[i].t)) {
            throw DataError("boundary sample " + std::to_string(i) + " is not on the boundary or initial line");
        }
    }
    for (std::size_t i = 0; i < interior.size(); ++i) {
        if (!domain.strictly_interior(interior[i].x, interior[i].t)) {
            throw DataError("interior sample " + std::to_string(i) + " is not strictly inside the domain");
        }
    }
}

std::vector<Point> CollocationSet::all() const {
    std::vector<Point> out(boundary);
    out.insert(out.end(), interior.begin(), interior.end());
    return out;
}

CollocationSet CollocationSet::from_data(const TrainingData& data) {
    CollocationSet c;
    for (const auto& s : data.boundary) c.boundary.push_back({s.x, s.t});
    for (const auto& s : data.interior) c.interior.push_back({s.x, s.t});
    return c;
}

DomainSpec HeatConfig::domain() const { return {1, 0.0, length, 0.0, t_end}; }

FieldSample manufactured_heat(const HeatConfig& config, double x, double t) {
    if (std::abs(config.length - std::numbers::pi) > 1e-12) {
        throw ConfigError("manufactured heat solution requires length = pi to satisfy the Neumann condition");
    }
    if (!(config.a2 > 0.0)) throw ConfigError("heat coefficient a2 must be positive");
    const double u = std::exp(-t) * std::sin(0.5 * x);
    return {u, (0.25 * config.a2 - 1.0) * u};
}

DomainSpec WaveConfig::domain() const { return {1, 0.0, length, 0.0, t_end}; }

FieldSample synthetic_wave(const WaveConfig& config, double x, double t) {
    const double k = std::numbers::pi / config.length;
    const double w = config.angular_frequency;
    const double gam = config.damping;
    const double envelope = std::exp(-gam * t) * std::sin(k * x);
    const double c = std::cos(w * t);
    const double s = std::sin(w * t);
    const double u = envelope * c;
    const double u_tt = envelope * ((gam * gam - w * w) * c + 2.0 * gam * w * s);
    const double u_xx = -k * k * u;
    return {u, u_tt - config.c2 * u_xx};
}

std::pair<TrainingData, CollocationSet> sample_dataset(const DomainSpec& domain, const Generator& generator,
                                                       SampleCounts counts, double noise_sd,
                                                       std::uint64_t seed) {
    domain.validate();
    if (counts.boundary < 1 || counts.interior < 1) throw ConfigError("sample counts must be >= 1");
    if (noise_sd < 0.0) throw ConfigError("noise_sd must be >= 0");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(domain.x_lo, domain.x_hi);
    std::uniform_real_distribution<double> ut(domain.t_lo, domain.t_hi);
    std::normal_distribution<double> noise(0.0, 1.0);

    auto draw_t_open = [&] {
        double t;
        do {
            t = ut(rng);
        } while (t <= domain.t_lo);
        return t;
    };

    TrainingData data;
    const int per = counts.boundary / 3;
    const int rem = counts.boundary % 3;
    const int sizes[3] = {per + (rem > 0), per + (rem > 1), per};
    for (int i = 0; i < sizes[0]; ++i) data.boundary.push_back({ux(rng), domain.t_lo, 0.0});
    for (int i = 0; i < sizes[1]; ++i) data.boundary.push_back({domain.x_lo, draw_t_open(), 0.0});
    for (int i = 0; i < sizes[2]; ++i) data.boundary.push_back({domain.x_hi, draw_t_open(), 0.0});
    while (static_cast<int>(data.interior.size()) < counts.interior) {
        const double x = ux(rng);
        const double t = ut(rng);
        if (domain.strictly_interior(x, t)) data.interior.push_back({x, t, 0.0});
    }
    for (auto* set : {&data.boundary, &data.interior}) {
        for (auto& s : *set) {
            s.u = generator(s.x, s.t).u;
            if (noise_sd > 0.0) s.u += noise_sd * noise(rng);
        }
    }
    data.validate(domain);
    return {data, CollocationSet::from_data(data)};
}

std::vector<Point> uniform_grid(const DomainSpec& domain, int nx, int nt) {
    if (nx < 2 || nt < 2) throw ConfigError("grid needs at least 2 points per axis");
    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(nx) * nt);
    for (int j = 0; j < nt; ++j) {
        const double t = std::lerp(domain.t_lo, domain.t_hi, static_cast<double>(j) / (nt - 1));
        for (int i = 0; i < nx; ++i) {
            pts.push_back({std::lerp(domain.x_lo, domain.x_hi, static_cast<double>(i) / (nx - 1)), t});
        }
    }
    return pts;
}

std::vector<Point> time_slice(const DomainSpec& domain, double t, int nx) {
    if (nx < 2) throw ConfigError("slice needs at least 2 points");
    std::vector<Point> pts;
    for (int i = 0; i < nx; ++i) pts.push_back({std::lerp(domain.x_lo, domain.x_hi, static_cast<double>(i) / (nx - 1)), t});
    return pts;
}

std::vector<Sample> evaluate(const Generator& generator, const std::vector<Point>& points) {
    std::vector<Sample> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back({p.x, p.t, generator(p.x, p.t).u});
    return out;
}

void SensorLayout::validate() const {
    if (sensors.empty()) throw ConfigError("sensor layout has no sensors");
    if (!held_out.empty() && !sensors.contains(held_out)) {
        throw ConfigError("held-out sensor '" + held_out + "' is not in the layout");
    }
    if (sensors.size() - (held_out.empty() ? 0 : 1) < 2) {
        throw ConfigError("sensor layout needs at least two training sensors");
    }
    for (auto a = sensors.begin(); a != sensors.end(); ++a) {
        for (auto b = std::next(a); b != sensors.end(); ++b) {
            if (same_coordinate(a->second, b->second)) {
                throw ConfigError("sensors '" + a->first + "' and '" + b->first + "' share a position");
            }
        }
    }
}

SensorLayout SensorLayout::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open sensor layout '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
        SensorLayout layout;
        for (const auto& [id, x] : j.at("sensors").items()) layout.sensors[id] = x.get<double>();
        layout.held_out = j.value("held_out", std::string{});
        layout.validate();
        return layout;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid sensor layout '" + path.string() + "': " + e.what());
    }
}

void SensorLayout::save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["sensors"] = nlohmann::json::object();
    for (const auto& [id, x] : sensors) j["sensors"][id] = x;
    j["held_out"] = held_out;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

IngestResult ingest_csv(const std::filesystem::path& path, const SensorLayout& layout) {
    layout.validate();
    const auto rows = read_rows(path);

    double x_min = std::numeric_limits<double>::infinity();
    double x_max = -x_min;
    for (const auto& [id, x] : layout.sensors) {
        if (id == layout.held_out) continue;
        x_min = std::min(x_min, x);
        x_max = std::max(x_max, x);
    }

    struct Tagged {
        Sample s;
        bool held;
    };
    std::vector<Tagged> tagged;
    tagged.reserve(rows.size());
    double t_min = std::numeric_limits<double>::infinity();
    double t_max = -t_min;
    for (const auto& row : rows) {
        const std::string* sensor = nullptr;
        for (const auto& [id, x] : layout.sensors) {
            if (std::abs(row.sample.x - x) <= 1e-9 * std::max(1.0, std::abs(x))) {
                sensor = &id;
                break;
            }
        }
        if (!sensor) {
            throw ConfigError("line " + std::to_string(row.line) + ": x = " + format_exact(row.sample.x) +
                              " does not match any sensor position");
        }
        const bool held = *sensor == layout.held_out;
        Sample s = row.sample;
        s.x = layout.sensors.at(*sensor);
        tagged.push_back({s, held});
        if (!held) {
            t_min = std::min(t_min, s.t);
            t_max = std::max(t_max, s.t);
        }
    }
    if (!(t_min < t_max)) throw DataError("training rows span no time interval");

    IngestResult res;
    res.domain = {1, x_min, x_max, t_min, t_max};
    for (const auto& [s, held] : tagged) {
        const bool boundary = s.t == t_min || s.x == x_min || s.x == x_max;
        TrainingData& dst = held ? res.held_out : res.training;
        (boundary ? dst.boundary : dst.interior).push_back(s);
    }
    res.training.validate(res.domain);
    return res;
}

std::vector<Sample> read_samples_csv(const std::filesystem::path& path) {
    std::vector<Sample> out;
    for (const auto& r : read_rows(path)) out.push_back(r.sample);
    return out;
}

std::string format_exact(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_samples_csv(const std::filesystem::path& path, const std::vector<Sample>& samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "x,t,u\n";
    for (const auto& s : samples) out << format_exact(s.x) << ',' << format_exact(s.t) << ',' << format_exact(s.u) << '\n';
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::vector<Sample> sensor_readings(const Generator& generator, const SensorLayout& layout,
                                    const DomainSpec& domain, int samples_per_sensor, double noise_sd,
                                    std::uint64_t seed) {
    layout.validate();
    if (samples_per_sensor < 2) throw ConfigError("need at least two samples per sensor");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<Sample> out;
    for (const auto& [id, x] : layout.sensors) {
        for (int j = 0; j < samples_per_sensor; ++j) {
            const double t = std::lerp(domain.t_lo, domain.t_hi, static_cast<double>(j) / (samples_per_sensor - 1));
            double u = generator(x, t).u;
            if (noise_sd > 0.0) u += noise_sd * noise(rng);
            out.push_back({x, t, u});
        }
    }
    return out;
}

} // namespace cpinn
