#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <cpinn/data.hpp>
#include <cpinn/error.hpp>

using namespace cpinn;
namespace fs = std::filesystem;

#ifndef CPINN_FIXTURE_DIR
#define CPINN_FIXTURE_DIR "fixtures"
#endif

namespace {

const fs::path kFixtures{CPINN_FIXTURE_DIR};

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("cpinn_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Central differences of a generator's u in extended step sizes.
struct Fd {
    Generator g;
    double h = 1e-4;
    double u(double x, double t) const { return g(x, t).u; }
    double dt(double x, double t) const { return (u(x, t + h) - u(x, t - h)) / (2 * h); }
    double dxx(double x, double t) const { return (u(x + h, t) - 2 * u(x, t) + u(x - h, t)) / (h * h); }
    double dtt(double x, double t) const { return (u(x, t + h) - 2 * u(x, t) + u(x, t - h)) / (h * h); }
};

} // namespace

TEST(Heat, InitialAndBoundaryConditions) {
    HeatConfig c;
    for (double x : {0.0, 0.5, 1.0, 2.0, std::numbers::pi}) EXPECT_DOUBLE_EQ(manufactured_heat(c, x, 0.0).u, std::sin(x / 2));
    for (double t : {0.0, 1.0, 5.0}) {
        EXPECT_EQ(manufactured_heat(c, 0.0, t).u, 0.0);
        // u_x(pi, t) = exp(-t) cos(pi/2) / 2
        EXPECT_NEAR(std::exp(-t) * std::cos(std::numbers::pi / 2) / 2, 0.0, 1e-16);
    }
}

TEST(Heat, ClosedFormResidualVanishes) {
    HeatConfig c;
    c.a2 = 0.7;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> x(0, std::numbers::pi), t(0, 10);
    for (int i = 0; i < 1000; ++i) {
        const double xi = x(rng), ti = t(rng);
        const FieldSample s = manufactured_heat(c, xi, ti);
        // Symbolic: u_t = -u, u_xx = -u/4.
        const double ut = -s.u, uxx = -s.u / 4;
        EXPECT_NEAR(ut - c.a2 * uxx - s.g, 0.0, 1e-12);
    }
}

TEST(Heat, FiniteDifferenceResidual) {
    HeatConfig c;
    Fd fd{[c](double x, double t) { return manufactured_heat(c, x, t); }};
    for (double x : {0.3, 1.1, 2.9})
        for (double t : {0.2, 1.0, 4.0}) EXPECT_NEAR(fd.dt(x, t) - c.a2 * fd.dxx(x, t) - fd.g(x, t).g, 0.0, 1e-6);
}

TEST(Heat, RejectsLengthOtherThanPi) {
    HeatConfig c;
    c.length = 3.0;
    EXPECT_THROW(manufactured_heat(c, 0.5, 0.5), ConfigError);
}

TEST(Wave, ConditionsAndResidual) {
    WaveConfig c;
    c.c2 = 1.7;
    for (double t : {0.0, 0.4, 1.9}) {
        EXPECT_NEAR(synthetic_wave(c, 0.0, t).u, 0.0, 1e-15);
        EXPECT_NEAR(synthetic_wave(c, 5.2, t).u, 0.0, 1e-15);
    }
    EXPECT_DOUBLE_EQ(synthetic_wave(c, 1.3, 0.0).u, std::sin(std::numbers::pi * 1.3 / 5.2));
    Fd fd{[c](double x, double t) { return synthetic_wave(c, x, t); }, 1e-4};
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> x(0.1, 5.1), t(0.1, 1.9);
    for (int i = 0; i < 50; ++i) {
        const double xi = x(rng), ti = t(rng);
        // FD noise dominates; the analytic identity is checked to 1e-10 below.
        EXPECT_NEAR(fd.dtt(xi, ti) - c.c2 * fd.dxx(xi, ti) - synthetic_wave(c, xi, ti).g, 0.0, 2e-4);
    }
}

TEST(Wave, SymbolicResidual) {
    WaveConfig c;
    c.c2 = 0.8;
    const double k = std::numbers::pi / c.length, w = c.angular_frequency, d = c.damping;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> x(0, 5.2), t(0, 2);
    for (int i = 0; i < 200; ++i) {
        const double xi = x(rng), ti = t(rng);
        const double s = std::sin(k * xi), e = std::exp(-d * ti);
        const double utt = s * e * ((d * d - w * w) * std::cos(w * ti) + 2 * d * w * std::sin(w * ti));
        const double uxx = -k * k * e * s * std::cos(w * ti);
        EXPECT_NEAR(utt - c.c2 * uxx - synthetic_wave(c, xi, ti).g, 0.0, 1e-10);
    }
}

TEST(Sampling, CountsAndPartition) {
    HeatConfig c;
    const DomainSpec dom = c.domain();
    Generator g = [c](double x, double t) { return manufactured_heat(c, x, t); };
    const auto [data, colloc] = sample_dataset(dom, g, {30, 100}, 0.0, 5);
    EXPECT_EQ(data.size(), 130u);
    EXPECT_EQ(colloc.size(), 130u);
    EXPECT_EQ(data.boundary.size(), 30u);
    EXPECT_NO_THROW(data.validate(dom));
    for (const auto& s : data.boundary) EXPECT_TRUE(dom.on_boundary(s.x, s.t));
    for (const auto& s : data.interior) EXPECT_TRUE(dom.strictly_interior(s.x, s.t));
    for (std::size_t i = 0; i < data.boundary.size(); ++i) {
        EXPECT_EQ(colloc.boundary[i].x, data.boundary[i].x);
        EXPECT_EQ(colloc.boundary[i].t, data.boundary[i].t);
    }
    // Noise-free values are exact generator output.
    for (const auto& s : data.all()) EXPECT_EQ(s.u, g(s.x, s.t).u);
    int t0 = 0, xlo = 0, xhi = 0;
    for (const auto& s : data.boundary) {
        t0 += s.t == dom.t_lo;
        xlo += s.x == dom.x_lo && s.t != dom.t_lo;
        xhi += s.x == dom.x_hi && s.t != dom.t_lo;
    }
    EXPECT_EQ(t0, 10);
    EXPECT_EQ(xlo, 10);
    EXPECT_EQ(xhi, 10);
}

TEST(Sampling, Deterministic) {
    HeatConfig c;
    Generator g = [c](double x, double t) { return manufactured_heat(c, x, t); };
    const auto a = sample_dataset(c.domain(), g, {60, 200}, 0.01, 9).first.all();
    const auto b = sample_dataset(c.domain(), g, {60, 200}, 0.01, 9).first.all();
    EXPECT_EQ(a, b);
}

TEST(Sampling, NoiseStandardDeviation) {
    HeatConfig c;
    Generator g = [c](double x, double t) { return manufactured_heat(c, x, t); };
    const double sd = 0.05;
    const auto data = sample_dataset(c.domain(), g, {3000, 7000}, sd, 11).first.all();
    double s = 0, s2 = 0;
    for (const auto& d : data) {
        const double e = d.u - g(d.x, d.t).u;
        s += e;
        s2 += e * e;
    }
    const double n = static_cast<double>(data.size());
    const double est = std::sqrt(s2 / n - (s / n) * (s / n));
    EXPECT_NEAR(est, sd, 0.05 * sd);
}

TEST(Grid, UniformGrid) {
    const DomainSpec dom{1, 0.0, std::numbers::pi, 0.0, 10.0};
    const auto g = uniform_grid(dom, 100, 100);
    ASSERT_EQ(g.size(), 10000u);
    EXPECT_EQ(g.front().x, 0.0);
    EXPECT_EQ(g.back().x, std::numbers::pi);
    EXPECT_EQ(g.back().t, 10.0);
    EXPECT_EQ(g[1].t, 0.0);
    const auto s = time_slice(dom, 3.0, 50);
    ASSERT_EQ(s.size(), 50u);
    for (const auto& p : s) EXPECT_EQ(p.t, 3.0);
}

TEST(Ingest, HoldsOutSensor) {
    const auto layout = SensorLayout::load(kFixtures / "four_sensors_layout.json");
    EXPECT_EQ(layout.held_out, "4");
    const auto r = ingest_csv(kFixtures / "four_sensors.csv", layout);
    EXPECT_EQ(r.held_out.size(), 5u);
    for (const auto& s : r.held_out.all()) EXPECT_EQ(s.x, 2.5);
    EXPECT_EQ(r.training.size(), 15u);
    for (const auto& s : r.training.all()) EXPECT_NE(s.x, 2.5);
    EXPECT_EQ(r.domain.x_lo, 0.0);
    EXPECT_EQ(r.domain.x_hi, 3.5);
    // t = 0 rows plus every row of the extreme sensors.
    EXPECT_EQ(r.training.boundary.size(), 11u);
    EXPECT_EQ(r.training.interior.size(), 4u);
}

TEST(Ingest, MalformedRowNamesLine) {
    const auto layout = SensorLayout::load(kFixtures / "four_sensors_layout.json");
    try {
        ingest_csv(kFixtures / "bad_line7.csv", layout);
        FAIL() << "expected an ingestion error";
    } catch (const IngestError& e) {
        EXPECT_EQ(e.line(), 7u);
        EXPECT_NE(std::string(e.what()).find('7'), std::string::npos);
    }
}

TEST(Ingest, UnknownSensorPosition) {
    const auto layout = SensorLayout::load(kFixtures / "four_sensors_layout.json");
    EXPECT_THROW(ingest_csv(kFixtures / "unknown_sensor.csv", layout), ConfigError);
}

TEST(Ingest, RoundTripOfSyntheticReadings) {
    const auto dir = temp_dir("roundtrip");
    WaveConfig c;
    SensorLayout layout;
    layout.sensors = {{"a", 0.0}, {"b", 1.3}, {"c", 5.2}, {"d", 2.6}};
    layout.held_out = "d";
    Generator g = [c](double x, double t) { return synthetic_wave(c, x, t); };
    const auto readings = sensor_readings(g, layout, c.domain(), 21, 0.0, 1);
    write_samples_csv(dir / "s.csv", readings);
    layout.save(dir / "layout.json");
    EXPECT_EQ(read_samples_csv(dir / "s.csv"), readings);
    const auto r = ingest_csv(dir / "s.csv", SensorLayout::load(dir / "layout.json"));
    ASSERT_EQ(r.training.size() + r.held_out.size(), readings.size());
    for (const auto& s : r.held_out.all()) EXPECT_NEAR(s.u, g(s.x, s.t).u, 1e-12);
    for (const auto& s : r.training.all()) EXPECT_NEAR(s.u, g(s.x, s.t).u, 1e-12);
}

TEST(Csv, ExactFormatting) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123}) {
        EXPECT_EQ(std::stod(format_exact(v)), v);
    }
}

TEST(Layout, ValidateRequiresKnownHeldOut) {
    SensorLayout l;
    l.sensors = {{"1", 0.0}};
    l.held_out = "2";
    EXPECT_THROW(l.validate(), ConfigError);
}
