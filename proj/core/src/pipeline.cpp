#include "cpinn/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cpinn/error.hpp"
#include "cpinn/network.hpp"

namespace cpinn {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDataStream = 100;

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("unknown key '" + key + "' in " + std::string(where));
        }
    }
}

template <class T>
void take(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

/// `null` stands for an unbounded tolerance.
void take_tol(const json& j, const char* key, double& out) {
    if (auto it = j.find(key); it != j.end()) {
        out = it->is_null() ? std::numeric_limits<double>::infinity() : it->get<double>();
    }
}

json tol_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

SourceKind parse_source(const std::string& s) {
    if (s == "heat") return SourceKind::Heat;
    if (s == "wave") return SourceKind::Wave;
    if (s == "csv") return SourceKind::Csv;
    throw ConfigError("unknown data source '" + s + "' (expected heat, wave or csv)");
}

SensorLayout default_wave_layout() {
    SensorLayout l;
    l.sensors = {{"1", 0.0}, {"2", 1.04}, {"3", 2.08}, {"4", 3.12}, {"5", 4.16}, {"6", 5.2}};
    l.held_out = "4";
    return l;
}

json layout_json(const SensorLayout& l) {
    json s = json::object();
    for (const auto& [id, x] : l.sensors) s[id] = x;
    return {{"sensors", s}, {"held_out", l.held_out}};
}

SensorLayout layout_from_json(const json& j) {
    check_keys(j, {"sensors", "held_out"}, "data.wave.layout");
    SensorLayout l;
    for (const auto& [id, x] : j.at("sensors").items()) l.sensors[id] = x.get<double>();
    l.held_out = j.at("held_out").get<std::string>();
    return l;
}

json network_config_json(const NetworkConfig& c) {
    return {{"hidden_layers", c.hidden_layers}, {"hidden_width", c.hidden_width}};
}

void network_config_from(const json& j, NetworkConfig& c, std::string_view where) {
    check_keys(j, {"hidden_layers", "hidden_width"}, where);
    take(j, "hidden_layers", c.hidden_layers);
    take(j, "hidden_width", c.hidden_width);
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

json config_json(const RunConfig& c) {
    std::vector<std::string> lib;
    for (auto id : c.library) lib.emplace_back(operator_name(id));
    const auto& t = c.train;
    return {
        {"version", c.version},
        {"seed", c.seed},
        {"output_dir", c.output_dir.generic_string()},
        {"data",
         {{"source", source_name(c.source)},
          {"heat",
           {{"a2", c.heat.a2},
            {"length", c.heat.length},
            {"t_end", c.heat.t_end},
            {"boundary_count", c.heat.boundary_count},
            {"interior_count", c.heat.interior_count},
            {"noise_sd", c.heat.noise_sd}}},
          {"wave",
           {{"c2", c.wave.wave.c2},
            {"length", c.wave.wave.length},
            {"t_end", c.wave.wave.t_end},
            {"damping", c.wave.wave.damping},
            {"angular_frequency", c.wave.wave.angular_frequency},
            {"noise_sd", c.wave.wave.noise_sd},
            {"samples_per_sensor", c.wave.samples_per_sensor},
            {"layout", layout_json(c.wave.layout)}}},
          {"csv", {{"path", c.csv.path.generic_string()}, {"layout", c.csv.layout.generic_string()}}}}},
        {"library", lib},
        {"networks", {{"u", network_config_json(t.net_u)}, {"g", network_config_json(t.net_g)}}},
        {"train",
         {{"max_outer", t.max_outer},
          {"netg_iterations", t.netg_iterations},
          {"netu_iterations", t.netu_iterations},
          {"adam_steps", t.adam_steps},
          {"tol", tol_json(t.tol)},
          {"patience", t.patience},
          {"physics_weight", t.physics_weight},
          {"adam", {{"lr", t.adam.lr}, {"beta1", t.adam.beta1}, {"beta2", t.adam.beta2}, {"eps", t.adam.eps}}},
          {"lbfgs",
           {{"history", t.lbfgs.history},
            {"grad_tol", t.lbfgs.grad_tol},
            {"value_tol", t.lbfgs.value_tol},
            {"c1", t.lbfgs.c1},
            {"c2", t.lbfgs.c2},
            {"max_linesearch", t.lbfgs.max_linesearch}}}}},
        {"rp", {{"enabled", c.rp_enabled}, {"lags", c.rp.lags}, {"dt", c.rp.dt}, {"iterations", c.rp.iterations}}},
        {"selection", {{"grid_nx", c.grid_nx}, {"grid_nt", c.grid_nt}, {"snapshots", c.snapshots}}},
        {"parallel", c.parallel}};
}

void apply_json(RunConfig& c, const json& j, const fs::path& base_dir) {
    check_keys(j, {"version", "seed", "output_dir", "data", "library", "networks", "train", "rp", "selection", "parallel"},
               "config");
    take(j, "version", c.version);
    if (c.version != kRunConfigVersion) throw ConfigError("unsupported config version " + std::to_string(c.version));
    take(j, "seed", c.seed);
    if (auto it = j.find("output_dir"); it != j.end()) c.output_dir = it->get<std::string>();
    take(j, "parallel", c.parallel);

    if (auto it = j.find("data"); it != j.end()) {
        const json& d = *it;
        check_keys(d, {"source", "heat", "wave", "csv"}, "data");
        if (auto h = d.find("heat"); h != d.end()) {
            check_keys(*h, {"a2", "length", "t_end", "boundary_count", "interior_count", "noise_sd"}, "data.heat");
            take(*h, "a2", c.heat.a2);
            take(*h, "length", c.heat.length);
            take(*h, "t_end", c.heat.t_end);
            take(*h, "boundary_count", c.heat.boundary_count);
            take(*h, "interior_count", c.heat.interior_count);
            take(*h, "noise_sd", c.heat.noise_sd);
        }
        if (auto w = d.find("wave"); w != d.end()) {
            check_keys(*w, {"c2", "length", "t_end", "damping", "angular_frequency", "noise_sd", "samples_per_sensor", "layout"},
                       "data.wave");
            take(*w, "c2", c.wave.wave.c2);
            take(*w, "length", c.wave.wave.length);
            take(*w, "t_end", c.wave.wave.t_end);
            take(*w, "damping", c.wave.wave.damping);
            take(*w, "angular_frequency", c.wave.wave.angular_frequency);
            take(*w, "noise_sd", c.wave.wave.noise_sd);
            take(*w, "samples_per_sensor", c.wave.samples_per_sensor);
            if (auto l = w->find("layout"); l != w->end()) c.wave.layout = layout_from_json(*l);
        }
        if (auto s = d.find("csv"); s != d.end()) {
            check_keys(*s, {"path", "layout"}, "data.csv");
            auto resolve = [&](const json& v) {
                fs::path p = v.get<std::string>();
                return p.is_relative() && !p.empty() && !base_dir.empty() ? base_dir / p : p;
            };
            if (auto p = s->find("path"); p != s->end()) c.csv.path = resolve(*p);
            if (auto p = s->find("layout"); p != s->end()) c.csv.layout = resolve(*p);
        }
    }
    if (auto it = j.find("library"); it != j.end()) {
        c.library = parse_library(it->get<std::vector<std::string>>());
    }
    if (auto it = j.find("networks"); it != j.end()) {
        check_keys(*it, {"u", "g"}, "networks");
        if (auto u = it->find("u"); u != it->end()) network_config_from(*u, c.train.net_u, "networks.u");
        if (auto g = it->find("g"); g != it->end()) network_config_from(*g, c.train.net_g, "networks.g");
    }
    if (auto it = j.find("train"); it != j.end()) {
        const json& t = *it;
        check_keys(t, {"max_outer", "netg_iterations", "netu_iterations", "adam_steps", "tol", "patience",
                       "physics_weight", "adam", "lbfgs"},
                   "train");
        take(t, "max_outer", c.train.max_outer);
        take(t, "netg_iterations", c.train.netg_iterations);
        take(t, "netu_iterations", c.train.netu_iterations);
        take(t, "adam_steps", c.train.adam_steps);
        take_tol(t, "tol", c.train.tol);
        take(t, "patience", c.train.patience);
        take(t, "physics_weight", c.train.physics_weight);
        if (auto a = t.find("adam"); a != t.end()) {
            check_keys(*a, {"lr", "beta1", "beta2", "eps"}, "train.adam");
            take(*a, "lr", c.train.adam.lr);
            take(*a, "beta1", c.train.adam.beta1);
            take(*a, "beta2", c.train.adam.beta2);
            take(*a, "eps", c.train.adam.eps);
        }
        if (auto l = t.find("lbfgs"); l != t.end()) {
            check_keys(*l, {"history", "grad_tol", "value_tol", "c1", "c2", "max_linesearch"}, "train.lbfgs");
            take(*l, "history", c.train.lbfgs.history);
            take(*l, "grad_tol", c.train.lbfgs.grad_tol);
            take(*l, "value_tol", c.train.lbfgs.value_tol);
            take(*l, "c1", c.train.lbfgs.c1);
            take(*l, "c2", c.train.lbfgs.c2);
            take(*l, "max_linesearch", c.train.lbfgs.max_linesearch);
        }
    }
    if (auto it = j.find("rp"); it != j.end()) {
        check_keys(*it, {"enabled", "lags", "dt", "iterations"}, "rp");
        take(*it, "enabled", c.rp_enabled);
        take(*it, "lags", c.rp.lags);
        take(*it, "dt", c.rp.dt);
        take(*it, "iterations", c.rp.iterations);
    }
    if (auto it = j.find("selection"); it != j.end()) {
        check_keys(*it, {"grid_nx", "grid_nt", "snapshots"}, "selection");
        take(*it, "grid_nx", c.grid_nx);
        take(*it, "grid_nt", c.grid_nt);
        take(*it, "snapshots", c.snapshots);
    }
}

/// Smallest positive spacing between distinct sample times.
double min_time_step(const std::vector<Sample>& samples) {
    std::set<double> ts;
    for (const auto& s : samples) ts.insert(s.t);
    double best = std::numeric_limits<double>::infinity();
    for (auto it = ts.begin(); it != ts.end() && std::next(it) != ts.end(); ++it) {
        best = std::min(best, *std::next(it) - *it);
    }
    return best;
}

std::vector<double> values(const std::vector<PredictRow>& rows) {
    std::vector<double> v;
    v.reserve(rows.size());
    for (const auto& r : rows) v.push_back(r.u_hat);
    return v;
}

std::vector<double> targets(const std::vector<Sample>& samples) {
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(s.u);
    return v;
}

std::vector<Point> points_of(const std::vector<Sample>& samples) {
    std::vector<Point> p;
    p.reserve(samples.size());
    for (const auto& s : samples) p.push_back({s.x, s.t});
    return p;
}

Metrics nan_metrics() {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
}

Metrics compare_or_nan(const std::vector<double>& pred, const std::vector<Sample>& truth) {
    if (truth.empty()) return nan_metrics();
    return compare(pred, targets(truth));
}

/// Uniform evaluation interface over the solution network and the recurrent model.
struct Predictor {
    const MlpParams* netu = nullptr;
    const RpModel* rp = nullptr;
    const RpConfig* rp_config = nullptr;
    const MeasurementTable* measurements = nullptr;

    std::vector<PredictRow> operator()(const std::vector<Point>& pts) const {
        std::vector<PredictRow> rows(pts.size());
        if (rp) {
            const auto preds = rp_predict(*rp, *rp_config, *measurements, pts);
            for (std::size_t i = 0; i < pts.size(); ++i) rows[i] = {pts[i].x, pts[i].t, preds[i].value, preds[i].provenance};
            return rows;
        }
        if (pts.empty()) return rows;
        Eigen::MatrixXd in(2, static_cast<Eigen::Index>(pts.size()));
        for (std::size_t i = 0; i < pts.size(); ++i) {
            in(0, static_cast<Eigen::Index>(i)) = pts[i].x;
            in(1, static_cast<Eigen::Index>(i)) = pts[i].t;
        }
        const Eigen::RowVectorXd out = forward_batch(*netu, in);
        for (std::size_t i = 0; i < pts.size(); ++i) rows[i] = {pts[i].x, pts[i].t, out(static_cast<Eigen::Index>(i)), "-"};
        return rows;
    }
};

fs::path checkpoint_path(const fs::path& out, std::uint32_t mask) {
    return out / "checkpoints" / (mask_tag(mask) + ".json");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
}

std::string library_label(const Library& lib) {
    std::string s;
    for (auto id : lib) {
        if (!s.empty()) s += ", ";
        s += operator_name(id);
    }
    return s;
}

void write_reports(const fs::path& out, const DiscoveryReport& report, const RunConfig& config,
                   const std::string& description) {
    write_candidates_csv(out / "candidates.csv", report);
    ReportContext ctx;
    ctx.data_description = description;
    ctx.library = library_label(config.library);
    write_summary_markdown(out / "summary.md", report, ctx);
    write_aic_svg(out / "aic.svg", report);
}

std::string describe(const RunConfig& c) {
    std::ostringstream os;
    switch (c.source) {
    case SourceKind::Heat:
        os << "manufactured heat field, a2 = " << c.heat.a2 << ", " << c.heat.boundary_count << " boundary + "
           << c.heat.interior_count << " interior samples, noise sd " << c.heat.noise_sd;
        break;
    case SourceKind::Wave:
        os << "synthetic damped wave, c2 = " << c.wave.wave.c2 << ", " << c.wave.layout.sensors.size()
           << " sensors (held out: " << c.wave.layout.held_out << "), " << c.wave.samples_per_sensor
           << " samples per sensor";
        break;
    case SourceKind::Csv:
        os << "sensor CSV " << c.csv.path.filename().string();
        break;
    }
    return os.str();
}

std::vector<Point> read_points_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path.string() + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("x,t", 0) != 0) throw DataError("'" + path.string() + "' must start with an x,t header");
    std::vector<Point> pts;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos) throw IngestError(lineno, "expected at least two fields");
        const char* b = line.data();
        const char* mid = b + c1;
        const char* e = c2 == std::string::npos ? b + line.size() : b + c2;
        Point p;
        auto r1 = std::from_chars(b, mid, p.x);
        auto r2 = std::from_chars(mid + 1, e, p.t);
        if (r1.ec != std::errc{} || r1.ptr != mid || r2.ec != std::errc{} || r2.ptr != e) {
            throw IngestError(lineno, "non-numeric coordinate");
        }
        pts.push_back(p);
    }
    return pts;
}

} // namespace

std::string_view source_name(SourceKind kind) {
    switch (kind) {
    case SourceKind::Heat: return "heat";
    case SourceKind::Wave: return "wave";
    case SourceKind::Csv: return "csv";
    }
    return "?";
}

std::string mask_tag(std::uint32_t mask) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "m_%04u", static_cast<unsigned>(mask));
    return buf;
}

RunConfig RunConfig::heat_defaults() {
    RunConfig c;
    c.source = SourceKind::Heat;
    c.library = heat_library();
    c.rp.dt = 0.1;
    c.snapshots = {3.0, 7.0};
    return c;
}

RunConfig RunConfig::wave_defaults() {
    RunConfig c;
    c.source = SourceKind::Wave;
    c.library = wave_library();
    c.wave.layout = default_wave_layout();
    c.rp.dt = 0.0;
    c.snapshots = {0.5, 1.5};
    return c;
}

RunConfig RunConfig::from_json(std::string_view text, const fs::path& base_dir) {
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        SourceKind source = SourceKind::Heat;
        if (auto d = j.find("data"); d != j.end() && d->contains("source")) {
            source = parse_source(d->at("source").get<std::string>());
        }
        RunConfig c = source == SourceKind::Wave ? wave_defaults() : heat_defaults();
        c.source = source;
        if (source == SourceKind::Csv) c.rp.dt = 0.0;
        apply_json(c, j, base_dir);
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
}

RunConfig RunConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str(), path.parent_path());
}

std::string RunConfig::to_json() const { return config_json(*this).dump(2) + "\n"; }

std::string RunConfig::hash() const {
    json j = config_json(*this);
    j.erase("output_dir");
    j.erase("parallel");
    return hex64(fnv1a(j.dump()));
}

void RunConfig::validate() const {
    if (version != kRunConfigVersion) throw ConfigError("unsupported config version");
    if (library.empty()) throw ConfigError("operator library is empty");
    if (library.size() > kMaxLibrarySize) throw ConfigError("operator library too large");
    train.validate();
    if (grid_nx < 2 || grid_nt < 2) throw ConfigError("test grid needs at least 2 x 2 points");
    if (parallel < 1) throw ConfigError("parallel must be >= 1");
    if (rp_enabled) {
        if (rp.lags < 1) throw ConfigError("rp.lags must be >= 1");
        if (rp.iterations < 0) throw ConfigError("rp.iterations must be >= 0");
        if (rp.dt < 0.0) throw ConfigError("rp.dt must be positive (0 selects the sample spacing)");
    }
    switch (source) {
    case SourceKind::Heat:
        if (heat.boundary_count < 1 || heat.interior_count < 1) throw ConfigError("sample counts must be >= 1");
        if (!(heat.a2 > 0.0) || !(heat.noise_sd >= 0.0)) throw ConfigError("invalid heat configuration");
        break;
    case SourceKind::Wave:
        wave.layout.validate();
        if (wave.samples_per_sensor < 2) throw ConfigError("samples_per_sensor must be >= 2");
        break;
    case SourceKind::Csv:
        if (csv.path.empty() || csv.layout.empty()) throw ConfigError("csv source needs path and layout");
        break;
    }
}

TrainConfig RunConfig::train_config() const {
    TrainConfig t = train;
    t.seed = seed;
    return t;
}

PreparedData prepare_data(const RunConfig& config, const fs::path& work_dir) {
    config.validate();
    PreparedData d;
    d.description = describe(config);
    const std::uint64_t data_seed = derive_seed(config.seed, kDataStream);
    switch (config.source) {
    case SourceKind::Heat: {
        HeatConfig hc = config.heat;
        hc.seed = data_seed;
        d.domain = hc.domain();
        // Fails early with a configuration error when the manufactured form is invalid.
        (void)manufactured_heat(hc, d.domain.x_lo, d.domain.t_lo);
        Generator gen = [hc](double x, double t) { return manufactured_heat(hc, x, t); };
        auto [train, colloc] = sample_dataset(d.domain, gen, {hc.boundary_count, hc.interior_count}, hc.noise_sd, hc.seed);
        d.train = std::move(train);
        d.colloc = std::move(colloc);
        d.grid = evaluate(gen, uniform_grid(d.domain, config.grid_nx, config.grid_nt));
        d.test = d.grid;
        d.truth = gen;
        break;
    }
    case SourceKind::Wave: {
        WaveConfig wc = config.wave.wave;
        wc.seed = data_seed;
        Generator gen = [wc](double x, double t) { return synthetic_wave(wc, x, t); };
        const auto readings = sensor_readings(gen, config.wave.layout, wc.domain(), config.wave.samples_per_sensor,
                                              wc.noise_sd, wc.seed);
        fs::create_directories(work_dir);
        write_samples_csv(work_dir / "sensors.csv", readings);
        config.wave.layout.save(work_dir / "layout.json");
        const auto ingest = ingest_csv(work_dir / "sensors.csv", SensorLayout::load(work_dir / "layout.json"));
        d.domain = ingest.domain;
        d.train = ingest.training;
        d.colloc = CollocationSet::from_data(d.train);
        d.test = ingest.held_out.all();
        d.grid = evaluate(gen, uniform_grid(d.domain, config.grid_nx, config.grid_nt));
        d.truth = gen;
        for (const auto& [id, x] : config.wave.layout.sensors) {
            if (id != config.wave.layout.held_out) d.sensor_positions.push_back(x);
        }
        d.measurements = d.train.all();
        break;
    }
    case SourceKind::Csv: {
        const auto layout = SensorLayout::load(config.csv.layout);
        const auto ingest = ingest_csv(config.csv.path, layout);
        d.domain = ingest.domain;
        d.train = ingest.training;
        d.colloc = CollocationSet::from_data(d.train);
        d.test = ingest.held_out.all();
        for (const auto& [id, x] : layout.sensors) {
            if (id != layout.held_out) d.sensor_positions.push_back(x);
        }
        d.measurements = d.train.all();
        break;
    }
    }
    for (double t : config.snapshots) {
        if (t < d.domain.t_lo || t > d.domain.t_hi) {
            throw ConfigError("snapshot time " + format_exact(t) + " outside the time range");
        }
    }
    return d;
}

RpConfig rp_config_for(const RunConfig& config, const PreparedData& data) {
    RpConfig rc = config.rp;
    rc.lbfgs = config.train.lbfgs;
    if (rc.dt <= 0.0) {
        rc.dt = min_time_step(data.measurements.empty() ? data.train.all() : data.measurements);
        if (!std::isfinite(rc.dt)) throw ConfigError("cannot infer rp.dt from the data");
    }
    rc.sensor_positions = data.sensor_positions;
    rc.validate(data.domain);
    return rc;
}

CandidateRun run_candidate(const Combination& comb, const PreparedData& data, const HybridInputs& inputs,
                           const RunConfig& config) {
    CandidateRun run;
    TrainResult tr = train_combination(comb, inputs, config.train_config());
    run.state = std::move(tr.state);
    CandidateResult& r = run.result;
    r.combination = tr.combination;
    r.n = data.train.size();
    r.outer_iterations = static_cast<int>(run.state.history.size());
    r.converged = run.state.converged;
    r.aborted = run.state.aborted;
    r.diagnostic = run.state.diagnostic;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (r.aborted) {
        r.sigma2_hat = r.aic = r.residual_rmse = nan;
        r.train = r.test = r.test_before_rp = r.grid = nan_metrics();
        return run;
    }
    r.residual_rmse = std::sqrt(mse_pn(run.state.u, run.state.g, r.combination, data.colloc));

    Predictor base{&run.state.u, nullptr, nullptr, nullptr};
    const auto test_pts = points_of(data.test);
    r.test_before_rp = compare_or_nan(values(base(test_pts)), data.test);

    Predictor final_model = base;
    RpConfig rc;
    MeasurementTable table;
    if (config.rp_enabled) {
        rc = rp_config_for(config, data);
        table = MeasurementTable::from_samples(data.measurements, rc.sensor_positions);
        RpModel model = warm_start(run.state.u, rc, data.domain.t_lo);
        model = train_rp(std::move(model), data.train, data.colloc, r.combination, run.state.g, rc, table);
        model.provenance.clear();
        run.rp = std::move(model);
        final_model = Predictor{&run.state.u, &*run.rp, &rc, &table};
        r.rp_used = true;
    }

    const auto train_samples = data.train.all();
    const auto train_pred = values(final_model(points_of(train_samples)));
    double sse = 0.0;
    for (std::size_t i = 0; i < train_samples.size(); ++i) {
        const double e = train_pred[i] - train_samples[i].u;
        sse += e * e;
    }
    r.sigma2_hat = sse / static_cast<double>(train_samples.size());
    r.aic = aic({r.p(), r.n, clamp_sigma2(r.sigma2_hat)});
    r.train = compare(train_pred, targets(train_samples));
    r.test = r.rp_used ? compare_or_nan(values(final_model(test_pts)), data.test) : r.test_before_rp;
    r.grid = compare_or_nan(values(final_model(points_of(data.grid))), data.grid);
    for (double t : config.snapshots) {
        SnapshotMetrics sm{t, nan_metrics()};
        if (data.truth) {
            const auto truth = evaluate(*data.truth, time_slice(data.domain, t, config.grid_nx));
            sm.metrics = compare_or_nan(values(final_model(points_of(truth))), truth);
        }
        r.snapshots.push_back(sm);
    }
    return run;
}

CandidateCheckpoint make_checkpoint(const CandidateRun& run, const PreparedData& data, const RunConfig& config) {
    CandidateCheckpoint c;
    c.config_hash = config.hash();
    c.result = run.result;
    c.domain = data.domain;
    const std::uint64_t base = config.seed ^ static_cast<std::uint64_t>(run.result.combination.index());
    c.netu = {"netu", derive_seed(base, 1), run.state.u};
    c.netg = {"netg", derive_seed(base, 2), run.state.g};
    c.history = run.state.history;
    if (run.rp) {
        c.rp = run.rp;
        c.rp_config = rp_config_for(config, data);
        c.measurements = data.measurements;
    }
    return c;
}

GenerateOutcome cmd_generate_data(const RunConfig& config) {
    const fs::path dir = config.output_dir / "data";
    fs::create_directories(dir);
    const PreparedData d = prepare_data(config, dir);
    GenerateOutcome g;
    g.train_csv = dir / "train.csv";
    g.test_csv = dir / "test.csv";
    g.manifest = dir / "manifest.json";
    const auto train = d.train.all();
    write_samples_csv(g.train_csv, train);
    write_samples_csv(g.test_csv, d.test);
    g.train_rows = train.size();
    g.test_rows = d.test.size();
    json m{{"source", source_name(config.source)},
           {"seed", config.seed},
           {"config_hash", config.hash()},
           {"train_rows", g.train_rows},
           {"boundary_rows", d.train.boundary.size()},
           {"interior_rows", d.train.interior.size()},
           {"test_rows", g.test_rows},
           {"domain", {d.domain.x_lo, d.domain.x_hi, d.domain.t_lo, d.domain.t_hi}}};
    write_text(g.manifest, m.dump(2) + "\n");
    return g;
}

DiscoverOutcome cmd_discover(const RunConfig& config, const DiscoverOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const fs::path out = config.output_dir;
    fs::create_directories(out / "checkpoints");
    fs::create_directories(out / "logs");
    const PreparedData data = prepare_data(config, out / "data");
    const HybridInputs inputs = HybridInputs::build(data.train, data.colloc);
    const std::string hash = config.hash();
    auto log = [&](const std::string& msg) {
        if (options.log) options.log(msg);
    };

    const auto combos = enumerate(config.library);
    std::vector<std::optional<CandidateResult>> results(combos.size());
    DiscoverOutcome outcome;
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < combos.size(); ++i) {
        const fs::path p = checkpoint_path(out, combos[i].mask);
        if (options.resume && fs::exists(p)) {
            try {
                CandidateCheckpoint c = load_candidate(p);
                if (c.config_hash == hash) {
                    results[i] = c.result;
                    outcome.histories.emplace_back(combos[i].mask, std::move(c.history));
                    ++outcome.resumed;
                    log("resumed " + combos[i].label());
                    continue;
                }
            } catch (const ConfigError&) {
                // Unreadable or foreign checkpoints are retrained.
            }
        }
        todo.push_back(i);
    }
    if (options.max_new >= 0 && static_cast<int>(todo.size()) > options.max_new) {
        todo.resize(static_cast<std::size_t>(options.max_new));
        outcome.complete = false;
    }

    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= todo.size()) return;
            const std::size_t i = todo[k];
            try {
                const auto t0 = std::chrono::steady_clock::now();
                CandidateRun run = run_candidate(combos[i], data, inputs, config);
                run.result.checkpoint = (fs::path("checkpoints") / (mask_tag(combos[i].mask) + ".json")).generic_string();
                save_candidate(checkpoint_path(out, combos[i].mask), make_checkpoint(run, data, config));
                write_training_log(out / "logs" / (mask_tag(combos[i].mask) + ".csv"), run.state);
                const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                std::lock_guard lock(mu);
                std::ostringstream os;
                os << "trained " << combos[i].label() << ": aic " << format_number(run.result.aic) << ", "
                   << run.result.outer_iterations << " outer iterations, " << secs << " s";
                log(os.str());
                results[i] = run.result;
                outcome.histories.emplace_back(combos[i].mask, run.state.history);
                ++outcome.trained;
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                next = todo.size();
            }
        }
    };
    const int nthreads = std::max(1, std::min<int>(config.parallel, static_cast<int>(todo.size())));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    std::sort(outcome.histories.begin(), outcome.histories.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (!outcome.complete) return outcome;

    std::vector<CandidateResult> all;
    for (auto& r : results) all.push_back(std::move(*r));
    outcome.report = select(std::move(all));
    write_reports(out, outcome.report, config, data.description);
    fs::copy_file(checkpoint_path(out, outcome.report.winner.combination.mask), out / "winner.json",
                  fs::copy_options::overwrite_existing);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json info{{"config_hash", hash},
              {"seconds", secs},
              {"trained", outcome.trained},
              {"resumed", outcome.resumed},
              {"parallel", config.parallel}};
    write_text(out / "run_info.json", info.dump(2) + "\n");
    write_text(out / "config.json", config.to_json());
    return outcome;
}

std::vector<PredictRow> predict_points(const CandidateCheckpoint& ckpt, const std::vector<Point>& points) {
    if (ckpt.rp) {
        const auto table = MeasurementTable::from_samples(ckpt.measurements, ckpt.rp_config.sensor_positions);
        return Predictor{&ckpt.netu.params, &*ckpt.rp, &ckpt.rp_config, &table}(points);
    }
    return Predictor{&ckpt.netu.params, nullptr, nullptr, nullptr}(points);
}

void write_predictions_csv(const fs::path& path, const std::vector<PredictRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "x,t,u_hat,provenance\n";
    for (const auto& r : rows) {
        out << format_exact(r.x) << ',' << format_exact(r.t) << ',' << format_exact(r.u_hat) << ',' << r.provenance
            << '\n';
    }
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::size_t cmd_predict(const PredictRequest& req) {
    if (!fs::exists(req.checkpoint)) throw ConfigError("checkpoint '" + req.checkpoint.string() + "' not found");
    const CandidateCheckpoint ckpt = load_candidate(req.checkpoint);
    const auto pts = req.points_csv ? read_points_csv(*req.points_csv) : uniform_grid(ckpt.domain, req.nx, req.nt);
    fs::create_directories(req.out_dir);
    write_predictions_csv(req.out_dir / "predictions.csv", predict_points(ckpt, pts));
    for (double t : req.snapshots) {
        write_predictions_csv(req.out_dir / ("snapshot_t" + format_exact(t) + ".csv"),
                              predict_points(ckpt, time_slice(ckpt.domain, t, req.snapshot_nx)));
    }
    return pts.size();
}

DiscoveryReport cmd_report(const RunConfig& config) {
    const fs::path out = config.output_dir;
    const std::string hash = config.hash();
    std::vector<CandidateResult> results;
    for (const auto& comb : enumerate(config.library)) {
        const fs::path p = checkpoint_path(out, comb.mask);
        if (!fs::exists(p)) throw DataError("missing checkpoint '" + p.string() + "'");
        CandidateCheckpoint c = load_candidate(p);
        if (c.config_hash != hash) throw ConfigError("checkpoint '" + p.string() + "' belongs to a different config");
        results.push_back(std::move(c.result));
    }
    DiscoveryReport report = select(std::move(results));
    write_reports(out, report, config, describe(config));
    return report;
}

} // namespace cpinn
