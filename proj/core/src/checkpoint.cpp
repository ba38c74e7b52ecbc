#include "cpinn/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "cpinn/error.hpp"
#include "cpinn/losses.hpp"

namespace cpinn {

using nlohmann::json;

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_nan(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json network_json(const NetworkCheckpoint& c) {
    return {{"format", "cpinn-network"},
            {"version", kCheckpointVersion},
            {"role", c.role},
            {"seed", c.seed},
            {"layer_sizes", c.params.layer_sizes},
            {"parameters", to_std(flatten(c.params))}};
}

NetworkCheckpoint network_from_json(const json& j) {
    if (j.at("format").get<std::string>() != "cpinn-network") throw ConfigError("not a network checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) throw ConfigError("unsupported checkpoint version");
    NetworkCheckpoint c;
    c.role = j.at("role").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto sizes = j.at("layer_sizes").get<std::vector<int>>();
    c.params = unflatten(sizes, to_vector(j.at("parameters").get<std::vector<double>>()));
    return c;
}

json metrics_json(const Metrics& m) { return {{"rmse", number(m.rmse)}, {"cc", number(m.cc)}}; }

Metrics metrics_from_json(const json& j) { return {number_or_nan(j.at("rmse")), number_or_nan(j.at("cc"))}; }

json result_json(const CandidateResult& r) {
    json snaps = json::array();
    for (const auto& s : r.snapshots) snaps.push_back({{"t", s.t}, {"metrics", metrics_json(s.metrics)}});
    std::vector<std::string> names;
    for (auto id : r.combination.library) names.emplace_back(operator_name(id));
    return {{"combination", {{"library", names}, {"mask", r.combination.mask}, {"lambda", r.combination.lambda}}},
            {"n", r.n},
            {"sigma2_hat", number(r.sigma2_hat)},
            {"aic", number(r.aic)},
            {"train", metrics_json(r.train)},
            {"test", metrics_json(r.test)},
            {"test_before_rp", metrics_json(r.test_before_rp)},
            {"grid", metrics_json(r.grid)},
            {"snapshots", snaps},
            {"residual_rmse", number(r.residual_rmse)},
            {"outer_iterations", r.outer_iterations},
            {"converged", r.converged},
            {"aborted", r.aborted},
            {"rp_used", r.rp_used},
            {"diagnostic", r.diagnostic},
            {"checkpoint", r.checkpoint}};
}

CandidateResult result_from_json(const json& j) {
    CandidateResult r;
    const auto& c = j.at("combination");
    r.combination.library = parse_library(c.at("library").get<std::vector<std::string>>());
    r.combination.mask = c.at("mask").get<std::uint32_t>();
    r.combination.lambda = c.at("lambda").get<std::vector<double>>();
    r.combination.validate();
    r.n = j.at("n").get<std::size_t>();
    r.sigma2_hat = number_or_nan(j.at("sigma2_hat"));
    r.aic = number_or_nan(j.at("aic"));
    r.train = metrics_from_json(j.at("train"));
    r.test = metrics_from_json(j.at("test"));
    r.test_before_rp = metrics_from_json(j.at("test_before_rp"));
    r.grid = metrics_from_json(j.at("grid"));
    for (const auto& s : j.at("snapshots")) r.snapshots.push_back({s.at("t").get<double>(), metrics_from_json(s.at("metrics"))});
    r.residual_rmse = number_or_nan(j.at("residual_rmse"));
    r.outer_iterations = j.at("outer_iterations").get<int>();
    r.converged = j.at("converged").get<bool>();
    r.aborted = j.at("aborted").get<bool>();
    r.rp_used = j.at("rp_used").get<bool>();
    r.diagnostic = j.at("diagnostic").get<std::string>();
    r.checkpoint = j.at("checkpoint").get<std::string>();
    return r;
}

json history_json(const std::vector<OuterRecord>& h) {
    json a = json::array();
    for (const auto& r : h) {
        a.push_back({{"k", r.k},
                     {"mse_dn", number(r.mse_dn)},
                     {"mse_pn", number(r.mse_pn)},
                     {"mse_n", number(r.mse_n)},
                     {"lambda_norm", number(r.lambda_norm)},
                     {"netg_pn_before", number(r.netg_pn_before)},
                     {"netg_pn_after", number(r.netg_pn_after)},
                     {"netu_n_before", number(r.netu_n_before)},
                     {"netu_n_after", number(r.netu_n_after)},
                     {"netg_status", status_name(r.netg_status)},
                     {"netu_status", status_name(r.netu_status)}});
    }
    return a;
}

LbfgsStatus parse_status(const std::string& s) {
    for (auto st : {LbfgsStatus::GradientTolerance, LbfgsStatus::ValueTolerance, LbfgsStatus::MaxIterations,
                    LbfgsStatus::LineSearchFailed, LbfgsStatus::NonFiniteObjective}) {
        if (status_name(st) == s) return st;
    }
    throw ConfigError("unknown optimizer status '" + s + "'");
}

std::vector<OuterRecord> history_from_json(const json& a) {
    std::vector<OuterRecord> h;
    for (const auto& j : a) {
        OuterRecord r;
        r.k = j.at("k").get<int>();
        r.mse_dn = number_or_nan(j.at("mse_dn"));
        r.mse_pn = number_or_nan(j.at("mse_pn"));
        r.mse_n = number_or_nan(j.at("mse_n"));
        r.lambda_norm = number_or_nan(j.at("lambda_norm"));
        r.netg_pn_before = number_or_nan(j.at("netg_pn_before"));
        r.netg_pn_after = number_or_nan(j.at("netg_pn_after"));
        r.netu_n_before = number_or_nan(j.at("netu_n_before"));
        r.netu_n_after = number_or_nan(j.at("netu_n_after"));
        r.netg_status = parse_status(j.at("netg_status").get<std::string>());
        r.netu_status = parse_status(j.at("netu_status").get<std::string>());
        h.push_back(r);
    }
    return h;
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open checkpoint '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("invalid checkpoint '" + path.string() + "': " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write '" + tmp.string() + "'");
        out << j.dump(1) << '\n';
        if (!out) throw DataError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

} // namespace

void save_network(const std::filesystem::path& path, const NetworkCheckpoint& ckpt) {
    write_json(path, network_json(ckpt));
}

NetworkCheckpoint load_network(const std::filesystem::path& path) {
    try {
        return network_from_json(read_json(path));
    } catch (const json::exception& e) {
        throw ConfigError("invalid network checkpoint '" + path.string() + "': " + e.what());
    }
}

void save_candidate(const std::filesystem::path& path, const CandidateCheckpoint& c) {
    json j{{"format", "cpinn-candidate"},
           {"version", kCheckpointVersion},
           {"config_hash", c.config_hash},
           {"result", result_json(c.result)},
           {"domain", {{"x_lo", c.domain.x_lo}, {"x_hi", c.domain.x_hi}, {"t_lo", c.domain.t_lo}, {"t_hi", c.domain.t_hi}}},
           {"netu", network_json(c.netu)},
           {"netg", network_json(c.netg)},
           {"history", history_json(c.history)}};
    json meas = json::array();
    for (const auto& s : c.measurements) meas.push_back({s.x, s.t, s.u});
    j["measurements"] = meas;
    if (c.rp) {
        j["rp"] = {{"lags", c.rp->lags},
                   {"dt", c.rp->dt},
                   {"t_lo", c.rp->t_lo},
                   {"sensor_positions", c.rp_config.sensor_positions},
                   {"network", network_json({"netu_rp", 0, c.rp->params})}};
    } else {
        j["rp"] = nullptr;
    }
    write_json(path, j);
}

CandidateCheckpoint load_candidate(const std::filesystem::path& path) {
    const json j = read_json(path);
    try {
        if (j.at("format").get<std::string>() != "cpinn-candidate") throw ConfigError("not a candidate checkpoint");
        if (j.at("version").get<int>() != kCheckpointVersion) throw ConfigError("unsupported checkpoint version");
        CandidateCheckpoint c;
        c.config_hash = j.at("config_hash").get<std::string>();
        c.result = result_from_json(j.at("result"));
        const auto& d = j.at("domain");
        c.domain = {1, d.at("x_lo").get<double>(), d.at("x_hi").get<double>(), d.at("t_lo").get<double>(),
                    d.at("t_hi").get<double>()};
        c.netu = network_from_json(j.at("netu"));
        c.netg = network_from_json(j.at("netg"));
        c.history = history_from_json(j.at("history"));
        for (const auto& m : j.at("measurements")) {
            c.measurements.push_back({m.at(0).get<double>(), m.at(1).get<double>(), m.at(2).get<double>()});
        }
        const auto& rp = j.at("rp");
        if (!rp.is_null()) {
            RpModel m;
            m.lags = rp.at("lags").get<int>();
            m.dt = rp.at("dt").get<double>();
            m.t_lo = rp.at("t_lo").get<double>();
            m.base = c.netu.params;
            m.params = network_from_json(rp.at("network")).params;
            c.rp_config.lags = m.lags;
            c.rp_config.dt = m.dt;
            c.rp_config.sensor_positions = rp.at("sensor_positions").get<std::vector<double>>();
            c.rp = std::move(m);
        }
        return c;
    } catch (const json::exception& e) {
        throw ConfigError("invalid candidate checkpoint '" + path.string() + "': " + e.what());
    }
}

} // namespace cpinn
