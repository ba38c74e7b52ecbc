// cpinn: PDE structure discovery from sensor data.
//
//   cpinn generate-data --config run.json
//   cpinn discover      --config run.json [--parallel N]
//   cpinn predict       --checkpoint out/winner.json --out out/pred
//   cpinn report        --config run.json

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cpinn/error.hpp"
#include "cpinn/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { Ok = 0, Usage = 1, Config = 2, Data = 3, Training = 4 };

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> parallel;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
    auto* opt = cmd->add_option("--config", c.config, "Run configuration (JSON)");
    if (config_required) opt->required();
    cmd->add_option("--seed", c.seed, "Override the global seed");
    cmd->add_option("--parallel", c.parallel, "Train up to N combinations concurrently");
    cmd->add_option("--out", c.out, "Output directory");
}

cpinn::RunConfig load_config(const Common& c) {
    cpinn::RunConfig cfg = c.config.empty() ? cpinn::RunConfig::heat_defaults() : cpinn::RunConfig::load(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (c.parallel) cfg.parallel = *c.parallel;
    if (!c.out.empty()) cfg.output_dir = c.out;
    cfg.validate();
    return cfg;
}

void print_report(const cpinn::DiscoveryReport& r) {
    std::cout << "winner: " << r.winner.combination.label() << "  aic " << cpinn::format_number(r.winner.aic)
              << "  lambda";
    for (double l : r.winner.combination.lambda) std::cout << ' ' << cpinn::format_number(l);
    std::cout << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coupled physics-informed networks with AIC structure selection"};
    app.require_subcommand(1);

    Common gen_opts, disc_opts, rep_opts;
    auto* gen = app.add_subcommand("generate-data", "Write training/test CSVs and a manifest");
    add_common(gen, gen_opts, false);

    auto* disc = app.add_subcommand("discover", "Train every operator combination and select by AIC");
    add_common(disc, disc_opts, false);
    bool fresh = false;
    disc->add_flag("--fresh", fresh, "Ignore existing per-combination checkpoints");
    bool quiet = false;
    disc->add_flag("--quiet", quiet, "Do not print progress");

    auto* rep = app.add_subcommand("report", "Rebuild reports from the checkpoints of a finished run");
    add_common(rep, rep_opts, false);

    cpinn::PredictRequest pred_req;
    std::string pred_ckpt, pred_points, pred_out = "predictions";
    auto* pred = app.add_subcommand("predict", "Evaluate a checkpoint on a grid or CSV points");
    pred->add_option("--checkpoint", pred_ckpt, "Candidate checkpoint (e.g. out/winner.json)")->required();
    pred->add_option("--points", pred_points, "CSV with x,t columns; default is a uniform grid");
    pred->add_option("--nx", pred_req.nx, "Grid points in x")->check(CLI::PositiveNumber);
    pred->add_option("--nt", pred_req.nt, "Grid points in t")->check(CLI::PositiveNumber);
    pred->add_option("--snapshot", pred_req.snapshots, "Fixed-time slices to export");
    pred->add_option("--out", pred_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? Ok : Usage;
    }

    try {
        if (gen->parsed()) {
            const auto cfg = load_config(gen_opts);
            const auto g = cpinn::cmd_generate_data(cfg);
            std::cout << "wrote " << g.train_rows << " training rows to " << g.train_csv.string() << " and "
                      << g.test_rows << " test rows to " << g.test_csv.string() << '\n';
        } else if (disc->parsed()) {
            const auto cfg = load_config(disc_opts);
            cpinn::DiscoverOptions opts;
            opts.resume = !fresh;
            if (!quiet) opts.log = [](const std::string& m) { std::cerr << m << '\n'; };
            const auto outcome = cpinn::cmd_discover(cfg, opts);
            print_report(outcome.report);
            std::cout << "reports in " << cfg.output_dir.string() << '\n';
        } else if (rep->parsed()) {
            const auto cfg = load_config(rep_opts);
            print_report(cpinn::cmd_report(cfg));
        } else if (pred->parsed()) {
            pred_req.checkpoint = pred_ckpt;
            if (!pred_points.empty()) pred_req.points_csv = fs::path(pred_points);
            pred_req.out_dir = pred_out;
            const std::size_t n = cpinn::cmd_predict(pred_req);
            std::cout << "wrote " << n << " predictions to " << (fs::path(pred_out) / "predictions.csv").string()
                      << '\n';
        }
    } catch (const cpinn::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return Config;
    } catch (const cpinn::TrainingFailure& e) {
        std::cerr << "training failed: " << e.what() << '\n';
        return Training;
    } catch (const cpinn::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return Data;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return Data;
    } catch (const cpinn::DomainError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return Config;
    }
    return Ok;
}
