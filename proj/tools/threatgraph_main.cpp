#include "threatgraph/error.hpp"
#include "threatgraph/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

namespace {

int exit_code_for(threatgraph::ErrorClass cls) {
    switch (cls) {
        case threatgraph::ErrorClass::IO:      return 2;
        case threatgraph::ErrorClass::SCHEMA:  return 3;
        case threatgraph::ErrorClass::CONFIG:  return 4;
        case threatgraph::ErrorClass::NUMERIC: return 5;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    using namespace threatgraph;

    CLI::App app{"threatgraph - threat-intelligence mining, scoring and monitoring"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 42;
    app.add_option("--config", config_path, "pipeline config JSON")->required();
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "seed for clustering and training");

    auto* cmd_ingest = app.add_subcommand("ingest", "parse feeds into canonical records");
    auto* cmd_build = app.add_subcommand("build", "construct and serialize the threat graph");
    auto* cmd_score = app.add_subcommand("score", "formula-based risk scores per CVE");
    auto* cmd_cluster = app.add_subcommand("cluster", "fit the ASR/stealth/cost cluster models");
    auto* cmd_train = app.add_subcommand("train", "train the severity model");
    auto* cmd_predict = app.add_subcommand("predict", "score CVE nodes with a checkpoint");
    auto* cmd_report = app.add_subcommand("report", "emit triage analytics reports");
    auto* cmd_watch = app.add_subcommand("watch", "poll a drop directory and route alerts");

    std::string drop_dir;
    std::size_t max_polls = 0;
    std::int64_t fixed_time = -1;
    cmd_watch->add_option("--drop-dir", drop_dir, "directory polled for NVD-format files")
        ->required();
    cmd_watch->add_option("--max-polls", max_polls, "stop after N poll sweeps (0 = run forever)");
    cmd_watch->add_option("--fixed-time", fixed_time,
                          "fixed emitted_at timestamp for reproducible runs");

    CLI11_PARSE(app, argc, argv);

    try {
        const pipeline::PipelineConfig config = pipeline::load_config(config_path);
        if (cmd_ingest->parsed()) pipeline::run_ingest(config, out_dir);
        if (cmd_build->parsed()) pipeline::run_build(config, out_dir, seed);
        if (cmd_score->parsed()) pipeline::run_score(config, out_dir);
        if (cmd_cluster->parsed()) pipeline::run_cluster(config, out_dir, seed);
        if (cmd_train->parsed()) pipeline::run_train(config, out_dir, seed);
        if (cmd_predict->parsed()) pipeline::run_predict(config, out_dir, seed);
        if (cmd_report->parsed()) pipeline::run_report(config, out_dir, seed);
        if (cmd_watch->parsed()) {
            pipeline::WatchOptions options;
            options.drop_dir = drop_dir;
            options.out_dir = out_dir;
            options.max_polls = max_polls;
            if (fixed_time >= 0) options.fixed_time = fixed_time;
            pipeline::run_watch(config, options);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "threatgraph: error [%s] %s\n", error_class_name(e.error_class()),
                     e.what());
        return exit_code_for(e.error_class());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "threatgraph: error [NUMERIC] %s\n", e.what());
        return 5;
    }
    return 0;
}
