// Command-line surface over the experiment runner:
//   viana <command> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "viana/config.hpp"
#include "viana/errors.hpp"
#include "viana/parallel.hpp"
#include "viana/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"simulation and estimation laboratory for Viana-type skew products"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string seed_str;
    int threads = 0;

    for (const std::string& name : viana::command_names()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment config file")->required();
        sub->add_option("--out", out_dir, "output directory (default: config [output] directory)");
        sub->add_option("--seed", seed_str, "override the run seed");
        sub->add_option("--threads", threads, "worker threads (0 = hardware)");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        viana::ExperimentConfig cfg = viana::load_config_file(config_path);
        if (!seed_str.empty()) {
            try {
                std::size_t pos = 0;
                cfg.run.seed = std::stoull(seed_str, &pos);
                if (pos != seed_str.size()) throw std::invalid_argument("");
            } catch (...) {
                throw viana::ConfigError("--seed expects an unsigned integer, got '" + seed_str + "'");
            }
        }
        if (threads > 0) cfg.run.threads = threads;
        if (cfg.run.threads > 0) viana::set_default_threads(cfg.run.threads);
        viana::Experiment exp(std::move(cfg));
        const std::string dir = out_dir.empty() ? exp.config().output.directory : out_dir;
        const viana::RunResult res = viana::run_experiment(exp, command, dir);
        std::printf("%s\n", res.summary.c_str());
        for (const std::string& f : res.files) std::printf("  wrote %s\n", f.c_str());
        return res.exit_code;
    } catch (const viana::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return viana::kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return viana::kExitNumeric;
    }
}
