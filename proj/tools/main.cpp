#include "scenarios.hpp"

#include "wavectl/parallel.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iomanip>
#include <iostream>

int main(int argc, char** argv) {
    using namespace wavectl::cli;
    CLI::App app{"Null-control synthesis and verification runner for damped wave equations"};
    app.require_subcommand(1);

    std::string config;
    std::string output;
    std::uint64_t seed = 0;
    int threads = 0;
    auto* run = app.add_subcommand("run", "Run the scenario described by a config file");
    run->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);
    auto* out_opt = run->add_option("--output", output, "Output directory");
    auto* seed_opt = run->add_option("--seed", seed, "Override run.seed");
    run->add_option("--threads", threads, "Worker threads (default: WAVECTL_THREADS or 1)")->check(CLI::PositiveNumber);

    auto* list = app.add_subcommand("list-nonlinearities", "List the registered nonlinearities");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    if (*list) {
        for (const auto& e : registry())
            std::cout << e.kind << "  " << std::left << std::setw(16) << e.name << std::setw(34)
                      << (e.params.empty() ? "-" : e.params) << e.description << '\n';
        return 0;
    }

    if (threads == 0) {
        if (const char* env = std::getenv("WAVECTL_THREADS")) {
            try {
                threads = std::stoi(env);
            } catch (const std::exception&) {
                threads = 0;
            }
            if (threads < 1) {
                std::cerr << "config error: WAVECTL_THREADS must be a positive integer\n";
                return kConfigError;
            }
        } else {
            threads = 1;
        }
    }
    wavectl::set_thread_count(threads);

    RunOptions options;
    options.threads = threads;
    if (*out_opt) options.output_dir = output;
    if (*seed_opt) options.seed = seed;
    const RunOutcome r = run_config_file(config, options);
    if (r.status == kPass)
        std::cout << "pass: artifacts in " << r.directory.string() << '\n';
    else
        std::cerr << r.message << (r.directory.empty() ? "" : " (artifacts in " + r.directory.string() + ")") << '\n';
    return r.status;
}
