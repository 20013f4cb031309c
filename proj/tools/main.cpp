// sqcav command-line front end: run, validate, list-scenarios.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sqcav/scenario.hpp"

namespace {

int report_error(sqcav::ErrorKind kind, const std::string& message) {
    const int code = sqcav::exit_code(kind);
    nlohmann::json j{{"error", std::string(sqcav::to_string(kind))}, {"message", message}, {"exit_code", code}};
    std::cerr << j.dump() << std::endl;
    return code;
}

void print_diagnostics(const sqcav::Diagnostics& d) {
    std::printf("%10s %8s %12s %12s %12s %10s %8s\n", "delta_c", "r", "omega_p", "omega_s", "margin", "rwa_ratio",
                "N_est");
    for (const auto& p : d.points) {
        std::printf("%10.4g %8.4g %12.6g %12.6g %12.6g %10.4g %8d\n", p.delta_c, p.r, p.omega_p, p.omega_s,
                    p.threshold_margin, p.rwa_ratio, p.estimated_cutoff);
    }
    for (const auto& i : d.issues) {
        std::printf("%s [%s] %s\n", i.fatal ? "error" : "warning", std::string(sqcav::to_string(i.kind)).c_str(),
                    i.message.c_str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Squeezed-cavity single-atom detection simulator"};
    app.require_subcommand(1);

    std::string config_path;
    int threads = 0;
    std::string output;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "Run a scenario config and write CSV output");
    run->add_option("config", config_path, "Config file (key = value)")->required();
    run->add_option("--threads", threads, "Override the worker count")->check(CLI::Range(1, 256));
    run->add_option("-o,--output", output, "Override output_path");
    run->add_flag("-q,--quiet", quiet, "Suppress warnings");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check a config and print derived parameters");
    validate->add_option("config", validate_path, "Config file (key = value)")->required();

    auto* list = app.add_subcommand("list-scenarios", "List built-in scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (list->parsed()) {
            for (const auto& info : sqcav::scenario_catalog()) {
                std::printf("%-8s %s\n", sqcav::to_string(info.kind).c_str(), info.description.c_str());
            }
            return 0;
        }
        if (validate->parsed()) {
            const auto cfg = sqcav::parse_config_file(validate_path);
            const auto diag = sqcav::validate_config(cfg);
            print_diagnostics(diag);
            for (const auto& i : diag.issues) {
                if (i.fatal) return report_error(i.kind, i.message);
            }
            return 0;
        }
        auto cfg = sqcav::parse_config_file(config_path);
        if (threads > 0) cfg.threads = threads;
        if (!output.empty()) cfg.output_path = output;
        const auto diag = sqcav::validate_config(cfg);
        for (const auto& i : diag.issues) {
            if (i.fatal) return report_error(i.kind, i.message);
            if (!quiet) std::cerr << "warning: " << i.message << "\n";
        }
        const auto files = sqcav::run_scenario(cfg);
        std::cout << files.main.string() << "\n";
        for (const auto& w : files.wigner) std::cout << w.string() << "\n";
        return 0;
    } catch (const sqcav::Error& e) {
        return report_error(e.kind(), e.what());
    } catch (const std::exception& e) {
        return report_error(sqcav::ErrorKind::Internal, e.what());
    }
}
