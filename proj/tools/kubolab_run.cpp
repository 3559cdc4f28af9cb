#include "kubolab/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Linear-response experiments on disordered magnetic lattices"};
    std::string config;
    kubo::CliOverrides ov;
    app.add_option("config", config, "Experiment configuration (INI-style sections or JSON)")->required();
    app.add_option("--seed", ov.seed, "Root seed, overrides [disorder] seed");
    app.add_option("--out", ov.out, "Output path (default: standard output)");
    app.add_option("--format", ov.format, "Output format")->check(CLI::IsMember({"csv", "jsonl"}));
    app.add_option("--threads", ov.threads, "Worker threads for ensembles and field runs")->check(CLI::PositiveNumber);
    app.set_version_flag("--version", std::string(KUBOLAB_VERSION));
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    return kubo::run(config, ov, std::cout, std::cerr);
}
