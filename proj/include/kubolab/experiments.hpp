#pragma once

#include "kubolab/config.hpp"
#include "kubolab/response.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace kubo {

struct ResultRow {
    std::string experiment;
    int L = 0;
    int flux_num = 0;
    int flux_den = 1;
    double W = 0.0;
    int seed_count = 1;
    double E_F = 0.0;
    double beta = kInf;
    double eta = 0.0;
    double nu = 0.0;
    std::string j = "x";
    std::string k = "y";
    std::string method;
    double sigma = 0.0;
    double two_pi_sigma = 0.0;
    double stderr_value = std::nan("");
    double imag_residue = 0.0;
};

struct PropertyRow {
    std::string property;
    double residual = 0.0;
    double threshold = 0.0;
    bool passed = false;
};

struct Diagnostic {
    std::string name;
    double value = 0.0;
};

struct RunOutput {
    std::vector<ResultRow> rows;
    std::vector<PropertyRow> properties;
    std::vector<Diagnostic> diagnostics;
    std::vector<std::string> warnings;
    bool diagnostic_failure = false;
};

// Builds H and P for the configured sample and runs the named experiment.
RunOutput run_experiment(const ExperimentConfig& config);

// Provenance block and records. CSV carries provenance as leading '#' lines.
void write_csv(std::ostream& os, const ExperimentConfig& config, const RunOutput& out);
void write_jsonl(std::ostream& os, const ExperimentConfig& config, const RunOutput& out);

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> format;
    std::optional<int> threads;
};

// Whole runner: load, override, validate, compute, write. Returns 0, 1 (validation) or 2 (diagnostic).
int run(const std::string& config_path, const CliOverrides& overrides, std::ostream& out, std::ostream& err);

// Reads back a CSV written by write_csv (comment lines skipped).
std::vector<ResultRow> read_csv_rows(std::istream& is);

}  // namespace kubo
