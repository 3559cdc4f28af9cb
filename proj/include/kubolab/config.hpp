#pragma once

#include "kubolab/lattice.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kubo {

enum class ExperimentKind { Streda, KuboEtaSweep, AcSweep, DynamicsVsKubo, Ensemble, VolumeSweep, PropertySuite };
enum class OutputFormat { Csv, Jsonl };

const char* experiment_name(ExperimentKind k);
ExperimentKind parse_experiment(const std::string& s);

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Streda;
    std::string output;  // empty: standard output
    OutputFormat format = OutputFormat::Csv;
    int threads = 1;

    LatticeGeometry geometry;
    DisorderSpec disorder;

    double fermi_energy = 0.0;
    double beta = kInf;

    Axis j = Axis::X;
    Axis k = Axis::Y;
    std::string derivative = "minimal-image";  // or "spectral"
    double eta = 1e-2;
    std::vector<double> eta_grid{1e-1, 1e-2, 1e-3, 1e-4};
    std::vector<double> nu_grid{0.5, 1.0};

    double dyn_eta = 1e-2;
    std::vector<double> magnitudes{2e-4, 1e-4};
    double dt = 0.5;
    bool dt_halving = true;
    double t0 = 0.0;
    double cutoff = 1e-8;
    std::string modulation = "constant";  // or "cosine"
    double nu = 0.0;

    int realizations = 1;
    std::vector<int> volume_sweep;
    std::string observable = "streda";  // streda, current-x, current-y

    // Overrides applied on top of the file, in the order given, for the provenance record.
    std::vector<std::string> overrides;

    void validate() const;
};

// Flat "section.key" -> value map from either encoding.
using FlatConfig = std::map<std::string, std::string>;
FlatConfig parse_ini_text(const std::string& text);
FlatConfig parse_json_text(const std::string& text);

ExperimentConfig config_from_flat(const FlatConfig& flat);
ExperimentConfig load_config(const std::string& path);

// Canonical JSON of the resolved configuration (stable key order, 17 significant digits).
std::string canonical_json(const ExperimentConfig& c);

std::string format_double(double v);
std::uint64_t fnv1a64(const std::string& s);

}  // namespace kubo
