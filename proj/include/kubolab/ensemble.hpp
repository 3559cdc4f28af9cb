#pragma once

#include "kubolab/lattice.hpp"

#include <cstdint>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace kubo {

// splitmix64 step: advances state and returns the next output.
std::uint64_t splitmix64(std::uint64_t& state);

// Seed of realization i: the (i+1)-th splitmix64 output started from master_seed.
std::vector<std::uint64_t> realization_seeds(std::uint64_t master_seed, int n);

struct EnsembleConfig {
    LatticeGeometry geometry;
    DisorderSpec disorder;  // seed field is replaced per realization
    int n_realizations = 1;
    std::uint64_t master_seed = 0;
    std::vector<int> volume_sweep;  // square L x L tori
    int threads = 1;

    void validate() const;
};

struct Realization {
    int index = 0;
    LatticeGeometry geometry;
    DisorderSpec disorder;
};

using Experiment = std::function<double(const Realization&)>;

struct EnsembleStats {
    double mean = 0.0;
    double stderr_value = 0.0;  // sample std / sqrt(n); NaN when n < 2
    int n = 0;
    bool stderr_defined = false;
    std::vector<double> values;           // in realization order
    std::vector<std::uint64_t> seeds;     // in realization order
};

class EnsembleError : public std::runtime_error {
public:
    EnsembleError(const std::string& what, std::uint64_t seed) : std::runtime_error(what), seed_(seed) {}
    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

EnsembleStats run_ensemble(const EnsembleConfig& config, const Experiment& experiment);

// Mean and stderr from values, summed in ascending-seed order.
EnsembleStats aggregate(std::vector<double> values, std::vector<std::uint64_t> seeds);

struct VolumeRow {
    int L = 0;
    EnsembleStats stats;
};

struct VolumeStudy {
    std::vector<VolumeRow> rows;
    std::vector<std::string> warnings;
    double trend_slope = std::nan("");  // slope of log|mean - reference| against L
};

VolumeStudy volume_convergence(const EnsembleConfig& config, const Experiment& experiment,
                               std::optional<double> reference = std::nullopt);

}  // namespace kubo
