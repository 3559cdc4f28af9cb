#include "kubolab/ensemble.hpp"

#include "kubolab/response.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

namespace kubo {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<std::uint64_t> realization_seeds(std::uint64_t master_seed, int n) {
    std::vector<std::uint64_t> out(std::max(0, n));
    std::uint64_t state = master_seed;
    for (auto& s : out) s = splitmix64(state);
    return out;
}

void EnsembleConfig::validate() const {
    geometry.validate();
    disorder.validate();
    if (n_realizations < 1) throw ConfigError("ensemble: realizations must be a positive integer");
    if (threads < 1) throw ConfigError("ensemble: threads must be a positive integer");
    for (int L : volume_sweep)
        if (L < 1) throw ConfigError("ensemble: volume_sweep entries must be positive");
}

EnsembleStats aggregate(std::vector<double> values, std::vector<std::uint64_t> seeds) {
    EnsembleStats st;
    st.n = static_cast<int>(values.size());
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return seeds[a] < seeds[b]; });
    double sum = 0.0;
    for (std::size_t i : order) sum += values[i];
    st.mean = st.n > 0 ? sum / st.n : std::nan("");
    if (st.n >= 2) {
        double ss = 0.0;
        for (std::size_t i : order) ss += (values[i] - st.mean) * (values[i] - st.mean);
        st.stderr_value = std::sqrt(ss / (st.n - 1)) / std::sqrt(static_cast<double>(st.n));
        st.stderr_defined = true;
    } else {
        st.stderr_value = std::nan("");
    }
    st.values = std::move(values);
    st.seeds = std::move(seeds);
    return st;
}

EnsembleStats run_ensemble(const EnsembleConfig& config, const Experiment& experiment) {
    config.validate();
    const int n = config.n_realizations;
    const std::vector<std::uint64_t> seeds = realization_seeds(config.master_seed, n);
    std::vector<double> values(n, 0.0);
    std::vector<std::exception_ptr> failures(n);

    const int threads = std::max(1, std::min(config.threads, n));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            Realization r{i, config.geometry, config.disorder};
            r.disorder.seed = seeds[i];
            try {
                values[i] = experiment(r);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (int i = 0; i < n; ++i) {
        if (!failures[i]) continue;
        std::string what = "unknown error";
        try {
            std::rethrow_exception(failures[i]);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        throw EnsembleError("ensemble: realization " + std::to_string(i) + " (seed " + std::to_string(seeds[i]) +
                                ") failed: " + what,
                            seeds[i]);
    }
    return aggregate(std::move(values), seeds);
}

VolumeStudy volume_convergence(const EnsembleConfig& config, const Experiment& experiment,
                               std::optional<double> reference) {
    VolumeStudy study;
    std::vector<double> xs, ys;
    for (int L : config.volume_sweep) {
        EnsembleConfig c = config;
        c.geometry.lx = L;
        c.geometry.ly = L;
        c.volume_sweep.clear();
        try {
            c.geometry.validate();
        } catch (const ConfigError& e) {
            study.warnings.push_back("skipping L = " + std::to_string(L) + ": " + e.what());
            continue;
        }
        VolumeRow row{L, run_ensemble(c, experiment)};
        if (reference) {
            const double dev = std::abs(row.stats.mean - *reference);
            if (dev > 0) {
                xs.push_back(L);
                ys.push_back(std::log(dev));
            }
        }
        study.rows.push_back(std::move(row));
    }
    study.trend_slope = least_squares_slope(xs, ys);
    return study;
}

}  // namespace kubo
