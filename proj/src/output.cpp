#include "kubolab/experiments.hpp"

#include "kubolab/dynamics.hpp"
#include "kubolab/ensemble.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace kubo {

namespace {

const char* kColumns =
    "experiment,L,flux_num,flux_den,W,seed_count,E_F,beta,eta,nu,j,k,method,sigma,two_pi_sigma,stderr,imag_residue";

std::string hash_hex(const ExperimentConfig& c) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_json(c))));
    return buf;
}

std::string overrides_text(const ExperimentConfig& c) {
    if (c.overrides.empty()) return "none";
    std::string s;
    for (const auto& o : c.overrides) s += (s.empty() ? "" : " ") + o;
    return s;
}

int seed_count(const ExperimentConfig& c) {
    return (c.experiment == ExperimentKind::Ensemble || c.experiment == ExperimentKind::VolumeSweep) ? c.realizations
                                                                                                      : 1;
}

nlohmann::json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return format_double(v);
}

}  // namespace

void write_csv(std::ostream& os, const ExperimentConfig& c, const RunOutput& out) {
    os << "# kubolab-run " << KUBOLAB_VERSION << '\n';
    os << "# experiment: " << experiment_name(c.experiment) << '\n';
    os << "# config_hash: fnv1a64:" << hash_hex(c) << '\n';
    os << "# seeds: root=" << c.disorder.seed << " realizations=" << seed_count(c)
       << " derivation=splitmix64(root)\n";
    os << "# overrides: " << overrides_text(c) << '\n';
    os << "# config: " << canonical_json(c) << '\n';
    for (const auto& w : out.warnings) os << "# warning: " << w << '\n';
    for (const auto& d : out.diagnostics) os << "# diagnostic: " << d.name << '=' << format_double(d.value) << '\n';
    if (c.experiment == ExperimentKind::PropertySuite) {
        os << "experiment,property,residual,threshold,passed\n";
        for (const auto& p : out.properties)
            os << experiment_name(c.experiment) << ',' << p.property << ',' << format_double(p.residual) << ','
               << format_double(p.threshold) << ',' << (p.passed ? "true" : "false") << '\n';
        return;
    }
    os << kColumns << '\n';
    for (const auto& r : out.rows) {
        os << r.experiment << ',' << r.L << ',' << r.flux_num << ',' << r.flux_den << ',' << format_double(r.W) << ','
           << r.seed_count << ',' << format_double(r.E_F) << ',' << format_double(r.beta) << ','
           << format_double(r.eta) << ',' << format_double(r.nu) << ',' << r.j << ',' << r.k << ',' << r.method << ','
           << format_double(r.sigma) << ',' << format_double(r.two_pi_sigma) << ',' << format_double(r.stderr_value)
           << ',' << format_double(r.imag_residue) << '\n';
    }
}

void write_jsonl(std::ostream& os, const ExperimentConfig& c, const RunOutput& out) {
    using nlohmann::json;
    json prov;
    prov["type"] = "provenance";
    prov["version"] = KUBOLAB_VERSION;
    prov["config_hash"] = "fnv1a64:" + hash_hex(c);
    prov["seeds"] = {{"root", c.disorder.seed}, {"realizations", seed_count(c)}, {"derivation", "splitmix64(root)"}};
    prov["overrides"] = c.overrides;
    prov["config"] = json::parse(canonical_json(c));
    prov["warnings"] = out.warnings;
    os << prov.dump() << '\n';
    for (const auto& r : out.rows) {
        json j;
        j["type"] = "result";
        j["experiment"] = r.experiment;
        j["L"] = r.L;
        j["flux_num"] = r.flux_num;
        j["flux_den"] = r.flux_den;
        j["W"] = number(r.W);
        j["seed_count"] = r.seed_count;
        j["E_F"] = number(r.E_F);
        j["beta"] = number(r.beta);
        j["eta"] = number(r.eta);
        j["nu"] = number(r.nu);
        j["j"] = r.j;
        j["k"] = r.k;
        j["method"] = r.method;
        j["sigma"] = number(r.sigma);
        j["two_pi_sigma"] = number(r.two_pi_sigma);
        j["stderr"] = number(r.stderr_value);
        j["imag_residue"] = number(r.imag_residue);
        os << j.dump() << '\n';
    }
    for (const auto& p : out.properties)
        os << json{{"type", "property"},
                   {"property", p.property},
                   {"residual", number(p.residual)},
                   {"threshold", number(p.threshold)},
                   {"passed", p.passed}}
                  .dump()
           << '\n';
    for (const auto& d : out.diagnostics)
        os << json{{"type", "diagnostic"}, {"name", d.name}, {"value", number(d.value)}}.dump() << '\n';
}

std::vector<ResultRow> read_csv_rows(std::istream& is) {
    std::vector<ResultRow> rows;
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) f.push_back(item);
        if (f.size() != 17) throw ConfigError("csv: expected 17 columns, got " + std::to_string(f.size()));
        ResultRow r;
        r.experiment = f[0];
        r.L = std::stoi(f[1]);
        r.flux_num = std::stoi(f[2]);
        r.flux_den = std::stoi(f[3]);
        r.W = std::stod(f[4]);
        r.seed_count = std::stoi(f[5]);
        r.E_F = std::stod(f[6]);
        r.beta = std::stod(f[7]);
        r.eta = std::stod(f[8]);
        r.nu = std::stod(f[9]);
        r.j = f[10];
        r.k = f[11];
        r.method = f[12];
        r.sigma = std::stod(f[13]);
        r.two_pi_sigma = std::stod(f[14]);
        r.stderr_value = std::stod(f[15]);
        r.imag_residue = std::stod(f[16]);
        rows.push_back(r);
    }
    return rows;
}

int run(const std::string& config_path, const CliOverrides& ov, std::ostream& out, std::ostream& err) {
    ExperimentConfig c;
    try {
        c = load_config(config_path);
        if (ov.seed) {
            c.disorder.seed = *ov.seed;
            c.overrides.push_back("--seed=" + std::to_string(*ov.seed));
        }
        if (ov.out) {
            c.output = *ov.out;
            c.overrides.push_back("--out=" + *ov.out);
        }
        if (ov.format) {
            if (*ov.format == "csv") c.format = OutputFormat::Csv;
            else if (*ov.format == "jsonl") c.format = OutputFormat::Jsonl;
            else throw ConfigError("--format: expected csv or jsonl");
            c.overrides.push_back("--format=" + *ov.format);
        }
        if (ov.threads) {
            c.threads = *ov.threads;
            c.overrides.push_back("--threads=" + std::to_string(*ov.threads));
        }
        c.validate();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    RunOutput result;
    try {
        result = run_experiment(c);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const StructureError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const StateError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "numerical diagnostic failure: " << e.what() << '\n';
        return 2;
    }

    std::ofstream file;
    std::ostream* os = &out;
    if (!c.output.empty()) {
        file.open(c.output);
        if (!file) {
            err << "error: cannot write output file '" << c.output << "'\n";
            return 1;
        }
        os = &file;
    }
    if (c.format == OutputFormat::Csv) write_csv(*os, c, result);
    else write_jsonl(*os, c, result);

    for (const auto& w : result.warnings) err << "warning: " << w << '\n';
    if (result.diagnostic_failure) {
        err << "numerical diagnostic failure: at least one property check exceeded its threshold\n";
        return 2;
    }
    return 0;
}

}  // namespace kubo
