#include "kubolab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace kubo {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "run.experiment",      "run.output",         "run.format",        "run.threads",
        "lattice.lx",          "lattice.ly",         "lattice.flux_num",  "lattice.flux_den",
        "disorder.kind",       "disorder.width",     "disorder.seed",     "state.fermi_energy",
        "state.beta",          "response.j",         "response.k",        "response.derivative",
        "response.eta",        "response.eta_grid",  "response.nu_grid",  "dynamics.eta",
        "dynamics.magnitudes", "dynamics.dt",        "dynamics.halving",  "dynamics.t0",
        "dynamics.cutoff",     "dynamics.modulation", "dynamics.nu",      "ensemble.realizations",
        "ensemble.volume_sweep", "ensemble.observable"};
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    if (t == "inf" || t == "infinity") return kInf;
    try {
        std::size_t pos = 0;
        const double d = std::stod(t, &pos);
        if (pos == t.size()) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
}

long long to_integer(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    try {
        std::size_t pos = 0;
        const long long d = std::stoll(t, &pos);
        if (pos == t.size()) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    try {
        std::size_t pos = 0;
        if (!t.empty() && t[0] != '-') {
            const unsigned long long d = std::stoull(t, &pos);
            if (pos == t.size()) return d;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError("config key '" + key + "': expected a nonnegative 64-bit integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string t = trim(v);
    if (!t.empty() && t.front() == '[' && t.back() == ']') t = t.substr(1, t.size() - 2);
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty()) out.push_back(trim(item));
    return out;
}

std::vector<double> to_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
    return out;
}

}  // namespace

const char* experiment_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Streda: return "streda";
        case ExperimentKind::KuboEtaSweep: return "kubo-eta-sweep";
        case ExperimentKind::AcSweep: return "ac-sweep";
        case ExperimentKind::DynamicsVsKubo: return "dynamics-vs-kubo";
        case ExperimentKind::Ensemble: return "ensemble";
        case ExperimentKind::VolumeSweep: return "volume-sweep";
        case ExperimentKind::PropertySuite: return "property-suite";
    }
    return "?";
}

ExperimentKind parse_experiment(const std::string& s) {
    for (auto k : {ExperimentKind::Streda, ExperimentKind::KuboEtaSweep, ExperimentKind::AcSweep,
                   ExperimentKind::DynamicsVsKubo, ExperimentKind::Ensemble, ExperimentKind::VolumeSweep,
                   ExperimentKind::PropertySuite})
        if (s == experiment_name(k)) return k;
    throw ConfigError("config key 'run.experiment': unknown experiment '" + s + "'");
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

FlatConfig parse_ini_text(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    FlatConfig flat;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError("config key '" + section + "' lies outside any [section]");
        for (const auto& [key, value] : body) flat[section + "." + key] = value.get_value<std::string>();
    }
    return flat;
}

FlatConfig parse_json_text(const std::string& text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON config: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("malformed JSON config: top level must be an object of sections");
    FlatConfig flat;
    for (const auto& [section, body] : doc.items()) {
        if (!body.is_object()) throw ConfigError("config key '" + section + "': a section must be an object");
        for (const auto& [key, value] : body.items()) {
            const std::string name = section + "." + key;
            std::string s;
            if (value.is_string()) {
                s = value.get<std::string>();
            } else if (value.is_array()) {
                for (std::size_t i = 0; i < value.size(); ++i) {
                    if (i) s += ",";
                    s += value[i].is_string() ? value[i].get<std::string>() : value[i].dump();
                }
            } else if (value.is_primitive()) {
                s = value.dump();
            } else {
                throw ConfigError("config key '" + name + "': nested objects are not supported");
            }
            flat[name] = s;
        }
    }
    return flat;
}

void ExperimentConfig::validate() const {
    geometry.validate();
    disorder.validate();
    if (threads < 1) throw ConfigError("config key 'run.threads': must be a positive integer");
    if (!(beta > 0.0)) throw ConfigError("config key 'state.beta': must be positive or inf");
    if (!std::isfinite(fermi_energy)) throw ConfigError("config key 'state.fermi_energy': must be finite");
    if (derivative != "minimal-image" && derivative != "spectral")
        throw ConfigError("config key 'response.derivative': expected minimal-image or spectral");
    if (!(eta > 0.0)) throw ConfigError("config key 'response.eta': must be positive");
    for (std::size_t i = 0; i < eta_grid.size(); ++i) {
        if (!(eta_grid[i] > 0.0)) throw ConfigError("config key 'response.eta_grid': values must be positive");
        if (i && !(eta_grid[i] < eta_grid[i - 1]))
            throw ConfigError("config key 'response.eta_grid': values must be strictly descending");
    }
    if (!(dyn_eta > 0.0)) throw ConfigError("config key 'dynamics.eta': must be positive");
    if (magnitudes.size() < 2) throw ConfigError("config key 'dynamics.magnitudes': need at least two values");
    for (std::size_t i = 0; i < magnitudes.size(); ++i)
        if (!(magnitudes[i] > 0.0) || (i && !(magnitudes[i] < magnitudes[i - 1])))
            throw ConfigError("config key 'dynamics.magnitudes': values must be positive and strictly descending");
    if (!(dt > 0.0)) throw ConfigError("config key 'dynamics.dt': must be positive");
    if (!(cutoff > 0.0 && cutoff < 1.0)) throw ConfigError("config key 'dynamics.cutoff': must lie in (0, 1)");
    if (modulation != "constant" && modulation != "cosine")
        throw ConfigError("config key 'dynamics.modulation': expected constant or cosine");
    if (realizations < 1) throw ConfigError("config key 'ensemble.realizations': must be a positive integer");
    if (observable != "streda" && observable != "current-x" && observable != "current-y")
        throw ConfigError("config key 'ensemble.observable': expected streda, current-x or current-y");
    if (experiment == ExperimentKind::VolumeSweep && volume_sweep.empty())
        throw ConfigError("config key 'ensemble.volume_sweep': required for the volume-sweep experiment");
    for (int L : volume_sweep)
        if (L < 1) throw ConfigError("config key 'ensemble.volume_sweep': values must be positive");
}

ExperimentConfig config_from_flat(const FlatConfig& flat) {
    for (const auto& [key, value] : flat)
        if (!known_keys().count(key)) throw ConfigError("config key '" + key + "' is not recognised");
    for (const char* req : {"run.experiment", "lattice.lx", "lattice.ly", "lattice.flux_num", "lattice.flux_den",
                            "state.fermi_energy"})
        if (!flat.count(req)) {
            const std::string r(req);
            throw ConfigError("missing required config key '" + r + "' (" + r.substr(r.find('.') + 1) + ")");
        }
    auto get = [&](const char* key) -> const std::string* {
        auto it = flat.find(key);
        return it == flat.end() ? nullptr : &it->second;
    };
    auto as_int = [](const std::string& key, const std::string& v) {
        const long long x = to_integer(key, v);
        if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
            throw ConfigError("config key '" + key + "': integer out of range");
        return static_cast<int>(x);
    };

    ExperimentConfig c;
    c.experiment = parse_experiment(trim(*get("run.experiment")));
    if (auto v = get("run.output")) c.output = trim(*v);
    if (auto v = get("run.format")) {
        const std::string f = trim(*v);
        if (f == "csv") c.format = OutputFormat::Csv;
        else if (f == "jsonl") c.format = OutputFormat::Jsonl;
        else throw ConfigError("config key 'run.format': expected csv or jsonl");
    }
    if (auto v = get("run.threads")) c.threads = as_int("run.threads", *v);

    c.geometry.lx = as_int("lattice.lx", *get("lattice.lx"));
    c.geometry.ly = as_int("lattice.ly", *get("lattice.ly"));
    c.geometry.flux_num = as_int("lattice.flux_num", *get("lattice.flux_num"));
    c.geometry.flux_den = as_int("lattice.flux_den", *get("lattice.flux_den"));

    if (auto v = get("disorder.kind")) {
        const std::string kind = trim(*v);
        if (kind == "none") c.disorder.kind = DisorderSpec::Kind::None;
        else if (kind == "uniform") c.disorder.kind = DisorderSpec::Kind::UniformOnSite;
        else throw ConfigError("config key 'disorder.kind': expected none or uniform");
    }
    if (auto v = get("disorder.width")) c.disorder.width = to_double("disorder.width", *v);
    if (auto v = get("disorder.seed")) c.disorder.seed = to_seed("disorder.seed", *v);

    c.fermi_energy = to_double("state.fermi_energy", *get("state.fermi_energy"));
    if (auto v = get("state.beta")) c.beta = to_double("state.beta", *v);

    if (auto v = get("response.j")) c.j = parse_axis(trim(*v));
    if (auto v = get("response.k")) c.k = parse_axis(trim(*v));
    if (auto v = get("response.derivative")) c.derivative = trim(*v);
    if (auto v = get("response.eta")) c.eta = to_double("response.eta", *v);
    if (auto v = get("response.eta_grid")) c.eta_grid = to_double_list("response.eta_grid", *v);
    if (auto v = get("response.nu_grid")) c.nu_grid = to_double_list("response.nu_grid", *v);

    if (auto v = get("dynamics.eta")) c.dyn_eta = to_double("dynamics.eta", *v);
    if (auto v = get("dynamics.magnitudes")) c.magnitudes = to_double_list("dynamics.magnitudes", *v);
    if (auto v = get("dynamics.dt")) c.dt = to_double("dynamics.dt", *v);
    if (auto v = get("dynamics.halving")) c.dt_halving = to_bool("dynamics.halving", *v);
    if (auto v = get("dynamics.t0")) c.t0 = to_double("dynamics.t0", *v);
    if (auto v = get("dynamics.cutoff")) c.cutoff = to_double("dynamics.cutoff", *v);
    if (auto v = get("dynamics.modulation")) c.modulation = trim(*v);
    if (auto v = get("dynamics.nu")) c.nu = to_double("dynamics.nu", *v);

    if (auto v = get("ensemble.realizations")) c.realizations = as_int("ensemble.realizations", *v);
    if (auto v = get("ensemble.volume_sweep"))
        for (const auto& s : split_list(*v)) c.volume_sweep.push_back(as_int("ensemble.volume_sweep", s));
    if (auto v = get("ensemble.observable")) c.observable = trim(*v);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    const std::string t = trim(text);
    const bool json = (path.size() >= 5 && path.substr(path.size() - 5) == ".json") || (!t.empty() && t[0] == '{');
    return config_from_flat(json ? parse_json_text(text) : parse_ini_text(text));
}

std::string canonical_json(const ExperimentConfig& c) {
    using nlohmann::json;
    auto num = [](double v) -> json {
        if (std::isfinite(v)) return v;
        return format_double(v);
    };
    json j;
    j["run"] = {{"experiment", experiment_name(c.experiment)},
                {"format", c.format == OutputFormat::Csv ? "csv" : "jsonl"},
                {"output", c.output},
                {"threads", c.threads}};
    j["lattice"] = {{"lx", c.geometry.lx},
                    {"ly", c.geometry.ly},
                    {"flux_num", c.geometry.flux_num},
                    {"flux_den", c.geometry.flux_den}};
    j["disorder"] = {{"kind", c.disorder.kind == DisorderSpec::Kind::None ? "none" : "uniform"},
                     {"width", c.disorder.width},
                     {"seed", c.disorder.seed}};
    j["state"] = {{"fermi_energy", c.fermi_energy}, {"beta", num(c.beta)}};
    j["response"] = {{"j", axis_name(c.j)},           {"k", axis_name(c.k)},           {"derivative", c.derivative},
                     {"eta", c.eta},                  {"eta_grid", c.eta_grid},        {"nu_grid", c.nu_grid}};
    j["dynamics"] = {{"eta", c.dyn_eta},    {"magnitudes", c.magnitudes}, {"dt", c.dt},
                     {"halving", c.dt_halving}, {"t0", c.t0},             {"cutoff", c.cutoff},
                     {"modulation", c.modulation}, {"nu", c.nu}};
    j["ensemble"] = {{"realizations", c.realizations},
                     {"volume_sweep", c.volume_sweep},
                     {"observable", c.observable}};
    return j.dump();
}

}  // namespace kubo
