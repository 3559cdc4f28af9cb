#include <doctest.h>

#include "kubolab/config.hpp"
#include "kubolab/experiments.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace kubo;
namespace fs = std::filesystem;

namespace {

const char* kStreda = R"([run]
experiment = streda
[lattice]
lx = 6
ly = 6
flux_num = 1
flux_den = 3
[disorder]
kind = uniform
width = 0.5
seed = 3
[state]
fermi_energy = -1.5
)";

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::path(KUBOLAB_TEST_OUTPUT_DIR) / "cli_scratch";
    fs::create_directories(dir);
    return dir / name;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const fs::path p = scratch(name);
    std::ofstream(p) << text;
    return p;
}

struct Invocation {
    int code = -1;
    std::string out, err;
};

Invocation invoke(const fs::path& config, const CliOverrides& ov = {}) {
    std::ostringstream out, err;
    Invocation r;
    r.code = run(config.string(), ov, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string header_value(const std::string& text, const std::string& key) {
    std::istringstream is(text);
    std::string line;
    const std::string prefix = "# " + key + ": ";
    while (std::getline(is, line))
        if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
    return "";
}

}  // namespace

TEST_CASE("configuration parsing") {
    SUBCASE("ini and json give the same configuration") {
        const auto a = config_from_flat(parse_ini_text(kStreda));
        const auto b = config_from_flat(parse_json_text(R"({
            "run": {"experiment": "streda"},
            "lattice": {"lx": 6, "ly": 6, "flux_num": 1, "flux_den": 3},
            "disorder": {"kind": "uniform", "width": 0.5, "seed": 3},
            "state": {"fermi_energy": -1.5}})"));
        CHECK(canonical_json(a) == canonical_json(b));
        CHECK(a.geometry.lx == 6);
        CHECK(a.disorder.seed == 3u);
        CHECK(a.fermi_energy == -1.5);
        CHECK(std::isinf(a.beta));
    }
    SUBCASE("lists") {
        auto flat = parse_ini_text(kStreda);
        flat["response.eta_grid"] = "0.1, 0.01, 0.001";
        flat["ensemble.volume_sweep"] = "[6, 9, 12]";
        const auto c = config_from_flat(flat);
        CHECK(c.eta_grid == std::vector<double>{0.1, 0.01, 0.001});
        CHECK(c.volume_sweep == std::vector<int>{6, 9, 12});
    }
    SUBCASE("errors cite the offending key") {
        auto flat = parse_ini_text(kStreda);
        flat.erase("lattice.flux_den");
        CHECK_THROWS_WITH_AS(config_from_flat(flat), doctest::Contains("flux_den"), ConfigError);
        flat = parse_ini_text(kStreda);
        flat["lattice.colour"] = "blue";
        CHECK_THROWS_WITH_AS(config_from_flat(flat), doctest::Contains("lattice.colour"), ConfigError);
        flat = parse_ini_text(kStreda);
        flat["run.experiment"] = "hall-bar";
        CHECK_THROWS_WITH_AS(config_from_flat(flat), doctest::Contains("hall-bar"), ConfigError);
        flat = parse_ini_text(kStreda);
        flat["lattice.lx"] = "six";
        CHECK_THROWS_WITH_AS(config_from_flat(flat), doctest::Contains("lattice.lx"), ConfigError);
        flat = parse_ini_text(kStreda);
        flat["response.eta_grid"] = "0.01, 0.1";
        CHECK_THROWS_WITH_AS(config_from_flat(flat).validate(), doctest::Contains("eta_grid"), ConfigError);
        CHECK_THROWS_AS(parse_json_text("{not json"), ConfigError);
    }
    SUBCASE("hash is stable and sensitive") {
        const auto a = config_from_flat(parse_ini_text(kStreda));
        auto b = a;
        CHECK(fnv1a64(canonical_json(a)) == fnv1a64(canonical_json(b)));
        b.fermi_energy = -1.4;
        CHECK(fnv1a64(canonical_json(a)) != fnv1a64(canonical_json(b)));
        CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
        CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    }
}

TEST_CASE("runner exit codes") {
    SUBCASE("success") {
        const auto r = invoke(write_file("ok.ini", kStreda));
        CHECK(r.code == 0);
        CHECK(r.out.find("streda,6,1,3,") != std::string::npos);
    }
    SUBCASE("missing flux_den") {
        const auto r = invoke(fs::path(KUBOLAB_TEST_DATA_DIR) / "missing_flux_den.ini");
        CHECK(r.code == 1);
        CHECK(r.err.find("flux_den") != std::string::npos);
        CHECK(r.out.empty());
    }
    SUBCASE("unreadable file and invalid geometry") {
        CHECK(invoke(scratch("does_not_exist.ini")).code == 1);
        std::string bad = kStreda;
        bad.replace(bad.find("lx = 6"), 6, "lx = 4");
        const auto r = invoke(write_file("bad_geometry.ini", bad));
        CHECK(r.code == 1);
        CHECK(r.err.find("Lx") != std::string::npos);
    }
    SUBCASE("numerical diagnostic failure") {
        const auto r = invoke(write_file("tiny_field.ini", R"([run]
experiment = dynamics-vs-kubo
[lattice]
lx = 3
ly = 3
flux_num = 1
flux_den = 3
[state]
fermi_energy = -1.5
[dynamics]
eta = 0.01
magnitudes = 1e-3, 1e-14
)"));
        CHECK(r.code == 2);
        CHECK(r.err.find("numerical diagnostic failure") != std::string::npos);
    }
}

TEST_CASE("seed override and provenance") {
    const fs::path cfg = write_file("prov.ini", kStreda);
    const auto base = invoke(cfg);
    CliOverrides ov;
    ov.seed = 7;
    const auto over = invoke(cfg, ov);
    REQUIRE(base.code == 0);
    REQUIRE(over.code == 0);
    CHECK(header_value(base.out, "overrides") == "none");
    CHECK(header_value(over.out, "overrides") == "--seed=7");
    CHECK(header_value(base.out, "seeds").rfind("root=3 ", 0) == 0);
    CHECK(header_value(over.out, "seeds").rfind("root=7 ", 0) == 0);
    CHECK(header_value(base.out, "config_hash") != header_value(over.out, "config_hash"));
    CHECK(header_value(base.out, "config_hash").rfind("fnv1a64:", 0) == 0);

    // the file with seed 7 written in reproduces the override run exactly
    std::string seven = kStreda;
    seven.replace(seven.find("seed = 3"), 8, "seed = 7");
    const auto file7 = invoke(write_file("prov7.ini", seven));
    std::istringstream a(over.out), b(file7.out);
    CHECK(read_csv_rows(a)[0].sigma == read_csv_rows(b)[0].sigma);
    CHECK(header_value(over.out, "config_hash") == header_value(file7.out, "config_hash"));

    // the embedded configuration alone is enough to rerun
    const std::string embedded = header_value(over.out, "config");
    const auto rerun = invoke(write_file("embedded.json", embedded));
    REQUIRE(rerun.code == 0);
    std::istringstream c(over.out), d(rerun.out);
    CHECK(read_csv_rows(c)[0].sigma == read_csv_rows(d)[0].sigma);
}

TEST_CASE("CSV round trip") {
    const fs::path out = scratch("round_trip.csv");
    CliOverrides ov;
    ov.out = out.string();
    REQUIRE(invoke(write_file("rt.ini", kStreda), ov).code == 0);

    const auto c = config_from_flat(parse_ini_text(kStreda));
    const RunOutput direct = run_experiment(c);
    std::ifstream in(out);
    const auto rows = read_csv_rows(in);
    REQUIRE(rows.size() == direct.rows.size());
    const auto& a = rows[0];
    const auto& b = direct.rows[0];
    CHECK(a.experiment == b.experiment);
    CHECK(a.L == b.L);
    CHECK(a.W == b.W);
    CHECK(a.E_F == b.E_F);
    CHECK(std::isinf(a.beta));
    CHECK(a.method == b.method);
    CHECK(a.sigma == b.sigma);
    CHECK(a.two_pi_sigma == b.two_pi_sigma);
    CHECK(a.imag_residue == b.imag_residue);
    CHECK(std::isnan(a.stderr_value));
    CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("JSON lines output") {
    CliOverrides ov;
    ov.format = "jsonl";
    const auto r = invoke(write_file("jl.ini", kStreda), ov);
    REQUIRE(r.code == 0);
    std::istringstream is(r.out);
    std::string line;
    std::vector<nlohmann::json> records;
    while (std::getline(is, line)) records.push_back(nlohmann::json::parse(line));
    REQUIRE(records.size() >= 2);
    CHECK(records[0]["type"] == "provenance");
    CHECK(records[0]["overrides"][0] == "--format=jsonl");
    CHECK(records[0]["seeds"]["root"] == 3);
    CHECK(records[1]["type"] == "result");
    CHECK(records[1]["beta"] == "inf");
    CHECK(records[1]["stderr"].is_null());

    const auto c = config_from_flat(parse_ini_text(kStreda));
    CHECK(records[1]["sigma"].get<double>() == run_experiment(c).rows[0].sigma);
    bool has_diagnostic = false;
    for (const auto& rec : records) has_diagnostic = has_diagnostic || rec["type"] == "diagnostic";
    CHECK(has_diagnostic);
}

TEST_CASE("property suite") {
    const auto r = invoke(write_file("props.ini", R"([run]
experiment = property-suite
[lattice]
lx = 6
ly = 6
flux_num = 1
flux_den = 3
[disorder]
kind = uniform
width = 1.0
seed = 5
[state]
fermi_energy = -1.0
)"));
    CHECK(r.code == 0);
    CHECK(r.out.find("experiment,property,residual,threshold,passed") != std::string::npos);
    CHECK(r.out.find(",false") == std::string::npos);
    CHECK(r.out.find("covariance") != std::string::npos);
}

TEST_CASE("shipped configurations load and validate") {
    int count = 0;
    for (const auto& entry : fs::directory_iterator(KUBOLAB_CONFIG_DIR)) {
        if (entry.path().extension() != ".ini" && entry.path().extension() != ".json") continue;
        CAPTURE(entry.path().string());
        CHECK_NOTHROW(load_config(entry.path().string()).validate());
        ++count;
    }
    CHECK(count >= 1);
}
