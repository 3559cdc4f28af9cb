// Acceptance runner: one PASS/FAIL line per criterion, followed by the measured numbers.
#include "harper_oracle.hpp"
#include "kubolab/dynamics.hpp"
#include "kubolab/ensemble.hpp"
#include "kubolab/ncalg.hpp"
#include "kubolab/response.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace kubo;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

LatticeGeometry geom(int l, int p, int q) {
    LatticeGeometry g;
    g.lx = l;
    g.ly = l;
    g.flux_num = p;
    g.flux_den = q;
    return g;
}

struct Sample {
    LatticeGeometry g;
    DisplacementTable table;
    Spectrum spectrum;

    Sample(const LatticeGeometry& geo, const DisorderSpec& d)
        : g(geo), table(geo), spectrum(eigendecompose(build_hamiltonian(geo, d).hamiltonian)) {}
};

double quantum(double e) { return oracle::harper_gap_chern(1, 3, oracle::bands_below(1, 3, e)); }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

CMatrix random_matrix(int n, std::mt19937_64& gen) {
    std::normal_distribution<double> d;
    CMatrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = cplx(d(gen), d(gen));
    return m;
}

LatticeGeometry chain(int n) {
    LatticeGeometry g;
    g.lx = n;
    g.ly = 1;
    return g;
}

// --- 1 ---------------------------------------------------------------------------------------------

Outcome algebra_suite() {
    std::mt19937_64 gen(20261015);
    double cyc = 0, shift = 0, adjoint = 0, hoelder = 0, probe = 0, jacobi = 0;
    const std::vector<std::array<double, 3>> triples{{2, 2, 1}, {kInf, 2, 2}, {4, 4, 2}, {3, 1.5, 1}};
    const auto t = [](const CMatrix& m) { return trace_per_volume(LatticeOperator::make(chain(int(m.rows())), m)).value; };
    for (int n : {4, 16, 64}) {
        const auto op = [n](const CMatrix& m) { return LatticeOperator::make(chain(n), m); };
        for (int trial = 0; trial < 50; ++trial) {
            const CMatrix a = random_matrix(n, gen), b = random_matrix(n, gen), c = random_matrix(n, gen);
            CMatrix h = random_matrix(n, gen);
            h = (0.5 * (h + h.adjoint())).eval();
            cyc = std::max(cyc, std::abs(t(a * b) - t(b * a)));
            shift = std::max(shift, std::abs(t(commutator(op(c), op(a)).matrix * b) - t(c * commutator(op(a), op(b)).matrix)));
            adjoint = std::max(adjoint, std::abs(t(commutator(op(h), op(a)).matrix * b) + t(a * commutator(op(h), op(b)).matrix)));
            for (const auto& [p, q, r] : triples)
                hoelder = std::max(hoelder, lp_norm(op(a * b), r).value - lp_norm(op(a), p).value * lp_norm(op(b), q).value);
            // every matrix-unit probe T(A E_cr) = A_rc / N; the probes rebuild A
            CMatrix rebuilt(n, n);
            for (int r = 0; r < n; ++r)
                for (int col = 0; col < n; ++col) {
                    CMatrix unit = CMatrix::Zero(n, n);
                    unit(col, r) = 1.0;
                    const cplx tr = a.cwiseProduct(unit.transpose()).sum() / double(n);
                    rebuilt(r, col) = double(n) * tr;
                }
            probe = std::max(probe, lp_norm(op(rebuilt - a), 2.0).value);
            const CMatrix jac = commutator(op(a), commutator(op(b), op(c))).matrix +
                                commutator(op(b), commutator(op(c), op(a))).matrix +
                                commutator(op(c), commutator(op(a), op(b))).matrix;
            jacobi = std::max(jacobi, jac.cwiseAbs().maxCoeff());
        }
    }
    hoelder = std::max(hoelder, 0.0);
    const double worst = std::max({cyc, shift, adjoint, hoelder, probe, jacobi});
    return {worst < 1e-10, "cyclicity " + fmt(cyc) + ", commutator shift " + fmt(shift) + ", inner derivation " +
                               fmt(adjoint) + ", Hoelder excess " + fmt(hoelder) + ", probe " + fmt(probe) +
                               ", Jacobi " + fmt(jacobi) + " (all < 1e-10)"};
}

// --- 2 ---------------------------------------------------------------------------------------------

Outcome streda_quantization() {
    bool ok = true;
    std::string d;
    for (auto [l, tol] : {std::pair{12, 1e-3}, std::pair{24, 1e-5}}) {
        const Sample s(geom(l, 1, 3), DisorderSpec::none());
        for (double e : {-1.5, 1.5}) {
            const double v = streda_conductivity(fermi_state(s.spectrum, kInf, e), s.table, Axis::X, Axis::Y).two_pi();
            const double dev = std::abs(v - quantum(e));
            ok = ok && dev < tol;
            d += "L=" + std::to_string(l) + " E_F=" + fmt(e) + ": 2 pi sigma " + fmt(v) + " vs " + fmt(quantum(e)) +
                 " (|dev| " + fmt(dev) + ", tol " + fmt(tol) + "); ";
        }
    }
    return {ok, d};
}

// --- 3 ---------------------------------------------------------------------------------------------

Outcome triple_commutator() {
    double r[2];
    int i = 0;
    for (int l : {12, 24}) {
        const Sample s(geom(l, 1, 3), DisorderSpec::none());
        const auto p = fermi_state(s.spectrum, kInf, -1.5);
        r[i++] = std::max(triple_commutator_residual(p, s.table, Axis::X).residual,
                          triple_commutator_residual(p, s.table, Axis::Y).residual);
    }
    return {r[0] < 1e-6 && r[1] < r[0],
            "residual L=12 " + fmt(r[0]) + " (tol 1e-6), L=24 " + fmt(r[1]) + (r[1] < r[0] ? " (smaller)" : " (not smaller)")};
}

// --- 4 ---------------------------------------------------------------------------------------------

Outcome antisymmetry() {
    double st_anti = 0, st_diag = 0, kb_anti = 0, kb_diag = 0;
    for (const auto& [g, d] : {std::pair{geom(12, 1, 3), DisorderSpec::none()}, std::pair{geom(9, 1, 3), DisorderSpec::uniform(1.0, 17)}}) {
        const Sample s(g, d);
        const auto p = fermi_state(s.spectrum, kInf, -1.5);
        st_anti = std::max(st_anti, std::abs(streda_conductivity(p, s.table, Axis::X, Axis::Y).value +
                                             streda_conductivity(p, s.table, Axis::Y, Axis::X).value));
        for (Axis a : {Axis::X, Axis::Y}) {
            st_diag = std::max(st_diag, std::abs(streda_conductivity(p, s.table, a, a).value));
            kb_diag = std::max(kb_diag, std::abs(kubo_conductivity_eta(s.spectrum, p, s.table, a, a, 1e-3).value));
        }
        kb_anti = std::max(kb_anti, std::abs(kubo_conductivity_eta(s.spectrum, p, s.table, Axis::X, Axis::Y, 1e-3).value +
                                             kubo_conductivity_eta(s.spectrum, p, s.table, Axis::Y, Axis::X, 1e-3).value));
    }
    const bool ok = st_anti < 1e-12 && st_diag < 1e-12 && kb_anti < 1e-8 && kb_diag < 1e-8;
    return {ok, "Streda |s_xy+s_yx| " + fmt(st_anti) + ", |s_jj| " + fmt(st_diag) + " (tol 1e-12); Kubo eta=1e-3 |s_xy+s_yx| " +
                    fmt(kb_anti) + ", |s_jj| " + fmt(kb_diag) + " (tol 1e-8)"};
}

// --- 5 ---------------------------------------------------------------------------------------------

Outcome zero_field() {
    EnsembleConfig c;
    c.geometry = geom(12, 0, 1);
    c.disorder = DisorderSpec::uniform(1.0, 0);
    c.n_realizations = 16;
    c.master_seed = 20261015;
    const auto st = run_ensemble(c, [](const Realization& r) {
        const Sample s(r.geometry, r.disorder);
        return streda_conductivity(fermi_state(s.spectrum, kInf, -1.0), s.table, Axis::X, Axis::Y).two_pi();
    });
    double largest = 0;
    for (double v : st.values) largest = std::max(largest, std::abs(v));
    return {std::abs(st.mean) < 3 * st.stderr_value && st.stderr_value < 1e-3,
            "Streda, 12x12, E_F=-1, 16 seeds: mean 2 pi sigma_xy " + fmt(st.mean) + ", stderr " + fmt(st.stderr_value) +
                ", largest |value| " + fmt(largest) + " (|mean| < 3 stderr, stderr < 1e-3)"};
}

// --- 6 ---------------------------------------------------------------------------------------------

Outcome eta_limit() {
    const Sample s(geom(12, 1, 3), DisorderSpec::none());
    const auto study = eta_limit_study(s.spectrum, fermi_state(s.spectrum, kInf, -1.5), s.table, Axis::X, Axis::Y,
                                       {1e-1, 1e-2, 1e-3, 1e-4});
    std::string d = "|sigma(eta) - sigma_Streda|:";
    for (const auto& r : study.rows) d += " " + fmt(r.eta) + "->" + fmt(r.deviation);
    d += study.monotone ? " (monotone)" : " (not monotone)";
    return {study.monotone && study.rows.back().deviation < 1e-4, d};
}

// --- 7, 8 ------------------------------------------------------------------------------------------

// nu = 0 runs the constant protocol, any other nu the cosine one
Outcome dynamics_vs_kubo(const std::vector<double>& nus) {
    const Sample s(geom(9, 1, 3), DisorderSpec::none());
    const auto p = fermi_state(s.spectrum, kInf, -1.5);
    bool ok = true;
    std::string d;
    for (double nu : nus) {
        DynamicsSetup setup;
        setup.spectrum = &s.spectrum;
        setup.zeta = &p;
        setup.table = &s.table;
        setup.modulation = nu == 0.0 ? Modulation::constant() : Modulation::cosine(nu);
        const auto r = numeric_sigma_halving(setup, Axis::X, Axis::Y, 1e-2, {2e-4, 1e-4}, 0.5);
        const double k = kubo_conductivity_eta(s.spectrum, p, s.table, Axis::X, Axis::Y, 1e-2, nu).value;
        const double rel = std::abs(r.value - k) / std::abs(k);
        ok = ok && rel < 0.02;
        d += "nu=" + fmt(nu) + ": numeric " + fmt(r.value) + " (dt " + fmt(r.time_step) + ") vs Kubo " + fmt(k) +
             ", rel " + fmt(rel) + "; ";
    }
    return {ok, d + "tol 2%"};
}

// --- 9 ---------------------------------------------------------------------------------------------

Outcome liouville() {
    const Sample s(geom(6, 1, 3), DisorderSpec::none());
    const auto p = fermi_state(s.spectrum, kInf, -1.5);
    FieldProtocol f;
    f.eta = 0.1;
    f.E = {1e-3, 0.0};
    const auto u = evolve(s.spectrum.hamiltonian, s.table, f, start_time_for_cutoff(f), 0.0, 0.25);
    const auto rho = evolve_state(p, u);
    double norm_dev = 0;
    for (double q : {1.0, 2.0, kInf})
        norm_dev = std::max(norm_dev, std::abs(lp_norm(rho.matrix, q).value - lp_norm(p.matrix, q).value));
    const double idem = idempotency_defect(rho);
    const Vec2 j = equilibrium_current(s.spectrum, p, s.table);
    const double jeq = std::max(std::abs(j[0]), std::abs(j[1]));
    return {norm_dev < 1e-10 && idem < 1e-10 && jeq < 1e-10,
            "norm deviation " + fmt(norm_dev) + ", |rho^2-rho| " + fmt(idem) + ", equilibrium current " + fmt(jeq) +
                " (all < 1e-10)"};
}

// --- 10 --------------------------------------------------------------------------------------------

Outcome duhamel() {
    const Sample s(geom(6, 1, 3), DisorderSpec::none());
    const auto p = fermi_state(s.spectrum, kInf, -1.5);
    std::vector<double> x, y;
    std::string d;
    for (double e : {1e-2, 1e-3, 1e-4}) {
        FieldProtocol f;
        f.eta = 0.5;
        f.E = {e, 0.5 * e};
        QuadratureGrid grid;
        grid.t_start = start_time_for_cutoff(f);
        const auto dh = duhamel_state(s.spectrum, p, s.table, f, 0.0, grid);
        const auto rho = evolve_state(p, evolve(s.spectrum.hamiltonian, s.table, f, grid.t_start, 0.0, 0.1));
        const double diff = (dh.state.matrix.matrix - rho.matrix.matrix).norm() / 6.0 / e;
        x.push_back(std::log(e));
        y.push_back(std::log(diff));
        d += fmt(e) + "->" + fmt(diff) + " ";
    }
    const double slope = least_squares_slope(x, y);
    return {std::abs(slope - 1.0) < 0.1, "|duhamel - evolved|_2/|E|: " + d + "slope " + fmt(slope) + " (1 +- 0.1)"};
}

// --- 11 --------------------------------------------------------------------------------------------

Outcome covariance() {
    const auto g = geom(6, 1, 3);
    std::mt19937_64 gen(20261015);
    std::uniform_int_distribution<int> coord(-11, 11);
    double cov = 0;
    bool exact = true;
    for (int trial = 0; trial < 20; ++trial) {
        const std::uint64_t seed = gen();
        const Shift a{coord(gen), coord(gen)};
        const auto built = build_hamiltonian(g, DisorderSpec::uniform(1.0, seed));
        const auto shifted = hamiltonian_from_field(disorder_shift(built.disorder, a));
        cov = std::max(cov, (conjugate(magnetic_translation(g, a), built.hamiltonian).matrix - shifted.matrix)
                                .cwiseAbs()
                                .maxCoeff());
        const auto again = build_hamiltonian(g, DisorderSpec::uniform(1.0, seed));
        exact = exact && (again.hamiltonian.matrix.array() == built.hamiltonian.matrix.array()).all();
    }
    EnsembleConfig c;
    c.geometry = g;
    c.disorder = DisorderSpec::uniform(1.0, 0);
    c.n_realizations = 16;
    c.master_seed = 20261015;
    const auto obs = [](const Realization& r) {
        const Sample s(r.geometry, r.disorder);
        return streda_conductivity(fermi_state(s.spectrum, kInf, -1.5), s.table, Axis::X, Axis::Y).value;
    };
    const auto one = run_ensemble(c, obs);
    c.threads = 4;
    const auto four = run_ensemble(c, obs);
    exact = exact && one.values == four.values && one.mean == four.mean;
    return {cov < 1e-12 && exact, "covariance residual " + fmt(cov) + " (tol 1e-12), determinism " +
                                      (exact ? "bit-exact" : "broken") + " across rebuilds and thread counts"};
}

// --- 12 --------------------------------------------------------------------------------------------

Outcome ensemble_statistics() {
    bool ok = true;
    std::string d;
    for (int l : {6, 9, 12}) {
        EnsembleConfig c;
        c.geometry = geom(l, 1, 3);
        c.disorder = DisorderSpec::uniform(1.0, 0);
        c.master_seed = 20261015;
        const auto obs = [](const Realization& r) {
            const Sample s(r.geometry, r.disorder);
            return equilibrium_current(s.spectrum, fermi_state(s.spectrum, kInf, -1.0), s.table)[0];
        };
        c.n_realizations = 64;
        const auto small = run_ensemble(c, obs);
        c.n_realizations = 256;
        const auto large = run_ensemble(c, obs);
        const bool zero = std::abs(small.mean) < 2 * small.stderr_value && std::abs(large.mean) < 2 * large.stderr_value;
        const double ratio = small.stderr_value / large.stderr_value;
        const bool scaling = std::abs(ratio / 2.0 - 1.0) < 0.2;
        ok = ok && zero && scaling;
        d += "L=" + std::to_string(l) + ": mean/stderr " + fmt(small.mean / small.stderr_value) + " (n=64), " +
             fmt(large.mean / large.stderr_value) + " (n=256), stderr ratio " + fmt(ratio) + "; ";
    }
    return {ok, d + "|mean| < 2 stderr, ratio 2 within 20%"};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "algebra suite", algebra_suite},
        {2, "Streda quantization", streda_quantization},
        {3, "triple commutator identity", triple_commutator},
        {4, "antisymmetry and zero diagonal", antisymmetry},
        {5, "zero-field vanishing", zero_field},
        {6, "eta -> 0 convergence", eta_limit},
        {7, "dynamics vs Kubo", [] { return dynamics_vs_kubo({0.0}); }},
        {8, "AC agreement", [] { return dynamics_vs_kubo({0.5, 1.0}); }},
        {9, "Liouville solution properties", liouville},
        {10, "Duhamel consistency", duhamel},
        {11, "covariance and determinism", covariance},
        {12, "volume and ensemble statistics", ensemble_statistics},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
