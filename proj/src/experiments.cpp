#include "kubolab/experiments.hpp"

#include "kubolab/dynamics.hpp"
#include "kubolab/ensemble.hpp"
#include "kubolab/ncalg.hpp"

#include <cmath>
#include <random>

namespace kubo {

namespace {

struct Sample {
    LatticeOperator h;
    DisorderField field;
    Spectrum spectrum;
    DensityState zeta;
    DisplacementTable table;
};

Sample make_sample(const LatticeGeometry& geom, const DisorderSpec& disorder, double beta, double fermi_energy) {
    BuiltHamiltonian b = build_hamiltonian(geom, disorder);
    Spectrum s = eigendecompose(b.hamiltonian);
    DensityState z = fermi_state(s, beta, fermi_energy);
    return {std::move(b.hamiltonian), std::move(b.disorder), std::move(s), std::move(z), DisplacementTable(geom)};
}

ResultRow base_row(const ExperimentConfig& c, const LatticeGeometry& g) {
    ResultRow r;
    r.experiment = experiment_name(c.experiment);
    r.L = g.lx;
    r.flux_num = g.flux_num;
    r.flux_den = g.flux_den;
    r.W = c.disorder.effective_width();
    r.E_F = c.fermi_energy;
    r.beta = c.beta;
    r.j = axis_name(c.j);
    r.k = axis_name(c.k);
    return r;
}

ResultRow conductivity_row(const ExperimentConfig& c, const LatticeGeometry& g, const ConductivityResult& res) {
    ResultRow r = base_row(c, g);
    r.eta = res.eta;
    r.nu = res.nu;
    r.j = axis_name(res.j);
    r.k = axis_name(res.k);
    r.method = method_name(res.method);
    r.sigma = res.value;
    r.two_pi_sigma = res.two_pi();
    r.stderr_value = res.stderr_value;
    r.imag_residue = res.imag_residue;
    return r;
}

ConductivityResult streda(const ExperimentConfig& c, const Sample& s) {
    if (c.derivative == "spectral") return streda_conductivity(s.spectrum, s.zeta, s.table, c.j, c.k);
    return streda_conductivity(s.zeta, s.table, c.j, c.k);
}

void require_projection_config(const ExperimentConfig& c) {
    if (!std::isinf(c.beta))
        throw StateError("experiment '" + std::string(experiment_name(c.experiment)) +
                         "' needs a Fermi projection (state.beta = inf)");
}

void note_state_warnings(const Sample& s, RunOutput& out) {
    if (s.zeta.boundary_warning)
        out.warnings.push_back("Fermi energy coincides with an eigenvalue; the closed interval was used");
}

RunOutput run_streda(const ExperimentConfig& c) {
    require_projection_config(c);
    RunOutput out;
    const Sample s = make_sample(c.geometry, c.disorder, c.beta, c.fermi_energy);
    note_state_warnings(s, out);
    out.rows.push_back(conductivity_row(c, c.geometry, streda(c, s)));
    const auto tc = c.derivative == "spectral" ? triple_commutator_residual(s.spectrum, s.zeta, s.table, c.k)
                                               : triple_commutator_residual(s.zeta, s.table, c.k);
    out.diagnostics.push_back({"triple_commutator_residual", tc.residual});
    out.diagnostics.push_back({"ambiguous_shell_mass", derivation(s.zeta.matrix, s.table, c.k).ambiguous_mass});
    return out;
}

RunOutput run_kubo_sweep(const ExperimentConfig& c) {
    RunOutput out;
    const Sample s = make_sample(c.geometry, c.disorder, c.beta, c.fermi_energy);
    note_state_warnings(s, out);
    for (double eta : c.eta_grid)
        out.rows.push_back(conductivity_row(c, c.geometry, kubo_conductivity_eta(s.spectrum, s.zeta, s.table, c.j, c.k, eta)));
    if (std::isinf(c.beta)) {
        out.rows.push_back(conductivity_row(c, c.geometry, streda(c, s)));
        const EtaLimitStudy st = eta_limit_study(s.spectrum, s.zeta, s.table, c.j, c.k, c.eta_grid);
        out.diagnostics.push_back({"eta_limit_fitted_order", st.fitted_order});
        out.diagnostics.push_back({"eta_limit_monotone", st.monotone ? 1.0 : 0.0});
    }
    return out;
}

RunOutput run_ac_sweep(const ExperimentConfig& c) {
    RunOutput out;
    const Sample s = make_sample(c.geometry, c.disorder, c.beta, c.fermi_energy);
    note_state_warnings(s, out);
    for (double nu : c.nu_grid)
        out.rows.push_back(
            conductivity_row(c, c.geometry, kubo_conductivity_eta(s.spectrum, s.zeta, s.table, c.j, c.k, c.eta, nu)));
    return out;
}

RunOutput run_dynamics(const ExperimentConfig& c) {
    RunOutput out;
    const Sample s = make_sample(c.geometry, c.disorder, c.beta, c.fermi_energy);
    note_state_warnings(s, out);
    DynamicsSetup setup;
    setup.spectrum = &s.spectrum;
    setup.zeta = &s.zeta;
    setup.table = &s.table;
    setup.modulation = c.modulation == "cosine" ? Modulation::cosine(c.nu) : Modulation::constant();
    setup.t0 = c.t0;
    setup.cutoff = c.cutoff;
    setup.threads = c.threads;
    const ConductivityResult dyn = c.dt_halving
                                       ? numeric_sigma_halving(setup, c.j, c.k, c.dyn_eta, c.magnitudes, c.dt)
                                       : numeric_sigma(setup, c.j, c.k, c.dyn_eta, c.magnitudes, c.dt);
    const double nu = c.modulation == "cosine" ? c.nu : 0.0;
    const ConductivityResult kubo = kubo_conductivity_eta(s.spectrum, s.zeta, s.table, c.j, c.k, c.dyn_eta, nu);
    out.rows.push_back(conductivity_row(c, c.geometry, dyn));
    out.rows.push_back(conductivity_row(c, c.geometry, kubo));
    out.diagnostics.push_back({"truncation_error", dyn.truncation_error});
    out.diagnostics.push_back({"timestep_error", dyn.timestep_error});
    out.diagnostics.push_back({"time_step", dyn.time_step});
    out.diagnostics.push_back({"relative_difference", std::abs(dyn.value - kubo.value) / std::abs(kubo.value)});
    return out;
}

Experiment observable_experiment(const ExperimentConfig& c) {
    return [c](const Realization& r) {
        const Sample s = make_sample(r.geometry, r.disorder, c.beta, c.fermi_energy);
        if (c.observable == "current-x") return equilibrium_current(s.spectrum, s.zeta, s.table)[0];
        if (c.observable == "current-y") return equilibrium_current(s.spectrum, s.zeta, s.table)[1];
        return streda(c, s).value;
    };
}

ResultRow ensemble_row(const ExperimentConfig& c, const LatticeGeometry& g, const EnsembleStats& st) {
    ResultRow r = base_row(c, g);
    r.seed_count = st.n;
    r.method = c.observable == "streda" ? "Streda" : (c.observable == "current-x" ? "EquilibriumCurrentX"
                                                                                   : "EquilibriumCurrentY");
    r.sigma = st.mean;
    r.two_pi_sigma = c.observable == "streda" ? kTwoPi * st.mean : std::nan("");
    r.stderr_value = st.stderr_value;
    return r;
}

EnsembleConfig ensemble_config(const ExperimentConfig& c) {
    EnsembleConfig e;
    e.geometry = c.geometry;
    e.disorder = c.disorder;
    e.n_realizations = c.realizations;
    e.master_seed = c.disorder.seed;
    e.volume_sweep = c.volume_sweep;
    e.threads = c.threads;
    return e;
}

RunOutput run_ensemble_experiment(const ExperimentConfig& c) {
    if (c.observable == "streda") require_projection_config(c);
    RunOutput out;
    const EnsembleStats st = run_ensemble(ensemble_config(c), observable_experiment(c));
    out.rows.push_back(ensemble_row(c, c.geometry, st));
    return out;
}

RunOutput run_volume_sweep(const ExperimentConfig& c) {
    if (c.observable == "streda") require_projection_config(c);
    RunOutput out;
    const VolumeStudy st = volume_convergence(ensemble_config(c), observable_experiment(c));
    for (const auto& row : st.rows) {
        LatticeGeometry g = c.geometry;
        g.lx = g.ly = row.L;
        out.rows.push_back(ensemble_row(c, g, row.stats));
    }
    out.warnings = st.warnings;
    return out;
}

CMatrix random_matrix(std::mt19937_64& gen, int n) {
    auto u = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53 - 0.5; };
    CMatrix m(n, n);
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) m(r, c) = cplx(u(), u());
    return m;
}

RunOutput run_property_suite(const ExperimentConfig& c) {
    RunOutput out;
    const Sample s = make_sample(c.geometry, c.disorder, c.beta, c.fermi_energy);
    note_state_warnings(s, out);
    const LatticeGeometry& g = c.geometry;
    const int n = g.sites();
    std::mt19937_64 gen(c.disorder.seed ^ 0x5bd1e995ULL);
    auto add = [&out](const std::string& name, double residual, double threshold) {
        out.properties.push_back({name, residual, threshold, residual < threshold});
        if (!(residual < threshold)) out.diagnostic_failure = true;
    };
    auto op = [&g](CMatrix m) { return LatticeOperator::make(g, std::move(m)); };

    const CMatrix a = random_matrix(gen, n), b = random_matrix(gen, n), cm = random_matrix(gen, n);
    const CMatrix hr = [&] {
        CMatrix x = random_matrix(gen, n);
        return CMatrix(0.5 * (x + x.adjoint()));
    }();
    const double nn = n;
    add("hamiltonian_hermiticity", hermiticity_defect(s.h.matrix), 1e-13);
    add("eigen_reconstruction",
        (s.h.matrix * s.spectrum.eigenvectors -
         s.spectrum.eigenvectors * s.spectrum.eigenvalues.cast<cplx>().asDiagonal())
            .cwiseAbs()
            .maxCoeff(),
        1e-10);
    add("cyclicity", std::abs(((a * b).trace() - (b * a).trace()) / nn), 1e-12);
    add("commutator_shift",
        std::abs(((cm * a - a * cm) * b).trace() / nn - (cm * (a * b - b * a)).trace() / nn), 1e-11);
    add("inner_derivation_adjoint", std::abs(((hr * a - a * hr) * b).trace() / nn + (a * (hr * b - b * hr)).trace() / nn), 1e-11);
    add("jacobi",
        (commutator(op(a), commutator(op(b), op(cm))).matrix + commutator(op(b), commutator(op(cm), op(a))).matrix +
         commutator(op(cm), commutator(op(a), op(b))).matrix)
            .cwiseAbs()
            .maxCoeff(),
        1e-12 * std::max(1.0, nn));
    add("state_commutes_with_h", commutation_defect(s.spectrum, s.zeta), 1e-11);
    {
        const LatticeOperator la = liouvillian_apply(s.spectrum, op(a));
        const LatticeOperator lb = liouvillian_apply(s.spectrum, op(b));
        add("liouvillian_paths", (la.matrix - liouvillian_apply(s.spectrum, op(a), LiouvillianPath::Direct).matrix)
                                     .cwiseAbs()
                                     .maxCoeff(),
            1e-11 * std::max(1.0, std::sqrt(nn)));
        add("liouvillian_self_adjoint", std::abs(inner_product(la, op(b)) - inner_product(op(a), lb)), 1e-11);
        const LatticeOperator r = liouvillian_resolvent(s.spectrum, op(a), c.eta, 0.3);
        const CMatrix back = cplx(0, 1) * liouvillian_apply(s.spectrum, r).matrix + cplx(c.eta, 0.3) * r.matrix;
        add("resolvent_identity", lp_norm(op(back - a), 2.0).value, 1e-11);
    }
    {
        const Vec2 j = equilibrium_current(s.spectrum, s.zeta, s.table);
        out.diagnostics.push_back({"equilibrium_current_x", j[0]});
        out.diagnostics.push_back({"equilibrium_current_y", j[1]});
    }
    if ((static_cast<long long>(g.flux_num) * g.ly) % g.flux_den == 0) {
        const MagneticTranslation ua = magnetic_translation(g, {1, 0});
        const MagneticTranslation ub = magnetic_translation(g, {0, 1});
        const MagneticTranslation uab = magnetic_translation(g, {1, 1});
        add("projectivity", (ua.matrix * ub.matrix - ua.cocycle({1, 0}, {0, 1}) * uab.matrix).cwiseAbs().maxCoeff(),
            1e-12);
        const LatticeOperator shifted = hamiltonian_from_field(disorder_shift(s.field, {1, 0}));
        add("covariance", (conjugate(ua, s.h).matrix - shifted.matrix).cwiseAbs().maxCoeff(), 1e-12);
    } else {
        out.warnings.push_back("magnetic translations do not close for this geometry; covariance checks skipped");
    }
    if (std::isinf(c.beta)) {
        for (Axis ax : {Axis::X, Axis::Y}) {
            const LatticeOperator dp = spectral_derivation(s.spectrum, s.zeta, s.table, ax);
            const LatticeOperator pc = commutator(s.zeta.matrix, dp);
            const LatticeOperator proj =
                kernel_complement_projection(s.spectrum, pc, s.spectrum.default_degeneracy_tol());
            add(std::string("kernel_complement_") + axis_name(ax), lp_norm(op(proj.matrix - pc.matrix), 2.0).value,
                1e-8);
            add(std::string("triple_commutator_spectral_") + axis_name(ax),
                triple_commutator_residual(s.spectrum, s.zeta, s.table, ax).residual, 1e-8);
            out.diagnostics.push_back({std::string("triple_commutator_minimal_image_") + axis_name(ax),
                                       triple_commutator_residual(s.zeta, s.table, ax).residual});
        }
        const double kubo = kubo_conductivity_eta(s.spectrum, s.zeta, s.table, c.j, c.k, c.eta).value;
        const double form = kubo_projection_form(s.spectrum, s.zeta, s.table, c.j, c.k, c.eta).value;
        add("projection_form_consistency", std::abs(kubo - form), 1e-8);
        const double sjk = streda_conductivity(s.zeta, s.table, Axis::X, Axis::Y).value;
        const double skj = streda_conductivity(s.zeta, s.table, Axis::Y, Axis::X).value;
        add("streda_antisymmetry", std::abs(sjk + skj), 1e-12);
    }
    return out;
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& config) {
    config.validate();
    switch (config.experiment) {
        case ExperimentKind::Streda: return run_streda(config);
        case ExperimentKind::KuboEtaSweep: return run_kubo_sweep(config);
        case ExperimentKind::AcSweep: return run_ac_sweep(config);
        case ExperimentKind::DynamicsVsKubo: return run_dynamics(config);
        case ExperimentKind::Ensemble: return run_ensemble_experiment(config);
        case ExperimentKind::VolumeSweep: return run_volume_sweep(config);
        case ExperimentKind::PropertySuite: return run_property_suite(config);
    }
    throw ConfigError("unknown experiment");
}

}  // namespace kubo
