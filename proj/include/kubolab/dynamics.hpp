#pragma once

#include "kubolab/response.hpp"

#include <utility>
#include <vector>

namespace kubo {

struct Modulation {
    enum class Kind { Constant, Cosine, Superposition };
    Kind kind = Kind::Constant;
    double nu = 0.0;
    std::vector<std::pair<double, double>> terms;  // (weight, nu)

    static Modulation constant() { return {}; }
    static Modulation cosine(double nu) { return {Kind::Cosine, nu, {}}; }
    static Modulation superposition(std::vector<std::pair<double, double>> terms) {
        return {Kind::Superposition, 0.0, std::move(terms)};
    }
    double value(double t) const;
    // The (weight, nu) list this modulation stands for.
    std::vector<std::pair<double, double>> components() const;
    double max_frequency() const;
};

// E_eta(t) = e^{eta t} eps(t) E
struct FieldProtocol {
    double eta = 1.0;
    Vec2 E{0.0, 0.0};
    Modulation modulation;

    void validate() const;
};

Vec2 field_value(const FieldProtocol& proto, double t);
// F_eta(t) = int_{-inf}^t E_eta(s) ds, in closed form
Vec2 field_primitive(const FieldProtocol& proto, double t);

// Latest start time with e^{eta t} <= cutoff.
double start_time_for_cutoff(const FieldProtocol& proto, double cutoff = 1e-8);

// H_{mn} exp(-i F . d(m, n)); equals G H G^dagger with G = exp(i F . x).
LatticeOperator dress_hamiltonian(const LatticeOperator& h, const DisplacementTable& table, const Vec2& f);
LatticeOperator dress_operator(const LatticeOperator& a, const DisplacementTable& table, const Vec2& f);

struct Propagator {
    double t = 0.0;
    double s = 0.0;
    CMatrix matrix;
    int steps = 0;
    double dt = 0.0;
};

enum class Integrator {
    Midpoint,        // exp(-i h H(t + h/2)), second order
    CommutatorFree4  // two exponentials of Gauss-point combinations, fourth order
};

struct EvolveOptions {
    double cutoff = 1e-8;       // start-time requirement e^{eta t_start} <= cutoff
    bool check_cutoff = true;
    Integrator integrator = Integrator::CommutatorFree4;
};

// U(t0, t_start) as an ordered product of one-step propagators with h = (t0 - t_start)/ceil((t0 - t_start)/dt).
// Each exponential is applied through a Chebyshev expansion converged to machine precision.
Propagator evolve(const LatticeOperator& h, const DisplacementTable& table, const FieldProtocol& proto,
                  double t_start, double t0, double dt, const EvolveOptions& opts = {});

// Same stepping applied to the columns of psi only.
CMatrix propagate_columns(const LatticeOperator& h, const DisplacementTable& table, const FieldProtocol& proto,
                          double t_start, double t0, double dt, const CMatrix& psi, const EvolveOptions& opts = {});

// rho = U zeta U^dagger
DensityState evolve_state(const DensityState& zeta, const Propagator& u);

struct QuadratureGrid {
    double t_start = 0.0;
    double panel_width = 0.25;
    int nodes_per_panel = 8;
};

struct DuhamelResult {
    DensityState state;
    double estimated_error = 0.0;  // L2 norm of the difference against a grid with doubled panels, plus tail
    bool under_resolved = false;
};

// rho(t0) = zeta(t0) - int_{t_start}^{t0} U0(t0 - r)(E_eta(r) . grad zeta) dr, the first-order solution.
// zeta(t0) = f(H(t0)) is the exact gauge conjugate of zeta; grad zeta is the spectral derivative.
DuhamelResult duhamel_state(const Spectrum& s, const DensityState& zeta, const DisplacementTable& table,
                            const FieldProtocol& proto, double t0, const QuadratureGrid& grid);

struct NetCurrent {
    Vec2 definition{0.0, 0.0};  // T(v(t0) rho) - T(v zeta)
    Vec2 rewritten{0.0, 0.0};   // T(v (rho - zeta(t0)))
    double residual = 0.0;      // max component difference between the two forms
};

NetCurrent net_current(const Spectrum& s, const DensityState& rho_t0, const DensityState& zeta,
                       const DisplacementTable& table, const FieldProtocol& proto, double t0);

struct DynamicsSetup {
    const Spectrum* spectrum = nullptr;  // spectrum of the unperturbed H
    const DensityState* zeta = nullptr;  // equilibrium state built from that spectrum
    const DisplacementTable* table = nullptr;
    Modulation modulation;
    double t0 = 0.0;
    double cutoff = 1e-8;
    int threads = 1;
    Integrator integrator = Integrator::CommutatorFree4;
};

// Central differences of J_j in E_k over +-magnitudes, extrapolated in magnitude^2 to zero.
// The time-step error bar compares against a run at twice the step.
ConductivityResult numeric_sigma(const DynamicsSetup& setup, Axis j, Axis k, double eta,
                                 const std::vector<double>& magnitudes, double dt);

// dt-halving rule: halve from dt0 until successive values agree within rel_tol.
ConductivityResult numeric_sigma_halving(const DynamicsSetup& setup, Axis j, Axis k, double eta,
                                         const std::vector<double>& magnitudes, double dt0, double rel_tol = 1e-3,
                                         int max_halvings = 6);

}  // namespace kubo
