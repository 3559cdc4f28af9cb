#pragma once

#include "kubolab/spectral.hpp"

#include <cmath>
#include <vector>

namespace kubo {

enum class Method { KuboEta, KuboEtaProjectionForm, Streda, ACKuboEta, DynamicsDerivative };
const char* method_name(Method m);

// How the position derivative of a state is realised on the torus.
//   MinimalImage: elementwise i[x_j, A] with minimal-image displacements (works for any operator).
//   Spectral:     exact derivative of f(H) under a uniform vector potential (needs the spectrum).
enum class DerivativeScheme { MinimalImage, Spectral };

struct RunDescriptor {
    LatticeGeometry geometry;
    double disorder_width = 0.0;
    std::uint64_t seed = 0;
    int seed_count = 1;
    double fermi_energy = 0.0;
    double beta = kInf;
};

struct ConductivityResult {
    Axis j = Axis::X;
    Axis k = Axis::Y;
    double value = 0.0;
    Method method = Method::KuboEta;
    double eta = 0.0;
    double nu = 0.0;
    double imag_residue = 0.0;
    RunDescriptor metadata;
    double stderr_value = std::nan("");
    double truncation_error = std::nan("");
    double timestep_error = std::nan("");
    double time_step = std::nan("");

    double two_pi() const { return kTwoPi * value; }
};

// -Re T{ v_j (iL + eta + i nu)^(-1) (d_k zeta) } with the spectral derivative of zeta.
ConductivityResult kubo_conductivity_eta(const Spectrum& s, const DensityState& zeta, const DisplacementTable& table,
                                         Axis j, Axis k, double eta, double nu = 0.0);

// < i (L + i eta)^(-1) L [P, d_j P], d_k P >
ConductivityResult kubo_projection_form(const Spectrum& s, const DensityState& p, const DisplacementTable& table,
                                        Axis j, Axis k, double eta);

// i T{ P [d_j P, d_k P] }
ConductivityResult streda_conductivity(const DensityState& p, const DisplacementTable& table, Axis j, Axis k);
ConductivityResult streda_conductivity(const Spectrum& s, const DensityState& p, const DisplacementTable& table,
                                       Axis j, Axis k);

struct TripleCommutatorResidual {
    double residual = 0.0;    // |d_k P - [P, [P, d_k P]]|_2
    double sandwich = 0.0;    // |P (d_k P) P|_2
};

TripleCommutatorResidual triple_commutator_residual(const DensityState& p, const DisplacementTable& table, Axis k);
TripleCommutatorResidual triple_commutator_residual(const Spectrum& s, const DensityState& p,
                                                    const DisplacementTable& table, Axis k);

// (T(v_x zeta), T(v_y zeta))
Vec2 equilibrium_current(const Spectrum& s, const DensityState& zeta, const DisplacementTable& table);

struct EtaLimitRow {
    double eta = 0.0;
    double value = 0.0;
    double deviation = 0.0;
};

struct EtaLimitStudy {
    std::vector<EtaLimitRow> rows;
    double streda = 0.0;
    double fitted_order = std::nan("");  // slope of log(deviation) against log(eta)
    bool monotone = false;
};

EtaLimitStudy eta_limit_study(const Spectrum& s, const DensityState& p, const DisplacementTable& table, Axis j,
                              Axis k, const std::vector<double>& eta_grid);

// d_j of a state in the chosen scheme.
LatticeOperator state_derivative(const DensityState& zeta, const DisplacementTable& table, Axis j,
                                 DerivativeScheme scheme, const Spectrum* s = nullptr);

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace kubo
