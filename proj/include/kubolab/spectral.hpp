#pragma once

#include "kubolab/lattice.hpp"

#include <map>

namespace kubo {

// H = V diag(E) V^dagger, eigenvalues ascending. Each eigenvector is rephased so that its
// largest-magnitude component (first one on ties) is real and positive.
struct Spectrum {
    RVector eigenvalues;
    CMatrix eigenvectors;
    LatticeGeometry source_geometry;
    LatticeOperator hamiltonian;

    int dim() const { return static_cast<int>(eigenvalues.size()); }
    double width() const;
    double default_degeneracy_tol() const { return 1e-9 * std::max(width(), 1.0); }
    CMatrix to_eigenbasis(const CMatrix& a) const { return eigenvectors.adjoint() * a * eigenvectors; }
    CMatrix from_eigenbasis(const CMatrix& a) const { return eigenvectors * a * eigenvectors.adjoint(); }
};

Spectrum eigendecompose(const LatticeOperator& h);

enum class StateKind { FermiDirac, FermiProjection, Evolved };

struct DensityState {
    LatticeOperator matrix;
    StateKind kind = StateKind::Evolved;
    double beta = kInf;
    double fermi_energy = 0.0;
    std::map<double, double> p_norms;  // p -> |rho|_p for p in {1, 2, inf}
    RVector occupations;               // f(E_a) when built from a spectrum, empty otherwise
    bool boundary_warning = false;     // E_F coincided with an eigenvalue at beta = inf

    bool from_spectrum() const { return occupations.size() > 0; }
};

double fermi_dirac(double beta, double fermi_energy, double e);

DensityState fermi_state(const Spectrum& s, double beta, double fermi_energy);
DensityState make_state(LatticeOperator rho, StateKind kind, double beta = kInf, double fermi_energy = 0.0);

// |[H, rho]|_inf
double commutation_defect(const Spectrum& s, const DensityState& rho);
// |rho^2 - rho|_inf
double idempotency_defect(const DensityState& rho);

enum class LiouvillianPath { Eigenbasis, Direct };

// L(A) = [H, A]
LatticeOperator liouvillian_apply(const Spectrum& s, const LatticeOperator& a,
                                  LiouvillianPath path = LiouvillianPath::Eigenbasis);

// (iL + eta + i nu)^(-1) A
LatticeOperator liouvillian_resolvent(const Spectrum& s, const LatticeOperator& a, double eta, double nu);

// Removes eigenbasis entries with |E_a - E_b| <= tol.
LatticeOperator kernel_complement_projection(const Spectrum& s, const LatticeOperator& a, double tol);

// e^{-itH} A e^{itH}
LatticeOperator free_evolution(const Spectrum& s, const LatticeOperator& a, double t);

// Velocity V^dagger v_j V in the eigenbasis of H.
CMatrix velocity_eigenbasis(const Spectrum& s, const DisplacementTable& table, Axis j);

// Divided differences (f_a - f_b)/(E_a - E_b) of the occupation function, with f'(E_a) on
// pairs closer than tol.
Eigen::MatrixXd occupation_divided_differences(const Spectrum& s, const DensityState& zeta, double tol);

// Derivative of f(H) under a uniform vector potential: d/dF_j f(dress(H, F)) at F = 0.
// Coincides with i[x_j, f(H)] wherever the position operator is defined; in the eigenbasis
// it is -v_ab (f_a - f_b)/(E_a - E_b).
CMatrix spectral_derivation_eigenbasis(const Spectrum& s, const DensityState& zeta, const DisplacementTable& table,
                                       Axis j);
LatticeOperator spectral_derivation(const Spectrum& s, const DensityState& zeta, const DisplacementTable& table,
                                    Axis j);

}  // namespace kubo
