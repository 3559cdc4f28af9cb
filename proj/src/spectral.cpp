#include "kubolab/spectral.hpp"

#include "kubolab/ncalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace kubo {

double Spectrum::width() const {
    if (eigenvalues.size() == 0) return 0.0;
    return eigenvalues[eigenvalues.size() - 1] - eigenvalues[0];
}

Spectrum eigendecompose(const LatticeOperator& h) {
    if (!h.hermitian || hermiticity_defect(h.matrix) >= 1e-13)
        throw StructureError("eigendecompose: input operator is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h.matrix);
    if (es.info() != Eigen::Success) throw DiagnosticError("eigendecompose: eigensolver did not converge");
    Spectrum s;
    s.eigenvalues = es.eigenvalues();
    s.eigenvectors = es.eigenvectors();
    for (int c = 0; c < s.eigenvectors.cols(); ++c) {
        Eigen::Index imax = 0;
        s.eigenvectors.col(c).cwiseAbs().maxCoeff(&imax);
        const cplx z = s.eigenvectors(imax, c);
        s.eigenvectors.col(c) *= std::conj(z) / std::abs(z);
        s.eigenvectors(imax, c) = std::abs(z);
    }
    s.source_geometry = h.geometry;
    s.hamiltonian = h;
    return s;
}

double fermi_dirac(double beta, double fermi_energy, double e) {
    if (std::isinf(beta)) return e <= fermi_energy ? 1.0 : 0.0;
    const double x = beta * (e - fermi_energy);
    if (x > 0) {
        const double w = std::exp(-x);
        return w / (1.0 + w);
    }
    return 1.0 / (1.0 + std::exp(x));
}

namespace {

std::map<double, double> norms_from_values(const RVector& s, int volume) {
    return {{1.0, lp_norm_from_singular_values(s, volume, 1.0)},
            {2.0, lp_norm_from_singular_values(s, volume, 2.0)},
            {kInf, lp_norm_from_singular_values(s, volume, kInf)}};
}

}  // namespace

DensityState fermi_state(const Spectrum& s, double beta, double fermi_energy) {
    if (!(beta > 0.0)) throw DomainError("fermi_state: beta must be positive or infinite");
    const int n = s.dim();
    DensityState st;
    st.kind = std::isinf(beta) ? StateKind::FermiProjection : StateKind::FermiDirac;
    st.beta = beta;
    st.fermi_energy = fermi_energy;
    st.occupations.resize(n);
    const double tie = 1e-12 * std::max(1.0, std::abs(fermi_energy));
    for (int a = 0; a < n; ++a) {
        st.occupations[a] = fermi_dirac(beta, fermi_energy, s.eigenvalues[a]);
        if (std::isinf(beta) && std::abs(s.eigenvalues[a] - fermi_energy) <= tie) st.boundary_warning = true;
    }
    CMatrix m = s.eigenvectors * st.occupations.cast<cplx>().asDiagonal() * s.eigenvectors.adjoint();
    m = 0.5 * (m + m.adjoint()).eval();
    st.matrix = {s.source_geometry, std::move(m), true};
    st.p_norms = norms_from_values(st.occupations.cwiseAbs(), std::max(1, n));
    return st;
}

DensityState make_state(LatticeOperator rho, StateKind kind, double beta, double fermi_energy) {
    DensityState st;
    st.kind = kind;
    st.beta = beta;
    st.fermi_energy = fermi_energy;
    st.p_norms = norms_from_values(singular_values(rho), std::max(1, rho.dim()));
    st.matrix = std::move(rho);
    return st;
}

double commutation_defect(const Spectrum& s, const DensityState& rho) {
    const CMatrix& h = s.hamiltonian.matrix;
    const CMatrix c = h * rho.matrix.matrix - rho.matrix.matrix * h;
    if (c.size() == 0) return 0.0;
    Eigen::BDCSVD<CMatrix> svd(c);
    return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

double idempotency_defect(const DensityState& rho) {
    const CMatrix& m = rho.matrix.matrix;
    CMatrix d = m * m - m;
    d = 0.5 * (d + d.adjoint()).eval();
    return lp_norm(LatticeOperator{rho.matrix.geometry, std::move(d), true}, kInf).value;
}

namespace {

void require_spectrum_geometry(const Spectrum& s, const LatticeOperator& a, const char* where) {
    if (!(s.source_geometry == a.geometry) || a.dim() != s.dim())
        throw StructureError(std::string(where) + ": operator geometry differs from the spectrum's");
}

Eigen::MatrixXd energy_differences(const Spectrum& s) {
    const int n = s.dim();
    Eigen::MatrixXd d(n, n);
    for (int b = 0; b < n; ++b)
        for (int a = 0; a < n; ++a) d(a, b) = s.eigenvalues[a] - s.eigenvalues[b];
    return d;
}

}  // namespace

LatticeOperator liouvillian_apply(const Spectrum& s, const LatticeOperator& a, LiouvillianPath path) {
    require_spectrum_geometry(s, a, "liouvillian_apply");
    CMatrix out;
    if (path == LiouvillianPath::Direct) {
        const CMatrix& h = s.hamiltonian.matrix;
        out = h * a.matrix - a.matrix * h;
    } else {
        CMatrix t = s.to_eigenbasis(a.matrix);
        t = t.cwiseProduct(energy_differences(s).cast<cplx>()).eval();
        out = s.from_eigenbasis(t);
    }
    return LatticeOperator::make(a.geometry, std::move(out));
}

LatticeOperator liouvillian_resolvent(const Spectrum& s, const LatticeOperator& a, double eta, double nu) {
    require_spectrum_geometry(s, a, "liouvillian_resolvent");
    if (!(eta > 0.0)) throw DomainError("liouvillian_resolvent: eta must be positive");
    CMatrix t = s.to_eigenbasis(a.matrix);
    const int n = s.dim();
    for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
            t(c, b) /= cplx(eta, s.eigenvalues[c] - s.eigenvalues[b] + nu);
    return LatticeOperator::make(a.geometry, s.from_eigenbasis(t));
}

LatticeOperator kernel_complement_projection(const Spectrum& s, const LatticeOperator& a, double tol) {
    require_spectrum_geometry(s, a, "kernel_complement_projection");
    if (!(tol > 0.0)) throw DomainError("kernel_complement_projection: degeneracy tolerance must be positive");
    CMatrix t = s.to_eigenbasis(a.matrix);
    const int n = s.dim();
    for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
            if (std::abs(s.eigenvalues[c] - s.eigenvalues[b]) <= tol) t(c, b) = 0.0;
    return LatticeOperator::make(a.geometry, s.from_eigenbasis(t));
}

LatticeOperator free_evolution(const Spectrum& s, const LatticeOperator& a, double t) {
    require_spectrum_geometry(s, a, "free_evolution");
    const CMatrix phases = (s.eigenvalues * (-t)).unaryExpr([](double x) { return std::polar(1.0, x); });
    const CMatrix u = s.eigenvectors * phases.asDiagonal() * s.eigenvectors.adjoint();
    return {a.geometry, u * a.matrix * u.adjoint(), a.hermitian};
}

CMatrix velocity_eigenbasis(const Spectrum& s, const DisplacementTable& table, Axis j) {
    return s.to_eigenbasis(velocity(s.hamiltonian, table, j).matrix);
}

Eigen::MatrixXd occupation_divided_differences(const Spectrum& s, const DensityState& zeta, double tol) {
    if (zeta.occupations.size() != s.dim())
        throw StateError("state was not built from this spectrum; its occupation function is unknown");
    const int n = s.dim();
    const RVector& f = zeta.occupations;
    Eigen::MatrixXd dd(n, n);
    for (int b = 0; b < n; ++b) {
        for (int a = 0; a < n; ++a) {
            const double de = s.eigenvalues[a] - s.eigenvalues[b];
            if (std::abs(de) > tol) {
                dd(a, b) = (f[a] - f[b]) / de;
            } else if (std::isinf(zeta.beta)) {
                dd(a, b) = 0.0;
            } else {
                dd(a, b) = -zeta.beta * f[a] * (1.0 - f[a]);
            }
        }
    }
    return dd;
}

CMatrix spectral_derivation_eigenbasis(const Spectrum& s, const DensityState& zeta, const DisplacementTable& table,
                                       Axis j) {
    const Eigen::MatrixXd dd = occupation_divided_differences(s, zeta, s.default_degeneracy_tol());
    return -velocity_eigenbasis(s, table, j).cwiseProduct(dd.cast<cplx>());
}

LatticeOperator spectral_derivation(const Spectrum& s, const DensityState& zeta, const DisplacementTable& table,
                                    Axis j) {
    CMatrix m = s.from_eigenbasis(spectral_derivation_eigenbasis(s, zeta, table, j));
    m = 0.5 * (m + m.adjoint()).eval();
    return {s.source_geometry, std::move(m), true};
}

}  // namespace kubo
