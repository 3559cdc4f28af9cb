#include "kubolab/response.hpp"

#include "kubolab/ncalg.hpp"

#include <algorithm>
#include <cmath>

namespace kubo {

const char* method_name(Method m) {
    switch (m) {
        case Method::KuboEta: return "KuboEta";
        case Method::KuboEtaProjectionForm: return "KuboEtaProjectionForm";
        case Method::Streda: return "Streda";
        case Method::ACKuboEta: return "ACKuboEta";
        case Method::DynamicsDerivative: return "DynamicsDerivative";
    }
    return "?";
}

namespace {

constexpr double kCommutationTol = 1e-8;
constexpr double kProjectionTol = 1e-10;

RunDescriptor describe(const DensityState& zeta) {
    RunDescriptor d;
    d.geometry = zeta.matrix.geometry;
    d.fermi_energy = zeta.fermi_energy;
    d.beta = zeta.beta;
    return d;
}

void require_projection(const DensityState& p, const char* where) {
    const double def = idempotency_defect(p);
    if (!(def < kProjectionTol))
        throw StateError(std::string(where) + ": state is not a projection (|P^2 - P| = " + std::to_string(def) + ")");
}

void require_equilibrium(const Spectrum& s, const DensityState& zeta, const char* where) {
    const double def = commutation_defect(s, zeta);
    if (!(def < kCommutationTol))
        throw StateError(std::string(where) + ": state does not commute with H (|[H, zeta]| = " +
                         std::to_string(def) + ")");
}

// T(A B) for two matrices without forming the product.
cplx trace_product(const CMatrix& a, const CMatrix& b) {
    return a.cwiseProduct(b.transpose()).sum() / static_cast<double>(std::max<Eigen::Index>(1, a.rows()));
}

ConductivityResult streda_from_derivatives(const DensityState& p, const CMatrix& dj, const CMatrix& dk, Axis j,
                                           Axis k) {
    ConductivityResult r;
    r.j = j;
    r.k = k;
    r.method = Method::Streda;
    r.eta = 0.0;
    r.metadata = describe(p);
    const CMatrix c = dj * dk - dk * dj;
    const cplx t = cplx(0.0, 1.0) * trace_product(p.matrix.matrix, c);
    r.value = t.real();
    r.imag_residue = std::abs(t.imag());
    return r;
}

TripleCommutatorResidual triple_from_derivative(const DensityState& p, const CMatrix& d) {
    const CMatrix& pm = p.matrix.matrix;
    const CMatrix inner = pm * d - d * pm;
    const CMatrix outer = pm * inner - inner * pm;
    const LatticeGeometry& g = p.matrix.geometry;
    TripleCommutatorResidual out;
    out.residual = lp_norm(LatticeOperator::make(g, d - outer), 2.0).value;
    out.sandwich = lp_norm(LatticeOperator::make(g, pm * d * pm), 2.0).value;
    return out;
}

}  // namespace

LatticeOperator state_derivative(const DensityState& zeta, const DisplacementTable& table, Axis j,
                                 DerivativeScheme scheme, const Spectrum* s) {
    if (scheme == DerivativeScheme::MinimalImage) return derivation(zeta.matrix, table, j).value;
    if (s == nullptr) throw StructureError("state_derivative: the spectral scheme needs the spectrum of H");
    return spectral_derivation(*s, zeta, table, j);
}

ConductivityResult kubo_conductivity_eta(const Spectrum& s, const DensityState& zeta, const DisplacementTable& table,
                                         Axis j, Axis k, double eta, double nu) {
    if (!(eta > 0.0)) throw DomainError("kubo_conductivity_eta: eta must be positive");
    require_equilibrium(s, zeta, "kubo_conductivity_eta");
    const int n = s.dim();
    const CMatrix vj = velocity_eigenbasis(s, table, j);
    const CMatrix dk = spectral_derivation_eigenbasis(s, zeta, table, k);
    cplx acc = 0.0;
    for (int b = 0; b < n; ++b)
        for (int a = 0; a < n; ++a)
            acc += vj(b, a) * dk(a, b) / cplx(eta, s.eigenvalues[a] - s.eigenvalues[b] + nu);
    acc /= static_cast<double>(n);
    ConductivityResult r;
    r.j = j;
    r.k = k;
    r.method = nu == 0.0 ? Method::KuboEta : Method::ACKuboEta;
    r.eta = eta;
    r.nu = nu;
    r.value = -acc.real();
    r.imag_residue = std::abs(acc.imag());
    r.metadata = describe(zeta);
    return r;
}

ConductivityResult kubo_projection_form(const Spectrum& s, const DensityState& p, const DisplacementTable& table,
                                        Axis j, Axis k, double eta) {
    if (!(eta > 0.0)) throw DomainError("kubo_projection_form: eta must be positive");
    require_projection(p, "kubo_projection_form");
    const int n = s.dim();
    const CMatrix pe = s.to_eigenbasis(p.matrix.matrix);
    const CMatrix dj = spectral_derivation_eigenbasis(s, p, table, j);
    const CMatrix dk = spectral_derivation_eigenbasis(s, p, table, k);
    CMatrix x = pe * dj - dj * pe;
    // i (L + i eta)^(-1) L, diagonal in the eigenbasis
    for (int b = 0; b < n; ++b)
        for (int a = 0; a < n; ++a) {
            const double de = s.eigenvalues[a] - s.eigenvalues[b];
            x(a, b) *= cplx(0.0, 1.0) * de / cplx(de, eta);
        }
    const cplx ip = x.conjugate().cwiseProduct(dk).sum() / static_cast<double>(n);
    ConductivityResult r;
    r.j = j;
    r.k = k;
    r.method = Method::KuboEtaProjectionForm;
    r.eta = eta;
    r.value = ip.real();
    r.imag_residue = std::abs(ip.imag());
    r.metadata = describe(p);
    return r;
}

ConductivityResult streda_conductivity(const DensityState& p, const DisplacementTable& table, Axis j, Axis k) {
    require_projection(p, "streda_conductivity");
    const CMatrix dj = derivation(p.matrix, table, j).value.matrix;
    const CMatrix dk = derivation(p.matrix, table, k).value.matrix;
    return streda_from_derivatives(p, dj, dk, j, k);
}

ConductivityResult streda_conductivity(const Spectrum& s, const DensityState& p, const DisplacementTable& table,
                                       Axis j, Axis k) {
    require_projection(p, "streda_conductivity");
    const CMatrix dj = spectral_derivation(s, p, table, j).matrix;
    const CMatrix dk = spectral_derivation(s, p, table, k).matrix;
    return streda_from_derivatives(p, dj, dk, j, k);
}

TripleCommutatorResidual triple_commutator_residual(const DensityState& p, const DisplacementTable& table, Axis k) {
    return triple_from_derivative(p, derivation(p.matrix, table, k).value.matrix);
}

TripleCommutatorResidual triple_commutator_residual(const Spectrum& s, const DensityState& p,
                                                    const DisplacementTable& table, Axis k) {
    return triple_from_derivative(p, spectral_derivation(s, p, table, k).matrix);
}

Vec2 equilibrium_current(const Spectrum& s, const DensityState& zeta, const DisplacementTable& table) {
    require_equilibrium(s, zeta, "equilibrium_current");
    Vec2 out{};
    for (Axis j : {Axis::X, Axis::Y}) {
        const CMatrix v = velocity(s.hamiltonian, table, j).matrix;
        out[axis_index(j)] = trace_product(v, zeta.matrix.matrix).real();
    }
    return out;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return std::nan("");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0 ? sxy / sxx : std::nan("");
}

EtaLimitStudy eta_limit_study(const Spectrum& s, const DensityState& p, const DisplacementTable& table, Axis j,
                              Axis k, const std::vector<double>& eta_grid) {
    for (std::size_t i = 0; i < eta_grid.size(); ++i) {
        if (!(eta_grid[i] > 0.0)) throw DomainError("eta_limit_study: eta values must be positive");
        if (i > 0 && !(eta_grid[i] < eta_grid[i - 1]))
            throw DomainError("eta_limit_study: eta grid must be strictly descending");
    }
    EtaLimitStudy study;
    study.streda = streda_conductivity(s, p, table, j, k).value;
    std::vector<double> lx, ly;
    for (double eta : eta_grid) {
        const double v = kubo_conductivity_eta(s, p, table, j, k, eta).value;
        const double dev = std::abs(v - study.streda);
        study.rows.push_back({eta, v, dev});
        if (dev > 0) {
            lx.push_back(std::log(eta));
            ly.push_back(std::log(dev));
        }
    }
    study.fitted_order = least_squares_slope(lx, ly);
    study.monotone = true;
    for (std::size_t i = 1; i < study.rows.size(); ++i)
        if (!(study.rows[i].deviation < study.rows[i - 1].deviation) &&
            !(study.rows[i].deviation == 0.0 && study.rows[i - 1].deviation == 0.0))
            study.monotone = false;
    return study;
}

}  // namespace kubo
