#include "kubolab/ncalg.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <functional>

namespace kubo {

TraceValue trace_per_volume(const LatticeOperator& a) {
    const int n = std::max(1, a.dim());
    return {a.matrix.trace() / static_cast<double>(n), n};
}

cplx inner_product(const LatticeOperator& a, const LatticeOperator& b) {
    require_same_geometry(a, b, "inner_product");
    // tr(A^dagger B) = sum conj(A_mn) B_mn
    return a.matrix.conjugate().cwiseProduct(b.matrix).sum() / static_cast<double>(std::max(1, a.dim()));
}

RVector singular_values(const LatticeOperator& a) {
    RVector s;
    if (a.dim() == 0) return s;
    if (a.hermitian) {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(a.matrix, Eigen::EigenvaluesOnly);
        s = es.eigenvalues().cwiseAbs();
    } else {
        Eigen::BDCSVD<CMatrix> svd(a.matrix);
        s = svd.singularValues();
    }
    std::sort(s.data(), s.data() + s.size(), std::greater<double>());
    return s;
}

double lp_norm_from_singular_values(const RVector& s, int volume, double p) {
    if (!(p >= 1.0)) throw DomainError("lp_norm: p must be >= 1 or infinity");
    if (s.size() == 0) return 0.0;
    if (std::isinf(p)) return s.maxCoeff();
    const double smax = s.maxCoeff();
    if (smax == 0.0) return 0.0;
    // scaled to avoid overflow for large p
    double acc = 0.0;
    for (double v : s) acc += std::pow(v / smax, p);
    return smax * std::pow(acc / volume, 1.0 / p);
}

LpNorm lp_norm(const LatticeOperator& a, double p) {
    if (!(p >= 1.0)) throw DomainError("lp_norm: p must be >= 1 or infinity");
    return {p, lp_norm_from_singular_values(singular_values(a), std::max(1, a.dim()), p)};
}

bool measure_membership(const LatticeOperator& a, double eps, double delta) {
    if (!(eps > 0.0) || !(delta > 0.0)) throw DomainError("measure_membership: eps and delta must be positive");
    const RVector s = singular_values(a);
    const auto above = std::count_if(s.data(), s.data() + s.size(), [eps](double v) { return v > eps; });
    return static_cast<double>(above) <= delta * std::max(1, a.dim());
}

double frechet_norm(const LatticeOperator& a) {
    const RVector s = singular_values(a);
    const int n = static_cast<int>(s.size());
    if (n == 0) return 0.0;
    double best = kInf;
    for (int k = 0; k <= n; ++k) {
        const double tail = k < n ? s[k] : 0.0;
        best = std::min(best, std::max(tail, static_cast<double>(k) / n));
    }
    return best;
}

DerivationResult derivation(const LatticeOperator& a, const DisplacementTable& table, Axis j) {
    if (!(a.geometry == table.geometry()))
        throw StructureError("derivation: operator and displacement table have different geometries");
    DerivationResult out;
    const auto& amb = table.ambiguous_mask(j);
    double mass = 0.0;
    for (int c = 0; c < a.dim(); ++c)
        for (int r = 0; r < a.dim(); ++r)
            if (amb(r, c)) mass = std::max(mass, std::abs(a.matrix(r, c)));
    CMatrix d = cplx(0.0, -1.0) * table.matrix(j).cast<cplx>().cwiseProduct(a.matrix);
    out.value = {a.geometry, std::move(d), a.hermitian};
    out.ambiguous_mass = mass;
    out.ambiguous_warning = mass >= 1e-10;
    return out;
}

LatticeOperator commutator(const LatticeOperator& a, const LatticeOperator& b) {
    require_same_geometry(a, b, "commutator");
    CMatrix c = a.matrix * b.matrix - b.matrix * a.matrix;
    return LatticeOperator::make(a.geometry, std::move(c));
}

}  // namespace kubo
