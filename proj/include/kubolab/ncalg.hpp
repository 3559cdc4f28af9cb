#pragma once

#include "kubolab/lattice.hpp"

namespace kubo {

struct TraceValue {
    cplx value;
    int volume = 1;
};

struct LpNorm {
    double p = 2.0;
    double value = 0.0;
};

// T(A) = tr(A)/N
TraceValue trace_per_volume(const LatticeOperator& a);

// <A, B> = T(A^dagger B)
cplx inner_product(const LatticeOperator& a, const LatticeOperator& b);

// Singular values in descending order; eigenvalue moduli for Hermitian input.
RVector singular_values(const LatticeOperator& a);

// (T |A|^p)^(1/p); p = kInf gives the operator norm.
LpNorm lp_norm(const LatticeOperator& a, double p);
double lp_norm_from_singular_values(const RVector& s, int volume, double p);

// True iff the fraction of singular values above eps is at most delta.
bool measure_membership(const LatticeOperator& a, double eps, double delta);

// min_k max(s_{k+1}, k/N)
double frechet_norm(const LatticeOperator& a);

struct DerivationResult {
    LatticeOperator value;
    double ambiguous_mass = 0.0;  // largest |A_mn| on the ambiguous shell
    bool ambiguous_warning = false;
};

// (d_j A)_{mn} = -i d_j(m, n) A_{mn}, i.e. i[x_j, A] with minimal-image positions.
DerivationResult derivation(const LatticeOperator& a, const DisplacementTable& table, Axis j);

LatticeOperator commutator(const LatticeOperator& a, const LatticeOperator& b);

}  // namespace kubo
