#include "kubolab/lattice.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

namespace kubo {

const char* axis_name(Axis a) { return a == Axis::X ? "x" : "y"; }

Axis parse_axis(std::string_view s) {
    if (s == "x" || s == "X" || s == "0") return Axis::X;
    if (s == "y" || s == "Y" || s == "1") return Axis::Y;
    throw ConfigError("unknown axis '" + std::string(s) + "' (expected x or y)");
}

namespace {

int wrap(int v, int n) {
    int r = v % n;
    return r < 0 ? r + n : r;
}

}  // namespace

int LatticeGeometry::index(int x, int y) const { return wrap(x, lx) + lx * wrap(y, ly); }

void LatticeGeometry::validate() const {
    if (lx < 1) throw ConfigError("lattice: Lx must be a positive integer (got " + std::to_string(lx) + ")");
    if (ly < 1) throw ConfigError("lattice: Ly must be a positive integer (got " + std::to_string(ly) + ")");
    if (flux_den < 1)
        throw ConfigError("lattice: flux_den must be a positive integer (got " + std::to_string(flux_den) + ")");
    if (flux_num != 0 && std::gcd(flux_num, flux_den) != 1)
        throw ConfigError("lattice: gcd(flux_num, flux_den) must be 1 (got " + std::to_string(flux_num) + "/" +
                          std::to_string(flux_den) + ")");
    if (lx % flux_den != 0)
        throw ConfigError("lattice: flux_den must divide Lx (got q=" + std::to_string(flux_den) +
                          ", Lx=" + std::to_string(lx) + ")");
}

void DisorderSpec::validate() const {
    if (!(width >= 0.0) || !std::isfinite(width))
        throw ConfigError("disorder: width must be a finite nonnegative number");
}

double hermiticity_defect(const CMatrix& m) {
    if (m.size() == 0) return 0.0;
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

LatticeOperator LatticeOperator::make(const LatticeGeometry& g, CMatrix m) {
    if (m.rows() != g.sites() || m.cols() != g.sites())
        throw StructureError("operator dimension does not match geometry (" + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + " vs N=" + std::to_string(g.sites()) + ")");
    const bool herm = hermiticity_defect(m) < 1e-13;
    return {g, std::move(m), herm};
}

LatticeOperator LatticeOperator::identity(const LatticeGeometry& g) {
    return {g, CMatrix::Identity(g.sites(), g.sites()), true};
}

LatticeOperator LatticeOperator::zero(const LatticeGeometry& g) {
    return {g, CMatrix::Zero(g.sites(), g.sites()), true};
}

void require_same_geometry(const LatticeOperator& a, const LatticeOperator& b, const char* where) {
    if (!(a.geometry == b.geometry) || a.matrix.rows() != b.matrix.rows())
        throw StructureError(std::string(where) + ": geometry mismatch between operands");
}

DisorderField sample_disorder(const LatticeGeometry& geom, const DisorderSpec& spec) {
    geom.validate();
    spec.validate();
    DisorderField f{geom, RVector::Zero(geom.sites())};
    if (spec.kind == DisorderSpec::Kind::None || spec.width == 0.0) return f;
    std::mt19937_64 gen(spec.seed);
    for (int i = 0; i < geom.sites(); ++i) {
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        f.onsite[i] = spec.width * (u - 0.5);
    }
    return f;
}

LatticeOperator hamiltonian_from_field(const DisorderField& field) {
    const LatticeGeometry& g = field.geometry;
    g.validate();
    const int n = g.sites();
    CMatrix h = CMatrix::Zero(n, n);
    const double a = g.alpha();
    for (int y = 0; y < g.ly; ++y) {
        for (int x = 0; x < g.lx; ++x) {
            const int m = g.index(x, y);
            const int mx = g.index(x + 1, y);
            const int my = g.index(x, y + 1);
            h(m, mx) += -1.0;
            h(mx, m) += -1.0;
            const cplx t = -std::polar(1.0, kTwoPi * a * x);
            h(m, my) += t;
            h(my, m) += std::conj(t);
            h(m, m) += field.onsite[m];
        }
    }
    return {g, std::move(h), true};
}

BuiltHamiltonian build_hamiltonian(const LatticeGeometry& geom, const DisorderSpec& disorder) {
    DisorderField f = sample_disorder(geom, disorder);
    LatticeOperator h = hamiltonian_from_field(f);
    return {std::move(h), std::move(f)};
}

cplx translation_cocycle(const LatticeGeometry& geom, const Shift& a, const Shift& b) {
    return std::polar(1.0, kTwoPi * geom.alpha() * b[0] * a[1]);
}

cplx MagneticTranslation::cocycle(const Shift& x, const Shift& y) const {
    return translation_cocycle(geometry, x, y);
}

MagneticTranslation magnetic_translation(const LatticeGeometry& geom, const Shift& a) {
    geom.validate();
    if ((static_cast<long long>(geom.flux_num) * geom.ly) % geom.flux_den != 0)
        throw ConfigError("lattice: magnetic translations need flux_den to divide flux_num*Ly (q=" +
                          std::to_string(geom.flux_den) + ", Ly=" + std::to_string(geom.ly) + ")");
    const int n = geom.sites();
    CMatrix u = CMatrix::Zero(n, n);
    const double alpha = geom.alpha();
    for (int m = 0; m < n; ++m) {
        const int x = geom.x_of(m);
        const int y = geom.y_of(m);
        const int src = geom.index(x - a[0], y - a[1]);
        u(m, src) = std::polar(1.0, -kTwoPi * alpha * a[0] * y);
    }
    return {a, std::move(u), geom};
}

DisorderField disorder_shift(const DisorderField& field, const Shift& a) {
    const LatticeGeometry& g = field.geometry;
    DisorderField out{g, RVector(field.onsite.size())};
    for (int m = 0; m < g.sites(); ++m)
        out.onsite[m] = field.onsite[g.index(g.x_of(m) - a[0], g.y_of(m) - a[1])];
    return out;
}

LatticeOperator conjugate(const MagneticTranslation& u, const LatticeOperator& a) {
    if (!(u.geometry == a.geometry)) throw StructureError("conjugate: geometry mismatch");
    CMatrix m = u.matrix * a.matrix * u.matrix.adjoint();
    return {a.geometry, std::move(m), a.hermitian};
}

DisplacementTable::DisplacementTable(const LatticeGeometry& geom) : geom_(geom) {
    geom.validate();
    const int n = geom.sites();
    const std::array<int, 2> len{geom.lx, geom.ly};
    for (int j = 0; j < 2; ++j) {
        d_[j] = Eigen::MatrixXd::Zero(n, n);
        amb_[j] = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
    }
    for (int m = 0; m < n; ++m) {
        const std::array<int, 2> xm{geom.x_of(m), geom.y_of(m)};
        for (int k = 0; k < n; ++k) {
            const std::array<int, 2> xk{geom.x_of(k), geom.y_of(k)};
            for (int j = 0; j < 2; ++j) {
                int delta = wrap(xk[j] - xm[j], len[j]);
                if (2 * delta == len[j]) {
                    amb_[j](m, k) = delta != 0;
                    delta = 0;
                } else if (2 * delta > len[j]) {
                    delta -= len[j];
                }
                d_[j](m, k) = delta;
            }
        }
    }
}

bool DisplacementTable::is_hop(int m, int n) const {
    if (m == n) return false;
    const int dx = wrap(geom_.x_of(n) - geom_.x_of(m), geom_.lx);
    const int dy = wrap(geom_.y_of(n) - geom_.y_of(m), geom_.ly);
    if (dy == 0 && (dx == 1 || dx == geom_.lx - 1)) return true;
    if (dx == 0 && (dy == 1 || dy == geom_.ly - 1)) return true;
    return false;
}

LatticeOperator velocity(const LatticeOperator& h, const DisplacementTable& table, Axis j) {
    if (!(h.geometry == table.geometry()))
        throw StructureError("velocity: Hamiltonian and displacement table have different geometries");
    const int n = h.dim();
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r)
            if (r != c && h.matrix(r, c) != cplx(0.0) && !table.is_hop(r, c))
                throw StructureError("velocity: off-diagonal entry (" + std::to_string(r) + "," +
                                     std::to_string(c) + ") is not a nearest-neighbour hop");
    CMatrix v = cplx(0.0, 1.0) * table.matrix(j).cast<cplx>().cwiseProduct(h.matrix);
    return LatticeOperator::make(h.geometry, std::move(v));
}

void write_matrix_dump(std::ostream& os, const LatticeOperator& a) {
    const int n = a.dim();
    os << n << '\n' << std::setprecision(17);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            if (c) os << ' ';
            os << a.matrix(r, c).real() << ' ' << a.matrix(r, c).imag();
        }
        os << '\n';
    }
}

LatticeOperator read_matrix_dump(std::istream& is, const LatticeGeometry& geom) {
    int n = 0;
    if (!(is >> n) || n != geom.sites()) throw StructureError("matrix dump: size header does not match geometry");
    CMatrix m(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            double re = 0, im = 0;
            if (!(is >> re >> im)) throw StructureError("matrix dump: truncated data");
            m(r, c) = {re, im};
        }
    return LatticeOperator::make(geom, std::move(m));
}

}  // namespace kubo
