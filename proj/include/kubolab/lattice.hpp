#pragma once

#include "kubolab/types.hpp"

#include <cstdint>
#include <iosfwd>

namespace kubo {

enum class Gauge { LandauX };

// Lx x Ly torus threaded by flux p/q (in units of 2pi) per plaquette.
// Site (x, y) has index x + Lx*y.
struct LatticeGeometry {
    int lx = 1;
    int ly = 1;
    int flux_num = 0;
    int flux_den = 1;
    Gauge gauge = Gauge::LandauX;

    int sites() const { return lx * ly; }
    double alpha() const { return static_cast<double>(flux_num) / flux_den; }
    int index(int x, int y) const;
    int x_of(int i) const { return i % lx; }
    int y_of(int i) const { return i / lx; }

    // Throws ConfigError naming the violated constraint.
    void validate() const;

    bool operator==(const LatticeGeometry&) const = default;
};

struct DisorderSpec {
    enum class Kind { None, UniformOnSite };
    Kind kind = Kind::None;
    double width = 0.0;
    std::uint64_t seed = 0;

    static DisorderSpec none(std::uint64_t seed = 0) { return {Kind::None, 0.0, seed}; }
    static DisorderSpec uniform(double width, std::uint64_t seed) {
        return {Kind::UniformOnSite, width, seed};
    }
    double effective_width() const { return kind == Kind::None ? 0.0 : width; }
    void validate() const;
};

struct DisorderField {
    LatticeGeometry geometry;
    RVector onsite;
};

struct LatticeOperator {
    LatticeGeometry geometry;
    CMatrix matrix;
    bool hermitian = false;

    int dim() const { return static_cast<int>(matrix.rows()); }

    // Sets the hermitian flag only when |A - A^dagger|_max < 1e-13.
    static LatticeOperator make(const LatticeGeometry& g, CMatrix m);
    static LatticeOperator identity(const LatticeGeometry& g);
    static LatticeOperator zero(const LatticeGeometry& g);
};

double hermiticity_defect(const CMatrix& m);
void require_same_geometry(const LatticeOperator& a, const LatticeOperator& b, const char* where);

struct BuiltHamiltonian {
    LatticeOperator hamiltonian;
    DisorderField disorder;
};

// Uniform on [-W/2, W/2], one draw per site in index order.
DisorderField sample_disorder(const LatticeGeometry& geom, const DisorderSpec& spec);

// Nearest-neighbour hopping -1. The y-hop amplitude is <m|H|m+y> = -exp(+i 2 pi alpha m_x).
LatticeOperator hamiltonian_from_field(const DisorderField& field);
BuiltHamiltonian build_hamiltonian(const LatticeGeometry& geom, const DisorderSpec& disorder);

// (U_a psi)(m) = exp(i chi_a(m)) psi(m - a), chi_a(m) = -2 pi alpha a_x m_y.
struct MagneticTranslation {
    Shift a{0, 0};
    CMatrix matrix;
    LatticeGeometry geometry;

    // U_a U_b = cocycle(a, b) U_{a+b}
    cplx cocycle(const Shift& a, const Shift& b) const;
};

cplx translation_cocycle(const LatticeGeometry& geom, const Shift& a, const Shift& b);
MagneticTranslation magnetic_translation(const LatticeGeometry& geom, const Shift& a);
DisorderField disorder_shift(const DisorderField& field, const Shift& a);
LatticeOperator conjugate(const MagneticTranslation& u, const LatticeOperator& a);

// Minimal-image displacement d(m, n) = x_n - x_m on the torus, for every ordered pair.
// Pairs on the shell |d| = L/2 are ambiguous and get displacement 0.
class DisplacementTable {
public:
    explicit DisplacementTable(const LatticeGeometry& geom);

    const LatticeGeometry& geometry() const { return geom_; }
    double displacement(Axis j, int m, int n) const { return d_[axis_index(j)](m, n); }
    bool ambiguous(Axis j, int m, int n) const { return amb_[axis_index(j)](m, n); }
    const Eigen::MatrixXd& matrix(Axis j) const { return d_[axis_index(j)]; }
    const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& ambiguous_mask(Axis j) const {
        return amb_[axis_index(j)];
    }
    // True when m != n are nearest neighbours on the torus (wrap included).
    bool is_hop(int m, int n) const;

private:
    LatticeGeometry geom_;
    std::array<Eigen::MatrixXd, 2> d_;
    std::array<Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>, 2> amb_;
};

// (v_j)_{mn} = i d_j(m, n) H_{mn}
LatticeOperator velocity(const LatticeOperator& h, const DisplacementTable& table, Axis j);

// Text dump: first line "N", then N rows of 2N numbers "re im re im ...".
void write_matrix_dump(std::ostream& os, const LatticeOperator& a);
LatticeOperator read_matrix_dump(std::istream& is, const LatticeGeometry& geom);

}  // namespace kubo
