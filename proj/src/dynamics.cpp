#include "kubolab/dynamics.hpp"

#include "kubolab/ncalg.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <sstream>
#include <thread>

namespace kubo {

double Modulation::value(double t) const {
    double v = 0.0;
    for (const auto& [w, nu_i] : components()) v += w * std::cos(nu_i * t);
    return v;
}

std::vector<std::pair<double, double>> Modulation::components() const {
    switch (kind) {
        case Kind::Constant: return {{1.0, 0.0}};
        case Kind::Cosine: return {{1.0, nu}};
        case Kind::Superposition: return terms;
    }
    return {};
}

double Modulation::max_frequency() const {
    double m = 0.0;
    for (const auto& [w, nu_i] : components()) m = std::max(m, std::abs(nu_i));
    return m;
}

void FieldProtocol::validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("field: eta must be a positive finite number");
    if (!std::isfinite(E[0]) || !std::isfinite(E[1])) throw ConfigError("field: E must be finite");
    for (const auto& [w, nu] : modulation.components())
        if (!std::isfinite(w) || !std::isfinite(nu)) throw ConfigError("field: modulation terms must be finite");
}

Vec2 field_value(const FieldProtocol& proto, double t) {
    const double s = std::exp(proto.eta * t) * proto.modulation.value(t);
    return {s * proto.E[0], s * proto.E[1]};
}

Vec2 field_primitive(const FieldProtocol& proto, double t) {
    const double eta = proto.eta;
    double s = 0.0;
    for (const auto& [w, nu] : proto.modulation.components())
        s += w * (eta * std::cos(nu * t) + nu * std::sin(nu * t)) / (eta * eta + nu * nu);
    s *= std::exp(eta * t);
    return {s * proto.E[0], s * proto.E[1]};
}

double start_time_for_cutoff(const FieldProtocol& proto, double cutoff) {
    if (!(cutoff > 0.0 && cutoff < 1.0)) throw ConfigError("field: cutoff must lie in (0, 1)");
    return std::log(cutoff) / proto.eta;
}

LatticeOperator dress_operator(const LatticeOperator& a, const DisplacementTable& table, const Vec2& f) {
    if (!(a.geometry == table.geometry())) throw StructureError("dress: geometry mismatch with displacement table");
    const Eigen::MatrixXd phase = -(f[0] * table.matrix(Axis::X) + f[1] * table.matrix(Axis::Y));
    CMatrix m = a.matrix.cwiseProduct(phase.unaryExpr([](double x) { return std::polar(1.0, x); }));
    return {a.geometry, std::move(m), a.hermitian};
}

LatticeOperator dress_hamiltonian(const LatticeOperator& h, const DisplacementTable& table, const Vec2& f) {
    return dress_operator(h, table, f);
}

namespace {

// Exponentials of weighted sums sum_g a_g H(F_g) for a nearest-neighbour H, by Chebyshev expansion on the
// sparse pattern of H. Dressing only rephases entries, so the Gershgorin bound of H holds for every F.
using RowMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseOp = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

class ChebyshevStepper {
public:
    ChebyshevStepper(const LatticeOperator& h, const DisplacementTable& table, double step, Integrator integrator)
        : integrator_(integrator) {
        const int n = h.dim();
        double emin = kInf, emax = -kInf;
        for (int m = 0; m < n; ++m) {
            double radius = 0.0;
            for (int c = 0; c < n; ++c)
                if (c != m) radius += std::abs(h.matrix(m, c));
            const double center = h.matrix(m, m).real();
            emin = std::min(emin, center - radius);
            emax = std::max(emax, center + radius);
        }
        center_ = 0.5 * (emin + emax);
        radius_ = 0.5 * (emax - emin) * 1.01 + 1e-12;

        std::vector<Eigen::Triplet<cplx>> trips;
        for (int c = 0; c < n; ++c)
            for (int r = 0; r < n; ++r)
                if (r == c || h.matrix(r, c) != cplx(0.0)) trips.emplace_back(r, c, cplx(1.0));
        op_.resize(n, n);
        op_.setFromTriplets(trips.begin(), trips.end());
        op_.makeCompressed();
        for (int o = 0; o < op_.outerSize(); ++o)
            for (SparseOp::InnerIterator it(op_, o); it; ++it) {
                const int r = static_cast<int>(it.row());
                const int c = static_cast<int>(it.col());
                base_.push_back(h.matrix(r, c) - (r == c ? center_ : 0.0));
                dx_.push_back(table.displacement(Axis::X, r, c));
                dy_.push_back(table.displacement(Axis::Y, r, c));
            }

        if (integrator_ == Integrator::Midpoint) {
            weights_ = {1.0, 0.0};
        } else {
            const double r3 = std::sqrt(3.0);
            weights_ = {(3.0 - 2.0 * r3) / 12.0, (3.0 + 2.0 * r3) / 12.0};
        }
        const double wsum = weights_[0] + weights_[1];
        scale_ = radius_ * (std::abs(weights_[0]) + std::abs(weights_[1]));
        global_ = std::polar(1.0, -step * wsum * center_);

        const double z = step * scale_;
        for (int k = 0; k < 2000; ++k) {
            const double jk = std::cyl_bessel_j(static_cast<double>(k), z);
            cplx ik = 1.0;
            switch (k % 4) {
                case 1: ik = cplx(0, -1); break;
                case 2: ik = -1.0; break;
                case 3: ik = cplx(0, 1); break;
                default: break;
            }
            coeff_.push_back((k == 0 ? 1.0 : 2.0) * ik * jk);
            if (k > z + 2 && std::abs(jk) < 1e-18) break;
        }
    }

    // Advances psi across [t, t + h]; field(s) returns the vector potential at time s.
    template <class Field>
    void step(RowMatrix& psi, double t, double h, const Field& field) {
        if (integrator_ == Integrator::Midpoint) {
            const Vec2 f = field(t + 0.5 * h);
            exponential(psi, 1.0, f, 0.0, f);
            return;
        }
        const double r3 = std::sqrt(3.0);
        const Vec2 f1 = field(t + (0.5 - r3 / 6.0) * h);
        const Vec2 f2 = field(t + (0.5 + r3 / 6.0) * h);
        exponential(psi, weights_[1], f1, weights_[0], f2);
        exponential(psi, weights_[0], f1, weights_[1], f2);
    }

private:
    void exponential(RowMatrix& psi, double a1, const Vec2& f1, double a2, const Vec2& f2) {
        cplx* vals = op_.valuePtr();
        for (std::size_t i = 0; i < base_.size(); ++i) {
            cplx v = a1 * std::polar(1.0, -(f1[0] * dx_[i] + f1[1] * dy_[i]));
            if (a2 != 0.0) v += a2 * std::polar(1.0, -(f2[0] * dx_[i] + f2[1] * dy_[i]));
            vals[i] = base_[i] * v / scale_;
        }
        t0_ = psi;
        t1_.noalias() = op_ * psi;
        acc_ = coeff_[0] * t0_ + coeff_[1] * t1_;
        for (std::size_t k = 2; k < coeff_.size(); ++k) {
            t2_.noalias() = op_ * t1_;
            t2_ = 2.0 * t2_ - t0_;
            acc_.noalias() += coeff_[k] * t2_;
            t0_.swap(t1_);
            t1_.swap(t2_);
        }
        psi = global_ * acc_;
    }

    Integrator integrator_;
    SparseOp op_;
    std::vector<cplx> base_;
    std::vector<double> dx_, dy_;
    std::vector<cplx> coeff_;
    std::array<double, 2> weights_{};
    double center_ = 0.0;
    double radius_ = 1.0;
    double scale_ = 1.0;
    cplx global_ = 1.0;
    RowMatrix t0_, t1_, t2_, acc_;
};

struct StepGrid {
    int steps = 0;
    double h = 0.0;
};

StepGrid make_grid(const FieldProtocol& proto, double t_start, double t0, double dt, const EvolveOptions& opts) {
    proto.validate();
    if (!(dt > 0.0)) throw ConfigError("evolve: dt must be positive");
    if (!(t_start < t0)) throw ConfigError("evolve: t_start must precede t0");
    if (opts.check_cutoff && std::exp(proto.eta * t_start) > opts.cutoff) {
        std::ostringstream msg;
        msg << "evolve: start time " << t_start << " violates the switching cutoff " << opts.cutoff
            << "; move t_start to " << start_time_for_cutoff(proto, opts.cutoff) << " or earlier";
        throw ConfigError(msg.str());
    }
    StepGrid g;
    g.steps = std::max(1, static_cast<int>(std::ceil((t0 - t_start) / dt - 1e-9)));
    g.h = (t0 - t_start) / g.steps;
    return g;
}

}  // namespace

CMatrix propagate_columns(const LatticeOperator& h, const DisplacementTable& table, const FieldProtocol& proto,
                          double t_start, double t0, double dt, const CMatrix& psi, const EvolveOptions& opts) {
    const StepGrid g = make_grid(proto, t_start, t0, dt, opts);
    ChebyshevStepper stepper(h, table, g.h, opts.integrator);
    const auto field = [&proto](double t) { return field_primitive(proto, t); };
    RowMatrix out = psi;
    for (int i = 0; i < g.steps; ++i) stepper.step(out, t_start + i * g.h, g.h, field);
    return CMatrix(out);
}

Propagator evolve(const LatticeOperator& h, const DisplacementTable& table, const FieldProtocol& proto,
                  double t_start, double t0, double dt, const EvolveOptions& opts) {
    const StepGrid g = make_grid(proto, t_start, t0, dt, opts);
    Propagator u;
    u.t = t0;
    u.s = t_start;
    u.steps = g.steps;
    u.dt = g.h;
    u.matrix = propagate_columns(h, table, proto, t_start, t0, dt, CMatrix::Identity(h.dim(), h.dim()), opts);
    const double defect = (u.matrix.adjoint() * u.matrix - CMatrix::Identity(h.dim(), h.dim())).cwiseAbs().maxCoeff();
    if (!(defect < 1e-10))
        throw DiagnosticError("evolve: propagator unitarity breach (|U^dagger U - I|_max = " + std::to_string(defect) +
                              ")");
    return u;
}

DensityState evolve_state(const DensityState& zeta, const Propagator& u) {
    CMatrix m = u.matrix * zeta.matrix.matrix * u.matrix.adjoint();
    m = 0.5 * (m + m.adjoint()).eval();
    return make_state({zeta.matrix.geometry, std::move(m), true}, StateKind::Evolved, zeta.beta, zeta.fermi_energy);
}

namespace {

DensityState gauge_conjugate_state(const Spectrum& s, const DensityState& zeta, const DisplacementTable& table,
                                   const Vec2& f) {
    if (zeta.from_spectrum()) {
        const Spectrum st = eigendecompose(dress_hamiltonian(s.hamiltonian, table, f));
        return fermi_state(st, zeta.beta, zeta.fermi_energy);
    }
    return make_state(dress_operator(zeta.matrix, table, f), zeta.kind, zeta.beta, zeta.fermi_energy);
}

// K(omega_ab) = sum_i w_i e^{eta r_i} eps(r_i) e^{-i (E_a - E_b)(t0 - r_i)} on composite Gauss-Legendre panels.
CMatrix duhamel_kernel(const Spectrum& s, const FieldProtocol& proto, double t0, double t_start, double panel,
                       int nodes) {
    const int n = s.dim();
    Eigen::VectorXd x(nodes), w(nodes);
    {
        // Golub-Welsch
        Eigen::MatrixXd jm = Eigen::MatrixXd::Zero(nodes, nodes);
        for (int i = 1; i < nodes; ++i) jm(i, i - 1) = jm(i - 1, i) = i / std::sqrt(4.0 * i * i - 1.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jm);
        x = es.eigenvalues();
        w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
    }
    const int panels = std::max(1, static_cast<int>(std::ceil((t0 - t_start) / panel - 1e-9)));
    const double hp = (t0 - t_start) / panels;
    CMatrix k = CMatrix::Zero(n, n);
    Eigen::VectorXcd ea(n);
    for (int p = 0; p < panels; ++p) {
        const double a = t_start + p * hp;
        for (int i = 0; i < nodes; ++i) {
            const double r = a + 0.5 * hp * (x[i] + 1.0);
            const double weight = 0.5 * hp * w[i] * std::exp(proto.eta * r) * proto.modulation.value(r);
            const double tau = t0 - r;
            for (int c = 0; c < n; ++c) ea[c] = std::polar(1.0, -s.eigenvalues[c] * tau);
            k.noalias() += weight * ea * ea.adjoint();
        }
    }
    return k;
}

}  // namespace

DuhamelResult duhamel_state(const Spectrum& s, const DensityState& zeta, const DisplacementTable& table,
                            const FieldProtocol& proto, double t0, const QuadratureGrid& grid) {
    proto.validate();
    if (!(grid.t_start < t0)) throw ConfigError("duhamel_state: quadrature start must precede t0");
    if (!(grid.panel_width > 0.0) || grid.nodes_per_panel < 2)
        throw ConfigError("duhamel_state: panel width must be positive with at least two nodes per panel");
    DuhamelResult out;
    if (proto.E[0] == 0.0 && proto.E[1] == 0.0) {
        out.state = make_state(zeta.matrix, StateKind::Evolved, zeta.beta, zeta.fermi_energy);
        return out;
    }
    const DensityState zt = gauge_conjugate_state(s, zeta, table, field_primitive(proto, t0));
    const CMatrix grad = proto.E[0] * spectral_derivation_eigenbasis(s, zeta, table, Axis::X) +
                         proto.E[1] * spectral_derivation_eigenbasis(s, zeta, table, Axis::Y);
    const CMatrix kern = duhamel_kernel(s, proto, t0, grid.t_start, grid.panel_width, grid.nodes_per_panel);
    const CMatrix coarse = duhamel_kernel(s, proto, t0, grid.t_start, 2.0 * grid.panel_width, grid.nodes_per_panel);
    CMatrix integral = grad.cwiseProduct(kern);
    const CMatrix diff = grad.cwiseProduct(kern - coarse);
    const int n = s.dim();
    const double tail = std::exp(proto.eta * grid.t_start) / proto.eta * grad.norm() / std::sqrt(double(n));
    out.estimated_error = diff.norm() / std::sqrt(double(n)) + tail;

    const double wmax = s.width() + proto.modulation.max_frequency() + proto.eta;
    out.under_resolved = grid.panel_width * wmax > 2.0 * grid.nodes_per_panel / 3.0 ||
                         out.estimated_error > 1e-6 * (integral.norm() / std::sqrt(double(n)) + 1e-300);

    CMatrix rho = zt.matrix.matrix - s.from_eigenbasis(integral);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    out.state = make_state({zeta.matrix.geometry, std::move(rho), true}, StateKind::Evolved, zeta.beta,
                           zeta.fermi_energy);
    return out;
}

NetCurrent net_current(const Spectrum& s, const DensityState& rho_t0, const DensityState& zeta,
                       const DisplacementTable& table, const FieldProtocol& proto, double t0) {
    const Vec2 f0 = field_primitive(proto, t0);
    const DensityState zt = gauge_conjugate_state(s, zeta, table, f0);
    const double n = std::max(1, s.dim());
    NetCurrent out;
    for (Axis j : {Axis::X, Axis::Y}) {
        const LatticeOperator v = velocity(s.hamiltonian, table, j);
        const LatticeOperator vt = dress_operator(v, table, f0);
        const auto tr = [n](const CMatrix& a, const CMatrix& b) {
            return a.cwiseProduct(b.transpose()).sum().real() / n;
        };
        const int i = axis_index(j);
        out.definition[i] = tr(vt.matrix, rho_t0.matrix.matrix) - tr(v.matrix, zeta.matrix.matrix);
        out.rewritten[i] = tr(v.matrix, rho_t0.matrix.matrix - zt.matrix.matrix);
        out.residual = std::max(out.residual, std::abs(out.definition[i] - out.rewritten[i]));
    }
    return out;
}

namespace {

struct SigmaEstimate {
    double value = 0.0;
    double truncation = 0.0;
};

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (int i = next++; i < count; i = next++) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

SigmaEstimate sigma_at(const DynamicsSetup& setup, Axis j, Axis k, double eta, const std::vector<double>& mags,
                       double dt) {
    const Spectrum& s = *setup.spectrum;
    const DensityState& zeta = *setup.zeta;
    const DisplacementTable& table = *setup.table;
    if (!zeta.from_spectrum()) throw StateError("numeric_sigma: equilibrium state must be built from the spectrum");

    std::vector<int> keep;
    for (int a = 0; a < s.dim(); ++a)
        if (zeta.occupations[a] > 1e-15) keep.push_back(a);
    CMatrix w(s.dim(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
        w.col(static_cast<Eigen::Index>(c)) = std::sqrt(zeta.occupations[keep[c]]) * s.eigenvectors.col(keep[c]);
    const LatticeOperator v = velocity(s.hamiltonian, table, j);
    const double n = s.dim();

    const int runs = static_cast<int>(2 * mags.size());
    std::vector<double> current(runs, 0.0);
    parallel_for(runs, setup.threads, [&](int r) {
        FieldProtocol proto;
        proto.eta = eta;
        proto.modulation = setup.modulation;
        const double e = (r % 2 == 0 ? 1.0 : -1.0) * mags[r / 2];
        proto.E[axis_index(k)] = e;
        const double ts = std::min(start_time_for_cutoff(proto, setup.cutoff), setup.t0 - dt);
        EvolveOptions opts;
        opts.cutoff = setup.cutoff;
        opts.integrator = setup.integrator;
        const CMatrix wt = propagate_columns(s.hamiltonian, table, proto, ts, setup.t0, dt, w, opts);
        const LatticeOperator vt = dress_operator(v, table, field_primitive(proto, setup.t0));
        current[r] = (wt.adjoint() * vt.matrix * wt).trace().real() / n;
    });

    // Neville extrapolation in x = magnitude^2 to x = 0
    const std::size_t m = mags.size();
    std::vector<double> x(m), p(m);
    for (std::size_t i = 0; i < m; ++i) {
        x[i] = mags[i] * mags[i];
        p[i] = (current[2 * i] - current[2 * i + 1]) / (2.0 * mags[i]);
    }
    double previous = p[m - 1];
    for (std::size_t level = 1; level < m; ++level) {
        if (level == m - 1) previous = p[1];
        for (std::size_t i = 0; i + level < m; ++i)
            p[i] = (x[i] * p[i + 1] - x[i + level] * p[i]) / (x[i] - x[i + level]);
    }
    SigmaEstimate out;
    out.value = p[0];
    out.truncation = m > 1 ? std::abs(p[0] - previous) : std::nan("");
    return out;
}

void check_magnitudes(const std::vector<double>& mags, double eta) {
    if (mags.size() < 2) throw ConfigError("numeric_sigma: at least two field magnitudes are needed for extrapolation");
    for (std::size_t i = 0; i < mags.size(); ++i) {
        if (!(mags[i] > 0.0)) throw ConfigError("numeric_sigma: field magnitudes must be positive");
        if (i > 0 && !(mags[i] < mags[i - 1]))
            throw ConfigError("numeric_sigma: field magnitudes must be strictly descending");
    }
    if (mags.back() / eta < 1e-9) {
        std::ostringstream msg;
        msg << "numeric_sigma: field magnitude " << mags.back() << " is too small for eta = " << eta
            << "; the current response is drowned in rounding and time-step error. Use magnitudes in ["
            << 1e-6 * eta << ", " << 1e-1 * eta << "]";
        throw DiagnosticError(msg.str());
    }
}

double richardson_denominator(Integrator integrator) {
    return integrator == Integrator::Midpoint ? 3.0 : 15.0;
}

ConductivityResult make_result(const DynamicsSetup& setup, Axis j, Axis k, double eta) {
    ConductivityResult r;
    r.j = j;
    r.k = k;
    r.method = Method::DynamicsDerivative;
    r.eta = eta;
    r.nu = setup.modulation.kind == Modulation::Kind::Cosine ? setup.modulation.nu : 0.0;
    r.metadata.geometry = setup.spectrum->source_geometry;
    r.metadata.fermi_energy = setup.zeta->fermi_energy;
    r.metadata.beta = setup.zeta->beta;
    return r;
}

}  // namespace

ConductivityResult numeric_sigma(const DynamicsSetup& setup, Axis j, Axis k, double eta,
                                 const std::vector<double>& magnitudes, double dt) {
    check_magnitudes(magnitudes, eta);
    const SigmaEstimate fine = sigma_at(setup, j, k, eta, magnitudes, dt);
    const SigmaEstimate coarse = sigma_at(setup, j, k, eta, magnitudes, 2.0 * dt);
    ConductivityResult r = make_result(setup, j, k, eta);
    r.value = fine.value;
    r.truncation_error = fine.truncation;
    r.timestep_error = std::abs(fine.value - coarse.value) / richardson_denominator(setup.integrator);
    r.time_step = dt;
    if (r.timestep_error > std::abs(r.value) && std::abs(r.value) > 1e-9) {
        std::ostringstream msg;
        msg << "numeric_sigma: time-step error " << r.timestep_error << " exceeds the value " << r.value
            << "; reduce dt below " << dt / 4;
        throw DiagnosticError(msg.str());
    }
    return r;
}

ConductivityResult numeric_sigma_halving(const DynamicsSetup& setup, Axis j, Axis k, double eta,
                                         const std::vector<double>& magnitudes, double dt0, double rel_tol,
                                         int max_halvings) {
    check_magnitudes(magnitudes, eta);
    double dt = dt0;
    SigmaEstimate prev = sigma_at(setup, j, k, eta, magnitudes, dt);
    for (int h = 1; h <= max_halvings; ++h) {
        dt *= 0.5;
        const SigmaEstimate cur = sigma_at(setup, j, k, eta, magnitudes, dt);
        const double change = std::abs(cur.value - prev.value);
        if (change <= rel_tol * std::abs(cur.value) || change < 1e-12) {
            ConductivityResult r = make_result(setup, j, k, eta);
            r.value = cur.value;
            r.truncation_error = cur.truncation;
            r.timestep_error = change / richardson_denominator(setup.integrator);
            r.time_step = dt;
            return r;
        }
        prev = cur;
    }
    throw DiagnosticError("numeric_sigma: dt-halving did not converge after " + std::to_string(max_halvings) +
                          " halvings from dt = " + std::to_string(dt0));
}

}  // namespace kubo
