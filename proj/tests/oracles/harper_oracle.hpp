#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

// Bloch Hamiltonian of the Harper model on the q-site magnetic cell, hopping -1,
// <m|H|m+y> = -exp(+2 pi i (p/q) m_x). K is the Bloch phase across the cell in x,
// ky the phase per site in y; the matrix is 2 pi periodic in both.
Eigen::MatrixXcd harper_bloch(int p, int q, double K, double ky);

// Eigenvalues of the Lx x Ly torus assembled from the allowed Bloch momenta, ascending.
std::vector<double> harper_torus_spectrum(int lx, int ly, int p, int q);

// Chern number of the lowest `bands` bands on a grid x grid Brillouin-zone mesh, from
// gauge-invariant link variables. The sign is that of the adiabatic Hall response
// J_x = (C / 2 pi) E_y, so that 2 pi sigma_xy = C for the filled bands.
double harper_gap_chern(int p, int q, int bands, int grid = 24);

// Number of bands strictly below energy e (all Bloch energies below e).
int bands_below(int p, int q, double e, int grid = 64);

}  // namespace oracle
