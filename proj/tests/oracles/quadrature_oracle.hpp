#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>

namespace oracle {

// int_{-inf}^{t} e^{eta s} cos(nu s) ds by adaptive Gauss-Kronrod on a half-infinite range.
inline double switched_cosine_primitive(double eta, double nu, double t) {
    const auto f = [=](double s) { return std::exp(eta * s) * std::cos(nu * s); };
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, -std::numeric_limits<double>::infinity(), t, 15, 1e-13, &err);
}

// int_a^b g(s) ds for a smooth integrand
template <class F>
double integrate(F g, double a, double b) {
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, a, b, 20, 1e-13, &err);
}

}  // namespace oracle
