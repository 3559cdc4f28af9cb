#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kubo {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using Vec2 = std::array<double, 2>;
using Shift = std::array<int, 2>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

enum class Axis { X = 0, Y = 1 };

inline int axis_index(Axis a) { return a == Axis::X ? 0 : 1; }
const char* axis_name(Axis a);
Axis parse_axis(std::string_view s);

// Invalid user-facing configuration, including geometry constraints.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation (p < 1, eta <= 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Shape or support mismatch between operators and tables.
class StructureError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A density state that violates the preconditions of a formula.
class StateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A numerical diagnostic that failed (unitarity breach, unresolved derivative, ...).
class DiagnosticError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace kubo
