#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace nfisac {

using cplx = std::complex<double>;
using VectorXcd = Eigen::VectorXcd;
using MatrixXcd = Eigen::MatrixXcd;
using VectorXd = Eigen::VectorXd;
using MatrixXd = Eigen::MatrixXd;

inline constexpr double kSpeedOfLight = 3.0e8;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kE = 2.71828182845904523536;
inline constexpr cplx kJ{0.0, 1.0};

/// Which of the two superimposed channels a quantity belongs to.
enum class Role { Comm, Radar };

std::string_view to_string(Role role);
Role role_from_string(std::string_view s);

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Inconsistent matrix/vector shapes.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the validated numerical range.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

}  // namespace nfisac
