#pragma once

#include <vector>

namespace nfisac {

/// Largest |order| and |argument| accepted by bessel_j.
inline constexpr int kBesselMaxOrder = 10000;
inline constexpr double kBesselMaxArgument = 1.0e4;

/// Bessel function of the first kind J_n(x) for integer n.
///
/// Uses Miller's downward recurrence normalised by J_0 + 2 sum J_2k = 1, and
/// the ascending series for |x| < 1e-3. Absolute error is below 1e-10 on
/// |n| <= 1e4, |x| <= 1e4; outside that range a RangeError is thrown.
double bessel_j(int n, double x);

/// J_0(x), ..., J_max_order(x) from a single recurrence sweep.
std::vector<double> bessel_j_orders(int max_order, double x);

}  // namespace nfisac
