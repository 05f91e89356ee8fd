#pragma once

#include <utility>
#include <vector>

#include "nfisac/model.hpp"

namespace nfisac {

/// Truncation of the two Jacobi-Anger sums: l in [-i1, i1] over the linear
/// phase term, q in [-i2, i2] over the quadratic (distance) term.
struct TruncationOrders {
    int i1 = 0;
    int i2 = 0;

    int i1p() const { return 2 * i1 + 1; }
    int i2p() const { return 2 * i2 + 1; }
    /// Length of the lifted angle vector v(theta).
    int width() const { return i1p() * i2p(); }
    /// Largest harmonic l + 2q appearing in v(theta).
    int max_frequency() const { return i1 + 2 * i2; }

    friend bool operator==(const TruncationOrders&, const TruncationOrders&) = default;
};

/// I1 = ceil(e pi (N-1) d / lambda), I2 = ceil(e pi (N-1)^2 d^2 / (4 r_min lambda)).
/// Both come from the rule that J_n(x) is negligible beyond n ~ e x / 2.
TruncationOrders truncation_orders(const ArrayGeometry& geom, double r_min);

/// Smallest orders whose discarded Bessel tail sum_{|n|>I} |J_n(x_max)| is
/// below `tail_tol`, for the largest argument of each sum.
TruncationOrders truncation_orders_for_tail(const ArrayGeometry& geom, double r_min,
                                            double tail_tol);

/// Position of harmonic (l, q) inside v(theta): l runs fastest.
inline int lifted_index(const TruncationOrders& o, int l, int q) {
    return (l + o.i1) + o.i1p() * (q + o.i2);
}

/// v(theta)[(l, q)] = exp(j (l + 2q) theta).
VectorXcd farfield_vector(const TruncationOrders& orders, double theta);

/// W x (2K+1) 0/1 matrix S with v(theta) = S u(theta), where
/// u(theta)[k + K] = exp(j k theta), K = max_frequency().
MatrixXd frequency_selector(const TruncationOrders& orders);

/// Factorisation a(theta, r) ~ C(r) v(theta) valid for r in [r_min, r_max].
/// Orders are fixed at construction; by default they are evaluated at r_min,
/// which needs the most quadratic-term harmonics.
class LiftedDictionary {
public:
    LiftedDictionary(ArrayGeometry geom, double r_min, double r_max);
    LiftedDictionary(ArrayGeometry geom, double r_min, double r_max, TruncationOrders orders);

    const ArrayGeometry& geometry() const { return geom_; }
    const TruncationOrders& orders() const { return orders_; }
    double r_min() const { return r_min_; }
    double r_max() const { return r_max_; }
    int width() const { return orders_.width(); }

    /// I1' x I2' matrix Gamma_n(r) with rows l = -I1..I1, columns q = -I2..I2.
    MatrixXcd gamma_matrix(double r, int n) const;
    /// N_r x W matrix whose row n is vec(Gamma_n(r)).
    MatrixXcd distance_matrix(double r) const;
    /// C(r) v(theta).
    VectorXcd lifted_steering(double theta, double r) const;

private:
    void check_distance(double r) const;

    ArrayGeometry geom_;
    double r_min_;
    double r_max_;
    TruncationOrders orders_;
    // bessel_linear_(n, l + I1) = j^l J_l(2 pi n d / lambda); independent of r.
    MatrixXcd bessel_linear_;
};

/// Largest singular value of C(r) at each grid point.
std::vector<std::pair<double, double>> sigma_max_profile(const LiftedDictionary& dict,
                                                         const std::vector<double>& r_grid);

}  // namespace nfisac
