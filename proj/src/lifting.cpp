#include "nfisac/lifting.hpp"

#include <cmath>
#include <string>

#include "nfisac/bessel.hpp"

namespace nfisac {

namespace {

// j^p for integer p.
cplx j_power(int p) {
    switch (((p % 4) + 4) % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}

// Signed-order Bessel values J_{-I}..J_{I} from one recurrence.
std::vector<double> symmetric_orders(int order, double x) {
    const std::vector<double> pos = bessel_j_orders(order, x);
    std::vector<double> out(2 * order + 1);
    for (int k = 0; k <= order; ++k) {
        out[order + k] = pos[k];
        out[order - k] = (k % 2 == 0) ? pos[k] : -pos[k];
    }
    return out;
}

int smallest_order_for_tail(double x, double tail_tol) {
    const int cap = static_cast<int>(x) + 200;
    const std::vector<double> j = bessel_j_orders(cap, x);
    // Tail beyond I counts both signs: 2 * sum_{n > I} |J_n|.
    double tail = 0.0;
    for (int n = cap; n >= 0; --n) {
        if (2.0 * tail > tail_tol) return n + 1;
        tail += std::abs(j[n]);
    }
    return 0;
}

// Argument of the quadratic-term Bessel functions at antenna n.
double quadratic_argument(const ArrayGeometry& g, int n, double r) {
    const double nd = n * g.spacing();
    return g.wavenumber() * nd * nd / (4.0 * r);
}

}  // namespace

TruncationOrders truncation_orders(const ArrayGeometry& geom, double r_min) {
    if (!(r_min > 0.0)) throw DomainError("truncation_orders: r_min must be positive");
    const double lambda = geom.wavelength();
    const double d = geom.spacing();
    const double nm1 = geom.num_antennas() - 1;
    TruncationOrders o;
    o.i1 = static_cast<int>(std::ceil(kE * kPi * nm1 * d / lambda));
    o.i2 = static_cast<int>(std::ceil(kE * kPi * nm1 * nm1 * d * d / (4.0 * r_min * lambda)));
    o.i1 = std::max(o.i1, 0);
    o.i2 = std::max(o.i2, 0);
    return o;
}

TruncationOrders truncation_orders_for_tail(const ArrayGeometry& geom, double r_min,
                                            double tail_tol) {
    if (!(r_min > 0.0)) throw DomainError("truncation_orders_for_tail: r_min must be positive");
    if (!(tail_tol > 0.0)) throw DomainError("truncation_orders_for_tail: tail_tol must be > 0");
    const int last = geom.num_antennas() - 1;
    const double x_max = geom.wavenumber() * last * geom.spacing();
    const double z_max = quadratic_argument(geom, last, r_min);
    return {smallest_order_for_tail(x_max, tail_tol), smallest_order_for_tail(z_max, tail_tol)};
}

VectorXcd farfield_vector(const TruncationOrders& orders, double theta) {
    VectorXcd v(orders.width());
    for (int q = -orders.i2; q <= orders.i2; ++q) {
        for (int l = -orders.i1; l <= orders.i1; ++l) {
            v(lifted_index(orders, l, q)) = std::polar(1.0, (l + 2.0 * q) * theta);
        }
    }
    return v;
}

MatrixXd frequency_selector(const TruncationOrders& orders) {
    const int K = orders.max_frequency();
    MatrixXd s = MatrixXd::Zero(orders.width(), 2 * K + 1);
    for (int q = -orders.i2; q <= orders.i2; ++q) {
        for (int l = -orders.i1; l <= orders.i1; ++l) {
            s(lifted_index(orders, l, q), l + 2 * q + K) = 1.0;
        }
    }
    return s;
}

LiftedDictionary::LiftedDictionary(ArrayGeometry geom, double r_min, double r_max)
    : LiftedDictionary(geom, r_min, r_max, truncation_orders(geom, r_min)) {}

LiftedDictionary::LiftedDictionary(ArrayGeometry geom, double r_min, double r_max,
                                   TruncationOrders orders)
    : geom_(geom), r_min_(r_min), r_max_(r_max), orders_(orders) {
    if (!(r_min > 0.0) || !(r_min < r_max) || !std::isfinite(r_max)) {
        throw DomainError("LiftedDictionary: need 0 < r_min < r_max");
    }
    if (orders.i1 < 0 || orders.i2 < 0) throw DomainError("LiftedDictionary: negative order");
    const int N = geom_.num_antennas();
    bessel_linear_.resize(N, orders_.i1p());
    for (int n = 0; n < N; ++n) {
        const double x = geom_.wavenumber() * n * geom_.spacing();
        const std::vector<double> j = symmetric_orders(orders_.i1, x);
        for (int l = -orders_.i1; l <= orders_.i1; ++l) {
            bessel_linear_(n, l + orders_.i1) = j_power(l) * j[l + orders_.i1];
        }
    }
}

void LiftedDictionary::check_distance(double r) const {
    const double slack = 1e-12 * r_max_;
    if (!(r >= r_min_ - slack && r <= r_max_ + slack)) {
        throw DomainError("distance " + std::to_string(r) + " outside dictionary range [" +
                          std::to_string(r_min_) + ", " + std::to_string(r_max_) + "]");
    }
}

MatrixXcd LiftedDictionary::gamma_matrix(double r, int n) const {
    check_distance(r);
    if (n < 0 || n >= geom_.num_antennas()) throw DomainError("gamma_matrix: antenna index");
    const double z = quadratic_argument(geom_, n, r);
    const std::vector<double> jq = symmetric_orders(orders_.i2, z);
    const cplx range_phase = std::polar(1.0, -z);
    MatrixXcd g(orders_.i1p(), orders_.i2p());
    for (int q = -orders_.i2; q <= orders_.i2; ++q) {
        const cplx col = range_phase * j_power(q) * jq[q + orders_.i2];
        for (int l = 0; l < orders_.i1p(); ++l) g(l, q + orders_.i2) = col * bessel_linear_(n, l);
    }
    return g;
}

MatrixXcd LiftedDictionary::distance_matrix(double r) const {
    const int N = geom_.num_antennas();
    MatrixXcd c(N, width());
    for (int n = 0; n < N; ++n) {
        const MatrixXcd g = gamma_matrix(r, n);
        c.row(n) = Eigen::Map<const Eigen::RowVectorXcd>(g.data(), g.size());
    }
    return c;
}

VectorXcd LiftedDictionary::lifted_steering(double theta, double r) const {
    return distance_matrix(r) * farfield_vector(orders_, theta);
}

std::vector<std::pair<double, double>> sigma_max_profile(const LiftedDictionary& dict,
                                                         const std::vector<double>& r_grid) {
    std::vector<std::pair<double, double>> out;
    out.reserve(r_grid.size());
    for (double r : r_grid) {
        const MatrixXcd c = dict.distance_matrix(r);
        const MatrixXcd gram = c * c.adjoint();
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(gram, Eigen::EigenvaluesOnly);
        out.emplace_back(r, std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0)));
    }
    return out;
}

}  // namespace nfisac
