#include "nfisac/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nfisac/types.hpp"

namespace nfisac {

namespace {

void check_range(int max_order, double x) {
    if (max_order > kBesselMaxOrder || !(std::abs(x) <= kBesselMaxArgument)) {
        throw RangeError("bessel_j: (order " + std::to_string(max_order) + ", x " +
                         std::to_string(x) + ") outside validated range");
    }
}

// Ascending series; only used for small |x| where it converges in a few terms.
std::vector<double> small_argument(int max_order, double x) {
    std::vector<double> out(max_order + 1, 0.0);
    const double h = 0.5 * x;
    const double h2 = h * h;
    double lead = 1.0;  // (x/2)^n / n!
    for (int n = 0; n <= max_order; ++n) {
        if (n > 0) lead *= h / n;
        if (lead == 0.0) break;
        double term = lead;
        double sum = term;
        for (int k = 1; k < 30; ++k) {
            term *= -h2 / (static_cast<double>(k) * (k + n));
            sum += term;
            if (std::abs(term) < 1e-18 * std::abs(sum)) break;
        }
        out[n] = sum;
    }
    return out;
}

// Miller's algorithm for x > 0.
std::vector<double> miller(int max_order, double x) {
    const int top = std::max(max_order, static_cast<int>(x)) + 1;
    int start = top + static_cast<int>(std::sqrt(400.0 * top)) + 20;
    start += start % 2;

    std::vector<double> out(max_order + 1, 0.0);
    constexpr double kBig = 1e250;
    double next = 0.0;  // j_{k+1}
    double cur = 1e-30; // j_k
    double norm = 0.0;  // j_0 + 2 * sum of even-order terms
    for (int k = start; k > 0; --k) {
        const double prev = (2.0 * k / x) * cur - next;  // j_{k-1}
        next = cur;
        cur = prev;
        if (k - 1 <= max_order) out[k - 1] = cur;
        if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * cur;
        if (std::abs(cur) > kBig) {
            cur /= kBig;
            next /= kBig;
            norm /= kBig;
            for (int i = std::max(k - 1, 0); i <= max_order; ++i) out[i] /= kBig;
        }
    }
    norm += cur;  // j_0
    for (double& v : out) v /= norm;
    return out;
}

}  // namespace

std::vector<double> bessel_j_orders(int max_order, double x) {
    if (max_order < 0) throw DomainError("bessel_j_orders: negative max_order");
    check_range(max_order, x);
    const double ax = std::abs(x);
    std::vector<double> out = ax < 1e-3 ? small_argument(max_order, ax) : miller(max_order, ax);
    if (x < 0.0) {
        for (int n = 1; n <= max_order; n += 2) out[n] = -out[n];
    }
    return out;
}

double bessel_j(int n, double x) {
    const int an = std::abs(n);
    check_range(an, x);
    const double v = bessel_j_orders(an, x)[an];
    return (n < 0 && (an % 2 == 1)) ? -v : v;
}

}  // namespace nfisac
