#include <random>

#include "doctest.h"
#include "nfisac/model.hpp"
#include "oracles.hpp"

using namespace nfisac;

namespace {

ArrayGeometry reference_geometry() { return ArrayGeometry(20, 100e9); }

}  // namespace

TEST_CASE("geometry derived quantities") {
    const ArrayGeometry g = reference_geometry();
    CHECK(g.wavelength() == doctest::Approx(0.003));
    CHECK(g.spacing() == doctest::Approx(0.0015));
    CHECK(g.aperture() == doctest::Approx(19 * 0.0015));
    CHECK_THROWS_AS(ArrayGeometry(1, 1e9), DomainError);
    CHECK_THROWS_AS(ArrayGeometry(4, -1.0), DomainError);
    CHECK(ArrayGeometry(4, 1e9, 0.25).spacing() == 0.25);
}

TEST_CASE("rayleigh distance") {
    CHECK(rayleigh_distance(4.0, kSpeedOfLight / 28e9) == doctest::Approx(2986.67).epsilon(1e-5));
    CHECK(rayleigh_distance(0.0, 0.01) == 0.0);
    CHECK(rayleigh_distance(reference_geometry()) == doctest::Approx(0.5415).epsilon(1e-4));
}

TEST_CASE("exact distance") {
    const ArrayGeometry g(8, kSpeedOfLight / 1.0, 0.5);  // lambda = 1, d = 0.5
    CHECK(exact_distance(g, 4.0, 0.7, 0) == doctest::Approx(4.0));
    CHECK(exact_distance(g, 2.0, kPi / 2, 3) == doctest::Approx(2.5));
    CHECK(exact_distance(g, 4.0, kPi / 6, 2) == doctest::Approx(std::sqrt(17.0 - 8.0 * std::cos(kPi / 6))));
    CHECK(exact_distance(g, 4.0, kPi / 6, 2) == doctest::Approx(3.17361).epsilon(1e-5));
    CHECK_THROWS_AS(exact_distance(g, 0.0, 1.0, 1), DomainError);
    CHECK_THROWS_AS(exact_distance(g, 1.0, 1.0, 8), DomainError);
    CHECK_THROWS_AS(exact_distance(g, 1.0, 1.0, -1), DomainError);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> th(0.01, kPi - 0.01), rr(0.1, 10.0);
    for (int i = 0; i < 200; ++i) {
        const double t = th(rng), r = rr(rng);
        const int n = static_cast<int>(rng() % 8);
        const double v = exact_distance(g, r, t, n);
        CHECK(v == doctest::Approx(oracle::distance_by_coordinates(0.5, r, t, n)).epsilon(1e-12));
        CHECK(v >= std::abs(r - n * 0.5) - 1e-12);
        CHECK(v <= r + n * 0.5 + 1e-12);
    }
}

TEST_CASE("exact steering matches coordinate oracle") {
    const double lambda = 0.01;
    const ArrayGeometry g(4, kSpeedOfLight / lambda);
    const VectorXcd a = exact_steering(g, kPi / 3, 10 * lambda);
    const VectorXcd o = oracle::steering_by_coordinates(g, kPi / 3, 10 * lambda);
    REQUIRE(a.size() == 4);
    CHECK((a - o).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(a(0) == cplx(1.0, 0.0));
    CHECK_THROWS_AS(exact_steering(g, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(exact_steering(g, kPi, 1.0), DomainError);
    CHECK_THROWS_AS(exact_steering(g, 1.0, -1.0), DomainError);
}

TEST_CASE("steering vectors are unit modulus with unit reference entry") {
    const ArrayGeometry g = reference_geometry();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> th(0.01, kPi - 0.01), rr(0.5, 20.0);
    for (int i = 0; i < 50; ++i) {
        const double t = th(rng), r = rr(rng);
        for (const VectorXcd& a : {exact_steering(g, t, r), fresnel_steering(g, t, r),
                                   fresnel_steering_product_form(g, t, r), farfield_steering(g, t)}) {
            REQUIRE(a.size() == 20);
            CHECK(a(0) == cplx(1.0, 0.0));
            CHECK((a.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("fresnel forms agree and approximate the exact response") {
    const ArrayGeometry g = reference_geometry();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> th(0.01, kPi - 0.01), rr(0.5, 20.0);
    for (int i = 0; i < 100; ++i) {
        const double t = th(rng), r = rr(rng);
        const VectorXcd a = fresnel_steering(g, t, r);
        const VectorXcd b = fresnel_steering_product_form(g, t, r);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }
    const VectorXcd ex = exact_steering(g, kPi / 6, 4.0);
    const VectorXcd fr = fresnel_steering(g, kPi / 6, 4.0);
    const double rel = (ex - fr).norm() / ex.norm();
    MESSAGE("fresnel vs exact relative error at (pi/6, 4 m): " << rel);
    CHECK(rel < 1e-2);
}

TEST_CASE("far-field consistency") {
    // Residual quadratic phase at r = c * 2D^2/lambda is at most pi sin^2(theta) / (2c).
    const ArrayGeometry g = reference_geometry();
    for (double scale : {1e3, 1e6, 1e9}) {
        const double r = scale * rayleigh_distance(g);
        for (double t : {0.3, 1.0, 2.0}) {
            const VectorXcd diff = fresnel_steering(g, t, r) - farfield_steering(g, t);
            const double bound = kPi * std::sin(t) * std::sin(t) / (2.0 * scale);
            CHECK(diff.cwiseAbs().maxCoeff() <= bound * (1.0 + 1e-6) + 1e-12);
            CHECK(diff.cwiseAbs().maxCoeff() >= 0.5 * bound);
        }
    }
}

TEST_CASE("channel synthesis") {
    const ArrayGeometry g(6, 30e9);
    const Source s{Role::Comm, {1.0, 0.0}, 1.1, 3.0};
    std::vector<Source> one{s};
    CHECK((synthesize_channel(g, one) - exact_steering(g, 1.1, 3.0)).norm() < 1e-14);

    std::vector<Source> cancel{{Role::Radar, {0.3, -0.2}, 0.7, 2.0}, {Role::Radar, {-0.3, 0.2}, 0.7, 2.0}};
    CHECK(synthesize_channel(g, cancel).norm() < 1e-14);

    std::vector<Source> two{{Role::Comm, {0.5, 0.1}, 0.4, 2.5}, {Role::Comm, {-0.2, 0.9}, 2.2, 6.0}};
    VectorXcd manual = VectorXcd::Zero(6);
    for (int n = 0; n < 6; ++n) {
        for (const Source& src : two) {
            const double rn = oracle::distance_by_coordinates(g.spacing(), src.distance, src.angle, n);
            manual(n) += src.gain * std::exp(cplx(0.0, -g.wavenumber() * (rn - src.distance)));
        }
    }
    CHECK((synthesize_channel(g, two) - manual).cwiseAbs().maxCoeff() < 1e-9);

    std::vector<Source> scaled = two;
    const cplx alpha(0.3, -1.7);
    for (Source& src : scaled) src.gain *= alpha;
    CHECK((synthesize_channel(g, scaled) - alpha * synthesize_channel(g, two)).norm() < 1e-12);

    std::vector<Source> mixed{s, {Role::Radar, {1.0, 0.0}, 1.0, 2.0}};
    CHECK_THROWS_AS(synthesize_channel(g, mixed), std::invalid_argument);
    CHECK_THROWS_AS(synthesize_channel(g, std::vector<Source>{}), std::invalid_argument);
}

TEST_CASE("complex gaussian pilots") {
    const MatrixXcd a = complex_gaussian_matrix(200, 50, 5, 1);
    const MatrixXcd b = complex_gaussian_matrix(200, 50, 5, 1);
    const MatrixXcd c = complex_gaussian_matrix(200, 50, 5, 2);
    const MatrixXcd d = complex_gaussian_matrix(200, 50, 6, 1);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a != d);
    const double n = static_cast<double>(a.size());
    CHECK(std::abs(a.sum() / n) < 0.05);
    CHECK(a.real().squaredNorm() / n == doctest::Approx(0.5).epsilon(0.05));
    CHECK(a.imag().squaredNorm() / n == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("measurement synthesis") {
    const ArrayGeometry g(8, 100e9);
    std::vector<Source> comm{{Role::Comm, {1.0, 0.0}, kPi / 3, 2.0}};
    std::vector<Source> radar{{Role::Radar, {0.5, 0.5}, kPi / 6, 4.0}};
    const MatrixXcd ac = complex_gaussian_matrix(6, 8, 1, 1);
    const MatrixXcd ar = complex_gaussian_matrix(6, 8, 1, 2);

    const MeasurementSet clean = synthesize_measurements(g, comm, radar, ac, ar, 0.0, 9);
    const VectorXcd expect = ac * synthesize_channel(g, comm) + ar * synthesize_channel(g, radar);
    CHECK((clean.y - expect).norm() < 1e-12);
    CHECK(clean.noise_bound == 0.0);

    const MeasurementSet radar_off =
        synthesize_measurements(g, comm, radar, ac, MatrixXcd::Zero(6, 8), 0.0, 9);
    CHECK((radar_off.y - ac * synthesize_channel(g, comm)).norm() < 1e-12);

    const MeasurementSet noisy1 = synthesize_measurements(g, comm, radar, ac, ar, 0.1, 9);
    const MeasurementSet noisy2 = synthesize_measurements(g, comm, radar, ac, ar, 0.1, 9);
    CHECK(noisy1.y == noisy2.y);
    const double eps = (noisy1.y - expect).norm();
    CHECK(eps > 0.0);
    CHECK(noisy1.noise_bound >= eps);
    CHECK(noisy1.noise_bound == doctest::Approx(eps * (1 + 1e-6)).epsilon(1e-12));

    CHECK_THROWS_AS(synthesize_measurements(g, comm, radar, ac, MatrixXcd::Zero(5, 8), 0.0, 1), DimensionError);
    CHECK_THROWS_AS(synthesize_measurements(g, comm, radar, MatrixXcd::Zero(6, 7), ar, 0.0, 1), DimensionError);
    CHECK_THROWS_AS(synthesize_measurements(g, comm, radar, ac, ar, -1.0, 1), DomainError);
}
