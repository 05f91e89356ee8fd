#include <random>

#include "doctest.h"
#include "nfisac/superres.hpp"

using namespace nfisac;

namespace {

struct Scene {
    ArrayGeometry geom{8, 100e9};
    std::vector<Source> comm{{Role::Comm, {1.0, 0.0}, kPi / 3, 2.5}};
    std::vector<Source> radar{{Role::Radar, {0.6, -0.4}, kPi / 6, 4.0}};
    MeasurementSet meas;

    explicit Scene(double noise = 0.0) {
        meas = synthesize_measurements(geom, comm, radar, complex_gaussian_matrix(8, 8, 1, 5),
                                       complex_gaussian_matrix(8, 8, 2, 5), noise, 17);
    }
};

// |sum_k c_k exp(j k theta)| for c_k = sum_i a_i exp(-j k t_i) / (2K+1): peaks a_i at t_i.
DualPolynomial dirichlet(const std::vector<double>& at, const std::vector<double>& height, int K) {
    VectorXcd c = VectorXcd::Zero(2 * K + 1);
    for (std::size_t i = 0; i < at.size(); ++i) {
        for (int k = -K; k <= K; ++k) c(k + K) += height[i] * std::polar(1.0, -k * at[i]) / (2.0 * K + 1);
    }
    return DualPolynomial(Role::Comm, angle_grid(1e-3), {1.0}, {c});
}

double residual_at(const MeasurementSet& m, const ArrayGeometry& g, Role role, double t, double r) {
    const VectorXcd col = m.pilots(role) * exact_steering(g, t, r);
    const cplx gain = col.dot(m.y) / col.squaredNorm();
    return (m.y - gain * col).norm();
}

}  // namespace

TEST_CASE("grids") {
    const auto th = angle_grid(1e-3);
    CHECK(th.size() == 3141);
    CHECK(th.front() == doctest::Approx(1e-3));
    CHECK(th.back() < kPi);
    CHECK_THROWS_AS(angle_grid(0.0), DomainError);
    const auto r = distance_grid(2.0, 8.0, 3);
    REQUIRE(r.size() == 3);
    CHECK(r[0] == 2.0);
    CHECK(r[1] == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(r[2] == 8.0);
    CHECK(distance_grid(2.0, 8.0, 1).size() == 1);
    CHECK_THROWS_AS(distance_grid(8.0, 2.0, 4), DomainError);
}

TEST_CASE("zero multiplier gives a zero polynomial and no peaks") {
    Scene s;
    const LiftedDictionary dict(s.geom, 2.0, 8.0);
    const DualPolynomial p = dual_polynomial(VectorXcd::Zero(8), s.meas, dict, Role::Comm,
                                             angle_grid(1e-2), distance_grid(2.0, 8.0, 5));
    CHECK(p.max_value() == 0.0);
    const PeakSet peaks = extract_angles(p, 1);
    CHECK(peaks.angles.empty());
    CHECK(peaks.flagged);
}

TEST_CASE("single harmonic has constant modulus") {
    VectorXcd c = VectorXcd::Zero(5);
    c(3) = {0.0, 0.7};
    const DualPolynomial p(Role::Radar, angle_grid(0.1), {3.0}, {c});
    for (double v : p.values()) CHECK(v == doctest::Approx(0.7));
    CHECK(p.evaluate(1.234) == doctest::Approx(0.7));
    for (double r : p.argmax_r()) CHECK(r == 3.0);
}

TEST_CASE("two separated peaks are located and ordered") {
    const DualPolynomial p = dirichlet({0.8, 2.1}, {0.6, 0.9}, 40);
    const PeakSet peaks = extract_angles(p, 2);
    REQUIRE(peaks.angles.size() == 2);
    CHECK_FALSE(peaks.flagged);
    CHECK(std::abs(peaks.angles[0] - 2.1) < 5e-3);
    CHECK(std::abs(peaks.angles[1] - 0.8) < 5e-3);
    CHECK(peaks.values[0] >= peaks.values[1]);
    for (std::size_t i = 0; i < 2; ++i) {
        double best = 0.0, at = 0.0;
        for (int k = -5000; k <= 5000; ++k) {
            const double t = peaks.angles[i] + k * 1e-7;
            if (const double v = p.evaluate(t); v > best) best = v, at = t;
        }
        CHECK(std::abs(peaks.angles[i] - at) <= 1e-5);
        CHECK(peaks.values[i] == doctest::Approx(best).epsilon(1e-9));
    }

    const PeakSet one = extract_angles(p, 3, {0.7, 1e-6});
    CHECK(one.angles.size() == 1);
    CHECK(one.flagged);
    CHECK_THROWS_AS(extract_angles(p, 0), DomainError);
}

TEST_CASE("dual polynomial matches direct evaluation") {
    Scene s;
    const LiftedDictionary dict(s.geom, 2.0, 8.0);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    VectorXcd q(8);
    for (int i = 0; i < 8; ++i) q(i) = {nd(rng), nd(rng)};
    const std::vector<double> rg = distance_grid(2.0, 8.0, 7);
    const DualPolynomial p = dual_polynomial(q, s.meas, dict, Role::Radar, angle_grid(0.05), rg);
    for (std::size_t i = 0; i < p.theta().size(); i += 5) {
        double best = 0.0, best_r = 0.0;
        for (double r : rg) {
            const double v = std::abs((s.meas.pilots_radar * dict.lifted_steering(p.theta()[i], r)).dot(q));
            if (v > best) best = v, best_r = r;
        }
        CHECK(p.values()[i] == doctest::Approx(best).epsilon(1e-10));
        CHECK(p.argmax_r()[i] == best_r);
        double er = 0.0;
        CHECK(p.evaluate(p.theta()[i], &er) == doctest::Approx(best).epsilon(1e-10));
        CHECK(er == best_r);
    }
    CHECK_THROWS_AS(dual_polynomial(VectorXcd::Zero(3), s.meas, dict, Role::Comm, {1.0}, rg), DimensionError);
}

TEST_CASE("refinement recovers distances and gains from exact angles") {
    Scene s;
    const EstimateSet e = refine_distances_gains(s.meas, s.geom, {kPi / 3}, {kPi / 6});
    REQUIRE(e.sources.size() == 2);
    CHECK(e.sources[0].role == Role::Comm);
    CHECK(e.sources[0].distance == doctest::Approx(2.5).epsilon(1e-6));
    CHECK(e.sources[1].distance == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(std::abs(e.sources[0].gain - cplx(1.0, 0.0)) < 1e-5);
    CHECK(std::abs(e.sources[1].gain - cplx(0.6, -0.4)) < 1e-5);
    CHECK(e.residual <= 1e-6 * s.meas.y.norm());
    CHECK(e.normal_equation_residual <= 1e-8);
    CHECK_FALSE(e.rank_deficient);
}

TEST_CASE("refinement from perturbed angles is monotone") {
    for (double noise : {0.0, 0.05}) {
        Scene s(noise);
        const EstimateSet e = refine_distances_gains(s.meas, s.geom, {kPi / 3 + 0.01}, {kPi / 6 - 0.008});
        REQUIRE(e.residual_history.size() >= 2);
        for (std::size_t i = 1; i < e.residual_history.size(); ++i) {
            CHECK(e.residual_history[i] <= e.residual_history[i - 1]);
        }
        CHECK(e.normal_equation_residual <= 1e-8);
        CHECK(std::abs(e.sources[0].angle - kPi / 3) < 0.02);
        CHECK(std::abs(e.sources[1].angle - kPi / 6) < 0.02);
        if (noise == 0.0) {
            CHECK(e.sources[0].distance == doctest::Approx(2.5).epsilon(1e-4));
            CHECK(e.sources[1].distance == doctest::Approx(4.0).epsilon(1e-4));
        }
    }
}

TEST_CASE("single-source distance fit is no worse than a dense grid") {
    Scene s(0.05);
    s.meas.pilots_radar.setZero();
    s.meas.y = s.meas.pilots_comm * exact_steering(s.geom, 1.3, 5.5) * cplx(0.8, 0.1);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd(0.0, 0.05);
    for (Eigen::Index i = 0; i < s.meas.y.size(); ++i) s.meas.y(i) += cplx(nd(rng), nd(rng));
    RefineOptions o;
    o.angle_window = 0.0;
    const EstimateSet e = refine_distances_gains(s.meas, s.geom, {1.3}, {}, o);
    double brute = std::numeric_limits<double>::infinity();
    for (double r : distance_grid(2.0, 8.0, 4000)) brute = std::min(brute, residual_at(s.meas, s.geom, Role::Comm, 1.3, r));
    CHECK(e.residual <= brute + 1e-9);
    CHECK(e.sources[0].angle == 1.3);
}

TEST_CASE("refinement is covariant under measurement scaling") {
    Scene s;
    const cplx alpha(-0.3, 2.0);
    MeasurementSet scaled = s.meas;
    scaled.y *= alpha;
    const EstimateSet a = refine_distances_gains(s.meas, s.geom, {kPi / 3 + 0.005}, {kPi / 6});
    const EstimateSet b = refine_distances_gains(scaled, s.geom, {kPi / 3 + 0.005}, {kPi / 6});
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(b.sources[i].distance == doctest::Approx(a.sources[i].distance).epsilon(1e-6));
        CHECK(std::abs(b.sources[i].gain - alpha * a.sources[i].gain) <= 1e-6 * std::abs(alpha));
    }
}

TEST_CASE("refinement without angles is flagged") {
    Scene s;
    const EstimateSet e = refine_distances_gains(s.meas, s.geom, {}, {});
    CHECK(e.flagged);
    CHECK(e.sources.empty());
    CHECK(e.residual == doctest::Approx(s.meas.y.norm()));
    CHECK_THROWS_AS(refine_distances_gains(s.meas, s.geom, {0.0}, {}), DomainError);
}

TEST_CASE("pipeline on a small noiseless scene") {
    Scene s;
    const LiftedDictionary dict(s.geom, 2.0, 8.0);
    PipelineOptions o;
    o.solver.tol = 1e-2;
    o.theta_step = 2e-3;
    o.r_points = 50;
    const PipelineResult r = run_pipeline(s.meas, dict, dict, o);
    CHECK(r.feasibility.pass);
    CHECK(r.poly_comm.max_value() <= 1.0 + 1e-3);
    REQUIRE(r.estimates.sources.size() == 2);
    CHECK(std::abs(r.estimates.sources[0].angle - kPi / 3) < 0.02);
    CHECK(std::abs(r.estimates.sources[1].angle - kPi / 6) < 0.02);
    CHECK(r.combinations_tried >= 1);
    CHECK_FALSE(r.angle_collision);
}
