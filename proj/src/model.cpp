#include "nfisac/model.hpp"

#include <cmath>
#include <random>
#include <string>

namespace nfisac {

namespace {

void check_angle_distance(double theta, double r) {
    if (!(theta > 0.0 && theta < kPi)) {
        throw DomainError("angle must lie in (0, pi), got " + std::to_string(theta));
    }
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw DomainError("distance must be positive and finite, got " + std::to_string(r));
    }
}

}  // namespace

ArrayGeometry::ArrayGeometry(int num_antennas, double carrier_freq, double spacing)
    : num_antennas_(num_antennas), carrier_freq_(carrier_freq), spacing_(spacing) {
    if (num_antennas < 2) throw DomainError("array needs at least 2 antennas");
    if (!(carrier_freq > 0.0) || !std::isfinite(carrier_freq)) {
        throw DomainError("carrier frequency must be positive");
    }
    if (spacing_ <= 0.0) spacing_ = 0.5 * wavelength();
}

double rayleigh_distance(double aperture, double wavelength) {
    if (aperture < 0.0 || !(wavelength > 0.0)) {
        throw DomainError("rayleigh_distance: aperture >= 0 and wavelength > 0 required");
    }
    return 2.0 * aperture * aperture / wavelength;
}

double rayleigh_distance(const ArrayGeometry& geom) {
    return rayleigh_distance(geom.aperture(), geom.wavelength());
}

double exact_distance(const ArrayGeometry& geom, double r, double theta, int n) {
    if (!(r > 0.0)) throw DomainError("exact_distance: distance must be positive");
    if (n < 0 || n >= geom.num_antennas()) {
        throw DomainError("exact_distance: antenna index " + std::to_string(n) + " out of range");
    }
    const double nd = n * geom.spacing();
    // Clamp guards the collinear case where rounding drives the radicand below zero.
    const double sq = r * r + nd * nd - 2.0 * r * nd * std::cos(theta);
    return std::sqrt(std::max(sq, 0.0));
}

VectorXcd exact_steering(const ArrayGeometry& geom, double theta, double r) {
    check_angle_distance(theta, r);
    const int N = geom.num_antennas();
    const double k = geom.wavenumber();
    VectorXcd a(N);
    a(0) = 1.0;
    for (int n = 1; n < N; ++n) {
        a(n) = std::polar(1.0, -k * (exact_distance(geom, r, theta, n) - r));
    }
    return a;
}

VectorXcd fresnel_steering(const ArrayGeometry& geom, double theta, double r) {
    check_angle_distance(theta, r);
    const int N = geom.num_antennas();
    const double k = geom.wavenumber();
    const double d = geom.spacing();
    const double c = std::cos(theta);
    const double s2 = std::sin(theta) * std::sin(theta);
    VectorXcd a(N);
    for (int n = 0; n < N; ++n) {
        const double nd = n * d;
        a(n) = std::polar(1.0, k * (nd * c - nd * nd * s2 / (2.0 * r)));
    }
    return a;
}

VectorXcd fresnel_steering_product_form(const ArrayGeometry& geom, double theta, double r) {
    check_angle_distance(theta, r);
    const int N = geom.num_antennas();
    const double k = geom.wavenumber();
    const double d = geom.spacing();
    VectorXcd a(N);
    for (int n = 0; n < N; ++n) {
        const double quad = n * n * d * d / (4.0 * r);
        const cplx range_factor = std::polar(1.0, -k * quad);
        const cplx angle_factor =
            std::polar(1.0, -k * (-n * d * std::cos(theta) - quad * std::cos(2.0 * theta)));
        a(n) = range_factor * angle_factor;
    }
    return a;
}

VectorXcd farfield_steering(const ArrayGeometry& geom, double theta) {
    const int N = geom.num_antennas();
    const double kd = geom.wavenumber() * geom.spacing();
    VectorXcd a(N);
    for (int n = 0; n < N; ++n) a(n) = std::polar(1.0, kd * n * std::cos(theta));
    return a;
}

VectorXcd synthesize_channel(const ArrayGeometry& geom, std::span<const Source> sources) {
    if (sources.empty()) throw std::invalid_argument("synthesize_channel: empty source list");
    const Role role = sources.front().role;
    VectorXcd h = VectorXcd::Zero(geom.num_antennas());
    for (const Source& s : sources) {
        if (s.role != role) throw std::invalid_argument("synthesize_channel: mixed roles");
        h += s.gain * exact_steering(geom, s.angle, s.distance);
    }
    return h;
}

MatrixXcd complex_gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                                  std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::mt19937_64 engine(seq);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    MatrixXcd out(rows, cols);
    // Fill row-major so the stream layout does not depend on Eigen's storage order.
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double re = normal(engine);
            const double im = normal(engine);
            out(i, j) = cplx(re, im);
        }
    }
    return out;
}

MeasurementSet synthesize_measurements(const ArrayGeometry& geom,
                                       std::span<const Source> comm_sources,
                                       std::span<const Source> radar_sources,
                                       const MatrixXcd& pilots_comm,
                                       const MatrixXcd& pilots_radar, double noise_std,
                                       std::uint64_t rng_seed) {
    const Eigen::Index N = geom.num_antennas();
    if (pilots_comm.cols() != N || pilots_radar.cols() != N ||
        pilots_comm.rows() != pilots_radar.rows() || pilots_comm.rows() == 0) {
        throw DimensionError("synthesize_measurements: pilot matrices must both be m x N_r");
    }
    if (!(noise_std >= 0.0)) throw DomainError("noise_std must be >= 0");
    for (const Source& s : comm_sources) {
        if (s.role != Role::Comm) throw std::invalid_argument("radar source in comm list");
    }
    for (const Source& s : radar_sources) {
        if (s.role != Role::Radar) throw std::invalid_argument("comm source in radar list");
    }

    MeasurementSet out;
    out.pilots_comm = pilots_comm;
    out.pilots_radar = pilots_radar;
    out.y = VectorXcd::Zero(pilots_comm.rows());
    if (!comm_sources.empty()) out.y += pilots_comm * synthesize_channel(geom, comm_sources);
    if (!radar_sources.empty()) out.y += pilots_radar * synthesize_channel(geom, radar_sources);

    if (noise_std > 0.0) {
        VectorXcd noise = noise_std * complex_gaussian_matrix(out.y.size(), 1, rng_seed, 0x6e6f697365);
        out.y += noise;
        out.noise_bound = noise.norm() * (1.0 + 1e-6);
    }
    return out;
}

}  // namespace nfisac
