#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nfisac/types.hpp"

namespace nfisac {

/// Uniform linear array at the common receiver. Antenna 0 is the phase
/// reference; antenna n sits at distance n*d from it along the array axis.
class ArrayGeometry {
public:
    /// `spacing` <= 0 selects half-wavelength spacing.
    ArrayGeometry(int num_antennas, double carrier_freq, double spacing = 0.0);

    int num_antennas() const { return num_antennas_; }
    double spacing() const { return spacing_; }
    double carrier_freq() const { return carrier_freq_; }
    double wavelength() const { return kSpeedOfLight / carrier_freq_; }
    double wavenumber() const { return 2.0 * kPi / wavelength(); }
    double aperture() const { return (num_antennas_ - 1) * spacing_; }

    friend bool operator==(const ArrayGeometry&, const ArrayGeometry&) = default;

private:
    int num_antennas_;
    double carrier_freq_;
    double spacing_;
};

/// One radar target or communication scatterer.
struct Source {
    Role role = Role::Comm;
    cplx gain{1.0, 0.0};
    double angle = kPi / 2;  // radians, open interval (0, pi)
    double distance = 1.0;   // meters from the reference antenna

    friend bool operator==(const Source&, const Source&) = default;
};

/// y = A_C h_C + A_R h_R + noise, with `noise_bound` >= ||noise||_2.
struct MeasurementSet {
    VectorXcd y;
    MatrixXcd pilots_comm;   // m x N_r
    MatrixXcd pilots_radar;  // m x N_r
    double noise_bound = 0.0;

    Eigen::Index size() const { return y.size(); }
    const MatrixXcd& pilots(Role role) const {
        return role == Role::Comm ? pilots_comm : pilots_radar;
    }
};

/// 2 D^2 / lambda. Zero for a zero-aperture array.
double rayleigh_distance(double aperture, double wavelength);
double rayleigh_distance(const ArrayGeometry& geom);

/// Distance from a source at (r, theta) to antenna n.
double exact_distance(const ArrayGeometry& geom, double r, double theta, int n);

/// Spherical-wavefront array response, entry n = exp(-j k (r_n - r)).
VectorXcd exact_steering(const ArrayGeometry& geom, double theta, double r);

/// Second-order (Fresnel) approximation of exact_steering:
/// entry n = exp(j k (n d cos(theta) - n^2 d^2 sin^2(theta) / (2 r))).
VectorXcd fresnel_steering(const ArrayGeometry& geom, double theta, double r);

/// The same approximation written as the product of an r-only factor and
/// a factor in cos(theta), cos(2 theta). Kept to cross-check the algebra.
VectorXcd fresnel_steering_product_form(const ArrayGeometry& geom, double theta, double r);

/// Planar-wavefront response exp(j k n d cos(theta)).
VectorXcd farfield_steering(const ArrayGeometry& geom, double theta);

/// sum_i gain_i * exact_steering(angle_i, distance_i). All sources must
/// share one role.
VectorXcd synthesize_channel(const ArrayGeometry& geom, std::span<const Source> sources);

/// m x cols matrix of i.i.d. CN(0, 1) entries (real and imaginary parts
/// N(0, 1/2)), reproducible from (seed, stream).
MatrixXcd complex_gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                                  std::uint64_t stream = 0);

/// Builds y from the two source lists. Noise is CN(0, noise_std^2) per
/// component; the bound is set to ||noise|| * (1 + 1e-6).
MeasurementSet synthesize_measurements(const ArrayGeometry& geom,
                                       std::span<const Source> comm_sources,
                                       std::span<const Source> radar_sources,
                                       const MatrixXcd& pilots_comm,
                                       const MatrixXcd& pilots_radar, double noise_std,
                                       std::uint64_t rng_seed);

}  // namespace nfisac
