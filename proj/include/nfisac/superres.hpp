#pragma once

#include <string>
#include <vector>

#include "nfisac/lifting.hpp"
#include "nfisac/model.hpp"
#include "nfisac/sdp.hpp"

namespace nfisac {

/// theta_i = i * step for i = 1, 2, ... while theta_i < pi.
std::vector<double> angle_grid(double step);
/// `count` log-spaced points from r_min to r_max inclusive.
std::vector<double> distance_grid(double r_min, double r_max, int count);

/// |f(theta)| = max_r |<A^H q, C(r) v(theta)>| sampled on a grid.
class DualPolynomial {
public:
    DualPolynomial() = default;
    DualPolynomial(Role role, std::vector<double> theta, std::vector<double> r_grid,
                   std::vector<VectorXcd> coefficients);

    Role role() const { return role_; }
    const std::vector<double>& theta() const { return theta_; }
    const std::vector<double>& r_grid() const { return r_grid_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& argmax_r() const { return argmax_r_; }
    double max_value() const;

    /// Off-grid evaluation; the inner sup still runs over r_grid().
    double evaluate(double theta, double* best_r = nullptr) const;

private:
    Role role_ = Role::Comm;
    std::vector<double> theta_;
    std::vector<double> r_grid_;
    // coeffs_[i][k + K]: weight of exp(j k theta) at r_grid_[i].
    std::vector<VectorXcd> coeffs_;
    std::vector<double> values_;
    std::vector<double> argmax_r_;
};

DualPolynomial dual_polynomial(const VectorXcd& q, const MeasurementSet& measurements,
                               const LiftedDictionary& dict, Role role,
                               const std::vector<double>& theta_grid,
                               const std::vector<double>& r_grid);

struct PeakOptions {
    double threshold = 0.5;
    double resolution = 1e-5;
};

struct PeakSet {
    std::vector<double> angles;  // descending by value
    std::vector<double> values;
    /// Fewer peaks above threshold than requested.
    bool flagged = false;
};

/// The `count` largest local maxima of |f| above the threshold, refined by
/// golden-section search between the neighbouring grid points.
PeakSet extract_angles(const DualPolynomial& poly, int count, const PeakOptions& opts = {});

struct SourceEstimate {
    Role role = Role::Comm;
    double angle = 0.0;
    double distance = 0.0;
    cplx gain{0.0, 0.0};
};

struct EstimateSet {
    std::vector<SourceEstimate> sources;
    double residual = 0.0;
    int iterations = 0;
    /// Residual after initialisation and after every half-step.
    std::vector<double> residual_history;
    /// Largest |column^H residual| / (||column|| ||y||) after the last gain step.
    double normal_equation_residual = 0.0;
    /// Gain step hit a (near) rank-deficient regressor and was regularised.
    bool rank_deficient = false;
    bool flagged = false;
    std::string note;
};

struct RefineOptions {
    double r_min_comm = 2.0;
    double r_max_comm = 8.0;
    double r_min_radar = 2.0;
    double r_max_radar = 8.0;
    /// Points per role of the coarse distance grid.
    int coarse_points = 16;
    /// Angles may move by at most this much during the distance step; 0 keeps them fixed.
    double angle_window = 0.15;
    /// Angle samples across the window in the coarse search.
    int angle_points = 31;
    int max_iters = 20;
    double tol = 1e-8;
    /// Re-solve the gains inside the distance search instead of holding them.
    bool profile_gains = true;
};

/// Alternates a distance step (gains fixed) and a closed-form gain step,
/// using the exact spherical-wave model. Angles are per role.
EstimateSet refine_distances_gains(const MeasurementSet& measurements, const ArrayGeometry& geom,
                                   const std::vector<double>& angles_comm,
                                   const std::vector<double>& angles_radar,
                                   const RefineOptions& opts = {});

struct PipelineOptions {
    AssembleOptions assemble;
    SolverOptions solver;
    double theta_step = 1e-3;
    int r_points = 200;
    PeakOptions peaks;
    RefineOptions refine;
    int sources_per_role = 1;
    /// Peaks kept per role; every combination is refined and the one with
    /// the smallest residual wins.
    int candidates = 6;
};

struct StageTimes {
    double assemble = 0.0;
    double solve = 0.0;
    double polynomial = 0.0;
    double refine = 0.0;
};

struct PipelineResult {
    DualSolution solution;
    FeasibilityReport feasibility;
    DualPolynomial poly_comm;
    DualPolynomial poly_radar;
    PeakSet peaks_comm;
    PeakSet peaks_radar;
    EstimateSet estimates;
    int combinations_tried = 0;
    /// A comm and a radar estimate share an angle to within one grid step.
    bool angle_collision = false;
    StageTimes seconds;
};

PipelineResult run_pipeline(const MeasurementSet& measurements, const LiftedDictionary& comm,
                            const LiftedDictionary& radar, const PipelineOptions& opts = {});

}  // namespace nfisac
