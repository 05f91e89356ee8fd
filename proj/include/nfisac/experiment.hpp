#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nfisac/config.hpp"

namespace nfisac {

/// Acceptance tolerances for a recovered source.
struct RecoveryTolerance {
    double angle = 0.02;             // radians
    double relative_distance = 0.1;  // fraction of the true distance
};

struct SourceReport {
    Role role = Role::Comm;
    double true_angle = 0.0;
    double true_distance = 0.0;
    cplx true_gain{0.0, 0.0};
    bool estimated = false;
    double angle = 0.0;
    double distance = 0.0;
    cplx gain{0.0, 0.0};
    double angle_error = 0.0;
    double distance_error = 0.0;  // relative
    double gain_error = 0.0;      // absolute
};

struct RunReport {
    std::uint64_t seed = 0;
    int width_comm = 0;
    int width_radar = 0;
    TruncationOrders orders_comm;
    TruncationOrders orders_radar;
    double noise_bound = 0.0;
    std::vector<SourceReport> sources;
    double residual = 0.0;
    int refine_iterations = 0;
    double normal_equation_residual = 0.0;
    bool residual_monotone = true;
    bool rank_deficient = false;
    bool estimates_flagged = false;
    bool angle_collision = false;
    std::string note;
    SolverDiagnostics solver;
    double objective = 0.0;
    bool feasible = false;
    double feasibility_min_eigenvalue = 0.0;
    double max_poly_comm = 0.0;
    double max_poly_radar = 0.0;
    std::vector<double> peaks_comm;
    std::vector<double> peaks_radar;
    int combinations_tried = 0;
    bool success = false;
    StageTimes seconds;
    double total_seconds = 0.0;
};

/// Pilots, channels and noise for one trial; reproducible from `seed`.
MeasurementSet draw_measurements(const ScenarioConfig& config, std::uint64_t seed);

struct RunOutput {
    RunReport report;
    PipelineResult pipeline;
};

/// One trial of the scenario with the given seed.
RunOutput run_trial(const ScenarioConfig& config, std::uint64_t seed,
                    const RecoveryTolerance& tol = {});

/// report.json, estimates.tsv and curves.tsv (deterministic per seed) plus timing.json.
void write_artifacts(const RunOutput& out, const std::filesystem::path& dir);

std::string report_json(const RunReport& report);
std::string curves_tsv(const PipelineResult& result);
std::string estimates_tsv(const RunReport& report);

/// Process exit status for a finished run: 0 success, 3 solver did not
/// converge, 4 estimates flagged (too few peaks above threshold).
int exit_status(const RunReport& report);

enum class SweepVariable { NumAntennas, Measurements, NoiseStd, RadarDistance, CarrierFreq };

SweepVariable sweep_variable_from_string(const std::string& name);
std::string to_string(SweepVariable v);

/// Copy of `base` with the variable set to `value`. A radar-distance sweep
/// moves every radar source and rescales the radar range by the same factor.
ScenarioConfig apply_sweep_value(const ScenarioConfig& base, SweepVariable var, double value);

struct SweepPoint {
    double value = 0.0;
    std::uint64_t seed = 0;
    bool ok = false;  // ran to completion
    int status = 0;
    std::string error;
    RunReport report;
};

/// Point i runs with seed base.seed + i in `dir`/point_<i>; failures are
/// recorded and the sweep continues.
std::vector<SweepPoint> sweep(const ScenarioConfig& base, SweepVariable var,
                              const std::vector<double>& values,
                              const std::filesystem::path& dir, const RecoveryTolerance& tol = {});

/// Independent trials of one scenario; trial i uses seed base.seed + i and
/// writes to `dir`/trial_<i>.
std::vector<SweepPoint> monte_carlo(const ScenarioConfig& base, int trials,
                                    const std::filesystem::path& dir, const RecoveryTolerance& tol = {});

/// Tab-separated summary; `column` names the swept quantity.
std::string sweep_tsv(const std::string& column, const std::vector<SweepPoint>& points);

}  // namespace nfisac
