#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nfisac/superres.hpp"

namespace nfisac {

struct ConfigIssue {
    int line = 0;    // 1-based; 0 when not tied to a location
    int column = 0;  // 1-based
    std::string message;
};

/// Parse or validation failure; lists every problem found.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

enum class TruncationRule { ClosedForm, Tail };

struct SourceSpec {
    Role role = Role::Comm;
    double angle = 0.0;     // radians
    double distance = 0.0;  // meters
    double magnitude = 1.0;
    double phase = 0.0;  // radians

    friend bool operator==(const SourceSpec&, const SourceSpec&) = default;
};

struct DistanceRange {
    double r_min = 2.0;
    double r_max = 8.0;

    friend bool operator==(const DistanceRange&, const DistanceRange&) = default;
};

struct ScenarioConfig {
    double carrier_freq = 100e9;
    int num_antennas = 20;
    /// Element spacing in meters; nullopt means half a wavelength.
    std::optional<double> spacing;
    int measurements = 10;
    double noise_std = 0.0;
    /// Overrides the noise-norm bound eta used by the solver.
    std::optional<double> noise_bound;
    std::uint64_t seed = 1;
    std::vector<SourceSpec> sources;
    DistanceRange range_comm;
    DistanceRange range_radar;

    double theta_step = 1e-3;
    int r_points = 200;
    TruncationRule truncation = TruncationRule::ClosedForm;
    double tail_tol = 1e-10;

    ToeplitzMode toeplitz = ToeplitzMode::Frequency;
    int constraint_radii = 5;

    double solver_tol = 1e-6;
    int max_iters = 100000;
    double rho = 1.0;
    double relaxation = 1.6;
    int check_interval = 20;
    int anderson_memory = 5;

    double peak_threshold = 0.5;
    int candidates = 6;
    int sources_per_role = 1;

    int coarse_points = 16;
    double angle_window = 0.15;
    int angle_points = 31;
    int refine_iters = 20;
    double refine_tol = 1e-8;
    bool profile_gains = true;

    std::string output_dir = "out";

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ScenarioConfig& config);

/// Semantic checks shared by the loader and programmatic callers; empty when valid.
std::vector<ConfigIssue> validate_config(const ScenarioConfig& config);

ArrayGeometry make_geometry(const ScenarioConfig& config);
PipelineOptions make_pipeline_options(const ScenarioConfig& config);
std::vector<Source> make_sources(const ScenarioConfig& config, Role role);
LiftedDictionary make_dictionary(const ScenarioConfig& config, Role role);

}  // namespace nfisac
