#include "nfisac/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace nfisac {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::ordered_json;

constexpr std::uint64_t kCommPilotStream = 1;
constexpr std::uint64_t kRadarPilotStream = 2;

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

ordered_json complex_json(cplx z) { return ordered_json::array({z.real(), z.imag()}); }

}  // namespace

MeasurementSet draw_measurements(const ScenarioConfig& c, std::uint64_t seed) {
    const ArrayGeometry geom = make_geometry(c);
    const MatrixXcd pc = complex_gaussian_matrix(c.measurements, c.num_antennas, seed, kCommPilotStream);
    const MatrixXcd pr = complex_gaussian_matrix(c.measurements, c.num_antennas, seed, kRadarPilotStream);
    const std::vector<Source> comm = make_sources(c, Role::Comm);
    const std::vector<Source> radar = make_sources(c, Role::Radar);
    MeasurementSet m = synthesize_measurements(geom, comm, radar, pc, pr, c.noise_std, seed);
    if (c.noise_bound) m.noise_bound = *c.noise_bound;
    return m;
}

RunOutput run_trial(const ScenarioConfig& c, std::uint64_t seed, const RecoveryTolerance& tol) {
    const auto t0 = Clock::now();
    if (const auto issues = validate_config(c); !issues.empty()) throw ConfigError(issues);
    RunOutput out;
    RunReport& rep = out.report;
    rep.seed = seed;
    const MeasurementSet meas = draw_measurements(c, seed);
    const LiftedDictionary comm = make_dictionary(c, Role::Comm);
    const LiftedDictionary radar = make_dictionary(c, Role::Radar);
    rep.orders_comm = comm.orders();
    rep.orders_radar = radar.orders();
    rep.width_comm = comm.width();
    rep.width_radar = radar.width();
    rep.noise_bound = meas.noise_bound;

    out.pipeline = run_pipeline(meas, comm, radar, make_pipeline_options(c));
    const PipelineResult& res = out.pipeline;
    const EstimateSet& est = res.estimates;
    rep.residual = est.residual;
    rep.refine_iterations = est.iterations;
    rep.normal_equation_residual = est.normal_equation_residual;
    rep.rank_deficient = est.rank_deficient;
    rep.estimates_flagged = est.flagged;
    rep.angle_collision = res.angle_collision;
    rep.note = est.note;
    for (std::size_t i = 1; i < est.residual_history.size(); ++i) {
        if (est.residual_history[i] > est.residual_history[i - 1]) rep.residual_monotone = false;
    }
    rep.solver = res.solution.diagnostics;
    rep.objective = res.solution.objective;
    rep.feasible = res.feasibility.pass;
    rep.feasibility_min_eigenvalue = res.feasibility.min_eigenvalue;
    rep.max_poly_comm = res.poly_comm.max_value();
    rep.max_poly_radar = res.poly_radar.max_value();
    rep.peaks_comm = res.peaks_comm.angles;
    rep.peaks_radar = res.peaks_radar.angles;
    rep.combinations_tried = res.combinations_tried;

    // Pair each true source with the nearest unused estimate of its role.
    std::vector<bool> used(est.sources.size(), false);
    bool all_ok = true;
    for (const SourceSpec& s : c.sources) {
        SourceReport sr;
        sr.role = s.role;
        sr.true_angle = s.angle;
        sr.true_distance = s.distance;
        sr.true_gain = std::polar(s.magnitude, s.phase);
        std::size_t best = est.sources.size();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < est.sources.size(); ++i) {
            if (used[i] || est.sources[i].role != s.role) continue;
            const double d = std::abs(est.sources[i].angle - s.angle);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        if (best < est.sources.size()) {
            used[best] = true;
            const SourceEstimate& e = est.sources[best];
            sr.estimated = true;
            sr.angle = e.angle;
            sr.distance = e.distance;
            sr.gain = e.gain;
            sr.angle_error = std::abs(e.angle - s.angle);
            sr.distance_error = std::abs(e.distance - s.distance) / s.distance;
            sr.gain_error = std::abs(e.gain - sr.true_gain);
        }
        all_ok = all_ok && sr.estimated && sr.angle_error <= tol.angle &&
                 sr.distance_error <= tol.relative_distance;
        rep.sources.push_back(sr);
    }
    rep.success = all_ok;
    rep.seconds = res.seconds;
    rep.total_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return out;
}

std::string report_json(const RunReport& r) {
    ordered_json j;
    j["seed"] = r.seed;
    j["success"] = r.success;
    j["lifting"] = {
        {"comm", {{"i1", r.orders_comm.i1}, {"i2", r.orders_comm.i2}, {"width", r.width_comm}}},
        {"radar", {{"i1", r.orders_radar.i1}, {"i2", r.orders_radar.i2}, {"width", r.width_radar}}}};
    j["noise_bound"] = r.noise_bound;
    ordered_json srcs = ordered_json::array();
    for (const SourceReport& s : r.sources) {
        ordered_json o;
        o["role"] = std::string(to_string(s.role));
        o["truth"] = {{"angle", s.true_angle}, {"distance", s.true_distance}, {"gain", complex_json(s.true_gain)}};
        if (s.estimated) {
            o["estimate"] = {{"angle", s.angle}, {"distance", s.distance}, {"gain", complex_json(s.gain)}};
            o["error"] = {{"angle", s.angle_error},
                          {"distance_relative", s.distance_error},
                          {"gain", s.gain_error}};
        } else {
            o["estimate"] = nullptr;
        }
        srcs.push_back(o);
    }
    j["sources"] = srcs;
    j["refine"] = {{"residual", r.residual},
                   {"iterations", r.refine_iterations},
                   {"normal_equation_residual", r.normal_equation_residual},
                   {"residual_monotone", r.residual_monotone},
                   {"rank_deficient", r.rank_deficient},
                   {"flagged", r.estimates_flagged},
                   {"angle_collision", r.angle_collision},
                   {"combinations_tried", r.combinations_tried},
                   {"note", r.note}};
    j["solver"] = {{"status", r.solver.status},
                   {"converged", r.solver.converged},
                   {"iterations", r.solver.iterations},
                   {"objective", r.objective},
                   {"objective_upper_bound", r.solver.upper_bound},
                   {"relative_gap", r.solver.relative_gap},
                   {"primal_residual", r.solver.primal_residual},
                   {"dual_residual", r.solver.dual_residual},
                   {"restoration", r.solver.restoration},
                   {"rho", r.solver.rho}};
    j["feasibility"] = {{"pass", r.feasible}, {"min_eigenvalue", r.feasibility_min_eigenvalue}};
    j["dual_polynomial"] = {{"max_comm", r.max_poly_comm},
                            {"max_radar", r.max_poly_radar},
                            {"peaks_comm", r.peaks_comm},
                            {"peaks_radar", r.peaks_radar}};
    return j.dump(2) + "\n";
}

std::string curves_tsv(const PipelineResult& res) {
    std::string out = "theta\tabs_f_radar\tabs_f_comm\targmax_r_radar\targmax_r_comm\n";
    const auto& th = res.poly_radar.theta();
    for (std::size_t i = 0; i < th.size(); ++i) {
        out += fmt("%.9f", th[i]) + '\t' + fmt("%.12e", res.poly_radar.values()[i]) + '\t' +
               fmt("%.12e", res.poly_comm.values()[i]) + '\t' + fmt("%.9f", res.poly_radar.argmax_r()[i]) +
               '\t' + fmt("%.9f", res.poly_comm.argmax_r()[i]) + '\n';
    }
    return out;
}

std::string estimates_tsv(const RunReport& r) {
    std::string out =
        "role\ttrue_angle\ttrue_distance\tangle\tdistance\tgain_re\tgain_im\tangle_error\tdistance_error\n";
    for (const SourceReport& s : r.sources) {
        out += std::string(to_string(s.role)) + '\t' + fmt("%.12g", s.true_angle) + '\t' +
               fmt("%.12g", s.true_distance) + '\t';
        if (s.estimated) {
            out += fmt("%.12g", s.angle) + '\t' + fmt("%.12g", s.distance) + '\t' + fmt("%.12g", s.gain.real()) +
                   '\t' + fmt("%.12g", s.gain.imag()) + '\t' + fmt("%.6e", s.angle_error) + '\t' +
                   fmt("%.6e", s.distance_error) + '\n';
        } else {
            out += "nan\tnan\tnan\tnan\tnan\tnan\n";
        }
    }
    return out;
}

void write_artifacts(const RunOutput& out, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file(dir / "report.json", report_json(out.report));
    write_file(dir / "estimates.tsv", estimates_tsv(out.report));
    write_file(dir / "curves.tsv", curves_tsv(out.pipeline));
    const RunReport& r = out.report;
    ordered_json t = {{"assemble", r.seconds.assemble},
                      {"solve", r.seconds.solve},
                      {"polynomial", r.seconds.polynomial},
                      {"refine", r.seconds.refine},
                      {"total", r.total_seconds}};
    write_file(dir / "timing.json", t.dump(2) + "\n");
}

int exit_status(const RunReport& r) {
    if (!r.solver.converged) return 3;
    if (r.estimates_flagged) return 4;
    return 0;
}

SweepVariable sweep_variable_from_string(const std::string& name) {
    if (name == "N_r") return SweepVariable::NumAntennas;
    if (name == "m") return SweepVariable::Measurements;
    if (name == "noise_std") return SweepVariable::NoiseStd;
    if (name == "r_R") return SweepVariable::RadarDistance;
    if (name == "f_c") return SweepVariable::CarrierFreq;
    throw std::invalid_argument("unknown sweep variable '" + name + "' (use N_r, m, noise_std, r_R, f_c)");
}

std::string to_string(SweepVariable v) {
    switch (v) {
        case SweepVariable::NumAntennas: return "N_r";
        case SweepVariable::Measurements: return "m";
        case SweepVariable::NoiseStd: return "noise_std";
        case SweepVariable::RadarDistance: return "r_R";
        case SweepVariable::CarrierFreq: return "f_c";
    }
    return "?";
}

ScenarioConfig apply_sweep_value(const ScenarioConfig& base, SweepVariable var, double value) {
    ScenarioConfig c = base;
    auto as_int = [&](const char* what) {
        if (value != std::floor(value) || value < 1 || value > 1e6) {
            throw std::invalid_argument(std::string(what) + " sweep values must be positive integers");
        }
        return static_cast<int>(value);
    };
    switch (var) {
        case SweepVariable::NumAntennas: c.num_antennas = as_int("N_r"); break;
        case SweepVariable::Measurements: c.measurements = as_int("m"); break;
        case SweepVariable::NoiseStd: c.noise_std = value; break;
        case SweepVariable::CarrierFreq: c.carrier_freq = value; break;
        case SweepVariable::RadarDistance: {
            double ref = 0.0;
            for (const SourceSpec& s : c.sources) {
                if (s.role == Role::Radar) {
                    ref = s.distance;
                    break;
                }
            }
            if (!(ref > 0.0)) throw std::invalid_argument("r_R sweep needs a radar source");
            if (!(value > 0.0)) throw std::invalid_argument("r_R sweep values must be positive");
            const double k = value / ref;
            for (SourceSpec& s : c.sources) {
                if (s.role == Role::Radar) s.distance *= k;
            }
            c.range_radar.r_min *= k;
            c.range_radar.r_max *= k;
            break;
        }
    }
    return c;
}

namespace {

SweepPoint run_point(const ScenarioConfig& c, double value, std::uint64_t seed,
                     const std::filesystem::path& dir, const RecoveryTolerance& tol) {
    SweepPoint p;
    p.value = value;
    p.seed = seed;
    try {
        const RunOutput out = run_trial(c, seed, tol);
        write_artifacts(out, dir);
        p.report = out.report;
        p.ok = true;
        p.status = exit_status(out.report);
    } catch (const ConfigError& e) {
        p.status = 2;
        p.error = e.what();
    } catch (const std::exception& e) {
        p.status = 1;
        p.error = e.what();
    }
    return p;
}

}  // namespace

std::vector<SweepPoint> sweep(const ScenarioConfig& base, SweepVariable var,
                              const std::vector<double>& values, const std::filesystem::path& dir,
                              const RecoveryTolerance& tol) {
    if (values.empty()) throw std::invalid_argument("sweep: empty value list");
    std::vector<SweepPoint> points;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::uint64_t seed = base.seed + i;
        ScenarioConfig c;
        try {
            c = apply_sweep_value(base, var, values[i]);
        } catch (const std::exception& e) {
            SweepPoint p;
            p.value = values[i];
            p.seed = seed;
            p.status = 2;
            p.error = e.what();
            points.push_back(std::move(p));
            continue;
        }
        points.push_back(run_point(c, values[i], seed, dir / ("point_" + std::to_string(i)), tol));
    }
    return points;
}

std::vector<SweepPoint> monte_carlo(const ScenarioConfig& base, int trials,
                                    const std::filesystem::path& dir, const RecoveryTolerance& tol) {
    if (trials < 1) throw std::invalid_argument("monte_carlo: trials must be >= 1");
    std::vector<SweepPoint> points;
    for (int i = 0; i < trials; ++i) {
        points.push_back(run_point(base, i, base.seed + static_cast<std::uint64_t>(i),
                                   dir / ("trial_" + std::to_string(i)), tol));
    }
    return points;
}

std::string sweep_tsv(const std::string& column, const std::vector<SweepPoint>& points) {
    std::string out = "index\t" + column +
                      "\tseed\tstatus\tsuccess\tW_C\tW_R\tI1_C\tI2_C\tI1_R\tI2_R\t"
                      "max_angle_error\tmax_distance_error\tresidual\tsolver_iterations\t"
                      "solve_seconds\ttotal_seconds\terror\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const SweepPoint& p = points[i];
        const RunReport& r = p.report;
        double ae = 0.0, de = 0.0;
        for (const SourceReport& s : r.sources) {
            ae = std::max(ae, s.estimated ? s.angle_error : std::numeric_limits<double>::infinity());
            de = std::max(de, s.estimated ? s.distance_error : std::numeric_limits<double>::infinity());
        }
        out += std::to_string(i) + '\t' + fmt("%.12g", p.value) + '\t' + std::to_string(p.seed) + '\t' +
               std::to_string(p.status) + '\t';
        if (p.ok) {
            out += std::string(r.success ? "1" : "0") + '\t' + std::to_string(r.width_comm) + '\t' +
                   std::to_string(r.width_radar) + '\t' + std::to_string(r.orders_comm.i1) + '\t' +
                   std::to_string(r.orders_comm.i2) + '\t' + std::to_string(r.orders_radar.i1) + '\t' +
                   std::to_string(r.orders_radar.i2) + '\t' + fmt("%.6e", ae) + '\t' + fmt("%.6e", de) +
                   '\t' + fmt("%.6e", r.residual) + '\t' + std::to_string(r.solver.iterations) + '\t' +
                   fmt("%.3f", r.seconds.solve) + '\t' + fmt("%.3f", r.total_seconds) + "\t-\n";
        } else {
            std::string err = p.error;
            for (char& ch : err) {
                if (ch == '\t' || ch == '\n') ch = ' ';
            }
            out += "0\t\t\t\t\t\t\t\t\t\t\t\t\t" + err + '\n';
        }
    }
    return out;
}

}  // namespace nfisac
