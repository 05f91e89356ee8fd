#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nfisac/bessel.hpp"
#include "nfisac/experiment.hpp"
#include "oracles.hpp"

using namespace nfisac;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool ran = true;
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* spec, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, spec, args...);
    return buf;
}

void print(int id, const char* title, const Outcome& o) {
    const char* verdict = !o.ran ? "SKIP" : o.pass ? "PASS" : "FAIL";
    std::printf("criterion %d [%s] %s: %s\n", id, verdict, title, o.detail.c_str());
    std::fflush(stdout);
}

ArrayGeometry reference_geometry() { return ArrayGeometry(20, 100e9); }

double max_relative_lifting_error(const LiftedDictionary& dict, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> th(1e-3, kPi - 1e-3), rr(dict.r_min(), dict.r_max());
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double t = th(rng), r = rr(rng);
        const VectorXcd ref = fresnel_steering(dict.geometry(), t, r);
        worst = std::max(worst, (dict.lifted_steering(t, r) - ref).norm() / ref.norm());
    }
    return worst;
}

Outcome lifting_fidelity() {
    const ArrayGeometry g = reference_geometry();
    const LiftedDictionary closed(g, 2.0, 8.0);
    const double err = max_relative_lifting_error(closed, 100, 2024);
    const TruncationOrders tail = truncation_orders_for_tail(g, 2.0, 1e-10);
    const double tail_err = max_relative_lifting_error(LiftedDictionary(g, 2.0, 8.0, tail), 100, 2024);
    Outcome o;
    o.pass = err <= 1e-6;
    o.detail = fmt("max relative error %.3e with I1=%d I2=%d (limit 1e-6); tail-rule orders I1=%d I2=%d give %.3e",
                   err, closed.orders().i1, closed.orders().i2, tail.i1, tail.i2, tail_err);
    return o;
}

Outcome bessel_oracles() {
    double series = 0.0, quad = 0.0;
    int count = 0;
    for (int n = 0; n <= 100; ++n) {
        for (int k = -40; k <= 40; ++k) {
            const double x = k + 0.37 * (n % 3);
            if (std::abs(x) > 40.0) continue;
            const double v = bessel_j(n, x);
            series = std::max(series, std::abs(v - oracle::bessel_series(n, x)));
            quad = std::max(quad, std::abs(v - oracle::bessel_integral(n, x)));
            ++count;
        }
    }
    Outcome o;
    o.pass = series <= 1e-10 && quad <= 1e-10;
    o.detail = fmt("%d points, max |J - series| %.2e, max |J - integral| %.2e (limit 1e-10)", count, series, quad);
    return o;
}

struct RunStats {
    int runs = 0;
    int converged = 0;
    int infeasible = 0;
    double worst_poly = 0.0;
    double worst_min_eig = std::numeric_limits<double>::infinity();
    bool monotone = true;
    double worst_normal = 0.0;

    void add(const RunReport& r) {
        ++runs;
        if (r.solver.converged) {
            ++converged;
            if (!r.feasible) ++infeasible;
            worst_min_eig = std::min(worst_min_eig, r.feasibility_min_eigenvalue);
        }
        worst_poly = std::max({worst_poly, r.max_poly_comm, r.max_poly_radar});
        monotone = monotone && r.residual_monotone;
        worst_normal = std::max(worst_normal, r.normal_equation_residual);
    }
};

std::string describe(const RunReport& r) {
    std::string s;
    for (const SourceReport& src : r.sources) {
        s += fmt(" %s(%.4f, %.3f)", std::string(to_string(src.role)).c_str(), src.angle, src.distance);
    }
    return s;
}

Outcome full_scene_reproduction(const std::string& config_dir, RunStats& stats) {
    const ScenarioConfig c = load_config(config_dir + "/full_scene.cfg");
    const auto t0 = Clock::now();
    const RunOutput out = run_trial(c, c.seed);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    stats.add(out.report);
    Outcome o;
    o.pass = out.report.success;
    double ae = 0.0, de = 0.0;
    for (const SourceReport& s : out.report.sources) {
        ae = std::max(ae, s.estimated ? s.angle_error : kPi);
        de = std::max(de, s.estimated ? s.distance_error : 1.0);
    }
    o.detail = fmt("estimates%s; max angle error %.4f rad, max distance error %.1f%%; solver %s in %d iterations; %.0f s",
                   describe(out.report).c_str(), ae, 100.0 * de, out.report.solver.status.c_str(),
                   out.report.solver.iterations, secs);
    return o;
}

Outcome reduced_monte_carlo(const std::string& config_dir, RunStats& stats) {
    const ScenarioConfig c = load_config(config_dir + "/reduced.cfg");
    const auto t0 = Clock::now();
    int ok = 0;
    std::string failed;
    for (int i = 0; i < 10; ++i) {
        const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(i);
        const RunOutput out = run_trial(c, seed);
        stats.add(out.report);
        if (out.report.success) ++ok;
        else failed += fmt(" %llu", static_cast<unsigned long long>(seed));
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    Outcome o;
    o.pass = ok >= 8 && secs <= 300.0;
    o.detail = fmt("%d/10 seeds recovered (need 8) in %.0f s (limit 300)", ok, secs);
    if (!failed.empty()) o.detail += "; failed seeds" + failed;
    return o;
}

Outcome dual_feasibility(const RunStats& s) {
    Outcome o;
    o.pass = s.converged > 0 && s.infeasible == 0 && s.worst_poly <= 1.0 + 1e-4;
    o.detail = fmt("%d/%d solves converged, %d failed validate (tau 1e-6), worst bordered min eigenvalue %.2e, "
                   "grid max of dual polynomials %.6f (limit 1.0001)",
                   s.converged, s.runs, s.infeasible, s.worst_min_eig, s.worst_poly);
    return o;
}

Outcome far_field() {
    const ArrayGeometry g = reference_geometry();
    const double r = 1e3 * rayleigh_distance(g);
    const LiftedDictionary dict(g, r, 2.0 * r);
    double fres = 0.0, lift = 0.0;
    for (int i = 1; i < 60; ++i) {
        const double t = kPi * i / 60.0;
        const VectorXcd ff = farfield_steering(g, t);
        fres = std::max(fres, (fresnel_steering(g, t, r) - ff).cwiseAbs().maxCoeff());
        lift = std::max(lift, (dict.lifted_steering(t, r) - ff).cwiseAbs().maxCoeff());
    }
    Outcome o;
    o.pass = fres <= 1e-5 && lift <= 1e-5;
    o.detail = fmt("r = %.1f m; max entry error Fresnel %.3e, lifted %.3e (limit 1e-5; residual quadratic phase "
                   "at 1e3 Rayleigh distances is pi/2000 = %.3e)",
                   r, fres, lift, kPi / 2000.0);
    return o;
}

struct Atom {
    double theta = 0.0;
    double r = 0.0;
};

// Exhaustive matching pursuit over a dense grid of exact spherical atoms.
// Each cyclic pass re-picks one role's atom over the whole grid to minimise
// the joint least-squares residual with the other role's atom held fixed.
// Passes start from the strongest single-atom local maxima of each role and
// the pair with the smallest joint residual wins.
class GridPursuit {
public:
    GridPursuit(const MeasurementSet& m, const ArrayGeometry& g, std::vector<double> th, std::vector<double> rg)
        : y_(m.y), th_(std::move(th)), rg_(std::move(rg)) {
        for (Role role : {Role::Comm, Role::Radar}) {
            MatrixXcd& cols = role == Role::Comm ? comm_ : radar_;
            cols.resize(m.y.size(), static_cast<Eigen::Index>(th_.size() * rg_.size()));
            for (std::size_t i = 0; i < th_.size(); ++i) {
                for (std::size_t j = 0; j < rg_.size(); ++j) {
                    cols.col(index(i, j)) = m.pilots(role) * oracle::steering_by_coordinates(g, th_[i], rg_[j]);
                }
            }
        }
    }

    double residual = 0.0;

    std::pair<Atom, Atom> solve(int starts) {
        const auto sc = seeds(comm_, starts);
        const auto sr = seeds(radar_, starts);
        double best = std::numeric_limits<double>::infinity();
        std::pair<Eigen::Index, Eigen::Index> arg{0, 0};
        for (Eigen::Index c0 : sc) {
            for (Eigen::Index r0 : sr) {
                Eigen::Index c = c0, r = r0;
                for (int pass = 0; pass < 30; ++pass) {
                    const Eigen::Index nc = pick(comm_, radar_.col(r));
                    const Eigen::Index nr = pick(radar_, comm_.col(nc));
                    const bool same = nc == c && nr == r;
                    c = nc;
                    r = nr;
                    if (same) break;
                }
                const double res = joint_residual(comm_.col(c), radar_.col(r));
                if (res < best) best = res, arg = {c, r};
            }
        }
        residual = best / y_.norm();
        return {atom(arg.first), atom(arg.second)};
    }

private:
    Eigen::Index index(std::size_t i, std::size_t j) const {
        return static_cast<Eigen::Index>(i * rg_.size() + j);
    }
    Atom atom(Eigen::Index k) const {
        const auto n = static_cast<Eigen::Index>(rg_.size());
        return {th_[static_cast<std::size_t>(k / n)], rg_[static_cast<std::size_t>(k % n)]};
    }

    // Best atom given the other role's column (none for the first scan).
    Eigen::Index pick(const MatrixXcd& cols, const VectorXcd& other) const {
        const double on = other.squaredNorm();
        const cplx oy = other.dot(y_);
        const VectorXcd t = y_ - other * (oy / on);
        const Eigen::VectorXcd bt = cols.adjoint() * t;
        const Eigen::VectorXcd bo = cols.adjoint() * other;
        const Eigen::VectorXd bn = cols.colwise().squaredNorm().transpose();
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index k = 0; k < cols.cols(); ++k) {
            const double pn = bn(k) - std::norm(bo(k)) / on;
            if (pn <= 1e-12 * bn(k)) continue;
            const double s = std::norm(bt(k)) / pn;
            if (s > best) best = s, arg = k;
        }
        return arg;
    }

    // Strongest local maxima over theta of the single-atom score.
    std::vector<Eigen::Index> seeds(const MatrixXcd& cols, int count) const {
        const Eigen::VectorXd score =
            (cols.adjoint() * y_).cwiseAbs2().cwiseQuotient(cols.colwise().squaredNorm().transpose());
        std::vector<std::pair<double, Eigen::Index>> prof(th_.size());
        for (std::size_t i = 0; i < th_.size(); ++i) {
            Eigen::Index j = 0;
            prof[i].first = score.segment(index(i, 0), static_cast<Eigen::Index>(rg_.size())).maxCoeff(&j);
            prof[i].second = index(i, 0) + j;
        }
        std::vector<std::pair<double, Eigen::Index>> peaks;
        for (std::size_t i = 1; i + 1 < prof.size(); ++i) {
            if (prof[i].first > prof[i - 1].first && prof[i].first >= prof[i + 1].first) peaks.push_back(prof[i]);
        }
        std::sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        std::vector<Eigen::Index> out;
        for (std::size_t i = 0; i < peaks.size() && static_cast<int>(i) < count; ++i) out.push_back(peaks[i].second);
        return out;
    }

    double joint_residual(const VectorXcd& a, const VectorXcd& b) const {
        MatrixXcd x(y_.size(), 2);
        x << a, b;
        const VectorXcd g = x.colPivHouseholderQr().solve(y_);
        return (y_ - x * g).norm();
    }

    VectorXcd y_;
    std::vector<double> th_;
    std::vector<double> rg_;
    MatrixXcd comm_;
    MatrixXcd radar_;
};

Outcome brute_force_oracle() {
    // Sources sit on oracle grid points so the noiseless optimum lies on the grid.
    const double dtheta = 1e-3, dr = 1e-3;
    const std::vector<double> th = angle_grid(dtheta);
    std::vector<double> rg;
    for (int i = 0; i <= 250; ++i) rg.push_back(0.05 + i * dr);

    ScenarioConfig c;
    c.num_antennas = 6;
    c.measurements = 12;
    c.range_comm = {rg.front(), rg.back()};
    c.range_radar = {rg.front(), rg.back()};
    c.sources = {{Role::Radar, th[523], rg[100], 1.0, 0.0}, {Role::Comm, th[1046], rg[30], 1.0, 0.0}};
    c.solver_tol = 1e-2;
    c.seed = 5;
    const RunOutput out = run_trial(c, c.seed);

    const MeasurementSet m = draw_measurements(c, c.seed);
    GridPursuit pursuit(m, make_geometry(c), th, rg);
    const auto [comm, radar] = pursuit.solve(4);

    Outcome o;
    o.pass = true;
    std::string detail;
    for (const SourceEstimate& e : out.pipeline.estimates.sources) {
        const Atom& ref = e.role == Role::Comm ? comm : radar;
        const bool near = std::abs(e.angle - ref.theta) <= dtheta + 1e-12 && std::abs(e.distance - ref.r) <= dr + 1e-12;
        o.pass = o.pass && near;
        detail += fmt("%s pipeline (%.5f, %.4f) oracle (%.3f, %.3f); ", std::string(to_string(e.role)).c_str(),
                      e.angle, e.distance, ref.theta, ref.r);
    }
    o.pass = o.pass && out.pipeline.estimates.sources.size() == 2;
    o.detail = detail + fmt("cell %.0e rad x %.0e m; oracle relative residual %.2e", dtheta, dr, pursuit.residual);
    return o;
}

Outcome als_properties(const RunStats& s) {
    Outcome o;
    o.pass = s.runs > 0 && s.monotone && s.worst_normal <= 1e-8;
    o.detail = fmt("%d runs, residual %s, worst normal-equation residual %.2e (limit 1e-8)", s.runs,
                   s.monotone ? "monotone on every half-step" : "NOT monotone", s.worst_normal);
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    bool long_run = false;
    std::vector<int> only;
    std::string config_dir = NFISAC_SOURCE_DIR "/configs";
    app.add_flag("--long", long_run, "Include the full-size scenario (criterion 3)");
    app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 8));
    app.add_option("--config-dir", config_dir, "Directory holding the shipped configs");
    CLI11_PARSE(app, argc, argv);

    auto want = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
    auto skipped = [](const char* why) {
        Outcome o;
        o.ran = false;
        o.detail = why;
        return o;
    };
    bool all = true;
    auto report = [&](int id, const char* title, const Outcome& o) {
        print(id, title, o);
        all = all && (!o.ran || o.pass);
    };
    try {
        if (want(1)) report(1, "lifting fidelity", lifting_fidelity());
        if (want(2)) report(2, "Bessel oracle equivalence", bessel_oracles());
        // Criteria 5 and 8 are checked on the runs of criteria 3 and 4.
        const bool runs = want(3) || want(4) || want(5) || want(8);
        RunStats stats;
        const Outcome c3 = !long_run ? skipped("full-size scenario runs only with --long")
                           : runs    ? full_scene_reproduction(config_dir, stats)
                                     : skipped("not selected");
        const Outcome c4 = runs ? reduced_monte_carlo(config_dir, stats) : skipped("not selected");
        if (want(3)) report(3, "full-size scenario reproduction", c3);
        if (want(4)) report(4, "reduced-scale recovery", c4);
        if (want(5)) report(5, "dual feasibility", dual_feasibility(stats));
        if (want(6)) report(6, "far-field degeneration", far_field());
        if (want(7)) report(7, "brute-force oracle equivalence", brute_force_oracle());
        if (want(8)) report(8, "refinement properties", als_properties(stats));
    } catch (const std::exception& e) {
        std::printf("error: %s\n", e.what());
        return 1;
    }
    return all ? 0 : 1;
}
