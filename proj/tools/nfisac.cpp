#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nfisac/experiment.hpp"

using namespace nfisac;

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<double> solver_tol;
    std::optional<int> max_iters;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--seed", o.seed, "Base seed (trial i uses seed + i)");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--solver-tol", o.solver_tol, "Solver relative gap tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--max-iters", o.max_iters, "Solver iteration limit")->check(CLI::PositiveNumber);
}

ScenarioConfig load_with(const std::string& path, const Overrides& o) {
    ScenarioConfig c = load_config(path);
    if (o.seed) c.seed = *o.seed;
    if (o.out) c.output_dir = *o.out;
    if (o.solver_tol) c.solver_tol = *o.solver_tol;
    if (o.max_iters) c.max_iters = *o.max_iters;
    if (const auto issues = validate_config(c); !issues.empty()) throw ConfigError(issues);
    return c;
}

void print_summary(const RunReport& r) {
    std::printf("seed %llu: %s  solver %s after %d iterations (gap %.2e)\n",
                static_cast<unsigned long long>(r.seed), r.success ? "recovered" : "not recovered",
                r.solver.status.c_str(), r.solver.iterations, r.solver.relative_gap);
    for (const SourceReport& s : r.sources) {
        if (s.estimated) {
            std::printf("  %-5s theta %.5f (true %.5f)  r %.4f (true %.4f)\n",
                        std::string(to_string(s.role)).c_str(), s.angle, s.true_angle, s.distance,
                        s.true_distance);
        } else {
            std::printf("  %-5s not estimated\n", std::string(to_string(s.role)).c_str());
        }
    }
}

int worst_status(const std::vector<SweepPoint>& points) {
    int worst = 0;
    for (const SweepPoint& p : points) {
        if (p.status == 2) return 2;
        if (p.status == 1) worst = 1;
        if (worst != 1) worst = std::max(worst, p.status);
    }
    return worst;
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find(',', pos), text.size());
        const std::string tok = text.substr(pos, end - pos);
        if (!tok.empty()) {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument("bad sweep value '" + tok + "'");
            out.push_back(v);
        }
        pos = end + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Near-field ISAC super-resolution via lifted atomic-norm minimisation"};
    app.require_subcommand(1);

    Overrides run_o;
    std::string run_cfg;
    int trials = 1;
    CLI::App* run = app.add_subcommand("run", "Run one scenario (optionally several seeded trials)");
    run->add_option("config", run_cfg, "Scenario file")->required();
    run->add_option("--trials", trials, "Number of seeded trials")->check(CLI::PositiveNumber);
    add_overrides(run, run_o);

    Overrides sweep_o;
    std::string sweep_cfg, var, values;
    CLI::App* sw = app.add_subcommand("sweep", "Vary one scenario parameter");
    sw->add_option("config", sweep_cfg, "Scenario file")->required();
    sw->add_option("--var", var, "N_r, m, noise_std, r_R or f_c")->required();
    sw->add_option("--values", values, "Comma-separated values")->required();
    add_overrides(sw, sweep_o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*run) {
            const ScenarioConfig c = load_with(run_cfg, run_o);
            const std::filesystem::path dir = c.output_dir;
            if (trials == 1) {
                const RunOutput out = run_trial(c, c.seed);
                write_artifacts(out, dir);
                print_summary(out.report);
                return exit_status(out.report);
            }
            const auto points = monte_carlo(c, trials, dir);
            std::filesystem::create_directories(dir);
            std::ofstream(dir / "trials.tsv") << sweep_tsv("trial", points);
            int ok = 0;
            for (const SweepPoint& p : points) {
                if (p.ok) print_summary(p.report);
                else std::printf("seed %llu: error: %s\n", static_cast<unsigned long long>(p.seed), p.error.c_str());
                ok += p.ok && p.report.success;
            }
            std::printf("%d/%d trials recovered\n", ok, trials);
            return worst_status(points);
        }
        const ScenarioConfig c = load_with(sweep_cfg, sweep_o);
        const SweepVariable sv = sweep_variable_from_string(var);
        const std::vector<double> vals = parse_values(values);
        if (vals.empty()) {
            std::fprintf(stderr, "error: --values is empty\n");
            return 2;
        }
        const auto points = sweep(c, sv, vals, c.output_dir);
        std::filesystem::create_directories(c.output_dir);
        const std::string table = sweep_tsv(to_string(sv), points);
        std::ofstream(std::filesystem::path(c.output_dir) / "sweep.tsv") << table;
        std::cout << table;
        return worst_status(points);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error:\n%s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
