#include "nfisac/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace nfisac {

namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues) {
    std::ostringstream os;
    for (std::size_t i = 0; i < issues.size(); ++i) {
        if (i) os << '\n';
        if (issues[i].line > 0) os << "line " << issues[i].line << ", column " << issues[i].column << ": ";
        os << issues[i].message;
    }
    return os.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

namespace {

// Accepts plain numbers and the forms "pi", "pi/6", "2*pi/3", "-pi/4".
std::optional<double> parse_number(const std::string& text) {
    static const std::regex pi_form(R"(^\s*([+-]?\d*\.?\d*(?:[eE][+-]?\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d*\.?\d+(?:[eE][+-]?\d+)?))?\s*$)");
    std::smatch m;
    if (std::regex_match(text, m, pi_form)) {
        double coef = 1.0;
        const std::string c = m[1].str();
        if (c == "-") {
            coef = -1.0;
        } else if (!c.empty() && c != "+") {
            char* end = nullptr;
            coef = std::strtod(c.c_str(), &end);
            if (*end != '\0') return std::nullopt;
        }
        double den = 1.0;
        if (m[2].matched) {
            den = std::strtod(m[2].str().c_str(), nullptr);
            if (den == 0.0) return std::nullopt;
        }
        return coef * kPi / den;
    }
    if (text.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    while (end && (*end == ' ' || *end == '\t')) ++end;
    if (end == text.c_str() || *end != '\0') return std::nullopt;
    return v;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Reader {
public:
    std::vector<ConfigIssue> issues;

    void error(const YAML::Node& node, std::string msg) {
        const YAML::Mark mark = node.Mark();
        if (mark.is_null()) {
            issues.push_back({0, 0, std::move(msg)});
        } else {
            issues.push_back({mark.line + 1, mark.column + 1, std::move(msg)});
        }
    }

    void error(std::string msg) { issues.push_back({0, 0, std::move(msg)}); }

    bool is_map(const YAML::Node& node, const std::string& what) {
        if (!node.IsMap()) {
            error(node, what + " must be a mapping");
            return false;
        }
        return true;
    }

    void check_keys(const YAML::Node& node, const std::string& section,
                    const std::set<std::string>& allowed) {
        for (const auto& kv : node) {
            const std::string key = kv.first.as<std::string>();
            if (!allowed.count(key)) error(kv.first, "unknown key '" + key + "' in " + section);
        }
    }

    void number(const YAML::Node& parent, const char* key, double& out) {
        const YAML::Node n = parent[key];
        if (!n) return;
        if (!n.IsScalar()) {
            error(n, std::string(key) + " must be a number");
            return;
        }
        const auto v = parse_number(n.Scalar());
        if (!v) {
            error(n, std::string(key) + ": cannot parse '" + n.Scalar() + "' as a number");
            return;
        }
        out = *v;
    }

    void integer(const YAML::Node& parent, const char* key, int& out) {
        const YAML::Node n = parent[key];
        if (!n) return;
        double v = 0.0;
        number(parent, key, v);
        if (!n.IsScalar() || !parse_number(n.Scalar())) return;
        if (v != std::floor(v) || std::abs(v) > 2e9) {
            error(n, std::string(key) + " must be an integer");
            return;
        }
        out = static_cast<int>(v);
    }

    void boolean(const YAML::Node& parent, const char* key, bool& out) {
        const YAML::Node n = parent[key];
        if (!n) return;
        try {
            out = n.as<bool>();
        } catch (const YAML::Exception&) {
            error(n, std::string(key) + " must be true or false");
        }
    }

    void string(const YAML::Node& parent, const char* key, std::string& out) {
        const YAML::Node n = parent[key];
        if (!n) return;
        if (!n.IsScalar()) {
            error(n, std::string(key) + " must be a string");
            return;
        }
        out = n.Scalar();
    }
};

void read_range(Reader& rd, const YAML::Node& node, const char* name, DistanceRange& out) {
    const YAML::Node n = node[name];
    if (!n) return;
    if (!n.IsSequence() || n.size() != 2) {
        rd.error(n, std::string("ranges.") + name + " must be a two-element list [r_min, r_max]");
        return;
    }
    double v[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < 2; ++i) {
        const auto x = n[i].IsScalar() ? parse_number(n[i].Scalar()) : std::nullopt;
        if (!x) {
            rd.error(n[i], std::string("ranges.") + name + ": not a number");
            return;
        }
        v[i] = *x;
    }
    out = {v[0], v[1]};
}

// Locations of semantic checks, so validation errors can point into the file.
struct Marks {
    std::map<std::string, YAML::Node> at;
    void add(const YAML::Node& parent, const std::string& path, const char* key) {
        if (parent && parent.IsMap() && parent[key]) at[path] = parent[key];
    }
};

}  // namespace

std::vector<ConfigIssue> validate_config(const ScenarioConfig& c) {
    std::vector<ConfigIssue> out;
    auto bad = [&](std::string msg) { out.push_back({0, 0, std::move(msg)}); };
    if (!(c.carrier_freq > 0.0) || !std::isfinite(c.carrier_freq)) bad("geometry.carrier_freq must be > 0");
    if (c.num_antennas < 2) bad("geometry.num_antennas must be >= 2");
    if (c.spacing && !(*c.spacing > 0.0)) bad("geometry.spacing must be > 0");
    if (c.measurements < 1) bad("measurements must be >= 1");
    if (!(c.noise_std >= 0.0)) bad("noise_std must be >= 0");
    if (c.noise_bound && !(*c.noise_bound >= 0.0)) bad("noise_bound must be >= 0");
    if (c.sources.empty()) bad("sources: at least one source is required");
    for (std::size_t i = 0; i < c.sources.size(); ++i) {
        const SourceSpec& s = c.sources[i];
        const std::string tag = "sources[" + std::to_string(i) + "]";
        const DistanceRange& rg = s.role == Role::Comm ? c.range_comm : c.range_radar;
        if (!(s.angle > 0.0 && s.angle < kPi)) bad(tag + ".angle must lie in (0, pi)");
        if (!(s.distance > 0.0)) bad(tag + ".distance must be > 0");
        else if (s.distance < rg.r_min || s.distance > rg.r_max) {
            bad(tag + ".distance lies outside the " + std::string(to_string(s.role)) + " range");
        }
        if (!(s.magnitude >= 0.0)) bad(tag + ".magnitude must be >= 0");
        if (!std::isfinite(s.phase)) bad(tag + ".phase must be finite");
    }
    for (const auto* rg : {&c.range_comm, &c.range_radar}) {
        const char* name = rg == &c.range_comm ? "ranges.comm" : "ranges.radar";
        if (!(rg->r_min > 0.0 && rg->r_min < rg->r_max)) bad(std::string(name) + " needs 0 < r_min < r_max");
    }
    if (!(c.theta_step > 0.0 && c.theta_step < kPi / 2)) bad("grids.theta_step must be in (0, pi/2)");
    if (c.r_points < 1) bad("grids.r_points must be >= 1");
    if (!(c.tail_tol > 0.0)) bad("lifting.tail_tol must be > 0");
    if (c.constraint_radii < 1) bad("sdp.constraint_radii must be >= 1");
    if (!(c.solver_tol > 0.0)) bad("solver.tol must be > 0");
    if (c.max_iters < 1) bad("solver.max_iters must be >= 1");
    if (!(c.rho > 0.0)) bad("solver.rho must be > 0");
    if (!(c.relaxation > 0.0 && c.relaxation < 2.0)) bad("solver.relaxation must be in (0, 2)");
    if (c.check_interval < 1) bad("solver.check_interval must be >= 1");
    if (c.anderson_memory < 0) bad("solver.anderson_memory must be >= 0");
    if (!(c.peak_threshold >= 0.0)) bad("peaks.threshold must be >= 0");
    if (c.sources_per_role < 1) bad("peaks.sources_per_role must be >= 1");
    if (c.candidates < c.sources_per_role) bad("peaks.candidates must be >= peaks.sources_per_role");
    if (c.coarse_points < 1) bad("refine.coarse_points must be >= 1");
    if (!(c.angle_window >= 0.0)) bad("refine.angle_window must be >= 0");
    if (c.angle_points < 1) bad("refine.angle_points must be >= 1");
    if (c.refine_iters < 1) bad("refine.max_iters must be >= 1");
    if (!(c.refine_tol >= 0.0)) bad("refine.tol must be >= 0");
    if (c.output_dir.empty()) bad("output must not be empty");
    return out;
}

ScenarioConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError({{e.mark.line + 1, e.mark.column + 1, e.msg}});
    }
    Reader rd;
    ScenarioConfig c;
    if (!root || root.IsNull()) throw ConfigError({{0, 0, "missing geometry"}});
    if (!rd.is_map(root, "configuration")) throw ConfigError(rd.issues);
    rd.check_keys(root, "configuration",
                  {"geometry", "measurements", "noise_std", "noise_bound", "seed", "sources", "ranges",
                   "grids", "lifting", "sdp", "solver", "peaks", "refine", "output"});

    Marks marks;
    const YAML::Node g = root["geometry"];
    if (!g) {
        rd.error("missing geometry");
    } else if (rd.is_map(g, "geometry")) {
        rd.check_keys(g, "geometry", {"carrier_freq", "num_antennas", "spacing"});
        if (!g["carrier_freq"]) rd.error(g, "geometry.carrier_freq is required");
        if (!g["num_antennas"]) rd.error(g, "geometry.num_antennas is required");
        rd.number(g, "carrier_freq", c.carrier_freq);
        rd.integer(g, "num_antennas", c.num_antennas);
        if (const YAML::Node sp = g["spacing"]) {
            if (sp.IsScalar() && sp.Scalar() == "half-wavelength") {
                c.spacing.reset();
            } else {
                double v = 0.0;
                rd.number(g, "spacing", v);
                c.spacing = v;
            }
        }
        marks.add(g, "geometry.carrier_freq", "carrier_freq");
        marks.add(g, "geometry.num_antennas", "num_antennas");
        marks.add(g, "geometry.spacing", "spacing");
    }
    rd.integer(root, "measurements", c.measurements);
    rd.number(root, "noise_std", c.noise_std);
    marks.add(root, "measurements", "measurements");
    marks.add(root, "noise_std", "noise_std");
    if (const YAML::Node nb = root["noise_bound"]) {
        if (!(nb.IsScalar() && nb.Scalar() == "auto")) {
            double v = 0.0;
            rd.number(root, "noise_bound", v);
            c.noise_bound = v;
            marks.add(root, "noise_bound", "noise_bound");
        }
    }
    if (const YAML::Node sd = root["seed"]) {
        try {
            if (!sd.IsScalar() || sd.Scalar().find('-') != std::string::npos) throw YAML::Exception({}, "");
            c.seed = sd.as<std::uint64_t>();
        } catch (const YAML::Exception&) {
            rd.error(sd, "seed must be a non-negative integer");
        }
    }

    if (const YAML::Node rg = root["ranges"]) {
        if (rd.is_map(rg, "ranges")) {
            rd.check_keys(rg, "ranges", {"comm", "radar"});
            read_range(rd, rg, "comm", c.range_comm);
            read_range(rd, rg, "radar", c.range_radar);
            marks.add(rg, "ranges.comm", "comm");
            marks.add(rg, "ranges.radar", "radar");
        }
    }

    const YAML::Node src = root["sources"];
    if (src && !src.IsSequence()) {
        rd.error(src, "sources must be a list");
    } else if (src) {
        for (std::size_t i = 0; i < src.size(); ++i) {
            const YAML::Node s = src[i];
            const std::string tag = "sources[" + std::to_string(i) + "]";
            if (!rd.is_map(s, tag)) continue;
            rd.check_keys(s, tag, {"role", "angle", "distance", "magnitude", "phase"});
            SourceSpec spec;
            std::string role;
            rd.string(s, "role", role);
            if (!s["role"]) {
                rd.error(s, tag + ".role is required");
            } else {
                try {
                    spec.role = role_from_string(role);
                } catch (const std::exception&) {
                    rd.error(s["role"], tag + ".role must be comm or radar");
                }
            }
            for (const char* key : {"angle", "distance"}) {
                if (!s[key]) rd.error(s, tag + "." + key + " is required");
            }
            rd.number(s, "angle", spec.angle);
            rd.number(s, "distance", spec.distance);
            rd.number(s, "magnitude", spec.magnitude);
            rd.number(s, "phase", spec.phase);
            marks.add(s, tag + ".angle", "angle");
            marks.add(s, tag + ".distance", "distance");
            marks.add(s, tag + ".magnitude", "magnitude");
            c.sources.push_back(spec);
        }
    }

    if (const YAML::Node n = root["grids"]; n && rd.is_map(n, "grids")) {
        rd.check_keys(n, "grids", {"theta_step", "r_points"});
        rd.number(n, "theta_step", c.theta_step);
        rd.integer(n, "r_points", c.r_points);
    }
    if (const YAML::Node n = root["lifting"]; n && rd.is_map(n, "lifting")) {
        rd.check_keys(n, "lifting", {"truncation", "tail_tol"});
        std::string t = "closed-form";
        rd.string(n, "truncation", t);
        if (t == "closed-form") {
            c.truncation = TruncationRule::ClosedForm;
        } else if (t == "tail") {
            c.truncation = TruncationRule::Tail;
        } else {
            rd.error(n["truncation"], "lifting.truncation must be closed-form or tail");
        }
        rd.number(n, "tail_tol", c.tail_tol);
    }
    if (const YAML::Node n = root["sdp"]; n && rd.is_map(n, "sdp")) {
        rd.check_keys(n, "sdp", {"toeplitz", "constraint_radii"});
        std::string t = "frequency";
        rd.string(n, "toeplitz", t);
        try {
            c.toeplitz = toeplitz_mode_from_string(t);
        } catch (const std::exception&) {
            rd.error(n["toeplitz"], "sdp.toeplitz must be frequency or vectorized");
        }
        rd.integer(n, "constraint_radii", c.constraint_radii);
    }
    if (const YAML::Node n = root["solver"]; n && rd.is_map(n, "solver")) {
        rd.check_keys(n, "solver",
                      {"tol", "max_iters", "rho", "relaxation", "check_interval", "anderson_memory"});
        rd.number(n, "tol", c.solver_tol);
        rd.integer(n, "max_iters", c.max_iters);
        rd.number(n, "rho", c.rho);
        rd.number(n, "relaxation", c.relaxation);
        rd.integer(n, "check_interval", c.check_interval);
        rd.integer(n, "anderson_memory", c.anderson_memory);
    }
    if (const YAML::Node n = root["peaks"]; n && rd.is_map(n, "peaks")) {
        rd.check_keys(n, "peaks", {"threshold", "candidates", "sources_per_role"});
        rd.number(n, "threshold", c.peak_threshold);
        rd.integer(n, "candidates", c.candidates);
        rd.integer(n, "sources_per_role", c.sources_per_role);
    }
    if (const YAML::Node n = root["refine"]; n && rd.is_map(n, "refine")) {
        rd.check_keys(n, "refine",
                      {"coarse_points", "angle_window", "angle_points", "max_iters", "tol", "profile_gains"});
        rd.integer(n, "coarse_points", c.coarse_points);
        rd.number(n, "angle_window", c.angle_window);
        rd.integer(n, "angle_points", c.angle_points);
        rd.integer(n, "max_iters", c.refine_iters);
        rd.number(n, "tol", c.refine_tol);
        rd.boolean(n, "profile_gains", c.profile_gains);
    }
    rd.string(root, "output", c.output_dir);

    std::set<std::string> reported;
    for (const ConfigIssue& issue : rd.issues) reported.insert(issue.message.substr(0, issue.message.find(' ')));
    for (ConfigIssue issue : validate_config(c)) {
        if (reported.count(issue.message.substr(0, issue.message.find(' ')))) continue;
        // Attach a location when the message names a marked key.
        for (const auto& [path, node] : marks.at) {
            if (issue.message.rfind(path + " ", 0) == 0 || issue.message.rfind(path + ".", 0) == 0) {
                const YAML::Mark mk = node.Mark();
                if (!mk.is_null()) {
                    issue.line = mk.line + 1;
                    issue.column = mk.column + 1;
                }
            }
        }
        rd.issues.push_back(issue);
    }
    if (!rd.issues.empty()) throw ConfigError(rd.issues);
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({{0, 0, "cannot open " + path.string()}});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ScenarioConfig& c) {
    YAML::Emitter e;
    auto num = [](double v) { return format_double(v); };
    auto range = [&](const DistanceRange& r) {
        e << YAML::Flow << YAML::BeginSeq << num(r.r_min) << num(r.r_max) << YAML::EndSeq;
    };
    e << YAML::BeginMap;
    e << YAML::Key << "geometry" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "carrier_freq" << YAML::Value << num(c.carrier_freq);
    e << YAML::Key << "num_antennas" << YAML::Value << c.num_antennas;
    e << YAML::Key << "spacing" << YAML::Value << (c.spacing ? num(*c.spacing) : std::string("half-wavelength"));
    e << YAML::EndMap;
    e << YAML::Key << "measurements" << YAML::Value << c.measurements;
    e << YAML::Key << "noise_std" << YAML::Value << num(c.noise_std);
    e << YAML::Key << "noise_bound" << YAML::Value << (c.noise_bound ? num(*c.noise_bound) : std::string("auto"));
    e << YAML::Key << "seed" << YAML::Value << c.seed;
    e << YAML::Key << "sources" << YAML::Value << YAML::BeginSeq;
    for (const SourceSpec& s : c.sources) {
        e << YAML::BeginMap;
        e << YAML::Key << "role" << YAML::Value << std::string(to_string(s.role));
        e << YAML::Key << "angle" << YAML::Value << num(s.angle);
        e << YAML::Key << "distance" << YAML::Value << num(s.distance);
        e << YAML::Key << "magnitude" << YAML::Value << num(s.magnitude);
        e << YAML::Key << "phase" << YAML::Value << num(s.phase);
        e << YAML::EndMap;
    }
    e << YAML::EndSeq;
    e << YAML::Key << "ranges" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "comm" << YAML::Value;
    range(c.range_comm);
    e << YAML::Key << "radar" << YAML::Value;
    range(c.range_radar);
    e << YAML::EndMap;
    e << YAML::Key << "grids" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "theta_step" << YAML::Value << num(c.theta_step);
    e << YAML::Key << "r_points" << YAML::Value << c.r_points;
    e << YAML::EndMap;
    e << YAML::Key << "lifting" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "truncation" << YAML::Value << (c.truncation == TruncationRule::ClosedForm ? "closed-form" : "tail");
    e << YAML::Key << "tail_tol" << YAML::Value << num(c.tail_tol);
    e << YAML::EndMap;
    e << YAML::Key << "sdp" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "toeplitz" << YAML::Value << std::string(to_string(c.toeplitz));
    e << YAML::Key << "constraint_radii" << YAML::Value << c.constraint_radii;
    e << YAML::EndMap;
    e << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "tol" << YAML::Value << num(c.solver_tol);
    e << YAML::Key << "max_iters" << YAML::Value << c.max_iters;
    e << YAML::Key << "rho" << YAML::Value << num(c.rho);
    e << YAML::Key << "relaxation" << YAML::Value << num(c.relaxation);
    e << YAML::Key << "check_interval" << YAML::Value << c.check_interval;
    e << YAML::Key << "anderson_memory" << YAML::Value << c.anderson_memory;
    e << YAML::EndMap;
    e << YAML::Key << "peaks" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "threshold" << YAML::Value << num(c.peak_threshold);
    e << YAML::Key << "candidates" << YAML::Value << c.candidates;
    e << YAML::Key << "sources_per_role" << YAML::Value << c.sources_per_role;
    e << YAML::EndMap;
    e << YAML::Key << "refine" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "coarse_points" << YAML::Value << c.coarse_points;
    e << YAML::Key << "angle_window" << YAML::Value << num(c.angle_window);
    e << YAML::Key << "angle_points" << YAML::Value << c.angle_points;
    e << YAML::Key << "max_iters" << YAML::Value << c.refine_iters;
    e << YAML::Key << "tol" << YAML::Value << num(c.refine_tol);
    e << YAML::Key << "profile_gains" << YAML::Value << c.profile_gains;
    e << YAML::EndMap;
    e << YAML::Key << "output" << YAML::Value << YAML::DoubleQuoted << c.output_dir;
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

ArrayGeometry make_geometry(const ScenarioConfig& c) {
    return ArrayGeometry(c.num_antennas, c.carrier_freq, c.spacing.value_or(0.0));
}

PipelineOptions make_pipeline_options(const ScenarioConfig& c) {
    PipelineOptions o;
    o.assemble.mode = c.toeplitz;
    o.assemble.constraint_radii = c.constraint_radii;
    o.solver.tol = c.solver_tol;
    o.solver.max_iters = c.max_iters;
    o.solver.rho = c.rho;
    o.solver.relaxation = c.relaxation;
    o.solver.check_interval = c.check_interval;
    o.solver.anderson_memory = c.anderson_memory;
    o.theta_step = c.theta_step;
    o.r_points = c.r_points;
    o.peaks.threshold = c.peak_threshold;
    o.sources_per_role = c.sources_per_role;
    o.candidates = c.candidates;
    o.refine.r_min_comm = c.range_comm.r_min;
    o.refine.r_max_comm = c.range_comm.r_max;
    o.refine.r_min_radar = c.range_radar.r_min;
    o.refine.r_max_radar = c.range_radar.r_max;
    o.refine.coarse_points = c.coarse_points;
    o.refine.angle_window = c.angle_window;
    o.refine.angle_points = c.angle_points;
    o.refine.max_iters = c.refine_iters;
    o.refine.tol = c.refine_tol;
    o.refine.profile_gains = c.profile_gains;
    return o;
}

std::vector<Source> make_sources(const ScenarioConfig& c, Role role) {
    std::vector<Source> out;
    for (const SourceSpec& s : c.sources) {
        if (s.role != role) continue;
        out.push_back({role, std::polar(s.magnitude, s.phase), s.angle, s.distance});
    }
    return out;
}

LiftedDictionary make_dictionary(const ScenarioConfig& c, Role role) {
    const ArrayGeometry geom = make_geometry(c);
    const DistanceRange& rg = role == Role::Comm ? c.range_comm : c.range_radar;
    const TruncationOrders orders = c.truncation == TruncationRule::ClosedForm
                                        ? truncation_orders(geom, rg.r_min)
                                        : truncation_orders_for_tail(geom, rg.r_min, c.tail_tol);
    return LiftedDictionary(geom, rg.r_min, rg.r_max, orders);
}

}  // namespace nfisac
