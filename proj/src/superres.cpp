#include "nfisac/superres.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

namespace nfisac {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr double kAngleMargin = 1e-9;

}  // namespace

std::vector<double> angle_grid(double step) {
    if (!(step > 0.0) || step >= kPi / 2) throw DomainError("angle_grid: step must be in (0, pi/2)");
    std::vector<double> out;
    for (int i = 1;; ++i) {
        const double t = i * step;
        if (t >= kPi) break;
        out.push_back(t);
    }
    return out;
}

std::vector<double> distance_grid(double r_min, double r_max, int count) {
    if (!(r_min > 0.0) || r_max < r_min) throw DomainError("distance_grid: bad range");
    if (count < 1) throw DomainError("distance_grid: count must be >= 1");
    if (count == 1 || r_min == r_max) return std::vector<double>(count == 1 ? 1 : count, r_min);
    std::vector<double> out(count);
    const double a = std::log(r_min);
    const double b = std::log(r_max);
    for (int i = 0; i < count; ++i) out[i] = std::exp(a + (b - a) * i / (count - 1));
    out.front() = r_min;
    out.back() = r_max;
    return out;
}

DualPolynomial::DualPolynomial(Role role, std::vector<double> theta, std::vector<double> r_grid,
                               std::vector<VectorXcd> coefficients)
    : role_(role),
      theta_(std::move(theta)),
      r_grid_(std::move(r_grid)),
      coeffs_(std::move(coefficients)) {
    if (theta_.empty() || r_grid_.empty()) throw DomainError("dual_polynomial: empty grid");
    if (coeffs_.size() != r_grid_.size()) throw DimensionError("dual_polynomial: coefficient count");
    for (std::size_t i = 1; i < theta_.size(); ++i) {
        if (!(theta_[i] > theta_[i - 1])) throw DomainError("dual_polynomial: theta grid not increasing");
    }
    const Eigen::Index nk = coeffs_.front().size();
    const Eigen::Index kmax = (nk - 1) / 2;
    const auto nt = static_cast<Eigen::Index>(theta_.size());
    MatrixXcd harmonics(nt, nk);
    for (Eigen::Index t = 0; t < nt; ++t) {
        for (Eigen::Index k = 0; k < nk; ++k) {
            harmonics(t, k) = std::polar(1.0, static_cast<double>(k - kmax) * theta_[t]);
        }
    }
    MatrixXcd coef(nk, static_cast<Eigen::Index>(coeffs_.size()));
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coef.col(static_cast<Eigen::Index>(i)) = coeffs_[i];
    const MatrixXd mag = (harmonics * coef).cwiseAbs();
    values_.resize(theta_.size());
    argmax_r_.resize(theta_.size());
    for (Eigen::Index t = 0; t < nt; ++t) {
        Eigen::Index best = 0;
        values_[t] = mag.row(t).maxCoeff(&best);
        argmax_r_[t] = r_grid_[best];
    }
}

double DualPolynomial::max_value() const {
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double DualPolynomial::evaluate(double theta, double* best_r) const {
    if (coeffs_.empty()) return 0.0;
    const Eigen::Index nk = coeffs_.front().size();
    const Eigen::Index kmax = (nk - 1) / 2;
    VectorXcd u(nk);
    for (Eigen::Index k = 0; k < nk; ++k) u(k) = std::polar(1.0, static_cast<double>(k - kmax) * theta);
    double best = -1.0;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        const double v = std::abs(coeffs_[i].cwiseProduct(u).sum());
        if (v > best) {
            best = v;
            if (best_r) *best_r = r_grid_[i];
        }
    }
    return best;
}

DualPolynomial dual_polynomial(const VectorXcd& q, const MeasurementSet& meas,
                               const LiftedDictionary& dict, Role role,
                               const std::vector<double>& theta_grid,
                               const std::vector<double>& r_grid) {
    if (theta_grid.empty() || r_grid.empty()) throw DomainError("dual_polynomial: empty grid");
    const MatrixXcd& pilots = meas.pilots(role);
    if (pilots.rows() != q.size()) throw DimensionError("dual_polynomial: q has wrong length");
    const Eigen::RowVectorXcd gh = q.adjoint() * pilots;  // (A^H q)^H
    const MatrixXd selector = frequency_selector(dict.orders());
    std::vector<VectorXcd> coeffs;
    coeffs.reserve(r_grid.size());
    for (double r : r_grid) {
        const Eigen::RowVectorXcd row = gh * dict.distance_matrix(r) * selector.cast<cplx>();
        coeffs.push_back(row.transpose());
    }
    return DualPolynomial(role, theta_grid, r_grid, std::move(coeffs));
}

PeakSet extract_angles(const DualPolynomial& poly, int count, const PeakOptions& opts) {
    if (count < 1) throw DomainError("extract_angles: count must be >= 1");
    const auto& th = poly.theta();
    const auto& v = poly.values();
    const std::size_t n = v.size();
    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < n; ++i) {
        const double left = i > 0 ? v[i - 1] : -1.0;
        const double right = i + 1 < n ? v[i + 1] : -1.0;
        if (v[i] >= opts.threshold && v[i] > left && v[i] >= right) peaks.push_back(i);
    }
    std::vector<std::pair<double, double>> found;  // (value, angle)
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    for (std::size_t i : peaks) {
        double a = i > 0 ? th[i - 1] : std::max(kAngleMargin, th[i] - (n > 1 ? th[1] - th[0] : 1e-3));
        double b = i + 1 < n ? th[i + 1] : std::min(kPi - kAngleMargin, th[i] + (n > 1 ? th[1] - th[0] : 1e-3));
        double x1 = b - gr * (b - a);
        double x2 = a + gr * (b - a);
        double f1 = poly.evaluate(x1);
        double f2 = poly.evaluate(x2);
        while (b - a > opts.resolution) {
            if (f1 < f2) {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + gr * (b - a);
                f2 = poly.evaluate(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - gr * (b - a);
                f1 = poly.evaluate(x1);
            }
        }
        const double x = 0.5 * (a + b);
        const double fx = poly.evaluate(x);
        // Keep the grid sample if the refinement lost it (flat tops).
        if (fx >= v[i]) {
            found.emplace_back(fx, x);
        } else {
            found.emplace_back(v[i], th[i]);
        }
    }
    std::sort(found.begin(), found.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
    PeakSet out;
    for (std::size_t i = 0; i < found.size() && static_cast<int>(i) < count; ++i) {
        out.values.push_back(found[i].first);
        out.angles.push_back(found[i].second);
    }
    out.flagged = static_cast<int>(out.angles.size()) < count;
    return out;
}

namespace {

struct Box {
    double lo;
    double hi;
    double to_value(double p) const { return std::clamp(p, lo, hi); }
    double to_param(double x) const { return std::clamp(x, lo, hi); }
};

struct Model {
    const MeasurementSet& meas;
    const ArrayGeometry& geom;
    std::vector<SourceEstimate> src;
    std::vector<Box> r_box;
    std::vector<Box> th_box;
    bool profile = false;

    VectorXcd column(std::size_t i, double theta, double r) const {
        return meas.pilots(src[i].role) * exact_steering(geom, theta, r);
    }

    VectorXcd residual_vector(const std::vector<double>& th, const std::vector<double>& r) const {
        VectorXcd e = meas.y;
        for (std::size_t i = 0; i < src.size(); ++i) e -= src[i].gain * column(i, th[i], r[i]);
        return e;
    }

    // Least-squares gains for the given geometry.
    VectorXcd best_gains(const std::vector<double>& th, const std::vector<double>& r) const {
        MatrixXcd x(meas.y.size(), static_cast<Eigen::Index>(src.size()));
        for (std::size_t i = 0; i < src.size(); ++i) x.col(static_cast<Eigen::Index>(i)) = column(i, th[i], r[i]);
        return x.colPivHouseholderQr().solve(meas.y);
    }

    // Objective of the distance step: gains fixed, or re-solved when profiling.
    VectorXcd search_residual(const std::vector<double>& th, const std::vector<double>& r) const {
        if (!profile) return residual_vector(th, r);
        const VectorXcd a = best_gains(th, r);
        VectorXcd e = meas.y;
        for (std::size_t i = 0; i < src.size(); ++i) e -= a(static_cast<Eigen::Index>(i)) * column(i, th[i], r[i]);
        return e;
    }

    double residual() const {
        std::vector<double> th, r;
        for (const auto& s : src) {
            th.push_back(s.angle);
            r.push_back(s.distance);
        }
        return residual_vector(th, r).norm();
    }
};

struct LmFunctor {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const Model* model;
    bool move_angles;
    int n_in;
    int n_out;

    int inputs() const { return n_in; }
    int values() const { return n_out; }

    void unpack(const Eigen::VectorXd& p, std::vector<double>& th, std::vector<double>& r) const {
        const std::size_t s = model->src.size();
        th.resize(s);
        r.resize(s);
        for (std::size_t i = 0; i < s; ++i) {
            r[i] = model->r_box[i].to_value(p(static_cast<Eigen::Index>(i)));
            th[i] = move_angles ? model->th_box[i].to_value(p(static_cast<Eigen::Index>(s + i)))
                                : model->src[i].angle;
        }
    }

    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
        std::vector<double> th, r;
        unpack(p, th, r);
        const VectorXcd e = model->search_residual(th, r);
        f.resize(n_out);
        f.head(e.size()) = e.real();
        f.tail(e.size()) = e.imag();
        return 0;
    }
};

// Gains minimising the residual for the current angles and distances.
void gain_step(Model& model, EstimateSet& est) {
    const std::size_t s = model.src.size();
    const Eigen::Index m = model.meas.y.size();
    MatrixXcd x(m, static_cast<Eigen::Index>(s));
    for (std::size_t i = 0; i < s; ++i) {
        x.col(static_cast<Eigen::Index>(i)) = model.column(i, model.src[i].angle, model.src[i].distance);
    }
    Eigen::ColPivHouseholderQR<MatrixXcd> qr(x);
    const auto rdiag = qr.matrixQR().diagonal().cwiseAbs();
    VectorXcd a;
    if (rdiag.size() > 0 && rdiag.minCoeff() <= 1e-10 * rdiag.maxCoeff()) {
        est.rank_deficient = true;
        const double lam = 1e-10 * x.squaredNorm();
        MatrixXcd g = x.adjoint() * x;
        g.diagonal().array() += lam;
        a = g.ldlt().solve(x.adjoint() * model.meas.y);
    } else {
        a = qr.solve(model.meas.y);
    }
    const double before = model.residual();
    std::vector<cplx> old;
    for (std::size_t i = 0; i < s; ++i) {
        old.push_back(model.src[i].gain);
        model.src[i].gain = a(static_cast<Eigen::Index>(i));
    }
    if (model.residual() > before) {
        for (std::size_t i = 0; i < s; ++i) model.src[i].gain = old[i];
    }
    const VectorXcd e = model.meas.y - x * a;
    const double ynorm = std::max(model.meas.y.norm(), std::numeric_limits<double>::min());
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
        const double cn = x.col(i).norm();
        if (cn > 0.0) worst = std::max(worst, std::abs(x.col(i).dot(e)) / (cn * ynorm));
    }
    est.normal_equation_residual = worst;
}

// With profiling, the distance step moves the gains with the geometry.
void adopt_profiled_gains(Model& model) {
    if (!model.profile) return;
    std::vector<double> th, r;
    for (const auto& s : model.src) {
        th.push_back(s.angle);
        r.push_back(s.distance);
    }
    const double before = model.residual();
    const VectorXcd a = model.best_gains(th, r);
    std::vector<cplx> old;
    for (std::size_t i = 0; i < model.src.size(); ++i) {
        old.push_back(model.src[i].gain);
        model.src[i].gain = a(static_cast<Eigen::Index>(i));
    }
    if (!(model.residual() <= before)) {
        for (std::size_t i = 0; i < model.src.size(); ++i) model.src[i].gain = old[i];
    }
}

void search_distances(Model& model, const RefineOptions& opts);

// Coarse grid over distances followed by a bounded LM polish, gains fixed.
void distance_step(Model& model, const RefineOptions& opts) {
    const std::vector<SourceEstimate> snapshot = model.src;
    const double start = model.residual();
    search_distances(model, opts);
    if (!(model.residual() <= start)) model.src = snapshot;
}

void search_distances(Model& model, const RefineOptions& opts) {
    const std::size_t s = model.src.size();
    double best = model.profile ? 0.0 : model.residual();
    std::vector<double> best_r;
    for (const auto& src : model.src) best_r.push_back(src.distance);
    std::vector<double> th;
    for (const auto& src : model.src) th.push_back(src.angle);
    if (model.profile) best = model.search_residual(th, best_r).norm();

    std::vector<std::vector<double>> grids;
    for (std::size_t i = 0; i < s; ++i) {
        grids.push_back(distance_grid(model.r_box[i].lo, model.r_box[i].hi, opts.coarse_points));
    }
    if (s <= 2) {
        std::vector<double> r(s);
        const std::size_t n0 = grids[0].size();
        const std::size_t n1 = s == 2 ? grids[1].size() : 1;
        for (std::size_t a = 0; a < n0; ++a) {
            for (std::size_t b = 0; b < n1; ++b) {
                r[0] = grids[0][a];
                if (s == 2) r[1] = grids[1][b];
                const double v = model.search_residual(th, r).norm();
                if (v < best) {
                    best = v;
                    best_r = r;
                }
            }
        }
    } else {
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t i = 0; i < s; ++i) {
                std::vector<double> r = best_r;
                for (double g : grids[i]) {
                    r[i] = g;
                    const double v = model.search_residual(th, r).norm();
                    if (v < best) {
                        best = v;
                        best_r = r;
                    }
                }
            }
        }
    }
    // Joint (angle, distance) sweeps, one source at a time, inside the angle window.
    if (opts.angle_window > 0.0 && opts.angle_points > 1) {
        for (int pass = 0; pass < 3; ++pass) {
            bool moved = false;
            for (std::size_t i = 0; i < s; ++i) {
                std::vector<double> t = th;
                std::vector<double> r = best_r;
                const Box& tb = model.th_box[i];
                for (int a = 0; a < opts.angle_points; ++a) {
                    t[i] = tb.lo + (tb.hi - tb.lo) * a / (opts.angle_points - 1);
                    for (double g : grids[i]) {
                        r[i] = g;
                        const double v = model.search_residual(t, r).norm();
                        if (v < best) {
                            best = v;
                            best_r = r;
                            th = t;
                            moved = true;
                        }
                    }
                }
            }
            if (!moved) break;
        }
    }
    const bool move = opts.angle_window > 0.0;
    LmFunctor f{&model, move, static_cast<int>(move ? 2 * s : s),
                static_cast<int>(2 * model.meas.y.size())};
    if (f.n_out < f.n_in) {
        for (std::size_t i = 0; i < s; ++i) {
            model.src[i].distance = best_r[i];
            model.src[i].angle = th[i];
        }
        adopt_profiled_gains(model);
        return;
    }
    Eigen::VectorXd p(f.n_in);
    for (std::size_t i = 0; i < s; ++i) {
        p(static_cast<Eigen::Index>(i)) = model.r_box[i].to_param(best_r[i]);
        if (move) p(static_cast<Eigen::Index>(s + i)) = model.th_box[i].to_param(th[i]);
    }
    Eigen::NumericalDiff<LmFunctor, Eigen::Central> nd(f);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<LmFunctor, Eigen::Central>> lm(nd);
    lm.parameters.xtol = 1e-14;
    lm.parameters.ftol = 1e-14;
    lm.parameters.maxfev = 2000;
    lm.minimize(p);
    std::vector<double> th_lm, r_lm;
    f.unpack(p, th_lm, r_lm);
    const double v = model.search_residual(th_lm, r_lm).norm();
    if (std::isfinite(v) && v < best) {
        for (std::size_t i = 0; i < s; ++i) {
            model.src[i].distance = r_lm[i];
            model.src[i].angle = th_lm[i];
        }
    } else {
        for (std::size_t i = 0; i < s; ++i) {
            model.src[i].distance = best_r[i];
            model.src[i].angle = th[i];
        }
    }
    adopt_profiled_gains(model);
}

}  // namespace

EstimateSet refine_distances_gains(const MeasurementSet& meas, const ArrayGeometry& geom,
                                   const std::vector<double>& angles_comm,
                                   const std::vector<double>& angles_radar,
                                   const RefineOptions& opts) {
    if (opts.max_iters < 1 || opts.coarse_points < 1 || opts.angle_window < 0.0) {
        throw DomainError("refine_distances_gains: bad options");
    }
    if (!(opts.r_min_comm > 0.0 && opts.r_min_comm <= opts.r_max_comm && opts.r_min_radar > 0.0 &&
          opts.r_min_radar <= opts.r_max_radar)) {
        throw DomainError("refine_distances_gains: bad distance range");
    }
    if (meas.pilots_comm.cols() != geom.num_antennas() ||
        meas.pilots_radar.cols() != geom.num_antennas()) {
        throw DimensionError("refine_distances_gains: pilots do not match the array");
    }
    Model model{meas, geom, {}, {}, {}, opts.profile_gains};
    auto add = [&](Role role, double theta, double lo, double hi) {
        if (!(theta > 0.0 && theta < kPi)) throw DomainError("refine_distances_gains: angle outside (0, pi)");
        SourceEstimate s;
        s.role = role;
        s.angle = theta;
        s.distance = std::sqrt(lo * hi);
        model.src.push_back(s);
        model.r_box.push_back({lo, hi});
        model.th_box.push_back({std::max(kAngleMargin, theta - opts.angle_window),
                                std::min(kPi - kAngleMargin, theta + opts.angle_window)});
    };
    for (double t : angles_comm) add(Role::Comm, t, opts.r_min_comm, opts.r_max_comm);
    for (double t : angles_radar) add(Role::Radar, t, opts.r_min_radar, opts.r_max_radar);

    EstimateSet est;
    if (model.src.empty()) {
        est.residual = meas.y.norm();
        est.residual_history.push_back(est.residual);
        est.flagged = true;
        est.note = "no angle estimates";
        return est;
    }

    gain_step(model, est);
    double prev = model.residual();
    est.residual_history.push_back(prev);
    const double scale = std::max(meas.y.norm(), std::numeric_limits<double>::min());
    for (int it = 1; it <= opts.max_iters; ++it) {
        distance_step(model, opts);
        est.residual_history.push_back(model.residual());
        gain_step(model, est);
        const double cur = model.residual();
        est.residual_history.push_back(cur);
        est.iterations = it;
        if (prev - cur < opts.tol * scale) break;
        prev = cur;
    }
    est.sources = model.src;
    est.residual = model.residual();
    if (!std::isfinite(est.residual)) throw std::runtime_error("refine_distances_gains: non-finite residual");
    return est;
}

namespace {

// All size-k index subsets of {0, ..., n-1}, lexicographic.
std::vector<std::vector<int>> subsets(int n, int k) {
    std::vector<std::vector<int>> out;
    if (k > n) return out;
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        out.push_back(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
}

std::vector<double> pick(const std::vector<double>& v, const std::vector<int>& idx) {
    std::vector<double> out;
    for (int i : idx) out.push_back(v[i]);
    return out;
}

}  // namespace

PipelineResult run_pipeline(const MeasurementSet& meas, const LiftedDictionary& comm,
                            const LiftedDictionary& radar, const PipelineOptions& opts) {
    if (opts.sources_per_role < 1) throw DomainError("run_pipeline: sources_per_role must be >= 1");
    if (opts.candidates < opts.sources_per_role) {
        throw DomainError("run_pipeline: candidates must be >= sources_per_role");
    }
    PipelineResult out;
    auto t0 = Clock::now();
    const SdpProblem problem = assemble_problem(meas, comm, radar, opts.assemble);
    out.seconds.assemble = seconds_since(t0);

    t0 = Clock::now();
    out.solution = solve(problem, opts.solver);
    out.feasibility = validate(out.solution, problem);
    out.seconds.solve = seconds_since(t0);

    t0 = Clock::now();
    const std::vector<double> theta = angle_grid(opts.theta_step);
    out.poly_comm = dual_polynomial(out.solution.q, meas, comm, Role::Comm, theta,
                                    distance_grid(comm.r_min(), comm.r_max(), opts.r_points));
    out.poly_radar = dual_polynomial(out.solution.q, meas, radar, Role::Radar, theta,
                                     distance_grid(radar.r_min(), radar.r_max(), opts.r_points));
    out.peaks_comm = extract_angles(out.poly_comm, opts.candidates, opts.peaks);
    out.peaks_radar = extract_angles(out.poly_radar, opts.candidates, opts.peaks);
    out.seconds.polynomial = seconds_since(t0);

    t0 = Clock::now();
    RefineOptions ropts = opts.refine;
    ropts.r_min_comm = comm.r_min();
    ropts.r_max_comm = comm.r_max();
    ropts.r_min_radar = radar.r_min();
    ropts.r_max_radar = radar.r_max();
    const int s = opts.sources_per_role;
    const int nc = static_cast<int>(out.peaks_comm.angles.size());
    const int nr = static_cast<int>(out.peaks_radar.angles.size());
    auto comm_sets = nc > 0 ? subsets(nc, std::min(s, nc)) : std::vector<std::vector<int>>{{}};
    auto radar_sets = nr > 0 ? subsets(nr, std::min(s, nr)) : std::vector<std::vector<int>>{{}};
    bool have = false;
    for (const auto& cs : comm_sets) {
        for (const auto& rs : radar_sets) {
            EstimateSet est = refine_distances_gains(meas, comm.geometry(),
                                                     pick(out.peaks_comm.angles, cs),
                                                     pick(out.peaks_radar.angles, rs), ropts);
            ++out.combinations_tried;
            if (!have || est.residual < out.estimates.residual) {
                out.estimates = std::move(est);
                have = true;
            }
        }
    }
    const bool short_comm = nc < s;
    const bool short_radar = nr < s;
    if (short_comm || short_radar) {
        out.estimates.flagged = true;
        if (!out.estimates.note.empty()) out.estimates.note += "; ";
        out.estimates.note += short_comm && short_radar ? "too few peaks for both roles"
                              : short_comm              ? "too few comm peaks"
                                                        : "too few radar peaks";
    }
    for (const auto& a : out.estimates.sources) {
        for (const auto& b : out.estimates.sources) {
            if (a.role == Role::Comm && b.role == Role::Radar &&
                std::abs(a.angle - b.angle) <= opts.theta_step) {
                out.angle_collision = true;
            }
        }
    }
    out.seconds.refine = seconds_since(t0);
    return out;
}

}  // namespace nfisac
