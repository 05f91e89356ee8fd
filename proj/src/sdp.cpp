#include "nfisac/sdp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace nfisac {

std::string_view to_string(ToeplitzMode mode) {
    return mode == ToeplitzMode::Frequency ? "frequency" : "vectorized";
}

ToeplitzMode toeplitz_mode_from_string(std::string_view s) {
    if (s == "frequency") return ToeplitzMode::Frequency;
    if (s == "vectorized") return ToeplitzMode::Vectorized;
    throw std::invalid_argument("unknown toeplitz mode '" + std::string(s) + "'");
}

std::vector<double> constraint_radii(double r_min, double r_max, int count) {
    if (count < 1) throw DomainError("constraint_radii: count must be >= 1");
    if (!(r_min > 0.0) || !(r_min < r_max)) throw DomainError("constraint_radii: bad range");
    if (count == 1) return {r_max};
    std::vector<double> out(count);
    const double a = 1.0 / r_max;
    const double b = 1.0 / r_min;
    for (int i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / (count - 1);
        out[i] = 1.0 / (b + t * (a - b));
    }
    out.front() = r_min;
    out.back() = r_max;
    return out;
}

SdpProblem assemble_problem(const MeasurementSet& meas, const LiftedDictionary& comm,
                            const LiftedDictionary& radar, const AssembleOptions& opts) {
    const Eigen::Index N = comm.geometry().num_antennas();
    if (!(comm.geometry() == radar.geometry())) {
        throw DimensionError("assemble_problem: dictionaries use different array geometries");
    }
    if (meas.pilots_comm.cols() != N || meas.pilots_radar.cols() != N) {
        throw DimensionError("assemble_problem: pilot matrices must have N_r columns");
    }
    if (meas.pilots_comm.rows() != meas.y.size() || meas.pilots_radar.rows() != meas.y.size()) {
        throw DimensionError("assemble_problem: pilot rows must match measurement count");
    }
    if (meas.y.size() == 0) throw DimensionError("assemble_problem: empty measurement vector");
    if (!(meas.noise_bound >= 0.0)) throw DomainError("assemble_problem: negative noise bound");

    SdpProblem p;
    p.y = meas.y;
    p.noise_bound = meas.noise_bound;
    p.mode = opts.mode;
    p.lifted_width_comm = comm.width();
    p.lifted_width_radar = radar.width();
    for (const Role role : {Role::Comm, Role::Radar}) {
        const LiftedDictionary& dict = role == Role::Comm ? comm : radar;
        const MatrixXcd pilots_h = meas.pilots(role).adjoint();
        const MatrixXd selector = frequency_selector(dict.orders());
        for (double r : constraint_radii(dict.r_min(), dict.r_max(), opts.constraint_radii)) {
            ConstraintBlock block;
            block.role = role;
            block.radius = r;
            const MatrixXcd border = dict.distance_matrix(r).adjoint() * pilots_h;  // W x m
            if (opts.mode == ToeplitzMode::Frequency) {
                block.coupling = selector.transpose().cast<cplx>() * border;
            } else {
                block.coupling = border;
            }
            p.blocks.push_back(std::move(block));
        }
    }
    return p;
}

namespace {

using Clock = std::chrono::steady_clock;

// Orthogonal projection of a Hermitian matrix onto {Q : sum of diagonal d is [d == 0]}.
void project_toeplitz_trace(MatrixXcd& q) {
    const Eigen::Index n = q.rows();
    for (Eigen::Index d = 0; d < n; ++d) {
        cplx sum = 0.0;
        for (Eigen::Index i = 0; i + d < n; ++i) sum += q(i, i + d);
        const cplx target = d == 0 ? cplx(1.0) : cplx(0.0);
        const cplx shift = (sum - target) / static_cast<double>(n - d);
        for (Eigen::Index i = 0; i + d < n; ++i) {
            q(i, i + d) -= shift;
            if (d > 0) q(i + d, i) = std::conj(q(i, i + d));
        }
        if (d == 0) {
            for (Eigen::Index i = 0; i < n; ++i) q(i, i) = q(i, i).real();
        }
    }
}

// Orthogonal projection onto Toeplitz Hermitian matrices (diagonal averages).
void project_toeplitz(MatrixXcd& t) {
    const Eigen::Index n = t.rows();
    for (Eigen::Index d = 0; d < n; ++d) {
        cplx sum = 0.0;
        for (Eigen::Index i = 0; i + d < n; ++i) sum += t(i, i + d);
        const cplx mean = sum / static_cast<double>(n - d);
        for (Eigen::Index i = 0; i + d < n; ++i) {
            t(i, i + d) = d == 0 ? cplx(mean.real()) : mean;
            if (d > 0) t(i + d, i) = std::conj(mean);
        }
    }
}

MatrixXcd hermitian_part(const MatrixXcd& a) { return 0.5 * (a + a.adjoint()); }

double min_eigenvalue(const MatrixXcd& a) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(hermitian_part(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

MatrixXcd bordered(const MatrixXcd& q, const VectorXcd& c) {
    const Eigen::Index n = q.rows();
    MatrixXcd m(n + 1, n + 1);
    m.topLeftCorner(n, n) = q;
    m.topRightCorner(n, 1) = c;
    m.bottomLeftCorner(1, n) = c.adjoint();
    m(n, n) = 1.0;
    return m;
}

}  // namespace

// Scaled-form ADMM on
//   min -Re<y,q> + eta ||q||  s.t.  Z_b = L_b(q, Q_b),  Z_b >= 0,  Q_b Toeplitz-trace,
// with y normalised to unit norm. The state (Z, U) is optionally Anderson-accelerated.
struct AdmmSolver::Impl {
    const SdpProblem& prob;
    SolverOptions opts;
    double y_norm = 0.0;
    VectorXcd y;   // normalised
    double eta = 0.0;
    Eigen::Index m = 0;
    std::vector<Eigen::Index> sizes;    // n_b + 1
    std::vector<Eigen::Index> offsets;  // into the flat state
    Eigen::Index half = 0;              // length of the Z part
    MatrixXcd hess;                     // sum_b B_b^H B_b
    Eigen::SelfAdjointEigenSolver<MatrixXcd> hess_eig;
    double rho = 1.0;

    // Latest x-update.
    VectorXcd q;
    std::vector<MatrixXcd> gram;

    Impl(const SdpProblem& p, SolverOptions o) : prob(p), opts(o) {
        m = p.y.size();
        y_norm = p.y.norm();
        rho = opts.rho;
        Eigen::Index off = 0;
        hess = MatrixXcd::Zero(m, m);
        for (const ConstraintBlock& b : p.blocks) {
            if (b.coupling.cols() != m) throw DimensionError("solve: block width != m");
            sizes.push_back(b.size() + 1);
            offsets.push_back(off);
            off += (b.size() + 1) * (b.size() + 1);
            hess += b.coupling.adjoint() * b.coupling;
        }
        half = off;
        if (!hess.allFinite() || !p.y.allFinite()) throw DomainError("solve: non-finite data");
        hess_eig.compute(hess);
        const double hmax = hess_eig.eigenvalues().maxCoeff();
        if (!(hmax > 0.0)) throw DomainError("solve: numerically singular data (all couplings vanish)");
        gram.resize(p.blocks.size());
    }

    Eigen::Map<MatrixXcd> block(VectorXcd& s, std::size_t b, bool dual) {
        return {s.data() + (dual ? half : 0) + offsets[b], sizes[b], sizes[b]};
    }
    Eigen::Map<const MatrixXcd> block(const VectorXcd& s, std::size_t b, bool dual) const {
        return {s.data() + (dual ? half : 0) + offsets[b], sizes[b], sizes[b]};
    }

    // H^+ v, with tiny eigenvalues regularised.
    VectorXcd hess_solve(const VectorXcd& v) const {
        const VectorXd& h = hess_eig.eigenvalues();
        const double ridge = 1e-14 * h.maxCoeff();
        VectorXcd z = hess_eig.eigenvectors().adjoint() * v;
        for (Eigen::Index i = 0; i < m; ++i) z(i) /= std::max(h(i), ridge);
        return hess_eig.eigenvectors() * z;
    }

    // argmin -Re<y,q> + eta||q|| + rho sum ||B_b q - w_b||^2
    VectorXcd q_update(const VectorXcd& g) const {
        // Stationarity: (2 rho H + eta/||q|| I) q = 2 g.
        const VectorXcd v = hess_eig.eigenvectors().adjoint() * (2.0 * g);
        const VectorXd& h = hess_eig.eigenvalues();
        const double ridge = 1e-14 * h.maxCoeff();
        if (eta <= 0.0) {
            VectorXcd z(m);
            for (Eigen::Index i = 0; i < m; ++i) z(i) = v(i) / (2.0 * rho * std::max(h(i), ridge));
            return hess_eig.eigenvectors() * z;
        }
        if (v.norm() <= eta) return VectorXcd::Zero(m);
        // Find t = ||q|| with sum |v_i|^2 / (2 rho h_i t + eta)^2 = 1 (decreasing in t).
        auto excess = [&](double t) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < m; ++i) {
                const double den = 2.0 * rho * std::max(h(i), ridge) * t + eta;
                s += std::norm(v(i)) / (den * den);
            }
            return s - 1.0;
        };
        double lo = 0.0;
        double hi = 1.0;
        while (excess(hi) > 0.0 && hi < 1e300) hi *= 2.0;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (excess(mid) > 0.0 ? lo : hi) = mid;
        }
        const double t = 0.5 * (lo + hi);
        VectorXcd z(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            z(i) = t * v(i) / (2.0 * rho * std::max(h(i), ridge) * t + eta);
        }
        return hess_eig.eigenvectors() * z;
    }

    // x-update from (Z, U); fills q and gram.
    void x_update(const VectorXcd& state) {
        VectorXcd g = 0.5 * y;
        for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
            const Eigen::Index n = sizes[b] - 1;
            const MatrixXcd v = block(state, b, false) - block(state, b, true);
            gram[b] = hermitian_part(v.topLeftCorner(n, n));
            project_toeplitz_trace(gram[b]);
            const VectorXcd w = 0.5 * (v.topRightCorner(n, 1) + v.bottomLeftCorner(1, n).adjoint());
            g += rho * prob.blocks[b].coupling.adjoint() * w;
        }
        q = q_update(g);
    }

    MatrixXcd lifted(std::size_t b) const {
        return bordered(gram[b], prob.blocks[b].coupling * q);
    }

    // One ADMM sweep: state -> next state. Also returns ||L(x) - Z_new||^2.
    VectorXcd apply(const VectorXcd& state, double* primal_sq = nullptr) {
        x_update(state);
        VectorXcd next(state.size());
        double psq = 0.0;
        const double alpha = opts.relaxation;
        for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
            const MatrixXcd l = lifted(b);
            const auto z_old = block(state, b, false);
            const auto u_old = block(state, b, true);
            const MatrixXcd l_hat = alpha * l + (1.0 - alpha) * MatrixXcd(z_old);
            const MatrixXcd arg = hermitian_part(l_hat + u_old);
            Eigen::SelfAdjointEigenSolver<MatrixXcd> es(arg);
            const VectorXd lam = es.eigenvalues().cwiseMax(0.0);
            MatrixXcd z = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
            auto z_new = block(next, b, false);
            auto u_new = block(next, b, true);
            z_new = z;
            u_new = u_old + l_hat - z;
            psq += (l - z).squaredNorm();
        }
        if (primal_sq) *primal_sq = psq;
        return next;
    }

    struct Certificate {
        double objective = 0.0;  // of the restored point, normalised units
        double upper = 0.0;
        double shift = 0.0;      // restoration weight s
        double gap = 0.0;
    };

    // Restores exact feasibility of the current x and bounds the optimum from the
    // multipliers Y_b = -rho U_b.
    Certificate certify(const VectorXcd& state) const {
        Certificate c;
        double s = 0.0;
        for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
            const double eps = std::max(0.0, -min_eigenvalue(lifted(b)));
            const double n = static_cast<double>(sizes[b] - 1);
            s = std::max(s, eps * n / (1.0 + eps * n));
        }
        c.shift = s;
        c.objective = (1.0 - s) * ((y.adjoint() * q)(0).real() - eta * q.norm());

        // Multipliers Y_b = -rho U_b, made Hermitian with Toeplitz top-left block.
        std::vector<MatrixXcd> ys(prob.blocks.size());
        VectorXcd w = y;
        for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
            const Eigen::Index n = sizes[b] - 1;
            ys[b] = hermitian_part(-rho * MatrixXcd(block(state, b, true)));
            MatrixXcd t = ys[b].topLeftCorner(n, n);
            project_toeplitz(t);
            ys[b].topLeftCorner(n, n) = t;
            w += 2.0 * prob.blocks[b].coupling.adjoint() * ys[b].topRightCorner(n, 1);
        }
        // Shift the borders so that ||y + 2 sum B^H z|| <= eta, which makes the
        // supremum over q vanish; the PSD shift below pays for the perturbation.
        const double wn = w.norm();
        if (wn > eta) {
            const VectorXcd corr = hess_solve(w * (1.0 - eta / wn));
            for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
                const Eigen::Index n = sizes[b] - 1;
                const VectorXcd dz = -0.5 * prob.blocks[b].coupling * corr;
                ys[b].topRightCorner(n, 1) += dz;
                ys[b].bottomLeftCorner(1, n) += dz.adjoint();
            }
            const double left = (w - hess * corr).norm();
            if (left > eta + 1e-9 * wn) {
                c.upper = std::numeric_limits<double>::infinity();
                c.gap = std::numeric_limits<double>::infinity();
                return c;
            }
        }
        double bound = 0.0;
        for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
            const Eigen::Index n = sizes[b] - 1;
            const double delta = std::max(0.0, -min_eigenvalue(ys[b]));
            bound += ys[b](0, 0).real() + ys[b](n, n).real() + 2.0 * delta;
        }
        c.upper = bound;
        const double scale = std::max({std::abs(c.upper), std::abs(c.objective), 1e-8});
        c.gap = (c.upper - c.objective) / scale;
        return c;
    }

    DualSolution finish(const Certificate& cert, int iters, double rp, double rd, bool converged,
                        std::string status, Clock::time_point t0) {
        DualSolution sol;
        const double s = cert.shift;
        sol.q = (1.0 - s) * q;
        sol.gram.resize(gram.size());
        for (std::size_t b = 0; b < gram.size(); ++b) {
            const Eigen::Index n = gram[b].rows();
            sol.gram[b] = hermitian_part((1.0 - s) * gram[b] +
                                         (s / static_cast<double>(n)) * MatrixXcd::Identity(n, n));
        }
        sol.objective = y_norm * cert.objective;
        auto& d = sol.diagnostics;
        d.iterations = iters;
        d.primal_residual = rp;
        d.dual_residual = rd;
        d.upper_bound = y_norm * cert.upper;
        d.relative_gap = cert.gap;
        d.restoration = s;
        d.rho = rho;
        d.converged = converged;
        d.status = std::move(status);
        d.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        return sol;
    }

    DualSolution trivial(std::string status, Clock::time_point t0) {
        q = VectorXcd::Zero(m);
        for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
            const Eigen::Index n = sizes[b] - 1;
            gram[b] = MatrixXcd::Identity(n, n) / static_cast<double>(n);
        }
        Certificate c;  // objective 0, and Re<y,q> - eta||q|| <= 0 for every q
        return finish(c, 0, 0.0, 0.0, true, std::move(status), t0);
    }

    DualSolution run() {
        const auto t0 = Clock::now();
        if (y_norm == 0.0) return trivial("zero measurements", t0);
        if (prob.noise_bound >= y_norm) return trivial("noise bound dominates measurements", t0);
        y = prob.y / y_norm;
        eta = prob.noise_bound / y_norm;

        VectorXcd state = VectorXcd::Zero(2 * half);
        const int mem = std::max(opts.anderson_memory, 0);
        std::deque<VectorXcd> ds, dg;  // differences of iterates and of residuals
        VectorXcd prev_state, prev_res;
        double prev_res_norm = std::numeric_limits<double>::infinity();

        double rp = 0.0;
        double rd = 0.0;
        Certificate cert;
        int it = 0;
        VectorXcd mapped = apply(state, &rp);
        for (it = 1; it <= opts.max_iters; ++it) {
            VectorXcd res = state - mapped;
            const double res_norm = res.norm();

            VectorXcd candidate = mapped;
            if (mem > 0 && prev_state.size() > 0) {
                ds.push_back(state - prev_state);
                dg.push_back(res - prev_res);
                if (static_cast<int>(ds.size()) > mem) {
                    ds.pop_front();
                    dg.pop_front();
                }
                const int k = static_cast<int>(dg.size());
                MatrixXd gram_g(k, k);
                VectorXd rhs(k);
                for (int i = 0; i < k; ++i) {
                    for (int j = 0; j <= i; ++j) {
                        gram_g(i, j) = gram_g(j, i) = dg[i].dot(dg[j]).real();
                    }
                    rhs(i) = dg[i].dot(res).real();
                }
                gram_g.diagonal().array() += 1e-10 * gram_g.diagonal().maxCoeff() + 1e-30;
                const VectorXd gamma = gram_g.ldlt().solve(rhs);
                if (gamma.allFinite()) {
                    for (int i = 0; i < k; ++i) candidate -= gamma(i) * (ds[i] - dg[i]);
                }
            }
            prev_state = state;
            prev_res = res;

            double psq = 0.0;
            VectorXcd cand_mapped = apply(candidate, &psq);
            if (mem > 0 && candidate.size() && (candidate - cand_mapped).norm() > res_norm &&
                prev_res_norm < std::numeric_limits<double>::infinity()) {
                // Safeguard: fall back to the plain ADMM step and restart the memory.
                candidate = mapped;
                cand_mapped = apply(candidate, &psq);
                ds.clear();
                dg.clear();
                prev_state.resize(0);
            }
            prev_res_norm = res_norm;

            rd = 0.0;
            for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
                rd += (block(cand_mapped, b, false) - block(candidate, b, false)).squaredNorm();
            }
            rd = rho * std::sqrt(rd);
            state = std::move(candidate);
            mapped = std::move(cand_mapped);
            // x from the last apply() corresponds to `state`.
            rp = std::sqrt(psq);

            if (it % opts.check_interval == 0 || it == opts.max_iters) {
                cert = certify(mapped);
                if (opts.verbose) {
                    std::ostringstream os;
                    os << "iter " << it << " rp " << rp << " rd " << rd << " rho " << rho
                       << " obj " << cert.objective << " ub " << cert.upper << " gap " << cert.gap
                       << "\n";
                    std::fputs(os.str().c_str(), stderr);
                }
                if (cert.gap <= opts.tol) {
                    return finish(cert, it, rp, rd, true, "converged", t0);
                }
                // Residual balancing.
                if (rp > 10.0 * rd || rd > 10.0 * rp) {
                    const double factor = std::clamp(std::sqrt(rp / std::max(rd, 1e-300)), 0.2, 5.0);
                    rho *= factor;
                    for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
                        block(state, b, true) /= factor;
                    }
                    ds.clear();
                    dg.clear();
                    prev_state.resize(0);
                    mapped = apply(state, &psq);
                }
            }
        }
        cert = certify(mapped);
        return finish(cert, opts.max_iters, rp, rd, cert.gap <= opts.tol,
                      cert.gap <= opts.tol ? "converged" : "iteration limit", t0);
    }
};

AdmmSolver::AdmmSolver(const SdpProblem& problem, SolverOptions opts)
    : problem_(problem), opts_(opts) {
    if (opts_.tol <= 0.0 || opts_.max_iters < 1 || opts_.rho <= 0.0 || opts_.check_interval < 1 ||
        opts_.relaxation <= 0.0 || opts_.relaxation >= 2.0) {
        throw std::invalid_argument("SolverOptions out of range");
    }
}

DualSolution AdmmSolver::run() {
    Impl impl(problem_, opts_);
    return impl.run();
}

DualSolution solve(const SdpProblem& problem, const SolverOptions& opts) {
    return AdmmSolver(problem, opts).run();
}

FeasibilityReport validate(const DualSolution& sol, const SdpProblem& prob, double tau) {
    FeasibilityReport rep;
    rep.objective = sol.objective;
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();
    rep.pass = sol.gram.size() == prob.blocks.size() && sol.q.size() == prob.y.size();
    if (!rep.pass) return rep;
    for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
        const MatrixXcd& q = sol.gram[b];
        const VectorXcd c = prob.blocks[b].coupling * sol.q;
        BlockReport br;
        br.role = prob.blocks[b].role;
        br.radius = prob.blocks[b].radius;
        br.hermitian_defect = (q - q.adjoint()).cwiseAbs().maxCoeff();
        br.min_eigenvalue = min_eigenvalue(bordered(q, c));
        br.schur_min_eigenvalue = min_eigenvalue(q - c * c.adjoint());
        Eigen::JacobiSVD<MatrixXcd> svd(q);
        br.tolerance = tau * (1.0 + svd.singularValues()(0));
        double viol = 0.0;
        const Eigen::Index n = q.rows();
        for (Eigen::Index d = 0; d < n; ++d) {
            cplx sum = 0.0;
            for (Eigen::Index i = 0; i + d < n; ++i) sum += q(i, i + d);
            viol = std::max(viol, std::abs(sum - (d == 0 ? 1.0 : 0.0)));
        }
        br.toeplitz_violation = viol;
        br.pass = br.min_eigenvalue >= -br.tolerance && br.schur_min_eigenvalue >= -br.tolerance &&
                  viol <= tau && br.hermitian_defect <= tau;
        rep.min_eigenvalue = std::min(rep.min_eigenvalue, br.min_eigenvalue);
        rep.max_toeplitz_violation = std::max(rep.max_toeplitz_violation, viol);
        rep.pass = rep.pass && br.pass;
        rep.blocks.push_back(br);
    }
    return rep;
}

namespace {

void write_array(std::ostream& out, const MatrixXcd& a) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out << a(i, j).real() << ' ' << a(i, j).imag() << '\n';
        }
    }
}

MatrixXcd read_array(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
    MatrixXcd a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            double re = 0.0, im = 0.0;
            if (!(in >> re >> im)) throw std::runtime_error("load_problem: truncated array");
            a(i, j) = cplx(re, im);
        }
    }
    return a;
}

void expect(std::istream& in, std::string_view key) {
    std::string tok;
    if (!(in >> tok) || tok != key) {
        throw std::runtime_error("load_problem: expected '" + std::string(key) + "', got '" + tok + "'");
    }
}

}  // namespace

void save_problem(const SdpProblem& p, std::ostream& out) {
    const auto flags = out.flags();
    const auto prec = out.precision();
    out << std::setprecision(17);
    out << "nfisac-sdp 1\n";
    out << "measurements " << p.y.size() << '\n';
    out << "noise_bound " << p.noise_bound << '\n';
    out << "toeplitz " << to_string(p.mode) << '\n';
    out << "lifted_width " << p.lifted_width_comm << ' ' << p.lifted_width_radar << '\n';
    out << "blocks " << p.blocks.size() << '\n';
    out << "y " << p.y.size() << " 1\n";
    write_array(out, p.y);
    for (const ConstraintBlock& b : p.blocks) {
        out << "block " << to_string(b.role) << ' ' << b.radius << ' ' << b.coupling.rows() << ' '
            << b.coupling.cols() << '\n';
        write_array(out, b.coupling);
    }
    out.flags(flags);
    out.precision(prec);
}

SdpProblem load_problem(std::istream& in) {
    SdpProblem p;
    std::string tag;
    int version = 0;
    if (!(in >> tag >> version) || tag != "nfisac-sdp" || version != 1) {
        throw std::runtime_error("load_problem: not an nfisac-sdp v1 dump");
    }
    Eigen::Index m = 0;
    std::size_t nblocks = 0;
    std::string mode;
    expect(in, "measurements");
    in >> m;
    expect(in, "noise_bound");
    in >> p.noise_bound;
    expect(in, "toeplitz");
    in >> mode;
    p.mode = toeplitz_mode_from_string(mode);
    expect(in, "lifted_width");
    in >> p.lifted_width_comm >> p.lifted_width_radar;
    expect(in, "blocks");
    in >> nblocks;
    expect(in, "y");
    Eigen::Index rows = 0, cols = 0;
    in >> rows >> cols;
    if (!in || rows != m || cols != 1) throw std::runtime_error("load_problem: bad y header");
    p.y = read_array(in, m, 1);
    for (std::size_t b = 0; b < nblocks; ++b) {
        ConstraintBlock blk;
        std::string role;
        expect(in, "block");
        in >> role >> blk.radius >> rows >> cols;
        if (!in || cols != m || rows <= 0) throw std::runtime_error("load_problem: bad block header");
        blk.role = role_from_string(role);
        blk.coupling = read_array(in, rows, cols);
        p.blocks.push_back(std::move(blk));
    }
    return p;
}

}  // namespace nfisac
