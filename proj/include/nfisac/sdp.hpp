#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nfisac/lifting.hpp"
#include "nfisac/model.hpp"

namespace nfisac {

/// How the Toeplitz trace constraints index the Gram block.
enum class ToeplitzMode {
    /// Gram block over the harmonics k = l + 2q of v(theta); the constraint
    /// is then exactly sup_theta |<A^H q, C(r) v(theta)>| <= 1.
    Frequency,
    /// Gram block over the W-dimensional vectorised (l, q) index.
    Vectorized,
};

std::string_view to_string(ToeplitzMode mode);
ToeplitzMode toeplitz_mode_from_string(std::string_view s);

/// One bordered LMI [[Q, B q], [(B q)^H, 1]] >= 0 with Toeplitz-trace Q.
struct ConstraintBlock {
    Role role = Role::Comm;
    double radius = 0.0;
    MatrixXcd coupling;  // n x m, maps q to the border column

    Eigen::Index size() const { return coupling.rows(); }
};

/// max Re<y, q> - eta ||q||  s.t. every block LMI holds.
struct SdpProblem {
    VectorXcd y;
    double noise_bound = 0.0;
    ToeplitzMode mode = ToeplitzMode::Frequency;
    std::vector<ConstraintBlock> blocks;
    int lifted_width_comm = 0;   // W_C
    int lifted_width_radar = 0;  // W_R

    Eigen::Index num_measurements() const { return y.size(); }
};

struct AssembleOptions {
    ToeplitzMode mode = ToeplitzMode::Frequency;
    /// Radii per role at which the LMI is imposed; 1 means r_max only.
    int constraint_radii = 5;
};

/// `count` radii in [r_min, r_max], equally spaced in 1/r, ending at r_max.
std::vector<double> constraint_radii(double r_min, double r_max, int count);

SdpProblem assemble_problem(const MeasurementSet& measurements, const LiftedDictionary& comm,
                            const LiftedDictionary& radar, const AssembleOptions& opts = {});

struct SolverOptions {
    /// Target relative gap between the restored objective and the certified bound.
    double tol = 1e-6;
    int max_iters = 100000;
    double rho = 1.0;
    double relaxation = 1.6;
    /// Iterations between residual checks, step-size updates and certificates.
    int check_interval = 20;
    /// Anderson acceleration memory; 0 disables it.
    int anderson_memory = 5;
    bool verbose = false;
};

struct SolverDiagnostics {
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    /// Certified upper bound on the optimum (Lagrangian bound).
    double upper_bound = 0.0;
    double relative_gap = 0.0;
    /// Weight s of the convex combination that made the returned point feasible.
    double restoration = 0.0;
    double rho = 0.0;
    double seconds = 0.0;
    bool converged = false;
    std::string status;
};

struct DualSolution {
    VectorXcd q;
    std::vector<MatrixXcd> gram;  // one Hermitian block per ConstraintBlock
    double objective = 0.0;
    SolverDiagnostics diagnostics;

    bool converged() const { return diagnostics.converged; }
};

/// ADMM on the bordered-LMI program. Owns its iterate state; one instance
/// per concurrent solve.
class AdmmSolver {
public:
    AdmmSolver(const SdpProblem& problem, SolverOptions opts);
    DualSolution run();

private:
    struct Impl;
    const SdpProblem& problem_;
    SolverOptions opts_;
};

DualSolution solve(const SdpProblem& problem, const SolverOptions& opts = {});

struct BlockReport {
    Role role = Role::Comm;
    double radius = 0.0;
    /// lambda_min of the bordered matrix.
    double min_eigenvalue = 0.0;
    /// lambda_min(Q - c c^H).
    double schur_min_eigenvalue = 0.0;
    double toeplitz_violation = 0.0;
    double hermitian_defect = 0.0;
    /// Allowed negative eigenvalue magnitude: tau * (1 + ||Q||_2).
    double tolerance = 0.0;
    bool pass = false;
};

struct FeasibilityReport {
    std::vector<BlockReport> blocks;
    double objective = 0.0;
    double min_eigenvalue = 0.0;
    double max_toeplitz_violation = 0.0;
    bool pass = false;
};

inline constexpr double kFeasibilityTol = 1e-6;

FeasibilityReport validate(const DualSolution& solution, const SdpProblem& problem,
                           double tau = kFeasibilityTol);

/// Text dump: a header with dimensions, then row-major complex arrays
/// ("re im" per line, 17 significant digits). See docs/formats.md.
void save_problem(const SdpProblem& problem, std::ostream& out);
SdpProblem load_problem(std::istream& in);

}  // namespace nfisac
