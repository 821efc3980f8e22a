#pragma once

#include "htsolve/apply.hpp"
#include "htsolve/hsvd.hpp"
#include "htsolve/operator.hpp"

#include <utility>
#include <vector>

namespace htsolve {

struct SolveConfig {
    double omega = 0.0;  // Richardson step
    double rho = 0.0;    // ||I - omega A|| <= rho
    double c_A = 0.0;    // >= ||A^{-1}||
    double eps0 = 0.0;   // >= c_A ||f||
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    double kappa3 = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double alpha = 1.0;
    double eps = 1e-3;
    /// Tolerance of the final residual certificate, relative to eps.
    double certificate_factor = 1e-2;

    /// Throws InvalidArgument when a range condition fails.
    void validate() const;
    /// Inner step count I, or 0 when no j <= 10^6 satisfies the condition.
    int inner_steps() const;
};

/// kappa1 = (1 + (1+a)(sqrt(2d-3) + sqrt(d) + sqrt((2d-3)d)))^{-1} and its companions.
struct KappaDefaults {
    double kappa1, kappa2, kappa3;
};
KappaDefaults kappa_defaults(int d, double alpha);

SolveConfig default_config(const LowRankOperator& A, const HTensor& f, int d, double eps, double alpha = 1.0);

struct SolveStepRow {
    int k = 0;
    int j = 0;             // inner index; j == inner_steps marks the outer reduction
    double eta = 0.0;      // eta_{k,j}, or the outer recompress tolerance
    RankVector ranks;      // ranks of the iterate after the step
    std::vector<Index> support; // per-mode support sizes
    double residual_lo = 0.0;   // certified interval for ||A w_{k,j} - f||
    double residual_hi = 0.0;
    double seconds = 0.0;
};

struct SolveDiagnostics {
    /// Least-squares slope of log(sigma_k) against k over all edges of the result.
    double sigma_decay_rate = 0.0;
    /// A^s quasi-norms of the per-mode contractions at s = contraction_s.
    double contraction_s = 1.0;
    std::vector<double> contraction_quasinorms;
};

struct SolveReport {
    int inner_steps = 0;
    int outer_steps = 0;
    std::vector<SolveStepRow> trace;
    /// A-priori bound 2^{-K} eps0 reached by the outer loop.
    double apriori_bound = 0.0;
    /// A-posteriori interval for ||u_eps - u|| from the final residual.
    double certificate_lower = 0.0;
    double certificate_upper = 0.0;
    /// min of the two upper bounds above.
    double error_bound = 0.0;
    bool bounds_certified = false;
    SolveDiagnostics diagnostics;
    double seconds = 0.0;
};

struct SolveResult {
    HTensor u;
    SolveReport report;
};

/// The perturbed Richardson iteration with inner coarsening and outer rank/support reduction.
SolveResult solve(const LowRankOperator& A, const HTensor& f, const SolveConfig& cfg);

/// Certified interval (lower, upper) for ||v - A^{-1} f||.
std::pair<double, double> error_certificate(const LowRankOperator& A, const HTensor& v, const HTensor& f, double res_eta);

SolveDiagnostics solve_diagnostics(const HTensor& u, double s = 1.0);

struct ReductionEdgeRow {
    std::size_t edge = 0;
    Index rank = 0;      // rank chosen for v
    Index reference = 0; // minimal rank of u_ref with edge tail <= alpha eta
};

struct ReductionModeRow {
    int mode = 0;
    Index support = 0;   // support kept for v
    Index reference = 0; // minimal support of u_ref with mode tail <= alpha eta
};

struct ReductionReport {
    std::vector<ReductionEdgeRow> edges;
    std::vector<ReductionModeRow> modes;
    double rank_error = 0.0;     // ||u_ref - recompress(v)||
    double rank_error_bound = 0.0;
    double support_error = 0.0;  // ||u_ref - coarsen(v)||
    double support_error_bound = 0.0;
    bool rank_ok = false;        // max chosen rank <= max reference rank
    bool support_ok = false;     // total kept support <= total reference support
    bool passed() const;
};

/// Checks the joint quasi-optimality of recompress and coarsen applied to a perturbation v of u_ref.
ReductionReport reduction_quasi_optimality_check(const HTensor& u_ref, const HTensor& v, double eta, double alpha);

} // namespace htsolve
