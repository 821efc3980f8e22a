#pragma once

#include "htsolve/apply.hpp"

#include <vector>

namespace htsolve {

/// sgn(x) max(|x| - eta, 0)
double soft_scalar(double x, double eta);

/// Shrink the singular values of one edge matricization by eta.
HTensor soft_threshold_edge(const HTensor& h, std::size_t edge, double eta);

/// Composition of the edge shrinkages in the order of DimensionTree::edges().
HTensor soft_threshold(const HTensor& h, double eta);

struct StIterRow {
    int n = 0;
    double alpha = 0.0;
    Index max_rank = 0;
    double residual_lo = 0.0;
    double residual_hi = 0.0;
};

struct StSolveOptions {
    double omega = 0.0;
    double xi = 0.0;          // certified bound on ||I - omega A||
    double bbar = 0.0;        // B > ||A||
    double eps = 1e-6;
    double res_tol_factor = 0.1;
    int max_iter = 100'000;
};

struct StSolveResult {
    HTensor u;
    std::vector<StIterRow> trace;
    double error_bound = 0.0; // certified bound on ||u - exact solution||
};

/// Soft-thresholded Richardson iteration u <- S_alpha(u - omega (A u - f)) with
/// alpha_0 = omega ||f|| / (d - 1), halving alpha whenever
/// ||u_{n+1} - u_n|| <= (1 - xi) / (xi B) ||A u_{n+1} - f||.
/// Stops once the certified residual divided by A.bounds().lower is <= eps.
StSolveResult st_solve(const LowRankOperator& A, const HTensor& f, const StSolveOptions& opt);

} // namespace htsolve
