#pragma once

#include "htsolve/htensor.hpp"

#include <Eigen/Dense>

#include <vector>

namespace htsolve {

/// Exponential sum S_r(x) = sum_k w_k exp(-a_k x) approximating 1/x on [1, inf).
struct ExpSumInverse {
    int r = 0;
    Eigen::VectorXd weights;
    Eigen::VectorXd exponents;
    /// Sup error over the validation grid (log-spaced on [1, 1e8]).
    double sup_error = 0.0;

    /// Calibrated constant C in sup_error <= C exp(-pi sqrt(r)).
    static constexpr double kCalibratedC = 50.0;

    double operator()(double x) const;
};

/// Sinc-quadrature sum for 1/x with r terms, certified on the validation grid.
ExpSumInverse bh_exponential_sum(int r);

/// Validation grid used by bh_exponential_sum.
std::vector<double> expsum_validation_grid();

/// Diagonal scaling omega_lambda = (sum_i q_{i,lambda_i})^{-1/2} together with its
/// rank-m exponential-sum approximation sum_j w_j prod_i exp(-t_j q_{i,lambda_i}).
struct ExpSumScaling {
    Eigen::VectorXd weights;
    Eigen::VectorXd exponents;
    std::vector<Eigen::VectorXd> level_weights; // q per mode
    std::vector<std::vector<Index>> active;     // certified rows per mode
    double tol = 0.0;                           // requested relative tolerance
    double certified = 0.0;                     // verified max relative error on the active set
    bool exhaustive = false;                    // certified over every distinct active row sum

    Index m() const { return weights.size(); }

    /// Approximate and exact diagonal values at a multi-index.
    double approx(std::span<const Index> idx) const;
    double exact(std::span<const Index> idx) const;
    /// Same as functions of x = sum_i q_{i,lambda_i}.
    double approx_at(double x) const;

    bool covers(const std::vector<std::vector<Index>>& sets) const;
};

/// Smallest m (doubling, then bisection) whose relative error on the active set is <= tol.
/// Throws InvalidArgument for tol >= 1 and ToleranceInfeasible if m would exceed 4096.
ExpSumScaling build_scaling(const std::vector<Eigen::VectorXd>& level_weights, double tol,
                            const std::vector<std::vector<Index>>& active);

/// Full index ranges for every mode.
std::vector<std::vector<Index>> full_active_set(const std::vector<Index>& dims);

/// Hierarchical representation of the scaling diagonal (rank m on every edge),
/// with rows outside the active set zeroed.
HTensor scaling_tensor(const ExpSumScaling& s, std::shared_ptr<const DimensionTree> tree);

/// Entrywise product with the approximate scaling diagonal.
/// Throws CertificateViolation if v has support outside the certified set.
HTensor apply_scaling(const ExpSumScaling& s, const HTensor& v);

} // namespace htsolve
