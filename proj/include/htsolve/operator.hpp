#pragma once

#include "htsolve/dense.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <vector>

namespace htsolve {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// One per-mode factor of a Kronecker term; identity when `identity` is set.
struct ModeFactor {
    bool identity = true;
    SparseMatrix mat;

    static ModeFactor eye() { return {}; }
    static ModeFactor of(SparseMatrix m) { return {false, std::move(m)}; }
    static ModeFactor of(const Eigen::MatrixXd& m);
};

struct KronTerm {
    double coeff = 1.0;
    std::vector<ModeFactor> factors;

    /// Number of non-identity factors.
    int active_modes() const;
};

enum class ScalingKind {
    none,
    /// Exact separable diagonal D_1 (x) ... (x) D_d applied on both sides.
    diagonal,
    /// Non-separable diagonal (sum_i q_i)^{-1/2} applied on both sides; exact
    /// application needs an exponential-sum approximation.
    inverse_sqrt_sum,
};

struct OperatorScaling {
    ScalingKind kind = ScalingKind::none;
    /// Per-mode diagonal entries (diagonal) or level weights q (inverse_sqrt_sum).
    std::vector<Eigen::VectorXd> values;
};

struct OperatorBounds {
    double lower = 0.0;
    double upper = 0.0;
    bool certified = false;

    bool valid() const { return lower > 0.0 && upper >= lower; }
};

/// A = S (sum_t c_t A_t1 (x) ... (x) A_td) S with an optional diagonal scaling S.
/// All factors are square; the represented operator acts on tensors of size dims.
class LowRankOperator {
public:
    LowRankOperator() = default;
    LowRankOperator(std::vector<Index> dims, std::vector<KronTerm> terms, OperatorScaling scaling = {}, bool symmetric = true);

    static LowRankOperator identity(std::vector<Index> dims);

    const std::vector<Index>& dims() const { return dims_; }
    int order() const { return static_cast<int>(dims_.size()); }
    const std::vector<KronTerm>& terms() const { return terms_; }
    Index num_terms() const { return static_cast<Index>(terms_.size()); }
    const OperatorScaling& scaling() const { return scaling_; }
    bool symmetric() const { return symmetric_; }

    const OperatorBounds& bounds() const { return bounds_; }
    void set_bounds(OperatorBounds b) { bounds_ = b; }

    /// Exact scaling diagonal over the full product index set (row-major).
    Eigen::VectorXd scaling_diagonal(Index guard = kDenseGuard) const;

    SparseMatrix assemble_sparse(Index guard = 50'000'000) const;
    Eigen::MatrixXd assemble_dense(Index guard = 25'000'000) const;

    /// Exact matrix-vector product on a flat row-major vector.
    Eigen::VectorXd apply_flat(const Eigen::VectorXd& x) const;

    /// Row indices reachable from the given per-mode index sets by some term.
    std::vector<std::vector<Index>> reach(const std::vector<std::vector<Index>>& sets) const;

    /// Maximal diagonal scaling value over all rows, and minimum over the given sets.
    double scaling_max() const;
    double scaling_min(const std::vector<std::vector<Index>>& sets) const;

private:
    std::vector<Index> dims_;
    std::vector<KronTerm> terms_;
    OperatorScaling scaling_;
    bool symmetric_ = true;
    OperatorBounds bounds_;

    void validate() const;
};

/// Extreme eigenvalues (symmetric case) or singular values of the assembled operator.
///
/// Small operators are handled densely. Otherwise, if all but at most one mode have
/// simultaneously diagonalizable factors, the operator is block diagonalized and the
/// blocks are solved exactly. Both paths are flagged certified. In all remaining cases
/// a Lanczos estimate with a 10% safety margin is returned, flagged non-certified.
OperatorBounds estimate_operator_bounds(const LowRankOperator& A, Index dense_limit = 4096);

} // namespace htsolve
