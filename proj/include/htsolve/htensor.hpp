#pragma once

#include "htsolve/dense.hpp"
#include "htsolve/tree.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace htsolve {

/// Rank per effective edge, in the order of DimensionTree::edges().
using RankVector = std::vector<Index>;

/// Tensor in hierarchical (tree-based Tucker) format.
///
/// Every node carries one component matrix:
///  - leaf for mode i: the mode frame, n_i x r_i;
///  - interior non-root node: the transfer tensor B(k1, k2, k) flattened to
///    (r_left * r_right) x r, row index k1 * r_right + k2;
///  - root: the root transfer matrix flattened to (r_left * r_right) x 1.
///
/// The basis of an interior node is then U(:, k) = sum B(k1, k2, k) U_left(:, k1) (x) U_right(:, k2)
/// where the Kronecker index runs over the node's layout, left modes outermost.
/// A zero tensor has all ranks 0.
class HTensor {
public:
    HTensor() = default;

    /// Zero tensor.
    HTensor(DimensionTree tree, std::vector<Index> dims);
    HTensor(std::shared_ptr<const DimensionTree> tree, std::vector<Index> dims);

    /// Takes ownership of the components; shapes are validated.
    HTensor(std::shared_ptr<const DimensionTree> tree, std::vector<Index> dims,
            std::vector<Eigen::MatrixXd> components, bool orthogonal = false);

    /// Elementary tensor f_1 (x) ... (x) f_d.
    static HTensor rank_one(std::shared_ptr<const DimensionTree> tree, std::span<const Eigen::VectorXd> factors);
    static HTensor rank_one(const DimensionTree& tree, std::span<const Eigen::VectorXd> factors);

    const DimensionTree& tree() const { return *tree_; }
    const std::shared_ptr<const DimensionTree>& shared_tree() const { return tree_; }
    const std::vector<Index>& dims() const { return dims_; }
    int order() const { return static_cast<int>(dims_.size()); }

    const Eigen::MatrixXd& component(int node) const { return comps_.at(static_cast<std::size_t>(node)); }
    const std::vector<Eigen::MatrixXd>& components() const { return comps_; }
    const Eigen::MatrixXd& frame(int mode) const { return component(tree_->leaf_of_mode(mode)); }

    /// Representation rank of a node (number of basis vectors); the root reports 1.
    Index node_rank(int node) const { return component(node).cols(); }

    /// Representation ranks per effective edge.
    RankVector ranks() const;
    Index max_rank() const;

    /// Set when all non-root node bases are orthonormal.
    bool orthogonal() const { return orthogonal_; }

    /// Number of stored scalars.
    Index num_parameters() const;

    /// Per-mode indices of rows carrying a nonzero frame entry.
    std::vector<std::vector<Index>> support() const;
    Index support_size() const;

    bool compatible_with(const HTensor& other) const;

    /// Shape, rank-compatibility and (when flagged) orthonormality checks.
    void check_invariants(double tol = 1e-12) const;

private:
    std::shared_ptr<const DimensionTree> tree_;
    std::vector<Index> dims_;
    std::vector<Eigen::MatrixXd> comps_;
    bool orthogonal_ = false;

    void check_shapes() const;
};

namespace detail {

/// Returns rows (k1', k2') of (X1 (x) X2) B, with B's rows indexed k1 * r2 + k2.
Eigen::MatrixXd apply_to_children(const Eigen::MatrixXd& b, const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2);

/// Basis matrix of a node over the node layout (only for small nodes).
Eigen::MatrixXd node_basis(const HTensor& h, int node, Index guard = kDenseGuard);

} // namespace detail

DenseTensor to_dense(const HTensor& h, Index guard = kDenseGuard);

double eval_entry(const HTensor& h, std::span<const Index> idx);

HTensor add(const HTensor& a, const HTensor& b);
HTensor subtract(const HTensor& a, const HTensor& b);
HTensor scale(const HTensor& a, double c);
/// a + c * b
HTensor axpy(const HTensor& a, double c, const HTensor& b);

double inner(const HTensor& a, const HTensor& b);
double norm(const HTensor& a);

/// Entrywise product; ranks multiply.
HTensor hadamard(const HTensor& a, const HTensor& b);

/// Multiply frame i by maps[i] (null entries mean identity). Ranks are kept.
HTensor apply_mode_maps(const HTensor& h, std::span<const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>> maps,
                        std::span<const Index> out_dims, double coeff = 1.0);

/// Replace components wholesale (used by format transformations).
HTensor with_components(const HTensor& h, std::vector<Eigen::MatrixXd> comps, bool orthogonal);

} // namespace htsolve
