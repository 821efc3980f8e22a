#include "htsolve/htensor.hpp"

#include "htsolve/errors.hpp"
#include "htsolve/hsvd.hpp"

#include <algorithm>
#include <string>

namespace htsolve {

namespace {

std::size_t at(int id) { return static_cast<std::size_t>(id); }

Index prod_dims(const std::vector<Index>& dims, const std::vector<int>& modes)
{
    Index n = 1;
    for (int m : modes) n *= dims[at(m)];
    return n;
}

} // namespace

HTensor::HTensor(DimensionTree tree, std::vector<Index> dims)
    : HTensor(std::make_shared<const DimensionTree>(std::move(tree)), std::move(dims))
{
}

HTensor::HTensor(std::shared_ptr<const DimensionTree> tree, std::vector<Index> dims)
    : tree_(std::move(tree)), dims_(std::move(dims))
{
    if (!tree_) throw InvalidArgument("null dimension tree");
    if (static_cast<int>(dims_.size()) != tree_->order()) throw DimensionMismatch("dims do not match tree order");
    comps_.resize(static_cast<std::size_t>(tree_->num_nodes()));
    for (int id = 0; id < tree_->num_nodes(); ++id) {
        if (tree_->is_leaf(id))
            comps_[at(id)] = Eigen::MatrixXd(dims_[at(tree_->mode_of_leaf(id))], 0);
        else
            comps_[at(id)] = Eigen::MatrixXd(0, id == DimensionTree::root() ? 1 : 0);
    }
    orthogonal_ = true;
}

HTensor::HTensor(std::shared_ptr<const DimensionTree> tree, std::vector<Index> dims,
                 std::vector<Eigen::MatrixXd> components, bool orthogonal)
    : tree_(std::move(tree)), dims_(std::move(dims)), comps_(std::move(components)), orthogonal_(orthogonal)
{
    if (!tree_) throw InvalidArgument("null dimension tree");
    if (static_cast<int>(dims_.size()) != tree_->order()) throw DimensionMismatch("dims do not match tree order");
    check_shapes();
}

HTensor HTensor::rank_one(std::shared_ptr<const DimensionTree> tree, std::span<const Eigen::VectorXd> factors)
{
    if (static_cast<int>(factors.size()) != tree->order()) throw DimensionMismatch("need one factor per mode");
    std::vector<Index> dims;
    for (const auto& f : factors) dims.push_back(f.size());
    std::vector<Eigen::MatrixXd> comps(static_cast<std::size_t>(tree->num_nodes()));
    for (int id = 0; id < tree->num_nodes(); ++id) {
        if (tree->is_leaf(id))
            comps[at(id)] = factors[at(tree->mode_of_leaf(id))];
        else
            comps[at(id)] = Eigen::MatrixXd::Ones(1, 1);
    }
    return HTensor(std::move(tree), std::move(dims), std::move(comps), false);
}

HTensor HTensor::rank_one(const DimensionTree& tree, std::span<const Eigen::VectorXd> factors)
{
    return rank_one(std::make_shared<const DimensionTree>(tree), factors);
}

void HTensor::check_shapes() const
{
    if (comps_.size() != static_cast<std::size_t>(tree_->num_nodes()))
        throw DimensionMismatch("component count does not match tree");
    for (int id = 0; id < tree_->num_nodes(); ++id) {
        const auto& c = comps_[at(id)];
        if (tree_->is_leaf(id)) {
            if (c.rows() != dims_[at(tree_->mode_of_leaf(id))])
                throw DimensionMismatch("frame row count does not match mode dimension");
            continue;
        }
        const auto& n = tree_->node(id);
        const Index r1 = comps_[at(n.left)].cols();
        const Index r2 = comps_[at(n.right)].cols();
        if (c.rows() != r1 * r2) throw DimensionMismatch("transfer tensor does not match child ranks");
        if (id == DimensionTree::root() && c.cols() != 1) throw DimensionMismatch("root transfer must be a single column");
    }
}

RankVector HTensor::ranks() const
{
    RankVector r;
    for (int id : tree_->edges().nodes) r.push_back(node_rank(id));
    return r;
}

Index HTensor::max_rank() const
{
    const auto r = ranks();
    return r.empty() ? 0 : *std::max_element(r.begin(), r.end());
}

Index HTensor::num_parameters() const
{
    Index n = 0;
    for (const auto& c : comps_) n += c.size();
    return n;
}

std::vector<std::vector<Index>> HTensor::support() const
{
    std::vector<std::vector<Index>> out(dims_.size());
    for (int mode = 0; mode < order(); ++mode) {
        const auto& u = frame(mode);
        for (Index i = 0; i < u.rows(); ++i)
            if (u.cols() > 0 && u.row(i).cwiseAbs().maxCoeff() > 0.0) out[at(mode)].push_back(i);
    }
    return out;
}

Index HTensor::support_size() const
{
    Index n = 0;
    for (const auto& s : support()) n += static_cast<Index>(s.size());
    return n;
}

bool HTensor::compatible_with(const HTensor& other) const
{
    return dims_ == other.dims_ && (tree_ == other.tree_ || *tree_ == *other.tree_);
}

void HTensor::check_invariants(double tol) const
{
    check_shapes();
    const auto& t = *tree_;
    for (int id = 0; id < t.num_nodes(); ++id) {
        if (t.is_leaf(id) || id == DimensionTree::root()) continue;
        const auto& n = t.node(id);
        if (node_rank(id) > node_rank(n.left) * node_rank(n.right))
            throw InvalidArgument("rank incompatibility at node " + std::to_string(id));
    }
    const auto& root = t.node(DimensionTree::root());
    if (node_rank(root.left) != node_rank(root.right))
        throw InvalidArgument("root children carry different ranks");
    if (!orthogonal_) return;

    std::vector<Index> total(dims_);
    for (int id = 0; id < t.num_nodes(); ++id) {
        if (id == DimensionTree::root()) continue;
        const auto& modes = t.node(id).modes;
        std::vector<int> comp;
        for (int m = 0; m < order(); ++m)
            if (!std::binary_search(modes.begin(), modes.end(), m)) comp.push_back(m);
        const Index bound = std::min(prod_dims(dims_, modes), prod_dims(dims_, comp));
        if (node_rank(id) > bound) throw InvalidArgument("rank exceeds matricization dimension at node " + std::to_string(id));
        const auto& c = comps_[at(id)];
        const Eigen::MatrixXd g = c.transpose() * c;
        if (g.size() > 0 && (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() > tol * std::max<double>(1.0, static_cast<double>(g.rows())))
            throw InvalidArgument("orthogonal flag set but node " + std::to_string(id) + " is not orthonormal");
    }
}

namespace detail {

Eigen::MatrixXd apply_to_children(const Eigen::MatrixXd& b, const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2)
{
    const Index r1 = x1.cols();
    const Index r2 = x2.cols();
    if (b.rows() != r1 * r2) throw DimensionMismatch("apply_to_children: shape mismatch");
    const Index n1 = x1.rows();
    const Index n2 = x2.rows();
    Eigen::MatrixXd out(n1 * n2, b.cols());
    if (r1 == 0 || r2 == 0) {
        out.setZero();
        return out;
    }
    Eigen::MatrixXd tmp(n2, r1);
    Eigen::MatrixXd y(n2, n1);
    for (Index k = 0; k < b.cols(); ++k) {
        Eigen::Map<const Eigen::MatrixXd> mk(b.col(k).data(), r2, r1);
        tmp.noalias() = x2 * mk;
        y.noalias() = tmp * x1.transpose();
        out.col(k) = Eigen::Map<const Eigen::VectorXd>(y.data(), n1 * n2);
    }
    return out;
}

Eigen::MatrixXd node_basis(const HTensor& h, int node, Index guard)
{
    const auto& t = h.tree();
    if (t.is_leaf(node)) return h.component(node);
    std::vector<Index> nd;
    for (int m : t.node(node).modes) nd.push_back(h.dims()[at(m)]);
    const Index rows = checked_size(nd, guard);
    if (rows > 0 && h.node_rank(node) > guard / rows) throw SizeGuardExceeded("node basis exceeds the dense guard");
    const auto& n = t.node(node);
    return apply_to_children(h.component(node), node_basis(h, n.left, guard), node_basis(h, n.right, guard));
}

} // namespace detail

DenseTensor to_dense(const HTensor& h, Index guard)
{
    checked_size(h.dims(), guard);
    const auto& t = h.tree();
    const Eigen::VectorXd flat = detail::node_basis(h, DimensionTree::root(), guard).col(0);
    const auto& lay = t.layout(DimensionTree::root());
    bool natural = true;
    for (int k = 0; k < h.order(); ++k) natural = natural && lay[at(k)] == k;
    if (natural) return DenseTensor(h.dims(), flat);

    std::vector<Index> ldims;
    for (int m : lay) ldims.push_back(h.dims()[at(m)]);
    DenseTensor in_layout(ldims, flat);
    std::vector<int> perm(static_cast<std::size_t>(h.order()));
    for (int k = 0; k < h.order(); ++k)
        perm[at(k)] = static_cast<int>(std::find(lay.begin(), lay.end(), k) - lay.begin());
    return permute_axes(in_layout, perm);
}

double eval_entry(const HTensor& h, std::span<const Index> idx)
{
    if (static_cast<int>(idx.size()) != h.order()) throw DimensionMismatch("multi-index has wrong order");
    for (int k = 0; k < h.order(); ++k)
        if (idx[at(k)] < 0 || idx[at(k)] >= h.dims()[at(k)]) throw InvalidArgument("multi-index out of range");
    const auto& t = h.tree();
    std::vector<Eigen::MatrixXd> row(static_cast<std::size_t>(t.num_nodes()));
    for (int id : t.postorder()) {
        if (t.is_leaf(id)) {
            row[at(id)] = h.component(id).row(idx[at(t.mode_of_leaf(id))]);
        } else {
            const auto& n = t.node(id);
            row[at(id)] = detail::apply_to_children(h.component(id), row[at(n.left)], row[at(n.right)]);
        }
    }
    return row[at(DimensionTree::root())](0, 0);
}

namespace {

void require_compatible(const HTensor& a, const HTensor& b, const char* what)
{
    if (!a.compatible_with(b)) throw DimensionMismatch(std::string(what) + ": tree or dims mismatch");
}

} // namespace

HTensor add(const HTensor& a, const HTensor& b)
{
    require_compatible(a, b, "add");
    const auto& t = a.tree();
    std::vector<Eigen::MatrixXd> comps(static_cast<std::size_t>(t.num_nodes()));
    for (int id = 0; id < t.num_nodes(); ++id) {
        const auto& ca = a.component(id);
        const auto& cb = b.component(id);
        if (t.is_leaf(id)) {
            Eigen::MatrixXd u(ca.rows(), ca.cols() + cb.cols());
            u << ca, cb;
            comps[at(id)] = std::move(u);
            continue;
        }
        const auto& n = t.node(id);
        const Index r1a = a.node_rank(n.left), r2a = a.node_rank(n.right);
        const Index r1b = b.node_rank(n.left), r2b = b.node_rank(n.right);
        const Index r2 = r2a + r2b;
        const bool root = id == DimensionTree::root();
        const Index cols = root ? 1 : ca.cols() + cb.cols();
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero((r1a + r1b) * r2, cols);
        for (Index k = 0; k < ca.cols(); ++k)
            for (Index k1 = 0; k1 < r1a; ++k1)
                for (Index k2 = 0; k2 < r2a; ++k2) out(k1 * r2 + k2, k) = ca(k1 * r2a + k2, k);
        const Index off = root ? 0 : ca.cols();
        for (Index k = 0; k < cb.cols(); ++k)
            for (Index k1 = 0; k1 < r1b; ++k1)
                for (Index k2 = 0; k2 < r2b; ++k2) out((r1a + k1) * r2 + r2a + k2, off + k) = cb(k1 * r2b + k2, k);
        comps[at(id)] = std::move(out);
    }
    return HTensor(a.shared_tree(), a.dims(), std::move(comps), false);
}

HTensor scale(const HTensor& a, double c)
{
    std::vector<Eigen::MatrixXd> comps = a.components();
    comps[at(DimensionTree::root())] *= c;
    return HTensor(a.shared_tree(), a.dims(), std::move(comps), a.orthogonal());
}

HTensor subtract(const HTensor& a, const HTensor& b) { return add(a, scale(b, -1.0)); }

HTensor axpy(const HTensor& a, double c, const HTensor& b) { return add(a, scale(b, c)); }

double inner(const HTensor& a, const HTensor& b)
{
    require_compatible(a, b, "inner");
    const auto& t = a.tree();
    std::vector<Eigen::MatrixXd> gram(static_cast<std::size_t>(t.num_nodes()));
    for (int id : t.postorder()) {
        if (t.is_leaf(id)) {
            gram[at(id)] = a.component(id).transpose() * b.component(id);
        } else {
            const auto& n = t.node(id);
            gram[at(id)] = a.component(id).transpose() *
                           detail::apply_to_children(b.component(id), gram[at(n.left)], gram[at(n.right)]);
        }
    }
    return gram[at(DimensionTree::root())](0, 0);
}

// Through the orthogonalized root rather than the Gram recursion, so that the
// norm of a difference of nearly equal tensors keeps full absolute accuracy.
double norm(const HTensor& a)
{
    if (a.orthogonal()) return a.component(DimensionTree::root()).norm();
    return orthogonalize(a).component(DimensionTree::root()).norm();
}

HTensor hadamard(const HTensor& a, const HTensor& b)
{
    require_compatible(a, b, "hadamard");
    const auto& t = a.tree();
    std::vector<Eigen::MatrixXd> comps(static_cast<std::size_t>(t.num_nodes()));
    for (int id = 0; id < t.num_nodes(); ++id) {
        const auto& ca = a.component(id);
        const auto& cb = b.component(id);
        if (t.is_leaf(id)) {
            Eigen::MatrixXd u(ca.rows(), ca.cols() * cb.cols());
            for (Index ka = 0; ka < ca.cols(); ++ka)
                for (Index kb = 0; kb < cb.cols(); ++kb) u.col(ka * cb.cols() + kb) = ca.col(ka).cwiseProduct(cb.col(kb));
            comps[at(id)] = std::move(u);
            continue;
        }
        const auto& n = t.node(id);
        const Index r1a = a.node_rank(n.left), r2a = a.node_rank(n.right);
        const Index r1b = b.node_rank(n.left), r2b = b.node_rank(n.right);
        const Index r2 = r2a * r2b;
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(r1a * r1b * r2, ca.cols() * cb.cols());
        for (Index ka = 0; ka < ca.cols(); ++ka)
            for (Index kb = 0; kb < cb.cols(); ++kb) {
                const Index col = ka * cb.cols() + kb;
                for (Index k1a = 0; k1a < r1a; ++k1a)
                    for (Index k2a = 0; k2a < r2a; ++k2a) {
                        const double va = ca(k1a * r2a + k2a, ka);
                        if (va == 0.0) continue;
                        for (Index k1b = 0; k1b < r1b; ++k1b)
                            for (Index k2b = 0; k2b < r2b; ++k2b)
                                out((k1a * r1b + k1b) * r2 + k2a * r2b + k2b, col) = va * cb(k1b * r2b + k2b, kb);
                    }
            }
        comps[at(id)] = std::move(out);
    }
    return HTensor(a.shared_tree(), a.dims(), std::move(comps), false);
}

HTensor apply_mode_maps(const HTensor& h, std::span<const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>> maps,
                        std::span<const Index> out_dims, double coeff)
{
    if (static_cast<int>(maps.size()) != h.order() || static_cast<int>(out_dims.size()) != h.order())
        throw DimensionMismatch("apply_mode_maps: need one map per mode");
    std::vector<Eigen::MatrixXd> comps = h.components();
    const auto& t = h.tree();
    for (int mode = 0; mode < h.order(); ++mode) {
        const auto& f = maps[at(mode)];
        if (!f) continue;
        auto& u = comps[at(t.leaf_of_mode(mode))];
        u = f(u);
        if (u.rows() != out_dims[at(mode)]) throw DimensionMismatch("mode map produced wrong row count");
    }
    comps[at(DimensionTree::root())] *= coeff;
    return HTensor(h.shared_tree(), std::vector<Index>(out_dims.begin(), out_dims.end()), std::move(comps), false);
}

HTensor with_components(const HTensor& h, std::vector<Eigen::MatrixXd> comps, bool orthogonal)
{
    return HTensor(h.shared_tree(), h.dims(), std::move(comps), orthogonal);
}

} // namespace htsolve
