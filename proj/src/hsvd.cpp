#include "htsolve/hsvd.hpp"

#include "htsolve/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace htsolve {

namespace {

std::size_t at(int id) { return static_cast<std::size_t>(id); }

struct ThinQr {
    Eigen::MatrixXd q;
    Eigen::MatrixXd r;
};

ThinQr thin_qr(const Eigen::MatrixXd& a)
{
    const Index k = std::min(a.rows(), a.cols());
    ThinQr out;
    if (k == 0) {
        out.q = Eigen::MatrixXd(a.rows(), 0);
        out.r = Eigen::MatrixXd(0, a.cols());
        return out;
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    out.q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), k);
    out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    return out;
}

struct LeftSvd {
    Eigen::MatrixXd u;
    Eigen::VectorXd s;
};

// Left singular pairs above the relative cutoff.
LeftSvd left_svd(const Eigen::MatrixXd& m)
{
    LeftSvd out;
    if (m.rows() == 0 || m.cols() == 0) {
        out.u = Eigen::MatrixXd(m.rows(), 0);
        out.s = Eigen::VectorXd(0);
        return out;
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
    const Eigen::VectorXd& s = svd.singularValues();
    Index k = 0;
    const double cut = kRankCutoff * (s.size() > 0 ? s[0] : 0.0);
    while (k < s.size() && s[k] > cut && s[k] > 0.0) ++k;
    out.u = svd.matrixU().leftCols(k);
    out.s = s.head(k);
    return out;
}

// Orthogonalized tensor plus, per non-root node, left singular vectors of the
// node's coefficient matrix and the corresponding square-root Gram factor.
struct Hsvd {
    HTensor orth;
    std::vector<Eigen::MatrixXd> vecs;
    std::vector<Eigen::VectorXd> sigma;
    std::vector<Eigen::MatrixXd> factor;
};

Hsvd compute_hsvd(const HTensor& h)
{
    Hsvd out;
    out.orth = h.orthogonal() ? h : orthogonalize(h);
    const auto& t = out.orth.tree();
    const auto n = at(t.num_nodes());
    out.vecs.resize(n);
    out.sigma.resize(n);
    out.factor.resize(n);
    out.factor[at(DimensionTree::root())] = Eigen::MatrixXd::Ones(1, 1);

    for (int id : t.preorder()) {
        if (t.is_leaf(id)) continue;
        const auto& node = t.node(id);
        const Index r1 = out.orth.node_rank(node.left);
        const Index r2 = out.orth.node_rank(node.right);
        const Eigen::MatrixXd y = out.orth.component(id) * out.factor[at(id)];
        const Index s = y.cols();

        Eigen::Map<const Eigen::MatrixXd> right(y.data(), r2, r1 * s);
        Eigen::MatrixXd left(r1, r2 * s);
        for (Index j = 0; j < s; ++j)
            for (Index k1 = 0; k1 < r1; ++k1)
                for (Index k2 = 0; k2 < r2; ++k2) left(k1, j * r2 + k2) = y(k1 * r2 + k2, j);

        LeftSvd ls = left_svd(left);
        LeftSvd rs = left_svd(right);
        if (id == DimensionTree::root()) {
            const Index k = std::min(ls.s.size(), rs.s.size());
            ls.u.conservativeResize(Eigen::NoChange, k);
            ls.s.conservativeResize(k);
            rs.u.conservativeResize(Eigen::NoChange, k);
            rs.s = ls.s;
        }
        out.vecs[at(node.left)] = ls.u;
        out.sigma[at(node.left)] = ls.s;
        out.factor[at(node.left)] = ls.u * ls.s.asDiagonal();
        out.vecs[at(node.right)] = rs.u;
        out.sigma[at(node.right)] = rs.s;
        out.factor[at(node.right)] = rs.u * rs.s.asDiagonal();
    }
    return out;
}

EdgeSpectrum spectrum_of(const Hsvd& s)
{
    const auto& t = s.orth.tree();
    EdgeSpectrum out;
    for (int id : t.edges().nodes) out.sigma.push_back(s.sigma[at(id)]);
    return out;
}

HTensor zero_like(const HTensor& h) { return HTensor(h.shared_tree(), h.dims()); }

HTensor project(const Hsvd& s, const RankVector& r)
{
    const auto& h = s.orth;
    const auto& t = h.tree();
    for (std::size_t e = 0; e < r.size(); ++e)
        if (r[e] == 0) return zero_like(h);

    std::vector<Eigen::MatrixXd> p(at(t.num_nodes()));
    for (int id = 0; id < t.num_nodes(); ++id) {
        if (id == DimensionTree::root()) continue;
        const Index k = std::min<Index>(r[at(t.edge_of_node(id))], s.vecs[at(id)].cols());
        p[at(id)] = s.vecs[at(id)].leftCols(k);
    }
    std::vector<Eigen::MatrixXd> comps(at(t.num_nodes()));
    for (int id = 0; id < t.num_nodes(); ++id) {
        const auto& c = h.component(id);
        if (t.is_leaf(id)) {
            comps[at(id)] = c * p[at(id)];
            continue;
        }
        const auto& node = t.node(id);
        Eigen::MatrixXd b = detail::apply_to_children(c, p[at(node.left)].transpose(), p[at(node.right)].transpose());
        if (id != DimensionTree::root()) b = b * p[at(id)];
        comps[at(id)] = std::move(b);
    }
    return orthogonalize(with_components(h, std::move(comps), false));
}

} // namespace

double EdgeSpectrum::tail(std::size_t e, Index r) const
{
    const auto& s = sigma.at(e);
    if (r >= s.size()) return 0.0;
    return s.tail(s.size() - r).norm();
}

double EdgeSpectrum::total_tail(const RankVector& r) const
{
    double acc = 0.0;
    for (std::size_t e = 0; e < sigma.size(); ++e) {
        const double te = tail(e, r.at(e));
        acc += te * te;
    }
    return std::sqrt(acc);
}

HTensor orthogonalize(const HTensor& h)
{
    const auto& t = h.tree();
    std::vector<Eigen::MatrixXd> comps = h.components();
    std::vector<Eigen::MatrixXd> rfac(at(t.num_nodes()));
    for (int id : t.postorder()) {
        auto& c = comps[at(id)];
        if (!t.is_leaf(id)) {
            const auto& node = t.node(id);
            c = detail::apply_to_children(c, rfac[at(node.left)], rfac[at(node.right)]);
        }
        if (id == DimensionTree::root()) break;
        ThinQr qr = thin_qr(c);
        c = std::move(qr.q);
        rfac[at(id)] = std::move(qr.r);
    }
    return with_components(h, std::move(comps), true);
}

EdgeSpectrum edge_spectra(const HTensor& h) { return spectrum_of(compute_hsvd(h)); }

RankVector select_ranks(const EdgeSpectrum& s, double eta)
{
    if (eta < 0.0) throw InvalidArgument("negative truncation tolerance");
    const std::size_t ne = s.num_edges();
    Index rmax = 0;
    for (const auto& v : s.sigma) rmax = std::max<Index>(rmax, v.size());

    RankVector r(ne, 0);
    for (Index cand = 0; cand <= rmax; ++cand) {
        RankVector rc(ne);
        for (std::size_t e = 0; e < ne; ++e) rc[e] = std::min<Index>(cand, s.sigma[e].size());
        if (s.total_tail(rc) <= eta) {
            r = rc;
            break;
        }
    }

    // Drop further trailing values while the budget allows; tied groups go together.
    double used = s.total_tail(r);
    double budget = eta * eta - used * used;
    const double tie = 1e-12;
    for (;;) {
        int best = -1;
        double best_mass = 0.0;
        Index best_cnt = 0;
        for (std::size_t e = 0; e < ne; ++e) {
            const Index k = r[e];
            if (k == 0) continue;
            const auto& sv = s.sigma[e];
            const double last = sv[k - 1];
            Index first = k - 1;
            while (first > 0 && sv[first - 1] - last <= tie * sv[0]) --first;
            const Index cnt = k - first;
            const double mass = sv.segment(first, cnt).squaredNorm();
            if (mass > budget) continue;
            if (best < 0 || last < s.sigma[at(best)][r[at(best)] - 1]) {
                best = static_cast<int>(e);
                best_mass = mass;
                best_cnt = cnt;
            }
        }
        if (best < 0) break;
        r[at(best)] -= best_cnt;
        budget -= best_mass;
    }
    return r;
}

HTensor recompress(const HTensor& h, double eta, TruncationReport* report)
{
    if (eta < 0.0) throw InvalidArgument("negative truncation tolerance");
    const Hsvd s = compute_hsvd(h);
    const EdgeSpectrum sp = spectrum_of(s);
    const double nrm = sp.num_edges() > 0 ? sp.sigma[0].norm() : 0.0;
    if (eta >= nrm) {
        if (report) {
            report->ranks.assign(sp.num_edges(), 0);
            report->tail = nrm;
        }
        return zero_like(h);
    }
    const RankVector r = select_ranks(sp, eta);
    HTensor out = project(s, r);
    if (report) {
        report->ranks = out.ranks();
        report->tail = sp.total_tail(r);
    }
    return out;
}

HTensor truncate_to_ranks(const HTensor& h, const RankVector& r, TruncationReport* report)
{
    const auto& t = h.tree();
    if (r.size() != t.edges().size()) throw InvalidArgument("rank vector length does not match edge count");
    for (int id = 0; id < t.num_nodes(); ++id) {
        if (t.is_leaf(id) || id == DimensionTree::root()) continue;
        const auto& node = t.node(id);
        const Index ra = r[at(t.edge_of_node(id))];
        const Index r1 = r[at(t.edge_of_node(node.left))];
        const Index r2 = r[at(t.edge_of_node(node.right))];
        if (ra > r1 * r2) throw InvalidArgument("incompatible rank vector at node " + std::to_string(id));
    }
    const Hsvd s = compute_hsvd(h);
    const EdgeSpectrum sp = spectrum_of(s);
    RankVector rc(r);
    for (std::size_t e = 0; e < rc.size(); ++e) rc[e] = std::min<Index>(rc[e], sp.sigma[e].size());
    HTensor out = project(s, rc);
    if (report) {
        report->ranks = out.ranks();
        report->tail = sp.total_tail(rc);
    }
    return out;
}

ContractionSet contractions(const HTensor& h)
{
    const Hsvd s = compute_hsvd(h);
    const auto& t = s.orth.tree();
    ContractionSet out;
    for (int mode = 0; mode < s.orth.order(); ++mode) {
        const int leaf = t.leaf_of_mode(mode);
        const Eigen::MatrixXd& u = s.orth.component(leaf);
        const Eigen::MatrixXd& f = s.factor[at(leaf)];
        if (f.rows() != u.cols() || f.cols() == 0) {
            out.pi.push_back(Eigen::VectorXd::Zero(u.rows()));
            continue;
        }
        out.pi.push_back((u * f).rowwise().norm());
    }
    return out;
}

CoarsenSelection select_coarsening(const ContractionSet& c, double eta)
{
    if (eta < 0.0) throw InvalidArgument("negative coarsening tolerance");
    struct Entry {
        double v;
        int mode;
        Index idx;
    };
    std::vector<Entry> all;
    for (std::size_t m = 0; m < c.pi.size(); ++m)
        for (Index i = 0; i < c.pi[m].size(); ++i) all.push_back({c.pi[m][i], static_cast<int>(m), i});
    std::stable_sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
        if (a.v != b.v) return a.v > b.v;
        return std::tie(a.mode, a.idx) < std::tie(b.mode, b.idx);
    });
    // suffix[k] = sum of squares of entries k.. (accumulated from the small end)
    std::vector<double> suffix(all.size() + 1, 0.0);
    for (std::size_t k = all.size(); k-- > 0;) suffix[k] = suffix[k + 1] + all[k].v * all[k].v;

    std::size_t n = 0;
    while (n < all.size() && std::sqrt(suffix[n]) > eta) ++n;

    CoarsenSelection out;
    out.sets.resize(c.pi.size());
    for (std::size_t k = 0; k < n; ++k) out.sets[at(all[k].mode)].push_back(all[k].idx);
    for (auto& s : out.sets) std::sort(s.begin(), s.end());
    out.kept = static_cast<Index>(n);
    out.discarded = std::sqrt(suffix[n]);
    return out;
}

HTensor coarsen(const HTensor& h, double eta, CoarsenSelection* report)
{
    if (eta < 0.0) throw InvalidArgument("negative coarsening tolerance");
    const double nrm = norm(h);
    if (eta >= nrm) {
        if (report) {
            report->sets.assign(static_cast<std::size_t>(h.order()), {});
            report->kept = 0;
            report->discarded = nrm;
        }
        return zero_like(h);
    }
    const CoarsenSelection sel = select_coarsening(contractions(h), eta);
    if (report) *report = sel;
    return restrict_support(h, sel.sets);
}

HTensor restrict_support(const HTensor& h, const std::vector<std::vector<Index>>& sets)
{
    if (static_cast<int>(sets.size()) != h.order()) throw DimensionMismatch("need one index set per mode");
    const auto& t = h.tree();
    std::vector<Eigen::MatrixXd> comps = h.components();
    for (int mode = 0; mode < h.order(); ++mode) {
        const Index n = h.dims()[at(mode)];
        std::vector<char> keep(static_cast<std::size_t>(n), 0);
        for (Index i : sets[at(mode)]) {
            if (i < 0 || i >= n) throw InvalidArgument("support index out of range");
            keep[static_cast<std::size_t>(i)] = 1;
        }
        auto& u = comps[at(t.leaf_of_mode(mode))];
        for (Index i = 0; i < n; ++i)
            if (!keep[static_cast<std::size_t>(i)]) u.row(i).setZero();
    }
    return with_components(h, std::move(comps), false);
}

HTensor from_dense(const DenseTensor& data, std::shared_ptr<const DimensionTree> tree, double tol)
{
    if (tol < 0.0) throw InvalidArgument("negative tolerance");
    if (static_cast<int>(data.dims.size()) != tree->order()) throw DimensionMismatch("array order does not match tree");
    const auto& t = *tree;
    std::vector<Eigen::MatrixXd> basis(at(t.num_nodes()));
    for (int id = 1; id < t.num_nodes(); ++id) basis[at(id)] = left_svd(matricize(data, t.layout(id))).u;

    const auto& root = t.node(DimensionTree::root());
    const Index k = std::min(basis[at(root.left)].cols(), basis[at(root.right)].cols());
    basis[at(root.left)].conservativeResize(Eigen::NoChange, k);
    basis[at(root.right)].conservativeResize(Eigen::NoChange, k);
    if (k == 0) return HTensor(std::move(tree), data.dims);

    std::vector<Eigen::MatrixXd> comps(at(t.num_nodes()));
    for (int id = 0; id < t.num_nodes(); ++id) {
        if (t.is_leaf(id)) {
            comps[at(id)] = basis[at(id)];
            continue;
        }
        const auto& node = t.node(id);
        const Eigen::MatrixXd target = id == DimensionTree::root() ? matricize(data, t.layout(id)) : basis[at(id)];
        comps[at(id)] = detail::apply_to_children(target, basis[at(node.left)].transpose(), basis[at(node.right)].transpose());
    }
    HTensor h(std::move(tree), data.dims, std::move(comps), false);
    return recompress(h, tol);
}

HTensor from_dense(const DenseTensor& data, const DimensionTree& tree, double tol)
{
    return from_dense(data, std::make_shared<const DimensionTree>(tree), tol);
}

double as_quasinorm(std::vector<double> seq, double s)
{
    if (!(s > 0.0)) throw InvalidArgument("quasi-norm exponent must be positive");
    for (double& v : seq) v = std::abs(v);
    std::sort(seq.begin(), seq.end(), std::greater<>());
    double tail2 = 0.0;
    for (double v : seq) tail2 += v * v;
    double best = 0.0;
    for (std::size_t n = 0; n <= seq.size(); ++n) {
        best = std::max(best, std::pow(static_cast<double>(n + 1), s) * std::sqrt(std::max(0.0, tail2)));
        if (n < seq.size()) tail2 -= seq[n] * seq[n];
    }
    return best;
}

double rank_class_quasinorm(const EdgeSpectrum& s, const std::function<double(Index)>& gamma)
{
    Index rmax = 0;
    for (const auto& v : s.sigma) rmax = std::max<Index>(rmax, v.size());
    double best = 0.0;
    for (Index r = 0; r <= rmax; ++r) {
        RankVector rv(s.num_edges());
        for (std::size_t e = 0; e < rv.size(); ++e) rv[e] = std::min<Index>(r, s.sigma[e].size());
        best = std::max(best, gamma(r) * s.total_tail(rv));
    }
    return best;
}

namespace detail {

EdgeSvd edge_svd(const HTensor& h, std::size_t edge)
{
    if (edge >= h.tree().edges().size()) throw InvalidArgument("edge index out of range");
    Hsvd s = compute_hsvd(h);
    EdgeSvd out;
    out.node = s.orth.tree().edges()[edge];
    out.vecs = std::move(s.vecs[at(out.node)]);
    out.sigma = std::move(s.sigma[at(out.node)]);
    out.orth = std::move(s.orth);
    return out;
}

} // namespace detail

} // namespace htsolve
