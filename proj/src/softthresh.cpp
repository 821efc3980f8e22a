#include "htsolve/softthresh.hpp"

#include "htsolve/errors.hpp"

#include <cmath>

namespace htsolve {

double soft_scalar(double x, double eta)
{
    if (eta < 0.0) throw InvalidArgument("negative threshold");
    const double m = std::abs(x) - eta;
    return m > 0.0 ? std::copysign(m, x) : 0.0;
}

HTensor soft_threshold_edge(const HTensor& h, std::size_t edge, double eta)
{
    if (eta < 0.0) throw InvalidArgument("negative threshold");
    detail::EdgeSvd es = detail::edge_svd(h, edge);
    const auto& t = es.orth.tree();
    Index k = 0;
    while (k < es.sigma.size() && es.sigma[k] > eta) ++k;
    if (k == 0) return HTensor(h.shared_tree(), h.dims());

    const Eigen::MatrixXd p = es.vecs.leftCols(k);
    Eigen::VectorXd ratio(k);
    for (Index i = 0; i < k; ++i) ratio[i] = (es.sigma[i] - eta) / es.sigma[i];

    std::vector<Eigen::MatrixXd> comps = es.orth.components();
    const int node = es.node;
    comps[static_cast<std::size_t>(node)] = comps[static_cast<std::size_t>(node)] * p;

    // Express the parent's coefficients in the new basis: rows map through diag(ratio) P^T.
    const int parent = t.node(node).parent;
    const auto& pn = t.node(parent);
    const Eigen::MatrixXd coef = ratio.asDiagonal() * p.transpose();
    const Index r1 = es.orth.node_rank(pn.left);
    const Index r2 = es.orth.node_rank(pn.right);
    const Eigen::MatrixXd x1 = pn.left == node ? coef : Eigen::MatrixXd::Identity(r1, r1);
    const Eigen::MatrixXd x2 = pn.right == node ? coef : Eigen::MatrixXd::Identity(r2, r2);
    auto& bp = comps[static_cast<std::size_t>(parent)];
    bp = detail::apply_to_children(bp, x1, x2);
    return with_components(es.orth, std::move(comps), false);
}

HTensor soft_threshold(const HTensor& h, double eta)
{
    if (eta < 0.0) throw InvalidArgument("negative threshold");
    HTensor out = h;
    for (std::size_t e = 0; e < h.tree().edges().size(); ++e) out = soft_threshold_edge(out, e, eta);
    return out;
}

StSolveResult st_solve(const LowRankOperator& A, const HTensor& f, const StSolveOptions& opt)
{
    if (!(opt.omega > 0.0)) throw InvalidArgument("step size must be positive");
    if (!(opt.xi >= 0.0 && opt.xi < 1.0)) throw InvalidArgument("contraction factor must lie in [0, 1)");
    if (!(opt.bbar > 0.0)) throw InvalidArgument("operator norm bound must be positive");
    if (!(opt.eps > 0.0)) throw InvalidArgument("target accuracy must be positive");
    if (!(opt.res_tol_factor > 0.0 && opt.res_tol_factor < 1.0)) throw InvalidArgument("residual tolerance factor must lie in (0, 1)");
    if (!A.bounds().valid()) throw InvalidArgument("st_solve needs operator bounds");
    if (A.dims() != f.dims()) throw DimensionMismatch("operator and right-hand side dims differ");

    const double lower = A.bounds().lower;
    const int d = f.order();
    const double nf = norm(f);
    StSolveResult res;
    res.u = HTensor(f.shared_tree(), f.dims());
    if (nf == 0.0) return res;

    double alpha = opt.omega * nf / static_cast<double>(d - 1);
    HTensor r = scale(f, -1.0);
    double hi = nf;
    double period_hi = hi;

    for (int n = 0;; ++n) {
        if (hi / lower <= opt.eps) break;
        if (n >= opt.max_iter)
            throw ContractionViolation("soft-threshold iteration did not reach the target within " + std::to_string(opt.max_iter) + " steps");

        HTensor unew = soft_threshold(axpy(res.u, -opt.omega, r), alpha);
        const double tol = opt.res_tol_factor * hi;
        HTensor rnew = subtract(apply_certified(A, unew, tol), f);
        const double rn = norm(rnew);
        const double lo = std::max(0.0, rn - tol);
        hi = rn + tol;
        const double du = norm(subtract(unew, res.u));

        res.trace.push_back({n, alpha, unew.max_rank(), lo, hi});
        res.u = std::move(unew);
        r = recompress(rnew, 0.0);

        const bool halve = opt.xi == 0.0 || du <= (1.0 - opt.xi) / (opt.xi * opt.bbar) * lo;
        if (halve) {
            if (hi > 1.5 * period_hi)
                throw ContractionViolation("residual grew over a threshold period at step " + std::to_string(n));
            alpha /= 2.0;
            period_hi = hi;
        }
    }
    res.error_bound = hi / lower;
    return res;
}

} // namespace htsolve
