#include "htsolve/solver.hpp"

#include "htsolve/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace htsolve {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<Index> support_sizes(const HTensor& h)
{
    std::vector<Index> out;
    for (const auto& s : h.support()) out.push_back(static_cast<Index>(s.size()));
    return out;
}

} // namespace

void SolveConfig::validate() const
{
    if (!(omega > 0.0)) throw InvalidArgument("omega must be positive");
    // rho = 0 occurs for exact multiples of the identity and is accepted.
    if (!(rho >= 0.0 && rho < 1.0)) throw InvalidArgument("rho must lie in [0, 1)");
    if (!(c_A > 0.0)) throw InvalidArgument("c_A must be positive");
    if (!(eps0 >= 0.0)) throw InvalidArgument("eps0 must be nonnegative");
    for (double k : {kappa1, kappa2, kappa3})
        if (!(k > 0.0 && k < 1.0)) throw InvalidArgument("kappa values must lie in (0, 1)");
    if (kappa1 + kappa2 + kappa3 > 1.0 + 1e-14) throw InvalidArgument("kappa1 + kappa2 + kappa3 must not exceed 1");
    if (!(beta1 >= 0.0)) throw InvalidArgument("beta1 must be nonnegative");
    if (!(beta2 > 0.0)) throw InvalidArgument("beta2 must be positive");
    if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
    if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
    if (!(certificate_factor > 0.0)) throw InvalidArgument("certificate factor must be positive");
    if (inner_steps() < 1) throw InvalidArgument("no inner step count satisfies the contraction condition");
}

int SolveConfig::inner_steps() const
{
    for (int j = 0; j <= 1'000'000; ++j) {
        const double v = std::pow(rho, j) * (1.0 + (omega + beta1 + beta2) * j);
        if (v <= 0.5 * kappa1) return j;
    }
    return 0;
}

KappaDefaults kappa_defaults(int d, double alpha)
{
    if (d < 2) throw InvalidArgument("tensor order must be >= 2");
    if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
    const double a = std::sqrt(2.0 * d - 3.0);
    const double b = std::sqrt(static_cast<double>(d));
    const double k1 = 1.0 / (1.0 + (1.0 + alpha) * (a + b + std::sqrt((2.0 * d - 3.0) * d)));
    return {k1, a * (1.0 + alpha) * k1, b * (a + 1.0) * (1.0 + alpha) * k1};
}

SolveConfig default_config(const LowRankOperator& A, const HTensor& f, int d, double eps, double alpha)
{
    const auto& bd = A.bounds();
    if (!(bd.lower > 0.0) || !(bd.upper >= bd.lower)) throw InvalidArgument("operator bounds unavailable or lower bound <= 0");
    SolveConfig c;
    c.omega = 2.0 / (bd.upper + bd.lower);
    c.rho = (bd.upper - bd.lower) / (bd.upper + bd.lower);
    c.c_A = 1.0 / bd.lower;
    c.eps0 = c.c_A * norm(f);
    const auto k = kappa_defaults(d, alpha);
    c.kappa1 = k.kappa1;
    c.kappa2 = k.kappa2;
    c.kappa3 = k.kappa3;
    c.beta1 = 0.0;
    c.beta2 = k.kappa1 / 4.0;
    c.alpha = alpha;
    c.eps = eps;
    return c;
}

std::pair<double, double> error_certificate(const LowRankOperator& A, const HTensor& v, const HTensor& f, double res_eta)
{
    if (!A.bounds().valid()) throw InvalidArgument("operator bounds unavailable");
    if (res_eta < 0.0) throw InvalidArgument("negative residual tolerance");
    const HTensor r = subtract(apply_certified(A, v, res_eta), rhs_truncate(f, res_eta));
    const double rn = norm(r);
    return {std::max(0.0, rn - 2.0 * res_eta) / A.bounds().upper, (rn + 2.0 * res_eta) / A.bounds().lower};
}

SolveDiagnostics solve_diagnostics(const HTensor& u, double s)
{
    SolveDiagnostics out;
    out.contraction_s = s;
    const EdgeSpectrum spec = edge_spectra(u);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& sig : spec.sigma)
        for (Index k = 0; k < sig.size(); ++k) {
            if (!(sig[k] > 0.0)) continue;
            const double x = static_cast<double>(k);
            const double y = std::log(sig[k]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++n;
        }
    const double den = n * sxx - sx * sx;
    if (n >= 2 && den > 0.0) out.sigma_decay_rate = (n * sxy - sx * sy) / den;
    const ContractionSet c = contractions(u);
    for (const auto& pi : c.pi) out.contraction_quasinorms.push_back(as_quasinorm(std::vector<double>(pi.data(), pi.data() + pi.size()), s));
    return out;
}

SolveResult solve(const LowRankOperator& A, const HTensor& f, const SolveConfig& cfg)
{
    cfg.validate();
    if (A.dims() != f.dims()) throw DimensionMismatch("operator and right-hand side dims differ");
    if (!A.bounds().valid()) throw InvalidArgument("solve needs operator bounds");
    const auto t0 = Clock::now();

    SolveResult res;
    SolveReport& rep = res.report;
    rep.inner_steps = cfg.inner_steps();
    rep.bounds_certified = A.bounds().certified;
    const int I = rep.inner_steps;
    const double upper = A.bounds().upper;
    const double growth = cfg.omega + cfg.beta1 + cfg.beta2;

    HTensor u(f.shared_tree(), f.dims());
    int k = 0;
    double bound = cfg.eps0;
    while (bound > cfg.eps) {
        HTensor w = u;
        for (int j = 0; j < I; ++j) {
            const auto ts = Clock::now();
            const double eta = std::pow(cfg.rho, j + 1) * bound;
            const HTensor r = subtract(apply_certified(A, w, eta / 2.0), rhs_truncate(f, eta / 2.0));
            const double rn = norm(r);
            const double lo = std::max(0.0, rn - eta);
            const double hi = rn + eta;
            // a-priori bound for ||w_{k,j} - u||
            const double prior = std::pow(cfg.rho, j) * (1.0 + growth * j) * bound;
            if (lo / upper > prior * (1.0 + 1e-9) + 1e-300)
                throw ContractionViolation("certified residual stagnation at (k, j) = (" + std::to_string(k) + ", " + std::to_string(j) +
                                           "): error lower bound " + std::to_string(lo / upper) + " exceeds " + std::to_string(prior));
            w = coarsen(recompress(axpy(w, -cfg.omega, r), cfg.beta1 * eta), cfg.beta2 * eta);
            rep.trace.push_back({k, j, eta, w.ranks(), support_sizes(w), lo, hi, since(ts)});
        }
        const auto ts = Clock::now();
        const double next = bound / 2.0;
        u = coarsen(recompress(w, cfg.kappa2 * next), cfg.kappa3 * next);
        rep.trace.push_back({k, I, cfg.kappa2 * next, u.ranks(), support_sizes(u), 0.0, 0.0, since(ts)});
        bound = next;
        ++k;
    }
    rep.outer_steps = k;
    rep.apriori_bound = bound;
    const auto [lo, hi] = error_certificate(A, u, f, cfg.certificate_factor * cfg.eps);
    rep.certificate_lower = lo;
    rep.certificate_upper = hi;
    rep.error_bound = std::min(bound, hi);
    if (lo > bound * (1.0 + 1e-9))
        throw ContractionViolation("final certified error lower bound " + std::to_string(lo) + " exceeds " + std::to_string(bound));
    rep.diagnostics = solve_diagnostics(u);
    rep.seconds = since(t0);
    res.u = std::move(u);
    return res;
}

bool ReductionReport::passed() const
{
    return rank_ok && support_ok && rank_error <= rank_error_bound && support_error <= support_error_bound;
}

ReductionReport reduction_quasi_optimality_check(const HTensor& u_ref, const HTensor& v, double eta, double alpha)
{
    if (!(eta >= 0.0) || !(alpha > 0.0)) throw InvalidArgument("need eta >= 0 and alpha > 0");
    const double dist = norm(subtract(u_ref, v));
    const double nref = norm(u_ref);
    if (dist > eta + 1e-12 * std::max(1.0, nref)) throw InvalidArgument("precondition violated: ||u_ref - v|| > eta");
    const int d = u_ref.order();
    const double slack = 1e-12 * std::max(1.0, nref);
    ReductionReport rep;

    // ranks
    const double ka = std::sqrt(2.0 * d - 3.0);
    TruncationReport tr;
    const HTensor vr = recompress(v, ka * (1.0 + alpha) * eta, &tr);
    const EdgeSpectrum su = edge_spectra(u_ref);
    Index rmax = 0, rbar = 0;
    for (std::size_t e = 0; e < su.num_edges(); ++e) {
        Index r = 0;
        while (su.tail(e, r) > alpha * eta) ++r;
        const Index chosen = e < tr.ranks.size() ? tr.ranks[e] : 0;
        rep.edges.push_back({e, chosen, r});
        rmax = std::max(rmax, chosen);
        rbar = std::max(rbar, r);
    }
    rep.rank_ok = rmax <= rbar;
    rep.rank_error = norm(subtract(u_ref, vr));
    rep.rank_error_bound = (1.0 + ka * (1.0 + alpha)) * eta + slack;

    // supports
    const double kb = std::sqrt(static_cast<double>(d));
    CoarsenSelection sel;
    const HTensor vc = coarsen(v, kb * (1.0 + alpha) * eta, &sel);
    const ContractionSet cu = contractions(u_ref);
    Index kept = 0, nbar = 0;
    for (int i = 0; i < d; ++i) {
        std::vector<double> p(cu.pi[static_cast<std::size_t>(i)].data(), cu.pi[static_cast<std::size_t>(i)].data() + cu.pi[static_cast<std::size_t>(i)].size());
        std::sort(p.begin(), p.end(), std::greater<>());
        // tails[n] = l2 norm of p[n..]
        std::vector<double> tails(p.size() + 1, 0.0);
        for (std::size_t n = p.size(); n-- > 0;) tails[n] = std::hypot(tails[n + 1], p[n]);
        Index nref_i = 0;
        while (tails[static_cast<std::size_t>(nref_i)] > alpha * eta) ++nref_i;
        const Index ki = static_cast<Index>(sel.sets[static_cast<std::size_t>(i)].size());
        rep.modes.push_back({i, ki, nref_i});
        kept += ki;
        nbar += nref_i;
    }
    rep.support_ok = kept <= nbar;
    rep.support_error = norm(subtract(u_ref, vc));
    rep.support_error_bound = (1.0 + kb * (1.0 + alpha)) * eta + slack;
    return rep;
}

} // namespace htsolve
