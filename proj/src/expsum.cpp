#include "htsolve/expsum.hpp"

#include "htsolve/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace htsolve {

namespace {

constexpr Index kMaxTerms = 4096;
constexpr std::size_t kExhaustiveLimit = 100'000;
constexpr int kRandomSamples = 1000;

double sum_at(const Eigen::VectorXd& w, const Eigen::VectorXd& a, double x)
{
    double s = 0.0;
    for (Index k = 0; k < w.size(); ++k) s += w[k] * std::exp(-a[k] * x);
    return s;
}

double grid_error(const Eigen::VectorXd& w, const Eigen::VectorXd& a, const std::vector<double>& grid)
{
    double e = 0.0;
    for (double x : grid) e = std::max(e, std::abs(1.0 / x - sum_at(w, a, x)));
    return e;
}

// Sinc quadrature of x^{-1/2} = pi^{-1/2} int exp(s/2) exp(-x e^s) ds, for x >= 1,
// with m equispaced nodes on [a, b] chosen for the requested accuracy and range.
void inverse_sqrt_nodes(Index m, double tol, double xmax, Eigen::VectorXd& w, Eigen::VectorXd& t)
{
    const double a = 2.0 * std::log(tol / 8.0 * std::sqrt(std::numbers::pi / xmax));
    const double b = std::log(std::log(4.0 / tol) + 3.0);
    const double h = (b - a) / static_cast<double>(std::max<Index>(m - 1, 1));
    w.resize(m);
    t.resize(m);
    for (Index k = 0; k < m; ++k) {
        const double s = a + static_cast<double>(k) * h;
        t[k] = std::exp(s);
        w[k] = h * std::exp(0.5 * s) / std::sqrt(std::numbers::pi);
    }
}

double max_rel_error(const Eigen::VectorXd& w, const Eigen::VectorXd& t, const std::vector<double>& xs)
{
    double e = 0.0;
    for (double x : xs) {
        const double exact = 1.0 / std::sqrt(x);
        e = std::max(e, std::abs(exact - sum_at(w, t, x)) / exact);
    }
    return e;
}

std::vector<double> distinct(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v)
        if (out.empty() || x - out.back() > 1e-14 * std::max(1.0, std::abs(x))) out.push_back(x);
    return out;
}

} // namespace

double ExpSumInverse::operator()(double x) const { return sum_at(weights, exponents, x); }

std::vector<double> expsum_validation_grid()
{
    std::vector<double> g;
    const int n = 4000;
    for (int i = 0; i <= n; ++i) g.push_back(std::pow(10.0, 8.0 * i / n));
    return g;
}

ExpSumInverse bh_exponential_sum(int r)
{
    if (r < 1 || r > 256) throw InvalidArgument("exponential sum rank must lie in [1, 256]");
    const auto grid = expsum_validation_grid();
    const double h = std::numbers::pi / std::sqrt(static_cast<double>(r));
    const int kp_max = std::min(r - 1, static_cast<int>(std::ceil(2.0 * std::sqrt(static_cast<double>(r)))) + 4);

    ExpSumInverse best;
    best.r = r;
    best.sup_error = std::numeric_limits<double>::infinity();
    for (int kp = 0; kp <= kp_max; ++kp) {
        Eigen::VectorXd w(r), a(r);
        for (int i = 0; i < r; ++i) {
            const double s = static_cast<double>(kp - (r - 1) + i) * h;
            a[i] = std::exp(s);
            w[i] = h * std::exp(s);
        }
        const double e = grid_error(w, a, grid);
        if (e < best.sup_error) {
            best.sup_error = e;
            best.weights = w;
            best.exponents = a;
        }
    }
    return best;
}

double ExpSumScaling::approx_at(double x) const { return sum_at(weights, exponents, x); }

double ExpSumScaling::approx(std::span<const Index> idx) const
{
    double x = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) x += level_weights[i][idx[i]];
    return approx_at(x);
}

double ExpSumScaling::exact(std::span<const Index> idx) const
{
    double x = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) x += level_weights[i][idx[i]];
    return 1.0 / std::sqrt(x);
}

bool ExpSumScaling::covers(const std::vector<std::vector<Index>>& sets) const
{
    if (sets.size() != active.size()) return false;
    for (std::size_t i = 0; i < sets.size(); ++i)
        for (Index k : sets[i])
            if (!std::binary_search(active[i].begin(), active[i].end(), k)) return false;
    return true;
}

std::vector<std::vector<Index>> full_active_set(const std::vector<Index>& dims)
{
    std::vector<std::vector<Index>> out(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i)
        for (Index k = 0; k < dims[i]; ++k) out[i].push_back(k);
    return out;
}

ExpSumScaling build_scaling(const std::vector<Eigen::VectorXd>& level_weights, double tol,
                            const std::vector<std::vector<Index>>& active)
{
    if (!(tol > 0.0) || tol >= 1.0) throw InvalidArgument("scaling tolerance must lie in (0, 1)");
    tol = std::min(tol, 0.5);
    if (level_weights.size() != active.size() || active.empty())
        throw DimensionMismatch("need level weights and an active set per mode");

    ExpSumScaling out;
    out.level_weights = level_weights;
    out.tol = tol;
    out.active.resize(active.size());

    std::vector<std::vector<double>> vals(active.size());
    double c = 0.0;
    double xmax = 0.0;
    std::size_t combos = 1;
    for (std::size_t i = 0; i < active.size(); ++i) {
        std::vector<Index> a = active[i];
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
        if (a.empty()) throw InvalidArgument("empty active set for a mode");
        std::vector<double> v;
        for (Index k : a) {
            if (k < 0 || k >= level_weights[i].size()) throw InvalidArgument("active index out of range");
            const double q = level_weights[i][k];
            if (!(q >= 0.0)) throw InvalidArgument("level weights must be nonnegative");
            v.push_back(q);
        }
        out.active[i] = std::move(a);
        vals[i] = distinct(std::move(v));
        c += vals[i].front();
        xmax += vals[i].back();
        combos = combos > kExhaustiveLimit ? combos : combos * vals[i].size();
    }
    if (!(c > 0.0)) throw InvalidArgument("level weight sums must be positive");

    // Normalized arguments x / c >= 1 at which the relative error is checked.
    std::vector<double> xs;
    if (combos <= kExhaustiveLimit) {
        xs = {0.0};
        for (const auto& v : vals) {
            std::vector<double> next;
            next.reserve(xs.size() * v.size());
            for (double x : xs)
                for (double q : v) next.push_back(x + q);
            xs = distinct(std::move(next));
        }
        out.exhaustive = true;
    } else {
        const std::size_t d = vals.size();
        const std::size_t corners = d < 16 ? (std::size_t{1} << d) : 65536;
        for (std::size_t mask = 0; mask < corners; ++mask) {
            double x = 0.0;
            for (std::size_t i = 0; i < d; ++i) x += (i < 63 && ((mask >> i) & 1U)) ? vals[i].back() : vals[i].front();
            xs.push_back(x);
        }
        std::mt19937_64 rng(20240611);
        for (int s = 0; s < kRandomSamples; ++s) {
            double x = 0.0;
            for (const auto& v : vals) x += v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
            xs.push_back(x);
        }
        xs = distinct(std::move(xs));
    }
    for (double& x : xs) x /= c;
    const double xn = xmax / c;

    auto error_for = [&](Index m, Eigen::VectorXd& w, Eigen::VectorXd& t) {
        inverse_sqrt_nodes(m, tol, xn, w, t);
        return max_rel_error(w, t, xs);
    };

    Eigen::VectorXd w, t;
    Index hi = 1;
    double err = error_for(hi, w, t);
    while (err > tol) {
        if (hi >= kMaxTerms)
            throw ToleranceInfeasible("scaling tolerance " + std::to_string(tol) + " needs more than 4096 terms");
        hi = std::min<Index>(2 * hi, kMaxTerms);
        err = error_for(hi, w, t);
    }
    Index lo = hi / 2;
    Eigen::VectorXd bw = w, bt = t;
    double berr = err;
    while (hi - lo > 1) {
        const Index mid = (lo + hi) / 2;
        const double e = error_for(mid, w, t);
        if (e <= tol) {
            hi = mid;
            bw = w;
            bt = t;
            berr = e;
        } else {
            lo = mid;
        }
    }
    out.weights = bw / std::sqrt(c);
    out.exponents = bt / c;
    out.certified = berr;
    return out;
}

HTensor scaling_tensor(const ExpSumScaling& s, std::shared_ptr<const DimensionTree> tree)
{
    const int d = tree->order();
    if (static_cast<int>(s.level_weights.size()) != d) throw DimensionMismatch("scaling order does not match tree");
    const Index m = s.m();
    std::vector<Index> dims;
    for (const auto& q : s.level_weights) dims.push_back(q.size());
    std::vector<Eigen::MatrixXd> comps(static_cast<std::size_t>(tree->num_nodes()));
    for (int id = 0; id < tree->num_nodes(); ++id) {
        if (tree->is_leaf(id)) {
            const int mode = tree->mode_of_leaf(id);
            const auto& q = s.level_weights[static_cast<std::size_t>(mode)];
            Eigen::MatrixXd u = Eigen::MatrixXd::Zero(q.size(), m);
            for (Index k : s.active[static_cast<std::size_t>(mode)])
                for (Index j = 0; j < m; ++j) u(k, j) = std::exp(-s.exponents[j] * q[k]);
            comps[static_cast<std::size_t>(id)] = std::move(u);
        } else if (id == DimensionTree::root()) {
            Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m * m, 1);
            for (Index j = 0; j < m; ++j) b(j * m + j, 0) = s.weights[j];
            comps[static_cast<std::size_t>(id)] = std::move(b);
        } else {
            Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m * m, m);
            for (Index j = 0; j < m; ++j) b(j * m + j, j) = 1.0;
            comps[static_cast<std::size_t>(id)] = std::move(b);
        }
    }
    return HTensor(std::move(tree), std::move(dims), std::move(comps), false);
}

HTensor apply_scaling(const ExpSumScaling& s, const HTensor& v)
{
    if (static_cast<int>(s.level_weights.size()) != v.order()) throw DimensionMismatch("scaling order mismatch");
    for (int i = 0; i < v.order(); ++i)
        if (s.level_weights[static_cast<std::size_t>(i)].size() != v.dims()[static_cast<std::size_t>(i)])
            throw DimensionMismatch("scaling dims mismatch");
    if (!s.covers(v.support())) throw CertificateViolation("tensor support leaves the certified scaling set");

    HTensor out(v.shared_tree(), v.dims());
    for (Index j = 0; j < s.m(); ++j) {
        std::vector<std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>> maps;
        for (int i = 0; i < v.order(); ++i) {
            const Eigen::VectorXd e = (-s.exponents[j] * s.level_weights[static_cast<std::size_t>(i)].array()).exp().matrix();
            maps.emplace_back([e](const Eigen::MatrixXd& u) -> Eigen::MatrixXd { return e.asDiagonal() * u; });
        }
        const HTensor term = apply_mode_maps(v, maps, v.dims(), s.weights[j]);
        out = j == 0 ? term : add(out, term);
    }
    return out;
}

} // namespace htsolve
