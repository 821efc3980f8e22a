// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "htsolve/apply.hpp"
#include "htsolve/expsum.hpp"
#include "htsolve/hsvd.hpp"
#include "htsolve/problems.hpp"
#include "htsolve/softthresh.hpp"
#include "htsolve/solver.hpp"

#include "test_util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#ifndef HTSOLVE_FIXTURE_DIR
#define HTSOLVE_FIXTURE_DIR "fixtures"
#endif

using namespace htsolve;
using namespace testutil;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fixture(const std::string& name) { return std::string(HTSOLVE_FIXTURE_DIR) + "/" + name; }

template <class... Args>
std::string fmt(const char* f, Args... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------- criterion 1

// Mode-k product of a 3-way tensor with M^T (M is n_k x r).
DenseTensor project_mode(const DenseTensor& x, int mode, const Eigen::MatrixXd& m)
{
    std::vector<Index> dims = x.dims;
    dims[static_cast<std::size_t>(mode)] = m.cols();
    DenseTensor out(dims);
    for (Index f = 0; f < x.size(); ++f) {
        auto idx = x.multi_index(f);
        const Index i = idx[static_cast<std::size_t>(mode)];
        for (Index k = 0; k < m.cols(); ++k) {
            idx[static_cast<std::size_t>(mode)] = k;
            out(idx) += m(i, k) * x.data[f];
        }
    }
    return out;
}

Eigen::MatrixXd leading_left(const Eigen::MatrixXd& a, Index r)
{
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
    return svd.matrixU().leftCols(r);
}

// Alternating optimization for the best Tucker approximation with ranks r; returns the error.
double hooi(const DenseTensor& x, const std::array<Index, 3>& r, std::vector<Eigen::MatrixXd> u)
{
    double prev = 1e300, err = 0.0;
    for (int it = 0; it < 500; ++it) {
        for (int k = 0; k < 3; ++k) {
            DenseTensor y = x;
            for (int j = 0; j < 3; ++j)
                if (j != k) y = project_mode(y, j, u[static_cast<std::size_t>(j)]);
            const std::vector<int> rows{k};
            u[static_cast<std::size_t>(k)] = leading_left(matricize(y, rows), r[static_cast<std::size_t>(k)]);
        }
        DenseTensor core = x;
        for (int j = 0; j < 3; ++j) core = project_mode(core, j, u[static_cast<std::size_t>(j)]);
        err = std::sqrt(std::max(0.0, x.data.squaredNorm() - core.data.squaredNorm()));
        if (prev - err <= 1e-14 * x.norm()) break;
        prev = err;
    }
    return err;
}

double best_tucker_error(const DenseTensor& x, const std::array<Index, 3>& r, std::mt19937_64& rng)
{
    std::vector<Eigen::MatrixXd> init;
    for (int k = 0; k < 3; ++k) {
        const std::vector<int> rows{k};
        init.push_back(leading_left(matricize(x, rows), r[static_cast<std::size_t>(k)]));
    }
    double best = hooi(x, r, init);
    for (int restart = 0; restart < 3; ++restart) {
        for (int k = 0; k < 3; ++k) {
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_dense({x.dims[static_cast<std::size_t>(k)], r[static_cast<std::size_t>(k)]}, rng)
                                                         .data.reshaped(x.dims[static_cast<std::size_t>(k)], r[static_cast<std::size_t>(k)]));
            init[static_cast<std::size_t>(k)] = Eigen::MatrixXd(qr.householderQ()).leftCols(r[static_cast<std::size_t>(k)]);
        }
        best = std::min(best, hooi(x, r, init));
    }
    return best;
}

Outcome criterion1()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    auto tree = balanced(3);
    const double factor = std::sqrt(2.0 * 3 - 3);
    int fails = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Index> dims;
        for (int i = 0; i < 3; ++i) dims.push_back(4 + static_cast<Index>(rng() % 3));
        const DenseTensor x = random_dense(dims, rng);
        const HTensor h = from_dense(x, tree);
        std::array<Index, 3> tr{};
        for (;;) {
            for (int i = 0; i < 3; ++i) tr[static_cast<std::size_t>(i)] = 1 + static_cast<Index>(rng() % static_cast<unsigned>(dims[static_cast<std::size_t>(i)] - 1));
            if (tr[0] <= tr[1] * tr[2] && tr[1] <= tr[0] * tr[2] && tr[2] <= tr[0] * tr[1]) break;
        }
        // mode i is constrained by the edge its leaf belongs to
        RankVector r(tree->edges().size());
        for (int i = 0; i < 3; ++i) r[static_cast<std::size_t>(tree->edge_of_node(tree->leaf_of_mode(i)))] = tr[static_cast<std::size_t>(i)];
        const double err = (to_dense(truncate_to_ranks(h, r)).data - x.data).norm();
        const double best = best_tucker_error(x, tr, rng);
        const double ratio = err / best;
        worst = std::max(worst, ratio);
        if (err > factor * best * 1.001) ++fails;
    }
    const double secs = seconds_since(t0);
    return {fails == 0 && secs < 60.0, fmt("100 instances, %d violations, worst err/best %.4f (bound %.4f), %.1fs", fails, worst, factor * 1.001, secs)};
}

// ---------------------------------------------------------------- criterion 2

Outcome criterion2()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(102);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    int fails = 0;
    double worst_eta = 0.0, worst_tail = -1.0;
    for (int trial = 0; trial < 500; ++trial) {
        const int d = 2 + trial % 4;
        std::vector<Index> dims;
        for (int i = 0; i < d; ++i) dims.push_back(2 + static_cast<Index>(rng() % 4));
        auto tree = trial % 2 ? linear(d) : balanced(d);
        HTensor h = random_decaying(tree, dims, 2 + static_cast<int>(rng() % 6), 0.2 + 0.7 * u01(rng), rng);
        h = scale(h, 1.0 / norm(h));
        const double eta = u01(rng) * 1.05;
        TruncationReport rep;
        const HTensor t = recompress(h, eta, &rep);
        const double err = dense_dist(h, t);
        worst_eta = std::max(worst_eta, err - eta);
        worst_tail = std::max(worst_tail, err - rep.tail);
        if (err > eta || err > rep.tail + 1e-12) ++fails;
    }
    const double secs = seconds_since(t0);
    return {fails == 0 && secs < 60.0,
            fmt("500 pairs, %d violations, max(err-eta) %.2e, max(err-tail) %.2e, %.1fs", fails, worst_eta, worst_tail, secs)};
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion3()
{
    std::mt19937_64 rng(103);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 2 + trial % 3;
        std::vector<Index> dims;
        for (int i = 0; i < d; ++i) dims.push_back(2 + static_cast<Index>(rng() % 4));
        const HTensor h = random_low_rank(trial % 2 ? linear(d) : balanced(d), dims, 1 + static_cast<int>(rng() % 4), rng);
        const ContractionSet c = contractions(h);
        const auto ref = dense_contractions(to_dense(h));
        for (int i = 0; i < d; ++i) {
            const auto& a = c.pi[static_cast<std::size_t>(i)];
            const auto& b = ref[static_cast<std::size_t>(i)];
            worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / b.maxCoeff());
        }
    }
    return {worst <= 1e-10, fmt("100 instances d in {2,3,4}, max relative deviation %.2e", worst)};
}

// ---------------------------------------------------------------- criterion 4

// Smallest error of a product-set restriction with total cardinality <= n, by enumeration.
double best_product_error(const Eigen::MatrixXd& m, Index n)
{
    const Index r = m.rows(), c = m.cols();
    double best = m.norm();
    const Eigen::MatrixXd sq = m.cwiseAbs2();
    for (unsigned a = 0; a < (1u << r); ++a) {
        const Index na = std::popcount(a);
        if (na > n) continue;
        for (unsigned b = 0; b < (1u << c); ++b) {
            const Index nb = std::popcount(b);
            if (na + nb > n) continue;
            double kept = 0.0;
            for (Index i = 0; i < r; ++i)
                if (a >> i & 1u)
                    for (Index j = 0; j < c; ++j)
                        if (b >> j & 1u) kept += sq(i, j);
            best = std::min(best, std::sqrt(std::max(0.0, sq.sum() - kept)));
        }
    }
    return best;
}

Outcome criterion4()
{
    std::mt19937_64 rng(104);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    int fails = 0;
    double worst_sn = 0.0, worst_ratio = 0.0, worst_excess = -1.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::vector<Index> dims{2 + static_cast<Index>(rng() % 5), 2 + static_cast<Index>(rng() % 5)};
        HTensor h = random_decaying(balanced(2), dims, 1 + static_cast<int>(rng() % 3), 0.5, rng);
        // rows of different magnitude make the choice nontrivial
        std::vector<Eigen::VectorXd> w;
        for (Index n : dims) {
            Eigen::VectorXd v(n);
            for (Index k = 0; k < n; ++k) v[k] = std::pow(u01(rng), 3);
            w.push_back(v);
        }
        h = hadamard(h, HTensor::rank_one(h.shared_tree(), w));
        h = scale(h, 1.0 / norm(h));
        const double eta = u01(rng);
        CoarsenSelection sel;
        const HTensor c = coarsen(h, eta, &sel);
        const DenseTensor x = to_dense(h);
        const double err = (to_dense(c).data - x.data).norm();

        // independent s_N from dense contractions
        const auto pi = dense_contractions(x);
        std::vector<double> all;
        for (const auto& p : pi) all.insert(all.end(), p.data(), p.data() + p.size());
        std::sort(all.begin(), all.end(), std::greater<>());
        double sn = 0.0;
        for (std::size_t k = static_cast<std::size_t>(sel.kept); k < all.size(); ++k) sn += all[k] * all[k];
        sn = std::sqrt(sn);

        const Eigen::MatrixXd m = x.data.reshaped<Eigen::RowMajor>(dims[0], dims[1]);
        const double best = best_product_error(m, sel.kept);
        worst_sn = std::max(worst_sn, std::abs(sel.discarded - sn));
        worst_excess = std::max(worst_excess, err - sn);
        if (best > 0.0) worst_ratio = std::max(worst_ratio, err / best);
        const bool ok = std::abs(sel.discarded - sn) <= 1e-12 && err <= sn + 1e-12 && err <= eta + 1e-12 &&
                        err <= std::sqrt(2.0) * best + 1e-12;
        if (!ok) ++fails;
    }
    return {fails == 0, fmt("200 instances d=2 dims<=6, %d violations, max|s_N report - oracle| %.2e, max(err - s_N) %.2e, "
                            "worst err/best %.3f (bound %.3f)",
                            fails, worst_sn, worst_excess, worst_ratio, std::sqrt(2.0))};
}

// ---------------------------------------------------------------- criterion 5

Outcome criterion5()
{
    std::mt19937_64 rng(105);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    int fails = 0, checks = 0;
    double worst = -1e300;
    for (int trial = 0; trial < 500; ++trial) {
        const int d = 2 + trial % 3;
        std::vector<Index> dims;
        for (int i = 0; i < d; ++i) dims.push_back(2 + static_cast<Index>(rng() % 3));
        auto tree = trial % 2 ? linear(d) : balanced(d);
        const HTensor a = random_low_rank(tree, dims, 1 + static_cast<int>(rng() % 3), rng);
        const HTensor b = trial % 3 == 0 ? random_low_rank(tree, dims, 2, rng)
                                         : add(a, scale(random_low_rank(tree, dims, 2, rng), 0.5 * u01(rng)));
        const double na = norm(a), nb = norm(b), dab = dense_dist(a, b);
        for (double g : {0.0, 0.01, 0.05, 0.1, 0.3, 0.7, 1.5}) {
            const double eta = g * std::max(na, nb);
            const double lhs = dense_dist(soft_threshold(a, eta), soft_threshold(b, eta));
            const double excess = lhs - dab;
            worst = std::max(worst, excess / (na + nb));
            ++checks;
            if (excess > 1e-10 * (na + nb)) ++fails;
        }
    }
    return {fails == 0, fmt("500 pairs x 7 thresholds (%d checks), %d violations, max excess/(|a|+|b|) %.2e", checks, fails, worst)};
}

// ---------------------------------------------------------------- criterion 6

Outcome criterion6()
{
    std::vector<double> x, y;
    std::string errs;
    bool monotone = true;
    double prev = 1e300;
    for (int r : {4, 16, 64}) {
        const ExpSumInverse s = bh_exponential_sum(r);
        // independent grid evaluation
        double sup = 0.0;
        const int n = 4001;
        for (int k = 0; k < n; ++k) {
            const double t = std::pow(10.0, 8.0 * k / (n - 1));
            double v = 0.0;
            for (Index j = 0; j < s.weights.size(); ++j) v += s.weights[j] * std::exp(-s.exponents[j] * t);
            sup = std::max(sup, std::abs(1.0 / t - v));
        }
        monotone = monotone && sup < prev;
        prev = sup;
        x.push_back(std::sqrt(static_cast<double>(r)));
        y.push_back(std::log(sup));
        errs += fmt(" r=%d:%.3e", r, sup);
    }
    const double sl = slope(x, y);
    return {monotone && sl <= -2.5, fmt("sup errors%s, monotone %s, slope of log(err) vs sqrt(r) %.3f (need <= -2.5)", errs.c_str(),
                                        monotone ? "yes" : "no", sl)};
}

// ---------------------------------------------------------------- criterion 7

Outcome criterion7()
{
    bool ok = true;
    std::string detail;
    Index m3 = 0;
    for (int L : {3, 4, 5}) {
        const Problem p = load_problem_file(fixture("diffusion_multilevel_d2_L" + std::to_string(L) + ".ini"));
        const auto& q = p.op.scaling().values;
        const ExpSumScaling s = build_scaling(q, 0.5, full_active_set(p.op.dims()));
        const Index rows = checked_size(p.op.dims());
        double worst = 0.0;
        for (Index f = 0; f < rows; ++f) {
            const Index i = f / p.op.dims()[1], j = f % p.op.dims()[1];
            const double w = 1.0 / std::sqrt(q[0][i] + q[1][j]);
            double a = 0.0;
            for (Index k = 0; k < s.m(); ++k) a += s.weights[k] * std::exp(-s.exponents[k] * q[0][i]) * std::exp(-s.exponents[k] * q[1][j]);
            worst = std::max(worst, std::abs(w - a) / w);
        }
        if (L == 3) m3 = s.m();
        const bool linear_ok = static_cast<double>(s.m()) <= static_cast<double>(m3) * L / 3.0;
        ok = ok && worst <= 0.5 && rows <= 100000 && linear_ok;
        detail += fmt(" L=%d: m=%ld, rows=%ld, max rel err %.3f;", L, static_cast<long>(s.m()), static_cast<long>(rows), worst);
    }
    return {ok, "exhaustive over all rows," + detail + " growth check m(L) <= m(3) L/3"};
}

// ---------------------------------------------------------------- criterion 8

Outcome criterion8()
{
    std::mt19937_64 rng(108);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    int fails = 0, total = 0, files = 0;
    std::vector<std::string> names;
    for (const auto& e : std::filesystem::directory_iterator(HTSOLVE_FIXTURE_DIR))
        if (e.path().extension() == ".ini") names.push_back(e.path().string());
    std::sort(names.begin(), names.end());
    for (const auto& name : names) {
        const Problem p = load_problem_file(name);
        ++files;
        const DenseTensor u = dense_solve(p);
        const Eigen::VectorXd f = dense_rhs(p).data;
        const double lo = p.op.bounds().lower, hi = p.op.bounds().upper;
        for (int k = 0; k < 50; ++k) {
            const Eigen::VectorXd dir = random_vector(u.size(), rng).normalized();
            const Eigen::VectorXd w = u.data + std::pow(10.0, -4.0 * u01(rng)) * u.norm() * dir;
            const double err = (u.data - w).norm();
            const double res = (f - p.op.apply_flat(w)).norm();
            ++total;
            // floating point slack for evaluating the residual
            const double slack = 1e-9 * hi * err;
            if (lo * err > res + slack || res > hi * err + slack) ++fails;
        }
    }
    return {fails == 0 && files > 0, fmt("%d fixtures x 50 perturbations, %d violations", files, fails)};
}

// ---------------------------------------------------------------- criterion 9

Outcome criterion9()
{
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail;
    for (const char* name : {"diffusion_eigen_d3.ini", "parametric_d3.ini"}) {
        const Problem p = load_problem_file(fixture(name));
        const DenseTensor u = dense_solve(p);
        for (double eps : {1e-2, 1e-3, 1e-4}) {
            const SolveConfig c = default_config(p.op, p.rhs, p.order(), eps);
            const SolveResult r = solve(p.op, p.rhs, c);
            const double err = (to_dense(r.u).data - u.data).norm();
            const int expect = static_cast<int>(std::ceil(std::log2(c.eps0 / eps)));
            const bool good = err <= eps && r.report.certificate_upper >= err && r.report.error_bound >= err && r.report.outer_steps == expect;
            ok = ok && good;
            detail += fmt(" [%s eps=%.0e err=%.2e cert=%.2e outer=%d/%d]", p.name.c_str(), eps, err, r.report.certificate_upper,
                          r.report.outer_steps, expect);
        }
    }
    const double secs = seconds_since(t0);
    return {ok && secs < 300.0, detail + fmt(" %.1fs", secs)};
}

// ---------------------------------------------------------------- criterion 10

Index numerical_rank(const Eigen::VectorXd& s, double tol)
{
    Index r = s.size();
    while (r > 0 && s.tail(s.size() - r + 1).norm() <= tol) --r;
    return r;
}

Outcome criterion10()
{
    bool ok = true;
    std::string detail;
    for (int d : {2, 3, 4}) {
        const Problem p = load_problem_file(fixture("parametric_d" + std::to_string(d) + ".ini"));
        const DenseTensor u = dense_solve(p);
        const Eigen::VectorXd s = spatial_parametric_singular_values(p, u);
        const Index bound = 2 * d - 1;
        double worst = 0.0;
        for (Index k = bound; k < s.size(); ++k) worst = std::max(worst, s[k] / s[0]);
        const SolveResult r = solve(p.op, p.rhs, default_config(p.op, p.rhs, p.order(), 1e-6));
        const Eigen::VectorXd su = spatial_parametric_singular_values(p, to_dense(r.u));
        const Index rank = numerical_rank(su, 1e-6);
        ok = ok && worst <= 1e-8 && rank <= bound;
        detail += fmt(" [d=%d: max sigma_k/sigma_1 for k>%ld = %.1e, rank of u_eps at 1e-6 = %ld]", d, static_cast<long>(bound), worst,
                      static_cast<long>(rank));
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- criterion 11

Outcome criterion11()
{
    bool ok = true;
    std::string detail;
    for (const char* name : {"diffusion_eigen_d3.ini", "parametric_d3.ini"}) {
        const Problem p = load_problem_file(fixture(name));
        std::vector<double> lx, lr, sx, sy;
        std::vector<Index> ranks;
        std::ostringstream table;
        table << "    eps    |ln eps|  max_rank  support\n";
        for (int e = 1; e <= 5; ++e) {
            const double eps = std::pow(10.0, -e);
            const SolveResult r = solve(p.op, p.rhs, default_config(p.op, p.rhs, p.order(), eps));
            const Index mr = r.u.max_rank(), sup = r.u.support_size();
            ranks.push_back(mr);
            table << fmt("    %.0e  %7.3f  %8ld  %7ld\n", eps, -std::log(eps), static_cast<long>(mr), static_cast<long>(sup));
            if (mr > 0) {
                lx.push_back(std::log(-std::log(eps)));
                lr.push_back(std::log(static_cast<double>(mr)));
            }
            if (sup > 0) {
                sx.push_back(std::log(1.0 / eps));
                sy.push_back(std::log(static_cast<double>(sup)));
            }
        }
        bool mono = ranks.size() == 5;
        for (std::size_t i = 1; i < ranks.size(); ++i) mono = mono && ranks[i] >= ranks[i - 1];
        ok = ok && mono && lx.size() >= 2 && sx.size() >= 2;
        detail += fmt(" [%s: ranks monotone %s, rank ~ |ln eps|^%.3f, support ~ eps^-%.3f]", p.name.c_str(), mono ? "yes" : "no",
                      lx.size() >= 2 ? slope(lx, lr) : 0.0, sx.size() >= 2 ? slope(sx, sy) : 0.0);
        std::printf("  bench table for %s\n%s", p.name.c_str(), table.str().c_str());
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- criterion 12

Eigen::MatrixXd shrink(const Eigen::MatrixXd& m, double alpha)
{
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::VectorXd s = svd.singularValues();
    for (Index k = 0; k < s.size(); ++k) s[k] = std::max(0.0, s[k] - alpha);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

Outcome criterion12()
{
    const Problem p = load_problem_file(fixture("fd_laplace_d2.ini"));
    const auto& b = p.op.bounds();
    StSolveOptions opt;
    opt.omega = 2.0 / (b.upper + b.lower);
    opt.xi = (b.upper - b.lower) / (b.upper + b.lower);
    opt.bbar = b.upper * (1.0 + 1e-6);
    opt.eps = 1e-6;
    const StSolveResult r = st_solve(p.op, p.rhs, opt);

    const Index n = p.op.dims()[0];
    const Eigen::MatrixXd A = p.op.assemble_dense();
    const DenseTensor ud = dense_solve(p);
    const Eigen::VectorXd f = dense_rhs(p).data;
    const double err = (to_dense(r.u).data - ud.data).norm();

    bool alpha_ok = true;
    for (std::size_t i = 1; i < r.trace.size(); ++i) alpha_ok = alpha_ok && r.trace[i].alpha <= r.trace[i - 1].alpha;
    const double alpha = r.trace.back().alpha;

    // dense fixed point of S_alpha(u - omega (A u - f)); for d = 2 S_alpha is matrix singular value shrinkage
    auto as_mat = [n](const Eigen::VectorXd& v) { return Eigen::MatrixXd(v.reshaped<Eigen::RowMajor>(n, n)); };
    auto as_vec = [](const Eigen::MatrixXd& m) { return Eigen::VectorXd(m.reshaped<Eigen::RowMajor>()); };
    Eigen::VectorXd ua = to_dense(r.u).data;
    for (int it = 0; it < 100000; ++it) {
        const Eigen::VectorXd next = as_vec(shrink(as_mat(ua - opt.omega * (A * ua - f)), alpha));
        const double step = (next - ua).norm();
        ua = next;
        if (step <= 1e-15 * ua.norm()) break;
    }
    const double gap = (as_vec(shrink(as_mat(ud.data), alpha)) - ud.data).norm();
    const double fp_err = (ua - ud.data).norm();
    const double lower = gap / (1.0 + opt.xi), upper = gap / (1.0 - opt.xi);
    const double slack = 1e-12 * ud.norm();
    const bool sandwich = lower <= fp_err + slack && fp_err <= upper + slack;
    const double iterate_to_fp = (to_dense(r.u).data - ua).norm();
    const bool ok = r.error_bound <= 1e-6 && err <= 1e-6 && alpha_ok && sandwich;
    return {ok, fmt("%zu steps, certified %.2e, dense err %.2e, alpha nonincreasing %s, final alpha %.2e: "
                    "%.2e <= |u_alpha - u| = %.2e <= %.2e, |u_n - u_alpha| = %.2e",
                    r.trace.size(), r.error_bound, err, alpha_ok ? "yes" : "no", alpha, lower, fp_err, upper, iterate_to_fp)};
}

} // namespace

int main()
{
    const std::vector<std::function<Outcome()>> checks{criterion1, criterion2, criterion3, criterion4,  criterion5,  criterion6,
                                                       criterion7, criterion8, criterion9, criterion10, criterion11, criterion12};
    int failed = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        Outcome o;
        try {
            o = checks[i]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %zu: %s - %s\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(checks.size()) - failed, checks.size());
    return failed == 0 ? 0 : 1;
}
