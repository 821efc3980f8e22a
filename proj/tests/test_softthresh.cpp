#include "htsolve/errors.hpp"
#include "htsolve/problems.hpp"
#include "htsolve/softthresh.hpp"

#include "test_util.hpp"

#include <doctest.h>

using namespace htsolve;
using namespace testutil;

namespace {

HTensor diag_matrix(const Eigen::VectorXd& s)
{
    const Index n = s.size();
    DenseTensor x({n, n});
    for (Index i = 0; i < n; ++i) x.data[i * n + i] = s[i];
    return from_dense(x, balanced(2));
}

Eigen::MatrixXd as_matrix(const HTensor& h)
{
    const DenseTensor x = to_dense(h);
    return x.data.reshaped<Eigen::RowMajor>(x.dims[0], x.dims[1]);
}

} // namespace

TEST_CASE("scalar soft thresholding")
{
    CHECK(soft_scalar(3.0, 1.0) == 2.0);
    CHECK(soft_scalar(-0.5, 1.0) == 0.0);
    CHECK(soft_scalar(-3.0, 1.0) == -2.0);
    CHECK_THROWS_AS(soft_scalar(1.0, -1.0), InvalidArgument);
}

TEST_CASE("edge shrinkage on a d=2 example")
{
    const HTensor h = diag_matrix(Eigen::Vector3d(3, 2, 1));
    const HTensor s = soft_threshold_edge(h, 0, 1.5);
    const EdgeSpectrum sp = edge_spectra(s);
    REQUIRE(sp.sigma[0].size() == 2);
    CHECK(sp.sigma[0][0] == doctest::Approx(1.5));
    CHECK(sp.sigma[0][1] == doctest::Approx(0.5));
    CHECK(s.ranks() == RankVector{2});
    CHECK(dense_dist(soft_threshold_edge(h, 0, 0.0), h) <= 1e-12);
    CHECK(norm(soft_threshold_edge(h, 0, 3.0)) == 0.0);
}

TEST_CASE("d=2 soft thresholding matches dense singular value shrinkage")
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const HTensor h = random_low_rank(balanced(2), {5, 6}, 4, rng);
        const Eigen::MatrixXd m = as_matrix(h);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const double eta = 0.3 * svd.singularValues()[0];
        Eigen::VectorXd s = svd.singularValues();
        for (Index k = 0; k < s.size(); ++k) s[k] = soft_scalar(s[k], eta);
        const Eigen::MatrixXd ref = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
        CHECK((as_matrix(soft_threshold(h, eta)) - ref).norm() <= 1e-10 * m.norm());
    }
}

TEST_CASE("per-edge singular values are shrunk exactly")
{
    std::mt19937_64 rng(32);
    for (const auto& tree : {balanced(3), linear(4)}) {
        std::vector<Index> dims(static_cast<std::size_t>(tree->order()), 3);
        const HTensor h = random_low_rank(tree, dims, 3, rng);
        const EdgeSpectrum in = edge_spectra(h);
        for (std::size_t e = 0; e < in.num_edges(); ++e) {
            const double eta = 0.25 * in.sigma[e][0];
            const EdgeSpectrum out = edge_spectra(soft_threshold_edge(h, e, eta));
            for (Index k = 0; k < in.sigma[e].size(); ++k) {
                const double want = soft_scalar(in.sigma[e][k], eta);
                const double got = k < out.sigma[e].size() ? out.sigma[e][k] : 0.0;
                CHECK(std::abs(got - want) <= 1e-10 * in.sigma[e][0]);
            }
        }
    }
}

TEST_CASE("soft thresholding is non-expansive on random pairs")
{
    std::mt19937_64 rng(33);
    int violations = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 2 + trial % 3;
        std::vector<Index> dims(static_cast<std::size_t>(d), 3);
        const HTensor a = random_low_rank(balanced(d), dims, 2, rng);
        const HTensor b = add(a, scale(random_low_rank(balanced(d), dims, 2, rng), 0.3));
        const double eta = 0.2 * (trial % 5) * norm(a) / 4.0;
        const double lhs = dense_dist(soft_threshold(a, eta), soft_threshold(b, eta));
        if (lhs > dense_dist(a, b) + 1e-10 * (norm(a) + norm(b))) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("st_solve on the identity returns f")
{
    std::mt19937_64 rng(34);
    const HTensor f = random_low_rank(balanced(3), {3, 3, 3}, 2, rng);
    const LowRankOperator id = LowRankOperator::identity(f.dims());
    StSolveOptions opt;
    opt.omega = 1.0;
    opt.xi = 0.0;
    opt.bbar = 1.0 + 1e-6;
    opt.eps = 1e-8;
    const StSolveResult r = st_solve(id, f, opt);
    CHECK(dense_dist(r.u, f) <= 1e-8);
    CHECK(r.error_bound <= 1e-8);
}

TEST_CASE("st_solve on a d=2 Kronecker sum")
{
    const Problem p = build_fd_laplace(2, 8);
    const auto& b = p.op.bounds();
    StSolveOptions opt;
    opt.omega = 2.0 / (b.upper + b.lower);
    opt.xi = (b.upper - b.lower) / (b.upper + b.lower);
    opt.bbar = b.upper * (1.0 + 1e-6);
    opt.eps = 1e-6;
    const StSolveResult r = st_solve(p.op, p.rhs, opt);
    CHECK(r.error_bound <= 1e-6);
    const DenseTensor u = dense_solve(p);
    CHECK((to_dense(r.u).data - u.data).norm() <= 1e-6);
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
        CHECK(r.trace[i].alpha <= r.trace[i - 1].alpha);
        const bool kept = r.trace[i].alpha == r.trace[i - 1].alpha;
        const bool halved = r.trace[i].alpha == 0.5 * r.trace[i - 1].alpha;
        CHECK((kept || halved));
    }
}

TEST_CASE("st_solve rejects bad options")
{
    const Problem p = build_fd_laplace(2, 4);
    StSolveOptions opt;
    opt.omega = 0.01;
    opt.xi = 1.2;
    opt.bbar = 1000;
    CHECK_THROWS_AS(st_solve(p.op, p.rhs, opt), InvalidArgument);
    opt.xi = 0.5;
    opt.omega = -1;
    CHECK_THROWS_AS(st_solve(p.op, p.rhs, opt), InvalidArgument);
}

TEST_CASE("st_solve reports a non-contractive step size")
{
    const Problem p = build_fd_laplace(2, 4);
    StSolveOptions opt;
    opt.omega = 3.0 / p.op.bounds().upper; // outside (0, 2/upper)
    opt.xi = 0.5;
    opt.bbar = p.op.bounds().upper * 1.01;
    opt.eps = 1e-8;
    opt.max_iter = 2000;
    CHECK_THROWS_AS(st_solve(p.op, p.rhs, opt), ContractionViolation);
}
