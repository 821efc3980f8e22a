#include "htsolve/errors.hpp"
#include "htsolve/hsvd.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace htsolve;
using namespace testutil;

namespace {

// d = 2 tensor with prescribed singular values and random singular vectors
HTensor matrix_with_sigma(const Eigen::VectorXd& s, std::mt19937_64& rng)
{
    const Index n = s.size();
    DenseTensor x({n, n});
    Eigen::HouseholderQR<Eigen::MatrixXd> q1(random_dense({n, n}, rng).data.reshaped(n, n));
    Eigen::HouseholderQR<Eigen::MatrixXd> q2(random_dense({n, n}, rng).data.reshaped(n, n));
    const Eigen::MatrixXd u = q1.householderQ(), v = q2.householderQ();
    const Eigen::MatrixXd m = u * s.asDiagonal() * v.transpose();
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) x.data[i * n + j] = m(i, j);
    return from_dense(x, balanced(2));
}

} // namespace

TEST_CASE("from_dense round trip and exact ranks")
{
    std::mt19937_64 rng(11);
    const DenseTensor x = random_dense({4, 4, 4}, rng);
    for (const auto& tree : {balanced(3), linear(3)}) {
        const HTensor h = from_dense(x, tree);
        CHECK(h.orthogonal());
        CHECK_NOTHROW(h.check_invariants());
        CHECK((to_dense(h).data - x.data).norm() <= 1e-12 * x.norm());
    }
    std::vector<Eigen::VectorXd> f{random_vector(3, rng), random_vector(4, rng), random_vector(5, rng)};
    const HTensor r1 = from_dense(outer_product(f), balanced(3));
    for (Index r : r1.ranks()) CHECK(r == 1);
    const HTensor z = from_dense(DenseTensor({3, 3, 3}), balanced(3), 0.5);
    for (Index r : z.ranks()) CHECK(r == 0);
    CHECK_THROWS_AS(from_dense(x, balanced(4)), DimensionMismatch);
}

TEST_CASE("from_dense honours the tolerance")
{
    std::mt19937_64 rng(12);
    const DenseTensor x = random_dense({5, 4, 3, 4}, rng);
    for (double tol : {0.1, 1.0, 3.0}) CHECK((to_dense(from_dense(x, balanced(4), tol)).data - x.data).norm() <= tol);
}

TEST_CASE("orthogonalize is an isometric change of representation")
{
    std::mt19937_64 rng(13);
    const HTensor h = random_low_rank(balanced(4), {3, 4, 3, 2}, 3, rng);
    const HTensor o = orthogonalize(h);
    CHECK(o.orthogonal());
    CHECK(norm(o) == doctest::Approx(norm(h)).epsilon(1e-12));
    CHECK(dense_dist(o, h) <= 1e-12 * norm(h));
    for (int m = 0; m < 4; ++m) {
        const Eigen::MatrixXd& u = o.frame(m);
        CHECK((u.transpose() * u - Eigen::MatrixXd::Identity(u.cols(), u.cols())).norm() <= 1e-12);
    }
    CHECK_NOTHROW(o.check_invariants());
    CHECK(dense_dist(orthogonalize(o), o) <= 1e-12 * norm(h));
}

TEST_CASE("edge spectra match dense matricization SVDs")
{
    std::mt19937_64 rng(14);
    for (const auto& tree : {balanced(3), linear(4), balanced(4)}) {
        std::vector<Index> dims(static_cast<std::size_t>(tree->order()), 4);
        const HTensor h = random_low_rank(tree, dims, 5, rng);
        const DenseTensor x = to_dense(h);
        const EdgeSpectrum s = edge_spectra(h);
        REQUIRE(s.num_edges() == tree->edges().size());
        for (std::size_t e = 0; e < s.num_edges(); ++e) {
            const Eigen::VectorXd ref = dense_edge_sigma(x, *tree, e);
            CHECK(s.sigma[e].norm() == doctest::Approx(norm(h)).epsilon(1e-10));
            for (Index k = 0; k < ref.size(); ++k) {
                const double got = k < s.sigma[e].size() ? s.sigma[e][k] : 0.0;
                CHECK(std::abs(got - ref[k]) <= 1e-10 * ref[0]);
            }
        }
    }
    const Eigen::Vector3d diag(3, 2, 1);
    std::mt19937_64 r2(1);
    const EdgeSpectrum d2 = edge_spectra(matrix_with_sigma(diag, r2));
    CHECK(d2.sigma[0][0] == doctest::Approx(3.0));
    CHECK(d2.sigma[0][2] == doctest::Approx(1.0));
    std::vector<Eigen::VectorXd> f{random_vector(3, rng), random_vector(3, rng), random_vector(3, rng)};
    const HTensor one = HTensor::rank_one(balanced(3), f);
    for (const auto& sg : edge_spectra(one).sigma) {
        REQUIRE(sg.size() == 1);
        CHECK(sg[0] == doctest::Approx(norm(one)));
    }
}

TEST_CASE("recompress examples")
{
    std::mt19937_64 rng(15);
    const HTensor h = matrix_with_sigma(Eigen::Vector3d(1.0, 0.5, 0.1), rng);
    TruncationReport rep;
    const HTensor t = recompress(h, 0.12, &rep);
    CHECK(t.ranks() == RankVector{2});
    CHECK(dense_dist(h, t) == doctest::Approx(0.1).epsilon(1e-10));
    CHECK(rep.tail == doctest::Approx(0.1).epsilon(1e-10));

    const HTensor z = recompress(h, norm(h));
    for (Index r : z.ranks()) CHECK(r == 0);

    std::vector<Eigen::VectorXd> f{random_vector(3, rng), random_vector(4, rng), random_vector(2, rng)};
    const HTensor one = HTensor::rank_one(balanced(3), f);
    CHECK(dense_dist(recompress(one, 0.9 * norm(one)), one) <= 1e-12 * norm(one));
    CHECK_THROWS_AS(recompress(one, -1.0), InvalidArgument);
}

TEST_CASE("recompress error never exceeds the tail or the tolerance")
{
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const int d = 2 + trial % 4;
        std::vector<Index> dims;
        for (int i = 0; i < d; ++i) dims.push_back(2 + static_cast<Index>(rng() % 3));
        const HTensor h = random_decaying(balanced(d), dims, 6, 0.5, rng);
        const double eta = u01(rng) * norm(h);
        TruncationReport rep;
        const HTensor t = recompress(h, eta, &rep);
        const double err = dense_dist(h, t);
        CHECK(err <= eta + 1e-12 * norm(h));
        CHECK(err <= rep.tail + 1e-12 * norm(h));
        CHECK(rep.tail <= eta);
    }
}

TEST_CASE("recompress picks the minimal maximal rank")
{
    std::mt19937_64 rng(17);
    const HTensor h = random_decaying(balanced(3), {4, 4, 4}, 6, 0.4, rng);
    const EdgeSpectrum s = edge_spectra(h);
    for (double eta : {1e-1, 1e-2, 1e-3}) {
        const RankVector r = select_ranks(s, eta);
        Index rmax = 0;
        for (Index x : r) rmax = std::max(rmax, x);
        CHECK(s.total_tail(r) <= eta);
        if (rmax > 0) {
            RankVector lower(r.size(), rmax - 1);
            CHECK(s.total_tail(lower) > eta);
        }
    }
}

TEST_CASE("truncate_to_ranks")
{
    std::mt19937_64 rng(18);
    const HTensor h = random_low_rank(balanced(2), {5, 5}, 4, rng);
    CHECK(dense_dist(truncate_to_ranks(h, recompress(h, 0.0).ranks()), h) <= 1e-12 * norm(h));
    const Eigen::VectorXd sg = dense_edge_sigma(to_dense(h), h.tree(), 0);
    const double best = sg.tail(sg.size() - 1).norm();
    CHECK(dense_dist(truncate_to_ranks(h, {1}), h) == doctest::Approx(best).epsilon(1e-10));

    const HTensor h3 = random_low_rank(balanced(3), {3, 3, 3}, 4, rng);
    const auto& t = h3.tree();
    const auto pair_edge = static_cast<std::size_t>(t.edge_of_node(t.node(0).left));
    // r_{12} = 1 with r_1 = r_2 = 3 is compatible; r_{12} = 4 with r_1 = r_2 = 1 is not
    RankVector ok(3, 3), bad(3, 1);
    ok[pair_edge] = 1;
    bad[pair_edge] = 4;
    CHECK_NOTHROW(truncate_to_ranks(h3, ok));
    CHECK_THROWS_AS(truncate_to_ranks(h3, bad), InvalidArgument);
}

TEST_CASE("contractions")
{
    std::mt19937_64 rng(19);
    const Eigen::VectorXd a = random_vector(4, rng), b = random_vector(3, rng);
    const std::vector<Eigen::VectorXd> f{a, b};
    const ContractionSet c1 = contractions(HTensor::rank_one(balanced(2), f));
    for (Index i = 0; i < 4; ++i) CHECK(c1.pi[0][i] == doctest::Approx(std::abs(a[i]) * b.norm()));

    for (int d = 2; d <= 4; ++d) {
        std::vector<Index> dims(static_cast<std::size_t>(d), 4);
        const HTensor h = random_low_rank(balanced(d), dims, 3, rng);
        const ContractionSet c = contractions(h);
        const auto ref = dense_contractions(to_dense(h));
        for (int i = 0; i < d; ++i) {
            CHECK(c.pi[static_cast<std::size_t>(i)].norm() == doctest::Approx(norm(h)).epsilon(1e-10));
            CHECK((c.pi[static_cast<std::size_t>(i)] - ref[static_cast<std::size_t>(i)]).norm() <= 1e-10 * ref[static_cast<std::size_t>(i)].norm());
        }
    }
}

TEST_CASE("coarsening selection hand case")
{
    ContractionSet c;
    c.pi = {Eigen::Vector2d(1.0, 0.2), Eigen::Vector2d(0.9, 0.1)};
    const CoarsenSelection s = select_coarsening(c, 0.25);
    CHECK(s.kept == 2);
    CHECK(s.sets[0] == std::vector<Index>{0});
    CHECK(s.sets[1] == std::vector<Index>{0});
    CHECK(s.discarded == doctest::Approx(std::sqrt(0.05)));
}

TEST_CASE("coarsen contract")
{
    std::mt19937_64 rng(20);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const HTensor h = random_low_rank(balanced(3), {5, 4, 6}, 2, rng);
        const double eta = u01(rng) * norm(h);
        CoarsenSelection sel;
        const HTensor c = coarsen(h, eta, &sel);
        const double err = dense_dist(h, c);
        CHECK(err <= eta + 1e-12 * norm(h));
        CHECK(err <= sel.discarded + 1e-12 * norm(h));
        Index kept = 0;
        for (const auto& s : sel.sets) kept += static_cast<Index>(s.size());
        CHECK(kept == sel.kept);
    }
    const HTensor h = random_low_rank(balanced(2), {4, 4}, 2, rng);
    CHECK(coarsen(h, 0.0).support() == h.support());
    CHECK(norm(coarsen(h, norm(h))) == 0.0);
}

TEST_CASE("restrict_support matches dense masking")
{
    std::mt19937_64 rng(21);
    const HTensor h = random_low_rank(balanced(3), {3, 3, 3}, 2, rng);
    const std::vector<std::vector<Index>> sets{{0, 2}, {1}, {0, 1, 2}};
    const DenseTensor r = to_dense(restrict_support(h, sets));
    DenseTensor x = to_dense(h);
    for (Index f = 0; f < x.size(); ++f) {
        const auto idx = x.multi_index(f);
        const bool in = (idx[0] != 1) && idx[1] == 1;
        CHECK(r.data[f] == doctest::Approx(in ? x.data[f] : 0.0));
    }
    CHECK(dense_dist(restrict_support(h, {{0, 1, 2}, {0, 1, 2}, {0, 1, 2}}), h) == 0.0);
    CHECK(norm(restrict_support(h, {{0, 1, 2}, {}, {0, 1, 2}})) == 0.0);
    CHECK_THROWS(restrict_support(h, {{0, 7}, {0}, {0}}));
}

TEST_CASE("A^s quasi-norm")
{
    CHECK(as_quasinorm({1.0, 0.0, 0.0}, 1.0) == doctest::Approx(1.0));
    CHECK(as_quasinorm({0.0, 0.0}, 2.0) == 0.0);
    std::vector<double> g;
    for (int k = 0; k < 20; ++k) g.push_back(std::ldexp(1.0, -k));
    double ref = 0.0;
    for (int n = 0; n <= 20; ++n) {
        double tail = 0.0;
        for (int k = n; k < 20; ++k) tail += std::ldexp(1.0, -2 * k);
        ref = std::max(ref, (n + 1.0) * std::sqrt(tail));
    }
    CHECK(as_quasinorm(g, 1.0) == doctest::Approx(ref));
    CHECK_THROWS_AS(as_quasinorm(g, 0.0), InvalidArgument);
}
