#include "htsolve/problems.hpp"

#include "htsolve/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

namespace htsolve {

namespace {

std::size_t at(int i) { return static_cast<std::size_t>(i); }

KronTerm one_mode_term(int d, int mode, const Eigen::MatrixXd& m, double coeff = 1.0)
{
    KronTerm t;
    t.coeff = coeff;
    t.factors.assign(at(d), ModeFactor::eye());
    t.factors[at(mode)] = ModeFactor::of(m);
    return t;
}

// C(k, l) = int_0^1 phi_k' phi_l for phi_k = sqrt(2) sin(k pi x), k = 1..n.
Eigen::MatrixXd sine_derivative_coupling(Index n)
{
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (Index a = 0; a < n; ++a)
        for (Index b = 0; b < n; ++b) {
            const double k = static_cast<double>(a + 1);
            const double l = static_cast<double>(b + 1);
            if (a == b || (a + b) % 2 == 0) continue;
            c(a, b) = 2.0 * k * l * 2.0 / (l * l - k * k);
        }
    return c;
}

HTensor random_low_rank(const std::shared_ptr<const DimensionTree>& tree, const std::vector<Index>& dims, int rank, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    HTensor out(tree, dims);
    for (int r = 0; r < rank; ++r) {
        std::vector<Eigen::VectorXd> f;
        for (Index n : dims) {
            Eigen::VectorXd v(n);
            for (Index k = 0; k < n; ++k) v[k] = nd(rng);
            f.push_back(v.normalized());
        }
        out = add(out, scale(HTensor::rank_one(tree, f), std::ldexp(1.0, -r)));
    }
    return out;
}

void finish(Problem& p)
{
    p.op.set_bounds(estimate_operator_bounds(p.op));
    if (!p.op.bounds().valid()) throw InvalidArgument("problem '" + p.name + "' is not positive definite");
}

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& a)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.eigenvalues().minCoeff() <= 0.0) throw InvalidArgument("matrix is not positive definite");
    return es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

} // namespace

RhsFlavor parse_rhs_flavor(const std::string& s)
{
    if (s == "rank1" || s == "rank-1" || s == "rank_one") return RhsFlavor::rank_one;
    if (s == "lowrank" || s == "low-rank" || s == "random") return RhsFlavor::low_rank;
    if (s == "y-independent" || s == "y_independent") return RhsFlavor::y_independent;
    throw InvalidArgument("unknown rhs flavor '" + s + "'");
}

std::shared_ptr<const DimensionTree> make_tree(const std::string& spec, int d)
{
    if (spec.empty() || spec == "balanced") return std::make_shared<const DimensionTree>(DimensionTree::balanced(d));
    if (spec == "linear") return std::make_shared<const DimensionTree>(DimensionTree::linear(d));
    auto t = std::make_shared<const DimensionTree>(DimensionTree::parse(spec));
    if (t->order() != d) throw InvalidArgument("tree '" + spec + "' has the wrong number of modes");
    return t;
}

Eigen::MatrixXd legendre_coupling(int p)
{
    if (p < 0) throw InvalidArgument("negative polynomial degree");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p + 1, p + 1);
    for (int k = 0; k < p; ++k) {
        const double v = (k + 1.0) / std::sqrt((2.0 * k + 1.0) * (2.0 * k + 3.0));
        m(k, k + 1) = v;
        m(k + 1, k) = v;
    }
    return m;
}

Eigen::MatrixXd fe_stiffness(const Eigen::VectorXd& coeff)
{
    const Index n = coeff.size();
    if (n < 2) throw InvalidArgument("need at least two intervals");
    const double scale = static_cast<double>(n);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n - 1, n - 1);
    // element e spans nodes e and e+1; interior unknowns are nodes 1..n-1
    for (Index e = 0; e < n; ++e) {
        const double c = coeff[e] * scale;
        const Index i = e - 1;
        const Index j = e;
        if (i >= 0) a(i, i) += c;
        if (j < n - 1) a(j, j) += c;
        if (i >= 0 && j < n - 1) {
            a(i, j) -= c;
            a(j, i) -= c;
        }
    }
    return a;
}

Problem build_diffusion_I(const DiffusionSpec& spec)
{
    const int d = spec.d;
    if (d < 2) throw InvalidArgument("scenario I needs d >= 2");
    Eigen::MatrixXd M = spec.M.size() == 0 ? Eigen::MatrixXd::Identity(d, d) : spec.M;
    if (M.rows() != d || M.cols() != d) throw InvalidArgument("diffusion matrix must be d x d");
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-14) throw InvalidArgument("diffusion matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> mes(M, Eigen::EigenvaluesOnly);
    if (mes.eigenvalues().minCoeff() <= 0.0) throw InvalidArgument("diffusion matrix must be positive definite");

    Problem p;
    p.scenario = spec.multilevel ? Scenario::diffusion_multilevel : Scenario::diffusion_eigen;
    p.tree = make_tree(spec.tree, d);
    std::vector<KronTerm> terms;
    OperatorScaling scaling;
    scaling.kind = ScalingKind::inverse_sqrt_sum;
    std::vector<Index> dims;
    std::vector<Eigen::VectorXd> rhs_factors;

    if (!spec.multilevel) {
        const Index n = spec.n;
        if (n < 1) throw InvalidArgument("need at least one sine mode");
        p.name = "diffusion-eigen-d" + std::to_string(d) + "-n" + std::to_string(n);
        Eigen::VectorXd k2(n);
        for (Index k = 0; k < n; ++k) k2[k] = static_cast<double>((k + 1) * (k + 1));
        const Eigen::MatrixXd c = sine_derivative_coupling(n);
        for (int i = 0; i < d; ++i) {
            dims.push_back(n);
            scaling.values.push_back(k2);
            const Eigen::MatrixXd diag = (std::numbers::pi * std::numbers::pi * M(i, i) * k2).asDiagonal();
            terms.push_back(one_mode_term(d, i, diag));
            rhs_factors.push_back(k2.cwiseSqrt().cwiseInverse());
        }
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                if (M(i, j) == 0.0) continue;
                for (int flip = 0; flip < 2; ++flip) {
                    KronTerm t;
                    t.coeff = M(i, j);
                    t.factors.assign(at(d), ModeFactor::eye());
                    t.factors[at(i)] = ModeFactor::of(flip ? Eigen::MatrixXd(c) : Eigen::MatrixXd(c.transpose()));
                    t.factors[at(j)] = ModeFactor::of(flip ? Eigen::MatrixXd(c.transpose()) : Eigen::MatrixXd(c));
                    terms.push_back(std::move(t));
                }
            }
    } else {
        const int L = spec.max_level;
        if (L < 0 || L > 12) throw InvalidArgument("multilevel depth must lie in [0, 12]");
        const Index n = (Index{1} << (L + 1)) - 1;
        p.name = "diffusion-multilevel-d" + std::to_string(d) + "-L" + std::to_string(L);
        std::vector<int> lvl;
        Eigen::VectorXd q(n);
        for (int l = 0, row = 0; l <= L; ++l)
            for (int k = 0; k < (1 << l); ++k, ++row) {
                lvl.push_back(l);
                q[row] = std::ldexp(1.0, 2 * l);
            }
        for (int i = 0; i < d; ++i) {
            std::mt19937_64 rng(spec.seed * 1000u + static_cast<unsigned>(i));
            std::normal_distribution<double> nd;
            Eigen::MatrixXd g(n, n);
            for (Index a = 0; a < n; ++a)
                for (Index b = 0; b <= a; ++b) {
                    const double v = nd(rng) * std::exp(-static_cast<double>(a - b) / 2.0);
                    g(a, b) = v;
                    g(b, a) = v;
                }
            const double gn = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
            const Eigen::MatrixXd k = spec.coupling / gn * g;
            const Eigen::VectorXd sq = q.cwiseSqrt();
            const Eigen::MatrixXd t = sq.asDiagonal() * (Eigen::MatrixXd::Identity(n, n) + k) * sq.asDiagonal();
            terms.push_back(one_mode_term(d, i, t, M(i, i)));
            dims.push_back(n);
            scaling.values.push_back(q);
            p.levels.push_back(lvl);
            Eigen::VectorXd f(n);
            for (Index r = 0; r < n; ++r) f[r] = std::ldexp(1.0, -lvl[static_cast<std::size_t>(r)]) * (1.0 + 0.25 * std::sin(static_cast<double>(r + 1)));
            rhs_factors.push_back(f);
        }
    }
    p.op = LowRankOperator(dims, std::move(terms), std::move(scaling), true);
    switch (spec.rhs) {
    case RhsFlavor::rank_one:
        p.rhs = HTensor::rank_one(p.tree, rhs_factors);
        break;
    case RhsFlavor::low_rank:
        p.rhs = random_low_rank(p.tree, dims, spec.rhs_rank, spec.seed);
        break;
    case RhsFlavor::y_independent:
        throw InvalidArgument("y-independent right-hand sides apply to parametric problems only");
    }
    finish(p);
    return p;
}

Problem build_parametric_II(const ParametricSpec& spec)
{
    if (spec.d < 1) throw InvalidArgument("need at least one parameter");
    if (spec.p < 1) throw InvalidArgument("Legendre degree cap must be >= 1");
    if (!(spec.theta >= 0.0 && spec.theta < 1.0)) throw InvalidArgument("ellipticity violation: theta must lie in [0, 1)");
    if (spec.n < static_cast<Index>(spec.d) || spec.n < 2) throw InvalidArgument("grid too coarse for the inclusions");
    const Index n = spec.n;
    const int d = spec.d;

    Problem p;
    p.scenario = Scenario::parametric;
    p.name = "parametric-d" + std::to_string(d) + "-n" + std::to_string(n) + "-p" + std::to_string(spec.p);
    p.params = d;
    p.degree = spec.p;
    p.theta = spec.theta;
    p.tree = make_tree(spec.tree, d + 1);

    const Eigen::MatrixXd a0 = fe_stiffness(Eigen::VectorXd::Ones(n));
    const Eigen::MatrixXd s = inverse_sqrt(a0);
    const Eigen::MatrixXd mj = legendre_coupling(spec.p);

    std::vector<Index> dims{n - 1};
    for (int j = 0; j < d; ++j) dims.push_back(spec.p + 1);

    std::vector<KronTerm> terms;
    KronTerm t0;
    t0.factors.assign(at(d + 1), ModeFactor::eye());
    terms.push_back(t0);
    for (int j = 0; j < d; ++j) {
        // inclusion D_j covers elements [lo, hi)
        const Index lo = static_cast<Index>(std::llround(static_cast<double>(j) * static_cast<double>(n) / d));
        const Index hi = static_cast<Index>(std::llround(static_cast<double>(j + 1) * static_cast<double>(n) / d));
        Eigen::VectorXd psi = Eigen::VectorXd::Zero(n);
        psi.segment(lo, hi - lo).setConstant(spec.theta);
        if (spec.theta == 0.0) continue;
        const Eigen::MatrixXd aj = s * fe_stiffness(psi) * s;
        KronTerm t;
        t.factors.assign(at(d + 1), ModeFactor::eye());
        t.factors[0] = ModeFactor::of(Eigen::MatrixXd(0.5 * (aj + aj.transpose())));
        t.factors[at(j + 1)] = ModeFactor::of(mj);
        terms.push_back(std::move(t));
    }
    p.op = LowRankOperator(dims, std::move(terms), {}, true);

    std::vector<Eigen::VectorXd> f;
    const Eigen::VectorXd load = Eigen::VectorXd::Constant(n - 1, 1.0 / static_cast<double>(n));
    f.push_back(s * load);
    for (int j = 0; j < d; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(spec.p + 1);
        e[0] = 1.0;
        if (spec.rhs == RhsFlavor::rank_one) e[1] = 0.5;
        f.push_back(e);
    }
    if (spec.rhs == RhsFlavor::low_rank)
        p.rhs = add(HTensor::rank_one(p.tree, f), scale(random_low_rank(p.tree, dims, 2, 7), 0.1 * f[0].norm()));
    else
        p.rhs = HTensor::rank_one(p.tree, f);
    finish(p);
    return p;
}

Problem build_fd_laplace(int d, Index n, std::string tree)
{
    if (d < 2) throw InvalidArgument("need d >= 2");
    if (n < 1) throw InvalidArgument("need at least one grid point");
    Problem p;
    p.scenario = Scenario::fd_laplace;
    p.name = "fd-laplace-d" + std::to_string(d) + "-n" + std::to_string(n);
    p.tree = make_tree(tree, d);
    const double h2 = static_cast<double>((n + 1) * (n + 1));
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
    for (Index k = 0; k < n; ++k) {
        t(k, k) = 2.0 * h2;
        if (k + 1 < n) t(k, k + 1) = t(k + 1, k) = -h2;
    }
    std::vector<KronTerm> terms;
    std::vector<Index> dims;
    std::vector<Eigen::VectorXd> f;
    for (int i = 0; i < d; ++i) {
        terms.push_back(one_mode_term(d, i, t));
        dims.push_back(n);
        Eigen::VectorXd v(n);
        for (Index k = 0; k < n; ++k) v[k] = std::sin(std::numbers::pi * (k + 1.0) / (n + 1.0)) + 0.5 * std::sin(3.0 * std::numbers::pi * (k + 1.0) / (n + 1.0) + 0.3 * i);
        f.push_back(v);
    }
    p.op = LowRankOperator(dims, std::move(terms), {}, true);
    p.rhs = HTensor::rank_one(p.tree, f);
    finish(p);
    return p;
}

Problem build_identity(std::vector<Index> dims, std::string tree)
{
    Problem p;
    p.scenario = Scenario::identity;
    p.name = "identity";
    p.tree = make_tree(tree, static_cast<int>(dims.size()));
    p.op = LowRankOperator::identity(dims);
    std::vector<Eigen::VectorXd> f;
    for (Index n : dims) f.push_back(Eigen::VectorXd::LinSpaced(n, 1.0, 2.0));
    p.rhs = HTensor::rank_one(p.tree, f);
    return p;
}

Problem load_problem(const Config& cfg)
{
    const std::string scen = cfg.get("problem.scenario");
    const std::string tree = cfg.get_or("problem.tree", "balanced");
    Problem p;
    if (scen == "fd-laplace") {
        p = build_fd_laplace(static_cast<int>(cfg.get_int("problem.d")), cfg.get_int("problem.n"), tree);
    } else if (scen == "identity") {
        const int d = static_cast<int>(cfg.get_int("problem.d"));
        p = build_identity(std::vector<Index>(at(d), cfg.get_int("problem.n")), tree);
    } else if (scen == "diffusion-eigen" || scen == "diffusion-multilevel") {
        DiffusionSpec s;
        s.d = static_cast<int>(cfg.get_int("problem.d"));
        s.multilevel = scen == "diffusion-multilevel";
        s.n = cfg.get_int_or("basis.n", 4);
        s.max_level = static_cast<int>(cfg.get_int_or("basis.levels", 3));
        s.coupling = cfg.get_double_or("basis.coupling", 0.4);
        if (cfg.has("diffusion.M")) {
            const auto rows = cfg.get_matrix("diffusion.M");
            s.M.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.size()));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].size() != rows.size()) throw InvalidArgument("diffusion.M must be square");
                for (std::size_t j = 0; j < rows.size(); ++j) s.M(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
            }
        }
        s.rhs = parse_rhs_flavor(cfg.get_or("rhs.flavor", "rank1"));
        s.rhs_rank = static_cast<int>(cfg.get_int_or("rhs.rank", 2));
        s.seed = static_cast<unsigned>(cfg.get_int_or("problem.seed", 1));
        s.tree = tree;
        p = build_diffusion_I(s);
    } else if (scen == "parametric") {
        ParametricSpec s;
        s.n = cfg.get_int_or("parametric.n", 32);
        s.d = static_cast<int>(cfg.get_int("problem.d"));
        s.theta = cfg.get_double_or("parametric.theta", 0.5);
        s.p = static_cast<int>(cfg.get_int_or("parametric.p", 6));
        s.rhs = parse_rhs_flavor(cfg.get_or("rhs.flavor", "y-independent"));
        s.tree = tree;
        p = build_parametric_II(s);
    } else {
        throw InvalidArgument("unknown scenario '" + scen + "'");
    }
    if (cfg.has("problem.name")) p.name = cfg.get("problem.name");
    return p;
}

Problem load_problem_file(const std::string& path) { return load_problem(Config::load(path)); }

DenseTensor dense_rhs(const Problem& p) { return to_dense(p.rhs); }

DenseTensor dense_solve(const Problem& p, Index guard)
{
    const Index n = checked_size(p.op.dims(), guard);
    const DenseTensor f = dense_rhs(p);
    DenseTensor u(p.op.dims());
    if (n <= 4096) {
        const Eigen::MatrixXd a = p.op.assemble_dense();
        if (p.op.symmetric()) {
            Eigen::LLT<Eigen::MatrixXd> llt(a);
            if (llt.info() != Eigen::Success) throw InvalidArgument("assembled operator is not positive definite");
            u.data = llt.solve(f.data);
        } else {
            u.data = a.partialPivLu().solve(f.data);
        }
        return u;
    }
    if (!p.op.symmetric()) throw InvalidArgument("iterative reference solve needs a symmetric operator");
    // Conjugate gradients to a residual of 1e-13 ||f||.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = f.data;
    Eigen::VectorXd dir = r;
    double rr = r.squaredNorm();
    const double stop = 1e-13 * f.data.norm();
    for (Index it = 0; it < 10 * n && std::sqrt(rr) > stop; ++it) {
        const Eigen::VectorXd ad = p.op.apply_flat(dir);
        const double a = rr / dir.dot(ad);
        x += a * dir;
        r -= a * ad;
        const double rr2 = r.squaredNorm();
        dir = r + (rr2 / rr) * dir;
        rr = rr2;
    }
    if ((f.data - p.op.apply_flat(x)).norm() > 1e-10 * f.data.norm()) throw InvalidArgument("reference solve did not converge");
    u.data = x;
    return u;
}

Eigen::VectorXd spatial_parametric_singular_values(const Problem& p, const DenseTensor& u)
{
    if (u.dims != p.op.dims()) throw DimensionMismatch("solution dims do not match problem");
    const std::vector<int> rows{0};
    Eigen::BDCSVD<Eigen::MatrixXd> svd(matricize(u, rows));
    return svd.singularValues();
}

} // namespace htsolve
