#include "htsolve/operator.hpp"

#include "htsolve/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

namespace htsolve {

namespace {

std::size_t at(int i) { return static_cast<std::size_t>(i); }

SparseMatrix sparse_identity(Index n)
{
    SparseMatrix m(n, n);
    m.setIdentity();
    return m;
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b)
{
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
    for (Index ka = 0; ka < a.outerSize(); ++ka)
        for (SparseMatrix::InnerIterator ia(a, ka); ia; ++ia)
            for (Index kb = 0; kb < b.outerSize(); ++kb)
                for (SparseMatrix::InnerIterator ib(b, kb); ib; ++ib)
                    trip.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(), ia.value() * ib.value());
    SparseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

// y = (I_left (x) A (x) I_right) x on a flat row-major vector.
Eigen::VectorXd mode_product(const SparseMatrix& a, const Eigen::VectorXd& x, Index left, Index right)
{
    const Index n = a.cols();
    Eigen::VectorXd y(left * a.rows() * right);
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    for (Index l = 0; l < left; ++l) {
        Eigen::Map<const RowMat> xb(x.data() + l * n * right, n, right);
        Eigen::Map<RowMat> yb(y.data() + l * a.rows() * right, a.rows(), right);
        yb = a * xb;
    }
    return y;
}

Eigen::MatrixXd to_dense(const ModeFactor& f, Index n)
{
    return f.identity ? Eigen::MatrixXd::Identity(n, n) : Eigen::MatrixXd(f.mat);
}

} // namespace

ModeFactor ModeFactor::of(const Eigen::MatrixXd& m) { return {false, m.sparseView(0.0, 0.0)}; }

int KronTerm::active_modes() const
{
    int n = 0;
    for (const auto& f : factors) n += f.identity ? 0 : 1;
    return n;
}

LowRankOperator::LowRankOperator(std::vector<Index> dims, std::vector<KronTerm> terms, OperatorScaling scaling, bool symmetric)
    : dims_(std::move(dims)), terms_(std::move(terms)), scaling_(std::move(scaling)), symmetric_(symmetric)
{
    validate();
}

LowRankOperator LowRankOperator::identity(std::vector<Index> dims)
{
    KronTerm t;
    t.factors.assign(dims.size(), ModeFactor::eye());
    LowRankOperator op(std::move(dims), {t});
    op.set_bounds({1.0, 1.0, true});
    return op;
}

void LowRankOperator::validate() const
{
    if (dims_.empty()) throw InvalidArgument("operator needs at least one mode");
    for (Index n : dims_)
        if (n <= 0) throw InvalidArgument("operator mode dimensions must be positive");
    for (const auto& t : terms_) {
        if (t.factors.size() != dims_.size()) throw DimensionMismatch("term has wrong number of factors");
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            const auto& f = t.factors[i];
            if (!f.identity && (f.mat.rows() != dims_[i] || f.mat.cols() != dims_[i]))
                throw DimensionMismatch("factor shape does not match mode dimension " + std::to_string(i + 1));
        }
    }
    if (scaling_.kind != ScalingKind::none) {
        if (scaling_.values.size() != dims_.size()) throw DimensionMismatch("scaling needs one vector per mode");
        for (std::size_t i = 0; i < dims_.size(); ++i)
            if (scaling_.values[i].size() != dims_[i]) throw DimensionMismatch("scaling vector length mismatch");
        if (scaling_.kind == ScalingKind::inverse_sqrt_sum) {
            double mn = 0.0;
            for (const auto& q : scaling_.values) {
                if (q.minCoeff() < 0.0) throw InvalidArgument("level weights must be nonnegative");
                mn += q.minCoeff();
            }
            if (!(mn > 0.0)) throw InvalidArgument("level weight sums must be positive");
        }
    }
}

Eigen::VectorXd LowRankOperator::scaling_diagonal(Index guard) const
{
    const Index n = checked_size(dims_, guard);
    Eigen::VectorXd s = Eigen::VectorXd::Ones(n);
    if (scaling_.kind == ScalingKind::none) return s;
    std::vector<Index> mi(dims_.size(), 0);
    for (Index flat = 0; flat < n; ++flat) {
        if (scaling_.kind == ScalingKind::diagonal) {
            double v = 1.0;
            for (std::size_t i = 0; i < mi.size(); ++i) v *= scaling_.values[i][mi[i]];
            s[flat] = v;
        } else {
            double x = 0.0;
            for (std::size_t i = 0; i < mi.size(); ++i) x += scaling_.values[i][mi[i]];
            s[flat] = 1.0 / std::sqrt(x);
        }
        for (std::size_t k = mi.size(); k-- > 0;) {
            if (++mi[k] < dims_[k]) break;
            mi[k] = 0;
        }
    }
    return s;
}

SparseMatrix LowRankOperator::assemble_sparse(Index guard) const
{
    const Index n = checked_size(dims_, guard);
    SparseMatrix total(n, n);
    for (const auto& t : terms_) {
        SparseMatrix m = t.factors[0].identity ? sparse_identity(dims_[0]) : t.factors[0].mat;
        for (std::size_t i = 1; i < dims_.size(); ++i)
            m = kron(m, t.factors[i].identity ? sparse_identity(dims_[i]) : t.factors[i].mat);
        total += t.coeff * m;
    }
    if (scaling_.kind != ScalingKind::none) {
        const Eigen::VectorXd s = scaling_diagonal(guard);
        total = s.asDiagonal() * total * s.asDiagonal();
    }
    total.makeCompressed();
    return total;
}

Eigen::MatrixXd LowRankOperator::assemble_dense(Index guard) const
{
    const Index n = checked_size(dims_);
    if (n > 0 && n > guard / n) throw SizeGuardExceeded("dense operator exceeds the guard");
    return Eigen::MatrixXd(assemble_sparse());
}

Eigen::VectorXd LowRankOperator::apply_flat(const Eigen::VectorXd& x) const
{
    const Index n = checked_size(dims_);
    if (x.size() != n) throw DimensionMismatch("vector length does not match operator");
    Eigen::VectorXd s;
    Eigen::VectorXd xs = x;
    if (scaling_.kind != ScalingKind::none) {
        s = scaling_diagonal();
        xs = s.cwiseProduct(x);
    }
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (const auto& t : terms_) {
        Eigen::VectorXd z = xs;
        Index left = 1;
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            const Index right = n / (left * dims_[i]);
            if (!t.factors[i].identity) z = mode_product(t.factors[i].mat, z, left, right);
            left *= dims_[i];
        }
        y += t.coeff * z;
    }
    if (scaling_.kind != ScalingKind::none) y = s.cwiseProduct(y);
    return y;
}

std::vector<std::vector<Index>> LowRankOperator::reach(const std::vector<std::vector<Index>>& sets) const
{
    if (sets.size() != dims_.size()) throw DimensionMismatch("need one index set per mode");
    std::vector<std::vector<char>> mark(dims_.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) mark[i].assign(static_cast<std::size_t>(dims_[i]), 0);
    for (const auto& t : terms_) {
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            const auto& f = t.factors[i];
            for (Index c : sets[i]) {
                if (f.identity) {
                    mark[i][static_cast<std::size_t>(c)] = 1;
                    continue;
                }
                for (SparseMatrix::InnerIterator it(f.mat, c); it; ++it)
                    if (it.value() != 0.0) mark[i][static_cast<std::size_t>(it.row())] = 1;
            }
        }
    }
    std::vector<std::vector<Index>> out(dims_.size());
    for (std::size_t i = 0; i < dims_.size(); ++i)
        for (Index k = 0; k < dims_[i]; ++k)
            if (mark[i][static_cast<std::size_t>(k)]) out[i].push_back(k);
    return out;
}

double LowRankOperator::scaling_max() const
{
    switch (scaling_.kind) {
    case ScalingKind::none:
        return 1.0;
    case ScalingKind::diagonal: {
        double v = 1.0;
        for (const auto& d : scaling_.values) v *= d.cwiseAbs().maxCoeff();
        return v;
    }
    case ScalingKind::inverse_sqrt_sum: {
        double x = 0.0;
        for (const auto& q : scaling_.values) x += q.minCoeff();
        return 1.0 / std::sqrt(x);
    }
    }
    return 1.0;
}

double LowRankOperator::scaling_min(const std::vector<std::vector<Index>>& sets) const
{
    if (scaling_.kind == ScalingKind::none) return 1.0;
    for (const auto& s : sets)
        if (s.empty()) return scaling_max();
    if (scaling_.kind == ScalingKind::diagonal) {
        double v = 1.0;
        for (std::size_t i = 0; i < sets.size(); ++i) {
            double mn = std::numeric_limits<double>::infinity();
            for (Index k : sets[i]) mn = std::min(mn, std::abs(scaling_.values[i][k]));
            v *= mn;
        }
        return v;
    }
    double x = 0.0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        double mx = 0.0;
        for (Index k : sets[i]) mx = std::max(mx, scaling_.values[i][k]);
        x += mx;
    }
    return 1.0 / std::sqrt(x);
}

namespace {

OperatorBounds dense_bounds(const Eigen::MatrixXd& a, bool symmetric)
{
    OperatorBounds b;
    b.certified = true;
    if (symmetric) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
        b.lower = es.eigenvalues().minCoeff();
        b.upper = es.eigenvalues().maxCoeff();
    } else {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
        b.lower = svd.singularValues().minCoeff();
        b.upper = svd.singularValues().maxCoeff();
    }
    return b;
}

struct ModeDiag {
    bool diagonal = false;
    // eigenvalues of each term's factor in the joint eigenbasis (identity -> ones)
    std::vector<Eigen::VectorXd> lambda;
};

ModeDiag diagonalize_mode(const std::vector<Eigen::MatrixXd>& mats, Index n)
{
    ModeDiag out;
    std::vector<const Eigen::MatrixXd*> nonid;
    for (const auto& m : mats)
        if (!m.isIdentity(0.0)) nonid.push_back(&m);
    if (nonid.empty()) {
        out.diagonal = true;
        for (std::size_t t = 0; t < mats.size(); ++t) out.lambda.push_back(Eigen::VectorXd::Ones(n));
        return out;
    }
    for (const auto* a : nonid) {
        if ((*a - a->transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, a->cwiseAbs().maxCoeff())) return out;
        for (const auto* b : nonid) {
            const double scale = std::max(1.0, a->norm() * b->norm());
            if ((*a * *b - *b * *a).norm() > 1e-11 * scale) return out;
        }
    }
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    Eigen::MatrixXd comb = Eigen::MatrixXd::Zero(n, n);
    for (const auto* a : nonid) comb += u(rng) * *a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(comb);
    const Eigen::MatrixXd& v = es.eigenvectors();
    for (const auto& m : mats) {
        const Eigen::MatrixXd d = v.transpose() * m * v;
        const Eigen::VectorXd diag = d.diagonal();
        const double off = (d - Eigen::MatrixXd(diag.asDiagonal())).cwiseAbs().maxCoeff();
        if (off > 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
            out.lambda.clear();
            return out;
        }
        out.lambda.push_back(diag);
    }
    out.diagonal = true;
    return out;
}

std::optional<OperatorBounds> structured_bounds(const LowRankOperator& A)
{
    if (!A.symmetric() || A.scaling().kind == ScalingKind::inverse_sqrt_sum) return std::nullopt;
    const int d = A.order();
    const auto& terms = A.terms();
    // Fold an exact separable scaling into the factors.
    std::vector<std::vector<Eigen::MatrixXd>> fac(at(d));
    for (int i = 0; i < d; ++i) {
        const Index n = A.dims()[at(i)];
        for (const auto& t : terms) {
            Eigen::MatrixXd m = to_dense(t.factors[at(i)], n);
            if (A.scaling().kind == ScalingKind::diagonal) {
                const auto& s = A.scaling().values[at(i)];
                m = s.asDiagonal() * m * s.asDiagonal();
            }
            fac[at(i)].push_back(std::move(m));
        }
    }
    int full_mode = -1;
    std::vector<ModeDiag> diag(at(d));
    for (int i = 0; i < d; ++i) {
        diag[at(i)] = diagonalize_mode(fac[at(i)], A.dims()[at(i)]);
        if (!diag[at(i)].diagonal) {
            if (full_mode >= 0) return std::nullopt;
            full_mode = i;
        }
    }
    Index blocks = 1;
    for (int i = 0; i < d; ++i)
        if (i != full_mode) blocks *= A.dims()[at(i)];
    const Index bs = full_mode >= 0 ? A.dims()[at(full_mode)] : 1;
    if (blocks > 2'000'000 || static_cast<double>(blocks) * static_cast<double>(bs * bs * bs) > 5e10) return std::nullopt;

    OperatorBounds b;
    b.certified = true;
    b.lower = std::numeric_limits<double>::infinity();
    b.upper = -std::numeric_limits<double>::infinity();
    std::vector<Index> mi(at(d), 0);
    for (Index blk = 0; blk < blocks; ++blk) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(bs, bs);
        for (std::size_t t = 0; t < terms.size(); ++t) {
            double c = terms[t].coeff;
            for (int i = 0; i < d; ++i)
                if (i != full_mode) c *= diag[at(i)].lambda[t][mi[at(i)]];
            if (c == 0.0) continue;
            if (full_mode >= 0)
                m += c * fac[at(full_mode)][t];
            else
                m(0, 0) += c;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
        b.lower = std::min(b.lower, es.eigenvalues().minCoeff());
        b.upper = std::max(b.upper, es.eigenvalues().maxCoeff());
        for (int i = d; i-- > 0;) {
            if (i == full_mode) continue;
            if (++mi[at(i)] < A.dims()[at(i)]) break;
            mi[at(i)] = 0;
        }
    }
    return b;
}

OperatorBounds lanczos_bounds(const LowRankOperator& A)
{
    const Index n = checked_size(A.dims());
    const Index k = std::min<Index>(n, 200);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd q(n, k + 1);
    Eigen::VectorXd v(n);
    for (Index i = 0; i < n; ++i) v[i] = nd(rng);
    q.col(0) = v.normalized();
    Eigen::VectorXd alpha(k), beta(k);
    Index steps = 0;
    for (Index j = 0; j < k; ++j) {
        Eigen::VectorXd w = A.symmetric() ? A.apply_flat(q.col(j)) : A.apply_flat(A.apply_flat(q.col(j)));
        alpha[j] = q.col(j).dot(w);
        w -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
        w -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
        beta[j] = w.norm();
        steps = j + 1;
        if (beta[j] < 1e-12) break;
        q.col(j + 1) = w / beta[j];
    }
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(steps, steps);
    for (Index j = 0; j < steps; ++j) {
        t(j, j) = alpha[j];
        if (j + 1 < steps) t(j, j + 1) = t(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
    double lo = es.eigenvalues().minCoeff();
    double hi = es.eigenvalues().maxCoeff();
    if (!A.symmetric()) {
        lo = std::sqrt(std::max(0.0, lo));
        hi = std::sqrt(hi);
    }
    return {lo / 1.1, hi * 1.1, false};
}

} // namespace

OperatorBounds estimate_operator_bounds(const LowRankOperator& A, Index dense_limit)
{
    const Index n = checked_size(A.dims());
    if (n <= dense_limit) return dense_bounds(A.assemble_dense(), A.symmetric());
    if (auto b = structured_bounds(A)) return *b;
    return lanczos_bounds(A);
}

} // namespace htsolve
