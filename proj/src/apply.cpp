#include "htsolve/apply.hpp"

#include "htsolve/errors.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <string_view>

namespace htsolve {

namespace {

using MapFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

std::size_t at(int i) { return static_cast<std::size_t>(i); }

void check_shapes(const LowRankOperator& A, const HTensor& v)
{
    if (A.dims() != v.dims()) throw DimensionMismatch("operator and tensor dims differ");
}

// Factor of term t in mode i, with an exact separable scaling folded in when requested.
SparseMatrix folded_factor(const LowRankOperator& A, const KronTerm& t, int i, bool fold)
{
    const Index n = A.dims()[at(i)];
    SparseMatrix m;
    if (t.factors[at(i)].identity) {
        m.resize(n, n);
        m.setIdentity();
    } else {
        m = t.factors[at(i)].mat;
    }
    if (fold && A.scaling().kind == ScalingKind::diagonal) {
        const auto& s = A.scaling().values[at(i)];
        m = s.asDiagonal() * m * s.asDiagonal();
    }
    return m;
}

// Sum of the Kronecker terms (scaling folded in only if it is an exact diagonal).
HTensor apply_terms(const LowRankOperator& A, const HTensor& v, bool fold)
{
    const bool folding = fold && A.scaling().kind == ScalingKind::diagonal;
    HTensor out(v.shared_tree(), v.dims());
    bool first = true;
    for (const auto& t : A.terms()) {
        std::vector<MapFn> maps(at(v.order()));
        for (int i = 0; i < v.order(); ++i) {
            if (t.factors[at(i)].identity && !folding) continue;
            SparseMatrix m = folded_factor(A, t, i, folding);
            maps[at(i)] = [m = std::move(m)](const Eigen::MatrixXd& u) -> Eigen::MatrixXd { return m * u; };
        }
        HTensor term = apply_mode_maps(v, maps, v.dims(), t.coeff);
        out = first ? std::move(term) : add(out, term);
        first = false;
    }
    return out;
}

std::string support_signature(const std::vector<std::vector<Index>>& sets)
{
    std::string s;
    for (const auto& v : sets) {
        s.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(Index));
        s.push_back('|');
    }
    return std::to_string(std::hash<std::string>{}(s));
}

std::string weights_signature(const std::vector<Eigen::VectorXd>& q)
{
    std::string s;
    for (const auto& v : q) {
        s.append(reinterpret_cast<const char*>(v.data()), static_cast<std::size_t>(v.size()) * sizeof(double));
        s.push_back('|');
    }
    return std::to_string(std::hash<std::string>{}(s));
}

struct CachedScaling {
    HTensor diag;
    Index m = 0;
};

std::mutex cache_mutex;
std::map<std::string, CachedScaling> scaling_cache;

// Hierarchical approximation of the scaling diagonal with entrywise relative error
// <= delta on the active set.
CachedScaling scaling_for(const LowRankOperator& A, const std::shared_ptr<const DimensionTree>& tree, double delta,
                          const std::vector<std::vector<Index>>& active)
{
    const int bucket = static_cast<int>(std::floor(std::log2(delta)));
    std::ostringstream key;
    key << tree->to_string() << '/' << weights_signature(A.scaling().values) << '/' << bucket << '/'
        << support_signature(active);
    {
        std::lock_guard<std::mutex> lock(cache_mutex);
        auto it = scaling_cache.find(key.str());
        if (it != scaling_cache.end()) return it->second;
    }
    const double db = std::ldexp(1.0, bucket);
    const ExpSumScaling s = build_scaling(A.scaling().values, db / 2.0, active);
    const double tau = db / 2.0 * A.scaling_min(active);
    CachedScaling c{recompress(scaling_tensor(s, tree), tau), s.m()};
    std::lock_guard<std::mutex> lock(cache_mutex);
    if (scaling_cache.size() > 256) scaling_cache.clear();
    scaling_cache.emplace(key.str(), c);
    return c;
}

} // namespace

HTensor apply_exact(const LowRankOperator& A, const HTensor& v)
{
    check_shapes(A, v);
    if (A.scaling().kind == ScalingKind::inverse_sqrt_sum)
        throw InvalidArgument("operator carries an inverse-square-root scaling; use apply_certified");
    return apply_terms(A, v, true);
}

HTensor apply_certified(const LowRankOperator& A, const HTensor& v, double eta, ApplyReport* report)
{
    check_shapes(A, v);
    if (eta < 0.0) throw InvalidArgument("negative apply tolerance");
    if (report) {
        *report = {};
        report->input_ranks = v.ranks();
    }
    if (A.scaling().kind != ScalingKind::inverse_sqrt_sum) {
        HTensor w = apply_exact(A, v);
        if (report) report->pre_ranks = w.ranks();
        TruncationReport tr;
        HTensor out = recompress(w, eta / 2.0, &tr);
        if (report) report->bound = tr.tail;
        return out;
    }

    const double nv = norm(v);
    if (nv == 0.0) {
        if (report) report->pre_ranks = v.ranks();
        return HTensor(v.shared_tree(), v.dims());
    }
    if (!(eta > 0.0)) throw ToleranceInfeasible("scaled operators need a positive apply tolerance");
    if (!A.bounds().valid()) throw InvalidArgument("scaled operator application needs operator bounds");
    const double U = A.bounds().upper;

    // W^ = W (I + E) with |E| <= delta gives ||(W^ T W^ - W T W) v|| <= ((1+delta)^2 - 1) U ||v|| = eta/2.
    double delta = std::sqrt(1.0 + eta / (2.0 * U * nv)) - 1.0;
    delta = std::min(delta, 0.5);
    delta = std::ldexp(1.0, static_cast<int>(std::floor(std::log2(delta))));

    const auto supp = v.support();
    auto active = A.reach(supp);
    for (std::size_t i = 0; i < active.size(); ++i) {
        std::vector<Index> u;
        std::set_union(active[i].begin(), active[i].end(), supp[i].begin(), supp[i].end(), std::back_inserter(u));
        active[i] = std::move(u);
    }
    const CachedScaling sc = scaling_for(A, v.shared_tree(), delta, active);

    const double wmin = A.scaling_min(supp);
    const double wmax = A.scaling_max();
    const double e1 = eta / 6.0 * wmin / ((1.0 + delta) * U);
    const double e2 = eta / 6.0 / ((1.0 + delta) * wmax);

    const HTensor y = recompress(hadamard(sc.diag, v), e1);
    const HTensor z = recompress(apply_terms(A, y, false), e2);
    const HTensor w = hadamard(sc.diag, z);
    TruncationReport tr;
    HTensor out = recompress(w, eta / 6.0, &tr);
    if (report) {
        report->m = sc.m;
        report->pre_ranks = w.ranks();
        report->bound = eta;
    }
    return out;
}

CompressionTable build_compression_table(const LowRankOperator& A)
{
    CompressionTable tab;
    const auto& terms = A.terms();
    tab.levels.resize(terms.size());
    tab.errors.resize(terms.size());
    tab.full_norm.assign(terms.size(), 0.0);
    tab.mode.assign(terms.size(), -1);
    for (std::size_t t = 0; t < terms.size(); ++t) {
        if (terms[t].active_modes() != 1) continue;
        int i = 0;
        while (terms[t].factors[at(i)].identity) ++i;
        tab.mode[t] = i;
        const Eigen::MatrixXd b(folded_factor(A, terms[t], i, true));
        const Index n = b.rows();
        tab.full_norm[t] = Eigen::JacobiSVD<Eigen::MatrixXd>(b).singularValues()(0);
        for (int j = 0;; ++j) {
            const Index bw = (Index{1} << j) - 1;
            Eigen::MatrixXd bj = b;
            for (Index r = 0; r < n; ++r)
                for (Index c = 0; c < n; ++c)
                    if (std::abs(r - c) > bw) bj(r, c) = 0.0;
            const double err = bw >= n - 1 ? 0.0 : Eigen::JacobiSVD<Eigen::MatrixXd>(b - bj).singularValues()(0);
            tab.levels[t].push_back(bj.sparseView(0.0, 0.0));
            tab.errors[t].push_back(err);
            if (bw >= n - 1) break;
        }
    }
    return tab;
}

namespace {

// Dyadic bin of each row: floor(log2(pmax / pi)), -1 for rows with pi = 0.
std::vector<int> dyadic_bins(const Eigen::VectorXd& pi)
{
    std::vector<int> bin(static_cast<std::size_t>(pi.size()), -1);
    const double pmax = pi.size() > 0 ? pi.maxCoeff() : 0.0;
    if (!(pmax > 0.0)) return bin;
    for (Index k = 0; k < pi.size(); ++k)
        if (pi[k] > 0.0) bin[static_cast<std::size_t>(k)] = std::max(0, static_cast<int>(std::floor(std::log2(pmax / pi[k]))));
    return bin;
}

double bound_at(const LowRankOperator& A, const CompressionTable& tab, const ContractionSet& c, int level)
{
    double total = 0.0;
    for (std::size_t t = 0; t < A.terms().size(); ++t) {
        const int i = tab.mode[t];
        if (i < 0) continue;
        const auto& pi = c.pi[at(i)];
        const auto bins = dyadic_bins(pi);
        const auto& err = tab.errors[t];
        double acc = 0.0;
        double rest = 0.0;
        std::map<int, double> mass;
        for (Index k = 0; k < pi.size(); ++k) {
            const int b = bins[static_cast<std::size_t>(k)];
            if (b < 0) continue;
            if (b <= level)
                mass[b] += pi[k] * pi[k];
            else
                rest += pi[k] * pi[k];
        }
        for (const auto& [b, m2] : mass) {
            const auto lv = static_cast<std::size_t>(std::min<long long>(static_cast<long long>(level) - b, static_cast<long long>(err.size()) - 1));
            acc += err[lv] * std::sqrt(m2);
        }
        acc += tab.full_norm[t] * std::sqrt(rest);
        total += std::abs(A.terms()[t].coeff) * acc;
    }
    return total;
}

int max_useful_level(const CompressionTable& tab, const ContractionSet& c)
{
    int lvl = 0;
    for (std::size_t t = 0; t < tab.mode.size(); ++t) {
        if (tab.mode[t] < 0) continue;
        const auto bins = dyadic_bins(c.pi[at(tab.mode[t])]);
        const int bmax = bins.empty() ? 0 : *std::max_element(bins.begin(), bins.end());
        lvl = std::max(lvl, bmax + static_cast<int>(tab.levels[t].size()));
    }
    return lvl;
}

HTensor compressed_product(const LowRankOperator& A, const HTensor& v, const CompressionTable& tab, const ContractionSet& c,
                           int level)
{
    const bool folding = A.scaling().kind == ScalingKind::diagonal;
    HTensor out(v.shared_tree(), v.dims());
    bool first = true;
    for (std::size_t t = 0; t < A.terms().size(); ++t) {
        const auto& term = A.terms()[t];
        std::vector<MapFn> maps(at(v.order()));
        const int ci = tab.mode[t];
        for (int i = 0; i < v.order(); ++i) {
            if (i == ci) {
                const auto bins = dyadic_bins(c.pi[at(i)]);
                const auto& lv = tab.levels[t];
                maps[at(i)] = [bins, &lv, level](const Eigen::MatrixXd& u) -> Eigen::MatrixXd {
                    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(u.rows(), u.cols());
                    std::map<int, std::vector<Index>> rows;
                    for (Index k = 0; k < u.rows(); ++k) {
                        const int b = bins[static_cast<std::size_t>(k)];
                        if (b >= 0 && b <= level) rows[b].push_back(k);
                    }
                    for (const auto& [b, idx] : rows) {
                        Eigen::MatrixXd part = Eigen::MatrixXd::Zero(u.rows(), u.cols());
                        for (Index k : idx) part.row(k) = u.row(k);
                        const auto l = static_cast<std::size_t>(std::min<long long>(static_cast<long long>(level) - b, static_cast<long long>(lv.size()) - 1));
                        out += lv[l] * part;
                    }
                    return out;
                };
                continue;
            }
            if (term.factors[at(i)].identity && !folding) continue;
            SparseMatrix m = folded_factor(A, term, i, folding);
            maps[at(i)] = [m = std::move(m)](const Eigen::MatrixXd& u) -> Eigen::MatrixXd { return m * u; };
        }
        HTensor part = apply_mode_maps(v, maps, v.dims(), term.coeff);
        out = first ? std::move(part) : add(out, part);
        first = false;
    }
    return out;
}

} // namespace

double compressed_bound(const LowRankOperator& A, const HTensor& v, const CompressionTable& table, int level)
{
    return bound_at(A, table, contractions(v), level);
}

HTensor apply_compressed(const LowRankOperator& A, const HTensor& v, double eta, const CompressionTable& table,
                         ApplyReport* report, int level)
{
    check_shapes(A, v);
    if (eta < 0.0) throw InvalidArgument("negative apply tolerance");
    if (table.levels.size() != A.terms().size()) throw InvalidArgument("missing or mismatched compression table");
    if (report) {
        *report = {};
        report->input_ranks = v.ranks();
    }
    if (A.scaling().kind == ScalingKind::inverse_sqrt_sum) {
        HTensor out = apply_certified(A, v, eta, report);
        if (report) report->fallback = true;
        return out;
    }
    if (level == kExactLevel) {
        HTensor out = apply_exact(A, v);
        if (report) {
            report->pre_ranks = out.ranks();
            report->level = kExactLevel;
        }
        return out;
    }

    const ContractionSet c = contractions(v);
    int chosen = level;
    double bound = 0.0;
    if (chosen < 0) {
        const int top = max_useful_level(table, c);
        chosen = -1;
        for (int j = 0; j <= top; ++j) {
            bound = bound_at(A, table, c, j);
            if (bound <= eta / 2.0) {
                chosen = j;
                break;
            }
        }
        if (chosen < 0) {
            HTensor out = apply_certified(A, v, eta, report);
            if (report) report->fallback = true;
            return out;
        }
    } else {
        bound = bound_at(A, table, c, chosen);
    }
    const HTensor w = compressed_product(A, v, table, c, chosen);
    TruncationReport tr;
    HTensor out = recompress(w, eta / 2.0, &tr);
    if (report) {
        report->pre_ranks = w.ranks();
        report->level = chosen;
        report->bound = bound + tr.tail;
    }
    return out;
}

HTensor rhs_truncate(const HTensor& f, double eta)
{
    if (eta < 0.0) throw InvalidArgument("negative rhs tolerance");
    if (eta == 0.0) return f;
    if (eta >= norm(f)) return HTensor(f.shared_tree(), f.dims());
    return coarsen(recompress(f, eta / 2.0), eta / 2.0);
}

} // namespace htsolve
