#pragma once

#include "htsolve/htensor.hpp"

#include <functional>
#include <vector>

namespace htsolve {

/// Relative cutoff below which singular values are treated as zero.
inline constexpr double kRankCutoff = 1e-14;

/// Per-edge nonincreasing singular values of the edge matricizations.
struct EdgeSpectrum {
    std::vector<Eigen::VectorXd> sigma;

    std::size_t num_edges() const { return sigma.size(); }
    /// Tail (sum_{k >= r} sigma_k^2)^{1/2} for edge e (r counted from zero).
    double tail(std::size_t e, Index r) const;
    /// sqrt(sum_e tail(e, r_e)^2).
    double total_tail(const RankVector& r) const;
};

/// Per-mode contraction values pi^(i)_lambda over the full mode range.
struct ContractionSet {
    std::vector<Eigen::VectorXd> pi;
};

/// Orthonormalize all non-root node bases (leaves to root).
HTensor orthogonalize(const HTensor& h);

EdgeSpectrum edge_spectra(const HTensor& h);

struct TruncationReport {
    RankVector ranks;    // ranks of the result
    double tail = 0.0;   // sqrt(sum of discarded sigma^2) over edges; bounds the error
};

/// HSVD hard thresholding with minimal maximal rank such that the tail bound is <= eta.
HTensor recompress(const HTensor& h, double eta, TruncationReport* report = nullptr);

/// HSVD projection onto the given edge ranks.
HTensor truncate_to_ranks(const HTensor& h, const RankVector& r, TruncationReport* report = nullptr);

/// Edge ranks chosen by recompress for a given spectrum.
RankVector select_ranks(const EdgeSpectrum& s, double eta);

ContractionSet contractions(const HTensor& h);

struct CoarsenSelection {
    std::vector<std::vector<Index>> sets; // kept indices per mode, sorted
    Index kept = 0;                       // N = sum of set sizes
    double discarded = 0.0;               // s_N
};

/// Keep the N largest contraction values over all modes, N minimal with s_N <= eta.
CoarsenSelection select_coarsening(const ContractionSet& c, double eta);

HTensor coarsen(const HTensor& h, double eta, CoarsenSelection* report = nullptr);

/// Zero all frame rows outside the given per-mode index sets.
HTensor restrict_support(const HTensor& h, const std::vector<std::vector<Index>>& sets);

/// Hierarchical SVD of a dense array followed by recompression at tol.
HTensor from_dense(const DenseTensor& data, std::shared_ptr<const DimensionTree> tree, double tol = 0.0);
HTensor from_dense(const DenseTensor& data, const DimensionTree& tree, double tol = 0.0);

/// sup_N (N+1)^s * (l2 tail after the N largest entries).
double as_quasinorm(std::vector<double> seq, double s);

/// sup_r gamma(r) * t_r with t_r the HSVD tail at uniform maximal rank r.
/// This bounds the rank-class quasi-norm from above.
double rank_class_quasinorm(const EdgeSpectrum& s, const std::function<double(Index)>& gamma);

namespace detail {

/// Orthogonalized tensor with the left singular vectors (in the node basis) and
/// singular values of one edge matricization.
struct EdgeSvd {
    HTensor orth;
    int node = -1;
    Eigen::MatrixXd vecs;
    Eigen::VectorXd sigma;
};

EdgeSvd edge_svd(const HTensor& h, std::size_t edge);

} // namespace detail

} // namespace htsolve
