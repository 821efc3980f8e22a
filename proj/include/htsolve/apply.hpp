#pragma once

#include "htsolve/expsum.hpp"
#include "htsolve/hsvd.hpp"
#include "htsolve/operator.hpp"

#include <limits>

namespace htsolve {

struct ApplyReport {
    Index m = 0;              // exponential-sum terms used (0 if unscaled)
    RankVector pre_ranks;     // ranks before the final recompression
    RankVector input_ranks;
    double bound = 0.0;       // certified error bound of the returned result
    int level = -1;           // compressed application level J (-1 if unused)
    bool fallback = false;    // compressed application fell back to apply_certified
};

/// Exact application; every edge rank becomes (number of terms) * rank.
/// Throws InvalidArgument for operators carrying an inverse-square-root-sum scaling.
HTensor apply_exact(const LowRankOperator& A, const HTensor& v);

/// Returns w with ||A v - w|| <= eta.
HTensor apply_certified(const LowRankOperator& A, const HTensor& v, double eta, ApplyReport* report = nullptr);

/// Band truncations B_j (|row - col| <= 2^j - 1) of the single non-identity factor of
/// each one-mode term, with densely measured spectral errors ||B - B_j||.
struct CompressionTable {
    std::vector<std::vector<SparseMatrix>> levels; // per term, empty for other terms
    std::vector<std::vector<double>> errors;       // per term
    std::vector<double> full_norm;                 // ||B|| per term
    std::vector<int> mode;                         // active mode per term, -1 if none or several
};

CompressionTable build_compression_table(const LowRankOperator& A);

inline constexpr int kExactLevel = std::numeric_limits<int>::max();

/// Multilevel compressed application: the support of v in each compressed mode is
/// split into dyadic bins of contraction magnitude, bin j is multiplied with B_{J-j},
/// and anything beyond bin J is dropped. The smallest J whose certified bound is
/// <= eta/2 is used, followed by recompression at eta/2. With level = kExactLevel the
/// result equals apply_exact.
HTensor apply_compressed(const LowRankOperator& A, const HTensor& v, double eta, const CompressionTable& table,
                         ApplyReport* report = nullptr, int level = -1);

/// Certified bound of the compressed application at a fixed level.
double compressed_bound(const LowRankOperator& A, const HTensor& v, const CompressionTable& table, int level);

/// ||f - rhs_truncate(f, eta)|| <= eta via recompress(eta/2) then coarsen(eta/2).
HTensor rhs_truncate(const HTensor& f, double eta);

} // namespace htsolve
