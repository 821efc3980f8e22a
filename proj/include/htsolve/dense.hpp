#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace htsolve {

using Index = Eigen::Index;

/// Default cap on materialized dense entries.
inline constexpr Index kDenseGuard = 100'000'000;

/// Plain d-way array in row-major order (last mode varies fastest).
struct DenseTensor {
    std::vector<Index> dims;
    Eigen::VectorXd data;

    DenseTensor() = default;
    explicit DenseTensor(std::vector<Index> d);
    DenseTensor(std::vector<Index> d, Eigen::VectorXd values);

    int order() const { return static_cast<int>(dims.size()); }
    Index size() const { return data.size(); }

    Index flat_index(std::span<const Index> idx) const;
    std::vector<Index> multi_index(Index flat) const;

    double& operator()(std::span<const Index> idx) { return data[flat_index(idx)]; }
    double operator()(std::span<const Index> idx) const { return data[flat_index(idx)]; }

    double norm() const { return data.norm(); }
};

/// Product of dimensions, throwing SizeGuardExceeded above `guard`.
Index checked_size(std::span<const Index> dims, Index guard = kDenseGuard);

/// Reorder axes: result axis k is input axis perm[k].
DenseTensor permute_axes(const DenseTensor& t, std::span<const int> perm);

/// Matricization with the given modes as rows (in the given order) and the
/// remaining modes as columns (in increasing order).
Eigen::MatrixXd matricize(const DenseTensor& t, std::span<const int> row_modes);

/// Outer product of per-mode vectors.
DenseTensor outer_product(std::span<const Eigen::VectorXd> factors);

} // namespace htsolve
