#include "htsolve/dense.hpp"

#include "htsolve/errors.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace htsolve {

DenseTensor::DenseTensor(std::vector<Index> d) : dims(std::move(d))
{
    data = Eigen::VectorXd::Zero(checked_size(dims));
}

DenseTensor::DenseTensor(std::vector<Index> d, Eigen::VectorXd values) : dims(std::move(d)), data(std::move(values))
{
    if (checked_size(dims) != data.size()) throw DimensionMismatch("dense tensor data does not match its dims");
}

Index DenseTensor::flat_index(std::span<const Index> idx) const
{
    if (idx.size() != dims.size()) throw DimensionMismatch("multi-index has wrong order");
    Index flat = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (idx[k] < 0 || idx[k] >= dims[k]) throw InvalidArgument("multi-index out of range");
        flat = flat * dims[k] + idx[k];
    }
    return flat;
}

std::vector<Index> DenseTensor::multi_index(Index flat) const
{
    std::vector<Index> idx(dims.size());
    for (std::size_t k = dims.size(); k-- > 0;) {
        idx[k] = flat % dims[k];
        flat /= dims[k];
    }
    return idx;
}

Index checked_size(std::span<const Index> dims, Index guard)
{
    Index n = 1;
    for (Index d : dims) {
        if (d < 0) throw InvalidArgument("negative dimension");
        if (d != 0 && n > guard / d)
            throw SizeGuardExceeded("dense size exceeds guard of " + std::to_string(guard) + " entries");
        n *= d;
    }
    if (n > guard) throw SizeGuardExceeded("dense size exceeds guard of " + std::to_string(guard) + " entries");
    return n;
}

DenseTensor permute_axes(const DenseTensor& t, std::span<const int> perm)
{
    const int d = t.order();
    if (static_cast<int>(perm.size()) != d) throw DimensionMismatch("permutation has wrong length");
    std::vector<Index> out_dims(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) out_dims[static_cast<std::size_t>(k)] = t.dims[static_cast<std::size_t>(perm[k])];
    DenseTensor out(out_dims);

    // stride of each input axis
    std::vector<Index> in_stride(static_cast<std::size_t>(d), 1);
    for (int k = d - 2; k >= 0; --k)
        in_stride[static_cast<std::size_t>(k)] = in_stride[static_cast<std::size_t>(k + 1)] * t.dims[static_cast<std::size_t>(k + 1)];

    std::vector<Index> idx(static_cast<std::size_t>(d), 0);
    for (Index flat = 0; flat < out.size(); ++flat) {
        Index src = 0;
        for (int k = 0; k < d; ++k) src += idx[static_cast<std::size_t>(k)] * in_stride[static_cast<std::size_t>(perm[k])];
        out.data[flat] = t.data[src];
        for (int k = d - 1; k >= 0; --k) {
            if (++idx[static_cast<std::size_t>(k)] < out_dims[static_cast<std::size_t>(k)]) break;
            idx[static_cast<std::size_t>(k)] = 0;
        }
    }
    return out;
}

Eigen::MatrixXd matricize(const DenseTensor& t, std::span<const int> row_modes)
{
    const int d = t.order();
    std::vector<int> perm(row_modes.begin(), row_modes.end());
    Index rows = 1;
    for (int m : row_modes) rows *= t.dims[static_cast<std::size_t>(m)];
    for (int k = 0; k < d; ++k)
        if (std::find(row_modes.begin(), row_modes.end(), k) == row_modes.end()) perm.push_back(k);
    const DenseTensor p = permute_axes(t, perm);
    const Index cols = rows == 0 ? 0 : p.size() / rows;
    // p is row-major in (rows, cols)
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(p.data.data(), rows, cols);
}

DenseTensor outer_product(std::span<const Eigen::VectorXd> factors)
{
    std::vector<Index> dims;
    for (const auto& f : factors) dims.push_back(f.size());
    DenseTensor out(dims);
    for (Index flat = 0; flat < out.size(); ++flat) {
        const auto idx = out.multi_index(flat);
        double v = 1.0;
        for (std::size_t k = 0; k < factors.size(); ++k) v *= factors[k][idx[k]];
        out.data[flat] = v;
    }
    return out;
}

} // namespace htsolve
