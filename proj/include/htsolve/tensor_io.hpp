#pragma once

#include "htsolve/htensor.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace htsolve {

/// Contents of a tensor file: exactly one of the two members is set.
struct TensorFile {
    std::optional<HTensor> hierarchical;
    std::optional<DenseTensor> dense;
};

/// Text header ("htsolve-tensor 1", format, tree, dims, ranks, orthogonal, "endheader")
/// followed by little-endian doubles. Dense data is row-major; hierarchical
/// components follow in tree pre-order, each row-major.
void write_tensor(std::ostream& out, const HTensor& h);
void write_tensor(std::ostream& out, const DenseTensor& t);
void write_tensor_file(const std::string& path, const HTensor& h);
void write_tensor_file(const std::string& path, const DenseTensor& t);

TensorFile read_tensor(std::istream& in);
TensorFile read_tensor_file(const std::string& path);

} // namespace htsolve
