#include "htsolve/tensor_io.hpp"

#include "htsolve/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace htsolve {

namespace {

void put_doubles(std::ostream& out, const double* p, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(p[i]);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        char buf[8];
        std::memcpy(buf, &bits, 8);
        out.write(buf, 8);
    }
}

double get_double(std::istream& in)
{
    char buf[8];
    if (!in.read(buf, 8)) throw InvalidArgument("tensor file: truncated data");
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    return std::bit_cast<double>(bits);
}

void put_list(std::ostream& out, const char* key, const std::vector<Index>& v)
{
    out << key;
    for (Index x : v) out << ' ' << x;
    out << '\n';
}

void write_row_major(std::ostream& out, const Eigen::MatrixXd& m)
{
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
    put_doubles(out, rm.data(), static_cast<std::size_t>(rm.size()));
}

std::vector<Index> parse_list(const std::string& rest)
{
    std::istringstream ss(rest);
    std::vector<Index> v;
    long long x;
    while (ss >> x) {
        if (x < 0) throw InvalidArgument("tensor file: negative size");
        v.push_back(static_cast<Index>(x));
    }
    if (!ss.eof()) throw InvalidArgument("tensor file: malformed integer list '" + rest + "'");
    return v;
}

} // namespace

void write_tensor(std::ostream& out, const HTensor& h)
{
    const auto& t = h.tree();
    std::vector<Index> ranks;
    for (int n : t.preorder()) ranks.push_back(h.node_rank(n));
    out << "htsolve-tensor 1\nformat hierarchical\ntree " << t.to_string() << '\n';
    put_list(out, "dims", h.dims());
    put_list(out, "ranks", ranks);
    out << "orthogonal " << (h.orthogonal() ? 1 : 0) << "\nendheader\n";
    for (int n : t.preorder()) write_row_major(out, h.component(n));
}

void write_tensor(std::ostream& out, const DenseTensor& x)
{
    out << "htsolve-tensor 1\nformat dense\n";
    put_list(out, "dims", x.dims);
    out << "endheader\n";
    put_doubles(out, x.data.data(), static_cast<std::size_t>(x.data.size()));
}

TensorFile read_tensor(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != "htsolve-tensor 1") throw InvalidArgument("tensor file: bad magic line");
    std::string format, tree;
    std::vector<Index> dims, ranks;
    bool have_dims = false, have_ranks = false;
    int orth = 0;
    for (;;) {
        if (!std::getline(in, line)) throw InvalidArgument("tensor file: missing endheader");
        if (line == "endheader") break;
        const auto sp = line.find(' ');
        const std::string key = line.substr(0, sp);
        const std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
        if (key == "format") format = rest;
        else if (key == "tree") tree = rest;
        else if (key == "dims") { dims = parse_list(rest); have_dims = true; }
        else if (key == "ranks") { ranks = parse_list(rest); have_ranks = true; }
        else if (key == "orthogonal") {
            if (rest != "0" && rest != "1") throw InvalidArgument("tensor file: orthogonal must be 0 or 1");
            orth = rest == "1";
        } else throw InvalidArgument("tensor file: unknown header key '" + key + "'");
    }
    if (!have_dims || dims.empty()) throw InvalidArgument("tensor file: missing dims");
    TensorFile tf;
    if (format == "dense") {
        DenseTensor x(dims);
        for (Index i = 0; i < x.size(); ++i) x.data[i] = get_double(in);
        tf.dense = std::move(x);
    } else if (format == "hierarchical") {
        auto t = std::make_shared<const DimensionTree>(DimensionTree::parse(tree));
        if (t->order() != static_cast<int>(dims.size())) throw DimensionMismatch("tensor file: tree and dims disagree");
        if (!have_ranks || static_cast<int>(ranks.size()) != t->num_nodes()) throw InvalidArgument("tensor file: need one rank per node");
        std::vector<Index> rank_of(static_cast<std::size_t>(t->num_nodes()));
        const auto pre = t->preorder();
        for (std::size_t k = 0; k < pre.size(); ++k) rank_of[static_cast<std::size_t>(pre[k])] = ranks[k];
        std::vector<Eigen::MatrixXd> comps(rank_of.size());
        for (int n : pre) {
            const auto& nd = t->node(n);
            Index rows;
            if (t->is_leaf(n)) rows = dims[static_cast<std::size_t>(t->mode_of_leaf(n))];
            else rows = rank_of[static_cast<std::size_t>(nd.left)] * rank_of[static_cast<std::size_t>(nd.right)];
            const Index cols = rank_of[static_cast<std::size_t>(n)];
            Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(rows, cols);
            for (Index i = 0; i < m.size(); ++i) m.data()[i] = get_double(in);
            comps[static_cast<std::size_t>(n)] = m;
        }
        tf.hierarchical = HTensor(t, dims, std::move(comps), orth != 0);
        if (orth) tf.hierarchical->check_invariants(1e-10);
    } else {
        throw InvalidArgument("tensor file: unknown format '" + format + "'");
    }
    if (in.peek() != std::char_traits<char>::eof()) throw InvalidArgument("tensor file: trailing data");
    return tf;
}

void write_tensor_file(const std::string& path, const HTensor& h)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write '" + path + "'");
    write_tensor(f, h);
}

void write_tensor_file(const std::string& path, const DenseTensor& t)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write '" + path + "'");
    write_tensor(f, t);
}

TensorFile read_tensor_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot open '" + path + "'");
    return read_tensor(f);
}

} // namespace htsolve
