#include "htsolve/tree.hpp"

#include "htsolve/errors.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <numeric>

namespace htsolve {

namespace {

// Nested description used while building; converted to the flat pre-order form.
struct Shape {
    int mode = -1; // leaf when >= 0
    std::vector<Shape> kids;
};

void flatten(const Shape& s, int parent, std::vector<DimensionTree::Node>& out, std::vector<int>& ids)
{
    const int id = static_cast<int>(out.size());
    ids.push_back(id);
    out.push_back({});
    out[static_cast<std::size_t>(id)].parent = parent;
    if (s.mode >= 0) {
        out[static_cast<std::size_t>(id)].modes = {s.mode};
        return;
    }
    std::vector<int> sub;
    flatten(s.kids[0], id, out, sub);
    const int left = sub.front();
    sub.clear();
    flatten(s.kids[1], id, out, sub);
    const int right = sub.front();
    auto& n = out[static_cast<std::size_t>(id)];
    n.left = left;
    n.right = right;
    n.modes = out[static_cast<std::size_t>(left)].modes;
    const auto& rm = out[static_cast<std::size_t>(right)].modes;
    n.modes.insert(n.modes.end(), rm.begin(), rm.end());
    std::sort(n.modes.begin(), n.modes.end());
}

Shape balanced_shape(int lo, int hi)
{
    if (hi - lo == 1) return Shape{lo, {}};
    const int mid = lo + (hi - lo + 1) / 2;
    return Shape{-1, {balanced_shape(lo, mid), balanced_shape(mid, hi)}};
}

Shape linear_shape(int lo, int hi)
{
    if (hi - lo == 1) return Shape{lo, {}};
    return Shape{-1, {Shape{lo, {}}, linear_shape(lo + 1, hi)}};
}

class TreeParser {
public:
    explicit TreeParser(std::string_view text) : text_(text) {}

    Shape parse()
    {
        Shape s = node();
        skip();
        if (pos_ != text_.size()) fail("trailing characters");
        return s;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const
    {
        throw InvalidArgument("tree syntax error at offset " + std::to_string(pos_) + ": " + what);
    }

    void skip()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    Shape node()
    {
        skip();
        if (pos_ >= text_.size()) fail("unexpected end");
        if (text_[pos_] == '(') {
            ++pos_;
            Shape a = node();
            Shape b = node();
            skip();
            if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
            ++pos_;
            return Shape{-1, {std::move(a), std::move(b)}};
        }
        if (!std::isdigit(static_cast<unsigned char>(text_[pos_]))) fail("expected mode number or '('");
        int v = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            v = v * 10 + (text_[pos_] - '0');
            ++pos_;
        }
        if (v < 1) fail("modes are numbered from 1");
        return Shape{v - 1, {}};
    }
};

} // namespace

DimensionTree DimensionTree::balanced(int d)
{
    if (d < 2) throw InvalidArgument("dimension tree needs d >= 2, got " + std::to_string(d));
    DimensionTree t;
    std::vector<int> ids;
    flatten(balanced_shape(0, d), -1, t.nodes_, ids);
    t.order_ = d;
    t.finalize();
    return t;
}

DimensionTree DimensionTree::linear(int d)
{
    if (d < 2) throw InvalidArgument("dimension tree needs d >= 2, got " + std::to_string(d));
    DimensionTree t;
    std::vector<int> ids;
    flatten(linear_shape(0, d), -1, t.nodes_, ids);
    t.order_ = d;
    t.finalize();
    return t;
}

DimensionTree DimensionTree::parse(std::string_view text)
{
    const Shape s = TreeParser(text).parse();
    if (s.mode >= 0) throw InvalidArgument("dimension tree needs d >= 2");
    DimensionTree t;
    std::vector<int> ids;
    flatten(s, -1, t.nodes_, ids);
    t.order_ = static_cast<int>(t.nodes_.front().modes.size());
    t.finalize();
    return t;
}

void DimensionTree::finalize()
{
    validate();
    leaf_of_mode_.assign(static_cast<std::size_t>(order_), -1);
    for (int id = 0; id < num_nodes(); ++id)
        if (is_leaf(id)) leaf_of_mode_[static_cast<std::size_t>(mode_of_leaf(id))] = id;

    layout_.assign(nodes_.size(), {});
    for (int id : postorder()) {
        const Node& n = node(id);
        auto& lay = layout_[static_cast<std::size_t>(id)];
        if (n.left < 0) {
            lay = n.modes;
        } else {
            lay = layout_[static_cast<std::size_t>(n.left)];
            const auto& r = layout_[static_cast<std::size_t>(n.right)];
            lay.insert(lay.end(), r.begin(), r.end());
        }
    }

    // Pre-order, skipping the root and its right child (the right child's pair
    // coincides with the left child's).
    edges_.nodes.clear();
    edge_of_node_.assign(nodes_.size(), -1);
    const int skipped = node(root()).right;
    for (int id : preorder()) {
        if (id == root() || id == skipped) continue;
        edge_of_node_[static_cast<std::size_t>(id)] = static_cast<int>(edges_.nodes.size());
        edges_.nodes.push_back(id);
    }
    edge_of_node_[static_cast<std::size_t>(skipped)] = edge_of_node_[static_cast<std::size_t>(node(root()).left)];
}

void DimensionTree::validate() const
{
    if (order_ < 2) throw InvalidArgument("dimension tree needs d >= 2");
    if (num_nodes() != 2 * order_ - 1)
        throw InvalidArgument("dimension tree must have 2d-1 nodes");
    std::vector<int> all(static_cast<std::size_t>(order_));
    std::iota(all.begin(), all.end(), 0);
    if (node(root()).modes != all) throw InvalidArgument("root must contain every mode exactly once");
    std::vector<int> seen(static_cast<std::size_t>(order_), 0);
    for (int id = 0; id < num_nodes(); ++id) {
        const Node& n = node(id);
        if (n.modes.empty()) throw InvalidArgument("empty tree node");
        if ((n.left < 0) != (n.right < 0)) throw InvalidArgument("tree node with a single child");
        if (n.left < 0) {
            if (n.modes.size() != 1) throw InvalidArgument("leaf with several modes");
            ++seen[static_cast<std::size_t>(n.modes.front())];
            continue;
        }
        const auto& a = node(n.left).modes;
        const auto& b = node(n.right).modes;
        std::vector<int> u;
        std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(u));
        std::vector<int> x;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(x));
        if (u != n.modes || !x.empty()) throw InvalidArgument("children do not partition their parent");
        if (node(n.left).parent != id || node(n.right).parent != id)
            throw InvalidArgument("inconsistent parent links");
    }
    for (int c : seen)
        if (c != 1) throw InvalidArgument("every mode must be a leaf exactly once");
}

std::vector<int> DimensionTree::preorder() const
{
    std::vector<int> out;
    out.reserve(nodes_.size());
    std::vector<int> stack{root()};
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        out.push_back(id);
        if (!is_leaf(id)) {
            stack.push_back(node(id).right);
            stack.push_back(node(id).left);
        }
    }
    return out;
}

std::vector<int> DimensionTree::postorder() const
{
    std::vector<int> out;
    out.reserve(nodes_.size());
    std::function<void(int)> visit = [&](int id) {
        if (!is_leaf(id)) {
            visit(node(id).left);
            visit(node(id).right);
        }
        out.push_back(id);
    };
    visit(root());
    return out;
}

std::string DimensionTree::to_string() const
{
    std::function<std::string(int)> rec = [&](int id) -> std::string {
        if (is_leaf(id)) return std::to_string(mode_of_leaf(id) + 1);
        const std::string l = rec(node(id).left);
        const std::string r = rec(node(id).right);
        return "(" + l + (l.back() == ')' ? "" : " ") + r + ")";
    };
    return rec(root());
}

bool DimensionTree::operator==(const DimensionTree& other) const
{
    if (order_ != other.order_ || nodes_.size() != other.nodes_.size()) return false;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& a = nodes_[i];
        const Node& b = other.nodes_[i];
        if (a.modes != b.modes || a.left != b.left || a.right != b.right) return false;
    }
    return true;
}

EdgeList effective_edges(const DimensionTree& tree) { return tree.edges(); }

} // namespace htsolve
