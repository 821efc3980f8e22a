#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace htsolve {

/// Representatives of the effective edges {alpha, alpha^c}, as node ids of the tree.
struct EdgeList {
    std::vector<int> nodes;

    std::size_t size() const { return nodes.size(); }
    int operator[](std::size_t i) const { return nodes[i]; }
    bool operator==(const EdgeList&) const = default;
};

/// Binary dimension tree over the modes {0, ..., d-1}.
///
/// Nodes are numbered in pre-order with the root at 0. Every interior node has
/// exactly two children whose mode sets partition the parent's. Mode indices are
/// zero-based internally; the textual form uses one-based indices, e.g.
/// "((1 2)(3 4))" for the balanced tree on four modes.
class DimensionTree {
public:
    struct Node {
        std::vector<int> modes; // sorted
        int left = -1;
        int right = -1;
        int parent = -1;
    };

    DimensionTree() = default;

    static DimensionTree balanced(int d);
    static DimensionTree linear(int d);
    static DimensionTree parse(std::string_view text);

    int order() const { return order_; }
    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    static constexpr int root() { return 0; }
    bool is_leaf(int id) const { return node(id).left < 0; }
    bool is_root_child(int id) const { return node(id).parent == root(); }
    int leaf_of_mode(int mode) const { return leaf_of_mode_.at(static_cast<std::size_t>(mode)); }
    int mode_of_leaf(int id) const { return node(id).modes.front(); }

    /// Modes of a node in the order its basis vectors are laid out
    /// (left subtree first).
    const std::vector<int>& layout(int id) const { return layout_.at(static_cast<std::size_t>(id)); }

    std::vector<int> preorder() const;
    std::vector<int> postorder() const;

    const EdgeList& edges() const { return edges_; }
    /// Edge index of a non-root node; both root children map to the same edge.
    int edge_of_node(int id) const { return edge_of_node_.at(static_cast<std::size_t>(id)); }

    /// Throws InvalidArgument if any structural invariant fails.
    void validate() const;

    std::string to_string() const;

    bool operator==(const DimensionTree& other) const;

private:
    int order_ = 0;
    std::vector<Node> nodes_;
    std::vector<int> leaf_of_mode_;
    std::vector<std::vector<int>> layout_;
    EdgeList edges_;
    std::vector<int> edge_of_node_;

    void finalize();
};

/// Deterministic depth-first enumeration of effective edges.
EdgeList effective_edges(const DimensionTree& tree);

} // namespace htsolve
