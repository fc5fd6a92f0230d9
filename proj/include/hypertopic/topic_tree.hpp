#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace hypertopic {

struct TopicNode {
    int id = 0;
    int level = 1;  // root is level 1
    std::optional<int> parent;
    std::vector<int> children;  // ordered; defines left-sibling chains
};

// Rooted ordered topic tree with uniform leaf depth.
class TopicTree {
public:
    // Root-only tree whose leaves must end up at `max_depth`.
    explicit TopicTree(int max_depth = 1);

    // Complete tree; ids are assigned breadth-first starting at 0.
    static TopicTree complete(int levels, int branching);
    // Rebuilds a saved tree; validates it.
    static TopicTree restore(int max_depth, int root, int next_id, const std::vector<TopicNode>& nodes);

    int root() const { return root_; }
    int depth() const { return max_depth_; }
    int next_id() const { return next_id_; }
    std::size_t size() const { return nodes_.size(); }
    bool contains(int id) const { return nodes_.count(id) != 0; }
    const TopicNode& node(int id) const;
    bool is_leaf(int id) const { return node(id).children.empty(); }

    // Breadth-first, left-to-right. Position in this list is the topic index
    // used by every per-topic vector (theta, s_t, embedding rows).
    std::vector<int> bfs_order() const;
    std::unordered_map<int, int> index_map() const;

    // Root-to-leaf paths, depth-first left-to-right.
    std::vector<std::vector<int>> paths() const;

    std::vector<int> left_siblings(int id) const;
    std::vector<int> subtree(int id) const;  // id and all descendants

    // Appends a rightmost child and, when needed, a chain of first children
    // down to depth(). Returns the created ids, top first.
    std::vector<int> add_child(int parent);
    // Removes `id` and its descendants. Throws for the root.
    void remove_subtree(int id);

    // Throws std::logic_error if any structural invariant is broken.
    void validate() const;

private:
    std::unordered_map<int, TopicNode> nodes_;
    int root_ = 0;
    int max_depth_ = 1;
    int next_id_ = 1;
};

// s_t = sum_i |d_i| theta_it / sum_i |d_i|. theta is docs x T (BFS order).
std::vector<double> topic_word_mass(const Eigen::MatrixXd& theta, std::span<const double> doc_lengths);

struct TreeChange {
    enum class Kind { add, prune };
    Kind kind;
    int node;                // added child (top of any chain) or pruned subtree root
    int parent;
    std::vector<int> nodes;  // every id created or removed
};

// Applies the grow/prune rules once. `mass` is aligned with bfs_order() of
// the tree as passed in. Per-topic distributions must be recomputed after.
std::vector<TreeChange> update_tree(TopicTree& tree, std::span<const double> mass, double s_add, double s_prune);

}  // namespace hypertopic
