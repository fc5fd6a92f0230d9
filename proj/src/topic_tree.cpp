#include "hypertopic/topic_tree.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace hypertopic {

TopicTree::TopicTree(int max_depth) : max_depth_(max_depth) {
    if (max_depth < 1) throw std::invalid_argument("TopicTree: depth must be >= 1");
    nodes_.emplace(0, TopicNode{0, 1, std::nullopt, {}});
    root_ = 0;
    next_id_ = 1;
}

TopicTree TopicTree::complete(int levels, int branching) {
    if (levels < 2) throw std::invalid_argument("init_tree: levels must be >= 2");
    if (branching < 1) throw std::invalid_argument("init_tree: branching must be >= 1");
    TopicTree tree(levels);
    std::vector<int> frontier{tree.root_};
    for (int level = 2; level <= levels; ++level) {
        std::vector<int> next;
        for (int parent : frontier) {
            for (int k = 0; k < branching; ++k) {
                const int id = tree.next_id_++;
                tree.nodes_.emplace(id, TopicNode{id, level, parent, {}});
                tree.nodes_.at(parent).children.push_back(id);
                next.push_back(id);
            }
        }
        frontier = std::move(next);
    }
    return tree;
}

TopicTree TopicTree::restore(int max_depth, int root, int next_id, const std::vector<TopicNode>& nodes) {
    TopicTree tree(max_depth);
    tree.nodes_.clear();
    tree.root_ = root;
    tree.next_id_ = next_id;
    for (const TopicNode& n : nodes) {
        if (n.id < 0 || n.id >= next_id) throw std::invalid_argument("restore: topic id out of range");
        if (!tree.nodes_.emplace(n.id, n).second) throw std::invalid_argument("restore: duplicate topic id");
    }
    tree.validate();
    return tree;
}

const TopicNode& TopicTree::node(int id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw std::out_of_range("TopicTree: unknown topic " + std::to_string(id));
    return it->second;
}

std::vector<int> TopicTree::bfs_order() const {
    std::vector<int> order;
    order.reserve(nodes_.size());
    std::deque<int> queue{root_};
    while (!queue.empty()) {
        const int id = queue.front();
        queue.pop_front();
        order.push_back(id);
        for (int c : nodes_.at(id).children) queue.push_back(c);
    }
    return order;
}

std::unordered_map<int, int> TopicTree::index_map() const {
    std::unordered_map<int, int> index;
    const auto order = bfs_order();
    for (std::size_t k = 0; k < order.size(); ++k) index.emplace(order[k], static_cast<int>(k));
    return index;
}

std::vector<std::vector<int>> TopicTree::paths() const {
    std::vector<std::vector<int>> out;
    std::vector<int> current;
    std::function<void(int)> walk = [&](int id) {
        current.push_back(id);
        const auto& n = nodes_.at(id);
        if (n.children.empty()) {
            out.push_back(current);
        } else {
            for (int c : n.children) walk(c);
        }
        current.pop_back();
    };
    walk(root_);
    return out;
}

std::vector<int> TopicTree::left_siblings(int id) const {
    const TopicNode& n = node(id);
    if (!n.parent) throw std::invalid_argument("left_siblings: the root has no siblings");
    const auto& sibs = nodes_.at(*n.parent).children;
    auto it = std::find(sibs.begin(), sibs.end(), id);
    return {sibs.begin(), it};
}

std::vector<int> TopicTree::subtree(int id) const {
    std::vector<int> out{id};
    for (std::size_t k = 0; k < out.size(); ++k) {
        for (int c : node(out[k]).children) out.push_back(c);
    }
    return out;
}

std::vector<int> TopicTree::add_child(int parent) {
    const TopicNode& p = node(parent);
    if (p.level >= max_depth_) throw std::invalid_argument("add_child: parent is at maximum depth");
    std::vector<int> created;
    int at = parent;
    for (int level = p.level + 1; level <= max_depth_; ++level) {
        const int id = next_id_++;
        nodes_.emplace(id, TopicNode{id, level, at, {}});
        nodes_.at(at).children.push_back(id);
        created.push_back(id);
        at = id;
    }
    return created;
}

void TopicTree::remove_subtree(int id) {
    const TopicNode& n = node(id);
    if (!n.parent) throw std::invalid_argument("remove_subtree: cannot remove the root");
    auto& sibs = nodes_.at(*n.parent).children;
    sibs.erase(std::find(sibs.begin(), sibs.end(), id));
    for (int victim : subtree(id)) nodes_.erase(victim);
}

void TopicTree::validate() const {
    const TopicNode& r = node(root_);
    if (r.parent || r.level != 1) throw std::logic_error("tree: malformed root");
    std::size_t seen = 0;
    std::deque<int> queue{root_};
    while (!queue.empty()) {
        const int id = queue.front();
        queue.pop_front();
        ++seen;
        const TopicNode& n = node(id);
        if (n.id != id) throw std::logic_error("tree: id mismatch");
        if (n.children.empty() && n.level != max_depth_) {
            throw std::logic_error("tree: leaf " + std::to_string(id) + " not at maximum depth");
        }
        for (int c : n.children) {
            const TopicNode& child = node(c);
            if (!child.parent || *child.parent != id) throw std::logic_error("tree: parent link broken");
            if (child.level != n.level + 1) throw std::logic_error("tree: child level mismatch");
            queue.push_back(c);
        }
    }
    if (seen != nodes_.size()) throw std::logic_error("tree: unreachable or cyclic nodes");
}

std::vector<double> topic_word_mass(const Eigen::MatrixXd& theta, std::span<const double> doc_lengths) {
    if (static_cast<std::size_t>(theta.rows()) != doc_lengths.size()) {
        throw std::invalid_argument("topic_word_mass: one length per document required");
    }
    const double total = std::accumulate(doc_lengths.begin(), doc_lengths.end(), 0.0);
    if (!(total > 0.0)) throw std::invalid_argument("topic_word_mass: total length must be positive");
    Eigen::Map<const Eigen::VectorXd> len(doc_lengths.data(), static_cast<Eigen::Index>(doc_lengths.size()));
    const Eigen::VectorXd mass = theta.transpose() * len / total;
    return {mass.data(), mass.data() + mass.size()};
}

std::vector<TreeChange> update_tree(TopicTree& tree, std::span<const double> mass, double s_add, double s_prune) {
    const auto order = tree.bfs_order();
    if (mass.size() != order.size()) throw std::invalid_argument("update_tree: mass must cover all topics");
    std::unordered_map<int, double> s;
    for (std::size_t k = 0; k < order.size(); ++k) s.emplace(order[k], mass[k]);

    // Subtree totals against the pre-update structure.
    std::unordered_map<int, double> subtotal;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        double acc = s.at(*it);
        for (int c : tree.node(*it).children) acc += subtotal.at(c);
        subtotal.emplace(*it, acc);
    }

    std::vector<int> grow;
    for (int id : order) {
        const TopicNode& n = tree.node(id);
        if (!n.children.empty() && n.level < tree.depth() && s.at(id) > s_add) grow.push_back(id);
    }

    std::vector<TreeChange> log;
    for (int id : order) {
        if (!tree.contains(id)) continue;  // an ancestor was already pruned
        const TopicNode& n = tree.node(id);
        if (!n.parent || subtotal.at(id) >= s_prune) continue;
        const int parent = *n.parent;
        if (tree.node(parent).children.size() <= 1) continue;
        TreeChange change{TreeChange::Kind::prune, id, parent, tree.subtree(id)};
        tree.remove_subtree(id);
        log.push_back(std::move(change));
    }
    for (int id : grow) {
        if (!tree.contains(id)) continue;
        auto created = tree.add_child(id);
        log.push_back(TreeChange{TreeChange::Kind::add, created.front(), id, std::move(created)});
    }
    return log;
}

}  // namespace hypertopic
