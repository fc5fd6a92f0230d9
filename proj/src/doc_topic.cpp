#include "hypertopic/doc_topic.hpp"

#include <stdexcept>
#include <unordered_map>

#include "hypertopic/drnn.hpp"

namespace hypertopic {

using ad::Matrix;
using ad::Tape;
using ad::Var;

TreeLayout TreeLayout::from(const TopicTree& tree) {
    TreeLayout l;
    l.ids = tree.bfs_order();
    l.topics = static_cast<int>(l.ids.size());
    l.levels = tree.depth();
    const auto index = tree.index_map();
    l.level.resize(l.ids.size());
    l.parent.resize(l.ids.size());
    l.children.resize(l.ids.size());
    for (std::size_t k = 0; k < l.ids.size(); ++k) {
        const TopicNode& n = tree.node(l.ids[k]);
        l.level[k] = n.level - 1;
        l.parent[k] = n.parent ? index.at(*n.parent) : -1;
        for (int c : n.children) l.children[k].push_back(index.at(c));
    }
    for (const auto& path : tree.paths()) {
        std::vector<int> idx;
        for (int id : path) idx.push_back(index.at(id));
        l.paths.push_back(std::move(idx));
    }
    l.level_select = Matrix::Zero(l.levels, l.topics);
    for (int k = 0; k < l.topics; ++k) l.level_select(l.level[k], k) = 1.0;
    const auto P = static_cast<Eigen::Index>(l.paths.size());
    l.leaf_select = Matrix::Zero(l.topics, P);
    l.path_membership = Matrix::Zero(l.topics, P);
    for (Eigen::Index p = 0; p < P; ++p) {
        const auto& path = l.paths[static_cast<std::size_t>(p)];
        l.leaf_select(path.back(), p) = 1.0;
        for (int k : path) l.path_membership(k, p) = 1.0;
    }
    return l;
}

namespace {

// Forward over one sibling group / chain stored at `idx` within `row`.
template <typename Row, typename Out>
void stick_forward(const Row& sigma, const std::vector<int>& idx, Out& out) {
    double rest = 1.0;
    const std::size_t m = idx.size();
    for (std::size_t k = 0; k + 1 < m; ++k) {
        out[idx[k]] = sigma[idx[k]] * rest;
        rest *= 1.0 - sigma[idx[k]];
    }
    out[idx[m - 1]] = rest;
}

// Division-free gradient of one stick-breaking group.
template <typename Row, typename G, typename Out>
void stick_backward(const Row& sigma, const std::vector<int>& idx, const G& g, Out& gsigma) {
    const std::size_t m = idx.size();
    if (m < 2) return;
    std::vector<double> prefix(m, 1.0);  // prefix[k] = prod_{i<k} (1 - sigma_i)
    for (std::size_t k = 1; k < m; ++k) prefix[k] = prefix[k - 1] * (1.0 - sigma[idx[k - 1]]);
    // tail = sum_{k>j} g_k s'_k prod_{j<i<k} (1 - sigma_i), with s' = 1 on the last entry.
    double tail = g[idx[m - 1]];
    for (std::size_t j = m - 1; j-- > 0;) {
        gsigma[idx[j]] += prefix[j] * (g[idx[j]] - tail);
        tail = g[idx[j]] * sigma[idx[j]] + (1.0 - sigma[idx[j]]) * tail;
    }
}

}  // namespace

std::vector<double> stick_breaking(std::span<const double> sigma) {
    if (sigma.empty()) return {};
    std::vector<int> idx(sigma.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<int>(k);
    std::vector<double> out(sigma.size());
    stick_forward(sigma, idx, out);
    return out;
}

Var stick_breaking_rows(Var sigma) {
    const Matrix& s = sigma.value();
    const Eigen::Index m = s.cols();
    if (m < 1) throw std::invalid_argument("stick_breaking_rows: empty stick");
    std::vector<int> idx(static_cast<std::size_t>(m));
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<int>(k);
    Matrix out(s.rows(), m);
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        auto row = out.row(r);
        stick_forward(s.row(r), idx, row);
    }
    const int is = sigma.id();
    return sigma.tape()->record(std::move(out), {sigma}, [is, idx](Tape& t, const Matrix& g) {
        const Matrix& s = t.value(is);
        Matrix gs = Matrix::Zero(s.rows(), s.cols());
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
            auto grow = gs.row(r);
            stick_backward(s.row(r), idx, g.row(r), grow);
        }
        t.accumulate(is, gs);
    });
}

Var tree_reach(Var sigma, const TreeLayout& layout) {
    const Matrix& s = sigma.value();
    if (s.cols() != layout.topics) throw std::invalid_argument("tree_reach: sigma must have one column per topic");
    const Eigen::Index G = s.rows();
    const int T = layout.topics;
    // q: child-selection probability of each non-root topic given its parent.
    Matrix q = Matrix::Zero(G, T);
    Matrix reach = Matrix::Zero(G, T);
    for (Eigen::Index r = 0; r < G; ++r) {
        auto qrow = q.row(r);
        for (int k = 0; k < T; ++k) {
            if (!layout.children[k].empty()) stick_forward(s.row(r), layout.children[k], qrow);
        }
        reach(r, 0) = 1.0;
        for (int k = 1; k < T; ++k) reach(r, k) = reach(r, layout.parent[k]) * q(r, k);
    }
    const int is = sigma.id();
    const int io = static_cast<int>(sigma.tape()->size());
    return sigma.tape()->record(reach, {sigma}, [is, io, q = std::move(q), parent = layout.parent,
                                                 children = layout.children](Tape& t, const Matrix& g) {
        const Matrix& s = t.value(is);
        const Matrix& reach = t.value(io);
        const int T = static_cast<int>(parent.size());
        Matrix gs = Matrix::Zero(s.rows(), s.cols());
        std::vector<double> greach(static_cast<std::size_t>(T));
        std::vector<double> gq(static_cast<std::size_t>(T));
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
            for (int k = 0; k < T; ++k) greach[k] = g(r, k);
            std::fill(gq.begin(), gq.end(), 0.0);
            for (int k = T - 1; k >= 1; --k) {
                const int p = parent[k];
                gq[k] = greach[k] * reach(r, p);
                greach[p] += greach[k] * q(r, k);
            }
            auto grow = gs.row(r);
            for (int k = 0; k < T; ++k) {
                if (!children[k].empty()) stick_backward(s.row(r), children[k], gq, grow);
            }
        }
        t.accumulate(is, gs);
    });
}

Var combine_theta(Var pi, Var delta, const TreeLayout& layout) {
    Tape& t = *pi.tape();
    Var through = ad::matmul_nt(pi, t.constant(layout.path_membership));
    Var per_level = ad::matmul(delta, t.constant(layout.level_select));
    return ad::hadamard(through, per_level);
}

TopicDistribution topic_distribution(const Manifold& m, Var docs, Var topics, Var levels, const TreeLayout& layout) {
    if (topics.rows() != layout.topics || levels.rows() != layout.levels) {
        throw std::invalid_argument("topic_distribution: embedding tables do not match the tree");
    }
    Tape& t = *docs.tape();
    // sigma(t, i) with documents as rows.
    Var sigma_topics = fermi_dirac(m, docs, topics);
    Var reach = tree_reach(sigma_topics, layout);
    TopicDistribution out;
    out.pi = ad::matmul(reach, t.constant(layout.leaf_select));
    out.delta = stick_breaking_rows(fermi_dirac(m, docs, levels));
    out.theta = combine_theta(out.pi, out.delta, layout);
    return out;
}

Var tree_embedding(const Manifold& m, Var theta, Var topics) {
    return m.exp0(ad::matmul(theta, m.log0(topics)));
}

}  // namespace hypertopic
