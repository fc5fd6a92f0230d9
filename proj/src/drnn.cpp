#include "hypertopic/drnn.hpp"

#include <stdexcept>
#include <unordered_map>

namespace hypertopic {

using ad::Var;

Var hyp_rnn_step(const Manifold& m, Var z_prev, const HypRnnVars& p) {
    Var projected = m.exp0(ad::matmul_nt(m.log0(z_prev), p.W));
    return m.tanh_activation(m.translate(projected, p.b));
}

Var hyp_drnn_combine(const Manifold& m, Var z_p, Var z_s, Var combine_W) {
    Var summed = ad::add(m.log0(z_p), m.log0(z_s));
    return m.tanh_activation(m.exp0(ad::matmul_nt(summed, combine_W)));
}

Var seed_point(const Manifold& m, Var init_state) {
    ad::Tape& t = *init_state.tape();
    return m.exp0(ad::concat_cols({t.constant(ad::Matrix::Zero(init_state.rows(), 1)), init_state}));
}

Var compute_topic_embeddings(const Manifold& m, const TopicTree& tree, const DrnnVars& p) {
    const Var seed = seed_point(m, p.init_state);
    std::unordered_map<int, Var> z;
    std::vector<Var> rows;
    const auto order = tree.bfs_order();
    rows.reserve(order.size());
    for (int id : order) {
        const TopicNode& node = tree.node(id);
        const Var parent_state = node.parent ? z.at(*node.parent) : seed;
        Var sibling_state = seed;
        if (node.parent) {
            const auto& sibs = tree.node(*node.parent).children;
            for (std::size_t k = 1; k < sibs.size(); ++k) {
                if (sibs[k] == id) sibling_state = z.at(sibs[k - 1]);
            }
        }
        const Var zp = hyp_rnn_step(m, parent_state, p.ancestral);
        const Var zs = hyp_rnn_step(m, sibling_state, p.fraternal);
        const Var zt = hyp_drnn_combine(m, zp, zs, p.combine_W);
        z.emplace(id, zt);
        rows.push_back(zt);
    }
    return ad::concat_rows(rows);
}

Var compute_level_embeddings(const Manifold& m, int levels, const HypRnnVars& p, Var init) {
    if (levels < 1) throw std::invalid_argument("compute_level_embeddings: need at least one level");
    std::vector<Var> rows;
    Var state = init;
    for (int h = 0; h < levels; ++h) {
        state = hyp_rnn_step(m, state, p);
        rows.push_back(state);
    }
    return ad::concat_rows(rows);
}

Var fermi_dirac(const Manifold& m, Var z, Var x) { return ad::sigmoid(ad::scale(m.sqdist(z, x), -1.0)); }

}  // namespace hypertopic
