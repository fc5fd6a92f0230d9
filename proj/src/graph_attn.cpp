#include "hypertopic/graph_attn.hpp"

#include <stdexcept>

namespace hypertopic {

using ad::Var;

Var hgnn_transform(const Manifold& m, Var docs, const GraphAttnVars& p) {
    return m.exp0(ad::matmul_nt(m.log0(docs), p.W_g));
}

Var hgnn_aggregate(const Manifold& m, Var center, Var neighbors, const GraphAttnVars& p, ad::Matrix* weights) {
    if (center.rows() != 1) throw std::invalid_argument("hgnn_aggregate: one center row expected");
    const Eigen::Index d = center.cols();
    const Var u_center = m.log0(center);
    if (!neighbors.valid() || neighbors.rows() == 0) {
        if (weights) weights->resize(0, 1);
        return m.exp0(ad::scale(u_center, 0.5));
    }
    const Var u_nbrs = m.log0(neighbors);
    const Var b_self = ad::slice_cols(p.b_att, 0, d);
    const Var b_nbr = ad::slice_cols(p.b_att, d, d);
    // b_att^T [u_i || u_j] = b_self . u_i + b_nbr . u_j
    const Var self_score = ad::matmul_nt(u_center, b_self);  // 1 x 1
    const Var nbr_score = ad::matmul_nt(u_nbrs, b_nbr);     // m x 1
    ad::Tape& t = *center.tape();
    const Var logits = ad::add(nbr_score, ad::matmul(t.constant(ad::Matrix::Ones(u_nbrs.rows(), 1)), self_score));
    const Var alpha = ad::softmax_cols(logits);
    if (weights) *weights = alpha.value();
    const Var mixed = ad::matmul(ad::transpose(alpha), u_nbrs);  // 1 x d
    return m.exp0(ad::scale(ad::add(u_center, mixed), 0.5));
}

}  // namespace hypertopic
