#include "hypertopic/transformer.hpp"

#include <cmath>
#include <stdexcept>

namespace hypertopic {

using ad::Matrix;
using ad::Var;

Var embed_tokens(const Manifold& m, const EmbedderVars& p, std::span<const int> tokens, int max_len) {
    const auto len = std::min<std::size_t>(tokens.size(), static_cast<std::size_t>(max_len));
    ad::Tape& t = *p.tokens.tape();
    std::vector<int> positions(len + 1);
    for (std::size_t k = 0; k <= len; ++k) positions[k] = static_cast<int>(k);
    Var rows = p.cls;
    if (len > 0) {
        std::vector<int> ids(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(len));
        rows = ad::concat_rows({p.cls, ad::gather_rows(p.tokens, ids)});
    }
    Var euclid = ad::add(rows, ad::gather_rows(p.positions, positions));
    Var tangent = ad::concat_cols({t.constant(Matrix::Zero(static_cast<Eigen::Index>(len + 1), 1)), euclid});
    return m.exp0(tangent);
}

Var asym_mha(const Manifold& m, Var tokens, const std::vector<Var>& extras, const LayerVars& p, int heads,
             std::vector<Matrix>* attention) {
    if (tokens.rows() < 1) throw std::invalid_argument("asym_mha: empty token sequence");
    const Eigen::Index d = tokens.cols();
    const int dh = head_dim(static_cast<int>(d), heads);
    if (dh < 1) throw std::invalid_argument("asym_mha: more heads than ambient dimensions");

    std::vector<Var> kv_rows(extras.begin(), extras.end());
    kv_rows.push_back(tokens);
    const Var augmented = kv_rows.size() == 1 ? tokens : ad::concat_rows(kv_rows);

    const Var q = m.log0(m.exp0(ad::matmul(m.log0(tokens), p.Wq)));
    const Var k = m.log0(m.exp0(ad::matmul(m.log0(augmented), p.Wk)));
    const Var v = m.log0(m.exp0(ad::matmul(m.log0(augmented), p.Wv)));

    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<Var> outputs;
    if (attention) attention->clear();
    for (int h = 0; h < heads; ++h) {
        const Var qh = ad::slice_cols(q, h * dh, dh);
        const Var kh = ad::slice_cols(k, h * dh, dh);
        const Var vh = ad::slice_cols(v, h * dh, dh);
        const Var weights = ad::softmax_rows(ad::scale(ad::matmul_nt(qh, kh), inv_scale));
        if (attention) attention->push_back(weights.value());
        outputs.push_back(ad::matmul(weights, vh));
    }
    const Var joined = outputs.size() == 1 ? outputs.front() : ad::concat_cols(outputs);
    return ad::matmul(joined, p.Wo);
}

Var hyp_trm_layer(const Manifold& m, Var tokens, const std::vector<Var>& extras, const LayerVars& p, int heads) {
    const Var attended = m.log0(m.exp0(asym_mha(m, tokens, extras, p, heads)));
    const Var mid = ad::layer_norm_rows(ad::add(m.log0(tokens), attended), p.ln1_gain, p.ln1_bias);
    const Var hidden = ad::gelu(ad::add_row(ad::matmul(mid, p.W1), p.b1));
    const Var mlp = ad::add_row(ad::matmul(hidden, p.W2), p.b2);
    return m.exp0(ad::layer_norm_rows(ad::add(mid, mlp), p.ln2_gain, p.ln2_bias));
}

}  // namespace hypertopic
