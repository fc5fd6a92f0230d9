#pragma once

// Tiny end-to-end instance shared by the model tests and the acceptance run.

#include <cmath>
#include <string>

#include "hypertopic/corpus.hpp"
#include "hypertopic/model.hpp"
#include "hypertopic/objective.hpp"
#include "support.hpp"

namespace testing {

inline hypertopic::DocumentGraph tiny_graph() {
    using namespace hypertopic;
    std::vector<std::string> words;
    for (int w = 0; w < 20; ++w) words.push_back("w" + std::to_string(w));
    std::vector<RawDocument> docs{
        {"a", "x", "w0 w1 w2 w3 w1 w4 w5 w0 w6 w7"},
        {"b", "y", "w8 w9 w10 w11 w12 w9 w13 w14 w15 w16 w17 w18 w19"},
    };
    DocumentGraph g = make_graph(std::move(docs), Vocabulary::from_words(words));
    g.set_edges({{0, 1}});
    return g;
}

inline hypertopic::ModelConfig tiny_config(int labels) {
    hypertopic::ModelConfig c;
    c.dim = 4;
    c.layers = 2;
    c.heads = 2;
    c.tree_levels = 2;
    c.tree_branching = 2;
    c.max_len = 16;
    c.num_labels = labels;
    return c;
}

// Central differences over every scalar of every parameter, through the
// training step itself (encode, decoder, all loss terms).
inline GradReport full_model_grad_check(hypertopic::Model& model, hypertopic::Trainer& trainer,
                                        const hypertopic::Batch& batch, double h = 1e-5) {
    auto& store = model.params();
    store.zero_grad();
    trainer.forward_backward(batch, true);
    GradReport report;
    for (auto& p : store.all()) {
        Matrix numeric(p.value.rows(), p.value.cols());
        for (Eigen::Index i = 0; i < p.value.size(); ++i) {
            const double keep = p.value.data()[i];
            p.value.data()[i] = keep + h;
            const double fp = trainer.forward_backward(batch, false).loss;
            p.value.data()[i] = keep - h;
            const double fm = trainer.forward_backward(batch, false).loss;
            p.value.data()[i] = keep;
            numeric.data()[i] = (fp - fm) / (2 * h);
        }
        const double scale = std::max({p.grad.norm(), numeric.norm(), 1e-6});
        const double err = (p.grad - numeric).norm() / scale;
        if (err > report.worst) {
            report.worst = err;
            report.where = p.name;
        }
    }
    return report;
}

}  // namespace testing
