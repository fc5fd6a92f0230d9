#include "hypertopic/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "hypertopic/model.hpp"

namespace hypertopic {

using ad::Matrix;
using ad::Var;

Var topic_word_distribution(const Manifold& m, Var topics, Var U) {
    return ad::softmax_cols(ad::matmul_nt(U, m.log0(topics)));
}

Var reconstruct(Var beta, Var theta) { return ad::matmul_nt(theta, beta); }

Var topic_loss(Var d_hat, const Matrix& counts) {
    if (counts.rows() != d_hat.rows() || counts.cols() != d_hat.cols()) {
        throw std::invalid_argument("topic_loss: counts shape mismatch");
    }
    return ad::weighted_sum(ad::log_floor(d_hat, kProbFloor), -counts);
}

double topic_loss_value(const Matrix& d_hat, const Matrix& counts) {
    double total = 0;
    for (Eigen::Index i = 0; i < counts.rows(); ++i) {
        for (Eigen::Index w = 0; w < counts.cols(); ++w) {
            const double c = counts(i, w);
            if (c != 0.0) total -= c * std::log(std::max(d_hat(i, w), kProbFloor));
        }
    }
    return total;
}

Var graph_loss(const Manifold& m, Var anchor, Var positive, Var negatives, double tau) {
    if (!(tau > 0)) throw std::invalid_argument("graph_loss: tau must be > 0");
    const Var candidates = negatives.valid() && negatives.rows() > 0 ? ad::concat_rows({positive, negatives}) : positive;
    const Var logits = ad::scale(m.sqdist(anchor, candidates), -1.0 / tau);
    return ad::scale(ad::slice_cols(ad::log_softmax_rows(logits), 0, 1), -1.0);
}

Var classifier_probs(const Manifold& m, Var docs, const ClassifierVars& p) {
    const Var hidden = ad::gelu(ad::add_row(ad::matmul(m.log0(docs), p.W1), p.b1));
    return ad::softmax_rows(ad::add_row(ad::matmul(hidden, p.W2), p.b2));
}

Var supervised_loss(const Manifold& m, Var docs, const std::vector<int>& labels, const ClassifierVars& p) {
    const Var probs = classifier_probs(m, docs, p);
    if (static_cast<Eigen::Index>(labels.size()) != probs.rows()) {
        throw std::invalid_argument("supervised_loss: one label per document expected");
    }
    Matrix onehot = Matrix::Zero(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= probs.cols()) throw std::out_of_range("supervised_loss: label out of range");
        onehot(static_cast<Eigen::Index>(i), labels[i]) = -1.0;
    }
    return ad::weighted_sum(ad::log_floor(probs, kProbFloor), onehot);
}

Var total_loss(const LossParts& parts, const LossWeights& w) {
    std::vector<Var> terms;
    if (parts.graph.valid()) terms.push_back(parts.graph);
    if (parts.topic.valid()) terms.push_back(ad::scale(parts.topic, w.lambda_topic));
    if (w.supervised && parts.sup.valid()) terms.push_back(ad::scale(parts.sup, w.lambda_sup));
    if (terms.empty()) throw std::invalid_argument("total_loss: no loss terms");
    Var out = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) out = ad::add(out, terms[i]);
    return out;
}

Adam::Adam(double lr, double beta1, double beta2, double eps) : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

void Adam::step(ad::ParameterStore& params) {
    auto& all = params.all();
    if (m_.size() != all.size()) {
        m_.clear();
        v_.clear();
        for (auto& p : all) {
            m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
            v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < all.size(); ++k) {
        auto& p = all[k];
        if (p.grad.size() != p.value.size()) continue;
        m_[k] = b1_ * m_[k] + (1.0 - b1_) * p.grad;
        v_[k] = b2_ * v_[k] + (1.0 - b2_) * p.grad.cwiseAbs2();
        p.value.array() -= lr_ * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps_);
    }
}

void TrainConfig::validate() const {
    if (weights.lambda_topic < 0 || weights.lambda_sup < 0) throw std::invalid_argument("loss weights must be >= 0");
    if (!(tau > 0)) throw std::invalid_argument("tau must be > 0");
    if (batch_size < 2) throw std::invalid_argument("batch_size must be >= 2");
    if (max_neighbors < 0) throw std::invalid_argument("max_neighbors must be >= 0");
    if (!(lr > 0)) throw std::invalid_argument("lr must be > 0");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw std::invalid_argument("betas must be in [0,1)");
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (!(s_add > 0 && s_add < 1) || !(s_prune > 0 && s_prune < 1)) {
        throw std::invalid_argument("tree thresholds must be in (0,1)");
    }
}

Matrix count_matrix(const DocumentGraph& graph, const std::vector<int>& docs, int vocab_size) {
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(docs.size()), vocab_size);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        for (auto [w, c] : graph.docs[static_cast<std::size_t>(docs[i])].counts) {
            out(static_cast<Eigen::Index>(i), w) = c;
        }
    }
    return out;
}

Trainer::Trainer(Model& model, const DocumentGraph& graph, std::vector<int> train_docs,
                 const std::vector<Edge>& train_edges, TrainConfig config)
    : model_(model),
      graph_(graph),
      train_docs_(std::move(train_docs)),
      adjacency_(adjacency_from(graph.size(), train_edges)),
      config_(config),
      adam_(config.lr, config.beta1, config.beta2),
      rng_(config.seed) {
    config_.validate();
    if (train_docs_.empty()) throw std::invalid_argument("Trainer: no training documents");
    if (graph.vocab.size() != model.vocab_size()) throw std::invalid_argument("Trainer: vocabulary size mismatch");
    std::vector<char> is_train(static_cast<std::size_t>(graph.size()), 0);
    for (int d : train_docs_) is_train.at(static_cast<std::size_t>(d)) = 1;
    for (auto [a, b] : train_edges) {
        if (!is_train[static_cast<std::size_t>(a)] || !is_train[static_cast<std::size_t>(b)]) {
            throw std::invalid_argument("Trainer: training edge touches a held-out document");
        }
    }
    if (config_.weights.supervised && model.config().num_labels == 0) {
        throw std::invalid_argument("Trainer: supervised mode needs a classifier head");
    }
}

namespace {

template <typename Rng>
std::vector<int> sample_without_replacement(const std::vector<int>& pool, std::size_t k, Rng& rng) {
    if (pool.size() <= k) return pool;
    std::vector<int> copy = pool;
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, copy.size() - 1);
        std::swap(copy[i], copy[pick(rng)]);
    }
    copy.resize(k);
    return copy;
}

}  // namespace

Batch Trainer::make_batch(const std::vector<int>& centers) {
    Batch b;
    b.centers = centers.size();
    std::unordered_map<int, int> slot;
    auto add = [&](int doc) {
        auto [it, inserted] = slot.emplace(doc, static_cast<int>(b.members.size()));
        if (inserted) b.members.push_back(doc);
        return it->second;
    };
    for (int c : centers) add(c);

    std::vector<int> partner(centers.size(), -1);
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const auto& nbrs = adjacency_[static_cast<std::size_t>(centers[i])];
        if (nbrs.empty()) {
            b.positive.push_back(-1);
            continue;
        }
        std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
        partner[i] = nbrs[pick(rng_)];
        b.positive.push_back(add(partner[i]));
    }

    // Attention neighborhoods of the centers; the positive partner is held out
    // of the center's message passing.
    std::vector<std::vector<int>> center_nbrs(centers.size());
    for (std::size_t i = 0; i < centers.size(); ++i) {
        std::vector<int> pool;
        for (int j : adjacency_[static_cast<std::size_t>(centers[i])]) {
            if (j != partner[i]) pool.push_back(j);
        }
        for (int j : sample_without_replacement(pool, static_cast<std::size_t>(config_.max_neighbors), rng_)) {
            center_nbrs[i].push_back(add(j));
        }
    }

    // Non-center members attend to adjacent members, except a center whose
    // positive they are.
    b.neighbors.assign(b.members.size(), {});
    for (std::size_t i = 0; i < centers.size(); ++i) b.neighbors[i] = center_nbrs[i];
    for (std::size_t k = centers.size(); k < b.members.size(); ++k) {
        std::vector<int> pool;
        const auto& nbrs = adjacency_[static_cast<std::size_t>(b.members[k])];
        for (std::size_t q = 0; q < b.members.size(); ++q) {
            if (q == k) continue;
            if (!std::binary_search(nbrs.begin(), nbrs.end(), b.members[q])) continue;
            if (q < centers.size() && partner[q] == b.members[k]) continue;
            pool.push_back(static_cast<int>(q));
        }
        b.neighbors[k] = sample_without_replacement(pool, static_cast<std::size_t>(config_.max_neighbors), rng_);
        std::sort(b.neighbors[k].begin(), b.neighbors[k].end());
    }

    b.negatives.assign(centers.size(), {});
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const auto& nbrs = adjacency_[static_cast<std::size_t>(centers[i])];
        for (std::size_t j = 0; j < centers.size(); ++j) {
            if (j == i || std::binary_search(nbrs.begin(), nbrs.end(), centers[j])) continue;
            b.negatives[i].push_back(static_cast<int>(j));
        }
    }
    return b;
}

Trainer::StepResult Trainer::forward_backward(const Batch& batch, bool with_grad) {
    ad::Tape tape(with_grad);
    const BoundParams p = model_.bind(tape);
    const Manifold& m = model_.manifold();

    DocGroup group;
    for (int doc : batch.members) {
        const auto& toks = graph_.docs[static_cast<std::size_t>(doc)].tokens;
        group.tokens.emplace_back(toks.data(), toks.size());
    }
    group.neighbors = batch.neighbors;
    const GroupEncoding enc = model_.encode(p, group);

    const auto C = static_cast<Eigen::Index>(batch.centers);
    std::vector<int> center_docs(batch.members.begin(), batch.members.begin() + C);
    const Var theta = ad::slice_rows(enc.dist.theta, 0, C);

    StepResult r{};
    r.theta = theta.value();
    for (int d : center_docs) r.words += graph_.docs[static_cast<std::size_t>(d)].length;

    LossParts parts;
    const Var beta = topic_word_distribution(m, enc.topics, p.decoder);
    const Var topic_sum = topic_loss(reconstruct(beta, theta), count_matrix(graph_, center_docs, model_.vocab_size()));
    r.topic = topic_sum.scalar();
    parts.topic = ad::scale(topic_sum, 1.0 / static_cast<double>(C));

    std::vector<Var> pair_losses;
    for (std::size_t i = 0; i < batch.centers; ++i) {
        if (batch.positive[i] < 0) continue;
        const Var anchor = ad::slice_rows(enc.docs, static_cast<Eigen::Index>(i), 1);
        const Var pos = ad::slice_rows(enc.docs, batch.positive[i], 1);
        Var neg;
        if (!batch.negatives[i].empty()) neg = ad::gather_rows(enc.docs, batch.negatives[i]);
        pair_losses.push_back(graph_loss(m, anchor, pos, neg, config_.tau));
    }
    r.pairs = static_cast<int>(pair_losses.size());
    if (!pair_losses.empty()) {
        parts.graph = ad::scale(ad::sum(ad::concat_rows(pair_losses)), 1.0 / static_cast<double>(pair_losses.size()));
        r.graph = parts.graph.scalar() * static_cast<double>(pair_losses.size());
    }

    if (config_.weights.supervised) {
        std::vector<int> rows, labels;
        for (std::size_t i = 0; i < batch.centers; ++i) {
            const int y = graph_.labels[static_cast<std::size_t>(center_docs[i])];
            if (y < 0) continue;
            rows.push_back(static_cast<int>(i));
            labels.push_back(y);
        }
        r.labeled = static_cast<int>(rows.size());
        if (!rows.empty()) {
            const Var sup = supervised_loss(m, ad::gather_rows(enc.docs, rows), labels, p.classifier);
            r.sup = sup.scalar();
            parts.sup = ad::scale(sup, 1.0 / static_cast<double>(rows.size()));
        }
    }

    if (!std::isfinite(r.topic)) throw NumericalError("non-finite topic loss");
    if (!std::isfinite(r.graph)) throw NumericalError("non-finite graph loss");
    if (!std::isfinite(r.sup)) throw NumericalError("non-finite supervised loss");

    const Var total = total_loss(parts, config_.weights);
    r.loss = total.scalar();
    if (!std::isfinite(r.loss)) throw NumericalError("non-finite total loss");
    if (with_grad) tape.backward(total);
    return r;
}

EpochStats Trainer::run_epoch() {
    EpochStats stats;
    stats.epoch = epoch() + 1;
    std::vector<int> order = train_docs_;
    std::shuffle(order.begin(), order.end(), rng_);

    const auto T = static_cast<Eigen::Index>(model_.layout().topics);
    Eigen::MatrixXd theta(static_cast<Eigen::Index>(order.size()), T);
    std::vector<double> lengths;
    lengths.reserve(order.size());

    double loss_sum = 0, graph_sum = 0, topic_sum = 0, sup_sum = 0;
    long pairs = 0, labeled = 0, words = 0;
    int batches = 0;
    Eigen::Index row = 0;
    const auto bs = static_cast<std::size_t>(config_.batch_size);
    for (std::size_t start = 0; start < order.size(); start += bs) {
        const std::vector<int> centers(order.begin() + static_cast<std::ptrdiff_t>(start),
                                       order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + bs)));
        const Batch batch = make_batch(centers);
        model_.params().zero_grad();
        StepResult r;
        try {
            r = forward_backward(batch);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " at epoch " + std::to_string(stats.epoch) + ", batch " +
                                 std::to_string(batches + 1));
        }
        for (const auto& p : model_.params().all()) {
            if (!p.grad.allFinite()) {
                throw NumericalError("non-finite gradient for '" + p.name + "' at epoch " + std::to_string(stats.epoch));
            }
        }
        adam_.step(model_.params());

        theta.middleRows(row, r.theta.rows()) = r.theta;
        row += r.theta.rows();
        for (int d : centers) lengths.push_back(graph_.docs[static_cast<std::size_t>(d)].length);
        loss_sum += r.loss;
        graph_sum += r.graph;
        topic_sum += r.topic;
        sup_sum += r.sup;
        pairs += r.pairs;
        labeled += r.labeled;
        words += r.words;
        ++batches;
    }

    stats.loss = batches ? loss_sum / batches : 0.0;
    stats.graph_loss = pairs ? graph_sum / static_cast<double>(pairs) : 0.0;
    stats.topic_loss = topic_sum / static_cast<double>(order.size());
    stats.sup_loss = labeled ? sup_sum / static_cast<double>(labeled) : 0.0;
    stats.nll_per_word = words ? topic_sum / static_cast<double>(words) : 0.0;

    if (!config_.fixed_tree && words > 0) {
        TopicTree tree = model_.tree();
        const std::vector<double> mass = topic_word_mass(theta, lengths);
        stats.changes = update_tree(tree, mass, config_.s_add, config_.s_prune);
        if (!stats.changes.empty()) model_.set_tree(std::move(tree));
    }
    stats.topics = model_.layout().topics;
    history_.push_back(stats);
    return stats;
}

}  // namespace hypertopic
