#include "hypertopic/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "hypertopic/kernels.hpp"
#include "hypertopic/model.hpp"
#include "hypertopic/objective.hpp"

namespace hypertopic {

using ad::Matrix;

std::vector<int> knn_classify(const Manifold& m, const Matrix& train, const std::vector<int>& train_labels,
                              const Matrix& test, int kappa) {
    if (kappa < 1) throw std::invalid_argument("knn_classify: kappa must be >= 1");
    if (train.rows() == 0) throw std::invalid_argument("knn_classify: no training points");
    if (static_cast<Eigen::Index>(train_labels.size()) != train.rows()) {
        throw std::invalid_argument("knn_classify: one label per training point expected");
    }
    const Matrix dist = kernels::pairwise_sqdist_parallel(m, test, train);
    const auto k = std::min<Eigen::Index>(kappa, train.rows());
    std::vector<int> pred(static_cast<std::size_t>(test.rows()));
    std::vector<int> order(static_cast<std::size_t>(train.rows()));
    for (Eigen::Index i = 0; i < test.rows(); ++i) {
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
            return dist(i, a) != dist(i, b) ? dist(i, a) < dist(i, b) : a < b;
        });
        std::map<int, std::pair<int, double>> votes;  // label -> (count, summed distance)
        for (Eigen::Index r = 0; r < k; ++r) {
            const int j = order[static_cast<std::size_t>(r)];
            auto& v = votes[train_labels[static_cast<std::size_t>(j)]];
            ++v.first;
            v.second += std::sqrt(std::max(0.0, dist(i, j)));
        }
        int best = -1;
        int best_count = 0;
        double best_mean = 0;
        for (const auto& [label, v] : votes) {
            const double mean = v.second / v.first;
            if (best < 0 || v.first > best_count || (v.first == best_count && mean < best_mean)) {
                best = label;
                best_count = v.first;
                best_mean = mean;
            }
        }
        pred[static_cast<std::size_t>(i)] = best;
    }
    return pred;
}

F1Scores f1_scores(const std::vector<int>& pred, const std::vector<int>& gold) {
    if (pred.size() != gold.size()) throw std::invalid_argument("f1_scores: length mismatch");
    if (pred.empty()) throw std::invalid_argument("f1_scores: empty input");
    std::set<int> classes(gold.begin(), gold.end());
    classes.insert(pred.begin(), pred.end());
    long tp_all = 0, fp_all = 0, fn_all = 0;
    double macro = 0;
    for (int c : classes) {
        long tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pred[i] == c && gold[i] == c) ++tp;
            else if (pred[i] == c) ++fp;
            else if (gold[i] == c) ++fn;
        }
        tp_all += tp;
        fp_all += fp;
        fn_all += fn;
        const double denom = 2.0 * tp + fp + fn;
        macro += denom > 0 ? 2.0 * tp / denom : 0.0;
    }
    F1Scores s;
    s.macro = macro / static_cast<double>(classes.size());
    const double denom = 2.0 * tp_all + fp_all + fn_all;
    s.micro = denom > 0 ? 2.0 * tp_all / denom : 0.0;
    return s;
}

WindowReference::WindowReference(const std::vector<std::vector<int>>& docs, int vocab_size, int window,
                                 double smoothing)
    : occurs_(static_cast<std::size_t>(vocab_size)), smoothing_(smoothing) {
    if (window < 0) throw std::invalid_argument("WindowReference: window must be >= 0");
    if (smoothing < 0) throw std::invalid_argument("WindowReference: smoothing must be >= 0");
    std::vector<int> seen;
    for (const auto& doc : docs) {
        if (doc.empty()) continue;
        const std::size_t width = window == 0 ? doc.size() : std::min(doc.size(), static_cast<std::size_t>(window));
        const std::size_t count = doc.size() - width + 1;
        for (std::size_t s = 0; s < count; ++s) {
            seen.assign(doc.begin() + static_cast<std::ptrdiff_t>(s), doc.begin() + static_cast<std::ptrdiff_t>(s + width));
            std::sort(seen.begin(), seen.end());
            seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
            for (int w : seen) {
                if (w < 0 || w >= vocab_size) throw std::out_of_range("WindowReference: token outside vocabulary");
                occurs_[static_cast<std::size_t>(w)].push_back(windows_);
            }
            ++windows_;
        }
    }
}

double WindowReference::prob(int w) const {
    const double n = static_cast<double>(occurs_.at(static_cast<std::size_t>(w)).size());
    return (n + smoothing_) / (static_cast<double>(windows_) + smoothing_);
}

double WindowReference::joint(int a, int b) const {
    const auto& x = occurs_.at(static_cast<std::size_t>(a));
    const auto& y = occurs_.at(static_cast<std::size_t>(b));
    long both = 0;
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        if (x[i] < y[j]) ++i;
        else if (y[j] < x[i]) ++j;
        else {
            ++both;
            ++i;
            ++j;
        }
    }
    return (static_cast<double>(both) + smoothing_) / (static_cast<double>(windows_) + smoothing_);
}

double npmi_pair(const CooccurrenceReference& ref, int a, int b) {
    const double pab = ref.joint(a, b);
    const double pa = ref.prob(a), pb = ref.prob(b);
    if (pab <= 0) return -1.0;
    if (pab >= 1.0) return 1.0;
    return std::log(pab / (pa * pb)) / -std::log(pab);
}

double npmi(const std::vector<std::vector<int>>& topic_words, const CooccurrenceReference& ref) {
    double total = 0;
    int topics = 0;
    for (const auto& words : topic_words) {
        if (words.size() < 2) continue;
        double sum = 0;
        int pairs = 0;
        for (std::size_t i = 0; i < words.size(); ++i) {
            for (std::size_t j = i + 1; j < words.size(); ++j) {
                sum += npmi_pair(ref, words[i], words[j]);
                ++pairs;
            }
        }
        total += sum / pairs;
        ++topics;
    }
    return topics ? total / topics : 0.0;
}

double perplexity_exponent(const Matrix& d_hat, const Matrix& counts) {
    const double words = counts.sum();
    return words > 0 ? topic_loss_value(d_hat, counts) / words : 0.0;
}

double auc(const std::vector<double>& pos, const std::vector<double>& neg) {
    if (pos.empty() || neg.empty()) throw std::invalid_argument("auc: need positives and negatives");
    double wins = 0;
    for (double p : pos) {
        for (double n : neg) {
            if (p > n) wins += 1.0;
            else if (p == n) wins += 0.5;
        }
    }
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

std::vector<Edge> sample_non_edges(const std::vector<int>& docs, const std::vector<std::vector<int>>& adjacency,
                                   std::size_t count, std::uint64_t seed) {
    auto linked = [&](int a, int b) {
        const auto& row = adjacency[static_cast<std::size_t>(a)];
        return std::binary_search(row.begin(), row.end(), b);
    };
    const std::size_t n = docs.size();
    const std::size_t total_pairs = n < 2 ? 0 : n * (n - 1) / 2;
    std::set<Edge> chosen;
    if (total_pairs <= 4 * count) {
        std::vector<Edge> all;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const int a = std::min(docs[i], docs[j]), b = std::max(docs[i], docs[j]);
                if (!linked(a, b)) all.emplace_back(a, b);
            }
        }
        std::mt19937_64 rng(seed);
        std::shuffle(all.begin(), all.end(), rng);
        if (all.size() > count) all.resize(count);
        std::sort(all.begin(), all.end());
        return all;
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    while (chosen.size() < count) {
        const int x = docs[pick(rng)], y = docs[pick(rng)];
        if (x == y || linked(x, y)) continue;
        chosen.emplace(std::min(x, y), std::max(x, y));
    }
    return {chosen.begin(), chosen.end()};
}

double link_auc(const Manifold& m, const Matrix& embs, const std::vector<Edge>& positives,
                const std::vector<Edge>& negatives) {
    auto score = [&](const Edge& e) {
        const auto a = embs.row(e.first), b = embs.row(e.second);
        return -m.sqdist(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                         std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
    };
    std::vector<double> pos, neg;
    for (const auto& e : positives) pos.push_back(score(e));
    for (const auto& e : negatives) neg.push_back(score(e));
    return auc(pos, neg);
}

std::vector<std::vector<int>> top_words(const Matrix& beta, int k) {
    std::vector<std::vector<int>> out;
    const auto take = std::min<Eigen::Index>(k, beta.rows());
    std::vector<int> order(static_cast<std::size_t>(beta.rows()));
    for (Eigen::Index t = 0; t < beta.cols(); ++t) {
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + take, order.end(), [&](int a, int b) {
            return beta(a, t) != beta(b, t) ? beta(a, t) > beta(b, t) : a < b;
        });
        out.emplace_back(order.begin(), order.begin() + take);
    }
    return out;
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
    j["micro_f1"] = opt(micro_f1);
    j["macro_f1"] = opt(macro_f1);
    j["npmi"] = npmi;
    j["perplexity_exponent"] = perplexity_exponent;
    j["link_auc"] = opt(link_auc);
    j["test_docs"] = test_docs;
    j["test_edges"] = test_edges;
    auto topics = nlohmann::ordered_json::array();
    for (std::size_t t = 0; t < topic_words.size(); ++t) {
        topics.push_back({{"id", topic_ids.at(t)}, {"words", topic_words[t]}});
    }
    j["topics"] = topics;
    return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed;
    auto row = [&](const char* name, const std::optional<double>& v) {
        os << name << '\t';
        if (v) os << *v;
        else os << "n/a";
        os << '\n';
    };
    row("micro_f1", micro_f1);
    row("macro_f1", macro_f1);
    row("npmi", npmi);
    row("perplexity_exponent", perplexity_exponent);
    row("link_auc", link_auc);
    return os.str();
}

EvalReport evaluate(const Model& model, const DocumentGraph& graph, const Split& split, const EvalOptions& options) {
    if (graph.vocab.size() != model.vocab_size()) throw std::invalid_argument("evaluate: vocabulary size mismatch");
    EvalReport report;
    std::vector<std::span<const int>> tokens;
    tokens.reserve(graph.docs.size());
    for (const auto& d : graph.docs) tokens.emplace_back(d.tokens.data(), d.tokens.size());
    const kernels::Encoded enc = kernels::encode_isolated_parallel(model, tokens);
    if (!enc.docs.allFinite() || !enc.theta.allFinite()) throw NumericalError("non-finite document encoding");

    const Matrix beta = model.topic_word_matrix();
    const Manifold& m = model.manifold();
    report.test_docs = static_cast<int>(split.test.size());

    std::vector<int> train_l, test_l;
    std::vector<int> train_rows, test_rows;
    for (int d : split.train) {
        if (graph.labels[static_cast<std::size_t>(d)] >= 0) train_rows.push_back(d);
    }
    for (int d : split.test) {
        if (graph.labels[static_cast<std::size_t>(d)] >= 0) test_rows.push_back(d);
    }
    if (!train_rows.empty() && !test_rows.empty()) {
        Matrix tr(static_cast<Eigen::Index>(train_rows.size()), enc.docs.cols());
        Matrix te(static_cast<Eigen::Index>(test_rows.size()), enc.docs.cols());
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
            tr.row(static_cast<Eigen::Index>(i)) = enc.docs.row(train_rows[i]);
            train_l.push_back(graph.labels[static_cast<std::size_t>(train_rows[i])]);
        }
        for (std::size_t i = 0; i < test_rows.size(); ++i) {
            te.row(static_cast<Eigen::Index>(i)) = enc.docs.row(test_rows[i]);
            test_l.push_back(graph.labels[static_cast<std::size_t>(test_rows[i])]);
        }
        const F1Scores f = f1_scores(knn_classify(m, tr, train_l, te, options.kappa), test_l);
        report.micro_f1 = f.micro;
        report.macro_f1 = f.macro;
    }

    const auto tw = top_words(beta, options.top_k);
    std::vector<std::vector<int>> ref_docs;
    for (int d : split.train) ref_docs.push_back(graph.docs[static_cast<std::size_t>(d)].tokens);
    const WindowReference ref(ref_docs, graph.vocab.size(), options.npmi_window);
    report.npmi = npmi(tw, ref);
    report.topic_ids = model.layout().ids;
    for (const auto& words : tw) {
        std::vector<std::string> names;
        for (int w : words) names.push_back(graph.vocab.words[static_cast<std::size_t>(w)]);
        report.topic_words.push_back(std::move(names));
    }

    if (!split.test.empty()) {
        Matrix theta(static_cast<Eigen::Index>(split.test.size()), enc.theta.cols());
        for (std::size_t i = 0; i < split.test.size(); ++i) theta.row(static_cast<Eigen::Index>(i)) = enc.theta.row(split.test[i]);
        const Matrix d_hat = theta * beta.transpose();
        report.perplexity_exponent = perplexity_exponent(d_hat, count_matrix(graph, split.test, graph.vocab.size()));
    }

    const EdgePartition parts = partition_edges(graph, split);
    report.test_edges = static_cast<int>(parts.test.size());
    if (!parts.test.empty()) {
        const auto negatives = sample_non_edges(split.test, graph.adjacency, parts.test.size(), options.seed);
        if (!negatives.empty()) report.link_auc = link_auc(m, enc.docs, parts.test, negatives);
    }
    return report;
}

}  // namespace hypertopic
