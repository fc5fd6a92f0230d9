#include "hypertopic/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "hypertopic/kernels.hpp"

namespace hypertopic {

namespace {

std::string where(const std::string& file, std::size_t line) {
    if (file.empty()) return {};
    return line ? file + ":" + std::to_string(line) + ": " : file + ": ";
}

bool is_punct(unsigned char c) { return std::ispunct(c) != 0; }

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace

DataError::DataError(const std::string& what, std::string file, std::size_t line)
    : std::runtime_error(where(file, line) + what), file_(std::move(file)), line_(line) {}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        std::size_t b = i, e = j;
        while (b < e && is_punct(static_cast<unsigned char>(text[b]))) ++b;
        while (e > b && is_punct(static_cast<unsigned char>(text[e - 1]))) --e;
        if (e > b) {
            std::string tok(text.substr(b, e - b));
            for (char& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            out.push_back(std::move(tok));
        }
        i = j;
    }
    return out;
}

int Vocabulary::find(const std::string& word) const {
    const auto it = index.find(word);
    return it == index.end() ? -1 : it->second;
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
    Vocabulary v;
    v.words = std::move(words);
    for (std::size_t i = 0; i < v.words.size(); ++i) {
        if (!v.index.emplace(v.words[i], static_cast<int>(i)).second) {
            throw DataError("duplicate vocabulary word '" + v.words[i] + "'");
        }
    }
    return v;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& docs, const VocabOptions& options) {
    std::unordered_set<std::string> stop;
    for (const auto& w : options.stopwords) {
        for (auto& t : tokenize(w)) stop.insert(t);
    }
    std::unordered_map<std::string, long> freq;
    for (const auto& doc : docs) {
        for (const auto& w : doc) {
            if (!stop.count(w)) ++freq[w];
        }
    }
    std::vector<std::pair<std::string, long>> ranked;
    for (auto& [w, c] : freq) {
        if (c >= options.min_count) ranked.emplace_back(w, c);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (options.max_vocab > 0 && ranked.size() > static_cast<std::size_t>(options.max_vocab)) {
        ranked.resize(static_cast<std::size_t>(options.max_vocab));
    }
    std::vector<std::string> words;
    words.reserve(ranked.size());
    for (auto& [w, c] : ranked) words.push_back(w);
    return Vocabulary::from_words(std::move(words));
}

bool DocumentGraph::has_labels() const {
    return std::any_of(labels.begin(), labels.end(), [](int l) { return l >= 0; });
}

int DocumentGraph::find(const std::string& id) const {
    const auto it = id_index.find(id);
    return it == id_index.end() ? -1 : it->second;
}

void DocumentGraph::set_edges(const std::vector<Edge>& raw) {
    std::set<Edge> unique;
    std::size_t self_loops = 0;
    for (auto [a, b] : raw) {
        if (a < 0 || b < 0 || a >= size() || b >= size()) throw DataError("edge references an unknown document");
        if (a == b) {
            ++self_loops;
            continue;
        }
        unique.emplace(std::min(a, b), std::max(a, b));
    }
    if (self_loops) warnings.push_back("dropped " + std::to_string(self_loops) + " self-loop edge(s)");
    edges.assign(unique.begin(), unique.end());
    adjacency = adjacency_from(size(), edges);
}

std::vector<std::vector<int>> adjacency_from(int n, const std::vector<Edge>& edges) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (auto [a, b] : edges) {
        adj[static_cast<std::size_t>(a)].push_back(b);
        adj[static_cast<std::size_t>(b)].push_back(a);
    }
    for (auto& row : adj) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
    }
    return adj;
}

namespace {

DocumentGraph assemble(std::vector<RawDocument> records, Vocabulary vocab,
                       const std::vector<std::vector<std::string>>& tokens) {
    DocumentGraph g;
    g.vocab = std::move(vocab);
    std::set<std::string> label_set;
    for (const auto& r : records) {
        if (r.label) label_set.insert(*r.label);
    }
    g.label_names.assign(label_set.begin(), label_set.end());
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        Document d;
        d.id = std::move(records[i].id);
        d.label = std::move(records[i].label);
        d.text = std::move(records[i].text);
        std::map<int, int> counts;
        for (const auto& w : tokens[i]) {
            const int id = g.vocab.find(w);
            if (id < 0) continue;
            d.tokens.push_back(id);
            ++counts[id];
        }
        d.counts.assign(counts.begin(), counts.end());
        d.length = static_cast<int>(d.tokens.size());
        d.no_vocab_tokens = d.tokens.empty();
        if (d.no_vocab_tokens) ++flagged;
        if (!g.id_index.emplace(d.id, static_cast<int>(i)).second) throw DataError("duplicate document id '" + d.id + "'");
        int label = -1;
        if (d.label) {
            label = static_cast<int>(std::lower_bound(g.label_names.begin(), g.label_names.end(), *d.label) -
                                     g.label_names.begin());
        }
        g.labels.push_back(label);
        g.docs.push_back(std::move(d));
    }
    if (flagged) g.warnings.push_back(std::to_string(flagged) + " document(s) have no in-vocabulary tokens");
    g.adjacency.assign(g.docs.size(), {});
    return g;
}

std::vector<std::vector<std::string>> tokenize_all(const std::vector<RawDocument>& records) {
    std::vector<std::vector<std::string>> tokens;
    tokens.reserve(records.size());
    for (const auto& r : records) tokens.push_back(tokenize(r.text));
    return tokens;
}

}  // namespace

DocumentGraph make_graph(std::vector<RawDocument> records, const VocabOptions& options) {
    const auto tokens = tokenize_all(records);
    Vocabulary vocab = build_vocab(tokens, options);
    return assemble(std::move(records), std::move(vocab), tokens);
}

DocumentGraph make_graph(std::vector<RawDocument> records, const Vocabulary& vocab) {
    const auto tokens = tokenize_all(records);
    return assemble(std::move(records), vocab, tokens);
}

std::vector<RawDocument> read_documents(const std::string& docs_path) {
    std::ifstream in(docs_path);
    if (!in) throw DataError("cannot open documents file", docs_path);
    std::vector<RawDocument> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        RawDocument r;
        const std::string t = trim(line);
        if (t.front() == '{') {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(t);
            } catch (const nlohmann::json::exception& e) {
                throw DataError(std::string("invalid JSON: ") + e.what(), docs_path, lineno);
            }
            if (!j.contains("id") || !j.contains("text")) throw DataError("JSON record needs 'id' and 'text'", docs_path, lineno);
            try {
                r.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
                r.text = j["text"].get<std::string>();
                if (j.contains("label") && !j["label"].is_null()) {
                    r.label = j["label"].is_string() ? j["label"].get<std::string>() : j["label"].dump();
                }
            } catch (const nlohmann::json::exception& e) {
                throw DataError(std::string("bad field type: ") + e.what(), docs_path, lineno);
            }
        } else {
            std::vector<std::string> fields;
            std::size_t start = 0;
            while (true) {
                const std::size_t tab = line.find('\t', start);
                fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
                if (tab == std::string::npos) break;
                start = tab + 1;
            }
            if (fields.size() == 2) {
                r.id = trim(fields[0]);
                r.text = fields[1];
            } else if (fields.size() == 3) {
                r.id = trim(fields[0]);
                const std::string label = trim(fields[1]);
                if (!label.empty()) r.label = label;
                r.text = fields[2];
            } else {
                throw DataError("expected 2 or 3 tab-separated fields, got " + std::to_string(fields.size()), docs_path,
                                lineno);
            }
        }
        if (r.id.empty()) throw DataError("empty document id", docs_path, lineno);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> read_edge_ids(const std::string& edges_path) {
    std::ifstream in(edges_path);
    if (!in) throw DataError("cannot open edges file", edges_path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ss(line);
        std::string a, b, extra;
        if (!(ss >> a)) continue;
        if (!(ss >> b) || (ss >> extra)) throw DataError("expected exactly two ids", edges_path, lineno);
        out.emplace_back(a, b);
    }
    return out;
}

namespace {

DocumentGraph with_edges(DocumentGraph g, const std::string& edges_path) {
    if (edges_path.empty()) return g;
    std::vector<Edge> raw;
    for (const auto& [a, b] : read_edge_ids(edges_path)) {
        const int ia = g.find(a), ib = g.find(b);
        if (ia < 0 || ib < 0) throw DataError("edge references unknown id '" + (ia < 0 ? a : b) + "'", edges_path);
        raw.emplace_back(ia, ib);
    }
    g.set_edges(raw);
    return g;
}

}  // namespace

DocumentGraph load_corpus(const std::string& docs_path, const std::string& edges_path, const VocabOptions& options) {
    return with_edges(make_graph(read_documents(docs_path), options), edges_path);
}

DocumentGraph load_corpus(const std::string& docs_path, const std::string& edges_path, const Vocabulary& vocab) {
    return with_edges(make_graph(read_documents(docs_path), vocab), edges_path);
}

void save_corpus(const DocumentGraph& graph, const std::string& docs_path, const std::string& edges_path) {
    std::ofstream docs(docs_path, std::ios::binary);
    if (!docs) throw DataError("cannot write documents file", docs_path);
    for (const auto& d : graph.docs) {
        std::string text = d.text;
        std::replace(text.begin(), text.end(), '\t', ' ');
        std::replace(text.begin(), text.end(), '\n', ' ');
        docs << d.id << '\t' << d.label.value_or("") << '\t' << text << '\n';
    }
    std::ofstream edges(edges_path, std::ios::binary);
    if (!edges) throw DataError("cannot write edges file", edges_path);
    for (auto [a, b] : graph.edges) {
        edges << graph.docs[static_cast<std::size_t>(a)].id << ' ' << graph.docs[static_cast<std::size_t>(b)].id << '\n';
    }
}

std::vector<Edge> knn_edges(const DocumentGraph& graph, int kappa) {
    if (kappa < 1) throw std::invalid_argument("knn_edges: kappa must be >= 1");
    const auto rows = kernels::tfidf_rows(graph);
    const auto nearest = kernels::top_k_similar_parallel(rows, kappa);
    std::set<Edge> unique;
    for (std::size_t i = 0; i < nearest.size(); ++i) {
        for (int j : nearest[i]) {
            const int a = static_cast<int>(i);
            unique.emplace(std::min(a, j), std::max(a, j));
        }
    }
    return {unique.begin(), unique.end()};
}

Split split_documents(const DocumentGraph& graph, const SplitFractions& f, std::uint64_t seed) {
    if (f.train < 0 || f.validation < 0 || f.test < 0 || std::abs(f.train + f.validation + f.test - 1.0) > 1e-9) {
        throw std::invalid_argument("split fractions must be nonnegative and sum to 1");
    }
    const int n = graph.size();
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    for (int i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<int> pick(0, i);
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
    }
    const int n_train = static_cast<int>(std::lround(f.train * n));
    const int n_val = std::min(n - n_train, static_cast<int>(std::lround(f.validation * n)));
    Split s;
    s.role.assign(static_cast<std::size_t>(n), Role::test);
    for (int k = 0; k < n; ++k) {
        const int doc = order[static_cast<std::size_t>(k)];
        const Role r = k < n_train ? Role::train : (k < n_train + n_val ? Role::validation : Role::test);
        s.role[static_cast<std::size_t>(doc)] = r;
    }
    for (int i = 0; i < n; ++i) {
        switch (s.role[static_cast<std::size_t>(i)]) {
            case Role::train: s.train.push_back(i); break;
            case Role::validation: s.validation.push_back(i); break;
            case Role::test: s.test.push_back(i); break;
        }
    }
    return s;
}

EdgePartition partition_edges(const DocumentGraph& graph, const Split& split) {
    EdgePartition p;
    for (const Edge& e : graph.edges) {
        const Role a = split.role[static_cast<std::size_t>(e.first)];
        const Role b = split.role[static_cast<std::size_t>(e.second)];
        if (a != b) {
            p.cross.push_back(e);
        } else if (a == Role::train) {
            p.train.push_back(e);
        } else if (a == Role::validation) {
            p.validation.push_back(e);
        } else {
            p.test.push_back(e);
        }
    }
    return p;
}

}  // namespace hypertopic
