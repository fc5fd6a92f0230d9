#include "hypertopic/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

namespace hypertopic {

namespace {

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

}  // namespace

PlantedCorpus make_two_level_corpus(const TwoLevelCorpusOptions& o) {
    if (o.docs < 1 || o.branches < 1 || o.subtopics < 1) throw std::invalid_argument("synthetic: bad shape");
    if (o.min_length < 1 || o.max_length < o.min_length) throw std::invalid_argument("synthetic: bad lengths");
    std::mt19937_64 rng(o.seed);
    std::vector<std::string> general;
    for (int w = 0; w < o.general_words; ++w) general.push_back("common" + std::to_string(w));
    std::vector<std::vector<std::string>> branch_vocab(static_cast<std::size_t>(o.branches));
    std::vector<std::vector<std::string>> sub_vocab(static_cast<std::size_t>(o.branches * o.subtopics));
    for (int b = 0; b < o.branches; ++b) {
        for (int w = 0; w < o.branch_words; ++w) {
            branch_vocab[static_cast<std::size_t>(b)].push_back("area" + std::to_string(b) + "x" + std::to_string(w));
        }
        for (int s = 0; s < o.subtopics; ++s) {
            const int g = b * o.subtopics + s;
            for (int w = 0; w < o.subtopic_words; ++w) {
                sub_vocab[static_cast<std::size_t>(g)].push_back("field" + std::to_string(g) + "x" + std::to_string(w));
            }
        }
    }

    PlantedCorpus out;
    std::vector<RawDocument> records;
    std::uniform_int_distribution<int> length(o.min_length, o.max_length);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto zipf = [&](std::size_t n) {
        std::vector<double> w(n);
        for (std::size_t r = 0; r < n; ++r) w[r] = 1.0 / std::pow(static_cast<double>(r + 1), o.zipf_exponent);
        return std::discrete_distribution<std::size_t>(w.begin(), w.end());
    };
    auto pick_general = zipf(general.size());
    auto pick_branch = zipf(static_cast<std::size_t>(o.branch_words));
    auto pick_sub = zipf(static_cast<std::size_t>(o.subtopic_words));
    const int groups = o.branches * o.subtopics;
    for (int i = 0; i < o.docs; ++i) {
        const int g = i % groups;
        const int b = g / o.subtopics;
        out.branch.push_back(b);
        out.subtopic.push_back(g);
        std::vector<std::string> words;
        const int len = length(rng);
        for (int k = 0; k < len; ++k) {
            const double u = unit(rng);
            if (u < o.general_share && !general.empty()) {
                words.push_back(general[pick_general(rng)]);
            } else if (u < o.general_share + o.branch_share && o.branch_words > 0) {
                words.push_back(branch_vocab[static_cast<std::size_t>(b)][pick_branch(rng)]);
            } else {
                words.push_back(sub_vocab[static_cast<std::size_t>(g)][pick_sub(rng)]);
            }
        }
        records.push_back({"doc" + std::to_string(i), "branch" + std::to_string(b), join(words)});
    }

    // Vocabulary in a fixed order covering every planned word, so unused words
    // still count towards |V|.
    std::vector<std::string> all = general;
    for (const auto& v : branch_vocab) all.insert(all.end(), v.begin(), v.end());
    for (const auto& v : sub_vocab) all.insert(all.end(), v.begin(), v.end());
    out.graph = make_graph(std::move(records), Vocabulary::from_words(all));

    std::vector<Edge> edges;
    for (int i = 0; i < o.docs; ++i) {
        for (int j = i + 1; j < o.docs; ++j) {
            const auto si = static_cast<std::size_t>(i), sj = static_cast<std::size_t>(j);
            if (out.branch[si] != out.branch[sj]) continue;
            const double p = out.subtopic[si] == out.subtopic[sj] ? o.p_same_subtopic : o.p_same_branch;
            if (unit(rng) < p) edges.emplace_back(i, j);
        }
    }
    out.graph.set_edges(edges);
    return out;
}

void write_citation_like(const std::string& docs_path, const std::string& edges_path, const CitationLikeOptions& o) {
    if (o.classes < 1 || o.docs < o.classes) throw std::invalid_argument("citation-like: bad shape");
    const long max_links = static_cast<long>(o.docs) * (o.docs - 1) / 2;
    if (o.links > max_links) throw std::invalid_argument("citation-like: too many links");
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> length(o.min_length, o.max_length);
    const int common = 120, per_class = 60;

    std::vector<int> label(static_cast<std::size_t>(o.docs));
    std::ofstream docs(docs_path, std::ios::binary);
    if (!docs) throw std::runtime_error("cannot write " + docs_path);
    for (int i = 0; i < o.docs; ++i) {
        const int c = i % o.classes;
        label[static_cast<std::size_t>(i)] = c;
        const int len = length(rng);
        std::string text;
        for (int k = 0; k < len; ++k) {
            std::string w;
            if (unit(rng) < 0.4) {
                // Zipf-like skew over the shared words.
                const int r = static_cast<int>(common * unit(rng) * unit(rng));
                w = "term" + std::to_string(r);
            } else {
                const int r = static_cast<int>(per_class * unit(rng));
                w = "c" + std::to_string(c) + "t" + std::to_string(r);
            }
            if (!text.empty()) text += (k % 11 == 0) ? ", " : " ";
            text += w;
        }
        docs << "p" << i << '\t' << "class" << c << '\t' << text << ".\n";
    }

    std::set<Edge> links;
    std::uniform_int_distribution<int> any(0, o.docs - 1);
    while (static_cast<int>(links.size()) < o.links) {
        const int a = any(rng);
        int b = any(rng);
        if (unit(rng) < 0.85) {
            // Same class: step to a document with the same residue.
            b = (b / o.classes) * o.classes + label[static_cast<std::size_t>(a)];
            if (b >= o.docs) continue;
        }
        if (a == b) continue;
        links.emplace(std::min(a, b), std::max(a, b));
    }

    std::vector<std::pair<int, int>> lines(links.begin(), links.end());
    std::vector<Edge> as_vec(links.begin(), links.end());
    for (int k = 0; k < o.duplicate_lines; ++k) {
        std::uniform_int_distribution<std::size_t> pick(0, as_vec.size() - 1);
        const Edge e = as_vec[pick(rng)];
        lines.emplace_back(e.second, e.first);
    }
    for (int k = 0; k < o.self_loops; ++k) {
        const int a = any(rng);
        lines.emplace_back(a, a);
    }
    std::shuffle(lines.begin(), lines.end(), rng);
    std::ofstream edges(edges_path, std::ios::binary);
    if (!edges) throw std::runtime_error("cannot write " + edges_path);
    edges << "# cited citing\n";
    for (auto [a, b] : lines) edges << 'p' << a << ' ' << 'p' << b << '\n';
}

}  // namespace hypertopic
