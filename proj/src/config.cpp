#include "hypertopic/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

namespace hypertopic {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

long long to_int(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto t = trim(v);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc() || ptr != t.data() + t.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    const auto t = trim(v);
    try {
        std::size_t used = 0;
        const double out = std::stod(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        return out;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    std::string t = trim(v);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto str = [&](const char* k, std::string RunConfig::*f) {
            t[k] = [f](RunConfig& c, const std::string&, const std::string& v) { c.*f = trim(v); };
        };
        str("docs", &RunConfig::docs);
        str("edges", &RunConfig::edges);
        str("output", &RunConfig::output);
        auto integer = [&](const char* k, auto get) {
            t[k] = [get](RunConfig& c, const std::string& key, const std::string& v) {
                get(c) = static_cast<std::remove_reference_t<decltype(get(c))>>(to_int(key, v));
            };
        };
        auto real = [&](const char* k, auto get) {
            t[k] = [get](RunConfig& c, const std::string& key, const std::string& v) { get(c) = to_double(key, v); };
        };
        auto flag = [&](const char* k, auto get) {
            t[k] = [get](RunConfig& c, const std::string& key, const std::string& v) { get(c) = to_bool(key, v); };
        };
        integer("dim", [](RunConfig& c) -> int& { return c.model.dim; });
        integer("layers", [](RunConfig& c) -> int& { return c.model.layers; });
        integer("heads", [](RunConfig& c) -> int& { return c.model.heads; });
        integer("tree_levels", [](RunConfig& c) -> int& { return c.model.tree_levels; });
        integer("tree_branching", [](RunConfig& c) -> int& { return c.model.tree_branching; });
        real("curvature", [](RunConfig& c) -> double& { return c.model.curvature; });
        integer("max_len", [](RunConfig& c) -> int& { return c.model.max_len; });
        flag("tree_injection", [](RunConfig& c) -> bool& { return c.model.tree_injection; });
        flag("graph_injection", [](RunConfig& c) -> bool& { return c.model.graph_injection; });
        real("lambda_topic", [](RunConfig& c) -> double& { return c.train.weights.lambda_topic; });
        real("lambda_sup", [](RunConfig& c) -> double& { return c.train.weights.lambda_sup; });
        flag("supervised", [](RunConfig& c) -> bool& { return c.train.weights.supervised; });
        real("tau", [](RunConfig& c) -> double& { return c.train.tau; });
        integer("batch_size", [](RunConfig& c) -> int& { return c.train.batch_size; });
        integer("max_neighbors", [](RunConfig& c) -> int& { return c.train.max_neighbors; });
        real("lr", [](RunConfig& c) -> double& { return c.train.lr; });
        real("beta1", [](RunConfig& c) -> double& { return c.train.beta1; });
        real("beta2", [](RunConfig& c) -> double& { return c.train.beta2; });
        integer("epochs", [](RunConfig& c) -> int& { return c.train.epochs; });
        integer("seed", [](RunConfig& c) -> std::uint64_t& { return c.train.seed; });
        real("s_add", [](RunConfig& c) -> double& { return c.train.s_add; });
        real("s_prune", [](RunConfig& c) -> double& { return c.train.s_prune; });
        flag("fixed_tree", [](RunConfig& c) -> bool& { return c.train.fixed_tree; });
        flag("flat_tree", [](RunConfig& c) -> bool& { return c.flat_tree; });
        integer("kappa", [](RunConfig& c) -> int& { return c.eval.kappa; });
        integer("top_k", [](RunConfig& c) -> int& { return c.eval.top_k; });
        integer("npmi_window", [](RunConfig& c) -> int& { return c.eval.npmi_window; });
        integer("eval_seed", [](RunConfig& c) -> std::uint64_t& { return c.eval.seed; });
        integer("min_count", [](RunConfig& c) -> int& { return c.vocab.min_count; });
        integer("max_vocab", [](RunConfig& c) -> int& { return c.vocab.max_vocab; });
        real("split_train", [](RunConfig& c) -> double& { return c.split.train; });
        real("split_validation", [](RunConfig& c) -> double& { return c.split.validation; });
        real("split_test", [](RunConfig& c) -> double& { return c.split.test; });
        integer("split_seed", [](RunConfig& c) -> std::uint64_t& { return c.split_seed; });
        integer("knn_kappa", [](RunConfig& c) -> int& { return c.knn_kappa; });
        t["euclidean"] = [](RunConfig& c, const std::string& key, const std::string& v) {
            c.model.space = to_bool(key, v) ? Space::euclidean : Space::hyperbolic;
        };
        t["stopwords"] = [](RunConfig& c, const std::string&, const std::string& v) {
            c.vocab.stopwords.clear();
            std::string item;
            std::istringstream ss(v);
            while (std::getline(ss, item, ',')) {
                item = trim(item);
                if (!item.empty()) c.vocab.stopwords.push_back(item);
            }
        };
        return t;
    }();
    return table;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto& table = setters();
    const auto it = table.find(trim(key));
    if (it == table.end()) throw ConfigError("unknown config key '" + trim(key) + "'");
    it->second(*this, it->first, value);
}

std::vector<std::string> RunConfig::keys() {
    std::vector<std::string> out;
    for (const auto& [k, v] : setters()) out.push_back(k);
    return out;
}

void RunConfig::load_text(const std::string& text, const std::string& origin) {
    const std::string body = trim(text);
    if (!body.empty() && body.front() == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(origin + ": invalid JSON: " + e.what());
        }
        for (auto it = j.begin(); it != j.end(); ++it) {
            const auto& v = it.value();
            std::string s;
            if (v.is_string()) {
                s = v.get<std::string>();
            } else if (v.is_array()) {
                for (const auto& item : v) {
                    if (!item.is_string()) throw ConfigError(origin + ": " + it.key() + ": array items must be strings");
                    if (!s.empty()) s += ',';
                    s += item.get<std::string>();
                }
            } else if (v.is_boolean() || v.is_number()) {
                s = v.dump();
            } else {
                throw ConfigError(origin + ": " + it.key() + ": unsupported value type");
            }
            try {
                set(it.key(), s);
            } catch (const ConfigError& e) {
                throw ConfigError(origin + ": " + e.what());
            }
        }
        return;
    }
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
        try {
            set(line.substr(0, eq), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    load_text(ss.str(), path);
}

void RunConfig::finalize() {
    if (flat_tree) {
        model.tree_levels = 2;
        model.tree_branching = 12;
    }
    try {
        model.validate();
        train.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (split.train < 0 || split.validation < 0 || split.test < 0 ||
        std::abs(split.train + split.validation + split.test - 1.0) > 1e-9) {
        throw ConfigError("split fractions must be nonnegative and sum to 1");
    }
    if (eval.kappa < 1) throw ConfigError("kappa must be >= 1");
    if (eval.top_k < 2) throw ConfigError("top_k must be >= 2");
    if (eval.npmi_window < 0) throw ConfigError("npmi_window must be >= 0");
    if (vocab.min_count < 1) throw ConfigError("min_count must be >= 1");
    if (vocab.max_vocab < 0) throw ConfigError("max_vocab must be >= 0");
    if (knn_kappa < 0) throw ConfigError("knn_kappa must be >= 0");
}

std::string RunConfig::to_json() const {
    nlohmann::ordered_json j;
    j["docs"] = docs;
    j["edges"] = edges;
    j["output"] = output;
    j["dim"] = model.dim;
    j["layers"] = model.layers;
    j["heads"] = model.heads;
    j["tree_levels"] = model.tree_levels;
    j["tree_branching"] = model.tree_branching;
    j["curvature"] = model.curvature;
    j["max_len"] = model.max_len;
    j["euclidean"] = model.space == Space::euclidean;
    j["tree_injection"] = model.tree_injection;
    j["graph_injection"] = model.graph_injection;
    j["flat_tree"] = flat_tree;
    j["lambda_topic"] = train.weights.lambda_topic;
    j["lambda_sup"] = train.weights.lambda_sup;
    j["supervised"] = train.weights.supervised;
    j["tau"] = train.tau;
    j["batch_size"] = train.batch_size;
    j["max_neighbors"] = train.max_neighbors;
    j["lr"] = train.lr;
    j["beta1"] = train.beta1;
    j["beta2"] = train.beta2;
    j["epochs"] = train.epochs;
    j["seed"] = train.seed;
    j["s_add"] = train.s_add;
    j["s_prune"] = train.s_prune;
    j["fixed_tree"] = train.fixed_tree;
    j["kappa"] = eval.kappa;
    j["top_k"] = eval.top_k;
    j["npmi_window"] = eval.npmi_window;
    j["eval_seed"] = eval.seed;
    j["min_count"] = vocab.min_count;
    j["max_vocab"] = vocab.max_vocab;
    j["stopwords"] = vocab.stopwords;
    j["split_train"] = split.train;
    j["split_validation"] = split.validation;
    j["split_test"] = split.test;
    j["split_seed"] = split_seed;
    j["knn_kappa"] = knn_kappa;
    return j.dump(2) + "\n";
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace hypertopic
