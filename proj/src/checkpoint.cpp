#include "hypertopic/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hypertopic/config.hpp"

namespace hypertopic {

namespace {

constexpr char kMagic[8] = {'H', 'Y', 'P', 'T', 'O', 'P', 'C', '\0'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

nlohmann::ordered_json model_json(const ModelConfig& c) {
    nlohmann::ordered_json j;
    j["dim"] = c.dim;
    j["layers"] = c.layers;
    j["heads"] = c.heads;
    j["tree_levels"] = c.tree_levels;
    j["tree_branching"] = c.tree_branching;
    j["curvature"] = c.curvature;
    j["max_len"] = c.max_len;
    j["euclidean"] = c.space == Space::euclidean;
    j["tree_injection"] = c.tree_injection;
    j["graph_injection"] = c.graph_injection;
    j["num_labels"] = c.num_labels;
    return j;
}

ModelConfig model_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.dim = j.at("dim").get<int>();
    c.layers = j.at("layers").get<int>();
    c.heads = j.at("heads").get<int>();
    c.tree_levels = j.at("tree_levels").get<int>();
    c.tree_branching = j.at("tree_branching").get<int>();
    c.curvature = j.at("curvature").get<double>();
    c.max_len = j.at("max_len").get<int>();
    c.space = j.at("euclidean").get<bool>() ? Space::euclidean : Space::hyperbolic;
    c.tree_injection = j.at("tree_injection").get<bool>();
    c.graph_injection = j.at("graph_injection").get<bool>();
    c.num_labels = j.at("num_labels").get<int>();
    return c;
}

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw DataError("truncated checkpoint", path);
    return v;
}

}  // namespace

std::uint64_t model_config_hash(const ModelConfig& config) { return fnv1a(model_json(config).dump()); }

void save_checkpoint(const std::string& path, const Model& model, const Vocabulary& vocab,
                     const std::vector<std::string>& label_names, const std::string& run_config, int epoch) {
    nlohmann::ordered_json h;
    h["model"] = model_json(model.config());
    h["config_hash"] = model_config_hash(model.config());
    h["epoch"] = epoch;
    const TopicTree& tree = model.tree();
    nlohmann::ordered_json t;
    t["depth"] = tree.depth();
    t["root"] = tree.root();
    t["next_id"] = tree.next_id();
    auto nodes = nlohmann::ordered_json::array();
    for (int id : tree.bfs_order()) {
        const TopicNode& n = tree.node(id);
        nodes.push_back({{"id", n.id},
                         {"level", n.level},
                         {"parent", n.parent ? nlohmann::ordered_json(*n.parent) : nlohmann::ordered_json()},
                         {"children", n.children}});
    }
    t["nodes"] = nodes;
    h["tree"] = t;
    h["vocab"] = vocab.words;
    h["labels"] = label_names;
    h["run_config"] = run_config;
    auto names = nlohmann::ordered_json::array();
    for (const auto& p : model.params().all()) names.push_back(p.name);
    h["tensors"] = names;
    const std::string header = h.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint", path);
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, header.size());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& p : model.params().all()) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.rows()));
        put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.cols()));
        out.write(reinterpret_cast<const char*>(p.value.data()), static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    }
    if (!out) throw DataError("failed writing checkpoint", path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint", path);
    char magic[8];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
        throw DataError("not a checkpoint file", path);
    }
    const auto version = get<std::uint32_t>(in, path);
    if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version), path);
    const auto header_size = get<std::uint64_t>(in, path);
    if (header_size > (1ull << 32)) throw DataError("corrupt checkpoint header", path);
    std::string header(header_size, '\0');
    if (!in.read(header.data(), static_cast<std::streamsize>(header_size))) throw DataError("truncated checkpoint", path);

    try {
        const nlohmann::json h = nlohmann::json::parse(header);
        const ModelConfig mc = model_from_json(h.at("model"));
        const auto hash = h.at("config_hash").get<std::uint64_t>();
        if (hash != model_config_hash(mc)) throw DataError("checkpoint config hash mismatch", path);

        const auto& t = h.at("tree");
        std::vector<TopicNode> nodes;
        for (const auto& n : t.at("nodes")) {
            TopicNode node;
            node.id = n.at("id").get<int>();
            node.level = n.at("level").get<int>();
            if (!n.at("parent").is_null()) node.parent = n.at("parent").get<int>();
            node.children = n.at("children").get<std::vector<int>>();
            nodes.push_back(std::move(node));
        }
        TopicTree tree = TopicTree::restore(t.at("depth").get<int>(), t.at("root").get<int>(), t.at("next_id").get<int>(), nodes);

        Vocabulary vocab = Vocabulary::from_words(h.at("vocab").get<std::vector<std::string>>());
        ad::ParameterStore params;
        const auto names = h.at("tensors").get<std::vector<std::string>>();
        for (const auto& expected : names) {
            const auto len = get<std::uint32_t>(in, path);
            std::string name(len, '\0');
            if (!in.read(name.data(), len)) throw DataError("truncated checkpoint", path);
            if (name != expected) throw DataError("tensor order mismatch at '" + name + "'", path);
            const auto rows = get<std::uint64_t>(in, path);
            const auto cols = get<std::uint64_t>(in, path);
            if (rows > (1ull << 28) || cols > (1ull << 28)) throw DataError("corrupt tensor shape", path);
            ad::Matrix value(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
            if (!in.read(reinterpret_cast<char*>(value.data()), static_cast<std::streamsize>(rows * cols * sizeof(double)))) {
                throw DataError("truncated tensor '" + name + "'", path);
            }
            params.add(name, std::move(value));
        }
        if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes in checkpoint", path);

        Checkpoint ck{Model(mc, vocab.size(), std::move(params), std::move(tree)), std::move(vocab),
                      h.at("run_config").get<std::string>(), h.at("labels").get<std::vector<std::string>>(),
                      h.at("epoch").get<int>(), hash};
        return ck;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad checkpoint header: ") + e.what(), path);
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("bad checkpoint: ") + e.what(), path);
    } catch (const std::logic_error& e) {
        throw DataError(std::string("bad checkpoint: ") + e.what(), path);
    }
}

}  // namespace hypertopic
