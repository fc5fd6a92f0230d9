#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "hypertopic/checkpoint.hpp"
#include "hypertopic/config.hpp"
#include "hypertopic/eval.hpp"
#include "hypertopic/kernels.hpp"
#include "hypertopic/synthetic.hpp"

using namespace hypertopic;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, data_error = 3, numerical_error = 4 };

struct Common {
    std::string config_file;
    std::vector<std::string> overrides;  // key=value
    std::string output;
    std::string docs, edges;
};

struct Ablations {
    bool flat_tree = false, fixed_tree = false, euclidean = false;
    bool no_tree_injection = false, no_graph_injection = false, supervised = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config_file, "config file (JSON object or key=value lines)");
    cmd->add_option("-s,--set", c.overrides, "override one setting, key=value (repeatable)");
    cmd->add_option("-o,--output", c.output, "output directory (default: config 'output', or $HYPERTOPIC_OUTPUT)");
    cmd->add_option("--docs", c.docs, "documents file (TSV or JSON lines)");
    cmd->add_option("--edges", c.edges, "edge list file");
}

void add_ablations(CLI::App* cmd, Ablations& a) {
    cmd->add_flag("--flat-tree", a.flat_tree, "two-level tree: root plus 12 leaves");
    cmd->add_flag("--fixed-tree", a.fixed_tree, "never grow or prune the tree");
    cmd->add_flag("--euclidean", a.euclidean, "flat space instead of the hyperboloid");
    cmd->add_flag("--no-tree-injection", a.no_tree_injection, "drop the tree token from attention");
    cmd->add_flag("--no-graph-injection", a.no_graph_injection, "drop the graph token from attention");
    cmd->add_flag("--supervised", a.supervised, "add the label classifier loss");
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
}

// --output, then $HYPERTOPIC_OUTPUT, then the config.
void resolve_output(RunConfig& cfg, const std::string& flag) {
    if (!flag.empty()) {
        cfg.output = flag;
    } else if (const char* env = std::getenv("HYPERTOPIC_OUTPUT"); env && *env) {
        cfg.output = env;
    }
}

// Flags beat --set, which beats the config file.
RunConfig resolve(const Common& c, const Ablations* a) {
    RunConfig cfg;
    if (!c.config_file.empty()) cfg.load_file(c.config_file);
    apply_overrides(cfg, c.overrides);
    if (!c.docs.empty()) cfg.docs = c.docs;
    if (!c.edges.empty()) cfg.edges = c.edges;
    resolve_output(cfg, c.output);
    if (a) {
        if (a->flat_tree) cfg.flat_tree = true;
        if (a->fixed_tree) cfg.train.fixed_tree = true;
        if (a->euclidean) cfg.model.space = Space::euclidean;
        if (a->no_tree_injection) cfg.model.tree_injection = false;
        if (a->no_graph_injection) cfg.model.graph_injection = false;
        if (a->supervised) cfg.train.weights.supervised = true;
    }
    cfg.finalize();
    return cfg;
}

void set_threads() {
#ifdef _OPENMP
    if (const char* env = std::getenv("HYPERTOPIC_THREADS"); env && *env) {
        const int n = std::atoi(env);
        if (n < 1) throw ConfigError("HYPERTOPIC_THREADS must be a positive integer");
        omp_set_num_threads(n);
    } else {
        omp_set_num_threads(1);
    }
#endif
}

fs::path prepare_output(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory: " + ec.message(), dir);
    return fs::path(dir);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file", path.string());
    out << text;
    if (text.empty() || text.back() != '\n') out << '\n';
}

void echo_config(const fs::path& dir, const RunConfig& cfg) { write_text(dir / "config.json", cfg.to_json()); }

DocumentGraph load_graph(const RunConfig& cfg, const Vocabulary* vocab) {
    if (cfg.docs.empty()) throw ConfigError("no documents file: pass --docs or set 'docs'");
    DocumentGraph g = vocab ? load_corpus(cfg.docs, cfg.edges, *vocab) : load_corpus(cfg.docs, cfg.edges, cfg.vocab);
    if (cfg.edges.empty() && cfg.knn_kappa > 0) g.set_edges(knn_edges(g, cfg.knn_kappa));
    for (const auto& w : g.warnings) std::cerr << "warning: " << w << "\n";
    return g;
}

std::string change_line(int epoch, const TreeChange& c) {
    std::string nodes;
    for (int id : c.nodes) nodes += (nodes.empty() ? "" : ",") + std::to_string(id);
    return std::to_string(epoch) + '\t' + (c.kind == TreeChange::Kind::add ? "add" : "prune") + '\t' +
           std::to_string(c.node) + '\t' + std::to_string(c.parent) + '\t' + nodes + '\n';
}

std::string describe(const DocumentGraph& g, const Split& s, const EdgePartition& p) {
    return std::to_string(g.size()) + " documents, " + std::to_string(g.vocab.size()) + " words, " +
           std::to_string(g.edges.size()) + " edges; train " + std::to_string(s.train.size()) + " docs / " +
           std::to_string(p.train.size()) + " edges\n";
}

int cmd_train(const Common& common, const Ablations& ablations) {
    const RunConfig cfg = resolve(common, &ablations);
    const fs::path dir = prepare_output(cfg.output);
    echo_config(dir, cfg);
    const DocumentGraph graph = load_graph(cfg, nullptr);
    const Split split = split_documents(graph, cfg.split, cfg.split_seed);
    const EdgePartition parts = partition_edges(graph, split);
    ModelConfig mc = cfg.model;
    if (cfg.train.weights.supervised) {
        if (graph.num_labels() < 2) throw DataError("supervised training needs at least two labels", cfg.docs);
        mc.num_labels = graph.num_labels();
    }
    Model model(mc, graph.vocab.size(), cfg.train.seed);
    Trainer trainer(model, graph, split.train, parts.train, cfg.train);
    std::cerr << describe(graph, split, parts);

    std::ofstream epochs(dir / "epochs.tsv", std::ios::trunc);
    epochs << "epoch\tloss\tgraph_loss\ttopic_loss\tsup_loss\tnll_per_word\ttopics\n";
    std::ofstream changes(dir / "tree_changes.tsv", std::ios::trunc);
    changes << "epoch\tkind\tnode\tparent\tnodes\n";
    const std::string run_json = cfg.to_json();
    for (int e = 0; e < cfg.train.epochs; ++e) {
        const auto t0 = std::chrono::steady_clock::now();
        const EpochStats s = trainer.run_epoch();
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        epochs << s.epoch << '\t' << s.loss << '\t' << s.graph_loss << '\t' << s.topic_loss << '\t' << s.sup_loss << '\t'
               << s.nll_per_word << '\t' << s.topics << '\n'
               << std::flush;
        for (const auto& c : s.changes) changes << change_line(s.epoch, c);
        changes.flush();
        const std::string name = "checkpoint-epoch" + std::to_string(s.epoch) + ".bin";
        save_checkpoint((dir / name).string(), model, graph.vocab, graph.label_names, run_json, s.epoch);
        fs::copy_file(dir / name, dir / "checkpoint.bin", fs::copy_options::overwrite_existing);
        std::fprintf(stderr, "epoch %d  loss %.4f  graph %.4f  nll/word %.4f  topics %d  %.1fs\n", s.epoch, s.loss,
                     s.graph_loss, s.nll_per_word, s.topics, sec);
    }
    std::cout << (dir / "checkpoint.bin").string() << "\n";
    return ok;
}

int cmd_eval(const Common& common, const std::string& checkpoint) {
    Checkpoint ck = load_checkpoint(checkpoint);
    RunConfig cfg;
    if (!ck.run_config.empty()) cfg.load_text(ck.run_config, checkpoint);
    // command-line settings on top of the training run's
    if (!common.config_file.empty()) cfg.load_file(common.config_file);
    apply_overrides(cfg, common.overrides);
    if (!common.docs.empty()) cfg.docs = common.docs;
    if (!common.edges.empty()) cfg.edges = common.edges;
    resolve_output(cfg, common.output);
    cfg.finalize();
    const DocumentGraph graph = load_graph(cfg, &ck.vocab);
    const Split split = split_documents(graph, cfg.split, cfg.split_seed);
    const EvalReport report = evaluate(ck.model, graph, split, cfg.eval);
    const fs::path dir = prepare_output(cfg.output);
    echo_config(dir, cfg);
    write_text(dir / "eval.json", report.to_json());
    std::cout << report.to_table();
    return ok;
}

int cmd_infer(const Common& common, const std::string& checkpoint) {
    const Checkpoint ck = load_checkpoint(checkpoint);
    RunConfig cfg;
    if (!ck.run_config.empty()) cfg.load_text(ck.run_config, checkpoint);
    if (!common.docs.empty()) cfg.docs = common.docs;
    resolve_output(cfg, common.output);
    if (cfg.docs.empty()) throw ConfigError("no documents file: pass --docs");
    const DocumentGraph graph = make_graph(read_documents(cfg.docs), ck.vocab);
    std::vector<std::span<const int>> tokens;
    for (const auto& d : graph.docs) tokens.emplace_back(d.tokens);
    const kernels::Encoded enc = kernels::encode_isolated_parallel(ck.model, tokens);
    json out;
    out["topic_ids"] = ck.model.layout().ids;
    auto docs = json::array();
    for (std::size_t i = 0; i < graph.docs.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        std::vector<double> e(enc.docs.row(r).data(), enc.docs.row(r).data() + enc.docs.cols());
        std::vector<double> t(enc.theta.row(r).data(), enc.theta.row(r).data() + enc.theta.cols());
        docs.push_back({{"id", graph.docs[i].id}, {"embedding", e}, {"theta", t}});
    }
    out["documents"] = docs;
    const fs::path dir = prepare_output(cfg.output);
    echo_config(dir, cfg);
    write_text(dir / "infer.json", out.dump(1));
    std::cout << (dir / "infer.json").string() << "\n";
    return ok;
}

int cmd_export_tree(const Common& common, const std::string& checkpoint, int top_k) {
    if (top_k < 1) throw ConfigError("--top-k must be >= 1");
    const Checkpoint ck = load_checkpoint(checkpoint);
    RunConfig cfg;
    if (!ck.run_config.empty()) cfg.load_text(ck.run_config, checkpoint);
    resolve_output(cfg, common.output);
    const Model& model = ck.model;
    const auto words = top_words(model.topic_word_matrix(), top_k);
    const auto& ids = model.layout().ids;
    json out;
    out["depth"] = model.tree().depth();
    auto nodes = json::array();
    for (std::size_t k = 0; k < ids.size(); ++k) {
        const TopicNode& n = model.tree().node(ids[k]);
        std::vector<std::string> top;
        for (int w : words[k]) top.push_back(ck.vocab.words[static_cast<std::size_t>(w)]);
        nodes.push_back({{"id", n.id},
                         {"level", n.level},
                         {"parent", n.parent ? json(*n.parent) : json()},
                         {"children", n.children},
                         {"top_words", top}});
    }
    out["nodes"] = nodes;
    const fs::path dir = prepare_output(cfg.output);
    echo_config(dir, cfg);
    write_text(dir / "tree.json", out.dump(2));
    std::cout << out.dump(2) << "\n";
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical topic model over document graphs"};
    app.require_subcommand(1);

    Common common;
    Ablations ablations;
    std::string checkpoint;
    int top_k = 4;

    auto* train = app.add_subcommand("train", "train a model; writes checkpoints, epoch log and tree-change log");
    add_common(train, common);
    add_ablations(train, ablations);

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on its held-out split");
    add_common(eval, common);
    eval->add_option("checkpoint", checkpoint, "checkpoint file")->required();

    auto* infer = app.add_subcommand("infer", "embeddings and topic distributions for new documents");
    infer->add_option("checkpoint", checkpoint, "checkpoint file")->required();
    infer->add_option("--docs", common.docs, "documents file")->required();
    infer->add_option("-o,--output", common.output, "output directory");

    auto* tree = app.add_subcommand("export-tree", "topic tree with top words as JSON");
    tree->add_option("checkpoint", checkpoint, "checkpoint file")->required();
    tree->add_option("-k,--top-k", top_k, "words per topic")->capture_default_str();
    tree->add_option("-o,--output", common.output, "output directory");

    std::string docs_out = "docs.tsv", edges_out = "edges.txt";
    TwoLevelCorpusOptions synth;
    auto* gen_syn = app.add_subcommand("gen-synthetic", "write the planted two-level corpus");
    gen_syn->add_option("--docs-out", docs_out)->capture_default_str();
    gen_syn->add_option("--edges-out", edges_out)->capture_default_str();
    gen_syn->add_option("--num-docs", synth.docs)->capture_default_str();
    gen_syn->add_option("--seed", synth.seed)->capture_default_str();

    CitationLikeOptions cite;
    auto* gen_cite = app.add_subcommand("gen-citation", "write a citation-network-shaped corpus");
    gen_cite->add_option("--docs-out", docs_out)->capture_default_str();
    gen_cite->add_option("--edges-out", edges_out)->capture_default_str();
    gen_cite->add_option("--num-docs", cite.docs)->capture_default_str();
    gen_cite->add_option("--links", cite.links)->capture_default_str();
    gen_cite->add_option("--classes", cite.classes)->capture_default_str();
    gen_cite->add_option("--seed", cite.seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        set_threads();
        if (*train) return cmd_train(common, ablations);
        if (*eval) return cmd_eval(common, checkpoint);
        if (*infer) return cmd_infer(common, checkpoint);
        if (*tree) return cmd_export_tree(common, checkpoint, top_k);
        if (*gen_syn) {
            const PlantedCorpus pc = make_two_level_corpus(synth);
            save_corpus(pc.graph, docs_out, edges_out);
            return ok;
        }
        if (*gen_cite) {
            write_citation_like(docs_out, edges_out, cite);
            return ok;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return data_error;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return numerical_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failure;
    }
    return failure;
}
