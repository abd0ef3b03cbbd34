// Command-line surface: dataset conversion, training (neural and CRF
// baseline), evaluation tables/grids, and phrase parsing to structured output.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ingtag/ingtag.hpp"

namespace {

using namespace ingtag;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitCheckpoint = 4;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Relative paths fall back to $INGTAG_DATA_DIR when not found as given.
std::string resolve_data_path(const std::string& path) {
    namespace fs = std::filesystem;
    if (path.empty() || fs::exists(path) || fs::path(path).is_absolute()) return path;
    if (const char* root = std::getenv("INGTAG_DATA_DIR")) {
        fs::path candidate = fs::path(root) / path;
        if (fs::exists(candidate)) return candidate.string();
    }
    return path;
}

LabelAliasMap aliases_from_flags(const std::vector<std::string>& defs) {
    LabelAliasMap aliases;
    for (const std::string& def : defs) {
        auto eq = def.find('=');
        if (eq == std::string::npos)
            throw UsageError("--alias expects FROM=TO, got: " + def);
        const std::string from = def.substr(0, eq);
        const std::string to = def.substr(eq + 1);
        auto target = LabelAliasMap().resolve(to);
        if (!target) throw UsageError("--alias target is not a known label: " + to);
        aliases.add(from, *target);
    }
    return aliases;
}

std::size_t count_tokens(const std::vector<Phrase>& phrases) {
    std::size_t n = 0;
    for (const Phrase& p : phrases) n += p.size();
    return n;
}

// -----------------------------------------------------------------------
// convert

std::vector<Phrase> load_token_label(const std::string& path, const LabelAliasMap& aliases) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open corpus file: " + path);
    std::string line;
    long line_no = 0;
    // normalize to the 3-column layout, then reuse the canonical loader
    const std::string tmp =
        (std::filesystem::temp_directory_path() /
         ("ingtag_convert_" + std::to_string(::getpid()) + ".tsv")).string();
    std::ofstream out(tmp);
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') {
            out << line << '\n';
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
            throw CorpusError("expected 2 tab-separated columns", line_no);
        out << line.substr(0, tab) << "\t_\t" << line.substr(tab + 1) << '\n';
    }
    out.close();
    auto phrases = load_corpus(tmp, aliases);
    std::filesystem::remove(tmp);
    return phrases;
}

int cmd_convert(const std::string& input, const std::string& dialect, const std::string& output,
                const std::vector<std::string>& alias_defs) {
    const LabelAliasMap aliases = aliases_from_flags(alias_defs);
    std::vector<Phrase> phrases;
    if (dialect == "tsv") {
        phrases = load_corpus(resolve_data_path(input), aliases);
    } else if (dialect == "token-label") {
        phrases = load_token_label(resolve_data_path(input), aliases);
    } else {
        throw UsageError("unknown dialect \"" + dialect + "\" (supported: tsv, token-label)");
    }
    save_corpus(phrases, output);
    std::cout << "converted " << phrases.size() << " phrases, " << count_tokens(phrases)
              << " tokens -> " << output << "\n";
    return kExitOk;
}

// -----------------------------------------------------------------------
// train

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string config_echo(const Hyper& h) {
    std::string s = "config";
    s += " n_layers=" + std::to_string(h.n_layers);
    s += " learning_rate=" + format_double(h.learning_rate);
    s += " batch_size=" + std::to_string(h.batch_size);
    s += " dropout_rate=" + format_double(h.dropout_rate);
    s += " max_epochs=" + std::to_string(h.max_epochs);
    s += " patience=" + std::to_string(h.patience);
    s += " seed=" + std::to_string(h.seed);
    s += std::string(" score=") + score_kind_name(h.score);
    s += std::string(" residual=") + (h.residual ? "1" : "0");
    s += std::string(" positional=") + (h.positional ? "1" : "0");
    s += std::string(" use_qkv=") + (h.use_qkv ? "1" : "0");
    s += std::string(" ffn_relu=") + (h.ffn_relu ? "1" : "0");
    s += std::string(" tune_embeddings=") + (h.tune_embeddings ? "1" : "0");
    s += " dim=" + std::to_string(h.dim);
    s += " dev_fraction=" + format_double(h.dev_fraction);
    return s;
}

int cmd_train(const std::string& data_path, const std::string& emb_path,
              const std::string& out_path, const std::string& log_path, const Hyper& hyper,
              const std::vector<std::string>& alias_defs, bool baseline, int crf_epochs) {
    const LabelAliasMap aliases = aliases_from_flags(alias_defs);
    auto t0 = std::chrono::steady_clock::now();
    auto corpus = load_corpus(resolve_data_path(data_path), aliases);
    if (corpus.empty()) throw CorpusError("training corpus is empty: " + data_path);

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path, std::ios::app);
        if (!log) throw std::runtime_error("cannot open training log: " + log_path);
    }
    auto logln = [&](const std::string& line) {
        if (log.is_open()) log << line << '\n';
        std::cout << line << '\n';
    };

    if (baseline) {
        logln("# ingtag crf training log");
        logln("config epochs=" + std::to_string(crf_epochs) + " seed=" + std::to_string(hyper.seed));
        logln("data train=" + data_path + " phrases=" + std::to_string(corpus.size()) +
              " tokens=" + std::to_string(count_tokens(corpus)));
        CrfModel model = train_crf(corpus, crf_epochs, hyper.seed);
        save_crf_checkpoint(model, out_path);
        logln("features " + std::to_string(model.num_features()));
        logln("checkpoint " + out_path);
    } else {
        auto [train_set, dev_set] = split_train_dev(corpus, hyper.dev_fraction, hyper.seed);
        EmbeddingTable emb = load_embeddings(resolve_data_path(emb_path), hyper.dim, hyper.seed);
        logln("# ingtag training log");
        logln(config_echo(hyper));
        logln("data train=" + data_path + " train_phrases=" + std::to_string(train_set.size()) +
              " dev_phrases=" + std::to_string(dev_set.size()) +
              " tokens=" + std::to_string(count_tokens(corpus)));
        if (emb.skipped_lines() > 0)
            std::cerr << "note: skipped " << emb.skipped_lines() << " blank embedding lines\n";

        TrainResult result = train(train_set, dev_set, hyper, emb, aliases);
        for (const EpochRecord& r : result.log) {
            char line[160];
            if (r.dev_micro_f1 >= 0.0)
                std::snprintf(line, sizeof(line), "epoch %d loss=%.6f dev_f1=%.4f", r.epoch,
                              r.train_loss, r.dev_micro_f1);
            else
                std::snprintf(line, sizeof(line), "epoch %d loss=%.6f", r.epoch, r.train_loss);
            logln(line);
        }
        logln("best_epoch " + std::to_string(result.best_epoch));
        save_checkpoint(result.params, out_path);
        logln("checkpoint " + out_path);
    }
    auto t1 = std::chrono::steady_clock::now();
    std::cerr << "wall time: "
              << std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count() / 1000.0
              << "s\n";
    return kExitOk;
}

// -----------------------------------------------------------------------
// eval

Tagger make_neural_tagger(std::shared_ptr<ModelParams> model) {
    return [model](const Phrase& p) { return predict_labels(*model, p); };
}

Tagger make_crf_tagger(std::shared_ptr<CrfModel> model) {
    return [model](const Phrase& p) { return viterbi(*model, p); };
}

Tagger load_tagger(const std::string& checkpoint, bool baseline, const EmbeddingTable* emb) {
    if (baseline)
        return make_crf_tagger(std::make_shared<CrfModel>(load_crf_checkpoint(checkpoint)));
    return make_neural_tagger(
        std::make_shared<ModelParams>(load_checkpoint(checkpoint, emb)));
}

int cmd_eval(const std::vector<std::string>& checkpoints, const std::vector<std::string>& datas,
             bool grid, bool baseline, const std::string& emb_path, const std::string& kv_path,
             const std::vector<std::string>& alias_defs) {
    const LabelAliasMap aliases = aliases_from_flags(alias_defs);
    EmbeddingTable emb(300, 13);
    const EmbeddingTable* emb_ptr = nullptr;
    if (!emb_path.empty()) {
        std::size_t dim = 300;
        if (!baseline && !checkpoints.empty()) {
            // match the checkpoint's width
            dim = load_checkpoint(checkpoints[0]).hyper.dim;
        }
        emb = load_embeddings(resolve_data_path(emb_path), dim);
        emb_ptr = &emb;
    }

    if (grid) {
        if (checkpoints.size() != 3 || datas.size() != 3)
            throw UsageError("--grid needs exactly 3 --checkpoint and 3 --data");
        std::array<Tagger, 3> models;
        std::array<std::vector<Phrase>, 3> tests;
        std::array<std::string, 3> names;
        for (std::size_t i = 0; i < 3; ++i) {
            models[i] = load_tagger(checkpoints[i], baseline, emb_ptr);
            tests[i] = load_corpus(resolve_data_path(datas[i]), aliases);
            names[i] = std::filesystem::path(datas[i]).stem().string();
        }
        auto g = grid_evaluate(models, tests);
        std::cout << format_grid(g, names);
        return kExitOk;
    }

    if (checkpoints.size() != 1 || datas.size() != 1)
        throw UsageError("eval needs exactly one --checkpoint and one --data (or --grid)");
    auto test = load_corpus(resolve_data_path(datas[0]), aliases);
    for (std::size_t i = 0; i < test.size(); ++i)
        if (!test[i].labeled())
            throw CorpusError("test phrase " + std::to_string(i) + " is unlabeled");
    Tagger tagger = load_tagger(checkpoints[0], baseline, emb_ptr);
    MetricReport report = evaluate_tagger(tagger, test);
    std::cout << format_report(report);
    if (!kv_path.empty()) {
        if (kv_path == "-") {
            std::cout << format_report_kv(report);
        } else {
            std::ofstream kv(kv_path);
            if (!kv) throw std::runtime_error("cannot open kv output: " + kv_path);
            kv << format_report_kv(report);
        }
    }
    return kExitOk;
}

// -----------------------------------------------------------------------
// parse

json parse_result_to_json(const Phrase& phrase, const ParseResult& r) {
    json tokens = json::array();
    for (const auto& t : r.tokens)
        tokens.push_back(
            {{"surface", t.surface}, {"label", label_name(t.label)}, {"confidence", t.confidence}});
    json attributes = json::object();
    for (Label l : all_labels()) {
        if (l == Label::Others) continue;
        json spans = json::array();
        auto it = r.attributes.find(l);
        if (it != r.attributes.end())
            for (const std::string& s : it->second) spans.push_back(s);
        attributes[label_json_key(l)] = spans;
    }
    return json{{"phrase", phrase.raw}, {"tokens", tokens}, {"attributes", attributes}};
}

void print_parse_text(const Phrase& phrase, const ParseResult& r) {
    std::cout << phrase.raw << "\n";
    for (const auto& t : r.tokens) {
        char line[256];
        std::snprintf(line, sizeof(line), "  %-20s %-12s %.4f", t.surface.c_str(),
                      label_name(t.label), t.confidence);
        std::cout << line << "\n";
    }
    for (const auto& [label, spans] : r.attributes) {
        std::cout << "  " << label_display_name(label) << ":";
        for (const std::string& s : spans) std::cout << " [" << s << "]";
        std::cout << "\n";
    }
}

int cmd_parse(const std::string& checkpoint, const std::string& phrase_text,
              const std::string& file, bool as_json, const std::string& emb_path) {
    EmbeddingTable emb(300, 13);
    const EmbeddingTable* emb_ptr = nullptr;
    ModelParams model = [&] {
        if (!emb_path.empty()) {
            const std::size_t dim = load_checkpoint(checkpoint).hyper.dim;
            emb = load_embeddings(resolve_data_path(emb_path), dim);
            emb_ptr = &emb;
        }
        return load_checkpoint(checkpoint, emb_ptr);
    }();

    std::vector<std::string> inputs;
    if (!file.empty()) {
        std::ifstream in(resolve_data_path(file));
        if (!in) throw CorpusError("cannot open phrase file: " + file);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            inputs.push_back(line);
        }
    } else {
        inputs.push_back(phrase_text);
    }

    for (const std::string& text : inputs) {
        Phrase phrase = phrase_from_text(text);
        ParseResult r;
        if (!phrase.tokens.empty()) r = parse_phrase(model, phrase);
        if (as_json)
            std::cout << parse_result_to_json(phrase, r).dump() << "\n";
        else
            print_parse_text(phrase, r);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ingtag: attention-based ingredient phrase tagger"};
    app.require_subcommand(1);

    // convert
    auto* convert = app.add_subcommand("convert", "normalize a dataset into canonical TSV");
    std::string conv_input, conv_output, conv_dialect = "tsv";
    std::vector<std::string> conv_aliases;
    convert->add_option("input", conv_input, "input dataset path")->required();
    convert->add_option("output", conv_output, "output TSV path")->required();
    convert->add_option("--dialect", conv_dialect, "input dialect (tsv, token-label)");
    convert->add_option("--alias", conv_aliases, "label alias FROM=TO (repeatable)");

    // train
    auto* train_cmd = app.add_subcommand("train", "train the tagger (or the CRF baseline)");
    std::string tr_data, tr_emb, tr_out = "model.ckpt", tr_log;
    std::vector<std::string> tr_aliases;
    Hyper hyper;
    bool tr_baseline = false;
    int crf_epochs = 10;
    std::string tr_score = "dot";
    train_cmd->add_option("--data", tr_data, "training corpus (canonical TSV)")->required();
    train_cmd->add_option("--embeddings", tr_emb, "pretrained word vector file");
    train_cmd->add_option("--out", tr_out, "checkpoint output path");
    train_cmd->add_option("--log", tr_log, "training log path (appended)");
    train_cmd->add_option("--n-layers", hyper.n_layers, "recurrent module layers (default 4)")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--lr", hyper.learning_rate, "learning rate (default 5e-5)");
    train_cmd->add_option("--batch-size", hyper.batch_size, "batch size (default 1)")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--dropout", hyper.dropout_rate, "dropout rate (default 0.1)");
    train_cmd->add_option("--epochs", hyper.max_epochs, "epoch budget (default 20)");
    train_cmd->add_option("--patience", hyper.patience, "early-stop patience (default 3)");
    train_cmd->add_option("--seed", hyper.seed, "RNG seed (default 13)");
    train_cmd->add_option("--score", tr_score, "attention score: dot|additive (default dot)");
    train_cmd->add_flag("--residual", hyper.residual, "residual connections (default off)");
    train_cmd->add_flag("--positional", hyper.positional, "sinusoidal positions (default off)");
    bool no_qkv = false;
    train_cmd->add_flag("--no-qkv", no_qkv, "drop query/key/value projections");
    train_cmd->add_flag("--ffn-relu", hyper.ffn_relu, "ReLU inside the feed-forward block");
    train_cmd->add_flag("--tune-embeddings", hyper.tune_embeddings,
                        "also train pretrained embedding rows");
    train_cmd->add_option("--dim", hyper.dim, "embedding width d (default 300)");
    train_cmd->add_option("--dev-fraction", hyper.dev_fraction,
                          "dev split for early stopping (default 0.1)");
    train_cmd->add_option("--alias", tr_aliases, "label alias FROM=TO (repeatable)");
    train_cmd->add_flag("--baseline", tr_baseline, "train the CRF baseline instead");
    train_cmd->add_option("--crf-epochs", crf_epochs, "perceptron epochs (default 10)");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a labeled test set");
    std::vector<std::string> ev_ckpts, ev_datas, ev_aliases;
    bool ev_grid = false, ev_baseline = false;
    std::string ev_emb, ev_kv;
    eval_cmd->add_option("--checkpoint", ev_ckpts, "checkpoint path (3x with --grid)")
        ->required();
    eval_cmd->add_option("--data", ev_datas, "labeled test TSV (3x with --grid)")->required();
    eval_cmd->add_flag("--grid", ev_grid, "3x3 train-source x test-source micro-F1 grid");
    eval_cmd->add_flag("--baseline", ev_baseline, "checkpoints are CRF baselines");
    eval_cmd->add_option("--embeddings", ev_emb, "attach full pretrained vectors");
    eval_cmd->add_option("--kv", ev_kv, "write machine-readable metrics to file ('-': stdout)");
    eval_cmd->add_option("--alias", ev_aliases, "label alias FROM=TO (repeatable)");

    // parse
    auto* parse_cmd = app.add_subcommand("parse", "parse phrases into structured attributes");
    std::string pa_ckpt, pa_text, pa_file, pa_emb;
    bool pa_json = false;
    parse_cmd->add_option("--checkpoint", pa_ckpt, "trained checkpoint")->required();
    parse_cmd->add_option("phrase", pa_text, "ingredient phrase text");
    parse_cmd->add_option("--file", pa_file, "file of phrases, one per line");
    parse_cmd->add_flag("--json", pa_json, "emit JSON records");
    parse_cmd->add_option("--embeddings", pa_emb, "attach full pretrained vectors");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (convert->parsed()) return cmd_convert(conv_input, conv_dialect, conv_output, conv_aliases);
        if (train_cmd->parsed()) {
            hyper.score = score_kind_from_name(tr_score);
            hyper.use_qkv = !no_qkv;
            if (!tr_baseline && tr_emb.empty())
                throw UsageError("train: --embeddings is required for the neural model");
            return cmd_train(tr_data, tr_emb, tr_out, tr_log, hyper, tr_aliases, tr_baseline,
                             crf_epochs);
        }
        if (eval_cmd->parsed())
            return cmd_eval(ev_ckpts, ev_datas, ev_grid, ev_baseline, ev_emb, ev_kv, ev_aliases);
        if (parse_cmd->parsed()) {
            if (parse_cmd->count("phrase") == 0 && pa_file.empty())
                throw UsageError("parse: give a phrase or --file");
            return cmd_parse(pa_ckpt, pa_text, pa_file, pa_json, pa_emb);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CheckpointError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckpoint;
    } catch (const CorpusError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
