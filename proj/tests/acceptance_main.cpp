// Acceptance suite: one line per criterion, nonzero exit if any evaluated
// criterion fails. Criterion 5 needs the upstream annotated datasets and the
// 300-d pretrained vector file (see README); without them it is replaced by
// criteria 1-4 plus 6 and reported as such.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ingtag/ingtag.hpp"
#include "support/crf_oracle.hpp"
#include "support/finite_diff.hpp"
#include "support/fixtures.hpp"
#include "support/synth.hpp"

using namespace ingtag;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int g_failures = 0;

void report(const std::string& name, const Outcome& o, double seconds) {
    std::printf("[%s] %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(),
                o.detail.c_str(), seconds);
    if (!o.pass) ++g_failures;
}

void report_skip(const std::string& name, const std::string& why) {
    std::printf("[SKIP] %s: %s\n", name.c_str(), why.c_str());
}

template <typename Fn>
void run(const std::string& name, Fn fn) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    auto t1 = std::chrono::steady_clock::now();
    report(name, o, std::chrono::duration<double>(t1 - t0).count());
}

double eval_loss(ModelParams& m, const std::vector<Phrase>& set) {
    autograd::NoGradGuard ng;
    double total = 0.0;
    for (const Phrase& p : set) {
        Tensor enc = encode_phrase(p, m.emb, m.pos_emb);
        Tensor logits = forward_eval(m, enc);
        std::vector<std::size_t> gold;
        gold.reserve(p.size());
        for (Label l : *p.gold) gold.push_back(static_cast<std::size_t>(l));
        total += cross_entropy_rows(logits, gold).item();
    }
    return total;
}

MetricReport eval_model(ModelParams& m, const std::vector<Phrase>& test) {
    std::vector<std::vector<Label>> preds;
    preds.reserve(test.size());
    for (const Phrase& p : test) preds.push_back(predict_labels(m, p));
    return evaluate(test, preds);
}

// ---------------------------------------------------------------------- 1

Outcome criterion1() {
    Rng rng(11);
    // softmax: sums to 1 within 1e-12, shift invariance at 1e-12
    for (int t = 0; t < 200; ++t) {
        const std::size_t k = 1 + rng.index(12);
        std::vector<double> x(k);
        for (double& v : x) v = rng.uniform(-50, 50);
        auto xt = Tensor::from_values(x, {k});
        auto y = softmax(xt);
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) total += y.at(i);
        if (std::abs(total - 1.0) > 1e-12) return {false, "softmax normalization"};
        const double shift = rng.uniform(-1e3, 1e3);
        for (double& v : x) v += shift;
        auto ys = softmax(Tensor::from_values(x, {k}));
        for (std::size_t i = 0; i < k; ++i)
            if (std::abs(ys.at(i) - y.at(i)) > 1e-12) return {false, "softmax shift invariance"};
    }

    // attention: single-context identity at 1e-12 and convex hull
    for (int t = 0; t < 200; ++t) {
        const std::size_t d = 1 + rng.index(8);
        std::vector<double> qv(d), cv(d);
        for (double& v : qv) v = rng.uniform(-3, 3);
        for (double& v : cv) v = rng.uniform(-3, 3);
        auto out = attention(Tensor::from_values(qv, {d}), Tensor::from_values(cv, {1, d}));
        for (std::size_t i = 0; i < d; ++i)
            if (std::abs(out.at(i) - cv[i]) > 1e-12) return {false, "single-context identity"};

        const std::size_t k = 1 + rng.index(6);
        std::vector<double> ctx(k * d);
        for (double& v : ctx) v = rng.uniform(-3, 3);
        auto hull = attention(Tensor::from_values(qv, {d}), Tensor::from_values(ctx, {k, d}));
        for (std::size_t j = 0; j < d; ++j) {
            double lo = ctx[j], hi = ctx[j];
            for (std::size_t i = 1; i < k; ++i) {
                lo = std::min(lo, ctx[i * d + j]);
                hi = std::max(hi, ctx[i * d + j]);
            }
            if (hull.at(j) < lo - 1e-12 || hull.at(j) > hi + 1e-12)
                return {false, "attention convex hull"};
        }
    }

    // layer_norm standardization at 1e-6
    for (int t = 0; t < 200; ++t) {
        const std::size_t d = 2 + rng.index(12);
        std::vector<double> x(d);
        for (double& v : x) v = rng.uniform(-10, 10);
        auto y = layer_norm(Tensor::from_values(x, {d}),
                            Tensor::from_values(std::vector<double>(d, 1.0), {d}),
                            Tensor::zeros({d}), 1e-5);
        double mean = 0.0;
        for (std::size_t i = 0; i < d; ++i) mean += y.at(i);
        mean /= static_cast<double>(d);
        if (std::abs(mean) > 1e-6) return {false, "layer_norm mean"};
        double var = 0.0;
        for (std::size_t i = 0; i < d; ++i) var += (y.at(i) - mean) * (y.at(i) - mean);
        var /= static_cast<double>(d);
        if (std::abs(var - 1.0) > 1e-3) return {false, "layer_norm variance"};
    }

    // cross entropy of uniform logits over 8 classes
    if (std::abs(cross_entropy(Tensor::zeros({8}), 0).item() - 2.0794415416798359) > 1e-12)
        return {false, "cross_entropy ln 8"};

    // dropout: eval identity and Monte-Carlo expectation within 1%
    {
        Rng drng(77);
        auto x = Tensor::from_values({1.0}, {1});
        auto y = dropout(x, 0.9, Mode::Eval, drng);
        if (y.at(0) != 1.0) return {false, "dropout eval identity"};
        double total = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) total += dropout(x, 0.5, Mode::Train, drng).at(0);
        if (std::abs(total / n - 1.0) > 0.01) return {false, "dropout Monte-Carlo mean"};
    }
    return {true, "softmax, attention, layer_norm, cross_entropy, dropout properties hold"};
}

// ---------------------------------------------------------------------- 2

Outcome criterion2() {
    double worst = 0.0;
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        test_support::SynthOptions opt;
        opt.dim = 8;
        opt.n_train = 3;
        opt.n_test = 0;
        opt.seed = 5000 + trial;
        auto data = test_support::make_synth(opt);

        Hyper hyper;
        hyper.dim = 8;
        hyper.n_layers = 1;
        hyper.dropout_rate = 0.0;
        hyper.seed = trial;
        hyper.score = trial % 2 == 0 ? ScoreKind::ScaledDot : ScoreKind::Additive;

        Phrase phrase = data.train[trial % data.train.size()];
        phrase.tokens.resize(std::min<std::size_t>(3, phrase.tokens.size()));

        EmbeddingTable emb(8, hyper.seed);
        std::size_t k = 0;
        for (const Token& t : phrase.tokens) {
            if (k++ % 2 == 0 && !emb.has_pretrained(t.lower)) {
                Rng vr(fnv1a(t.lower));
                std::vector<double> v(8);
                for (double& x : v) x = vr.uniform(-0.5, 0.5);
                emb.add_pretrained(t.lower, v);
            }
        }
        ModelParams model = init_model(hyper, emb, {phrase});
        std::vector<std::size_t> gold(phrase.tokens.size());
        for (std::size_t i = 0; i < gold.size(); ++i) gold[i] = i % kNumLabels;

        Rng dummy(0);
        auto r = test_support::check_gradients(
            model.parameters(),
            [&] {
                Tensor encoded = encode_phrase(phrase, model.emb, model.pos_emb);
                return cross_entropy_rows(forward(model, encoded, Mode::Train, dummy), gold);
            },
            1e-5, 1e-4);
        worst = std::max(worst, r.worst_rel);
        if (!r.ok) return {false, "trial " + std::to_string(trial) + ": " + r.worst_at};
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "20 trials, every parameter gradient within 1e-4 of central differences "
                  "(worst %.2e)",
                  worst);
    return {true, buf};
}

// ---------------------------------------------------------------------- 3

Outcome criterion3() {
    Rng rng(2024);
    const std::vector<std::string> pool = {"1",     "1/2", "cup",   "cups", "salt", "hot",
                                           ",",     "fresh", "diced", "(",   "oil",  "two"};
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t s = 1 + rng.index(6);
        std::vector<std::string> ws(s);
        for (auto& w : ws) w = pool[rng.index(pool.size())];
        std::string raw;
        for (const auto& w : ws) raw += (raw.empty() ? "" : " ") + w;
        Phrase p = phrase_from_text(raw);

        CrfModel m = test_support::random_restricted_model(p, rng, 4);
        auto vit = viterbi(m, p);
        auto [bf_path, bf_score] = test_support::brute_force(m, p, 4);
        if (path_score(m, p, vit) != bf_score)
            return {false, "score mismatch at trial " + std::to_string(trial)};
    }
    // tie rule: all-zero weights decode to the lowest label index everywhere
    CrfModel zero;
    Phrase p = phrase_from_text("a b c d e");
    for (Label l : viterbi(zero, p))
        if (l != Label::Name) return {false, "tie rule violated on the zero model"};
    return {true, "200 random instances (s <= 6, 4 labels): exact score equality, ties to "
                  "lowest index"};
}

// ---------------------------------------------------------------------- 4

Outcome criterion4() {
    test_support::SynthOptions opt;
    opt.dim = 32;
    opt.n_train = 10;
    opt.n_test = 0;
    opt.seed = 4242;
    auto data = test_support::make_synth(opt);
    EmbeddingTable emb(32, 13);

    Hyper hyper;
    hyper.dim = 32;
    hyper.n_layers = 1;
    hyper.learning_rate = 1e-2;
    hyper.dropout_rate = 0.0;
    hyper.max_epochs = 20;  // 10 phrases x 20 epochs = 200 optimizer steps
    hyper.seed = 13;

    ModelParams at_init = init_model(hyper, emb, data.train);
    const double initial = eval_loss(at_init, data.train);
    TrainResult tr = train(data.train, {}, hyper, emb);
    const double final_loss = eval_loss(tr.params, data.train);

    char buf[128];
    std::snprintf(buf, sizeof(buf), "loss %.2f -> %.4f (%.1f%% of initial) in 200 steps",
                  initial, final_loss, 100.0 * final_loss / initial);
    return {final_loss < 0.1 * initial, buf};
}

// ------------------------------------------------------------------- 5, 6b

struct UpstreamData {
    bool available = false;
    std::string train_path, test_path, emb_path;
    std::string note;
};

UpstreamData find_upstream() {
    UpstreamData d;
    const char* root = std::getenv("INGTAG_DATA_DIR");
    if (!root) {
        d.note = "INGTAG_DATA_DIR not set";
        return d;
    }
    d.train_path = (fs::path(root) / "both_train.tsv").string();
    d.test_path = (fs::path(root) / "both_test.tsv").string();
    if (const char* e = std::getenv("INGTAG_EMBEDDINGS")) {
        d.emb_path = e;
    } else {
        d.emb_path = (fs::path(root) / "glove.6B.300d.txt").string();
    }
    if (!fs::exists(d.train_path) || !fs::exists(d.test_path)) {
        d.note = "both_train.tsv / both_test.tsv not found under INGTAG_DATA_DIR";
        return d;
    }
    if (!fs::exists(d.emb_path)) {
        d.note = "pretrained vector file not found (" + d.emb_path + ")";
        return d;
    }
    d.available = true;
    return d;
}

Outcome criterion5(const UpstreamData& up, double* crf_combined_f1) {
    auto train_set_all = load_corpus(up.train_path);
    auto test_set = load_corpus(up.test_path);
    char buf[256];
    if (train_set_all.size() != 6612 || test_set.size() != 2188) {
        std::snprintf(buf, sizeof(buf), "combined sizes %zu/%zu != 6612/2188",
                      train_set_all.size(), test_set.size());
        return {false, buf};
    }
    Hyper hyper;  // stock defaults: N=4, lr 5e-5, batch 1, d=300
    EmbeddingTable emb = load_embeddings(up.emb_path, hyper.dim, hyper.seed);
    auto [train_set, dev_set] = split_train_dev(train_set_all, hyper.dev_fraction, hyper.seed);
    TrainResult tr = train(train_set, dev_set, hyper, emb);
    MetricReport r = eval_model(tr.params, test_set);

    const double q = r.per_label[static_cast<std::size_t>(Label::Quantity)].f1;
    const double n = r.per_label[static_cast<std::size_t>(Label::Name)].f1;
    const double t = r.per_label[static_cast<std::size_t>(Label::Temperature)].f1;
    const bool pass = std::abs(r.micro_f1 - 93.64) <= 3.0 && q >= 93.0 && n >= 89.0 && t >= 70.0;
    std::snprintf(buf, sizeof(buf),
                  "micro-F1 %.2f (target 93.64 +- 3.0); Quantity %.2f (>=93), Name %.2f (>=89), "
                  "Temperature %.2f (>=70)",
                  r.micro_f1, q, n, t);

    CrfModel crf = train_crf(train_set_all, 10, hyper.seed);
    std::vector<std::vector<Label>> preds;
    for (const Phrase& p : test_set) preds.push_back(viterbi(crf, p));
    *crf_combined_f1 = evaluate(test_set, preds).micro_f1;
    return {pass, buf};
}

// ---------------------------------------------------------------------- 6

Outcome criterion6(const UpstreamData& up, double crf_combined_f1) {
    test_support::SynthOptions opt;
    opt.dim = 24;
    opt.n_train = 200;
    opt.n_test = 60;
    opt.seed = 2025;
    auto data = test_support::make_synth(opt);

    test_support::TempDir dir;
    test_support::write_file(dir.file("vecs.txt"), data.embeddings_text);
    EmbeddingTable emb = load_embeddings(dir.file("vecs.txt"), opt.dim, 13);

    Hyper hyper;
    hyper.dim = opt.dim;
    hyper.n_layers = 2;
    hyper.learning_rate = 5e-3;
    hyper.max_epochs = 6;
    hyper.seed = 13;
    TrainResult tr = train(data.train, {}, hyper, emb);
    const double neural = eval_model(tr.params, data.test).micro_f1;

    CrfModel crf = train_crf(data.train, 10, 13);
    std::vector<std::vector<Label>> preds;
    for (const Phrase& p : data.test) preds.push_back(viterbi(crf, p));
    const double crf_f1 = evaluate(data.test, preds).micro_f1;

    const Label maj = majority_label(data.train);
    preds.clear();
    for (const Phrase& p : data.test) preds.emplace_back(p.size(), maj);
    const double maj_f1 = evaluate(data.test, preds).micro_f1;

    bool pass = neural > crf_f1 && neural > maj_f1;
    char buf[256];
    std::string detail;
    std::snprintf(buf, sizeof(buf), "neural %.2f > crf %.2f and > majority %.2f", neural,
                  crf_f1, maj_f1);
    detail = buf;

    if (up.available && crf_combined_f1 >= 0.0) {
        const bool band = crf_combined_f1 >= 45.0 && crf_combined_f1 <= 75.0;
        std::snprintf(buf, sizeof(buf), "; combined-dataset crf %.2f in [45, 75]",
                      crf_combined_f1);
        detail += buf;
        pass = pass && band;
    } else if (up.available) {
        detail += "; combined-dataset band not evaluated (criterion 5 aborted early)";
    } else {
        detail += "; combined-dataset band check needs the upstream data (skipped)";
    }
    return {pass, detail};
}

// ---------------------------------------------------------------------- 7

Outcome criterion7(const char* argv0) {
    std::string bin;
    if (const char* e = std::getenv("INGTAG_BIN")) {
        bin = e;
    } else {
        fs::path guess = fs::path(argv0).parent_path().parent_path() / "tools" / "ingtag";
        if (fs::exists(guess)) bin = guess.string();
    }
    if (bin.empty() || !fs::exists(bin))
        return {false, "ingtag binary not found (set INGTAG_BIN)"};

    test_support::SynthOptions opt;
    opt.dim = 12;
    opt.n_train = 15;
    opt.seed = 606;
    auto data = test_support::make_synth(opt);

    test_support::TempDir dir;
    save_corpus(data.train, dir.file("train.tsv"));
    test_support::write_file(dir.file("vecs.txt"), data.embeddings_text);
    fs::create_directory(dir.path() / "a");
    fs::create_directory(dir.path() / "b");

    const std::string cmd = " train --data " + dir.file("train.tsv") + " --embeddings " +
                            dir.file("vecs.txt") +
                            " --dim 12 --n-layers 2 --epochs 2 --lr 0.005 --seed 13" +
                            " --out model.ckpt --log train.log > /dev/null 2>&1";
    if (std::system(("cd " + (dir.path() / "a").string() + " && " + bin + cmd).c_str()) != 0)
        return {false, "first training run failed"};
    if (std::system(("cd " + (dir.path() / "b").string() + " && " + bin + cmd).c_str()) != 0)
        return {false, "second training run failed"};

    const bool logs = test_support::read_file(dir.file("a/train.log")) ==
                      test_support::read_file(dir.file("b/train.log"));
    const bool ckpts = test_support::read_file(dir.file("a/model.ckpt")) ==
                       test_support::read_file(dir.file("b/model.ckpt"));
    if (!logs) return {false, "training logs differ between identical runs"};
    if (!ckpts) return {false, "checkpoints differ between identical runs"};
    return {true, "two identical cmd_train runs: byte-identical log and checkpoint"};
}

}  // namespace

int main(int, char** argv) {
    run("criterion 1 (numeric-core properties)", criterion1);
    run("criterion 2 (gradient oracle, N=1 d=8)", criterion2);
    run("criterion 3 (viterbi vs exhaustive enumeration)", criterion3);
    run("criterion 4 (overfit sanity, 10 phrases / 200 steps)", criterion4);

    UpstreamData up = find_upstream();
    double crf_combined_f1 = -1.0;
    if (up.available) {
        run("criterion 5 (reference reproduction on the combined dataset)",
            [&] { return criterion5(up, &crf_combined_f1); });
    } else {
        report_skip("criterion 5 (reference reproduction on the combined dataset)",
                    up.note + "; replaced by criteria 1-4 plus 6 per the acceptance rules - "
                              "the exact table values are not reproducible without the data");
    }

    run("criterion 6 (baseline ordering)", [&] { return criterion6(up, crf_combined_f1); });
    run("criterion 7 (training determinism)", [&] { return criterion7(argv[0]); });

    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all evaluated criteria passed\n");
    return 0;
}
