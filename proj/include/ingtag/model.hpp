#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ingtag/adam.hpp"
#include "ingtag/corpus.hpp"
#include "ingtag/embeddings.hpp"
#include "ingtag/eval.hpp"
#include "ingtag/nn.hpp"
#include "ingtag/tensor.hpp"

namespace ingtag {

/// Training and architecture knobs. The defaults reproduce the reference
/// setup: 4 layers, learning rate 5e-5, batch size 1.
struct Hyper {
    int n_layers = 4;
    double learning_rate = 5e-5;
    int batch_size = 1;
    double dropout_rate = 0.1;
    int max_epochs = 20;
    int patience = 3;
    std::uint64_t seed = 13;
    ScoreKind score = ScoreKind::ScaledDot;
    bool residual = false;
    bool positional = false;
    bool use_qkv = true;       // learned query/key/value projections
    bool ffn_relu = false;     // nonlinearity inside the feed-forward block
    bool tune_embeddings = false;
    std::size_t dim = 300;     // token vector width d
    double dev_fraction = 0.1; // held-out share used for early stopping
};

inline const char* score_kind_name(ScoreKind k) {
    return k == ScoreKind::ScaledDot ? "dot" : "additive";
}

inline ScoreKind score_kind_from_name(const std::string& s) {
    if (s == "dot") return ScoreKind::ScaledDot;
    if (s == "additive") return ScoreKind::Additive;
    throw std::invalid_argument("unknown score function: " + s + " (expected dot|additive)");
}

/// One recurrent-module layer: self-attention projections plus the
/// feed-forward block (linear, dropout, normalization).
struct LayerParams {
    Tensor wq, wk, wv;          // [d x d], absent when projections are disabled
    Tensor attn_v;              // [d], additive score only
    Tensor ffn_w;               // [d x d]
    Tensor ffn_b;               // [d]
    Tensor norm_gain, norm_bias;  // [d]
};

struct ModelParams {
    std::vector<LayerParams> layers;
    Tensor output_w;  // [d x o]
    EmbeddingTable emb;
    PosEmbeddingTable pos_emb;
    Vocab vocab;
    LabelAliasMap aliases;
    Hyper hyper;

    ModelParams() : emb(300, 13), pos_emb(300) {}

    /// Trainable parameters in a fixed, deterministic order: per-layer weights,
    /// output projection, POS rows (sorted by tag), OOV rows (sorted by token),
    /// then pretrained rows when embedding tuning is on.
    std::vector<Tensor> parameters() const {
        std::vector<Tensor> out;
        for (const LayerParams& l : layers) {
            if (l.wq.defined()) out.push_back(l.wq);
            if (l.wk.defined()) out.push_back(l.wk);
            if (l.wv.defined()) out.push_back(l.wv);
            if (l.attn_v.defined()) out.push_back(l.attn_v);
            out.push_back(l.ffn_w);
            out.push_back(l.ffn_b);
            out.push_back(l.norm_gain);
            out.push_back(l.norm_bias);
        }
        out.push_back(output_w);
        for (const auto& [tag, t] : pos_emb.rows()) {
            (void)tag;
            out.push_back(t);
        }
        for (const std::string& tok : vocab.oov_set()) {
            auto it = emb.oov_rows().find(tok);
            if (it != emb.oov_rows().end()) out.push_back(it->second);
        }
        if (hyper.tune_embeddings) {
            for (const std::string& tok : vocab.tokens()) {
                auto it = emb.pretrained_rows().find(tok);
                if (it != emb.pretrained_rows().end()) out.push_back(it->second);
            }
        }
        return out;
    }

    /// Deep-copies trainable tensors, shares frozen ones.
    ModelParams clone() const {
        auto copy_tensor = [](const Tensor& t) {
            if (!t.defined()) return Tensor();
            if (!t.requires_grad()) return t;  // frozen: safe to share
            return Tensor::from_values(t.values(), t.shape(), true);
        };
        ModelParams out;
        out.hyper = hyper;
        out.vocab = vocab;
        out.aliases = aliases;
        out.layers.reserve(layers.size());
        for (const LayerParams& l : layers) {
            LayerParams c;
            c.wq = copy_tensor(l.wq);
            c.wk = copy_tensor(l.wk);
            c.wv = copy_tensor(l.wv);
            c.attn_v = copy_tensor(l.attn_v);
            c.ffn_w = copy_tensor(l.ffn_w);
            c.ffn_b = copy_tensor(l.ffn_b);
            c.norm_gain = copy_tensor(l.norm_gain);
            c.norm_bias = copy_tensor(l.norm_bias);
            out.layers.push_back(std::move(c));
        }
        out.output_w = copy_tensor(output_w);
        out.emb = EmbeddingTable(emb.dim(), emb.oov_seed());
        for (const auto& [tok, t] : emb.pretrained_rows()) {
            if (t.requires_grad())
                out.emb.add_pretrained(tok, t.values());  // tuned: snapshot values
            else
                out.emb.add_pretrained_shared(tok, t);    // frozen: share the node
        }
        if (hyper.tune_embeddings) out.emb.set_pretrained_trainable(true);
        for (const auto& [tok, t] : emb.oov_rows()) out.emb.add_oov_row(tok, copy_tensor(t));
        out.pos_emb = PosEmbeddingTable(pos_emb.dim());
        for (const auto& [tag, t] : pos_emb.rows()) {
            if (tag == kUnkPosTag) {
                out.pos_emb.row(kUnkPosTag).values() = t.values();
            } else {
                out.pos_emb.row(tag).values() = t.values();
            }
        }
        if (pos_emb.frozen()) out.pos_emb.freeze();
        return out;
    }
};

namespace detail {

inline Tensor identity_matrix(std::size_t d, bool requires_grad) {
    std::vector<double> v(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) v[i * d + i] = 1.0;
    return Tensor::from_values(std::move(v), {d, d}, requires_grad);
}

inline Tensor xavier_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::vector<double> v(rows * cols);
    for (double& x : v) x = rng.uniform(-limit, limit);
    return Tensor::from_values(std::move(v), {rows, cols}, true);
}

/// Fixed sinusoidal position table, added to the encoder output when enabled.
inline Tensor sinusoid_positions(std::size_t s, std::size_t d) {
    std::vector<double> v(s * d);
    for (std::size_t p = 0; p < s; ++p) {
        for (std::size_t i = 0; i < d; ++i) {
            const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(d);
            const double angle = static_cast<double>(p) / std::pow(10000.0, exponent);
            v[p * d + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return Tensor::from_values(std::move(v), {s, d}, false);
}

}  // namespace detail

/// Fresh model: identity-initialized attention projections, Xavier feed-forward
/// and output weights, unit/zero normalization affine, vocab built over the
/// given phrases, eager OOV rows, one POS row per distinct tag seen.
inline ModelParams init_model(const Hyper& hyper, const EmbeddingTable& pretrained,
                              const std::vector<Phrase>& vocab_phrases,
                              const std::vector<Phrase>& extra_tag_phrases = {},
                              const LabelAliasMap& aliases = {}) {
    if (hyper.n_layers < 1) throw std::invalid_argument("n_layers must be >= 1");
    if (hyper.dim != pretrained.dim())
        throw std::invalid_argument("model dim does not match embedding dim");

    ModelParams m;
    m.hyper = hyper;
    m.aliases = aliases;
    m.emb = pretrained;
    m.emb.set_oov_seed(hyper.seed);
    m.pos_emb = PosEmbeddingTable(hyper.dim);
    m.vocab = build_vocab(vocab_phrases, m.emb.index());

    // trainable OOV rows exist up front so the optimizer set is fixed
    for (const std::string& tok : m.vocab.oov_set()) m.emb.row(tok);
    std::set<std::string> tags;
    for (const Phrase& p : vocab_phrases)
        for (const Token& t : p.tokens) tags.insert(t.pos.empty() ? pos_tag_one(t.lower) : t.pos);
    for (const Phrase& p : extra_tag_phrases)
        for (const Token& t : p.tokens) tags.insert(t.pos.empty() ? pos_tag_one(t.lower) : t.pos);
    for (const std::string& tag : tags) m.pos_emb.ensure_tag(tag);

    if (hyper.tune_embeddings) m.emb.set_pretrained_trainable(true);

    Rng rng(hyper.seed);
    const std::size_t d = hyper.dim;
    m.layers.resize(static_cast<std::size_t>(hyper.n_layers));
    for (LayerParams& l : m.layers) {
        if (hyper.use_qkv) {
            l.wq = detail::identity_matrix(d, true);
            l.wk = detail::identity_matrix(d, true);
            l.wv = detail::identity_matrix(d, true);
        }
        if (hyper.score == ScoreKind::Additive) {
            std::vector<double> v(d);
            for (double& x : v) x = rng.uniform(-0.05, 0.05);
            l.attn_v = Tensor::from_values(std::move(v), {d}, true);
        }
        l.ffn_w = detail::xavier_matrix(d, d, rng);
        l.ffn_b = Tensor::zeros({d}, true);
        l.norm_gain = Tensor::from_values(std::vector<double>(d, 1.0), {d}, true);
        l.norm_bias = Tensor::zeros({d}, true);
    }
    m.output_w = detail::xavier_matrix(d, kNumLabels, rng);
    return m;
}

/// Encoded tokens through N layers of self-attention plus feed-forward, then
/// the linear output projection. Dropout fires only in train mode.
inline Tensor forward(const ModelParams& m, const Tensor& encoded, Mode mode, Rng& rng) {
    if (encoded.rank() != 2 || encoded.dim(1) != m.hyper.dim)
        throw std::invalid_argument("forward: encoded input must be [s x d]");
    const std::size_t s = encoded.dim(0);
    const std::size_t d = m.hyper.dim;

    Tensor u = encoded;
    if (m.hyper.positional) u = add(u, detail::sinusoid_positions(s, d));

    for (const LayerParams& l : m.layers) {
        Tensor q = l.wq.defined() ? matmul(u, l.wq) : u;
        Tensor k = l.wk.defined() ? matmul(u, l.wk) : u;
        Tensor v = l.wv.defined() ? matmul(u, l.wv) : u;

        Tensor scores;
        if (m.hyper.score == ScoreKind::ScaledDot) {
            scores = scale(matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(d)));
        } else {
            std::vector<Tensor> score_rows;
            score_rows.reserve(s);
            for (std::size_t i = 0; i < s; ++i)
                score_rows.push_back(matvec(ingtag::tanh(add_row(k, row(q, i))), l.attn_v));
            scores = stack_rows(score_rows);
        }
        Tensor attended = matmul(softmax_rows(scores), v);

        Tensor f = add_row(matmul(attended, l.ffn_w), l.ffn_b);
        if (m.hyper.ffn_relu) f = relu(f);
        f = dropout(f, m.hyper.dropout_rate, mode, rng);
        if (m.hyper.residual) f = add(f, u);
        u = layer_norm_rows(f, l.norm_gain, l.norm_bias);
    }
    return matmul(u, m.output_w);
}

/// Eval-mode forward; no dropout randomness is consumed.
inline Tensor forward_eval(const ModelParams& m, const Tensor& encoded) {
    Rng dummy(0);
    return forward(m, encoded, Mode::Eval, dummy);
}

/// Per-token (label, confidence): softmax each logit row, argmax with ties
/// broken toward the lowest label index.
inline std::vector<std::pair<Label, double>> classify_tokens(ModelParams& m, const Phrase& phrase) {
    std::vector<std::pair<Label, double>> out;
    if (phrase.tokens.empty()) return out;
    autograd::NoGradGuard no_grad;
    Tensor encoded = encode_phrase(phrase, m.emb, m.pos_emb);
    Tensor logits = forward_eval(m, encoded);
    const std::size_t s = logits.dim(0), o = logits.dim(1);
    std::vector<double> probs(o);
    for (std::size_t i = 0; i < s; ++i) {
        detail::softmax_row(logits.values().data() + i * o, probs.data(), o);
        std::size_t best = 0;
        for (std::size_t j = 1; j < o; ++j)
            if (probs[j] > probs[best]) best = j;
        out.emplace_back(static_cast<Label>(best), probs[best]);
    }
    return out;
}

inline std::vector<Label> predict_labels(ModelParams& m, const Phrase& phrase) {
    std::vector<Label> out;
    for (auto& [l, c] : classify_tokens(m, phrase)) out.push_back(l);
    return out;
}

// ---------------------------------------------------------------------------
// structured output

/// Grouped attribute record for one phrase: maximal runs of a shared label
/// become one span. Others spans stay in the run list but not in the map.
struct ParseResult {
    struct TokenResult {
        std::string surface;
        Label label;
        double confidence;
    };
    std::vector<TokenResult> tokens;
    std::vector<std::pair<Label, std::string>> spans;        // all runs, in order
    std::map<Label, std::vector<std::string>> attributes;    // Others excluded
};

inline ParseResult structure(const Phrase& phrase, const std::vector<Label>& labels,
                             const std::vector<double>& confidences) {
    if (labels.size() != phrase.tokens.size())
        throw std::invalid_argument("structure: label count does not match token count");
    ParseResult r;
    for (std::size_t i = 0; i < labels.size(); ++i)
        r.tokens.push_back({phrase.tokens[i].surface, labels[i],
                            i < confidences.size() ? confidences[i] : 1.0});
    std::size_t i = 0;
    while (i < labels.size()) {
        std::size_t j = i;
        std::string span = phrase.tokens[i].surface;
        while (j + 1 < labels.size() && labels[j + 1] == labels[i]) {
            ++j;
            span += " " + phrase.tokens[j].surface;
        }
        r.spans.emplace_back(labels[i], span);
        if (labels[i] != Label::Others) r.attributes[labels[i]].push_back(span);
        i = j + 1;
    }
    return r;
}

inline ParseResult parse_phrase(ModelParams& m, const Phrase& phrase) {
    auto preds = classify_tokens(m, phrase);
    std::vector<Label> labels;
    std::vector<double> conf;
    for (auto& [l, c] : preds) {
        labels.push_back(l);
        conf.push_back(c);
    }
    return structure(phrase, labels, conf);
}

// ---------------------------------------------------------------------------
// training

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;     // summed over phrases
    double dev_micro_f1 = -1.0;  // negative when no dev set
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochRecord> log;
    int best_epoch = 0;
};

/// Batch-size-1 training minimizing the summed per-token cross-entropy, with
/// seeded epoch shuffles and early stopping on dev micro-F1.
inline TrainResult train(const std::vector<Phrase>& train_set, const std::vector<Phrase>& dev_set,
                         const Hyper& hyper, const EmbeddingTable& pretrained,
                         const LabelAliasMap& aliases = {}) {
    if (train_set.empty()) throw std::invalid_argument("train: empty training set");
    for (std::size_t i = 0; i < train_set.size(); ++i)
        if (!train_set[i].gold)
            throw std::invalid_argument("train: phrase " + std::to_string(i) +
                                        " has no gold labels");
    if (hyper.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");

    ModelParams model = init_model(hyper, pretrained, train_set, dev_set, aliases);
    std::vector<Tensor> params = model.parameters();
    Adam adam({hyper.learning_rate});
    Rng rng(hyper.seed);

    TrainResult result;
    double best_f1 = -1.0;
    int since_best = 0;
    std::optional<ModelParams> best;

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t b = 0;
        while (b < order.size()) {
            const std::size_t batch_end =
                std::min(order.size(), b + static_cast<std::size_t>(hyper.batch_size));
            Tensor batch_loss;
            for (; b < batch_end; ++b) {
                const Phrase& p = train_set[order[b]];
                Tensor encoded = encode_phrase(p, model.emb, model.pos_emb);
                Tensor logits = forward(model, encoded, Mode::Train, rng);
                std::vector<std::size_t> gold;
                gold.reserve(p.size());
                for (Label l : *p.gold) gold.push_back(static_cast<std::size_t>(l));
                Tensor loss = cross_entropy_rows(logits, gold);
                batch_loss = batch_loss.defined() ? add(batch_loss, loss) : loss;
            }
            if (!std::isfinite(batch_loss.item()))
                throw std::runtime_error("train: non-finite loss");
            epoch_loss += batch_loss.item();
            backward(batch_loss);
            adam.step(params);
            Adam::zero_grad(params);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_loss;
        if (!dev_set.empty()) {
            std::vector<std::vector<Label>> preds;
            preds.reserve(dev_set.size());
            for (const Phrase& p : dev_set) preds.push_back(predict_labels(model, p));
            rec.dev_micro_f1 = evaluate(dev_set, preds).micro_f1;
        }
        result.log.push_back(rec);

        if (!dev_set.empty()) {
            if (rec.dev_micro_f1 > best_f1) {
                best_f1 = rec.dev_micro_f1;
                best = model.clone();
                result.best_epoch = epoch;
                since_best = 0;
            } else if (++since_best >= hyper.patience) {
                break;
            }
        }
    }

    result.params = best ? std::move(*best) : std::move(model);
    if (!best) result.best_epoch = result.log.empty() ? 0 : result.log.back().epoch;
    return result;
}

}  // namespace ingtag
