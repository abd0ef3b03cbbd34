#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ingtag/crf.hpp"
#include "ingtag/model.hpp"

namespace ingtag {

inline constexpr char kModelMagic[9] = "INGTAG01";
inline constexpr char kCrfMagic[9] = "INGCRF01";

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace ckpt_detail {

using nlohmann::json;

inline void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw CheckpointError("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline void write_f64_buffer(std::ostream& out, const std::vector<double>& v) {
    for (double x : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, 8);
        write_u64(out, bits);
    }
}

inline void read_f64_buffer(std::istream& in, std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits = read_u64(in);
        std::memcpy(&v[i], &bits, 8);
    }
}

inline json hyper_to_json(const Hyper& h) {
    return json{{"n_layers", h.n_layers},
                {"learning_rate", h.learning_rate},
                {"batch_size", h.batch_size},
                {"dropout_rate", h.dropout_rate},
                {"max_epochs", h.max_epochs},
                {"patience", h.patience},
                {"seed", h.seed},
                {"score", score_kind_name(h.score)},
                {"residual", h.residual},
                {"positional", h.positional},
                {"use_qkv", h.use_qkv},
                {"ffn_relu", h.ffn_relu},
                {"tune_embeddings", h.tune_embeddings},
                {"dim", h.dim},
                {"dev_fraction", h.dev_fraction}};
}

inline Hyper hyper_from_json(const json& j) {
    Hyper h;
    h.n_layers = j.at("n_layers").get<int>();
    h.learning_rate = j.at("learning_rate").get<double>();
    h.batch_size = j.at("batch_size").get<int>();
    h.dropout_rate = j.at("dropout_rate").get<double>();
    h.max_epochs = j.at("max_epochs").get<int>();
    h.patience = j.at("patience").get<int>();
    h.seed = j.at("seed").get<std::uint64_t>();
    h.score = score_kind_from_name(j.at("score").get<std::string>());
    h.residual = j.at("residual").get<bool>();
    h.positional = j.at("positional").get<bool>();
    h.use_qkv = j.at("use_qkv").get<bool>();
    h.ffn_relu = j.at("ffn_relu").get<bool>();
    h.tune_embeddings = j.at("tune_embeddings").get<bool>();
    h.dim = j.at("dim").get<std::size_t>();
    h.dev_fraction = j.at("dev_fraction").get<double>();
    return h;
}

struct BufferRef {
    std::string name;
    std::vector<std::size_t> shape;
    const std::vector<double>* data;
};

inline void write_container(const std::string& path, const char* magic, const json& header,
                            const std::vector<BufferRef>& buffers) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path);
    out.write(magic, 8);
    const std::string header_text = header.dump();
    write_u64(out, header_text.size());
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const BufferRef& b : buffers) write_f64_buffer(out, *b.data);
    if (!out) throw CheckpointError("checkpoint write failed: " + path);
}

inline json read_container_header(std::istream& in, const char* magic, const std::string& path) {
    char got[8];
    in.read(got, 8);
    if (!in || std::memcmp(got, magic, 8) != 0)
        throw CheckpointError("bad magic bytes in " + path + " (expected " + magic + ")");
    const std::uint64_t header_size = read_u64(in);
    if (header_size > (1ull << 32)) throw CheckpointError("implausible header size in " + path);
    std::string header_text(header_size, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_size));
    if (!in) throw CheckpointError("checkpoint truncated: " + path);
    json header = json::parse(header_text, nullptr, false);
    if (header.is_discarded()) throw CheckpointError("corrupt checkpoint header: " + path);
    if (header.at("format").get<int>() != 1)
        throw CheckpointError("unsupported checkpoint format version in " + path);
    return header;
}

}  // namespace ckpt_detail

/// Serialize the tagger: self-describing JSON header (hyper, vocab, aliases,
/// POS tags, buffer directory) followed by raw little-endian f64 buffers.
/// Pretrained rows are stored restricted to the vocab; OOV and POS rows are
/// stored in full.
inline void save_checkpoint(const ModelParams& m, const std::string& path) {
    using ckpt_detail::BufferRef;
    using nlohmann::json;

    json header;
    header["format"] = 1;
    header["hyper"] = ckpt_detail::hyper_to_json(m.hyper);
    header["vocab"] = {{"tokens", m.vocab.tokens()},
                       {"oov", std::vector<std::string>(m.vocab.oov_set().begin(),
                                                        m.vocab.oov_set().end())}};
    json aliases = json::object();
    for (const auto& [a, l] : m.aliases.entries()) aliases[a] = label_name(l);
    header["aliases"] = aliases;

    std::vector<BufferRef> buffers;
    auto push = [&](const std::string& name, const Tensor& t) {
        if (!t.defined()) return;
        buffers.push_back({name, t.shape(), &t.values()});
    };
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        const std::string prefix = "layer" + std::to_string(i) + "/";
        push(prefix + "wq", m.layers[i].wq);
        push(prefix + "wk", m.layers[i].wk);
        push(prefix + "wv", m.layers[i].wv);
        push(prefix + "attn_v", m.layers[i].attn_v);
        push(prefix + "ffn_w", m.layers[i].ffn_w);
        push(prefix + "ffn_b", m.layers[i].ffn_b);
        push(prefix + "norm_gain", m.layers[i].norm_gain);
        push(prefix + "norm_bias", m.layers[i].norm_bias);
    }
    push("output_w", m.output_w);

    std::vector<std::string> pos_tags;
    for (const auto& [tag, t] : m.pos_emb.rows()) {
        pos_tags.push_back(tag);
        push("pos/" + tag, t);
    }
    header["pos_tags"] = pos_tags;

    std::set<std::string> vocab_pretrained;
    for (const std::string& tok : m.vocab.tokens())
        if (m.emb.pretrained_rows().count(tok)) vocab_pretrained.insert(tok);
    for (const std::string& tok : vocab_pretrained)
        push("emb/" + tok, m.emb.pretrained_rows().at(tok));

    std::set<std::string> oov_tokens;
    for (const auto& [tok, t] : m.emb.oov_rows()) oov_tokens.insert(tok);
    for (const std::string& tok : oov_tokens) push("oov/" + tok, m.emb.oov_rows().at(tok));

    json buffer_dir = json::array();
    for (const BufferRef& b : buffers) buffer_dir.push_back({{"name", b.name}, {"shape", b.shape}});
    header["buffers"] = buffer_dir;

    ckpt_detail::write_container(path, kModelMagic, header, buffers);
}

/// Load a tagger checkpoint. When `full_embeddings` is given, its pretrained
/// rows are attached for tokens the checkpoint does not carry, restoring
/// full-fidelity inference on words outside the training vocab.
inline ModelParams load_checkpoint(const std::string& path,
                                   const EmbeddingTable* full_embeddings = nullptr) {
    using nlohmann::json;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint: " + path);
    json header = ckpt_detail::read_container_header(in, kModelMagic, path);

    ModelParams m;
    m.hyper = ckpt_detail::hyper_from_json(header.at("hyper"));
    m.emb = EmbeddingTable(m.hyper.dim, m.hyper.seed);
    m.pos_emb = PosEmbeddingTable(m.hyper.dim);

    for (const auto& tok : header.at("vocab").at("tokens")) m.vocab.add(tok.get<std::string>());
    for (const auto& tok : header.at("vocab").at("oov")) m.vocab.mark_oov(tok.get<std::string>());
    m.vocab.freeze();

    for (auto it = header.at("aliases").begin(); it != header.at("aliases").end(); ++it) {
        const std::string target = it.value().get<std::string>();
        for (Label l : all_labels())
            if (target == label_name(l)) m.aliases.add(it.key(), l);
    }

    m.layers.resize(static_cast<std::size_t>(m.hyper.n_layers));

    // read buffers in directory order
    for (const auto& entry : header.at("buffers")) {
        const std::string name = entry.at("name").get<std::string>();
        std::vector<std::size_t> shape = entry.at("shape").get<std::vector<std::size_t>>();
        std::vector<double> data;
        ckpt_detail::read_f64_buffer(in, data, shape_numel(shape));

        if (name.rfind("layer", 0) == 0) {
            const std::size_t slash = name.find('/');
            const std::size_t idx = static_cast<std::size_t>(
                std::stoul(name.substr(5, slash - 5)));
            if (idx >= m.layers.size()) throw CheckpointError("layer index out of range: " + name);
            const std::string field = name.substr(slash + 1);
            Tensor t = Tensor::from_values(std::move(data), std::move(shape), true);
            if (field == "wq") m.layers[idx].wq = t;
            else if (field == "wk") m.layers[idx].wk = t;
            else if (field == "wv") m.layers[idx].wv = t;
            else if (field == "attn_v") m.layers[idx].attn_v = t;
            else if (field == "ffn_w") m.layers[idx].ffn_w = t;
            else if (field == "ffn_b") m.layers[idx].ffn_b = t;
            else if (field == "norm_gain") m.layers[idx].norm_gain = t;
            else if (field == "norm_bias") m.layers[idx].norm_bias = t;
            else throw CheckpointError("unknown layer buffer: " + name);
        } else if (name == "output_w") {
            m.output_w = Tensor::from_values(std::move(data), std::move(shape), true);
        } else if (name.rfind("pos/", 0) == 0) {
            Tensor t = m.pos_emb.ensure_tag(name.substr(4));
            if (t.numel() != data.size()) throw CheckpointError("pos row size mismatch: " + name);
            t.values() = std::move(data);
        } else if (name.rfind("emb/", 0) == 0) {
            m.emb.add_pretrained(name.substr(4), std::move(data));
        } else if (name.rfind("oov/", 0) == 0) {
            m.emb.add_oov_row(name.substr(4),
                              Tensor::from_values(std::move(data), std::move(shape), true));
        } else {
            throw CheckpointError("unknown buffer: " + name);
        }
    }
    // confirm nothing was cut short: every directory entry had to be readable
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        if (!m.layers[i].ffn_w.defined())
            throw CheckpointError("checkpoint missing layer buffers (layer " + std::to_string(i) +
                                  ")");
    }
    if (!m.output_w.defined()) throw CheckpointError("checkpoint missing output projection");

    if (m.hyper.tune_embeddings) m.emb.set_pretrained_trainable(true);
    if (full_embeddings) {
        for (const auto& [tok, t] : full_embeddings->pretrained_rows())
            if (!m.emb.has_pretrained(tok)) m.emb.add_pretrained_shared(tok, t);
    }
    m.pos_emb.freeze();
    return m;
}

/// Same container framing for the baseline, under its own magic.
inline void save_crf_checkpoint(const CrfModel& model, const std::string& path) {
    using ckpt_detail::BufferRef;
    using nlohmann::json;

    std::vector<double> emission;
    emission.reserve(model.num_features() * kNumLabels);
    for (const auto& row : model.emission_table())
        emission.insert(emission.end(), row.begin(), row.end());
    std::vector<double> transition;
    for (const auto& row : model.transition())
        transition.insert(transition.end(), row.begin(), row.end());
    std::vector<double> start(model.start().begin(), model.start().end());
    std::vector<double> stop(model.stop().begin(), model.stop().end());

    json header;
    header["format"] = 1;
    header["features"] = model.feature_names();
    header["buffers"] = json::array({
        {{"name", "emission"}, {"shape", {model.num_features(), kNumLabels}}},
        {{"name", "transition"}, {"shape", {kNumLabels, kNumLabels}}},
        {{"name", "start"}, {"shape", {kNumLabels}}},
        {{"name", "stop"}, {"shape", {kNumLabels}}},
    });

    std::vector<BufferRef> buffers = {
        {"emission", {model.num_features(), kNumLabels}, &emission},
        {"transition", {kNumLabels, kNumLabels}, &transition},
        {"start", {kNumLabels}, &start},
        {"stop", {kNumLabels}, &stop},
    };
    ckpt_detail::write_container(path, kCrfMagic, header, buffers);
}

inline CrfModel load_crf_checkpoint(const std::string& path) {
    using nlohmann::json;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint: " + path);
    json header = ckpt_detail::read_container_header(in, kCrfMagic, path);

    CrfModel model;
    for (const auto& name : header.at("features")) model.intern(name.get<std::string>());

    std::vector<double> data;
    ckpt_detail::read_f64_buffer(in, data, model.num_features() * kNumLabels);
    for (std::size_t f = 0; f < model.num_features(); ++f)
        for (std::size_t l = 0; l < kNumLabels; ++l)
            model.emission_table()[f][l] = data[f * kNumLabels + l];
    ckpt_detail::read_f64_buffer(in, data, kNumLabels * kNumLabels);
    for (std::size_t a = 0; a < kNumLabels; ++a)
        for (std::size_t b = 0; b < kNumLabels; ++b)
            model.transition()[a][b] = data[a * kNumLabels + b];
    ckpt_detail::read_f64_buffer(in, data, kNumLabels);
    for (std::size_t l = 0; l < kNumLabels; ++l) model.start()[l] = data[l];
    ckpt_detail::read_f64_buffer(in, data, kNumLabels);
    for (std::size_t l = 0; l < kNumLabels; ++l) model.stop()[l] = data[l];
    return model;
}

/// Structural equality over everything a checkpoint carries (pretrained rows
/// compared on the vocab restriction). Bitwise on all stored doubles.
inline bool models_equal(const ModelParams& a, const ModelParams& b) {
    auto tensors_equal = [](const Tensor& x, const Tensor& y) {
        if (x.defined() != y.defined()) return false;
        if (!x.defined()) return true;
        return x.shape() == y.shape() && x.values() == y.values();
    };
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        if (!tensors_equal(a.layers[i].wq, b.layers[i].wq)) return false;
        if (!tensors_equal(a.layers[i].wk, b.layers[i].wk)) return false;
        if (!tensors_equal(a.layers[i].wv, b.layers[i].wv)) return false;
        if (!tensors_equal(a.layers[i].attn_v, b.layers[i].attn_v)) return false;
        if (!tensors_equal(a.layers[i].ffn_w, b.layers[i].ffn_w)) return false;
        if (!tensors_equal(a.layers[i].ffn_b, b.layers[i].ffn_b)) return false;
        if (!tensors_equal(a.layers[i].norm_gain, b.layers[i].norm_gain)) return false;
        if (!tensors_equal(a.layers[i].norm_bias, b.layers[i].norm_bias)) return false;
    }
    if (!tensors_equal(a.output_w, b.output_w)) return false;
    if (a.vocab.tokens() != b.vocab.tokens()) return false;
    if (a.vocab.oov_set() != b.vocab.oov_set()) return false;
    if (a.aliases.entries() != b.aliases.entries()) return false;

    if (a.pos_emb.rows().size() != b.pos_emb.rows().size()) return false;
    for (const auto& [tag, t] : a.pos_emb.rows()) {
        auto it = b.pos_emb.rows().find(tag);
        if (it == b.pos_emb.rows().end() || !tensors_equal(t, it->second)) return false;
    }
    if (a.emb.oov_rows().size() != b.emb.oov_rows().size()) return false;
    for (const auto& [tok, t] : a.emb.oov_rows()) {
        auto it = b.emb.oov_rows().find(tok);
        if (it == b.emb.oov_rows().end() || !tensors_equal(t, it->second)) return false;
    }
    for (const std::string& tok : a.vocab.tokens()) {
        const bool ina = a.emb.pretrained_rows().count(tok) > 0;
        const bool inb = b.emb.pretrained_rows().count(tok) > 0;
        if (ina != inb) return false;
        if (ina && !tensors_equal(a.emb.pretrained_rows().at(tok), b.emb.pretrained_rows().at(tok)))
            return false;
    }
    return true;
}

}  // namespace ingtag
