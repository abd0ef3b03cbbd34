#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ingtag/rng.hpp"
#include "ingtag/tensor.hpp"

namespace ingtag {

namespace detail {

/// Stable softmax of one row in place: subtract the max, exponentiate, normalize.
inline void softmax_row(const double* x, double* y, std::size_t k) {
    double mx = x[0];
    for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, x[i]);
    if (!std::isfinite(mx)) throw std::invalid_argument("softmax: non-finite input");
    double z = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        y[i] = std::exp(x[i] - mx);
        z += y[i];
    }
    for (std::size_t i = 0; i < k; ++i) y[i] /= z;
}

/// dL/dx = y * (g - <g, y>) for one row.
inline void softmax_row_backward(const double* y, const double* g, double* dx, std::size_t k) {
    double gy = 0.0;
    for (std::size_t i = 0; i < k; ++i) gy += g[i] * y[i];
    for (std::size_t i = 0; i < k; ++i) dx[i] += y[i] * (g[i] - gy);
}

}  // namespace detail

/// Softmax over a vector: positive outputs summing to 1, invariant to adding a
/// constant to all entries.
inline Tensor softmax(const Tensor& v) {
    if (v.rank() != 1 || v.numel() == 0) throw std::invalid_argument("softmax: expected non-empty vector");
    const std::size_t k = v.numel();
    std::vector<double> y(k);
    detail::softmax_row(v.values().data(), y.data(), k);
    return detail::make_node(std::move(y), v.shape(), {v}, [k](TensorNode* n) {
        return [n, k] {
            TensorNode* p = n->parents[0].get();
            if (detail::wants_grad(p))
                detail::softmax_row_backward(n->value.data(), n->grad.data(), p->grad.data(), k);
        };
    });
}

/// Row-wise softmax of an [s x K] matrix (each row normalized independently).
inline Tensor softmax_rows(const Tensor& m) {
    if (m.rank() != 2) throw std::invalid_argument("softmax_rows: expected matrix");
    const std::size_t s = m.dim(0), k = m.dim(1);
    std::vector<double> y(s * k);
    for (std::size_t i = 0; i < s; ++i)
        detail::softmax_row(m.values().data() + i * k, y.data() + i * k, k);
    return detail::make_node(std::move(y), m.shape(), {m}, [s, k](TensorNode* n) {
        return [n, s, k] {
            TensorNode* p = n->parents[0].get();
            if (!detail::wants_grad(p)) return;
            for (std::size_t i = 0; i < s; ++i)
                detail::softmax_row_backward(n->value.data() + i * k, n->grad.data() + i * k,
                                             p->grad.data() + i * k, k);
        };
    });
}

/// Per-row standardization with learned affine: gain * (x - mean)/sqrt(var + eps) + bias.
/// Population variance; constant rows are handled by eps.
inline Tensor layer_norm_rows(const Tensor& m, const Tensor& gain, const Tensor& bias,
                              double eps = 1e-5) {
    if (m.rank() != 2) throw std::invalid_argument("layer_norm_rows: expected matrix");
    const std::size_t s = m.dim(0), d = m.dim(1);
    if (gain.numel() != d || bias.numel() != d)
        throw std::invalid_argument("layer_norm_rows: gain/bias dimension mismatch");

    std::vector<double> y(s * d);
    // saved per row: inverse std and the standardized values (recomputed in
    // backward from y would entangle gain; keep xhat explicitly)
    auto xhat = std::make_shared<std::vector<double>>(s * d);
    auto inv_std = std::make_shared<std::vector<double>>(s);
    for (std::size_t i = 0; i < s; ++i) {
        const double* x = m.values().data() + i * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += x[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (x[j] - mean) * (x[j] - mean);
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = is;
        for (std::size_t j = 0; j < d; ++j) {
            const double xh = (x[j] - mean) * is;
            (*xhat)[i * d + j] = xh;
            y[i * d + j] = gain.values()[j] * xh + bias.values()[j];
        }
    }
    return detail::make_node(std::move(y), m.shape(), {m, gain, bias},
                             [s, d, xhat, inv_std](TensorNode* n) {
        return [n, s, d, xhat, inv_std] {
            TensorNode* pm = n->parents[0].get();
            TensorNode* pg = n->parents[1].get();
            TensorNode* pb = n->parents[2].get();
            for (std::size_t i = 0; i < s; ++i) {
                const double* g = n->grad.data() + i * d;
                const double* xh = xhat->data() + i * d;
                if (detail::wants_grad(pg))
                    for (std::size_t j = 0; j < d; ++j) pg->grad[j] += g[j] * xh[j];
                if (detail::wants_grad(pb))
                    for (std::size_t j = 0; j < d; ++j) pb->grad[j] += g[j];
                if (detail::wants_grad(pm)) {
                    // dx = (gh - mean(gh) - xhat * mean(gh .* xhat)) * inv_std,
                    // where gh = g .* gain
                    double m1 = 0.0, m2 = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                        const double gh = g[j] * pg->value[j];
                        m1 += gh;
                        m2 += gh * xh[j];
                    }
                    m1 /= static_cast<double>(d);
                    m2 /= static_cast<double>(d);
                    const double is = (*inv_std)[i];
                    for (std::size_t j = 0; j < d; ++j) {
                        const double gh = g[j] * pg->value[j];
                        pm->grad[i * d + j] += (gh - m1 - xh[j] * m2) * is;
                    }
                }
            }
        };
    });
}

/// Vector form of layer normalization.
inline Tensor layer_norm(const Tensor& v, const Tensor& gain, const Tensor& bias,
                         double eps = 1e-5) {
    if (v.rank() != 1) throw std::invalid_argument("layer_norm: expected vector");
    Tensor m = detail::make_node(v.values(), {1, v.numel()}, {v}, [](TensorNode* n) {
        return [n] {
            TensorNode* p = n->parents[0].get();
            if (detail::wants_grad(p))
                for (std::size_t i = 0; i < n->grad.size(); ++i) p->grad[i] += n->grad[i];
        };
    });
    Tensor out = layer_norm_rows(m, gain, bias, eps);
    return detail::make_node(out.values(), {v.numel()}, {out}, [](TensorNode* n) {
        return [n] {
            TensorNode* p = n->parents[0].get();
            if (detail::wants_grad(p))
                for (std::size_t i = 0; i < n->grad.size(); ++i) p->grad[i] += n->grad[i];
        };
    });
}

enum class Mode { Train, Eval };

/// Inverted dropout: each entry is zeroed with probability `rate` and the
/// survivors are scaled by 1/(1-rate), so the expectation equals the input.
/// Eval mode (and rate 0) return the input unchanged.
inline Tensor dropout(const Tensor& x, double rate, Mode mode, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
    if (mode == Mode::Eval || rate == 0.0) return x;
    const std::size_t n = x.numel();
    auto mask = std::make_shared<std::vector<double>>(n);
    const double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        (*mask)[i] = rng.uniform() < rate ? 0.0 : keep_scale;
        v[i] = x.values()[i] * (*mask)[i];
    }
    return detail::make_node(std::move(v), x.shape(), {x}, [mask](TensorNode* nd) {
        return [nd, mask] {
            TensorNode* p = nd->parents[0].get();
            if (detail::wants_grad(p))
                for (std::size_t i = 0; i < nd->grad.size(); ++i)
                    p->grad[i] += nd->grad[i] * (*mask)[i];
        };
    });
}

/// -log softmax(logits)[gold].
inline Tensor cross_entropy(const Tensor& logits, std::size_t gold) {
    if (logits.rank() != 1 || logits.numel() == 0)
        throw std::invalid_argument("cross_entropy: expected non-empty logit vector");
    const std::size_t k = logits.numel();
    if (gold >= k) throw std::out_of_range("cross_entropy: gold index out of range");
    auto probs = std::make_shared<std::vector<double>>(k);
    detail::softmax_row(logits.values().data(), probs->data(), k);
    const double loss = -std::log((*probs)[gold]);
    return detail::make_node({loss}, {1}, {logits}, [probs, gold, k](TensorNode* n) {
        return [n, probs, gold, k] {
            TensorNode* p = n->parents[0].get();
            if (!detail::wants_grad(p)) return;
            const double g = n->grad[0];
            for (std::size_t i = 0; i < k; ++i)
                p->grad[i] += g * ((*probs)[i] - (i == gold ? 1.0 : 0.0));
        };
    });
}

/// Sum of per-row cross-entropies of an [s x o] logit matrix.
inline Tensor cross_entropy_rows(const Tensor& logits, const std::vector<std::size_t>& gold) {
    if (logits.rank() != 2) throw std::invalid_argument("cross_entropy_rows: expected matrix");
    const std::size_t s = logits.dim(0), k = logits.dim(1);
    if (gold.size() != s) throw std::invalid_argument("cross_entropy_rows: gold length mismatch");
    auto probs = std::make_shared<std::vector<double>>(s * k);
    double loss = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
        if (gold[i] >= k) throw std::out_of_range("cross_entropy_rows: gold index out of range");
        detail::softmax_row(logits.values().data() + i * k, probs->data() + i * k, k);
        loss -= std::log((*probs)[i * k + gold[i]]);
    }
    auto gold_copy = std::make_shared<std::vector<std::size_t>>(gold);
    return detail::make_node({loss}, {1}, {logits}, [probs, gold_copy, s, k](TensorNode* n) {
        return [n, probs, gold_copy, s, k] {
            TensorNode* p = n->parents[0].get();
            if (!detail::wants_grad(p)) return;
            const double g = n->grad[0];
            for (std::size_t i = 0; i < s; ++i)
                for (std::size_t j = 0; j < k; ++j)
                    p->grad[i * k + j] +=
                        g * ((*probs)[i * k + j] - (j == (*gold_copy)[i] ? 1.0 : 0.0));
        };
    });
}

enum class ScoreKind { ScaledDot, Additive };

/// Attention over a stack of context vectors: score each context against the
/// query, softmax-normalize, return the weighted sum of the contexts. The
/// output is a convex combination of the context rows.
///
/// ScaledDot: s_j = <q, c_j> / sqrt(d).  Additive: s_j = <v, tanh(q + c_j)>,
/// which requires the extra parameter vector `additive_v`.
inline Tensor attention(const Tensor& query, const Tensor& contexts,
                        ScoreKind score = ScoreKind::ScaledDot,
                        const Tensor* additive_v = nullptr) {
    if (contexts.rank() != 2 || contexts.dim(0) == 0)
        throw std::invalid_argument("attention: need at least one context vector");
    if (query.rank() != 1 || query.dim(0) != contexts.dim(1))
        throw std::invalid_argument("attention: query/context dimension mismatch");
    Tensor scores;
    if (score == ScoreKind::ScaledDot) {
        scores = scale(matvec(contexts, query),
                       1.0 / std::sqrt(static_cast<double>(query.dim(0))));
    } else {
        if (!additive_v || additive_v->numel() != query.dim(0))
            throw std::invalid_argument("attention: additive score needs its parameter vector");
        scores = matvec(tanh(add_row(contexts, query)), *additive_v);
    }
    return vecmat(softmax(scores), contexts);
}

}  // namespace ingtag
