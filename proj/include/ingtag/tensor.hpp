#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace ingtag {

/// One node of the computation graph: a shape-carrying f64 buffer plus the
/// bookkeeping reverse-mode autodiff needs. Nodes link to their inputs via
/// shared_ptr; dropping the final output releases the whole graph while
/// parameter leaves survive in their owners.
struct TensorNode {
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;      // sized on demand; leaves accumulate across backward calls
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void()> backprop;  // reads this->grad, accumulates into parents

    std::size_t numel() const { return value.size(); }
    bool is_leaf() const { return !backprop; }
};

inline std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

namespace autograd {
/// Thread-local switch: with grad disabled, ops compute values but record no
/// graph, so inference builds no tape.
inline bool& grad_enabled() {
    thread_local bool enabled = true;
    return enabled;
}

struct NoGradGuard {
    NoGradGuard() : prev_(grad_enabled()) { grad_enabled() = false; }
    ~NoGradGuard() { grad_enabled() = prev_; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};
}  // namespace autograd

/// Value-semantic handle to a graph node.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false) {
        auto n = std::make_shared<TensorNode>();
        n->shape = std::move(shape);
        n->value.assign(shape_numel(n->shape), 0.0);
        n->requires_grad = requires_grad;
        if (requires_grad) n->grad.assign(n->value.size(), 0.0);
        return Tensor(std::move(n));
    }

    static Tensor from_values(std::vector<double> values, std::vector<std::size_t> shape,
                              bool requires_grad = false) {
        if (shape_numel(shape) != values.size())
            throw std::invalid_argument("tensor shape does not match value count");
        auto n = std::make_shared<TensorNode>();
        n->shape = std::move(shape);
        n->value = std::move(values);
        n->requires_grad = requires_grad;
        if (requires_grad) n->grad.assign(n->value.size(), 0.0);
        return Tensor(std::move(n));
    }

    static Tensor scalar(double v) { return from_values({v}, {1}); }

    bool defined() const { return node_ != nullptr; }
    TensorNode* node() const { return node_.get(); }
    const std::shared_ptr<TensorNode>& node_ptr() const { return node_; }

    const std::vector<std::size_t>& shape() const { return node_->shape; }
    std::size_t numel() const { return node_->numel(); }
    std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
    std::size_t rank() const { return node_->shape.size(); }

    std::vector<double>& values() { return node_->value; }
    const std::vector<double>& values() const { return node_->value; }
    std::vector<double>& grad() { return node_->grad; }
    const std::vector<double>& grad() const { return node_->grad; }

    double item() const {
        if (numel() != 1) throw std::logic_error("item() on non-scalar tensor");
        return node_->value[0];
    }

    double at(std::size_t i) const { return node_->value.at(i); }
    double at(std::size_t r, std::size_t c) const {
        return node_->value.at(r * node_->shape.at(1) + c);
    }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool b) {
        node_->requires_grad = b;
        if (b && node_->grad.empty()) node_->grad.assign(node_->numel(), 0.0);
    }

    void zero_grad() {
        if (!node_->grad.empty()) node_->grad.assign(node_->numel(), 0.0);
    }

    /// Detached copy of the values (no graph, no grad).
    Tensor detached_copy() const { return from_values(node_->value, node_->shape); }

private:
    std::shared_ptr<TensorNode> node_;
};

namespace detail {

inline bool tracking(const Tensor& t) {
    return autograd::grad_enabled() && t.requires_grad();
}

/// Wire up a result node. `backprop` is attached only when grad mode is on and
/// some input is tracked, so inference carries no graph.
inline Tensor make_node(std::vector<double> value, std::vector<std::size_t> shape,
                        std::vector<Tensor> inputs,
                        const std::function<std::function<void()>(TensorNode*)>& make_backprop) {
    auto out = Tensor::from_values(std::move(value), std::move(shape));
    bool track = false;
    if (autograd::grad_enabled()) {
        for (const Tensor& t : inputs) track = track || t.requires_grad();
    }
    if (track) {
        TensorNode* n = out.node();
        n->requires_grad = true;
        n->parents.reserve(inputs.size());
        for (const Tensor& t : inputs) n->parents.push_back(t.node_ptr());
        n->backprop = make_backprop(n);
    }
    return out;
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

/// Accumulate src into node grad if that node participates in the backward pass.
inline bool wants_grad(const TensorNode* n) { return n->requires_grad && !n->grad.empty(); }

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise and linear algebra primitives

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "add");
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] + b.values()[i];
    return detail::make_node(std::move(v), a.shape(), {a, b}, [](TensorNode* n) {
        return [n] {
            TensorNode* pa = n->parents[0].get();
            TensorNode* pb = n->parents[1].get();
            if (detail::wants_grad(pa))
                for (std::size_t i = 0; i < n->grad.size(); ++i) pa->grad[i] += n->grad[i];
            if (detail::wants_grad(pb))
                for (std::size_t i = 0; i < n->grad.size(); ++i) pb->grad[i] += n->grad[i];
        };
    });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "sub");
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] - b.values()[i];
    return detail::make_node(std::move(v), a.shape(), {a, b}, [](TensorNode* n) {
        return [n] {
            TensorNode* pa = n->parents[0].get();
            TensorNode* pb = n->parents[1].get();
            if (detail::wants_grad(pa))
                for (std::size_t i = 0; i < n->grad.size(); ++i) pa->grad[i] += n->grad[i];
            if (detail::wants_grad(pb))
                for (std::size_t i = 0; i < n->grad.size(); ++i) pb->grad[i] -= n->grad[i];
        };
    });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "mul");
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * b.values()[i];
    return detail::make_node(std::move(v), a.shape(), {a, b}, [](TensorNode* n) {
        return [n] {
            TensorNode* pa = n->parents[0].get();
            TensorNode* pb = n->parents[1].get();
            if (detail::wants_grad(pa))
                for (std::size_t i = 0; i < n->grad.size(); ++i)
                    pa->grad[i] += n->grad[i] * pb->value[i];
            if (detail::wants_grad(pb))
                for (std::size_t i = 0; i < n->grad.size(); ++i)
                    pb->grad[i] += n->grad[i] * pa->value[i];
        };
    });
}

inline Tensor scale(const Tensor& a, double c) {
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * c;
    return detail::make_node(std::move(v), a.shape(), {a}, [c](TensorNode* n) {
        return [n, c] {
            TensorNode* pa = n->parents[0].get();
            if (detail::wants_grad(pa))
                for (std::size_t i = 0; i < n->grad.size(); ++i) pa->grad[i] += c * n->grad[i];
        };
    });
}

/// Broadcast-add a length-d row vector to every row of an s x d matrix.
inline Tensor add_row(const Tensor& m, const Tensor& row) {
    if (m.rank() != 2 || row.rank() != 1 || m.dim(1) != row.dim(0))
        throw std::invalid_argument("add_row: expected [s x d] and [d]");
    const std::size_t s = m.dim(0), d = m.dim(1);
    std::vector<double> v(m.numel());
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < d; ++j) v[i * d + j] = m.values()[i * d + j] + row.values()[j];
    return detail::make_node(std::move(v), m.shape(), {m, row}, [s, d](TensorNode* n) {
        return [n, s, d] {
            TensorNode* pm = n->parents[0].get();
            TensorNode* pr = n->parents[1].get();
            if (detail::wants_grad(pm))
                for (std::size_t i = 0; i < n->grad.size(); ++i) pm->grad[i] += n->grad[i];
            if (detail::wants_grad(pr))
                for (std::size_t i = 0; i < s; ++i)
                    for (std::size_t j = 0; j < d; ++j) pr->grad[j] += n->grad[i * d + j];
        };
    });
}

/// C[m x n] = A[m x k] * B[k x n].
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw std::invalid_argument("matmul: inner dimensions disagree");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<double> v(m * n, 0.0);
    const double* A = a.values().data();
    const double* B = b.values().data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = A[i * k + p];
            for (std::size_t j = 0; j < n; ++j) v[i * n + j] += aip * B[p * n + j];
        }
    return detail::make_node(std::move(v), {m, n}, {a, b}, [m, k, n](TensorNode* nd) {
        return [nd, m, k, n] {
            TensorNode* pa = nd->parents[0].get();
            TensorNode* pb = nd->parents[1].get();
            const double* G = nd->grad.data();
            if (detail::wants_grad(pa)) {  // dA = G * B^T
                const double* B = pb->value.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) {
                        const double g = G[i * n + j];
                        for (std::size_t p = 0; p < k; ++p) pa->grad[i * k + p] += g * B[p * n + j];
                    }
            }
            if (detail::wants_grad(pb)) {  // dB = A^T * G
                const double* A = pa->value.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        const double aip = A[i * k + p];
                        for (std::size_t j = 0; j < n; ++j) pb->grad[p * n + j] += aip * G[i * n + j];
                    }
            }
        };
    });
}

/// C[m x n] = A[m x k] * B[n x k]^T, i.e. C_ij = <A_i, B_j>.
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1))
        throw std::invalid_argument("matmul_nt: inner dimensions disagree");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
    std::vector<double> v(m * n, 0.0);
    const double* A = a.values().data();
    const double* B = b.values().data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += A[i * k + p] * B[j * k + p];
            v[i * n + j] = acc;
        }
    return detail::make_node(std::move(v), {m, n}, {a, b}, [m, k, n](TensorNode* nd) {
        return [nd, m, k, n] {
            TensorNode* pa = nd->parents[0].get();
            TensorNode* pb = nd->parents[1].get();
            const double* G = nd->grad.data();
            if (detail::wants_grad(pa)) {  // dA = G * B
                const double* B = pb->value.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) {
                        const double g = G[i * n + j];
                        for (std::size_t p = 0; p < k; ++p) pa->grad[i * k + p] += g * B[j * k + p];
                    }
            }
            if (detail::wants_grad(pb)) {  // dB = G^T * A
                const double* A = pa->value.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) {
                        const double g = G[i * n + j];
                        for (std::size_t p = 0; p < k; ++p) pb->grad[j * k + p] += g * A[i * k + p];
                    }
            }
        };
    });
}

/// y[K] = M[K x d] * v[d].
inline Tensor matvec(const Tensor& m, const Tensor& v) {
    if (m.rank() != 2 || v.rank() != 1 || m.dim(1) != v.dim(0))
        throw std::invalid_argument("matvec: expected [K x d] and [d]");
    const std::size_t K = m.dim(0), d = m.dim(1);
    std::vector<double> out(K, 0.0);
    for (std::size_t i = 0; i < K; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += m.values()[i * d + j] * v.values()[j];
        out[i] = acc;
    }
    return detail::make_node(std::move(out), {K}, {m, v}, [K, d](TensorNode* n) {
        return [n, K, d] {
            TensorNode* pm = n->parents[0].get();
            TensorNode* pv = n->parents[1].get();
            if (detail::wants_grad(pm))
                for (std::size_t i = 0; i < K; ++i)
                    for (std::size_t j = 0; j < d; ++j)
                        pm->grad[i * d + j] += n->grad[i] * pv->value[j];
            if (detail::wants_grad(pv))
                for (std::size_t i = 0; i < K; ++i)
                    for (std::size_t j = 0; j < d; ++j)
                        pv->grad[j] += n->grad[i] * pm->value[i * d + j];
        };
    });
}

/// y[d] = a[K] * M[K x d] (weights times rows; the attention weighted sum).
inline Tensor vecmat(const Tensor& a, const Tensor& m) {
    if (a.rank() != 1 || m.rank() != 2 || a.dim(0) != m.dim(0))
        throw std::invalid_argument("vecmat: expected [K] and [K x d]");
    const std::size_t K = m.dim(0), d = m.dim(1);
    std::vector<double> out(d, 0.0);
    for (std::size_t i = 0; i < K; ++i) {
        const double w = a.values()[i];
        for (std::size_t j = 0; j < d; ++j) out[j] += w * m.values()[i * d + j];
    }
    return detail::make_node(std::move(out), {d}, {a, m}, [K, d](TensorNode* n) {
        return [n, K, d] {
            TensorNode* pa = n->parents[0].get();
            TensorNode* pm = n->parents[1].get();
            if (detail::wants_grad(pa))
                for (std::size_t i = 0; i < K; ++i) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < d; ++j) acc += n->grad[j] * pm->value[i * d + j];
                    pa->grad[i] += acc;
                }
            if (detail::wants_grad(pm))
                for (std::size_t i = 0; i < K; ++i)
                    for (std::size_t j = 0; j < d; ++j)
                        pm->grad[i * d + j] += pa->value[i] * n->grad[j];
        };
    });
}

inline Tensor sum(const Tensor& a) {
    double acc = 0.0;
    for (double x : a.values()) acc += x;
    return detail::make_node({acc}, {1}, {a}, [](TensorNode* n) {
        return [n] {
            TensorNode* pa = n->parents[0].get();
            if (detail::wants_grad(pa))
                for (double& g : pa->grad) g += n->grad[0];
        };
    });
}

inline Tensor dot(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) acc += a.values()[i] * b.values()[i];
    return detail::make_node({acc}, {1}, {a, b}, [](TensorNode* n) {
        return [n] {
            TensorNode* pa = n->parents[0].get();
            TensorNode* pb = n->parents[1].get();
            if (detail::wants_grad(pa))
                for (std::size_t i = 0; i < pa->grad.size(); ++i)
                    pa->grad[i] += n->grad[0] * pb->value[i];
            if (detail::wants_grad(pb))
                for (std::size_t i = 0; i < pb->grad.size(); ++i)
                    pb->grad[i] += n->grad[0] * pa->value[i];
        };
    });
}

inline Tensor tanh(const Tensor& a) {
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::tanh(a.values()[i]);
    return detail::make_node(std::move(v), a.shape(), {a}, [](TensorNode* n) {
        return [n] {
            TensorNode* pa = n->parents[0].get();
            if (detail::wants_grad(pa))
                for (std::size_t i = 0; i < n->grad.size(); ++i)
                    pa->grad[i] += n->grad[i] * (1.0 - n->value[i] * n->value[i]);
        };
    });
}

inline Tensor relu(const Tensor& a) {
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] > 0.0 ? a.values()[i] : 0.0;
    return detail::make_node(std::move(v), a.shape(), {a}, [](TensorNode* n) {
        return [n] {
            TensorNode* pa = n->parents[0].get();
            if (detail::wants_grad(pa))
                for (std::size_t i = 0; i < n->grad.size(); ++i)
                    if (n->value[i] > 0.0) pa->grad[i] += n->grad[i];
        };
    });
}

/// Extract row i of an [s x d] matrix as a vector.
inline Tensor row(const Tensor& m, std::size_t i) {
    if (m.rank() != 2 || i >= m.dim(0)) throw std::invalid_argument("row: index out of range");
    const std::size_t d = m.dim(1);
    std::vector<double> v(m.values().begin() + static_cast<std::ptrdiff_t>(i * d),
                          m.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
    return detail::make_node(std::move(v), {d}, {m}, [i, d](TensorNode* n) {
        return [n, i, d] {
            TensorNode* p = n->parents[0].get();
            if (detail::wants_grad(p))
                for (std::size_t j = 0; j < d; ++j) p->grad[i * d + j] += n->grad[j];
        };
    });
}

/// Stack s row vectors into an [s x d] matrix. Backward scatters row i of the
/// output gradient into row tensor i.
inline Tensor stack_rows(const std::vector<Tensor>& rows) {
    if (rows.empty()) throw std::invalid_argument("stack_rows: no rows");
    const std::size_t s = rows.size(), d = rows[0].numel();
    std::vector<double> v;
    v.reserve(s * d);
    for (const Tensor& r : rows) {
        if (r.rank() != 1 || r.numel() != d)
            throw std::invalid_argument("stack_rows: inconsistent row shapes");
        v.insert(v.end(), r.values().begin(), r.values().end());
    }
    return detail::make_node(std::move(v), {s, d}, rows, [d](TensorNode* n) {
        return [n, d] {
            for (std::size_t i = 0; i < n->parents.size(); ++i) {
                TensorNode* p = n->parents[i].get();
                if (!detail::wants_grad(p)) continue;
                for (std::size_t j = 0; j < d; ++j) p->grad[j] += n->grad[i * d + j];
            }
        };
    });
}

/// encode step: output row i = a[i] + b[i], with gradients scattered back into
/// whichever of the two per-row leaves are trainable.
inline Tensor stack_sum_rows(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("stack_sum_rows: row count mismatch");
    const std::size_t s = a.size(), d = a[0].numel();
    std::vector<double> v(s * d);
    std::vector<Tensor> inputs;
    inputs.reserve(2 * s);
    for (std::size_t i = 0; i < s; ++i) {
        if (a[i].numel() != d || b[i].numel() != d)
            throw std::invalid_argument("stack_sum_rows: inconsistent dimensions");
        for (std::size_t j = 0; j < d; ++j) v[i * d + j] = a[i].values()[j] + b[i].values()[j];
        inputs.push_back(a[i]);
        inputs.push_back(b[i]);
    }
    return detail::make_node(std::move(v), {s, d}, std::move(inputs), [d](TensorNode* n) {
        return [n, d] {
            const std::size_t s = n->parents.size() / 2;
            for (std::size_t i = 0; i < s; ++i) {
                TensorNode* pa = n->parents[2 * i].get();
                TensorNode* pb = n->parents[2 * i + 1].get();
                if (detail::wants_grad(pa))
                    for (std::size_t j = 0; j < d; ++j) pa->grad[j] += n->grad[i * d + j];
                if (detail::wants_grad(pb))
                    for (std::size_t j = 0; j < d; ++j) pb->grad[j] += n->grad[i * d + j];
            }
        };
    });
}

// ---------------------------------------------------------------------------
// backward

/// Reverse-mode sweep from a scalar loss. Visits the recorded graph in exact
/// reverse topological order; non-leaf gradients are reset per sweep, leaf
/// gradients accumulate until zero_grad.
inline void backward(const Tensor& loss) {
    if (loss.numel() != 1) throw std::logic_error("backward: loss must be scalar");
    TensorNode* root = loss.node();
    if (!root->requires_grad) return;  // nothing trainable upstream

    // iterative post-order DFS over tracked parents
    std::vector<TensorNode*> topo;
    std::unordered_set<TensorNode*> visited;
    struct Frame {
        TensorNode* n;
        std::size_t next;
    };
    std::vector<Frame> stack{{root, 0}};
    visited.insert(root);
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.n->parents.size()) {
            TensorNode* p = f.n->parents[f.next++].get();
            if (p->requires_grad && visited.insert(p).second) stack.push_back({p, 0});
        } else {
            topo.push_back(f.n);
            stack.pop_back();
        }
    }

    for (TensorNode* n : topo) {
        if (n->is_leaf()) {
            if (n->grad.empty()) n->grad.assign(n->numel(), 0.0);
        } else {
            n->grad.assign(n->numel(), 0.0);
        }
    }
    root->grad[0] += 1.0;

    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        if ((*it)->backprop) (*it)->backprop();
    }
}

}  // namespace ingtag
