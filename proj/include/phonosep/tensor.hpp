#pragma once

// Dense tensor engine with reverse-mode automatic differentiation.
// Templated on the scalar type: float for training, double for oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace phonosep {

using Shape = std::vector<int>;

inline std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (int e : s) {
        if (e <= 0) throw std::invalid_argument("tensor extent must be positive");
        n *= e;
    }
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

template <typename T>
struct Node {
    Shape shape;
    std::vector<T> val;
    std::vector<T> grad;
    bool requires_grad = false;  // leaf parameter
    bool in_graph = false;       // produced under the active tape this step
    std::function<void()> backward_fn;

    void ensure_grad() {
        if (grad.size() != val.size()) grad.assign(val.size(), T(0));
    }
    bool has_grad() const { return grad.size() == val.size(); }
};

template <typename T>
class Tensor;

// Records operation outputs in creation order (a topological order of the
// graph); backward replays it in reverse exactly once.
template <typename T>
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active() { return active_; }

    void record(std::shared_ptr<Node<T>> n) { nodes_.push_back(std::move(n)); }

    void backward(const Tensor<T>& loss);

    void reset() {
        nodes_.clear();
        consumed_ = false;
    }

    size_t size() const { return nodes_.size(); }

private:
    template <typename U>
    friend class TapeScope;
    std::vector<std::shared_ptr<Node<T>>> nodes_;
    bool consumed_ = false;
    static thread_local Tape* active_;
};

template <typename T>
thread_local Tape<T>* Tape<T>::active_ = nullptr;

template <typename T>
class TapeScope {
public:
    explicit TapeScope(Tape<T>& tape) : prev_(Tape<T>::active_) { Tape<T>::active_ = &tape; }
    ~TapeScope() { Tape<T>::active_ = prev_; }
    TapeScope(const TapeScope&) = delete;

private:
    Tape<T>* prev_;
};

template <typename T>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}

    static Tensor zeros(const Shape& shape) { return filled(shape, T(0)); }
    static Tensor ones(const Shape& shape) { return filled(shape, T(1)); }

    static Tensor filled(const Shape& shape, T v) {
        auto n = std::make_shared<Node<T>>();
        n->shape = shape;
        n->val.assign(shape_numel(shape), v);
        return Tensor(n);
    }

    static Tensor from_data(const Shape& shape, std::vector<T> data) {
        if ((std::int64_t)data.size() != shape_numel(shape))
            throw std::invalid_argument("data size does not match shape " + shape_str(shape));
        auto n = std::make_shared<Node<T>>();
        n->shape = shape;
        n->val = std::move(data);
        return Tensor(n);
    }

    static Tensor scalar(T v) { return filled({1}, v); }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::int64_t numel() const { return (std::int64_t)node_->val.size(); }
    std::vector<T>& data() { return node_->val; }
    const std::vector<T>& data() const { return node_->val; }
    // gradient storage lives on the shared node, so a const handle may still
    // accumulate into it during backward
    std::vector<T>& grad() const {
        node_->ensure_grad();
        return node_->grad;
    }
    bool has_grad() const { return node_->has_grad(); }

    T item() const {
        if (node_->val.size() != 1) throw std::invalid_argument("item() on non-scalar tensor");
        return node_->val[0];
    }

    void set_requires_grad(bool rg) {
        node_->requires_grad = rg;
        if (rg) node_->ensure_grad();
    }
    bool requires_grad() const { return node_->requires_grad; }
    void zero_grad() {
        node_->ensure_grad();
        std::fill(node_->grad.begin(), node_->grad.end(), T(0));
    }

    std::shared_ptr<Node<T>> node() const { return node_; }

private:
    std::shared_ptr<Node<T>> node_;
};

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
    if (loss.numel() != 1) throw std::invalid_argument("backward requires a scalar loss");
    if (consumed_) throw std::runtime_error("backward called twice on the same tape");
    if (!loss.node()->in_graph && !loss.node()->requires_grad)
        throw std::runtime_error("loss was not produced under this tape");
    consumed_ = true;
    loss.node()->ensure_grad();
    loss.node()->grad[0] = T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        Node<T>& n = **it;
        if (n.backward_fn && n.has_grad()) n.backward_fn();
        n.in_graph = false;
    }
}

namespace detail {

template <typename T>
inline bool tracked(const Tensor<T>& t) {
    return t.node()->requires_grad || t.node()->in_graph;
}

// Builds an op result; attaches/records backward only when a tape is active
// and some input is part of the graph.
template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> val, const std::vector<Tensor<T>>& parents,
                  std::function<void(Node<T>&)> bw) {
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->val = std::move(val);
    Tensor<T> out(n);
    Tape<T>* tape = Tape<T>::active();
    if (tape) {
        bool any = false;
        for (const auto& p : parents) any = any || tracked(p);
        if (any) {
            n->in_graph = true;
            Node<T>* raw = n.get();
            // keep parents alive through the closure
            auto keep = parents;
            n->backward_fn = [raw, bw = std::move(bw), keep]() { bw(*raw); };
            tape->record(n);
        }
    }
    return out;
}

template <typename T>
inline void accumulate(Tensor<T> t, const std::vector<T>& g) {
    auto& gr = t.grad();
    for (size_t i = 0; i < g.size(); ++i) gr[i] += g[i];
}

inline std::vector<std::int64_t> row_major_strides(const Shape& s) {
    std::vector<std::int64_t> st(s.size());
    std::int64_t acc = 1;
    for (int i = (int)s.size() - 1; i >= 0; --i) {
        st[i] = acc;
        acc *= s[i];
    }
    return st;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

template <typename T>
inline void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "add");
    std::vector<T> v(a.numel());
    for (std::int64_t i = 0; i < a.numel(); ++i) v[i] = a.data()[i] + b.data()[i];
    return detail::make_op<T>(a.shape(), std::move(v), {a, b}, [a, b](Node<T>& out) {
        detail::accumulate(a, out.grad);
        detail::accumulate(b, out.grad);
    });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "sub");
    std::vector<T> v(a.numel());
    for (std::int64_t i = 0; i < a.numel(); ++i) v[i] = a.data()[i] - b.data()[i];
    return detail::make_op<T>(a.shape(), std::move(v), {a, b}, [a, b](Node<T>& out) {
        detail::accumulate(a, out.grad);
        auto& gb = b.grad();
        for (size_t i = 0; i < out.grad.size(); ++i) gb[i] -= out.grad[i];
    });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "mul");
    std::vector<T> v(a.numel());
    for (std::int64_t i = 0; i < a.numel(); ++i) v[i] = a.data()[i] * b.data()[i];
    return detail::make_op<T>(a.shape(), std::move(v), {a, b}, [a, b](Node<T>& out) {
        auto& ga = a.grad();
        auto& gb = b.grad();
        for (size_t i = 0; i < out.grad.size(); ++i) {
            ga[i] += out.grad[i] * b.data()[i];
            gb[i] += out.grad[i] * a.data()[i];
        }
    });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
    std::vector<T> v(a.numel());
    for (std::int64_t i = 0; i < a.numel(); ++i) v[i] = a.data()[i] * c;
    return detail::make_op<T>(a.shape(), std::move(v), {a}, [a, c](Node<T>& out) {
        auto& ga = a.grad();
        for (size_t i = 0; i < out.grad.size(); ++i) ga[i] += out.grad[i] * c;
    });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope = T(0.2)) {
    std::vector<T> v(a.numel());
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        T x = a.data()[i];
        v[i] = x > T(0) ? x : slope * x;
    }
    return detail::make_op<T>(a.shape(), std::move(v), {a}, [a, slope](Node<T>& out) {
        auto& ga = a.grad();
        for (size_t i = 0; i < out.grad.size(); ++i)
            ga[i] += out.grad[i] * (a.data()[i] > T(0) ? T(1) : slope);
    });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
    return leaky_relu(a, T(0));
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
    std::vector<T> v(a.numel());
    for (std::int64_t i = 0; i < a.numel(); ++i) v[i] = T(1) / (T(1) + std::exp(-a.data()[i]));
    return detail::make_op<T>(a.shape(), std::move(v), {a}, [a](Node<T>& out) {
        auto& ga = a.grad();
        for (size_t i = 0; i < out.grad.size(); ++i) {
            T s = out.val[i];
            ga[i] += out.grad[i] * s * (T(1) - s);
        }
    });
}

// ---------------------------------------------------------------------------
// Broadcast / reshape / slicing
// ---------------------------------------------------------------------------

// Right-aligned broadcasting: every extent of `a` must be 1 or equal the
// corresponding target extent. Backward sums gradients over broadcast axes.
template <typename T>
Tensor<T> broadcast(const Tensor<T>& a, const Shape& target) {
    const Shape& src = a.shape();
    if (src.size() > target.size())
        throw std::invalid_argument("broadcast: source rank exceeds target rank");
    size_t off = target.size() - src.size();
    for (size_t i = 0; i < src.size(); ++i) {
        if (src[i] != 1 && src[i] != target[off + i])
            throw std::invalid_argument("broadcast: incompatible extent " + shape_str(src) +
                                        " -> " + shape_str(target));
    }
    // Source strides padded to target rank, zeroed where broadcast.
    auto sst = detail::row_major_strides(src);
    std::vector<std::int64_t> strides(target.size(), 0);
    for (size_t i = 0; i < src.size(); ++i) strides[off + i] = (src[i] == 1) ? 0 : sst[i];

    std::int64_t n = shape_numel(target);
    auto tst = detail::row_major_strides(target);
    std::vector<T> v((size_t)n);
    for (std::int64_t idx = 0; idx < n; ++idx) {
        std::int64_t rem = idx, si = 0;
        for (size_t d = 0; d < target.size(); ++d) {
            std::int64_t c = rem / tst[d];
            rem -= c * tst[d];
            si += c * strides[d];
        }
        v[(size_t)idx] = a.data()[(size_t)si];
    }
    return detail::make_op<T>(target, std::move(v), {a},
                              [a, strides, tst, target](Node<T>& out) {
                                  auto& ga = a.grad();
                                  std::int64_t n2 = (std::int64_t)out.grad.size();
                                  for (std::int64_t idx = 0; idx < n2; ++idx) {
                                      std::int64_t rem = idx, si = 0;
                                      for (size_t d = 0; d < target.size(); ++d) {
                                          std::int64_t c = rem / tst[d];
                                          rem -= c * tst[d];
                                          si += c * strides[d];
                                      }
                                      ga[(size_t)si] += out.grad[(size_t)idx];
                                  }
                              });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, const Shape& shape) {
    if (shape_numel(shape) != a.numel())
        throw std::invalid_argument("reshape: element count mismatch " + shape_str(a.shape()) +
                                    " -> " + shape_str(shape));
    std::vector<T> v = a.data();
    return detail::make_op<T>(shape, std::move(v), {a},
                              [a](Node<T>& out) { detail::accumulate(a, out.grad); });
}

// Slice along the last axis: out[..., i] = a[..., start + i].
template <typename T>
Tensor<T> slice_last(const Tensor<T>& a, int start, int len) {
    const Shape& s = a.shape();
    int last = s.back();
    if (start < 0 || len <= 0 || start + len > last)
        throw std::invalid_argument("slice_last: range out of bounds");
    Shape os = s;
    os.back() = len;
    std::int64_t rows = a.numel() / last;
    std::vector<T> v((size_t)(rows * len));
    for (std::int64_t r = 0; r < rows; ++r)
        for (int i = 0; i < len; ++i) v[(size_t)(r * len + i)] = a.data()[(size_t)(r * last + start + i)];
    return detail::make_op<T>(os, std::move(v), {a}, [a, start, len, last, rows](Node<T>& out) {
        auto& ga = a.grad();
        for (std::int64_t r = 0; r < rows; ++r)
            for (int i = 0; i < len; ++i)
                ga[(size_t)(r * last + start + i)] += out.grad[(size_t)(r * len + i)];
    });
}

// Concatenate along the last axis.
template <typename T>
Tensor<T> concat_last(const Tensor<T>& a, const Tensor<T>& b) {
    const Shape &sa = a.shape(), &sb = b.shape();
    if (sa.size() != sb.size()) throw std::invalid_argument("concat_last: rank mismatch");
    for (size_t i = 0; i + 1 < sa.size(); ++i)
        if (sa[i] != sb[i]) throw std::invalid_argument("concat_last: leading extents differ");
    int ca = sa.back(), cb = sb.back();
    Shape os = sa;
    os.back() = ca + cb;
    std::int64_t rows = a.numel() / ca;
    std::vector<T> v((size_t)(rows * (ca + cb)));
    for (std::int64_t r = 0; r < rows; ++r) {
        for (int i = 0; i < ca; ++i) v[(size_t)(r * (ca + cb) + i)] = a.data()[(size_t)(r * ca + i)];
        for (int i = 0; i < cb; ++i) v[(size_t)(r * (ca + cb) + ca + i)] = b.data()[(size_t)(r * cb + i)];
    }
    return detail::make_op<T>(os, std::move(v), {a, b}, [a, b, ca, cb, rows](Node<T>& out) {
        auto& ga = a.grad();
        auto& gb = b.grad();
        for (std::int64_t r = 0; r < rows; ++r) {
            for (int i = 0; i < ca; ++i) ga[(size_t)(r * ca + i)] += out.grad[(size_t)(r * (ca + cb) + i)];
            for (int i = 0; i < cb; ++i) gb[(size_t)(r * cb + i)] += out.grad[(size_t)(r * (ca + cb) + ca + i)];
        }
    });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> sum_all(const Tensor<T>& a) {
    double acc = 0;  // reductions accumulate in double regardless of T
    for (std::int64_t i = 0; i < a.numel(); ++i) acc += (double)a.data()[i];
    return detail::make_op<T>({1}, {T(acc)}, {a}, [a](Node<T>& out) {
        auto& ga = a.grad();
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += out.grad[0];
    });
}

template <typename T>
Tensor<T> reduce_sum(const Tensor<T>& a, int axis) {
    const Shape& s = a.shape();
    if (axis < 0) axis += (int)s.size();
    if (axis < 0 || axis >= (int)s.size()) throw std::invalid_argument("reduce_sum: bad axis");
    std::int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s[i];
    for (int i = axis + 1; i < (int)s.size(); ++i) inner *= s[i];
    int n = s[axis];
    Shape os;
    for (int i = 0; i < (int)s.size(); ++i)
        if (i != axis) os.push_back(s[i]);
    if (os.empty()) os.push_back(1);
    std::vector<T> v((size_t)(outer * inner), T(0));
    for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t in = 0; in < inner; ++in) {
            double acc = 0;
            for (int k = 0; k < n; ++k) acc += (double)a.data()[(size_t)((o * n + k) * inner + in)];
            v[(size_t)(o * inner + in)] = T(acc);
        }
    return detail::make_op<T>(os, std::move(v), {a}, [a, outer, inner, n](Node<T>& out) {
        auto& ga = a.grad();
        for (std::int64_t o = 0; o < outer; ++o)
            for (int k = 0; k < n; ++k)
                for (std::int64_t in = 0; in < inner; ++in)
                    ga[(size_t)((o * n + k) * inner + in)] += out.grad[(size_t)(o * inner + in)];
    });
}

template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& a, int axis) {
    const Shape& s = a.shape();
    int ax = axis < 0 ? axis + (int)s.size() : axis;
    return scale(reduce_sum(a, axis), T(1) / T(s[ax]));
}

template <typename T>
Tensor<T> mean_abs_error(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "mean_abs_error");
    std::int64_t n = a.numel();
    double acc = 0;
    for (std::int64_t i = 0; i < n; ++i) acc += std::abs((double)a.data()[i] - (double)b.data()[i]);
    T v = T(acc / (double)n);
    return detail::make_op<T>({1}, {v}, {a, b}, [a, b, n](Node<T>& out) {
        auto& ga = a.grad();
        auto& gb = b.grad();
        T g = out.grad[0] / T(n);
        for (std::int64_t i = 0; i < n; ++i) {
            T d = a.data()[i] - b.data()[i];
            T sgn = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
            ga[(size_t)i] += g * sgn;
            gb[(size_t)i] -= g * sgn;
        }
    });
}

// ---------------------------------------------------------------------------
// Softmax
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> softmax(const Tensor<T>& a, int axis) {
    const Shape& s = a.shape();
    if (axis < 0) axis += (int)s.size();
    if (axis < 0 || axis >= (int)s.size()) throw std::invalid_argument("softmax: bad axis");
    std::int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s[i];
    for (int i = axis + 1; i < (int)s.size(); ++i) inner *= s[i];
    int n = s[axis];
    std::vector<T> v(a.data().size());
    for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t in = 0; in < inner; ++in) {
            T mx = a.data()[(size_t)(o * n * inner + in)];
            for (int k = 1; k < n; ++k) mx = std::max(mx, a.data()[(size_t)((o * n + k) * inner + in)]);
            double z = 0;
            for (int k = 0; k < n; ++k) {
                T e = std::exp(a.data()[(size_t)((o * n + k) * inner + in)] - mx);
                v[(size_t)((o * n + k) * inner + in)] = e;
                z += (double)e;
            }
            for (int k = 0; k < n; ++k) v[(size_t)((o * n + k) * inner + in)] /= T(z);
        }
    return detail::make_op<T>(s, std::move(v), {a}, [a, outer, inner, n](Node<T>& out) {
        auto& ga = a.grad();
        for (std::int64_t o = 0; o < outer; ++o)
            for (std::int64_t in = 0; in < inner; ++in) {
                double dot = 0;
                for (int k = 0; k < n; ++k) {
                    size_t idx = (size_t)((o * n + k) * inner + in);
                    dot += (double)out.grad[idx] * (double)out.val[idx];
                }
                for (int k = 0; k < n; ++k) {
                    size_t idx = (size_t)((o * n + k) * inner + in);
                    ga[idx] += out.val[idx] * (out.grad[idx] - T(dot));
                }
            }
    });
}

// ---------------------------------------------------------------------------
// Matrix products
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2)
        throw std::invalid_argument("matmul expects 2-D operands");
    int m = a.shape()[0], k = a.shape()[1], k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2)
        throw std::invalid_argument("matmul: inner extents differ " + shape_str(a.shape()) +
                                    " x " + shape_str(b.shape()));
    std::vector<T> v((size_t)m * n, T(0));
    const T* A = a.data().data();
    const T* B = b.data().data();
#pragma omp parallel for if (m * n > 4096)
    for (int i = 0; i < m; ++i)
        for (int kk = 0; kk < k; ++kk) {
            T av = A[(size_t)i * k + kk];
            for (int j = 0; j < n; ++j) v[(size_t)i * n + j] += av * B[(size_t)kk * n + j];
        }
    return detail::make_op<T>({m, n}, std::move(v), {a, b}, [a, b, m, k, n](Node<T>& out) {
        auto& ga = a.grad();
        auto& gb = b.grad();
        const T* G = out.grad.data();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) {
                T g = G[(size_t)i * n + j];
                for (int kk = 0; kk < k; ++kk) {
                    ga[(size_t)i * k + kk] += g * b.data()[(size_t)kk * n + j];
                    gb[(size_t)kk * n + j] += g * a.data()[(size_t)i * k + kk];
                }
            }
    });
}

// Contract the trailing axis of z [B,W,P] against the trailing axis of a
// basis tensor [R...,P]; yields [B,W,R...]. Used by strong FiLM modulation.
template <typename T>
Tensor<T> contract_p(const Tensor<T>& z, const Tensor<T>& basis) {
    if (z.shape().size() != 3) throw std::invalid_argument("contract_p: z must be [B,W,P]");
    int B = z.shape()[0], W = z.shape()[1], P = z.shape()[2];
    const Shape& bs = basis.shape();
    if (bs.back() != P)
        throw std::invalid_argument("contract_p: basis trailing extent " +
                                    std::to_string(bs.back()) + " != P=" + std::to_string(P));
    std::int64_t R = basis.numel() / P;
    Shape os = {B, W};
    for (size_t i = 0; i + 1 < bs.size(); ++i) os.push_back(bs[i]);
    std::vector<T> v((size_t)(B * W * R), T(0));
    for (std::int64_t bw = 0; bw < (std::int64_t)B * W; ++bw)
        for (std::int64_t r = 0; r < R; ++r) {
            double acc = 0;
            for (int p = 0; p < P; ++p)
                acc += (double)z.data()[(size_t)(bw * P + p)] * (double)basis.data()[(size_t)(r * P + p)];
            v[(size_t)(bw * R + r)] = T(acc);
        }
    return detail::make_op<T>(os, std::move(v), {z, basis}, [z, basis, B, W, P, R](Node<T>& out) {
        auto& gz = z.grad();
        auto& gb = basis.grad();
        for (std::int64_t bw = 0; bw < (std::int64_t)B * W; ++bw)
            for (std::int64_t r = 0; r < R; ++r) {
                T g = out.grad[(size_t)(bw * R + r)];
                for (int p = 0; p < P; ++p) {
                    gz[(size_t)(bw * P + p)] += g * basis.data()[(size_t)(r * P + p)];
                    gb[(size_t)(r * P + p)] += g * z.data()[(size_t)(bw * P + p)];
                }
            }
    });
}

// ---------------------------------------------------------------------------
// Autopool: learnable interpolation between mean- and max-pooling over the
// time axis, one temperature coefficient per trailing dimension.
// Input [N,P] or [B,N,P] with alpha [P]; pools over N.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> autopool(const Tensor<T>& x, const Tensor<T>& alpha) {
    const Shape& s = x.shape();
    if (s.size() != 2 && s.size() != 3) throw std::invalid_argument("autopool: rank must be 2 or 3");
    int time_axis = (int)s.size() - 2;
    if (s[time_axis] == 0) throw std::invalid_argument("autopool: empty time axis");
    if (alpha.shape() != Shape{s.back()})
        throw std::invalid_argument("autopool: alpha shape must be [P]");
    Tensor<T> scaled = mul(x, broadcast(alpha, s));
    Tensor<T> w = softmax(scaled, time_axis);
    return reduce_sum(mul(w, x), time_axis);
}

}  // namespace phonosep
