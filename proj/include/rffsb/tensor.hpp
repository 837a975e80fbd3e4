#pragma once
// Reverse-mode autodiff on dense row-major tensors.
//
// Each op builds a node holding its value, links to its parents, and a
// closure that propagates the node's gradient into the parents.  backward()
// runs the closures in reverse topological order.  Templated on the scalar:
// float for training throughput, double for finite-difference checks.

#include <cstddef>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "rffsb/common.hpp"

namespace rffsb::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

template <typename T>
struct TensorData {
    Shape shape;
    std::vector<T> v;
    std::vector<T> g;
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorData>> parents;
    std::function<void(TensorData&)> backward;

    void ensure_grad() {
        if (g.size() != v.size()) g.assign(v.size(), T(0));
    }
};

template <typename T>
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorData<T>> d) : d_(std::move(d)) {}

    static Tensor zeros(const Shape& s, bool requires_grad = false) {
        auto d = std::make_shared<TensorData<T>>();
        d->shape = s;
        d->v.assign(shape_numel(s), T(0));
        d->requires_grad = requires_grad;
        return Tensor(std::move(d));
    }

    static Tensor from(const Shape& s, std::vector<T> data,
                       bool requires_grad = false) {
        if (data.size() != shape_numel(s))
            throw ShapeError("tensor: data size does not match shape");
        auto d = std::make_shared<TensorData<T>>();
        d->shape = s;
        d->v = std::move(data);
        d->requires_grad = requires_grad;
        return Tensor(std::move(d));
    }

    bool defined() const { return static_cast<bool>(d_); }
    const Shape& shape() const { return d_->shape; }
    std::size_t numel() const { return d_->v.size(); }
    std::vector<T>& values() { return d_->v; }
    const std::vector<T>& values() const { return d_->v; }
    std::vector<T>& grad() { d_->ensure_grad(); return d_->g; }
    bool requires_grad() const { return d_->requires_grad; }
    std::shared_ptr<TensorData<T>> node() const { return d_; }

    void zero_grad() { d_->g.assign(d_->v.size(), T(0)); }

    // Seed this (scalar) node with gradient 1 and run the tape.
    void backward() {
        if (numel() != 1)
            throw ShapeError("backward: root must be a scalar");
        std::vector<TensorData<T>*> order;
        std::unordered_set<TensorData<T>*> seen;
        topo(d_.get(), seen, order);
        d_->ensure_grad();
        d_->g[0] = T(1);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            if ((*it)->backward) (*it)->backward(**it);
        }
    }

  private:
    static void topo(TensorData<T>* n, std::unordered_set<TensorData<T>*>& seen,
                     std::vector<TensorData<T>*>& order) {
        // Iterative DFS: graphs here are thousands of nodes deep in L.
        struct Item { TensorData<T>* n; std::size_t next; };
        std::vector<Item> stack{{n, 0}};
        seen.insert(n);
        while (!stack.empty()) {
            auto& top = stack.back();
            if (top.next < top.n->parents.size()) {
                TensorData<T>* p = top.n->parents[top.next++].get();
                if (seen.insert(p).second) stack.push_back({p, 0});
            } else {
                order.push_back(top.n);
                stack.pop_back();
            }
        }
    }

    std::shared_ptr<TensorData<T>> d_;
};

// --- op plumbing -----------------------------------------------------------

template <typename T>
Tensor<T> make_node(Shape shape, std::vector<T> value,
                    std::vector<Tensor<T>> parents,
                    std::function<void(TensorData<T>&)> backward) {
    auto d = std::make_shared<TensorData<T>>();
    d->shape = std::move(shape);
    d->v = std::move(value);
    d->requires_grad = false;
    for (auto& p : parents) {
        d->parents.push_back(p.node());
        d->requires_grad = d->requires_grad || p.node()->requires_grad ||
                           !p.node()->parents.empty();
    }
    d->backward = std::move(backward);
    return Tensor<T>(std::move(d));
}

// --- elementwise -----------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) throw ShapeError("add: shape mismatch");
    std::vector<T> v(a.numel());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = a.values()[k] + b.values()[k];
    auto an = a.node(); auto bn = b.node();
    return make_node<T>(a.shape(), std::move(v), {a, b},
        [an, bn](TensorData<T>& self) {
            an->ensure_grad(); bn->ensure_grad();
            for (std::size_t k = 0; k < self.g.size(); ++k) {
                an->g[k] += self.g[k];
                bn->g[k] += self.g[k];
            }
        });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T alpha) {
    std::vector<T> v(a.numel());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = alpha * a.values()[k];
    auto an = a.node();
    return make_node<T>(a.shape(), std::move(v), {a},
        [an, alpha](TensorData<T>& self) {
            an->ensure_grad();
            for (std::size_t k = 0; k < self.g.size(); ++k)
                an->g[k] += alpha * self.g[k];
        });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
    std::vector<T> v(a.numel());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = a.values()[k] > T(0) ? a.values()[k] : T(0);
    auto an = a.node();
    return make_node<T>(a.shape(), std::move(v), {a},
        [an](TensorData<T>& self) {
            an->ensure_grad();
            for (std::size_t k = 0; k < self.g.size(); ++k)
                if (self.v[k] > T(0)) an->g[k] += self.g[k];
        });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, const Shape& s) {
    if (shape_numel(s) != a.numel()) throw ShapeError("reshape: numel mismatch");
    auto an = a.node();
    return make_node<T>(s, a.values(), {a},
        [an](TensorData<T>& self) {
            an->ensure_grad();
            for (std::size_t k = 0; k < self.g.size(); ++k)
                an->g[k] += self.g[k];
        });
}

// Row-wise affine map with constant coefficients: y[b,k] = x[b,k]*scale[k] +
// shift[k] (k indexes the flattened non-batch extent).  Used to push inputs
// through a frozen feature normalizer differentiably.
template <typename T>
Tensor<T> affine_rows(const Tensor<T>& x, const std::vector<double>& scale,
                      const std::vector<double>& shift) {
    const std::size_t B = x.shape()[0];
    const std::size_t F = x.numel() / B;
    if (scale.size() != F || shift.size() != F)
        throw ShapeError("affine_rows: coefficient length mismatch");
    std::vector<T> v(x.numel());
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t k = 0; k < F; ++k)
            v[b * F + k] = static_cast<T>(
                x.values()[b * F + k] * scale[k] + shift[k]);
    auto xn = x.node();
    return make_node<T>(x.shape(), std::move(v), {x},
        [xn, scale, B, F](TensorData<T>& self) {
            xn->ensure_grad();
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t k = 0; k < F; ++k)
                    xn->g[b * F + k] += static_cast<T>(
                        self.g[b * F + k] * scale[k]);
        });
}

// --- dense algebra ---------------------------------------------------------

/// x:[B,I] w:[I,O] bias:[O] -> [B,O]
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    const auto& xs = x.shape(); const auto& ws = w.shape();
    if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[0] ||
        b.shape() != Shape{ws[1]})
        throw ShapeError("linear: bad shapes");
    const std::size_t B = xs[0], I = xs[1], O = ws[1];
    std::vector<T> v(B * O);
    for (std::size_t i = 0; i < B; ++i) {
        const T* xr = x.values().data() + i * I;
        T* vr = v.data() + i * O;
        for (std::size_t o = 0; o < O; ++o) vr[o] = b.values()[o];
        for (std::size_t k = 0; k < I; ++k) {
            const T xv = xr[k];
            const T* wr = w.values().data() + k * O;
            for (std::size_t o = 0; o < O; ++o) vr[o] += xv * wr[o];
        }
    }
    auto xn = x.node(); auto wn = w.node(); auto bn = b.node();
    return make_node<T>({B, O}, std::move(v), {x, w, b},
        [xn, wn, bn, B, I, O](TensorData<T>& self) {
            xn->ensure_grad(); wn->ensure_grad(); bn->ensure_grad();
            for (std::size_t i = 0; i < B; ++i) {
                const T* gr = self.g.data() + i * O;
                const T* xr = xn->v.data() + i * I;
                T* gxr = xn->g.data() + i * I;
                for (std::size_t o = 0; o < O; ++o) bn->g[o] += gr[o];
                for (std::size_t k = 0; k < I; ++k) {
                    const T* wr = wn->v.data() + k * O;
                    T* gwr = wn->g.data() + k * O;
                    T acc = T(0);
                    const T xv = xr[k];
#pragma omp simd reduction(+ : acc)
                    for (std::size_t o = 0; o < O; ++o) acc += gr[o] * wr[o];
                    for (std::size_t o = 0; o < O; ++o) gwr[o] += gr[o] * xv;
                    gxr[k] += acc;
                }
            }
        });
}

// --- reductions & losses ---------------------------------------------------

// Mean of squared differences over every element.
template <typename T>
Tensor<T> mse_loss(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) throw ShapeError("mse: shape mismatch");
    const std::size_t n = a.numel();
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = static_cast<double>(a.values()[k]) - b.values()[k];
        acc += d * d;
    }
    auto an = a.node(); auto bn = b.node();
    return make_node<T>({1}, {static_cast<T>(acc / n)}, {a, b},
        [an, bn, n](TensorData<T>& self) {
            an->ensure_grad(); bn->ensure_grad();
            const T s = self.g[0] * T(2) / static_cast<T>(n);
            for (std::size_t k = 0; k < n; ++k) {
                const T d = an->v[k] - bn->v[k];
                an->g[k] += s * d;
                bn->g[k] -= s * d;
            }
        });
}

// logits:[B,C], labels in [0,C).  Mean over the batch of -log softmax[label].
template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits,
                                const std::vector<int>& labels) {
    const auto& s = logits.shape();
    if (s.size() != 2 || labels.size() != s[0])
        throw ShapeError("softmax_ce: bad shapes");
    const std::size_t B = s[0], C = s[1];
    std::vector<double> probs(B * C);
    double loss = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
        const T* lr = logits.values().data() + i * C;
        double mx = lr[0];
        for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, (double)lr[c]);
        double z = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            probs[i * C + c] = std::exp((double)lr[c] - mx);
            z += probs[i * C + c];
        }
        for (std::size_t c = 0; c < C; ++c) probs[i * C + c] /= z;
        loss += -std::log(std::max(probs[i * C + labels[i]], 1e-300));
    }
    auto ln = logits.node();
    return make_node<T>({1}, {static_cast<T>(loss / B)}, {logits},
        [ln, probs, labels, B, C](TensorData<T>& self) {
            ln->ensure_grad();
            const T s0 = self.g[0] / static_cast<T>(B);
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t c = 0; c < C; ++c) {
                    const T p = static_cast<T>(probs[i * C + c]);
                    const T y = (static_cast<std::size_t>(labels[i]) == c)
                                    ? T(1) : T(0);
                    ln->g[i * C + c] += s0 * (p - y);
                }
        });
}

// KL(q || N(0,I)) summed over latent dims, averaged over the batch.
// mu, logvar: [B,D].
template <typename T>
Tensor<T> gaussian_kl(const Tensor<T>& mu, const Tensor<T>& logvar) {
    if (mu.shape() != logvar.shape() || mu.shape().size() != 2)
        throw ShapeError("gaussian_kl: bad shapes");
    const std::size_t B = mu.shape()[0], D = mu.shape()[1];
    double acc = 0.0;
    for (std::size_t k = 0; k < B * D; ++k) {
        const double m = mu.values()[k], lv = logvar.values()[k];
        acc += -0.5 * (1.0 + lv - m * m - std::exp(lv));
    }
    auto mn = mu.node(); auto vn = logvar.node();
    return make_node<T>({1}, {static_cast<T>(acc / B)}, {mu, logvar},
        [mn, vn, B, D](TensorData<T>& self) {
            mn->ensure_grad(); vn->ensure_grad();
            const T s = self.g[0] / static_cast<T>(B);
            for (std::size_t k = 0; k < B * D; ++k) {
                mn->g[k] += s * mn->v[k];
                vn->g[k] += s * T(0.5) *
                            (std::exp(vn->v[k]) - T(1));
            }
        });
}

// Reparameterized draw z = mu + exp(logvar/2) * eps with eps recorded.
template <typename T>
Tensor<T> gaussian_sample(const Tensor<T>& mu, const Tensor<T>& logvar,
                          const std::vector<T>& eps) {
    if (mu.shape() != logvar.shape() || eps.size() != mu.numel())
        throw ShapeError("gaussian_sample: bad shapes");
    std::vector<T> v(mu.numel());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = mu.values()[k] +
               std::exp(logvar.values()[k] / T(2)) * eps[k];
    auto mn = mu.node(); auto vn = logvar.node();
    return make_node<T>(mu.shape(), std::move(v), {mu, logvar},
        [mn, vn, eps](TensorData<T>& self) {
            mn->ensure_grad(); vn->ensure_grad();
            for (std::size_t k = 0; k < self.g.size(); ++k) {
                mn->g[k] += self.g[k];
                vn->g[k] += self.g[k] * T(0.5) *
                            std::exp(vn->v[k] / T(2)) * eps[k];
            }
        });
}

// Weighted sum of scalar losses.
template <typename T>
Tensor<T> weighted_sum(const std::vector<Tensor<T>>& terms,
                       const std::vector<double>& weights) {
    if (terms.size() != weights.size() || terms.empty())
        throw ShapeError("weighted_sum: size mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < terms.size(); ++k) {
        if (terms[k].numel() != 1) throw ShapeError("weighted_sum: non-scalar");
        acc += weights[k] * terms[k].values()[0];
    }
    std::vector<std::shared_ptr<TensorData<T>>> nodes;
    for (auto& t : terms) nodes.push_back(t.node());
    return make_node<T>({1}, {static_cast<T>(acc)}, terms,
        [nodes, weights](TensorData<T>& self) {
            for (std::size_t k = 0; k < nodes.size(); ++k) {
                nodes[k]->ensure_grad();
                nodes[k]->g[0] += self.g[0] * static_cast<T>(weights[k]);
            }
        });
}

}  // namespace rffsb::nn
