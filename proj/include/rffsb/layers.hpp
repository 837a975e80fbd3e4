#pragma once
// Named parameter store, layer building blocks, weight init, Adam.

#include <string>
#include <utility>

#include "rffsb/conv.hpp"
#include "rffsb/rng.hpp"
#include "rffsb/tensor.hpp"

namespace rffsb::nn {

template <typename T>
class ParamSet {
  public:
    Tensor<T> make(const std::string& name, const Shape& shape) {
        auto t = Tensor<T>::zeros(shape, /*requires_grad=*/true);
        items_.emplace_back(name, t);
        return t;
    }

    std::vector<std::pair<std::string, Tensor<T>>>& items() { return items_; }
    const std::vector<std::pair<std::string, Tensor<T>>>& items() const {
        return items_;
    }

    std::vector<Tensor<T>> tensors() const {
        std::vector<Tensor<T>> out;
        for (auto& [n, t] : items_) out.push_back(t);
        return out;
    }

    Tensor<T>* find(const std::string& name) {
        for (auto& [n, t] : items_)
            if (n == name) return &t;
        return nullptr;
    }

    std::size_t count() const { return items_.size(); }

  private:
    std::vector<std::pair<std::string, Tensor<T>>> items_;
};

// U(-1/sqrt(fan_in), +1/sqrt(fan_in)) -- Kaiming-uniform as used for ReLU
// stacks, same bound for weights and biases.
template <typename T>
void init_uniform_fanin(Tensor<T>& t, std::size_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
}

template <typename T>
struct Dense {
    Tensor<T> w, b;

    Dense() = default;
    Dense(ParamSet<T>& ps, const std::string& name, std::size_t in,
          std::size_t out, Rng& rng) {
        w = ps.make(name + ".w", {in, out});
        b = ps.make(name + ".b", {out});
        init_uniform_fanin(w, in, rng);
        init_uniform_fanin(b, in, rng);
    }

    Tensor<T> operator()(const Tensor<T>& x) const { return linear(x, w, b); }
};

template <typename T>
struct Conv1dLayer {
    Tensor<T> w, b;
    std::size_t stride = 1, pad = 0;

    Conv1dLayer() = default;
    Conv1dLayer(ParamSet<T>& ps, const std::string& name, std::size_t cin,
                std::size_t cout, std::size_t k, std::size_t stride_,
                std::size_t pad_, Rng& rng)
        : stride(stride_), pad(pad_) {
        w = ps.make(name + ".w", {cout, cin, k});
        b = ps.make(name + ".b", {cout});
        init_uniform_fanin(w, cin * k, rng);
        init_uniform_fanin(b, cin * k, rng);
    }

    Tensor<T> operator()(const Tensor<T>& x) const {
        return conv1d(x, w, b, stride, pad);
    }
};

template <typename T>
struct ConvT1dLayer {
    Tensor<T> w, b;
    std::size_t stride = 1, pad = 0, out_pad = 0;

    ConvT1dLayer() = default;
    ConvT1dLayer(ParamSet<T>& ps, const std::string& name, std::size_t cin,
                 std::size_t cout, std::size_t k, std::size_t stride_,
                 std::size_t pad_, std::size_t out_pad_, Rng& rng)
        : stride(stride_), pad(pad_), out_pad(out_pad_) {
        w = ps.make(name + ".w", {cin, cout, k});
        b = ps.make(name + ".b", {cout});
        init_uniform_fanin(w, cout * k, rng);
        init_uniform_fanin(b, cout * k, rng);
    }

    Tensor<T> operator()(const Tensor<T>& x) const {
        return conv1d_transpose(x, w, b, stride, pad, out_pad);
    }
};

template <typename T>
struct BatchNormLayer {
    Tensor<T> gamma, beta;
    BatchNormStats<T> stats;

    BatchNormLayer() = default;
    BatchNormLayer(ParamSet<T>& ps, const std::string& name, std::size_t c) {
        gamma = ps.make(name + ".gamma", {c});
        beta = ps.make(name + ".beta", {c});
        for (auto& v : gamma.values()) v = T(1);
        stats.running_mean.assign(c, 0.0);
        stats.running_var.assign(c, 1.0);
    }

    Tensor<T> operator()(const Tensor<T>& x, bool training) {
        return batchnorm1d(x, gamma, beta, stats, training);
    }
};

// Standard Adam with bias correction; moments kept in double so f32 training
// stays numerically stable and f64 check mode is exact.
template <typename T>
class Adam {
  public:
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    explicit Adam(ParamSet<T>& ps, double lr_ = 1e-3) : lr(lr_), ps_(&ps) {
        m_.resize(ps.count());
        v_.resize(ps.count());
        for (std::size_t k = 0; k < ps.count(); ++k) {
            m_[k].assign(ps.items()[k].second.numel(), 0.0);
            v_[k].assign(ps.items()[k].second.numel(), 0.0);
        }
    }

    void zero_grad() {
        for (auto& [n, t] : ps_->items()) t.zero_grad();
    }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
        for (std::size_t k = 0; k < ps_->count(); ++k) {
            auto& [name, p] = ps_->items()[k];
            auto& g = p.node()->g;
            if (g.size() != p.numel())
                throw ShapeError("adam: missing grad for " + name);
            auto& vals = p.values();
            for (std::size_t i = 0; i < vals.size(); ++i) {
                const double gi = g[i];
                m_[k][i] = beta1 * m_[k][i] + (1.0 - beta1) * gi;
                v_[k][i] = beta2 * v_[k][i] + (1.0 - beta2) * gi * gi;
                const double mh = m_[k][i] / bc1;
                const double vh = v_[k][i] / bc2;
                vals[i] = static_cast<T>(vals[i] - lr * mh / (std::sqrt(vh) + eps));
            }
        }
    }

    std::size_t steps_taken() const { return t_; }

  private:
    ParamSet<T>* ps_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// Concatenate along an axis (the contract needs it; the models do not).
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    const auto& s0 = parts[0].shape();
    if (axis >= s0.size()) throw ShapeError("concat: axis out of range");
    std::size_t total = 0;
    for (auto& p : parts) {
        const auto& s = p.shape();
        if (s.size() != s0.size()) throw ShapeError("concat: rank mismatch");
        for (std::size_t d = 0; d < s.size(); ++d)
            if (d != axis && s[d] != s0[d])
                throw ShapeError("concat: shape mismatch off-axis");
        total += s[axis];
    }
    Shape out_shape = s0;
    out_shape[axis] = total;

    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= s0[d];
    for (std::size_t d = axis + 1; d < s0.size(); ++d) inner *= s0[d];

    std::vector<T> v(shape_numel(out_shape));
    std::size_t col = 0;
    for (auto& p : parts) {
        const std::size_t pa = p.shape()[axis];
        for (std::size_t o = 0; o < outer; ++o)
            std::copy(p.values().begin() + o * pa * inner,
                      p.values().begin() + (o + 1) * pa * inner,
                      v.begin() + (o * total + col) * inner);
        col += pa;
    }

    std::vector<std::shared_ptr<TensorData<T>>> nodes;
    for (auto& p : parts) nodes.push_back(p.node());
    return make_node<T>(out_shape, std::move(v), parts,
        [nodes, outer, inner, total, axis](TensorData<T>& self) {
            std::size_t col = 0;
            for (auto& nd : nodes) {
                nd->ensure_grad();
                const std::size_t pa = nd->shape[axis];
                for (std::size_t o = 0; o < outer; ++o)
                    for (std::size_t i = 0; i < pa * inner; ++i)
                        nd->g[o * pa * inner + i] +=
                            self.g[(o * total + col) * inner + i];
                col += pa;
            }
        });
}

}  // namespace rffsb::nn
