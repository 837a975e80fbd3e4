#pragma once
// 1-D convolution, its transpose, and batch normalization as autodiff nodes.
//
// Every strided access j = s*t + off is split into a phase (j mod s) and a
// shift, so the hot loops run unit-stride over de-interleaved phase rows and
// the compiler can vectorize them.  stride 1 short-circuits to the original
// rows (no copies, same summation order).

#include <algorithm>

#include "rffsb/tensor.hpp"

namespace rffsb::nn {

namespace convdet {

// j = s*t + off with j in [0, Ltot), t in [0, Tmax).  Phase row phi holds
// every s-th element starting at phi; the in-row index is t + q.  Yields the
// valid t range [t0, t1).
struct PhaseRange {
    std::size_t phi, t0, t1;
    std::ptrdiff_t q;
};

inline PhaseRange phase_range(std::ptrdiff_t off, std::size_t s,
                              std::size_t Ltot, std::size_t Tmax) {
    const auto ss = static_cast<std::ptrdiff_t>(s);
    std::ptrdiff_t ph = off % ss;
    if (ph < 0) ph += ss;
    PhaseRange r;
    r.phi = static_cast<std::size_t>(ph);
    r.q = (off - ph) / ss;
    const std::size_t lphi =
        Ltot > r.phi ? (Ltot - r.phi + s - 1) / s : 0;
    std::ptrdiff_t lo = r.q < 0 ? -r.q : 0;
    std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(lphi) - r.q;
    if (hi < 0) hi = 0;
    const auto tmax = static_cast<std::ptrdiff_t>(Tmax);
    if (lo > tmax) lo = tmax;
    if (hi > tmax) hi = tmax;
    if (hi < lo) hi = lo;
    r.t0 = static_cast<std::size_t>(lo);
    r.t1 = static_cast<std::size_t>(hi);
    return r;
}

// De-interleaved copy of one length-L row: phase phi occupies [start(phi),
// start(phi)+len(phi)).  For s == 1 callers use the row directly.
template <typename T>
struct PhaseRows {
    std::vector<T> buf;
    std::size_t starts[8] = {};
    std::size_t s = 1, L = 0;

    void layout(std::size_t L_, std::size_t s_) {
        s = s_;
        L = L_;
        buf.assign(L, T(0));
        std::size_t at = 0;
        for (std::size_t phi = 0; phi < s; ++phi) {
            starts[phi] = at;
            at += L > phi ? (L - phi + s - 1) / s : 0;
        }
    }
    void fill(const T* row) {
        for (std::size_t phi = 0; phi < s; ++phi) {
            T* dst = buf.data() + starts[phi];
            std::size_t m = 0;
            for (std::size_t j = phi; j < L; j += s) dst[m++] = row[j];
        }
    }
    void zero() { std::fill(buf.begin(), buf.end(), T(0)); }
    // Scatter-add the phases back onto the interleaved row.
    void add_to(T* row) const {
        for (std::size_t phi = 0; phi < s; ++phi) {
            const T* src = buf.data() + starts[phi];
            std::size_t m = 0;
            for (std::size_t j = phi; j < L; j += s) row[j] += src[m++];
        }
    }
    T* phase(std::size_t phi) { return buf.data() + starts[phi]; }
    const T* phase(std::size_t phi) const { return buf.data() + starts[phi]; }
};

}  // namespace convdet

// x:[B,Cin,L]  w:[Cout,Cin,K]  b:[Cout]  ->  [B,Cout,Lo]
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 std::size_t stride, std::size_t pad) {
    const auto& xs = x.shape(); const auto& ws = w.shape();
    if (xs.size() != 3 || ws.size() != 3 || xs[1] != ws[1] ||
        b.shape() != Shape{ws[0]})
        throw ShapeError("conv1d: bad shapes");
    const std::size_t B = xs[0], Cin = xs[1], L = xs[2];
    const std::size_t Cout = ws[0], K = ws[2];
    if (L + 2 * pad < K) throw ShapeError("conv1d: kernel exceeds input");
    if (stride == 0 || stride > 8) throw ShapeError("conv1d: bad stride");
    const std::size_t Lo = (L + 2 * pad - K) / stride + 1;

    std::vector<T> y(B * Cout * Lo);
    convdet::PhaseRows<T> xph;
    if (stride > 1) xph.layout(L, stride);
    for (std::size_t bi = 0; bi < B; ++bi) {
        for (std::size_t co = 0; co < Cout; ++co) {
            T* yr = y.data() + (bi * Cout + co) * Lo;
            const T bv = b.values()[co];
            for (std::size_t t = 0; t < Lo; ++t) yr[t] = bv;
        }
        for (std::size_t ci = 0; ci < Cin; ++ci) {
            const T* xr = x.values().data() + (bi * Cin + ci) * L;
            if (stride > 1) xph.fill(xr);
            for (std::size_t co = 0; co < Cout; ++co) {
                T* yr = y.data() + (bi * Cout + co) * Lo;
                const T* wr = w.values().data() + (co * Cin + ci) * K;
                for (std::size_t k = 0; k < K; ++k) {
                    const auto r = convdet::phase_range(
                        static_cast<std::ptrdiff_t>(k) -
                            static_cast<std::ptrdiff_t>(pad),
                        stride, L, Lo);
                    const T* xp = stride == 1 ? xr : xph.phase(r.phi);
                    const T wv = wr[k];
                    const std::ptrdiff_t q = r.q;
                    for (std::size_t t = r.t0; t < r.t1; ++t)
                        yr[t] += wv * xp[static_cast<std::ptrdiff_t>(t) + q];
                }
            }
        }
    }

    auto xn = x.node(); auto wn = w.node(); auto bn = b.node();
    return make_node<T>({B, Cout, Lo}, std::move(y), {x, w, b},
        [xn, wn, bn, B, Cin, L, Cout, K, Lo, stride, pad](TensorData<T>& self) {
            xn->ensure_grad(); wn->ensure_grad(); bn->ensure_grad();
            convdet::PhaseRows<T> xph, gph;
            if (stride > 1) {
                xph.layout(L, stride);
                gph.layout(L, stride);
            }
            for (std::size_t bi = 0; bi < B; ++bi) {
                for (std::size_t co = 0; co < Cout; ++co) {
                    const T* gr = self.g.data() + (bi * Cout + co) * Lo;
                    T acc = T(0);
#pragma omp simd reduction(+ : acc)
                    for (std::size_t t = 0; t < Lo; ++t) acc += gr[t];
                    bn->g[co] += acc;
                }
                for (std::size_t ci = 0; ci < Cin; ++ci) {
                    const T* xr = xn->v.data() + (bi * Cin + ci) * L;
                    T* gxr = xn->g.data() + (bi * Cin + ci) * L;
                    if (stride > 1) {
                        xph.fill(xr);
                        gph.zero();
                    }
                    for (std::size_t co = 0; co < Cout; ++co) {
                        const T* gr = self.g.data() + (bi * Cout + co) * Lo;
                        const T* wr = wn->v.data() + (co * Cin + ci) * K;
                        T* gwr = wn->g.data() + (co * Cin + ci) * K;
                        for (std::size_t k = 0; k < K; ++k) {
                            const auto r = convdet::phase_range(
                                static_cast<std::ptrdiff_t>(k) -
                                    static_cast<std::ptrdiff_t>(pad),
                                stride, L, Lo);
                            const T* xp =
                                stride == 1 ? xr : xph.phase(r.phi);
                            T* gp = stride == 1 ? gxr : gph.phase(r.phi);
                            const T wv = wr[k];
                            const std::ptrdiff_t q = r.q;
                            for (std::size_t t = r.t0; t < r.t1; ++t)
                                gp[static_cast<std::ptrdiff_t>(t) + q] +=
                                    wv * gr[t];
                            T wacc = T(0);
#pragma omp simd reduction(+ : wacc)
                            for (std::size_t t = r.t0; t < r.t1; ++t)
                                wacc +=
                                    xp[static_cast<std::ptrdiff_t>(t) + q] *
                                    gr[t];
                            gwr[k] += wacc;
                        }
                    }
                    if (stride > 1) gph.add_to(gxr);
                }
            }
        });
}

// x:[B,Cin,L]  w:[Cin,Cout,K]  b:[Cout]  ->  [B,Cout,Lo]
// Lo = (L-1)*stride - 2*pad + K + out_pad
template <typename T>
Tensor<T> conv1d_transpose(const Tensor<T>& x, const Tensor<T>& w,
                           const Tensor<T>& b, std::size_t stride,
                           std::size_t pad, std::size_t out_pad) {
    const auto& xs = x.shape(); const auto& ws = w.shape();
    if (xs.size() != 3 || ws.size() != 3 || xs[1] != ws[0] ||
        b.shape() != Shape{ws[1]})
        throw ShapeError("conv1d_transpose: bad shapes");
    const std::size_t B = xs[0], Cin = xs[1], L = xs[2];
    const std::size_t Cout = ws[1], K = ws[2];
    if (stride == 0 || stride > 8)
        throw ShapeError("conv1d_transpose: bad stride");
    const std::ptrdiff_t lo_sig = static_cast<std::ptrdiff_t>((L - 1) * stride) -
                                  2 * static_cast<std::ptrdiff_t>(pad) +
                                  static_cast<std::ptrdiff_t>(K + out_pad);
    if (lo_sig <= 0) throw ShapeError("conv1d_transpose: empty output");
    const std::size_t Lo = static_cast<std::size_t>(lo_sig);

    // Output position j = stride*t - pad + k; accumulate per output phase.
    std::vector<T> y(B * Cout * Lo);
    convdet::PhaseRows<T> yph;
    if (stride > 1) yph.layout(Lo, stride);
    for (std::size_t bi = 0; bi < B; ++bi)
        for (std::size_t co = 0; co < Cout; ++co) {
            T* yr = y.data() + (bi * Cout + co) * Lo;
            const T bv = b.values()[co];
            for (std::size_t j = 0; j < Lo; ++j) yr[j] = bv;
            if (stride > 1) yph.zero();
            for (std::size_t ci = 0; ci < Cin; ++ci) {
                const T* xr = x.values().data() + (bi * Cin + ci) * L;
                const T* wr = w.values().data() + (ci * Cout + co) * K;
                for (std::size_t k = 0; k < K; ++k) {
                    const auto r = convdet::phase_range(
                        static_cast<std::ptrdiff_t>(k) -
                            static_cast<std::ptrdiff_t>(pad),
                        stride, Lo, L);
                    T* yp = stride == 1 ? yr : yph.phase(r.phi);
                    const T wv = wr[k];
                    const std::ptrdiff_t q = r.q;
                    for (std::size_t t = r.t0; t < r.t1; ++t)
                        yp[static_cast<std::ptrdiff_t>(t) + q] += wv * xr[t];
                }
            }
            if (stride > 1) yph.add_to(yr);
        }

    auto xn = x.node(); auto wn = w.node(); auto bn = b.node();
    return make_node<T>({B, Cout, Lo}, std::move(y), {x, w, b},
        [xn, wn, bn, B, Cin, L, Cout, K, Lo, stride,
         pad](TensorData<T>& self) {
            xn->ensure_grad(); wn->ensure_grad(); bn->ensure_grad();
            convdet::PhaseRows<T> grph;
            if (stride > 1) grph.layout(Lo, stride);
            for (std::size_t bi = 0; bi < B; ++bi)
                for (std::size_t co = 0; co < Cout; ++co) {
                    const T* gr = self.g.data() + (bi * Cout + co) * Lo;
                    T acc = T(0);
#pragma omp simd reduction(+ : acc)
                    for (std::size_t j = 0; j < Lo; ++j) acc += gr[j];
                    bn->g[co] += acc;
                    if (stride > 1) grph.fill(gr);
                    for (std::size_t ci = 0; ci < Cin; ++ci) {
                        const T* xr = xn->v.data() + (bi * Cin + ci) * L;
                        T* gxr = xn->g.data() + (bi * Cin + ci) * L;
                        const T* wr = wn->v.data() + (ci * Cout + co) * K;
                        T* gwr = wn->g.data() + (ci * Cout + co) * K;
                        for (std::size_t k = 0; k < K; ++k) {
                            const auto r = convdet::phase_range(
                                static_cast<std::ptrdiff_t>(k) -
                                    static_cast<std::ptrdiff_t>(pad),
                                stride, Lo, L);
                            const T* gp =
                                stride == 1 ? gr : grph.phase(r.phi);
                            const T wv = wr[k];
                            const std::ptrdiff_t q = r.q;
                            for (std::size_t t = r.t0; t < r.t1; ++t)
                                gxr[t] +=
                                    wv *
                                    gp[static_cast<std::ptrdiff_t>(t) + q];
                            T wacc = T(0);
#pragma omp simd reduction(+ : wacc)
                            for (std::size_t t = r.t0; t < r.t1; ++t)
                                wacc +=
                                    xr[t] *
                                    gp[static_cast<std::ptrdiff_t>(t) + q];
                            gwr[k] += wacc;
                        }
                    }
                }
        });
}

// Batch normalization over the channel axis of [B,C,L] (or [B,C]).
// Batch statistics in training, running statistics in eval; the eval path is
// still differentiable w.r.t. the input, which attack training relies on.
template <typename T>
struct BatchNormStats {
    std::vector<double> running_mean, running_var;
    double momentum = 0.1;
    double eps = 1e-5;
};

template <typename T>
Tensor<T> batchnorm1d(const Tensor<T>& x, const Tensor<T>& gamma,
                      const Tensor<T>& beta, BatchNormStats<T>& stats,
                      bool training) {
    const auto& xs = x.shape();
    if (xs.size() != 3 && xs.size() != 2)
        throw ShapeError("batchnorm1d: expect [B,C,L] or [B,C]");
    const std::size_t B = xs[0], C = xs[1], L = xs.size() == 3 ? xs[2] : 1;
    if (gamma.shape() != Shape{C} || beta.shape() != Shape{C})
        throw ShapeError("batchnorm1d: affine shape mismatch");
    if (stats.running_mean.size() != C) {
        stats.running_mean.assign(C, 0.0);
        stats.running_var.assign(C, 1.0);
    }
    const std::size_t m = B * L;

    std::vector<double> mu(C), var(C);
    if (training) {
        for (std::size_t c = 0; c < C; ++c) {
            double acc = 0.0;
            for (std::size_t bi = 0; bi < B; ++bi) {
                const T* xr = x.values().data() + (bi * C + c) * L;
#pragma omp simd reduction(+ : acc)
                for (std::size_t t = 0; t < L; ++t) acc += xr[t];
            }
            mu[c] = acc / m;
            double v2 = 0.0;
            for (std::size_t bi = 0; bi < B; ++bi) {
                const T* xr = x.values().data() + (bi * C + c) * L;
#pragma omp simd reduction(+ : v2)
                for (std::size_t t = 0; t < L; ++t) {
                    const double d = xr[t] - mu[c];
                    v2 += d * d;
                }
            }
            var[c] = v2 / m;   // biased, used for normalization
            const double unbiased = m > 1 ? v2 / (m - 1) : v2;
            stats.running_mean[c] = (1.0 - stats.momentum) * stats.running_mean[c] +
                                    stats.momentum * mu[c];
            stats.running_var[c] = (1.0 - stats.momentum) * stats.running_var[c] +
                                   stats.momentum * unbiased;
        }
    } else {
        mu = stats.running_mean;
        var = stats.running_var;
    }

    std::vector<T> y(x.numel());
    std::vector<T> xhat(x.numel());
    for (std::size_t bi = 0; bi < B; ++bi)
        for (std::size_t c = 0; c < C; ++c) {
            const double inv = 1.0 / std::sqrt(var[c] + stats.eps);
            const T* xr = x.values().data() + (bi * C + c) * L;
            T* yr = y.data() + (bi * C + c) * L;
            T* hr = xhat.data() + (bi * C + c) * L;
            const T gm = gamma.values()[c], bt = beta.values()[c];
            for (std::size_t t = 0; t < L; ++t) {
                hr[t] = static_cast<T>((xr[t] - mu[c]) * inv);
                yr[t] = gm * hr[t] + bt;
            }
        }

    auto xn = x.node(); auto gn = gamma.node(); auto btn = beta.node();
    return make_node<T>(xs, std::move(y), {x, gamma, beta},
        [xn, gn, btn, xhat, var, eps = stats.eps, training, B, C, L, m](
            TensorData<T>& self) {
            xn->ensure_grad(); gn->ensure_grad(); btn->ensure_grad();
            for (std::size_t c = 0; c < C; ++c) {
                const double inv = 1.0 / std::sqrt(var[c] + eps);
                double sg = 0.0, sgh = 0.0;
                for (std::size_t bi = 0; bi < B; ++bi) {
                    const T* gr = self.g.data() + (bi * C + c) * L;
                    const T* hr = xhat.data() + (bi * C + c) * L;
#pragma omp simd reduction(+ : sg, sgh)
                    for (std::size_t t = 0; t < L; ++t) {
                        sg += gr[t];
                        sgh += gr[t] * hr[t];
                    }
                }
                gn->g[c] += static_cast<T>(sgh);
                btn->g[c] += static_cast<T>(sg);
                const double gm = gn->v[c];
                if (training) {
                    const double c1 = sg / m, c2 = sgh / m;
                    for (std::size_t bi = 0; bi < B; ++bi) {
                        const T* gr = self.g.data() + (bi * C + c) * L;
                        const T* hr = xhat.data() + (bi * C + c) * L;
                        T* gxr = xn->g.data() + (bi * C + c) * L;
                        for (std::size_t t = 0; t < L; ++t)
                            gxr[t] += static_cast<T>(
                                gm * inv * (gr[t] - c1 - hr[t] * c2));
                    }
                } else {
                    for (std::size_t bi = 0; bi < B; ++bi) {
                        const T* gr = self.g.data() + (bi * C + c) * L;
                        T* gxr = xn->g.data() + (bi * C + c) * L;
                        for (std::size_t t = 0; t < L; ++t)
                            gxr[t] += static_cast<T>(gm * inv * gr[t]);
                    }
                }
            }
        });
}

}  // namespace rffsb::nn
