#pragma once
// Central finite-difference verification for reverse-mode gradients.  Builders
// construct a scalar loss from leaf tensors; the checker perturbs every leaf
// element at f64 and compares (f(x+h)-f(x-h))/2h against the accumulated
// adjoint.

#include <functional>

#include "rffsb/rng.hpp"
#include "rffsb/tensor.hpp"

namespace rffsb::nn {

struct GradCheckResult {
    double max_err = 0.0;     // |fd - analytic| / max(1, |fd|, |analytic|)
    std::size_t n_checked = 0;
};

// build: takes the leaf tensors (requires_grad already set) and returns a
// scalar tensor.  Called 1 + 2*total_elements times; must be a pure function
// of the leaf values.
inline GradCheckResult gradcheck(
    const std::vector<Shape>& shapes,
    const std::function<Tensor<double>(std::vector<Tensor<double>>&)>& build,
    Rng& rng, double h = 1e-6) {
    std::vector<std::vector<double>> base;
    for (const auto& s : shapes) {
        std::vector<double> v(shape_numel(s));
        for (auto& x : v) x = rng.gauss();
        base.push_back(std::move(v));
    }

    auto make_leaves = [&]() {
        std::vector<Tensor<double>> leaves;
        for (std::size_t i = 0; i < shapes.size(); ++i)
            leaves.push_back(Tensor<double>::from(shapes[i], base[i], true));
        return leaves;
    };

    auto leaves = make_leaves();
    auto loss = build(leaves);
    if (loss.numel() != 1)
        throw ShapeError("gradcheck: loss must be scalar");
    loss.backward();
    std::vector<std::vector<double>> analytic;
    for (auto& l : leaves)
        analytic.push_back(l.grad().empty() ? std::vector<double>(l.numel(), 0.0)
                                            : l.grad());

    auto eval_at = [&]() {
        auto ls = make_leaves();
        return build(ls).values()[0];
    };

    GradCheckResult res;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        for (std::size_t k = 0; k < base[i].size(); ++k) {
            const double keep = base[i][k];
            base[i][k] = keep + h;
            const double fp = eval_at();
            base[i][k] = keep - h;
            const double fm = eval_at();
            base[i][k] = keep;
            const double fd = (fp - fm) / (2.0 * h);
            const double an = analytic[i][k];
            const double err = std::abs(fd - an) /
                               std::max({1.0, std::abs(fd), std::abs(an)});
            res.max_err = std::max(res.max_err, err);
            res.n_checked++;
        }
    }
    return res;
}

}  // namespace rffsb::nn
