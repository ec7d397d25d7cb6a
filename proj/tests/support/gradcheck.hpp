#pragma once

// Central finite-difference checks for the 64-bit layers. The scalar probed
// is L = sum(w * y) for a fixed random w, so d L / d y = w.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "infratl/nn/model.hpp"

namespace infratl::gradcheck {

using nn::Tensor;

inline constexpr double kFdStep = 1e-5;
// Relative errors are taken against max(|analytic|, |numeric|, kGradFloor) so
// that entries which are zero up to round-off do not dominate.
inline constexpr double kGradFloor = 1e-6;

inline double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kGradFloor});
}

inline Tensor<double> random_tensor(nn::Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<double> t(std::move(s));
    for (auto& v : t.data) v = uniform(rng, lo, hi);
    return t;
}

inline double dot(const Tensor<double>& a, const Tensor<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

inline constexpr double kGradTolerance = 1e-4;

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t kinks = 0;  // coordinates whose +-h step crossed a relu / max-pool switch

    void merge(const GradCheck& o) {
        max_rel_error = std::max(max_rel_error, o.max_rel_error);
        checked += o.checked;
        kinks += o.kinks;
    }
};

/// Compares analytic values against central differences of loss() with
/// respect to each coordinate. A failing coordinate whose forward and
/// backward one-sided slopes differ by at least the central-vs-analytic gap
/// sits on a non-differentiable point; it is counted in `kinks` instead of
/// the error. An analytic bug leaves the one-sided slopes in agreement.
inline GradCheck finite_difference(const std::function<double()>& loss, const std::vector<double*>& coords,
                                   const std::vector<double>& analytic) {
    GradCheck r;
    const double l0 = loss();
    for (std::size_t k = 0; k < coords.size(); ++k) {
        double& x = *coords[k];
        const double saved = x;
        x = saved + kFdStep;
        const double lp = loss();
        x = saved - kFdStep;
        const double lm = loss();
        x = saved;
        const double numeric = (lp - lm) / (2.0 * kFdStep);
        const double err = relative_error(analytic[k], numeric);
        ++r.checked;
        if (err >= kGradTolerance) {
            const double forward = (lp - l0) / kFdStep;
            const double backward = (l0 - lm) / kFdStep;
            if (std::abs(forward - backward) >= std::abs(numeric - analytic[k])) {
                ++r.kinks;
                continue;
            }
        }
        r.max_rel_error = std::max(r.max_rel_error, err);
    }
    return r;
}

/// Checks d(sum(w * layer(x))) with respect to x and every parameter.
/// `before_forward` runs before each forward pass (dropout reseeding).
inline GradCheck check_layer(nn::Layer<double>& layer, Tensor<double> x, Rng& rng,
                             const std::function<void()>& before_forward = {}) {
    auto run = [&] {
        if (before_forward) before_forward();
        return layer.forward(x, nn::Mode::train);
    };
    const Tensor<double> y = run();
    const Tensor<double> w = random_tensor(y.shape, rng);
    for (auto* p : layer.params()) p->grad.fill(0.0);
    const Tensor<double> dx = layer.backward(w);

    std::vector<double*> coords;
    std::vector<double> analytic;
    for (std::size_t i = 0; i < x.size(); ++i) {
        coords.push_back(&x.data[i]);
        analytic.push_back(dx.data[i]);
    }
    for (auto* p : layer.params()) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            coords.push_back(&p->value.data[i]);
            analytic.push_back(p->grad.data[i]);
        }
    }
    return finite_difference([&] { return dot(run(), w); }, coords, analytic);
}

/// Checks d mse(target, prediction) / d prediction.
inline GradCheck check_mse(Rng& rng, nn::Shape shape) {
    const Tensor<double> target = random_tensor(shape, rng);
    Tensor<double> pred = random_tensor(shape, rng);
    const Tensor<double> g = nn::mse_grad(target, pred);
    std::vector<double*> coords;
    for (auto& v : pred.data) coords.push_back(&v);
    return finite_difference([&] { return nn::mse(target, pred); }, coords, g.data);
}

/// Small end-to-end network used to check the composed backward pass.
inline nn::ModelConfig tiny_model_config() {
    nn::ModelConfig c;
    c.input_height = 10;
    c.input_width = 8;
    c.conv_channels = {2, 3};
    c.pools = {{5, 2}, {2, 4}};
    c.fc_widths = {6, 5, 4};
    c.dropout = {0.4, 0.3};
    return c;
}

/// Checks the full model's gradient with respect to the image, the frequency
/// and every parameter (training mode, dropout masks frozen per seed).
inline GradCheck check_model(std::uint64_t seed, std::size_t batch = 2) {
    nn::Model<double> model(tiny_model_config(), seed);
    Rng rng(seed);
    const auto& cfg = model.config();
    Tensor<double> x = random_tensor({batch, cfg.input_height, cfg.input_width, 1}, rng);
    std::vector<double> f(batch);
    for (auto& v : f) v = uniform(rng, -1.0, 1.0);
    auto run = [&] {
        model.seed_dropout(seed, 1);
        return model.forward(x, f, nn::Mode::train);
    };
    const Tensor<double> y = run();
    const Tensor<double> w = random_tensor(y.shape, rng);
    model.zero_grad();
    const Tensor<double> dx = model.backward(w);

    std::vector<double*> coords;
    std::vector<double> analytic;
    for (std::size_t i = 0; i < x.size(); ++i) {
        coords.push_back(&x.data[i]);
        analytic.push_back(dx.data[i]);
    }
    for (std::size_t i = 0; i < f.size(); ++i) {
        coords.push_back(&f[i]);
        analytic.push_back(model.freq_grad()[i]);
    }
    for (auto* p : model.params()) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            coords.push_back(&p->value.data[i]);
            analytic.push_back(p->grad.data[i]);
        }
    }
    return finite_difference([&] { return dot(run(), w); }, coords, analytic);
}

struct LayerReport {
    std::string name;
    GradCheck result;
};

/// One randomized check per layer kind for a seed, on batch 2 and 10 x 8
/// spatial tensors.
inline std::vector<LayerReport> check_all_layers(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<LayerReport> out;
    {
        nn::Conv2D<double> conv("conv", 3, 4);
        glorot_uniform(conv.kernel().value, 27, 36, rng);
        for (auto& b : conv.bias().value.data) b = uniform(rng, -0.5, 0.5);
        out.push_back({"conv2d", check_layer(conv, random_tensor({2, 10, 8, 3}, rng), rng)});
    }
    {
        nn::MaxPool2D<double> pool(5, 2);
        out.push_back({"maxpool", check_layer(pool, random_tensor({2, 10, 8, 3}, rng), rng)});
    }
    {
        // A batch of two normalizes every feature to +-1, so use four.
        nn::BatchNorm<double> bn("bn", 80);
        for (auto& g : bn.gamma().value.data) g = uniform(rng, 0.5, 1.5);
        for (auto& b : bn.beta().value.data) b = uniform(rng, -0.5, 0.5);
        out.push_back({"batchnorm", check_layer(bn, random_tensor({4, 80}, rng), rng)});
    }
    {
        nn::Dense<double> fc("fc", 80, 7);
        glorot_uniform(fc.weight().value, 80, 7, rng);
        for (auto& b : fc.bias().value.data) b = uniform(rng, -0.5, 0.5);
        out.push_back({"dense", check_layer(fc, random_tensor({2, 80}, rng), rng)});
    }
    for (auto kind : {nn::ActivationKind::tanh, nn::ActivationKind::relu, nn::ActivationKind::linear}) {
        nn::Activation<double> act(kind);
        out.push_back({nn::to_string(kind), check_layer(act, random_tensor({2, 10, 8, 3}, rng, -2.0, 2.0), rng)});
    }
    {
        nn::Dropout<double> drop(0.4);
        const std::uint64_t mask_seed = rng();
        out.push_back({"dropout", check_layer(drop, random_tensor({2, 80}, rng), rng,
                                              [&] { drop.set_rng(Rng(mask_seed)); })});
    }
    out.push_back({"mse", check_mse(rng, {2, 80})});
    out.push_back({"model", check_model(seed)});
    return out;
}

}  // namespace infratl::gradcheck
