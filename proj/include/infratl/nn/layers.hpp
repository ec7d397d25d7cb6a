#pragma once

// Layers with hand-written backward passes. Every layer caches what its
// backward pass needs during forward(); backward() must follow the forward()
// it differentiates. Parameter gradients accumulate until zero_grad().

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "infratl/nn/tensor.hpp"
#include "infratl/rng.hpp"

namespace infratl::nn {

template <typename T>
class Layer {
public:
    virtual ~Layer() = default;

    virtual std::string kind() const = 0;
    /// Per-sample output shape for a per-sample input shape.
    virtual Shape output_shape(const Shape& input) const = 0;
    virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
    virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;

    virtual std::vector<Param<T>*> params() { return {}; }
    /// Non-trainable persistent tensors (batch-norm running statistics).
    virtual std::vector<std::pair<std::string, Tensor<T>*>> buffers() { return {}; }
};

/// Same-padded, stride-1 2-D cross-correlation on NHWC input. The kernel is
/// stored HWIO: (kh, kw, in_channels, out_channels).
template <typename T>
class Conv2D final : public Layer<T> {
public:
    Conv2D(std::string name, std::size_t in_channels, std::size_t out_channels,
           std::size_t kernel = 3);

    std::string kind() const override { return "conv2d"; }
    Shape output_shape(const Shape& input) const override;
    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    std::vector<Param<T>*> params() override { return {&kernel_, &bias_}; }

    Param<T>& kernel() { return kernel_; }
    Param<T>& bias() { return bias_; }

private:
    void im2col(const T* image, std::size_t h, std::size_t w, T* col) const;
    void col2im(const T* col, std::size_t h, std::size_t w, T* image) const;

    std::size_t cin_;
    std::size_t cout_;
    std::size_t k_;
    Param<T> kernel_;
    Param<T> bias_;
    Tensor<T> input_;
};

/// Non-overlapping max pooling (stride = window). Ties resolve to the first
/// element of the window in row-major order.
template <typename T>
class MaxPool2D final : public Layer<T> {
public:
    MaxPool2D(std::size_t window_h, std::size_t window_w) : wh_(window_h), ww_(window_w) {}

    std::string kind() const override { return "maxpool"; }
    Shape output_shape(const Shape& input) const override;
    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;

    std::pair<std::size_t, std::size_t> window() const { return {wh_, ww_}; }

private:
    std::size_t wh_;
    std::size_t ww_;
    Shape input_shape_;
    std::vector<std::size_t> argmax_;
};

enum class ActivationKind { linear, tanh, relu };

const char* to_string(ActivationKind a);
ActivationKind activation_from_string(const std::string& s);

template <typename T>
class Activation final : public Layer<T> {
public:
    explicit Activation(ActivationKind a) : act_(a) {}

    std::string kind() const override { return to_string(act_); }
    Shape output_shape(const Shape& input) const override { return input; }
    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;

private:
    ActivationKind act_;
    Tensor<T> cache_;  // tanh: output, relu: input
};

/// Batch normalization over the feature axis of a (batch, features) input.
template <typename T>
class BatchNorm final : public Layer<T> {
public:
    BatchNorm(std::string name, std::size_t features, double epsilon = 1e-3,
              double momentum = 0.99);

    std::string kind() const override { return "batchnorm"; }
    Shape output_shape(const Shape& input) const override { return input; }
    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    std::vector<Param<T>*> params() override { return {&gamma_, &beta_}; }
    std::vector<std::pair<std::string, Tensor<T>*>> buffers() override;

    Param<T>& gamma() { return gamma_; }
    Param<T>& beta() { return beta_; }
    Tensor<T>& running_mean() { return running_mean_; }
    Tensor<T>& running_var() { return running_var_; }

private:
    std::string name_;
    std::size_t features_;
    double epsilon_;
    double momentum_;
    Param<T> gamma_;
    Param<T> beta_;
    Tensor<T> running_mean_;
    Tensor<T> running_var_;
    Tensor<T> xhat_;
    std::vector<T> inv_std_;
    bool last_train_ = false;
};

/// y = x W + b on a (batch, in) input; W is (in, out).
template <typename T>
class Dense final : public Layer<T> {
public:
    Dense(std::string name, std::size_t in, std::size_t out);

    std::string kind() const override { return "dense"; }
    Shape output_shape(const Shape& input) const override;
    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }

    Param<T>& weight() { return weight_; }
    Param<T>& bias() { return bias_; }

private:
    std::size_t in_;
    std::size_t out_;
    Param<T> weight_;
    Param<T> bias_;
    Tensor<T> input_;
};

/// Inverted dropout. Identity in inference mode or when rate == 0.
template <typename T>
class Dropout final : public Layer<T> {
public:
    explicit Dropout(double rate);

    std::string kind() const override { return "dropout"; }
    Shape output_shape(const Shape& input) const override { return input; }
    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;

    double rate() const { return rate_; }
    void set_rng(Rng rng) { rng_ = std::move(rng); }

private:
    double rate_;
    Rng rng_{0};
    std::vector<T> mask_;  // 0 or 1 / (1 - rate)
    bool masked_ = false;
};

/// Fills t with U(-b, b), b = sqrt(6 / (fan_in + fan_out)).
template <typename T>
void glorot_uniform(Tensor<T>& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// Glorot bound for the given fans.
double glorot_bound(std::size_t fan_in, std::size_t fan_out);

/// Mean squared error over all elements.
template <typename T>
T mse(const Tensor<T>& target, const Tensor<T>& prediction);

/// d mse / d prediction = 2 (prediction - target) / N.
template <typename T>
Tensor<T> mse_grad(const Tensor<T>& target, const Tensor<T>& prediction);

}  // namespace infratl::nn
