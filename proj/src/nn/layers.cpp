#include "infratl/nn/layers.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Core>

namespace infratl::nn {

namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<Mat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const Mat<T>>;

void require_rank(const Shape& s, std::size_t rank, const char* who) {
    require(s.size() == rank, ErrorKind::shape,
            std::string(who) + " expects rank " + std::to_string(rank) + ", got " + shape_string(s));
}

}  // namespace

std::string shape_string(const Shape& s) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ')';
    return os.str();
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
    require(fan_in >= 1 && fan_out >= 1, ErrorKind::domain, "glorot fans must be >= 1");
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <typename T>
void glorot_uniform(Tensor<T>& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double b = glorot_bound(fan_in, fan_out);
    for (auto& v : t.data) v = static_cast<T>(uniform(rng, -b, b));
}

template <typename T>
T mse(const Tensor<T>& target, const Tensor<T>& prediction) {
    require(target.shape == prediction.shape, ErrorKind::shape,
            "mse shapes differ: " + shape_string(target.shape) + " vs " + shape_string(prediction.shape));
    double s = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double d = static_cast<double>(prediction.data[i]) - static_cast<double>(target.data[i]);
        s += d * d;
    }
    return static_cast<T>(s / static_cast<double>(target.size()));
}

template <typename T>
Tensor<T> mse_grad(const Tensor<T>& target, const Tensor<T>& prediction) {
    require(target.shape == prediction.shape, ErrorKind::shape, "mse shapes differ");
    Tensor<T> g(prediction.shape);
    const T scale = T(2) / static_cast<T>(target.size());
    for (std::size_t i = 0; i < g.size(); ++i) g.data[i] = scale * (prediction.data[i] - target.data[i]);
    return g;
}

// Adds the column sums of a row-major (rows, cols) block to out, row by row.
// Eigen's colwise().sum() on a Map picks its vector peel from the buffer
// address, which makes the rounding depend on where the allocator put it.
template <typename T>
void add_column_sums(const T* g, std::size_t rows, std::size_t cols, T* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const T* row = g + r * cols;
        for (std::size_t c = 0; c < cols; ++c) out[c] += row[c];
    }
}

// ---- Conv2D ---------------------------------------------------------------

template <typename T>
Conv2D<T>::Conv2D(std::string name, std::size_t in_channels, std::size_t out_channels,
                  std::size_t kernel)
    : cin_(in_channels),
      cout_(out_channels),
      k_(kernel),
      kernel_(name + ".kernel", {kernel, kernel, in_channels, out_channels}),
      bias_(name + ".bias", {out_channels}) {
    require(kernel % 2 == 1, ErrorKind::config, "same padding needs an odd kernel");
}

template <typename T>
Shape Conv2D<T>::output_shape(const Shape& input) const {
    require_rank(input, 3, "conv2d");
    require(input[2] == cin_, ErrorKind::shape,
            "conv2d expects " + std::to_string(cin_) + " channels, got " + shape_string(input));
    return {input[0], input[1], cout_};
}

// Row p = h * w + x of col holds the k x k x cin neighbourhood of pixel p in
// HWI order, zero outside the image.
template <typename T>
void Conv2D<T>::im2col(const T* image, std::size_t h, std::size_t w, T* col) const {
    const long half = static_cast<long>(k_ / 2);
    const std::size_t row_len = k_ * k_ * cin_;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            T* out = col + (y * w + x) * row_len;
            for (std::size_t ky = 0; ky < k_; ++ky) {
                const long yy = static_cast<long>(y) + static_cast<long>(ky) - half;
                for (std::size_t kx = 0; kx < k_; ++kx, out += cin_) {
                    const long xx = static_cast<long>(x) + static_cast<long>(kx) - half;
                    if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) {
                        std::fill(out, out + cin_, T(0));
                    } else {
                        const T* src = image + (static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)) * cin_;
                        std::copy(src, src + cin_, out);
                    }
                }
            }
        }
    }
}

template <typename T>
void Conv2D<T>::col2im(const T* col, std::size_t h, std::size_t w, T* image) const {
    const long half = static_cast<long>(k_ / 2);
    const std::size_t row_len = k_ * k_ * cin_;
    std::fill(image, image + h * w * cin_, T(0));
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const T* in = col + (y * w + x) * row_len;
            for (std::size_t ky = 0; ky < k_; ++ky) {
                const long yy = static_cast<long>(y) + static_cast<long>(ky) - half;
                for (std::size_t kx = 0; kx < k_; ++kx, in += cin_) {
                    const long xx = static_cast<long>(x) + static_cast<long>(kx) - half;
                    if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) continue;
                    T* dst = image + (static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)) * cin_;
                    for (std::size_t c = 0; c < cin_; ++c) dst[c] += in[c];
                }
            }
        }
    }
}

template <typename T>
Tensor<T> Conv2D<T>::forward(const Tensor<T>& x, Mode) {
    require_rank(x.shape, 4, "conv2d");
    output_shape({x.dim(1), x.dim(2), x.dim(3)});
    const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2);
    const std::size_t row_len = k_ * k_ * cin_;
    input_ = x;
    Tensor<T> y({n, h, w, cout_});
    std::vector<T> col(h * w * row_len);
    ConstMapMat<T> K(kernel_.value.ptr(), static_cast<long>(row_len), static_cast<long>(cout_));
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias_.value.ptr(), static_cast<long>(cout_));
    for (std::size_t s = 0; s < n; ++s) {
        im2col(x.ptr() + s * h * w * cin_, h, w, col.data());
        ConstMapMat<T> C(col.data(), static_cast<long>(h * w), static_cast<long>(row_len));
        MapMat<T> Y(y.ptr() + s * h * w * cout_, static_cast<long>(h * w), static_cast<long>(cout_));
        Y.noalias() = C * K;
        Y.rowwise() += b;
    }
    return y;
}

template <typename T>
Tensor<T> Conv2D<T>::backward(const Tensor<T>& grad_out) {
    const std::size_t n = input_.dim(0), h = input_.dim(1), w = input_.dim(2);
    require(grad_out.shape == Shape{n, h, w, cout_}, ErrorKind::shape, "conv2d backward shape");
    const std::size_t row_len = k_ * k_ * cin_;
    Tensor<T> dx(input_.shape);
    std::vector<T> col(h * w * row_len);
    ConstMapMat<T> K(kernel_.value.ptr(), static_cast<long>(row_len), static_cast<long>(cout_));
    MapMat<T> dK(kernel_.grad.ptr(), static_cast<long>(row_len), static_cast<long>(cout_));
    for (std::size_t s = 0; s < n; ++s) {
        ConstMapMat<T> G(grad_out.ptr() + s * h * w * cout_, static_cast<long>(h * w), static_cast<long>(cout_));
        im2col(input_.ptr() + s * h * w * cin_, h, w, col.data());
        MapMat<T> C(col.data(), static_cast<long>(h * w), static_cast<long>(row_len));
        dK.noalias() += C.transpose() * G;
        add_column_sums(G.data(), h * w, cout_, bias_.grad.ptr());
        C.noalias() = G * K.transpose();
        col2im(col.data(), h, w, dx.ptr() + s * h * w * cin_);
    }
    return dx;
}

// ---- MaxPool2D ------------------------------------------------------------

template <typename T>
Shape MaxPool2D<T>::output_shape(const Shape& input) const {
    require_rank(input, 3, "maxpool");
    require(input[0] % wh_ == 0 && input[1] % ww_ == 0, ErrorKind::shape,
            "maxpool window (" + std::to_string(wh_) + "," + std::to_string(ww_) +
                ") does not divide " + shape_string(input));
    return {input[0] / wh_, input[1] / ww_, input[2]};
}

template <typename T>
Tensor<T> MaxPool2D<T>::forward(const Tensor<T>& x, Mode) {
    require_rank(x.shape, 4, "maxpool");
    const Shape o = output_shape({x.dim(1), x.dim(2), x.dim(3)});
    const std::size_t n = x.dim(0), w = x.dim(2), c = x.dim(3);
    const std::size_t oh = o[0], ow = o[1];
    input_shape_ = x.shape;
    Tensor<T> y({n, oh, ow, c});
    argmax_.assign(y.size(), 0);
    std::size_t out = 0;
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t base = s * x.dim(1) * w * c;
        for (std::size_t i = 0; i < oh; ++i) {
            for (std::size_t j = 0; j < ow; ++j) {
                for (std::size_t ch = 0; ch < c; ++ch, ++out) {
                    std::size_t best = base + ((i * wh_) * w + j * ww_) * c + ch;
                    for (std::size_t a = 0; a < wh_; ++a) {
                        for (std::size_t b = 0; b < ww_; ++b) {
                            const std::size_t idx = base + ((i * wh_ + a) * w + j * ww_ + b) * c + ch;
                            if (x.data[idx] > x.data[best]) best = idx;
                        }
                    }
                    y.data[out] = x.data[best];
                    argmax_[out] = best;
                }
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> MaxPool2D<T>::backward(const Tensor<T>& grad_out) {
    require(grad_out.size() == argmax_.size(), ErrorKind::shape, "maxpool backward shape");
    Tensor<T> dx(input_shape_);
    for (std::size_t i = 0; i < argmax_.size(); ++i) dx.data[argmax_[i]] += grad_out.data[i];
    return dx;
}

// ---- Activation -----------------------------------------------------------

const char* to_string(ActivationKind a) {
    switch (a) {
        case ActivationKind::linear: return "linear";
        case ActivationKind::tanh: return "tanh";
        case ActivationKind::relu: return "relu";
    }
    return "?";
}

ActivationKind activation_from_string(const std::string& s) {
    if (s == "linear") return ActivationKind::linear;
    if (s == "tanh") return ActivationKind::tanh;
    if (s == "relu") return ActivationKind::relu;
    fail(ErrorKind::config, "unknown activation '" + s + "'");
}

template <typename T>
Tensor<T> Activation<T>::forward(const Tensor<T>& x, Mode) {
    Tensor<T> y = x;
    switch (act_) {
        case ActivationKind::linear:
            break;
        case ActivationKind::tanh:
            for (auto& v : y.data) v = std::tanh(v);
            cache_ = y;
            break;
        case ActivationKind::relu:
            cache_ = x;
            for (auto& v : y.data) v = v > T(0) ? v : T(0);
            break;
    }
    return y;
}

template <typename T>
Tensor<T> Activation<T>::backward(const Tensor<T>& grad_out) {
    Tensor<T> dx = grad_out;
    switch (act_) {
        case ActivationKind::linear:
            break;
        case ActivationKind::tanh:
            for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] *= T(1) - cache_.data[i] * cache_.data[i];
            break;
        case ActivationKind::relu:
            for (std::size_t i = 0; i < dx.size(); ++i) {
                if (!(cache_.data[i] > T(0))) dx.data[i] = T(0);
            }
            break;
    }
    return dx;
}

// ---- BatchNorm ------------------------------------------------------------

template <typename T>
BatchNorm<T>::BatchNorm(std::string name, std::size_t features, double epsilon, double momentum)
    : name_(std::move(name)),
      features_(features),
      epsilon_(epsilon),
      momentum_(momentum),
      gamma_(name_ + ".gamma", {features}),
      beta_(name_ + ".beta", {features}),
      running_mean_({features}, T(0)),
      running_var_({features}, T(1)) {
    gamma_.value.fill(T(1));
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> BatchNorm<T>::buffers() {
    return {{name_ + ".running_mean", &running_mean_}, {name_ + ".running_var", &running_var_}};
}

template <typename T>
Tensor<T> BatchNorm<T>::forward(const Tensor<T>& x, Mode mode) {
    require(x.rank() == 2 && x.dim(1) == features_, ErrorKind::shape,
            "batchnorm expects (batch, " + std::to_string(features_) + "), got " + shape_string(x.shape));
    const std::size_t n = x.dim(0), f = features_;
    Tensor<T> y(x.shape);
    xhat_ = Tensor<T>(x.shape);
    inv_std_.assign(f, T(0));
    last_train_ = mode == Mode::train;
    if (last_train_) {
        require(n >= 2, ErrorKind::precondition, "batchnorm needs a batch of at least 2 in training mode");
        for (std::size_t j = 0; j < f; ++j) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += x.data[i * f + j];
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = x.data[i * f + j] - mean;
                var += d * d;
            }
            var /= static_cast<double>(n);
            const double inv = 1.0 / std::sqrt(var + epsilon_);
            inv_std_[j] = static_cast<T>(inv);
            for (std::size_t i = 0; i < n; ++i) {
                const T xh = static_cast<T>((x.data[i * f + j] - mean) * inv);
                xhat_.data[i * f + j] = xh;
                y.data[i * f + j] = gamma_.value.data[j] * xh + beta_.value.data[j];
            }
            running_mean_.data[j] = static_cast<T>(momentum_ * running_mean_.data[j] + (1.0 - momentum_) * mean);
            running_var_.data[j] = static_cast<T>(momentum_ * running_var_.data[j] + (1.0 - momentum_) * var);
        }
    } else {
        for (std::size_t j = 0; j < f; ++j) {
            const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var_.data[j]) + epsilon_));
            inv_std_[j] = inv;
            for (std::size_t i = 0; i < n; ++i) {
                const T xh = (x.data[i * f + j] - running_mean_.data[j]) * inv;
                xhat_.data[i * f + j] = xh;
                y.data[i * f + j] = gamma_.value.data[j] * xh + beta_.value.data[j];
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> BatchNorm<T>::backward(const Tensor<T>& grad_out) {
    require(grad_out.shape == xhat_.shape, ErrorKind::shape, "batchnorm backward shape");
    const std::size_t n = xhat_.dim(0), f = features_;
    Tensor<T> dx(xhat_.shape);
    for (std::size_t j = 0; j < f; ++j) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum_dy += grad_out.data[i * f + j];
            sum_dy_xhat += static_cast<double>(grad_out.data[i * f + j]) * xhat_.data[i * f + j];
        }
        gamma_.grad.data[j] += static_cast<T>(sum_dy_xhat);
        beta_.grad.data[j] += static_cast<T>(sum_dy);
        const double g = gamma_.value.data[j];
        const double inv = inv_std_[j];
        if (last_train_) {
            const double nn = static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double v = g * inv / nn *
                                 (nn * grad_out.data[i * f + j] - sum_dy - xhat_.data[i * f + j] * sum_dy_xhat);
                dx.data[i * f + j] = static_cast<T>(v);
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) dx.data[i * f + j] = static_cast<T>(g * inv * grad_out.data[i * f + j]);
        }
    }
    return dx;
}

// ---- Dense ----------------------------------------------------------------

template <typename T>
Dense<T>::Dense(std::string name, std::size_t in, std::size_t out)
    : in_(in), out_(out), weight_(name + ".weight", {in, out}), bias_(name + ".bias", {out}) {}

template <typename T>
Shape Dense<T>::output_shape(const Shape& input) const {
    require(input.size() == 1 && input[0] == in_, ErrorKind::shape,
            "dense expects (" + std::to_string(in_) + "), got " + shape_string(input));
    return {out_};
}

template <typename T>
Tensor<T> Dense<T>::forward(const Tensor<T>& x, Mode mode) {
    require(x.rank() == 2 && x.dim(1) == in_, ErrorKind::shape,
            "dense expects (batch, " + std::to_string(in_) + "), got " + shape_string(x.shape));
    const long n = static_cast<long>(x.dim(0));
    input_ = x;
    Tensor<T> y({x.dim(0), out_});
    ConstMapMat<T> X(x.ptr(), n, static_cast<long>(in_));
    ConstMapMat<T> W(weight_.value.ptr(), static_cast<long>(in_), static_cast<long>(out_));
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias_.value.ptr(), static_cast<long>(out_));
    MapMat<T> Y(y.ptr(), n, static_cast<long>(out_));
    if (mode == Mode::infer) {
        // Row by row through fixed aligned buffers, so a sample's output does
        // not depend on the batch it arrived in.
        Eigen::Matrix<T, 1, Eigen::Dynamic> xr(in_), yr(out_);
        for (long i = 0; i < n; ++i) {
            xr = X.row(i);
            yr.noalias() = xr * W;
            Y.row(i) = yr + b;
        }
        return y;
    }
    Y.noalias() = X * W;
    Y.rowwise() += b;
    return y;
}

template <typename T>
Tensor<T> Dense<T>::backward(const Tensor<T>& grad_out) {
    const long n = static_cast<long>(input_.dim(0));
    require(grad_out.shape == Shape{input_.dim(0), out_}, ErrorKind::shape, "dense backward shape");
    ConstMapMat<T> X(input_.ptr(), n, static_cast<long>(in_));
    ConstMapMat<T> G(grad_out.ptr(), n, static_cast<long>(out_));
    ConstMapMat<T> W(weight_.value.ptr(), static_cast<long>(in_), static_cast<long>(out_));
    MapMat<T> dW(weight_.grad.ptr(), static_cast<long>(in_), static_cast<long>(out_));
    dW.noalias() += X.transpose() * G;
    add_column_sums(grad_out.ptr(), input_.dim(0), out_, bias_.grad.ptr());
    Tensor<T> dx(input_.shape);
    MapMat<T> dX(dx.ptr(), n, static_cast<long>(in_));
    dX.noalias() = G * W.transpose();
    return dx;
}

// ---- Dropout --------------------------------------------------------------

template <typename T>
Dropout<T>::Dropout(double rate) : rate_(rate) {
    require(rate >= 0.0 && rate < 1.0, ErrorKind::domain, "dropout rate must be in [0, 1)");
}

template <typename T>
Tensor<T> Dropout<T>::forward(const Tensor<T>& x, Mode mode) {
    masked_ = mode == Mode::train && rate_ > 0.0;
    if (!masked_) return x;
    const T keep = static_cast<T>(1.0 / (1.0 - rate_));
    mask_.resize(x.size());
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) {
        mask_[i] = uniform01(rng_) < rate_ ? T(0) : keep;
        y.data[i] = x.data[i] * mask_[i];
    }
    return y;
}

template <typename T>
Tensor<T> Dropout<T>::backward(const Tensor<T>& grad_out) {
    if (!masked_) return grad_out;
    require(grad_out.size() == mask_.size(), ErrorKind::shape, "dropout backward shape");
    Tensor<T> dx(grad_out.shape);
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] = grad_out.data[i] * mask_[i];
    return dx;
}

#define INFRATL_NN_INSTANTIATE(T)                                                        \
    template class Conv2D<T>;                                                            \
    template class MaxPool2D<T>;                                                         \
    template class Activation<T>;                                                        \
    template class BatchNorm<T>;                                                         \
    template class Dense<T>;                                                             \
    template class Dropout<T>;                                                           \
    template void glorot_uniform<T>(Tensor<T>&, std::size_t, std::size_t, Rng&);         \
    template T mse<T>(const Tensor<T>&, const Tensor<T>&);                               \
    template Tensor<T> mse_grad<T>(const Tensor<T>&, const Tensor<T>&);

INFRATL_NN_INSTANTIATE(float)
INFRATL_NN_INSTANTIATE(double)

#undef INFRATL_NN_INSTANTIATE

}  // namespace infratl::nn
